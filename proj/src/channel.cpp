#include "twrc/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace twrc {

namespace {

using nlohmann::json;

void check_slice_mass(const std::vector<double>& cond, std::size_t slice,
                      std::size_t width, const std::string& what) {
    double total = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
        const double v = cond[slice * width + i];
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidPmf(what + ": negative or non-finite entry");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > kMassTol) {
        throw InvalidPmf(what + " sums to " + std::to_string(total));
    }
}

bool is_prime(std::size_t q) {
    if (q < 2) return false;
    for (std::size_t d = 2; d * d <= q; ++d) {
        if (q % d == 0) return false;
    }
    return true;
}

DownlinkChannel noiseless_broadcast(std::size_t size) {
    std::vector<double> p(size * size * size, 0.0);
    for (std::size_t s = 0; s < size; ++s) {
        p[(s * size + s) * size + s] = 1.0;
    }
    return DownlinkChannel(size, size, size, std::move(p));
}

DownlinkChannel orthogonal_downlink() {
    // x0 = (a, b) packed as 2a + b; y1 = a, y2 = b.
    std::vector<double> p(4 * 2 * 2, 0.0);
    for (std::size_t x0 = 0; x0 < 4; ++x0) {
        const std::size_t a = x0 >> 1;
        const std::size_t b = x0 & 1;
        p[(x0 * 2 + a) * 2 + b] = 1.0;
    }
    return DownlinkChannel(4, 2, 2, std::move(p));
}

DownlinkChannel bsc_broadcast(double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw ParseError("bsc-broadcast: crossover must be in [0,1]");
    }
    std::vector<double> p(2 * 2 * 2);
    for (std::size_t x0 = 0; x0 < 2; ++x0) {
        for (std::size_t y1 = 0; y1 < 2; ++y1) {
            for (std::size_t y2 = 0; y2 < 2; ++y2) {
                const double l1 = y1 == x0 ? 1.0 - eps : eps;
                const double l2 = y2 == x0 ? 1.0 - eps : eps;
                p[(x0 * 2 + y1) * 2 + y2] = l1 * l2;
            }
        }
    }
    return DownlinkChannel(2, 2, 2, std::move(p));
}

UplinkTable binary_table(std::size_t f00, std::size_t f01, std::size_t f10,
                         std::size_t f11, std::size_t y0_size) {
    return UplinkTable(2, 2, y0_size, {f00, f01, f10, f11});
}

}  // namespace

UplinkTable::UplinkTable(std::size_t x1, std::size_t x2, std::size_t y0,
                         std::vector<std::size_t> entries)
    : x1_size(x1), x2_size(x2), y0_size(y0), table(std::move(entries)) {
    if (x1_size == 0 || x2_size == 0 || y0_size == 0) {
        throw SizeMismatch("UplinkTable: zero-sized alphabet");
    }
    if (table.size() != x1_size * x2_size) {
        throw SizeMismatch("UplinkTable: table length != |X1|*|X2|");
    }
    for (std::size_t a = 0; a < x1_size; ++a) {
        for (std::size_t b = 0; b < x2_size; ++b) {
            if (table[a * x2_size + b] >= y0_size) {
                throw SizeMismatch("UplinkTable: entry at (x1=" + std::to_string(a) +
                                   ",x2=" + std::to_string(b) + ") out of range");
            }
        }
    }
}

std::vector<bool> UplinkTable::reachable_outputs() const {
    std::vector<bool> seen(y0_size, false);
    for (std::size_t v : table) seen[v] = true;
    return seen;
}

bool UplinkTable::has_unreachable_outputs() const {
    const auto seen = reachable_outputs();
    for (bool s : seen) {
        if (!s) return true;
    }
    return false;
}

StochasticUplink::StochasticUplink(std::size_t x1, std::size_t x2, std::size_t y0,
                                   std::vector<double> p)
    : x1_size(x1), x2_size(x2), y0_size(y0), cond(std::move(p)) {
    if (x1_size == 0 || x2_size == 0 || y0_size == 0) {
        throw SizeMismatch("StochasticUplink: zero-sized alphabet");
    }
    if (cond.size() != x1_size * x2_size * y0_size) {
        throw SizeMismatch("StochasticUplink: data length != |X1|*|X2|*|Y0|");
    }
    for (std::size_t s = 0; s < x1_size * x2_size; ++s) {
        check_slice_mass(cond, s, y0_size,
                         "StochasticUplink slice (x1=" + std::to_string(s / x2_size) +
                             ",x2=" + std::to_string(s % x2_size) + ")");
    }
}

DownlinkChannel::DownlinkChannel(std::size_t x0, std::size_t y1, std::size_t y2,
                                 std::vector<double> p)
    : x0_size(x0), y1_size(y1), y2_size(y2), cond(std::move(p)) {
    if (x0_size == 0 || y1_size == 0 || y2_size == 0) {
        throw SizeMismatch("DownlinkChannel: zero-sized alphabet");
    }
    if (cond.size() != x0_size * y1_size * y2_size) {
        throw SizeMismatch("DownlinkChannel: data length != |X0|*|Y1|*|Y2|");
    }
    for (std::size_t s = 0; s < x0_size; ++s) {
        check_slice_mass(cond, s, y1_size * y2_size,
                         "DownlinkChannel slice x0=" + std::to_string(s));
    }
}

std::vector<double> DownlinkChannel::leg1() const {
    std::vector<double> m(x0_size * y1_size, 0.0);
    for (std::size_t x0 = 0; x0 < x0_size; ++x0) {
        for (std::size_t y1 = 0; y1 < y1_size; ++y1) {
            for (std::size_t y2 = 0; y2 < y2_size; ++y2) {
                m[x0 * y1_size + y1] += at(x0, y1, y2);
            }
        }
    }
    return m;
}

std::vector<double> DownlinkChannel::leg2() const {
    std::vector<double> m(x0_size * y2_size, 0.0);
    for (std::size_t x0 = 0; x0 < x0_size; ++x0) {
        for (std::size_t y1 = 0; y1 < y1_size; ++y1) {
            for (std::size_t y2 = 0; y2 < y2_size; ++y2) {
                m[x0 * y2_size + y2] += at(x0, y1, y2);
            }
        }
    }
    return m;
}

std::size_t ChannelSpec::x1_size() const {
    return std::visit([](const auto& u) { return u.x1_size; }, uplink);
}

std::size_t ChannelSpec::x2_size() const {
    return std::visit([](const auto& u) { return u.x2_size; }, uplink);
}

std::size_t ChannelSpec::y0_size() const {
    return std::visit([](const auto& u) { return u.y0_size; }, uplink);
}

bool ChannelSpec::deterministic_uplink() const {
    if (std::holds_alternative<UplinkTable>(uplink)) return true;
    return is_deterministic(std::get<StochasticUplink>(uplink));
}

UplinkTable ChannelSpec::uplink_table() const {
    if (const auto* t = std::get_if<UplinkTable>(&uplink)) return *t;
    return to_table(std::get<StochasticUplink>(uplink));
}

StochasticUplink lift(const UplinkTable& u) {
    std::vector<double> p(u.x1_size * u.x2_size * u.y0_size, 0.0);
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        for (std::size_t b = 0; b < u.x2_size; ++b) {
            p[(a * u.x2_size + b) * u.y0_size + u(a, b)] = 1.0;
        }
    }
    return StochasticUplink(u.x1_size, u.x2_size, u.y0_size, std::move(p));
}

bool is_deterministic(const StochasticUplink& u) {
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        for (std::size_t b = 0; b < u.x2_size; ++b) {
            for (std::size_t y = 0; y < u.y0_size; ++y) {
                const double v = u.at(a, b, y);
                if (v > kMassTol && v < 1.0 - kMassTol) return false;
            }
        }
    }
    return true;
}

UplinkTable to_table(const StochasticUplink& u) {
    std::vector<std::size_t> table(u.x1_size * u.x2_size);
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        for (std::size_t b = 0; b < u.x2_size; ++b) {
            std::size_t hits = 0;
            std::size_t value = 0;
            for (std::size_t y = 0; y < u.y0_size; ++y) {
                if (u.at(a, b, y) > kMassTol) {
                    ++hits;
                    value = y;
                }
            }
            if (hits != 1) {
                throw NotDeterministic("uplink slice (x1=" + std::to_string(a) +
                                       ",x2=" + std::to_string(b) +
                                       ") is not a point mass");
            }
            table[a * u.x2_size + b] = value;
        }
    }
    return UplinkTable(u.x1_size, u.x2_size, u.y0_size, std::move(table));
}

JointPmf uplink_joint(const Pmf& p1, const Pmf& p2, const UplinkTable& u) {
    if (p1.size() != u.x1_size || p2.size() != u.x2_size) {
        throw SizeMismatch("uplink_joint: pmf sizes do not match the table");
    }
    std::vector<double> probs(u.x1_size * u.x2_size * u.y0_size, 0.0);
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        for (std::size_t b = 0; b < u.x2_size; ++b) {
            probs[(a * u.x2_size + b) * u.y0_size + u(a, b)] = p1[a] * p2[b];
        }
    }
    return JointPmf({u.x1_size, u.x2_size, u.y0_size}, std::move(probs));
}

JointPmf uplink_joint(const Pmf& p1, const Pmf& p2, const StochasticUplink& u) {
    if (p1.size() != u.x1_size || p2.size() != u.x2_size) {
        throw SizeMismatch("uplink_joint: pmf sizes do not match the uplink");
    }
    std::vector<double> probs(u.x1_size * u.x2_size * u.y0_size);
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        for (std::size_t b = 0; b < u.x2_size; ++b) {
            for (std::size_t y = 0; y < u.y0_size; ++y) {
                probs[(a * u.x2_size + b) * u.y0_size + y] = p1[a] * p2[b] * u.at(a, b, y);
            }
        }
    }
    return JointPmf({u.x1_size, u.x2_size, u.y0_size}, std::move(probs));
}

std::pair<JointPmf, JointPmf> downlink_joints(const Pmf& p0, const DownlinkChannel& d) {
    if (p0.size() != d.x0_size) {
        throw SizeMismatch("downlink_joints: p0 size does not match the downlink");
    }
    const auto l1 = d.leg1();
    const auto l2 = d.leg2();
    std::vector<double> j1(d.x0_size * d.y1_size);
    std::vector<double> j2(d.x0_size * d.y2_size);
    for (std::size_t x0 = 0; x0 < d.x0_size; ++x0) {
        for (std::size_t y = 0; y < d.y1_size; ++y) {
            j1[x0 * d.y1_size + y] = p0[x0] * l1[x0 * d.y1_size + y];
        }
        for (std::size_t y = 0; y < d.y2_size; ++y) {
            j2[x0 * d.y2_size + y] = p0[x0] * l2[x0 * d.y2_size + y];
        }
    }
    return {JointPmf({d.x0_size, d.y1_size}, std::move(j1)),
            JointPmf({d.x0_size, d.y2_size}, std::move(j2))};
}

namespace {

std::size_t require_size(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key)) throw ParseError(ctx + ": missing \"" + key + "\"");
    if (!j[key].is_number_unsigned() || j[key].get<std::uint64_t>() == 0) {
        throw ParseError(ctx + ": \"" + key + "\" must be a positive integer");
    }
    return j[key].get<std::size_t>();
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& ctx) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ParseError(ctx + ": unknown key \"" + item.key() + "\"");
    }
}

std::vector<double> parse_cond3(const json& arr, std::size_t d0, std::size_t d1,
                                std::size_t d2, const std::string& ctx) {
    if (!arr.is_array() || arr.size() != d0) {
        throw ParseError(ctx + ": expected " + std::to_string(d0) + " outer rows");
    }
    std::vector<double> flat;
    flat.reserve(d0 * d1 * d2);
    for (std::size_t i = 0; i < d0; ++i) {
        const auto& mid = arr[i];
        if (!mid.is_array() || mid.size() != d1) {
            throw ParseError(ctx + ": row " + std::to_string(i) + " has wrong length");
        }
        for (std::size_t j = 0; j < d1; ++j) {
            const auto& inner = mid[j];
            if (!inner.is_array() || inner.size() != d2) {
                throw ParseError(ctx + ": cell (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") has wrong length");
            }
            for (std::size_t k = 0; k < d2; ++k) {
                if (!inner[k].is_number()) {
                    throw ParseError(ctx + ": non-numeric probability");
                }
                flat.push_back(inner[k].get<double>());
            }
        }
    }
    return flat;
}

Uplink parse_uplink(const json& j) {
    if (!j.is_object()) throw ParseError("uplink: expected an object");
    if (!j.contains("type") || !j["type"].is_string()) {
        throw ParseError("uplink: missing \"type\"");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "deterministic") {
        reject_unknown_keys(j, {"type", "x1_size", "x2_size", "y0_size", "table"},
                            "uplink");
        const std::size_t x1 = require_size(j, "x1_size", "uplink");
        const std::size_t x2 = require_size(j, "x2_size", "uplink");
        const std::size_t y0 = require_size(j, "y0_size", "uplink");
        if (!j.contains("table")) throw ParseError("uplink: missing \"table\"");
        const auto& rows = j["table"];
        if (!rows.is_array() || rows.size() != x1) {
            throw ParseError("uplink table: expected " + std::to_string(x1) + " rows");
        }
        std::vector<std::size_t> entries;
        entries.reserve(x1 * x2);
        for (std::size_t a = 0; a < x1; ++a) {
            if (!rows[a].is_array() || rows[a].size() != x2) {
                throw ParseError("uplink table row " + std::to_string(a) +
                                 " has wrong length");
            }
            for (std::size_t b = 0; b < x2; ++b) {
                if (!rows[a][b].is_number_unsigned()) {
                    throw ParseError("uplink table cell (x1=" + std::to_string(a) +
                                     ",x2=" + std::to_string(b) +
                                     ") must be a symbol index");
                }
                const std::size_t v = rows[a][b].get<std::size_t>();
                if (v >= y0) {
                    throw ParseError("uplink table cell (x1=" + std::to_string(a) +
                                     ",x2=" + std::to_string(b) + ") value " +
                                     std::to_string(v) + " out of range [0," +
                                     std::to_string(y0) + ")");
                }
                entries.push_back(v);
            }
        }
        return UplinkTable(x1, x2, y0, std::move(entries));
    }
    if (type == "stochastic") {
        reject_unknown_keys(j, {"type", "x1_size", "x2_size", "y0_size", "p"}, "uplink");
        const std::size_t x1 = require_size(j, "x1_size", "uplink");
        const std::size_t x2 = require_size(j, "x2_size", "uplink");
        const std::size_t y0 = require_size(j, "y0_size", "uplink");
        if (!j.contains("p")) throw ParseError("uplink: missing \"p\"");
        auto flat = parse_cond3(j["p"], x1, x2, y0, "uplink p");
        try {
            return StochasticUplink(x1, x2, y0, std::move(flat));
        } catch (const InvalidPmf& e) {
            throw ParseError(e.what());
        }
    }
    throw ParseError("uplink: unknown type \"" + type + "\"");
}

DownlinkChannel parse_downlink(const json& j) {
    if (!j.is_object()) throw ParseError("downlink: expected an object");
    reject_unknown_keys(j, {"x0_size", "y1_size", "y2_size", "p"}, "downlink");
    const std::size_t x0 = require_size(j, "x0_size", "downlink");
    const std::size_t y1 = require_size(j, "y1_size", "downlink");
    const std::size_t y2 = require_size(j, "y2_size", "downlink");
    if (!j.contains("p")) throw ParseError("downlink: missing \"p\"");
    auto flat = parse_cond3(j["p"], x0, y1, y2, "downlink p");
    try {
        return DownlinkChannel(x0, y1, y2, std::move(flat));
    } catch (const InvalidPmf& e) {
        throw ParseError(e.what());
    }
}

}  // namespace

ChannelSpec parse_channel_spec(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("channel spec: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("channel spec: expected a JSON object");
    reject_unknown_keys(doc, {"name", "uplink", "downlink"}, "channel spec");
    if (!doc.contains("name") || !doc["name"].is_string()) {
        throw ParseError("channel spec: missing \"name\"");
    }
    if (!doc.contains("uplink")) throw ParseError("channel spec: missing \"uplink\"");
    if (!doc.contains("downlink")) throw ParseError("channel spec: missing \"downlink\"");
    // parsed into locals so a downlink failure cannot strand the uplink
    Uplink uplink = parse_uplink(doc["uplink"]);
    DownlinkChannel downlink = parse_downlink(doc["downlink"]);
    return ChannelSpec{doc["name"].get<std::string>(), std::move(uplink),
                       std::move(downlink)};
}

std::string emit_channel_spec(const ChannelSpec& spec) {
    json doc;
    doc["name"] = spec.name;
    if (const auto* t = std::get_if<UplinkTable>(&spec.uplink)) {
        json rows = json::array();
        for (std::size_t a = 0; a < t->x1_size; ++a) {
            json row = json::array();
            for (std::size_t b = 0; b < t->x2_size; ++b) row.push_back((*t)(a, b));
            rows.push_back(std::move(row));
        }
        doc["uplink"] = {{"type", "deterministic"},
                         {"x1_size", t->x1_size},
                         {"x2_size", t->x2_size},
                         {"y0_size", t->y0_size},
                         {"table", std::move(rows)}};
    } else {
        const auto& s = std::get<StochasticUplink>(spec.uplink);
        json outer = json::array();
        for (std::size_t a = 0; a < s.x1_size; ++a) {
            json mid = json::array();
            for (std::size_t b = 0; b < s.x2_size; ++b) {
                json inner = json::array();
                for (std::size_t y = 0; y < s.y0_size; ++y) inner.push_back(s.at(a, b, y));
                mid.push_back(std::move(inner));
            }
            outer.push_back(std::move(mid));
        }
        doc["uplink"] = {{"type", "stochastic"},
                         {"x1_size", s.x1_size},
                         {"x2_size", s.x2_size},
                         {"y0_size", s.y0_size},
                         {"p", std::move(outer)}};
    }
    const auto& d = spec.downlink;
    json outer = json::array();
    for (std::size_t x0 = 0; x0 < d.x0_size; ++x0) {
        json mid = json::array();
        for (std::size_t y1 = 0; y1 < d.y1_size; ++y1) {
            json inner = json::array();
            for (std::size_t y2 = 0; y2 < d.y2_size; ++y2) {
                inner.push_back(d.at(x0, y1, y2));
            }
            mid.push_back(std::move(inner));
        }
        outer.push_back(std::move(mid));
    }
    doc["downlink"] = {{"x0_size", d.x0_size},
                       {"y1_size", d.y1_size},
                       {"y2_size", d.y2_size},
                       {"p", std::move(outer)}};
    return doc.dump(2) + "\n";
}

ChannelSpec builtin_channel(const std::string& name) {
    if (name == "xor") {
        return ChannelSpec{"xor", binary_table(0, 1, 1, 0, 2), noiseless_broadcast(2)};
    }
    if (name == "multiplier" || name == "noiseless-orthogonal") {
        // Binary multiplier uplink feeding one noiseless bit per user.
        return ChannelSpec{name, binary_table(0, 0, 0, 1, 2), orthogonal_downlink()};
    }
    if (name.rfind("ff-adder-", 0) == 0) {
        const std::string param = name.substr(9);
        std::size_t q = 0;
        try {
            q = static_cast<std::size_t>(std::stoul(param));
        } catch (...) {
            throw ParseError("builtin " + name + ": bad field size");
        }
        if (!is_prime(q)) {
            throw ParseError("builtin " + name + ": field size must be prime");
        }
        std::vector<std::size_t> entries(q * q);
        for (std::size_t a = 0; a < q; ++a) {
            for (std::size_t b = 0; b < q; ++b) entries[a * q + b] = (a + b) % q;
        }
        return ChannelSpec{name, UplinkTable(q, q, q, std::move(entries)),
                           noiseless_broadcast(q)};
    }
    if (name.rfind("bsc-broadcast(", 0) == 0 && name.back() == ')') {
        const std::string param = name.substr(14, name.size() - 15);
        double eps = 0.0;
        try {
            eps = std::stod(param);
        } catch (...) {
            throw ParseError("builtin " + name + ": bad crossover probability");
        }
        // built before the aggregate so a validation throw cannot strand
        // half-initialized members
        DownlinkChannel down = bsc_broadcast(eps);
        return ChannelSpec{name, binary_table(0, 1, 1, 0, 2), std::move(down)};
    }
    throw ParseError("unknown builtin channel \"" + name + "\"");
}

ChannelSpec load_channel(const std::string& path_or_builtin) {
    if (path_or_builtin.rfind("builtin:", 0) == 0) {
        return builtin_channel(path_or_builtin.substr(8));
    }
    std::ifstream in(path_or_builtin, std::ios::binary);
    if (!in) throw ParseError("cannot open channel spec \"" + path_or_builtin + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_channel_spec(buf.str());
}

}  // namespace twrc
