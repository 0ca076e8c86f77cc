#include "twrc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace twrc {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string pmf_text(const Pmf& p) {
    std::string out = "[";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) out += ' ';
        out += fmt(p[i]);
    }
    out += ']';
    return out;
}

std::string cert_text(const Certificate& cert) {
    std::string out;
    const auto add = [&](const char* name, const std::optional<Pmf>& p) {
        if (!p) return;
        if (!out.empty()) out += ';';
        out += name;
        out += '=';
        out += pmf_text(*p);
    };
    add("p1", cert.p1);
    add("p2", cert.p2);
    add("p0", cert.p0);
    return out;
}

Pmf pmf_from_json(const json& arr, const std::string& ctx) {
    if (!arr.is_array() || arr.empty()) {
        throw ParseError(ctx + ": expected a non-empty probability array");
    }
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& item : arr) {
        if (!item.is_number()) throw ParseError(ctx + ": non-numeric probability");
        v.push_back(item.get<double>());
    }
    try {
        return Pmf(std::move(v));
    } catch (const InvalidPmf& e) {
        throw ParseError(ctx + ": " + e.what());
    }
}

std::vector<Pmf> pmf_rows_from_json(const json& arr, const std::string& ctx) {
    if (!arr.is_array() || arr.empty()) {
        throw ParseError(ctx + ": expected an array of probability rows");
    }
    std::vector<Pmf> rows;
    rows.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        rows.push_back(pmf_from_json(arr[i], ctx + " row " + std::to_string(i)));
    }
    return rows;
}

}  // namespace

std::string region_csv(const RegionPolyline& region, std::size_t resolution) {
    std::string out = "kind,resolution\n";
    out += to_string(region.kind());
    out += ',';
    out += std::to_string(resolution);
    out += "\nr1,r2,cert\n";
    for (const auto& v : region.vertices()) {
        out += fmt(v.point.r1);
        out += ',';
        out += fmt(v.point.r2);
        out += ',';
        out += cert_text(v.cert);
        out += '\n';
    }
    return out;
}

std::vector<RatePoint> parse_region_csv_points(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<RatePoint> points;
    bool in_rows = false;
    while (std::getline(in, line)) {
        if (!in_rows) {
            if (line.rfind("r1,r2,", 0) == 0) in_rows = true;
            continue;
        }
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw ParseError("region csv: malformed row \"" + line + "\"");
        }
        try {
            points.push_back({std::stod(line.substr(0, c1)),
                              std::stod(line.substr(c1 + 1, c2 - c1 - 1))});
        } catch (...) {
            throw ParseError("region csv: non-numeric rate in \"" + line + "\"");
        }
    }
    return points;
}

std::string sim_csv_header() {
    return "n,R1,R2,err_w0_u1,err_w0_u2,err_msg_u1,err_msg_u2,err_total,ci_lo,ci_hi,m_mean\n";
}

std::string sim_csv_row(const SimReport& r) {
    std::string out;
    out += std::to_string(r.n);
    out += ',' + fmt(r.rate1);
    out += ',' + fmt(r.rate2);
    out += ',' + fmt(r.w0_user1.estimate);
    out += ',' + fmt(r.w0_user2.estimate);
    out += ',' + fmt(r.msg_user1.estimate);
    out += ',' + fmt(r.msg_user2.estimate);
    out += ',' + fmt(r.total.estimate);
    out += ',' + fmt(r.total.ci_lo);
    out += ',' + fmt(r.total.ci_hi);
    out += ',';
    out += r.m_available ? fmt(r.m_mean) : std::string("nan");
    out += '\n';
    return out;
}

namespace {

json estimate_json(const ErrorEstimate& e) {
    return {{"estimate", e.estimate}, {"ci_lo", e.ci_lo},   {"ci_hi", e.ci_hi},
            {"errors", e.errors},     {"trials", e.trials}};
}

}  // namespace

std::string sim_reports_json(const std::vector<SimReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        json item = {
            {"n", r.n},
            {"rate1", r.rate1},
            {"rate2", r.rate2},
            {"rate1_simulated", r.rate1_simulated},
            {"rate2_simulated", r.rate2_simulated},
            {"rate1_effective", r.rate1_effective},
            {"rate2_effective", r.rate2_effective},
            {"num_blocks", r.num_blocks},
            {"epsilon", r.epsilon},
            {"seed", r.seed},
            {"backend", r.backend},
            {"generator", r.generator_version},
            {"err_w0_user1", estimate_json(r.w0_user1)},
            {"err_w0_user2", estimate_json(r.w0_user2)},
            {"err_msg_user1", estimate_json(r.msg_user1)},
            {"err_msg_user2", estimate_json(r.msg_user2)},
            {"err_total", estimate_json(r.total)},
            {"collision_bias_bound", r.collision_bias_bound},
            {"wall_seconds", r.wall_seconds},
        };
        if (r.m_available) {
            item["m_mean"] = r.m_mean;
        } else {
            item["m_mean"] = nullptr;
        }
        arr.push_back(std::move(item));
    }
    return arr.dump(2) + "\n";
}

std::string region_svg(const std::vector<SvgLayer>& layers) {
    double max1 = 0.0, max2 = 0.0;
    for (const auto& layer : layers) {
        max1 = std::max(max1, layer.region->max_r1());
        max2 = std::max(max2, layer.region->max_r2());
    }
    max1 = std::max(max1, 1e-3);
    max2 = std::max(max2, 1e-3);

    constexpr double W = 640.0, H = 480.0, M = 60.0;
    const auto px = [&](double r1) { return M + r1 / max1 * (W - 2 * M); };
    const auto py = [&](double r2) { return H - M - r2 / max2 * (H - 2 * M); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
        << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    svg << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(max1)
        << "\" y2=\"" << py(0) << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0)
        << "\" y2=\"" << py(max2) << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << W / 2 << "\" y=\"" << H - 15
        << "\" font-size=\"14\">R1 (bits/use)</text>\n";
    svg << "  <text x=\"15\" y=\"" << H / 2
        << "\" font-size=\"14\" transform=\"rotate(-90 15 " << H / 2
        << ")\">R2 (bits/use)</text>\n";
    svg << "  <text x=\"" << px(max1) - 30 << "\" y=\"" << py(0) + 20
        << "\" font-size=\"12\">" << fmt(max1) << "</text>\n";
    svg << "  <text x=\"" << px(0) - 45 << "\" y=\"" << py(max2) + 5
        << "\" font-size=\"12\">" << fmt(max2) << "</text>\n";

    double legend_y = M;
    for (const auto& layer : layers) {
        const auto& verts = layer.region->vertices();
        std::ostringstream pts;
        pts << px(0) << "," << py(0) << " ";
        pts << px(0) << "," << py(verts.front().point.r2) << " ";
        for (const auto& v : verts) pts << px(v.point.r1) << "," << py(v.point.r2) << " ";
        pts << px(verts.back().point.r1) << "," << py(0);
        svg << "  <polygon points=\"" << pts.str() << "\" stroke=\"" << layer.color
            << "\" fill=\"" << (layer.fill ? layer.color : std::string("none"))
            << "\" fill-opacity=\"" << (layer.fill ? 0.25 : 0.0)
            << "\" stroke-width=\"1.5\"/>\n";
        for (const auto& v : verts) {
            svg << "  <circle cx=\"" << px(v.point.r1) << "\" cy=\"" << py(v.point.r2)
                << "\" r=\"3\" fill=\"" << layer.color << "\"/>\n";
            svg << "  <text x=\"" << px(v.point.r1) + 5 << "\" y=\"" << py(v.point.r2) - 5
                << "\" font-size=\"10\">(" << fmt(v.point.r1) << ", " << fmt(v.point.r2)
                << ")</text>\n";
        }
        svg << "  <text x=\"" << W - M - 150 << "\" y=\"" << legend_y
            << "\" font-size=\"12\" fill=\"" << layer.color << "\">" << layer.label
            << "</text>\n";
        legend_y += 16;
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string manifest_json(const RunManifest& manifest) {
    json doc;
    doc["command"] = manifest.command;
    json cfg = json::object();
    for (const auto& [k, v] : manifest.config) cfg[k] = v;
    doc["config"] = std::move(cfg);
    doc["seed"] = manifest.seed;
    doc["tool_version"] = manifest.tool_version;
    json inputs = json::object();
    for (const auto& [path, digest] : manifest.inputs) inputs[path] = digest;
    doc["inputs"] = std::move(inputs);
    doc["outputs"] = manifest.outputs;
    doc["wall_seconds"] = manifest.wall_seconds;
    return doc.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

CfInput parse_cf_input(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("cf input: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("cf input: expected a JSON object");
    for (const auto& item : doc.items()) {
        const std::string& k = item.key();
        if (k != "q" && k != "x1_given_q" && k != "x2_given_q" && k != "y0hat_given_y0" &&
            k != "x0") {
            throw ParseError("cf input: unknown key \"" + k + "\"");
        }
    }
    for (const char* k : {"q", "x1_given_q", "x2_given_q", "y0hat_given_y0", "x0"}) {
        if (!doc.contains(k)) throw ParseError(std::string("cf input: missing \"") + k + "\"");
    }
    CfInput cf{pmf_from_json(doc["q"], "q"),
               pmf_rows_from_json(doc["x1_given_q"], "x1_given_q"),
               pmf_rows_from_json(doc["x2_given_q"], "x2_given_q"),
               pmf_rows_from_json(doc["y0hat_given_y0"], "y0hat_given_y0"),
               pmf_from_json(doc["x0"], "x0")};
    for (const auto& row : cf.y0hat_given_y0) {
        if (row.size() != cf.y0hat_size()) {
            throw ParseError("cf input: y0hat_given_y0 rows must share one width");
        }
    }
    return cf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write \"" + path + "\"");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to \"" + path + "\"");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace twrc
