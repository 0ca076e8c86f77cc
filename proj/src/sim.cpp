#include "twrc/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace twrc {

namespace {

constexpr std::uint64_t kTagCodebook = 0xB00CULL;
constexpr std::uint64_t kTagTrial = 0x791A1ULL;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t ceil_bits(double rate, std::size_t n) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) {
        throw Error("SimConfig: rates must be finite and non-negative");
    }
    if (rate == 0.0) return 0;
    // ceil(n*rate) with a guard against representation noise in n*rate.
    const double raw = rate * static_cast<double>(n);
    return static_cast<std::size_t>(std::ceil(raw * (1.0 - 1e-12)));
}

ErrorEstimate wilson(std::uint64_t errors, std::uint64_t trials) {
    constexpr double z = 1.959963984540054;  // 95%
    const double nn = static_cast<double>(trials);
    const double ph = static_cast<double>(errors) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (ph + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
    const double lo = errors == 0 ? 0.0 : std::max(center - half, 0.0);
    const double hi = errors == trials ? 1.0 : std::min(center + half, 1.0);
    return {ph, lo, hi, errors, trials};
}

/// Reference quantities for the weak-typicality test against a fixed joint.
struct TypicalityRef {
    std::size_t nx, ny;
    std::vector<double> nl_px, nl_py, nl_pxy;  // -log2 p, +inf outside support
    double hx, hy, hxy;

    explicit TypicalityRef(const JointPmf& joint) {
        if (joint.axes() != 2) throw SizeMismatch("typicality: needs a 2-axis joint");
        nx = joint.dims()[0];
        ny = joint.dims()[1];
        const Pmf mx = joint.marginal(0);
        const Pmf my = joint.marginal(1);
        const auto nl = [](double p) { return p < kZeroMass ? kInf : -std::log2(p); };
        nl_px.resize(nx);
        nl_py.resize(ny);
        nl_pxy.resize(nx * ny);
        for (std::size_t i = 0; i < nx; ++i) nl_px[i] = nl(mx[i]);
        for (std::size_t j = 0; j < ny; ++j) nl_py[j] = nl(my[j]);
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) nl_pxy[i * ny + j] = nl(joint.at(i, j));
        }
        hx = entropy(mx);
        hy = entropy(my);
        hxy = entropy(joint);
    }

    bool typical(std::span<const std::uint16_t> x, std::span<const std::uint16_t> y,
                 double eps) const {
        const std::size_t n = x.size();
        double sx = 0.0, sy = 0.0, sxy = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double a = nl_px[x[t]];
            const double b = nl_py[y[t]];
            const double c = nl_pxy[x[t] * ny + y[t]];
            if (a == kInf || b == kInf || c == kInf) return false;
            sx += a;
            sy += b;
            sxy += c;
        }
        const double inv = 1.0 / static_cast<double>(n);
        return std::abs(sx * inv - hx) <= eps && std::abs(sy * inv - hy) <= eps &&
               std::abs(sxy * inv - hxy) <= eps;
    }
};

/// Per-x0 joint samplers for the downlink pair (y1, y2).
struct DownlinkSampler {
    std::size_t y1_size, y2_size;
    std::vector<Pmf> slices;

    explicit DownlinkSampler(const DownlinkChannel& d)
        : y1_size(d.y1_size), y2_size(d.y2_size) {
        for (std::size_t x0 = 0; x0 < d.x0_size; ++x0) {
            std::vector<double> flat(y1_size * y2_size);
            for (std::size_t i = 0; i < flat.size(); ++i) {
                flat[i] = d.cond[x0 * flat.size() + i];
            }
            slices.push_back(Pmf(std::move(flat)));
        }
    }

    void draw(std::uint16_t x0, RandomSource& rng, std::uint16_t& y1,
              std::uint16_t& y2) const {
        const std::size_t i = sample(slices[x0], rng);
        y1 = static_cast<std::uint16_t>(i / y2_size);
        y2 = static_cast<std::uint16_t>(i % y2_size);
    }
};

struct SimContext {
    UplinkTable table;
    JointPmf joint1;  // (X0, Y1)
    JointPmf joint2;  // (X0, Y2)
    TypicalityRef ref1;
    TypicalityRef ref2;
    DownlinkSampler sampler;

    SimContext(const SimConfig& cfg, UplinkTable t)
        : table(std::move(t)),
          joint1(downlink_joints(cfg.p0, cfg.spec.downlink).first),
          joint2(downlink_joints(cfg.p0, cfg.spec.downlink).second),
          ref1(joint1),
          ref2(joint2),
          sampler(cfg.spec.downlink) {}
};

void sample_word(const Pmf& p, std::size_t n, RandomSource& rng,
                 std::vector<std::uint16_t>& out) {
    out.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        out[t] = static_cast<std::uint16_t>(sample(p, rng));
    }
}

TrialOutcome run_trial_ctx(const SimConfig& cfg, const CodebookSet& books,
                           const SimContext& ctx, RandomSource& rng) {
    const auto& idx = books.index;
    const std::uint64_t w1 = rng.next_below(books.user1.num_words);
    const std::uint64_t w2 = rng.next_below(books.user2.num_words);
    const std::uint32_t w0 = idx.w0(w1, w2);
    const auto x0 = books.relay.word(w0);

    const std::size_t n = cfg.n;
    std::vector<std::uint16_t> y1(n), y2(n);
    for (std::size_t t = 0; t < n; ++t) {
        ctx.sampler.draw(x0[t], rng, y1[t], y2[t]);
    }

    TrialOutcome out;
    {
        const auto cands = candidate_set(w1, books.user1, books.user2, idx, Side::user1);
        const Decoded d = decode_w0(y1, books.relay, cands, ctx.joint1, cfg.epsilon);
        out.w0_err_u1 = !(d.ok() && d.value == w0);
        if (d.ok()) {
            const Decoded m =
                decode_message(d.value, w1, books.user1, books.user2, idx, Side::user1);
            out.msg_err_u1 = !(m.ok() && m.value == w2);
        } else {
            out.msg_err_u1 = true;
        }
    }
    {
        const auto cands = candidate_set(w2, books.user1, books.user2, idx, Side::user2);
        const Decoded d = decode_w0(y2, books.relay, cands, ctx.joint2, cfg.epsilon);
        out.w0_err_u2 = !(d.ok() && d.value == w0);
        if (d.ok()) {
            const Decoded m =
                decode_message(d.value, w2, books.user1, books.user2, idx, Side::user2);
            out.msg_err_u2 = !(m.ok() && m.value == w1);
        } else {
            out.msg_err_u2 = true;
        }
    }
    return out;
}

bool row_injective(const UplinkTable& u) {
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        std::vector<bool> seen(u.y0_size, false);
        for (std::size_t b = 0; b < u.x2_size; ++b) {
            if (seen[u(a, b)]) return false;
            seen[u(a, b)] = true;
        }
    }
    return true;
}

bool column_injective(const UplinkTable& u) {
    for (std::size_t b = 0; b < u.x2_size; ++b) {
        std::vector<bool> seen(u.y0_size, false);
        for (std::size_t a = 0; a < u.x1_size; ++a) {
            if (seen[u(a, b)]) return false;
            seen[u(a, b)] = true;
        }
    }
    return true;
}

/// Exact typical-set mass from the symbol-count type of y: enumerate, per
/// distinct received symbol, the multinomial split of the candidate word's
/// symbols, and sum the probability of splits whose weighted log-probability
/// sums land in the typicality boxes.
double mass_from_type(const Pmf& input, const TypicalityRef& ref,
                      const std::vector<std::size_t>& type, double eps) {
    const std::size_t n = [&] {
        std::size_t total = 0;
        for (std::size_t c : type) total += c;
        return total;
    }();
    const double inv_n = 1.0 / static_cast<double>(n);

    double sy = 0.0;
    for (std::size_t v = 0; v < type.size(); ++v) {
        if (type[v] == 0) continue;
        if (ref.nl_py[v] == kInf) return 0.0;
        sy += static_cast<double>(type[v]) * ref.nl_py[v];
    }
    if (std::abs(sy * inv_n - ref.hy) > eps) return 0.0;

    struct Term {
        double a;   // x-marginal log contribution
        double b;   // pair log contribution
        double lp;  // ln probability of this split
    };
    std::vector<std::vector<Term>> groups;
    double enumeration = 1.0;
    for (std::size_t v = 0; v < type.size(); ++v) {
        if (type[v] == 0) continue;
        std::vector<std::size_t> xs;
        for (std::size_t x = 0; x < ref.nx; ++x) {
            if (input[x] >= kZeroMass && ref.nl_px[x] != kInf &&
                ref.nl_pxy[x * ref.ny + v] != kInf) {
                xs.push_back(x);
            }
        }
        if (xs.empty()) return 0.0;  // every draw lands outside the support
        const std::size_t cnt = type[v];

        std::vector<Term> terms;
        const double base = std::lgamma(static_cast<double>(cnt) + 1.0);
        // Compositions of cnt over xs.
        const auto recurse = [&](auto&& self, std::size_t pos, std::size_t left,
                                 double a, double b, double lp) -> void {
            if (pos + 1 == xs.size()) {
                const std::size_t x = xs[pos];
                const double mm = static_cast<double>(left);
                terms.push_back({a + mm * ref.nl_px[x],
                                 b + mm * ref.nl_pxy[x * ref.ny + v],
                                 lp + mm * std::log(input[x]) -
                                     std::lgamma(mm + 1.0)});
                return;
            }
            for (std::size_t take = 0; take <= left; ++take) {
                const std::size_t x = xs[pos];
                const double mm = static_cast<double>(take);
                self(self, pos + 1, left - take, a + mm * ref.nl_px[x],
                     b + mm * ref.nl_pxy[x * ref.ny + v],
                     lp + mm * std::log(input[x]) - std::lgamma(mm + 1.0));
            }
        };
        recurse(recurse, 0, cnt, 0.0, 0.0, base);
        enumeration *= static_cast<double>(terms.size());
        if (enumeration > 2e7) {
            throw BudgetExceeded(
                "typical_set_mass: composition enumeration too large for these "
                "alphabets at this block length");
        }
        groups.push_back(std::move(terms));
    }

    double total = 0.0;
    const auto fold = [&](auto&& self, std::size_t g, double a, double b,
                          double lp) -> void {
        if (g == groups.size()) {
            if (std::abs(a * inv_n - ref.hx) <= eps && std::abs(b * inv_n - ref.hxy) <= eps) {
                total += std::exp(lp);
            }
            return;
        }
        for (const Term& t : groups[g]) {
            self(self, g + 1, a + t.a, b + t.b, lp + t.lp);
        }
    };
    fold(fold, 0, 0.0, 0.0, 0.0);
    return std::min(total, 1.0);
}

/// P(at least one success among `count` independent Bernoulli(q) draws).
double any_of(double count, double q) {
    if (count <= 0.0 || q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    return -std::expm1(count * std::log1p(-q));
}

struct Tally {
    std::uint64_t w0_u1 = 0, w0_u2 = 0, msg_u1 = 0, msg_u2 = 0, total = 0;

    void add(const TrialOutcome& o) {
        w0_u1 += o.w0_err_u1;
        w0_u2 += o.w0_err_u2;
        msg_u1 += o.msg_err_u1;
        msg_u2 += o.msg_err_u2;
        total += (o.msg_err_u1 || o.msg_err_u2);
    }
};

double log2_collision(const Pmf& p) {
    double s = 0.0;
    for (double v : p.probs()) s += v * v;
    return std::log2(s);
}

}  // namespace

std::size_t SimConfig::bits1() const { return ceil_bits(rate1, n); }
std::size_t SimConfig::bits2() const { return ceil_bits(rate2, n); }

SimConfig SimConfig::uniform_inputs(ChannelSpec spec, double rate1, double rate2,
                                    std::size_t n) {
    const std::size_t x1 = spec.x1_size();
    const std::size_t x2 = spec.x2_size();
    const std::size_t x0 = spec.downlink.x0_size;
    return SimConfig{std::move(spec), rate1,           rate2,
                     Pmf::uniform(x1), Pmf::uniform(x2), Pmf::uniform(x0),
                     n};
}

RelayIndex build_relay_index(const Codebook& cb1, const Codebook& cb2,
                             const UplinkTable& u) {
    if (cb1.n != cb2.n) throw SizeMismatch("relay index: block lengths differ");
    if (cb1.alphabet_size != u.x1_size || cb2.alphabet_size != u.x2_size) {
        throw SizeMismatch("relay index: codebook alphabets do not match the uplink");
    }
    const std::size_t n = cb1.n;
    const std::uint64_t pairs = cb1.num_words * cb2.num_words;
    if (pairs * n > 50'000'000ULL) {
        throw BudgetExceeded("relay index: " + std::to_string(pairs) +
                             " message pairs at n=" + std::to_string(n) +
                             " exceeds the enumeration budget");
    }

    RelayIndex idx;
    idx.n = n;
    idx.w1_count = cb1.num_words;
    idx.w2_count = cb2.num_words;
    idx.forward.resize(pairs);

    std::unordered_map<std::string, std::uint32_t> seen;
    seen.reserve(static_cast<std::size_t>(pairs));
    std::vector<std::uint16_t> seq(n);
    for (std::uint64_t w1 = 0; w1 < cb1.num_words; ++w1) {
        const auto x1 = cb1.word(w1);
        for (std::uint64_t w2 = 0; w2 < cb2.num_words; ++w2) {
            const auto x2 = cb2.word(w2);
            for (std::size_t t = 0; t < n; ++t) {
                seq[t] = static_cast<std::uint16_t>(u(x1[t], x2[t]));
            }
            std::string key(reinterpret_cast<const char*>(seq.data()),
                            n * sizeof(std::uint16_t));
            const auto [it, inserted] = seen.try_emplace(std::move(key),
                                                         static_cast<std::uint32_t>(idx.m));
            if (inserted) {
                ++idx.m;
                idx.sequences.insert(idx.sequences.end(), seq.begin(), seq.end());
            }
            idx.forward[w1 * cb2.num_words + w2] = it->second;
        }
    }
    return idx;
}

CodebookSet build_codebooks(const SimConfig& cfg, std::uint64_t batch_index) {
    const UplinkTable table = cfg.spec.uplink_table();
    const std::size_t k1 = cfg.bits1();
    const std::size_t k2 = cfg.bits2();
    if (k1 + k2 > cfg.cap_bits) {
        throw BudgetExceeded("build_codebooks: " + std::to_string(k1 + k2) +
                             " message bits exceed cap_bits=" + std::to_string(cfg.cap_bits));
    }
    if (cfg.p1.size() != table.x1_size || cfg.p2.size() != table.x2_size ||
        cfg.p0.size() != cfg.spec.downlink.x0_size) {
        throw SizeMismatch("build_codebooks: input pmf sizes do not match the channel");
    }

    const RandomSource base(cfg.seed, 0);
    const auto generate = [&](std::size_t owner, std::uint64_t words, const Pmf& pmf,
                              std::size_t alphabet) {
        RandomSource rng = base.substream(kTagCodebook, batch_index * 4 + owner);
        Codebook cb;
        cb.owner = owner;
        cb.num_words = words;
        cb.n = cfg.n;
        cb.alphabet_size = alphabet;
        cb.gen_pmf = pmf;
        cb.seed = cfg.seed;
        cb.stream = rng.stream_id();
        cb.symbols.resize(static_cast<std::size_t>(words) * cfg.n);
        for (auto& s : cb.symbols) s = static_cast<std::uint16_t>(sample(pmf, rng));
        return cb;
    };

    CodebookSet out{generate(1, 1ULL << k1, cfg.p1, table.x1_size),
                    generate(2, 1ULL << k2, cfg.p2, table.x2_size), Codebook{},
                    RelayIndex{}};
    out.index = build_relay_index(out.user1, out.user2, table);
    out.relay = generate(0, out.index.m, cfg.p0, cfg.spec.downlink.x0_size);
    return out;
}

std::vector<std::uint32_t> candidate_set(std::uint64_t own_message, const Codebook& cb1,
                                         const Codebook& cb2, const RelayIndex& idx,
                                         Side side) {
    if (cb1.num_words != idx.w1_count || cb2.num_words != idx.w2_count) {
        throw SizeMismatch("candidate_set: codebooks do not match the relay index");
    }
    std::vector<std::uint32_t> out;
    if (side == Side::user1) {
        out.reserve(idx.w2_count);
        for (std::uint64_t k = 0; k < idx.w2_count; ++k) {
            out.push_back(idx.w0(own_message, k));
        }
    } else {
        out.reserve(idx.w1_count);
        for (std::uint64_t a = 0; a < idx.w1_count; ++a) {
            out.push_back(idx.w0(a, own_message));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool jointly_typical(std::span<const std::uint16_t> x, std::span<const std::uint16_t> y,
                     const JointPmf& joint, double epsilon) {
    if (x.size() != y.size() || x.empty()) {
        throw SizeMismatch("jointly_typical: sequences must have equal positive length");
    }
    const TypicalityRef ref(joint);
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (x[t] >= ref.nx || y[t] >= ref.ny) {
            throw SizeMismatch("jointly_typical: symbol outside the joint's alphabets");
        }
    }
    return ref.typical(x, y, epsilon);
}

Decoded decode_w0(std::span<const std::uint16_t> received, const Codebook& relay_cb,
                  const std::vector<std::uint32_t>& candidates, const JointPmf& joint,
                  double epsilon) {
    const TypicalityRef ref(joint);
    std::size_t hits = 0;
    std::uint32_t last = 0;
    for (const std::uint32_t c : candidates) {
        if (ref.typical(relay_cb.word(c), received, epsilon)) {
            ++hits;
            last = c;
            if (hits > 1) return {Decoded::Status::ambiguous, 0};
        }
    }
    if (hits == 0) return {Decoded::Status::none, 0};
    return {Decoded::Status::ok, last};
}

Decoded decode_message(std::uint32_t w0, std::uint64_t own_message, const Codebook& cb1,
                       const Codebook& cb2, const RelayIndex& idx, Side side) {
    if (cb1.num_words != idx.w1_count || cb2.num_words != idx.w2_count) {
        throw SizeMismatch("decode_message: codebooks do not match the relay index");
    }
    std::size_t hits = 0;
    std::uint64_t found = 0;
    if (side == Side::user1) {
        for (std::uint64_t k = 0; k < idx.w2_count; ++k) {
            if (idx.w0(own_message, k) == w0) {
                ++hits;
                found = k;
                if (hits > 1) return {Decoded::Status::ambiguous, 0};
            }
        }
    } else {
        for (std::uint64_t a = 0; a < idx.w1_count; ++a) {
            if (idx.w0(a, own_message) == w0) {
                ++hits;
                found = a;
                if (hits > 1) return {Decoded::Status::ambiguous, 0};
            }
        }
    }
    if (hits == 0) return {Decoded::Status::none, 0};
    return {Decoded::Status::ok, static_cast<std::uint32_t>(found)};
}

TrialOutcome run_trial(const SimConfig& cfg, const CodebookSet& books, RandomSource& rng) {
    const SimContext ctx(cfg, cfg.spec.uplink_table());
    return run_trial_ctx(cfg, books, ctx, rng);
}

double typical_set_mass(const Pmf& input, const JointPmf& joint,
                        std::span<const std::uint16_t> y, double epsilon) {
    const TypicalityRef ref(joint);
    if (input.size() != ref.nx) {
        throw SizeMismatch("typical_set_mass: input pmf does not match the joint");
    }
    if (y.empty()) throw SizeMismatch("typical_set_mass: empty sequence");
    std::vector<std::size_t> type(ref.ny, 0);
    for (const std::uint16_t v : y) {
        if (v >= ref.ny) throw SizeMismatch("typical_set_mass: symbol out of range");
        ++type[v];
    }
    return mass_from_type(input, ref, type, epsilon);
}

namespace {

SimReport finalize_report(const SimConfig& cfg, const Tally& tally, bool m_available,
                          double m_mean, double bias, const char* backend,
                          double wall_seconds) {
    SimReport rep;
    rep.n = cfg.n;
    rep.rate1 = cfg.rate1;
    rep.rate2 = cfg.rate2;
    rep.rate1_simulated = static_cast<double>(cfg.bits1()) / static_cast<double>(cfg.n);
    rep.rate2_simulated = static_cast<double>(cfg.bits2()) / static_cast<double>(cfg.n);
    const double blocks = static_cast<double>(cfg.num_blocks);
    rep.rate1_effective = (blocks - 1.0) / blocks * rep.rate1_simulated;
    rep.rate2_effective = (blocks - 1.0) / blocks * rep.rate2_simulated;
    rep.num_blocks = cfg.num_blocks;
    rep.w0_user1 = wilson(tally.w0_u1, cfg.trials);
    rep.w0_user2 = wilson(tally.w0_u2, cfg.trials);
    rep.msg_user1 = wilson(tally.msg_u1, cfg.trials);
    rep.msg_user2 = wilson(tally.msg_u2, cfg.trials);
    rep.total = wilson(tally.total, cfg.trials);
    rep.m_available = m_available;
    rep.m_mean = m_mean;
    rep.collision_bias_bound = bias;
    rep.backend = backend;
    rep.generator_version = RandomSource::kGeneratorVersion;
    rep.seed = cfg.seed;
    rep.epsilon = cfg.epsilon;
    rep.wall_seconds = wall_seconds;
    return rep;
}

SimReport run_enumerated(const SimConfig& cfg, const UplinkTable& table,
                         std::chrono::steady_clock::time_point t0) {
    const SimContext ctx(cfg, table);
    const RandomSource base(cfg.seed, 0);
    Tally tally;
    double m_sum = 0.0;
    std::size_t batches = 0;
    CodebookSet books;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::uint64_t batch = t / cfg.batch_size;
        if (t % cfg.batch_size == 0) {
            books = build_codebooks(cfg, batch);
            m_sum += static_cast<double>(books.index.m);
            ++batches;
        }
        RandomSource rng = base.substream(kTagTrial, t);
        tally.add(run_trial_ctx(cfg, books, ctx, rng));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finalize_report(cfg, tally, true, m_sum / static_cast<double>(batches), 0.0,
                           "enumerated", secs);
}

/// Codebook-marginalized sampler for budgets beyond literal enumeration.
///
/// Per trial it draws only the transmitted words, then replaces the decoder's
/// candidate sweeps with their exact conditional laws: each of the 2^k - 1
/// competing relay codewords is an independent i.i.d. p0 sequence, typical
/// with the received block with probability typical_set_mass(...); uplink
/// inversion fails exactly when another codeword of the partner collides
/// with the transmitted one. Requires an uplink invertible in each argument
/// so the candidate sets have full distinct size; the residual duplicate
/// bias is bounded per trial and certified below 1e-6.
SimReport run_collapsed(const SimConfig& cfg, const UplinkTable& table,
                        std::chrono::steady_clock::time_point t0) {
    if (!row_injective(table) || !column_injective(table)) {
        throw BudgetExceeded(
            "simulation budget: rates*n exceed cap_bits and the collapsed estimator "
            "needs an uplink invertible in each argument (e.g. an adder); lower n or "
            "the rates, or raise cap_bits");
    }
    if (cfg.n > 900) {
        throw BudgetExceeded("simulation budget: block length above 900 underflows the "
                             "collapsed estimator; split the sweep");
    }
    const SimContext ctx(cfg, table);
    const RandomSource base(cfg.seed, 0);

    const double false1 = std::exp2(static_cast<double>(cfg.bits2())) - 1.0;  // user 1
    const double false2 = std::exp2(static_cast<double>(cfg.bits1())) - 1.0;  // user 2
    const double lg_coll1 = log2_collision(cfg.p1);
    const double lg_coll2 = log2_collision(cfg.p2);
    const double nf = static_cast<double>(cfg.n);
    // Candidate sets of the two users can share relay words; the shared
    // count is bounded by the pair budget times a word-difference collision
    // probability, so the independent OR of the confusion events is biased
    // by at most this much per unit of typicality mass.
    const double lg_cross = static_cast<double>(cfg.bits1() + cfg.bits2()) +
                            nf * std::min(lg_coll1, lg_coll2);

    std::map<std::vector<std::size_t>, double> q1_memo, q2_memo;
    const auto q_mass = [&](const std::vector<std::uint16_t>& y, const TypicalityRef& ref,
                            std::map<std::vector<std::size_t>, double>& memo) {
        std::vector<std::size_t> type(ref.ny, 0);
        for (const std::uint16_t v : y) ++type[v];
        const auto it = memo.find(type);
        if (it != memo.end()) return it->second;
        const double q = mass_from_type(cfg.p0, ref, type, cfg.epsilon);
        memo.emplace(std::move(type), q);
        return q;
    };

    Tally tally;
    double bias = 0.0;
    std::vector<std::uint16_t> x1w, x2w, x0w, y1(cfg.n), y2(cfg.n);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        RandomSource rng = base.substream(kTagTrial, t);
        sample_word(cfg.p1, cfg.n, rng, x1w);
        sample_word(cfg.p2, cfg.n, rng, x2w);
        sample_word(cfg.p0, cfg.n, rng, x0w);
        for (std::size_t i = 0; i < cfg.n; ++i) {
            ctx.sampler.draw(x0w[i], rng, y1[i], y2[i]);
        }

        TrialOutcome out;
        {
            const bool miss = !ctx.ref1.typical(x0w, y1, cfg.epsilon);
            const double q = q_mass(y1, ctx.ref1, q1_memo);
            const bool confusion = rng.next_double() < any_of(false1, q);
            out.w0_err_u1 = miss || confusion;
            double lpw = 0.0;  // log probability of redrawing the partner's word
            for (const std::uint16_t s : x2w) lpw += std::log(cfg.p2[s]);
            const bool clash = rng.next_double() < any_of(false1, std::exp(lpw));
            out.msg_err_u1 = out.w0_err_u1 || clash;
            if (q > 0.0) {
                const double lg_q = std::log2(q);
                bias = std::max(bias, std::exp2(lg_q +
                                                2.0 * static_cast<double>(cfg.bits2()) -
                                                1.0 + nf * lg_coll2));
                bias = std::max(bias, std::exp2(lg_q + lg_cross));
            }
        }
        {
            const bool miss = !ctx.ref2.typical(x0w, y2, cfg.epsilon);
            const double q = q_mass(y2, ctx.ref2, q2_memo);
            const bool confusion = rng.next_double() < any_of(false2, q);
            out.w0_err_u2 = miss || confusion;
            double lpw = 0.0;
            for (const std::uint16_t s : x1w) lpw += std::log(cfg.p1[s]);
            const bool clash = rng.next_double() < any_of(false2, std::exp(lpw));
            out.msg_err_u2 = out.w0_err_u2 || clash;
            if (q > 0.0) {
                const double lg_q = std::log2(q);
                bias = std::max(bias, std::exp2(lg_q +
                                                2.0 * static_cast<double>(cfg.bits1()) -
                                                1.0 + nf * lg_coll1));
                bias = std::max(bias, std::exp2(lg_q + lg_cross));
            }
        }
        tally.add(out);
    }
    if (bias > 1e-6) {
        throw BudgetExceeded("simulation budget: collapsed-estimator duplicate bias bound " +
                             std::to_string(bias) +
                             " is not negligible at these rates; lower the rates or n");
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finalize_report(cfg, tally, false, 0.0, bias, "collapsed", secs);
}

}  // namespace

SimReport estimate_error(const SimConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.n == 0) throw Error("estimate_error: block length must be positive");
    if (cfg.trials == 0) throw Error("estimate_error: need at least one trial");
    if (cfg.num_blocks == 0) throw Error("estimate_error: need at least one block");
    if (cfg.batch_size == 0) throw Error("estimate_error: batch size must be positive");
    if (!(cfg.epsilon > 0.0)) throw Error("estimate_error: epsilon must be positive");
    const UplinkTable table = cfg.spec.uplink_table();
    if (cfg.p1.size() != table.x1_size || cfg.p2.size() != table.x2_size ||
        cfg.p0.size() != cfg.spec.downlink.x0_size) {
        throw SizeMismatch("estimate_error: input pmf sizes do not match the channel");
    }

    const std::size_t total_bits = cfg.bits1() + cfg.bits2();
    switch (cfg.backend) {
        case SimConfig::Backend::enumerated:
            if (total_bits > cfg.cap_bits) {
                throw BudgetExceeded(
                    "simulation budget: " + std::to_string(total_bits) +
                    " message bits exceed cap_bits=" + std::to_string(cfg.cap_bits) +
                    "; lower n*rates, raise cap_bits, or use the collapsed backend");
            }
            return run_enumerated(cfg, table, t0);
        case SimConfig::Backend::collapsed:
            return run_collapsed(cfg, table, t0);
        case SimConfig::Backend::automatic:
        default:
            if (total_bits <= cfg.cap_bits) return run_enumerated(cfg, table, t0);
            return run_collapsed(cfg, table, t0);
    }
}

}  // namespace twrc
