#include <doctest.h>

#include <cmath>

#include "twrc/sim.hpp"

using namespace twrc;

namespace {

const UplinkTable kXor = std::get<UplinkTable>(builtin_channel("xor").uplink);
const UplinkTable kMult = std::get<UplinkTable>(builtin_channel("multiplier").uplink);

Codebook manual_codebook(std::size_t owner, std::size_t alphabet,
                         std::vector<std::vector<std::uint16_t>> words) {
    Codebook cb;
    cb.owner = owner;
    cb.num_words = words.size();
    cb.n = words.front().size();
    cb.alphabet_size = alphabet;
    cb.gen_pmf = Pmf::uniform(alphabet);
    for (const auto& w : words) {
        cb.symbols.insert(cb.symbols.end(), w.begin(), w.end());
    }
    return cb;
}

// Brute-force oracle for typical_set_mass: enumerate every candidate word.
double mass_brute_force(const Pmf& input, const JointPmf& joint,
                        std::span<const std::uint16_t> y, double eps) {
    const std::size_t n = y.size();
    const std::size_t nx = input.size();
    std::vector<std::uint16_t> x(n, 0);
    double total = 0.0;
    while (true) {
        double prob = 1.0;
        for (std::size_t t = 0; t < n; ++t) prob *= input[x[t]];
        if (prob > 0.0 && jointly_typical(x, y, joint, eps)) total += prob;
        std::size_t pos = 0;
        while (pos < n && ++x[pos] == nx) {
            x[pos] = 0;
            ++pos;
        }
        if (pos == n) break;
    }
    return total;
}

SimConfig small_config(const char* builtin, double r1, double r2, std::size_t n) {
    SimConfig cfg = SimConfig::uniform_inputs(builtin_channel(builtin), r1, r2, n);
    cfg.trials = 200;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("relay index from fixed codebooks") {
    // xor, n=2, codebooks {00, 01} and {00, 11}
    const Codebook cb1 = manual_codebook(1, 2, {{0, 0}, {0, 1}});
    const Codebook cb2 = manual_codebook(2, 2, {{0, 0}, {1, 1}});
    const RelayIndex idx = build_relay_index(cb1, cb2, kXor);
    CHECK(idx.m == 4);
    // y0 set in first-appearance order: 00, 11, 01, 10
    CHECK(idx.sequence(0)[0] == 0);
    CHECK(idx.sequence(0)[1] == 0);
    CHECK(idx.sequence(1)[0] == 1);
    CHECK(idx.sequence(1)[1] == 1);
    CHECK(idx.sequence(2)[0] == 0);
    CHECK(idx.sequence(2)[1] == 1);
    CHECK(idx.sequence(3)[0] == 1);
    CHECK(idx.sequence(3)[1] == 0);

    // constant multiplier codebooks collapse to a single sequence
    const Codebook z1 = manual_codebook(1, 2, {{0, 0}, {0, 0}});
    const Codebook z2 = manual_codebook(2, 2, {{0, 0}, {0, 0}});
    CHECK(build_relay_index(z1, z2, kMult).m == 1);
}

TEST_CASE("relay index invariants on random configs") {
    RandomSource rng(3, 0);
    for (int rep = 0; rep < 20; ++rep) {
        SimConfig cfg = small_config(rep % 2 ? "xor" : "multiplier", 0.5, 0.5, 6);
        cfg.seed = 100 + rep;
        const CodebookSet books = build_codebooks(cfg, rep);
        const auto& idx = books.index;
        const double cap = std::min(std::pow(2.0, 6.0 * 1.0),  // |Y0|^n with |Y0|=2
                                    static_cast<double>(idx.w1_count * idx.w2_count));
        CHECK(static_cast<double>(idx.m) <= cap + 1e-9);
        // inverse(forward(w1,w2)) equals the elementwise uplink output
        const UplinkTable u = cfg.spec.uplink_table();
        for (std::uint64_t w1 = 0; w1 < idx.w1_count; ++w1) {
            for (std::uint64_t w2 = 0; w2 < idx.w2_count; ++w2) {
                const auto seq = idx.sequence(idx.w0(w1, w2));
                const auto x1 = books.user1.word(w1);
                const auto x2 = books.user2.word(w2);
                for (std::size_t t = 0; t < cfg.n; ++t) {
                    REQUIRE(seq[t] == u(x1[t], x2[t]));
                }
            }
        }
        (void)rng;
    }
}

TEST_CASE("codebooks replay bit-identically") {
    SimConfig cfg = small_config("xor", 0.5, 0.5, 8);
    const CodebookSet a = build_codebooks(cfg, 3);
    const CodebookSet b = build_codebooks(cfg, 3);
    CHECK(a.user1.symbols == b.user1.symbols);
    CHECK(a.user2.symbols == b.user2.symbols);
    CHECK(a.relay.symbols == b.relay.symbols);
    CHECK(a.index.forward == b.index.forward);
    const CodebookSet c = build_codebooks(cfg, 4);
    CHECK(a.user1.symbols != c.user1.symbols);
}

TEST_CASE("codebook budget guard") {
    SimConfig cfg = small_config("xor", 0.9, 0.9, 50);  // 45+45 bits
    CHECK_THROWS_AS(build_codebooks(cfg, 0), BudgetExceeded);
}

TEST_CASE("candidate sets") {
    SimConfig cfg = small_config("xor", 0.5, 0.5, 6);
    const CodebookSet books = build_codebooks(cfg, 0);
    const auto& idx = books.index;

    for (std::uint64_t w1 = 0; w1 < idx.w1_count; ++w1) {
        const auto s = candidate_set(w1, books.user1, books.user2, idx, Side::user1);
        CHECK(s.size() <= idx.w2_count);
        for (std::uint64_t w2 = 0; w2 < idx.w2_count; ++w2) {
            const std::uint32_t true_w0 = idx.w0(w1, w2);
            CHECK(std::find(s.begin(), s.end(), true_w0) != s.end());
        }
    }

    // xor with distinct partner words: |S| equals the partner codebook size
    const Codebook cb1 = manual_codebook(1, 2, {{0, 0, 0}, {1, 0, 1}});
    const Codebook cb2 = manual_codebook(2, 2, {{0, 0, 0}, {0, 1, 1}, {1, 1, 0}, {1, 0, 1}});
    const RelayIndex xi = build_relay_index(cb1, cb2, kXor);
    CHECK(candidate_set(0, cb1, cb2, xi, Side::user1).size() == 4);
    CHECK(candidate_set(1, cb1, cb2, xi, Side::user1).size() == 4);

    // multiplier with an all-zero own word: a single candidate
    const Codebook m1 = manual_codebook(1, 2, {{0, 0, 0}});
    const RelayIndex mi = build_relay_index(m1, cb2, kMult);
    CHECK(candidate_set(0, m1, cb2, mi, Side::user1).size() == 1);
}

TEST_CASE("joint typicality") {
    // uniform copy channel: a matching pair is typical at any epsilon
    const JointPmf copy({2, 2}, {0.5, 0.0, 0.0, 0.5});
    const std::vector<std::uint16_t> seq{0, 1, 1, 0, 1, 0};
    CHECK(jointly_typical(seq, seq, copy, 0.0));

    // a zero-probability cell fails immediately
    std::vector<std::uint16_t> other = seq;
    other[2] ^= 1;
    CHECK_FALSE(jointly_typical(other, seq, copy, 0.5));

    // uniform marginals meet the marginal tests exactly, so only the pair
    // statistic can disqualify a sequence: this skewed pair passes marginal
    // conditions under the BSC joint but fails the pair box
    const JointPmf bsc01({2, 2}, {0.45, 0.05, 0.05, 0.45});
    const std::vector<std::uint16_t> a{0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<std::uint16_t> b{1, 1, 1, 1, 0, 0, 0, 0};
    CHECK_FALSE(jointly_typical(a, b, bsc01, 0.35));  // all-disagree pair
    CHECK(jointly_typical(a, a, bsc01, 0.35));        // all-agree pair is close

    // uniform marginal: every sequence satisfies the marginal test exactly,
    // so typicality is decided by the pair statistic alone
    const JointPmf bsc({2, 2}, {0.4, 0.1, 0.1, 0.4});
    RandomSource rng(9, 0);
    const std::size_t n = 10000;
    int typical = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<std::uint16_t> xs(n), ys(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double u = rng.next_double();
            // draw (x,y) from the joint
            if (u < 0.4) {
                xs[t] = 0; ys[t] = 0;
            } else if (u < 0.5) {
                xs[t] = 0; ys[t] = 1;
            } else if (u < 0.6) {
                xs[t] = 1; ys[t] = 0;
            } else {
                xs[t] = 1; ys[t] = 1;
            }
        }
        if (jointly_typical(xs, ys, bsc, 0.05)) ++typical;
    }
    CHECK(typical >= static_cast<int>(0.95 * reps));  // AEP at this n
}

TEST_CASE("typical set mass matches brute force") {
    RandomSource rng(12, 1);
    const JointPmf joints[] = {
        JointPmf({2, 2}, {0.4, 0.1, 0.1, 0.4}),            // BSC(0.2)
        JointPmf({2, 2}, {0.5, 0.0, 0.0, 0.5}),            // noiseless
        JointPmf({3, 2}, {0.2, 0.1, 0.15, 0.15, 0.1, 0.3}) // ternary input
    };
    for (const auto& joint : joints) {
        const Pmf input = joint.marginal(0);
        for (const std::size_t n : {4u, 8u}) {
            for (int rep = 0; rep < 5; ++rep) {
                std::vector<std::uint16_t> y(n);
                for (auto& v : y) {
                    v = static_cast<std::uint16_t>(rng.next_below(joint.dims()[1]));
                }
                // epsilons off the disagreement-count class boundaries, so
                // the box test is in general position
                for (const double eps : {0.0203, 0.1007, 0.4803}) {
                    const double exact = typical_set_mass(input, joint, y, eps);
                    const double brute = mass_brute_force(input, joint, y, eps);
                    CHECK(std::abs(exact - brute) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("decode w0") {
    // noiseless downlink with distinct relay codewords recovers the index
    const Codebook relay = manual_codebook(0, 2, {{0, 0, 1, 1}, {1, 0, 1, 0}, {0, 1, 0, 1}});
    const JointPmf copy({2, 2}, {0.5, 0.0, 0.0, 0.5});
    const std::vector<std::uint32_t> all{0, 1, 2};
    for (std::uint32_t b = 0; b < 3; ++b) {
        std::vector<std::uint16_t> received(relay.word(b).begin(), relay.word(b).end());
        const Decoded d = decode_w0(received, relay, all, copy, 0.05);
        REQUIRE(d.ok());
        CHECK(d.value == b);
    }

    // a singleton candidate set only needs the true codeword to be typical
    const Decoded single = decode_w0(std::vector<std::uint16_t>{0, 0, 1, 1}, relay, {0},
                                     copy, 0.05);
    CHECK(single.ok());

    // two identical relay codewords force an ambiguous failure
    const Codebook dup = manual_codebook(0, 2, {{0, 1, 0, 1}, {0, 1, 0, 1}});
    const Decoded amb = decode_w0(std::vector<std::uint16_t>{0, 1, 0, 1}, dup, {0, 1},
                                  copy, 0.05);
    CHECK(amb.status == Decoded::Status::ambiguous);

    // nothing typical: none
    const Decoded none = decode_w0(std::vector<std::uint16_t>{1, 1, 1, 1}, relay, {2},
                                   copy, 0.0);
    CHECK(none.status == Decoded::Status::none);
}

TEST_CASE("decode message") {
    // xor uplink: inversion is a bijection, never fails given the right w0
    RandomSource rng(15, 2);
    for (int rep = 0; rep < 10; ++rep) {
        SimConfig cfg = small_config("xor", 0.5, 0.5, 6);
        cfg.seed = 50 + rep;
        const CodebookSet books = build_codebooks(cfg, 0);
        const auto& idx = books.index;
        for (std::uint64_t w1 = 0; w1 < idx.w1_count; ++w1) {
            for (std::uint64_t w2 = 0; w2 < idx.w2_count; ++w2) {
                const Decoded d = decode_message(idx.w0(w1, w2), w1, books.user1,
                                                 books.user2, idx, Side::user1);
                // ambiguity is possible only when two partner words collide
                if (d.ok()) CHECK(d.value == w2);
                const Decoded d2 = decode_message(idx.w0(w1, w2), w2, books.user1,
                                                  books.user2, idx, Side::user2);
                if (d2.ok()) CHECK(d2.value == w1);
            }
        }
        (void)rng;
    }

    // multiplier with an all-zero own word and several partner words: ambiguous
    const Codebook m1 = manual_codebook(1, 2, {{0, 0, 0}});
    const Codebook m2 = manual_codebook(2, 2, {{0, 0, 0}, {0, 1, 1}});
    const RelayIndex mi = build_relay_index(m1, m2, kMult);
    const Decoded amb = decode_message(mi.w0(0, 0), 0, m1, m2, mi, Side::user1);
    CHECK(amb.status == Decoded::Status::ambiguous);
}

TEST_CASE("xor inversion never fails for distinct partner words") {
    // with distinct x2 words the xor map k -> y0 is injective
    const Codebook cb1 = manual_codebook(1, 2, {{0, 1, 0}});
    const Codebook cb2 = manual_codebook(2, 2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 1}});
    const RelayIndex idx = build_relay_index(cb1, cb2, kXor);
    for (std::uint64_t k = 0; k < 3; ++k) {
        const Decoded d = decode_message(idx.w0(0, k), 0, cb1, cb2, idx, Side::user1);
        REQUIRE(d.ok());
        CHECK(d.value == k);
    }
}

TEST_CASE("single-message scheme is error free on a clean channel") {
    SimConfig cfg = small_config("xor", 0.0, 0.0, 16);
    cfg.trials = 100;
    const SimReport rep = estimate_error(cfg);
    CHECK(rep.total.estimate == 0.0);
    CHECK(rep.backend == "enumerated");
}

TEST_CASE("estimate_error replays bit-identically") {
    SimConfig cfg = small_config("xor", 0.3, 0.3, 20);
    cfg.trials = 150;
    const SimReport a = estimate_error(cfg);
    const SimReport b = estimate_error(cfg);
    CHECK(a.total.errors == b.total.errors);
    CHECK(a.w0_user1.errors == b.w0_user1.errors);
    CHECK(a.w0_user2.errors == b.w0_user2.errors);
    CHECK(a.msg_user1.errors == b.msg_user1.errors);
    CHECK(a.msg_user2.errors == b.msg_user2.errors);
    CHECK(a.m_mean == b.m_mean);
    CHECK(a.total.ci_lo == b.total.ci_lo);
    CHECK(a.total.ci_hi == b.total.ci_hi);

    SimConfig other = cfg;
    other.seed = cfg.seed + 1;
    const SimReport c = estimate_error(other);
    CHECK((a.total.errors != c.total.errors || a.m_mean != c.m_mean));
}

TEST_CASE("effective rate accounting") {
    SimConfig cfg = small_config("xor", 0.4, 0.2, 10);  // nR integral
    cfg.trials = 10;
    cfg.num_blocks = 10;
    const SimReport rep = estimate_error(cfg);
    CHECK(rep.rate1_simulated == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(rep.rate1_effective == doctest::Approx(0.9 * 0.4).epsilon(1e-15));
    CHECK(rep.rate2_effective == doctest::Approx(0.9 * 0.2).epsilon(1e-15));
}

TEST_CASE("wider trials narrow the confidence interval") {
    SimConfig cfg = small_config("bsc-broadcast(0.2)", 0.3, 0.3, 24);
    cfg.trials = 200;
    const SimReport a = estimate_error(cfg);
    SimConfig cfg2 = cfg;
    cfg2.trials = 800;
    const SimReport b = estimate_error(cfg2);
    const double wa = a.total.ci_hi - a.total.ci_lo;
    const double wb = b.total.ci_hi - b.total.ci_lo;
    CHECK(wb < 0.85 * wa);
}

TEST_CASE("budget guidance") {
    SimConfig cfg = small_config("multiplier", 0.8, 0.8, 100);
    // multiplier is not invertible, so past the cap there is no backend
    CHECK_THROWS_AS(estimate_error(cfg), BudgetExceeded);

    SimConfig forced = small_config("xor", 0.8, 0.8, 100);
    forced.backend = SimConfig::Backend::enumerated;
    CHECK_THROWS_AS(estimate_error(forced), BudgetExceeded);
}

TEST_CASE("collapsed and enumerated backends agree") {
    // miss-dominated regime: moderate n, clean-ish downlink
    {
        SimConfig enumerated = small_config("bsc-broadcast(0.05)", 0.1, 0.1, 60);
        enumerated.backend = SimConfig::Backend::enumerated;
        enumerated.trials = 300;
        const SimReport a = estimate_error(enumerated);

        SimConfig collapsed = enumerated;
        collapsed.backend = SimConfig::Backend::collapsed;
        collapsed.trials = 2000;
        collapsed.seed = 99;
        const SimReport b = estimate_error(collapsed);
        // overlapping confidence intervals
        CHECK(a.total.ci_lo <= b.total.ci_hi + 1e-12);
        CHECK(b.total.ci_lo <= a.total.ci_hi + 1e-12);
    }
    // ternary system with a skewed relay input: the miss event dominates and
    // both backends must see the same statistics
    {
        SimConfig enumerated = small_config("ff-adder-3", 0.15, 0.15, 30);
        enumerated.p0 = Pmf({0.5, 0.3, 0.2});
        enumerated.backend = SimConfig::Backend::enumerated;
        enumerated.trials = 400;
        const SimReport a = estimate_error(enumerated);

        SimConfig collapsed = enumerated;
        collapsed.backend = SimConfig::Backend::collapsed;
        collapsed.trials = 1500;
        collapsed.seed = 17;
        const SimReport b = estimate_error(collapsed);
        CHECK(a.total.estimate > 0.05);  // the skewed input really does miss
        CHECK(a.total.ci_lo <= b.total.ci_hi + 1e-12);
        CHECK(b.total.ci_lo <= a.total.ci_hi + 1e-12);
    }
    // confusion-dominated regime: rate above the downlink limit. Parameters
    // chosen in general position so no symbol-count class sits exactly on a
    // typicality box edge (there the two backends may round differently).
    {
        SimConfig enumerated = small_config("bsc-broadcast(0.21)", 0.05, 0.3, 41);
        enumerated.backend = SimConfig::Backend::enumerated;
        enumerated.epsilon = 0.0507;
        enumerated.trials = 300;
        const SimReport a = estimate_error(enumerated);

        SimConfig collapsed = enumerated;
        collapsed.backend = SimConfig::Backend::collapsed;
        collapsed.trials = 2000;
        collapsed.seed = 5;
        const SimReport b = estimate_error(collapsed);
        CHECK(a.w0_user1.estimate > 0.3);  // the regime really is noisy
        CHECK(a.w0_user1.ci_lo <= b.w0_user1.ci_hi + 1e-12);
        CHECK(b.w0_user1.ci_lo <= a.w0_user1.ci_hi + 1e-12);
    }
}

TEST_CASE("multiplier message failures vanish inside the region") {
    // random multiplier codebooks at rates inside the uplink region: the
    // inversion-failure probability decays with block length
    SimConfig small = small_config("multiplier", 0.3, 0.3, 16);
    small.trials = 500;
    const SimReport a = estimate_error(small);
    SimConfig large = small_config("multiplier", 0.3, 0.3, 32);
    large.trials = 500;
    const SimReport b = estimate_error(large);
    CHECK(b.msg_user1.estimate <=
          std::max(a.msg_user1.estimate, a.msg_user1.ci_hi) + 1e-12);
    CHECK(b.msg_user1.estimate < 0.15);
}

TEST_CASE("ternary adder runs on both backends") {
    // enumerated, inside capacity: the mod-3 adder with a clean downlink
    SimConfig cfg = small_config("ff-adder-3", 0.3, 0.3, 8);
    cfg.trials = 100;
    const SimReport a = estimate_error(cfg);
    CHECK(a.backend == "enumerated");
    CHECK(a.total.estimate <= 1.0);
    CHECK(a.m_available);

    // collapsed, far beyond the enumeration budget but still inside capacity
    SimConfig big = small_config("ff-adder-3", 0.5, 0.5, 100);
    big.trials = 200;
    const SimReport b = estimate_error(big);
    CHECK(b.backend == "collapsed");
    CHECK(b.total.estimate == 0.0);  // noiseless ternary broadcast, low rates
}

TEST_CASE("trial outcomes propagate failures without throwing") {
    SimConfig cfg = small_config("bsc-broadcast(0.45)", 0.4, 0.4, 16);
    cfg.trials = 50;
    const SimReport rep = estimate_error(cfg);  // noisy: plenty of failures
    CHECK(rep.total.estimate >= 0.0);
    CHECK(rep.total.estimate <= 1.0);
    CHECK(rep.total.ci_lo <= rep.total.estimate);
    CHECK(rep.total.ci_hi >= rep.total.estimate);
}
