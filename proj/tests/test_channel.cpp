#include <doctest.h>

#include <cmath>

#include "twrc/channel.hpp"

using namespace twrc;

TEST_CASE("builtin channels") {
    const ChannelSpec x = builtin_channel("xor");
    const UplinkTable& xt = std::get<UplinkTable>(x.uplink);
    CHECK(xt(0, 0) == 0);
    CHECK(xt(0, 1) == 1);
    CHECK(xt(1, 0) == 1);
    CHECK(xt(1, 1) == 0);
    CHECK(x.downlink.x0_size == 2);
    CHECK(x.downlink.at(0, 0, 0) == 1.0);
    CHECK(x.downlink.at(1, 1, 1) == 1.0);

    const ChannelSpec m = builtin_channel("multiplier");
    const UplinkTable& mt = std::get<UplinkTable>(m.uplink);
    CHECK(mt(0, 0) == 0);
    CHECK(mt(0, 1) == 0);
    CHECK(mt(1, 0) == 0);
    CHECK(mt(1, 1) == 1);

    // noiseless-orthogonal: x0 carries two bits, y1 the first, y2 the second
    const ChannelSpec o = builtin_channel("noiseless-orthogonal");
    CHECK(o.downlink.x0_size == 4);
    CHECK(o.downlink.y1_size == 2);
    CHECK(o.downlink.y2_size == 2);
    for (std::size_t x0 = 0; x0 < 4; ++x0) {
        CHECK(o.downlink.at(x0, x0 >> 1, x0 & 1) == 1.0);
    }

    const ChannelSpec f = builtin_channel("ff-adder-3");
    const UplinkTable& ft = std::get<UplinkTable>(f.uplink);
    CHECK(ft.x1_size == 3);
    CHECK(ft(2, 2) == 1);
    CHECK_THROWS_AS(builtin_channel("ff-adder-4"), ParseError);

    const ChannelSpec b = builtin_channel("bsc-broadcast(0.1)");
    CHECK(b.downlink.at(0, 0, 0) == doctest::Approx(0.81));
    CHECK(b.downlink.at(0, 1, 1) == doctest::Approx(0.01));
    CHECK_THROWS_AS(builtin_channel("bsc-broadcast(1.5)"), ParseError);
    CHECK_THROWS_AS(builtin_channel("no-such-channel"), ParseError);
}

TEST_CASE("determinism detection and table extraction") {
    const UplinkTable xt = std::get<UplinkTable>(builtin_channel("xor").uplink);
    const StochasticUplink lifted = lift(xt);
    CHECK(is_deterministic(lifted));
    const UplinkTable back = to_table(lifted);
    CHECK(back.table == xt.table);

    // one soft slice breaks determinism
    StochasticUplink soft = lifted;
    soft.cond[0] = 0.5;
    soft.cond[1] = 0.5;
    CHECK_FALSE(is_deterministic(soft));
    CHECK_THROWS_AS(to_table(soft), NotDeterministic);

    // BSC(0.1)-corrupted adder
    std::vector<double> noisy(2 * 2 * 2);
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t y = 0; y < 2; ++y) {
                noisy[(a * 2 + b) * 2 + y] = (y == (a ^ b)) ? 0.9 : 0.1;
            }
        }
    }
    CHECK_FALSE(is_deterministic(StochasticUplink(2, 2, 2, noisy)));
}

TEST_CASE("every lifted table round-trips") {
    // a few random deterministic tables
    RandomSource rng(1, 9);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t nx1 = 2 + rng.next_below(3);
        const std::size_t nx2 = 2 + rng.next_below(3);
        const std::size_t ny = 2 + rng.next_below(3);
        std::vector<std::size_t> t(nx1 * nx2);
        for (auto& v : t) v = rng.next_below(ny);
        const UplinkTable u(nx1, nx2, ny, t);
        CHECK(is_deterministic(lift(u)));
        CHECK(to_table(lift(u)).table == t);
    }
}

TEST_CASE("uplink joint") {
    const UplinkTable xt = std::get<UplinkTable>(builtin_channel("xor").uplink);
    const JointPmf j = uplink_joint(Pmf::uniform(2), Pmf::uniform(2), xt);
    const Pmf y0 = j.marginal(2);
    CHECK(y0[0] == doctest::Approx(0.5).epsilon(1e-15));

    const UplinkTable mt = std::get<UplinkTable>(builtin_channel("multiplier").uplink);
    const JointPmf annihilated = uplink_joint(Pmf::uniform(2), Pmf::point_mass(2, 0), mt);
    CHECK(annihilated.marginal(2)[0] == doctest::Approx(1.0).epsilon(1e-15));

    const JointPmf quarter = uplink_joint(Pmf::uniform(2), Pmf::uniform(2), mt);
    CHECK(quarter.marginal(2)[1] == doctest::Approx(0.25).epsilon(1e-15));

    // marginal over y0 recovers the product of inputs
    const Pmf p1({0.3, 0.7});
    const Pmf p2({0.8, 0.2});
    const JointPmf jj = uplink_joint(p1, p2, xt);
    const JointPmf pair = jj.marginalize_out(2);
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
            CHECK(pair.at(a, b) == doctest::Approx(p1[a] * p2[b]).epsilon(1e-15));
        }
    }
    CHECK_THROWS_AS(uplink_joint(Pmf::uniform(3), Pmf::uniform(2), xt), SizeMismatch);
}

TEST_CASE("downlink joints") {
    // noiseless binary broadcast: both legs carry one full bit
    const DownlinkChannel noiseless = builtin_channel("xor").downlink;
    const auto [j1, j2] = downlink_joints(Pmf::uniform(2), noiseless);
    CHECK(mutual_information(j1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mutual_information(j2) == doctest::Approx(1.0).epsilon(1e-12));

    const DownlinkChannel bsc = builtin_channel("bsc-broadcast(0.1)").downlink;
    const auto [b1, b2] = downlink_joints(Pmf::uniform(2), bsc);
    CHECK(std::abs(mutual_information(b1) - 0.5310044064107188) < 1e-9);
    CHECK(std::abs(mutual_information(b2) - 0.5310) < 1e-4);
}

TEST_CASE("pairwise joints ignore leg correlation") {
    const double eps = 0.2;
    // independent legs
    std::vector<double> indep(2 * 2 * 2);
    for (std::size_t x0 = 0; x0 < 2; ++x0) {
        for (std::size_t y1 = 0; y1 < 2; ++y1) {
            for (std::size_t y2 = 0; y2 < 2; ++y2) {
                const double l1 = (y1 == x0) ? 1 - eps : eps;
                const double l2 = (y2 == x0) ? 1 - eps : eps;
                indep[(x0 * 2 + y1) * 2 + y2] = l1 * l2;
            }
        }
    }
    // fully correlated legs with the same marginals
    std::vector<double> corr(2 * 2 * 2, 0.0);
    for (std::size_t x0 = 0; x0 < 2; ++x0) {
        corr[(x0 * 2 + x0) * 2 + x0] = 1 - eps;
        corr[(x0 * 2 + (x0 ^ 1)) * 2 + (x0 ^ 1)] = eps;
    }
    const Pmf p0({0.4, 0.6});
    const auto [a1, a2] = downlink_joints(p0, DownlinkChannel(2, 2, 2, indep));
    const auto [c1, c2] = downlink_joints(p0, DownlinkChannel(2, 2, 2, corr));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a1.probs()[i] == doctest::Approx(c1.probs()[i]).epsilon(1e-15));
        CHECK(a2.probs()[i] == doctest::Approx(c2.probs()[i]).epsilon(1e-15));
    }
}

TEST_CASE("spec file round trip") {
    for (const char* name :
         {"xor", "multiplier", "ff-adder-3", "noiseless-orthogonal", "bsc-broadcast(0.25)"}) {
        const ChannelSpec spec = builtin_channel(name);
        const ChannelSpec again = parse_channel_spec(emit_channel_spec(spec));
        CHECK(again.name == spec.name);
        CHECK(again.x1_size() == spec.x1_size());
        CHECK(again.downlink.cond == spec.downlink.cond);
        if (std::holds_alternative<UplinkTable>(spec.uplink)) {
            CHECK(std::get<UplinkTable>(again.uplink).table ==
                  std::get<UplinkTable>(spec.uplink).table);
        }
    }
    // stochastic uplink round trip
    ChannelSpec noisy = builtin_channel("xor");
    noisy.uplink = lift(std::get<UplinkTable>(noisy.uplink));
    const ChannelSpec again = parse_channel_spec(emit_channel_spec(noisy));
    CHECK(std::holds_alternative<StochasticUplink>(again.uplink));
}

TEST_CASE("spec parse diagnostics") {
    // table entry out of range names the cell
    const std::string bad_cell = R"({"name":"t","uplink":{"type":"deterministic",
      "x1_size":2,"x2_size":2,"y0_size":2,"table":[[0,1],[1,2]]},
      "downlink":{"x0_size":2,"y1_size":2,"y2_size":2,
      "p":[[[1,0],[0,0]],[[0,0],[0,1]]]}})";
    try {
        parse_channel_spec(bad_cell);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("x1=1") != std::string::npos);
        CHECK(std::string(e.what()).find("x2=1") != std::string::npos);
    }

    // downlink slice not summing to 1 names x0
    const std::string bad_mass = R"({"name":"t","uplink":{"type":"deterministic",
      "x1_size":2,"x2_size":2,"y0_size":2,"table":[[0,1],[1,0]]},
      "downlink":{"x0_size":2,"y1_size":2,"y2_size":2,
      "p":[[[0.9,0.08],[0,0]],[[0,0],[0,1]]]}})";
    try {
        parse_channel_spec(bad_mass);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("x0=0") != std::string::npos);
    }

    // unknown keys rejected
    const std::string unknown = R"({"name":"t","extra":1,"uplink":{"type":"deterministic",
      "x1_size":2,"x2_size":2,"y0_size":2,"table":[[0,1],[1,0]]},
      "downlink":{"x0_size":2,"y1_size":2,"y2_size":2,
      "p":[[[1,0],[0,0]],[[0,0],[0,1]]]}})";
    CHECK_THROWS_AS(parse_channel_spec(unknown), ParseError);
    CHECK_THROWS_AS(parse_channel_spec("not json"), ParseError);
}

TEST_CASE("unreachable outputs are flagged, not rejected") {
    const UplinkTable u(2, 2, 3, {0, 1, 1, 0});
    CHECK(u.has_unreachable_outputs());
    const auto reach = u.reachable_outputs();
    CHECK(reach[0]);
    CHECK(reach[1]);
    CHECK_FALSE(reach[2]);
    const UplinkTable full(2, 2, 2, {0, 1, 1, 0});
    CHECK_FALSE(full.has_unreachable_outputs());
}
