#include <doctest.h>

#include <cmath>
#include <set>

#include "twrc/prob.hpp"

using namespace twrc;

namespace {

// Random pmf/joint generators for the property checks.
Pmf random_pmf(std::size_t dim, RandomSource& rng) {
    std::vector<double> w(dim);
    for (auto& v : w) v = -std::log1p(-rng.next_double());
    return Pmf::normalized(std::move(w));
}

JointPmf random_joint(std::size_t da, std::size_t db, RandomSource& rng) {
    std::vector<double> w(da * db);
    for (auto& v : w) v = -std::log1p(-rng.next_double());
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return JointPmf({da, db}, std::move(w));
}

}  // namespace

TEST_CASE("pmf validation") {
    CHECK_THROWS_AS(Pmf({0.5, 0.6}), InvalidPmf);
    CHECK_THROWS_AS(Pmf({-0.1, 1.1}), InvalidPmf);
    CHECK_THROWS_AS(Pmf({}), InvalidPmf);
    CHECK_NOTHROW(Pmf({0.25, 0.75}));
    // renormalization only on explicit request
    const Pmf p = Pmf::normalized({2.0, 6.0});
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("entropy examples") {
    CHECK(entropy(Pmf({0.5, 0.5})) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(entropy(Pmf({1.0, 0.0})) == doctest::Approx(0.0).epsilon(1e-12));
    // -sum p log2 p evaluated at high precision
    CHECK(entropy(Pmf({0.7035, 0.2965})) ==
          doctest::Approx(0.8769703529172962).epsilon(1e-10));
    CHECK(std::abs(entropy(Pmf({0.7035, 0.2965})) - 0.8770) < 1e-4);
}

TEST_CASE("entropy bounds and point-mass cases") {
    RandomSource rng(7, 1);
    for (int i = 0; i < 200; ++i) {
        const std::size_t dim = 2 + rng.next_below(6);
        const Pmf p = random_pmf(dim, rng);
        const double h = entropy(p);
        CHECK(h >= 0.0);
        CHECK(h <= std::log2(static_cast<double>(dim)) + 1e-12);
    }
    for (std::size_t d = 1; d <= 5; ++d) {
        for (std::size_t s = 0; s < d; ++s) {
            CHECK(entropy(Pmf::point_mass(d, s)) == 0.0);
        }
    }
    // zero entropy exactly characterizes the point masses
    for (const Pmf& p : simplex_grid(3, 4)) {
        double biggest = 0.0;
        for (double v : p.probs()) biggest = std::max(biggest, v);
        CHECK((entropy(p) <= 1e-12) == (biggest == 1.0));
    }
}

TEST_CASE("conditional entropy examples") {
    // independent uniform pair
    const JointPmf indep = JointPmf::product(Pmf::uniform(2), Pmf::uniform(2));
    CHECK(conditional_entropy(indep, 1) == doctest::Approx(1.0).epsilon(1e-12));
    // A = B copy
    const JointPmf copy({2, 2}, {0.5, 0.0, 0.0, 0.5});
    CHECK(conditional_entropy(copy, 1) == doctest::Approx(0.0).epsilon(1e-12));
    // multiplier output with X1 ~ Bern(0.5), X2 = 1: joint over (Y0, X2)
    const JointPmf mult({2, 2}, {0.0, 0.5, 0.0, 0.5});
    CHECK(conditional_entropy(mult, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mutual information examples") {
    const JointPmf indep = JointPmf::product(Pmf({0.3, 0.7}), Pmf({0.6, 0.4}));
    CHECK(mutual_information(indep) == doctest::Approx(0.0).epsilon(1e-12));
    const JointPmf copy({2, 2}, {0.5, 0.0, 0.0, 0.5});
    CHECK(mutual_information(copy) == doctest::Approx(1.0).epsilon(1e-12));
    // BSC(0.1), uniform input: I = 1 - h(0.1)
    const JointPmf bsc({2, 2}, {0.45, 0.05, 0.05, 0.45});
    CHECK(mutual_information(bsc) == doctest::Approx(0.5310044064107188).epsilon(1e-9));
    CHECK(std::abs(mutual_information(bsc) - 0.5310) < 1e-4);
}

TEST_CASE("chain consistency and symmetry properties") {
    RandomSource rng(11, 2);
    for (int i = 0; i < 300; ++i) {
        const std::size_t da = 2 + rng.next_below(4);
        const std::size_t db = 2 + rng.next_below(4);
        const JointPmf j = random_joint(da, db, rng);
        const double hab = entropy(j);
        const double hb = entropy(j.marginal(1));
        const double ha = entropy(j.marginal(0));
        CHECK(std::abs(hab - (hb + conditional_entropy(j, 1))) < 1e-10);
        CHECK(std::abs(hab - (ha + conditional_entropy(j, 0))) < 1e-10);
        const double mi_a = ha - conditional_entropy(j, 1);
        const double mi_b = hb - conditional_entropy(j, 0);
        CHECK(std::abs(mi_a - mi_b) < 1e-10);
        CHECK(mutual_information(j) >= 0.0);
    }
}

TEST_CASE("joint marginalization") {
    // three-axis joint: marginalizing out each axis keeps valid pmfs
    RandomSource rng(3, 3);
    std::vector<double> w(2 * 3 * 2);
    for (auto& v : w) v = -std::log1p(-rng.next_double());
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    const JointPmf j({2, 3, 2}, w);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const Pmf m = j.marginal(axis);
        CHECK(m.size() == j.dims()[axis]);
        const JointPmf reduced = j.marginalize_out(axis);
        CHECK(reduced.axes() == 2);
        CHECK(entropy(reduced) <= entropy(j) + 1e-12);
    }
    // merged adjacent axes preserve total entropy
    CHECK(entropy(j.merge_adjacent(0)) == doctest::Approx(entropy(j)).epsilon(1e-12));
}

TEST_CASE("simplex grid enumeration") {
    const auto g = simplex_grid(2, 2);
    REQUIRE(g.size() == 3);
    std::set<std::pair<double, double>> got;
    for (const auto& p : g) got.insert({p[0], p[1]});
    CHECK(got.count({0.0, 1.0}) == 1);
    CHECK(got.count({0.5, 0.5}) == 1);
    CHECK(got.count({1.0, 0.0}) == 1);

    CHECK(simplex_grid(1, 17).size() == 1);
    CHECK(simplex_grid(3, 4).size() == 15);  // C(6,2)
    CHECK(simplex_grid_size(4, 10, 1u << 20) == 286);
    CHECK_THROWS_AS(simplex_grid(8, 200, 1000), BudgetExceeded);
}

TEST_CASE("simplex grid refinement contains the coarse grid") {
    for (const std::size_t dim : {2u, 3u}) {
        for (const std::size_t res : {2u, 3u, 5u}) {
            const auto coarse = simplex_grid(dim, res);
            const auto fine = simplex_grid(dim, 2 * res);
            for (const auto& p : coarse) {
                bool found = false;
                for (const auto& q : fine) {
                    bool same = true;
                    for (std::size_t i = 0; i < dim; ++i) {
                        if (std::abs(p[i] - q[i]) > 1e-15) {
                            same = false;
                            break;
                        }
                    }
                    if (same) {
                        found = true;
                        break;
                    }
                }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("point masses appear at every resolution") {
    const auto g = simplex_grid(3, 7);
    int point_masses = 0;
    for (const auto& p : g) {
        for (std::size_t i = 0; i < 3; ++i) {
            if (p[i] == 1.0) ++point_masses;
        }
    }
    CHECK(point_masses == 3);
}

TEST_CASE("sampling") {
    RandomSource rng(42, 0);
    // point mass
    const Pmf point = Pmf::point_mass(5, 2);
    for (int i = 0; i < 50; ++i) CHECK(sample(point, rng) == 2);

    // uniform binary frequencies
    const Pmf uni = Pmf::uniform(2);
    RandomSource r2(42, 1);
    std::size_t zeros = 0;
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) {
        if (sample(uni, r2) == 0) ++zeros;
    }
    const double freq = static_cast<double>(zeros) / draws;
    CHECK(freq > 0.49);
    CHECK(freq < 0.51);
}

TEST_CASE("random source replay and stream separation") {
    RandomSource a(123, 45);
    RandomSource b(123, 45);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    RandomSource c(123, 46);
    RandomSource d(123, 45);
    bool all_equal = true;
    for (int i = 0; i < 16; ++i) {
        if (c.next_u64() != d.next_u64()) all_equal = false;
    }
    CHECK_FALSE(all_equal);

    // substreams replay too
    RandomSource e = RandomSource(9, 9).substream(77, 3);
    RandomSource f = RandomSource(9, 9).substream(77, 3);
    for (int i = 0; i < 100; ++i) CHECK(e.next_u64() == f.next_u64());
    CHECK(std::string(RandomSource::kGeneratorVersion) == "splitmix64-ctr-v1");
}

TEST_CASE("uniform doubles live in [0,1)") {
    RandomSource rng(5, 5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
