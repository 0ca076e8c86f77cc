#ifndef TWRC_PROB_HPP
#define TWRC_PROB_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "twrc/errors.hpp"

namespace twrc {

// Mass-sum tolerance for pmf validation.
inline constexpr double kMassTol = 1e-12;
// Entries below this are treated as exact zero (0*log 0 := 0).
inline constexpr double kZeroMass = 1e-15;

/// A probability mass function on the index alphabet {0, ..., size-1}.
/// Immutable once constructed; construction validates.
class Pmf {
public:
    explicit Pmf(std::vector<double> probs);

    static Pmf uniform(std::size_t n);
    static Pmf point_mass(std::size_t n, std::size_t symbol);
    /// Builds from non-negative weights, rescaling to total mass 1.
    /// Renormalization never happens implicitly anywhere else.
    static Pmf normalized(std::vector<double> weights);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const { return probs_; }

    bool operator==(const Pmf& other) const { return probs_ == other.probs_; }

private:
    std::vector<double> probs_;
};

/// Dense joint pmf over 2 or 3 finite alphabets, row-major.
class JointPmf {
public:
    JointPmf(std::vector<std::size_t> dims, std::vector<double> probs);

    static JointPmf product(const Pmf& a, const Pmf& b);

    std::size_t axes() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    const std::vector<double>& probs() const { return probs_; }

    double at(std::size_t i, std::size_t j) const;
    double at(std::size_t i, std::size_t j, std::size_t k) const;

    /// Marginal pmf of one axis.
    Pmf marginal(std::size_t axis) const;
    /// Sums one axis away; only valid on 3-axis joints.
    JointPmf marginalize_out(std::size_t axis) const;
    /// Reinterprets two adjacent axes as a single product axis.
    JointPmf merge_adjacent(std::size_t first_axis) const;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> probs_;
};

/// Counter-based deterministic random source.
///
/// Output i is the splitmix64 finalizer applied to base + (i+1)*golden,
/// where base mixes (seed, stream_id). Identical (seed, stream_id) replay
/// identical sequences; distinct stream_ids give independent streams.
/// Algorithm identifier: "splitmix64-ctr-v1" (recorded in sim reports).
class RandomSource {
public:
    RandomSource(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    /// Uniform double in [0, 1), 53 random bits.
    double next_double();
    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t next_below(std::uint64_t bound);

    /// Independent stream derived from this source's identity (not its position).
    RandomSource substream(std::uint64_t tag, std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    static constexpr const char* kGeneratorVersion = "splitmix64-ctr-v1";

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

/// Shannon entropy in bits; 0*log 0 := 0.
double entropy(const Pmf& p);
/// Joint entropy of the flattened joint, in bits.
double entropy(const JointPmf& joint);

/// H(rest | axis) for a 2-axis joint, via the conditioning sum
/// sum_b p(b) H(A | B=b).
double conditional_entropy(const JointPmf& joint, std::size_t condition_on);

/// I(A;B) for a 2-axis joint, computed as H(A) - H(A|B). Non-negative,
/// symmetric in the two axes.
double mutual_information(const JointPmf& joint);

/// Number of grid pmfs: C(resolution + dim - 1, dim - 1). Throws
/// BudgetExceeded on overflow past the cap.
std::size_t simplex_grid_size(std::size_t dim, std::size_t resolution,
                              std::size_t max_points);

/// All pmfs over `dim` symbols whose entries are multiples of 1/resolution.
/// Includes every point mass. Throws BudgetExceeded when the count passes
/// max_points.
std::vector<Pmf> simplex_grid(std::size_t dim, std::size_t resolution,
                              std::size_t max_points = 1'000'000);

/// One draw from p.
std::size_t sample(const Pmf& p, RandomSource& rng);

}  // namespace twrc

#endif
