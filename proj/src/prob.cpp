#include "twrc/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace twrc {

namespace {

void validate_mass(std::span<const double> probs, const char* what) {
    if (probs.empty()) {
        throw InvalidPmf(std::string(what) + ": empty alphabet");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double v = probs[i];
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidPmf(std::string(what) + ": entry " + std::to_string(i) +
                             " is " + std::to_string(v));
        }
        total += v;
    }
    if (std::abs(total - 1.0) > kMassTol) {
        throw InvalidPmf(std::string(what) + ": total mass " + std::to_string(total));
    }
}

double plogp_bits(double p) {
    if (p < kZeroMass) return 0.0;
    return -p * std::log2(p);
}

inline std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace

Pmf::Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
    validate_mass(probs_, "Pmf");
}

Pmf Pmf::uniform(std::size_t n) {
    if (n == 0) throw InvalidPmf("Pmf::uniform: empty alphabet");
    return Pmf(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Pmf Pmf::point_mass(std::size_t n, std::size_t symbol) {
    if (symbol >= n) throw InvalidPmf("Pmf::point_mass: symbol out of range");
    std::vector<double> v(n, 0.0);
    v[symbol] = 1.0;
    return Pmf(std::move(v));
}

Pmf Pmf::normalized(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw InvalidPmf("Pmf::normalized: negative or non-finite weight");
        }
        total += w;
    }
    if (total <= 0.0) throw InvalidPmf("Pmf::normalized: zero total weight");
    for (double& w : weights) w /= total;
    return Pmf(std::move(weights));
}

JointPmf::JointPmf(std::vector<std::size_t> dims, std::vector<double> probs)
    : dims_(std::move(dims)), probs_(std::move(probs)) {
    if (dims_.size() < 2 || dims_.size() > 3) {
        throw InvalidPmf("JointPmf: expected 2 or 3 axes");
    }
    std::size_t expect = 1;
    for (std::size_t d : dims_) {
        if (d == 0) throw InvalidPmf("JointPmf: zero-sized axis");
        expect *= d;
    }
    if (expect != probs_.size()) {
        throw InvalidPmf("JointPmf: dims do not match data length");
    }
    validate_mass(probs_, "JointPmf");
}

JointPmf JointPmf::product(const Pmf& a, const Pmf& b) {
    std::vector<double> probs(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            probs[i * b.size() + j] = a[i] * b[j];
        }
    }
    return JointPmf({a.size(), b.size()}, std::move(probs));
}

double JointPmf::at(std::size_t i, std::size_t j) const {
    return probs_[i * dims_[1] + j];
}

double JointPmf::at(std::size_t i, std::size_t j, std::size_t k) const {
    return probs_[(i * dims_[1] + j) * dims_[2] + k];
}

Pmf JointPmf::marginal(std::size_t axis) const {
    if (axis >= dims_.size()) throw SizeMismatch("JointPmf::marginal: axis out of range");
    std::vector<double> acc(dims_[axis], 0.0);
    // stride walk: index along `axis` recovered from the flat position
    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < dims_.size(); ++a) inner *= dims_[a];
    for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
        acc[(flat / inner) % dims_[axis]] += probs_[flat];
    }
    // Non-negative mass summing to 1 within tolerance by construction;
    // clamp tiny negative rounding is unnecessary, construct directly.
    return Pmf(std::move(acc));
}

JointPmf JointPmf::marginalize_out(std::size_t axis) const {
    if (dims_.size() != 3) throw SizeMismatch("marginalize_out: needs a 3-axis joint");
    if (axis >= 3) throw SizeMismatch("marginalize_out: axis out of range");
    std::vector<std::size_t> kept;
    for (std::size_t a = 0; a < 3; ++a) {
        if (a != axis) kept.push_back(dims_[a]);
    }
    std::vector<double> acc(kept[0] * kept[1], 0.0);
    for (std::size_t i = 0; i < dims_[0]; ++i) {
        for (std::size_t j = 0; j < dims_[1]; ++j) {
            for (std::size_t k = 0; k < dims_[2]; ++k) {
                std::size_t idx[3] = {i, j, k};
                std::size_t out = 0;
                for (std::size_t a = 0, pos = 0; a < 3; ++a) {
                    if (a == axis) continue;
                    out = out * kept[pos] + idx[a];
                    ++pos;
                }
                acc[out] += at(i, j, k);
            }
        }
    }
    return JointPmf(std::move(kept), std::move(acc));
}

JointPmf JointPmf::merge_adjacent(std::size_t first_axis) const {
    if (dims_.size() != 3 || first_axis > 1) {
        throw SizeMismatch("merge_adjacent: needs a 3-axis joint and axis 0 or 1");
    }
    // Row-major layout makes merging adjacent axes a reshape.
    std::vector<std::size_t> dims =
        first_axis == 0 ? std::vector<std::size_t>{dims_[0] * dims_[1], dims_[2]}
                        : std::vector<std::size_t>{dims_[0], dims_[1] * dims_[2]};
    return JointPmf(std::move(dims), probs_);
}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
    base_ = splitmix64_finalize(splitmix64_finalize(seed ^ 0x5851F42D4C957F2DULL) ^
                                splitmix64_finalize(stream_id + kGolden));
}

std::uint64_t RandomSource::next_u64() {
    ++counter_;
    return splitmix64_finalize(base_ + counter_ * kGolden);
}

double RandomSource::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomSource::next_below(std::uint64_t bound) {
    // Rejection-free modulo is fine here: bounds are tiny against 2^64,
    // and identical across replays either way.
    return next_u64() % bound;
}

RandomSource RandomSource::substream(std::uint64_t tag, std::uint64_t index) const {
    const std::uint64_t child =
        splitmix64_finalize(stream_ ^ splitmix64_finalize(tag + kGolden)) + index;
    return RandomSource(seed_, child);
}

double entropy(const Pmf& p) {
    double h = 0.0;
    for (double v : p.probs()) h += plogp_bits(v);
    return std::max(h, 0.0);
}

double entropy(const JointPmf& joint) {
    double h = 0.0;
    for (double v : joint.probs()) h += plogp_bits(v);
    return std::max(h, 0.0);
}

double conditional_entropy(const JointPmf& joint, std::size_t condition_on) {
    if (joint.axes() != 2) {
        throw SizeMismatch("conditional_entropy: needs a 2-axis joint");
    }
    if (condition_on > 1) {
        throw SizeMismatch("conditional_entropy: axis out of range");
    }
    const std::size_t nb = joint.dims()[condition_on];
    const std::size_t na = joint.dims()[1 - condition_on];
    double h = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        double pb = 0.0;
        for (std::size_t a = 0; a < na; ++a) {
            pb += condition_on == 1 ? joint.at(a, b) : joint.at(b, a);
        }
        if (pb < kZeroMass) continue;
        double hb = 0.0;
        for (std::size_t a = 0; a < na; ++a) {
            const double pab = condition_on == 1 ? joint.at(a, b) : joint.at(b, a);
            hb += plogp_bits(pab / pb);
        }
        h += pb * hb;
    }
    return std::max(h, 0.0);
}

double mutual_information(const JointPmf& joint) {
    if (joint.axes() != 2) {
        throw SizeMismatch("mutual_information: needs a 2-axis joint");
    }
    const double mi = entropy(joint.marginal(0)) - conditional_entropy(joint, 1);
    return std::max(mi, 0.0);
}

std::size_t simplex_grid_size(std::size_t dim, std::size_t resolution,
                              std::size_t max_points) {
    if (dim == 0) throw InvalidPmf("simplex_grid: dim must be positive");
    if (resolution == 0) throw InvalidPmf("simplex_grid: resolution must be positive");
    // C(resolution + dim - 1, dim - 1) with incremental overflow guard.
    std::size_t count = 1;
    for (std::size_t i = 1; i < dim; ++i) {
        count = count * (resolution + i) / i;  // exact: running product of binomials
        if (count > max_points) {
            throw BudgetExceeded("simplex_grid: " + std::to_string(count) +
                                 "+ grid points exceeds cap " + std::to_string(max_points));
        }
    }
    return count;
}

namespace {

void emit_compositions(std::size_t dim, std::size_t remaining, double resolution,
                       std::vector<double>& current, std::vector<Pmf>& out) {
    if (current.size() + 1 == dim) {
        current.push_back(static_cast<double>(remaining) / resolution);
        out.push_back(Pmf(current));
        current.pop_back();
        return;
    }
    for (std::size_t take = 0; take <= remaining; ++take) {
        current.push_back(static_cast<double>(take) / resolution);
        emit_compositions(dim, remaining - take, resolution, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<Pmf> simplex_grid(std::size_t dim, std::size_t resolution,
                              std::size_t max_points) {
    const std::size_t count = simplex_grid_size(dim, resolution, max_points);
    std::vector<Pmf> out;
    out.reserve(count);
    if (dim == 1) {
        out.push_back(Pmf({1.0}));
        return out;
    }
    std::vector<double> current;
    emit_compositions(dim, resolution, static_cast<double>(resolution), current, out);
    return out;
}

std::size_t sample(const Pmf& p, RandomSource& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return p.size() - 1;
}

}  // namespace twrc
