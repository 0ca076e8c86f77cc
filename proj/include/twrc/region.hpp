#ifndef TWRC_REGION_HPP
#define TWRC_REGION_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twrc/channel.hpp"
#include "twrc/prob.hpp"

namespace twrc {

/// A rate pair in bits per channel use.
struct RatePoint {
    double r1 = 0.0;
    double r2 = 0.0;
};

/// Input distributions witnessing a boundary point: (p1, p2) on the uplink
/// side, p0 on the downlink side; intersection crossings carry both.
struct Certificate {
    std::optional<Pmf> p1;
    std::optional<Pmf> p2;
    std::optional<Pmf> p0;
};

struct CertifiedVertex {
    RatePoint point;
    Certificate cert;
};

enum class RegionKind { conv_r1, r2_frontier, capacity, r4_hull };

const char* to_string(RegionKind kind);

/// A downward-closed convex rate region, represented by the vertices of its
/// upper-right boundary: r1 non-decreasing, r2 non-increasing, convex turns.
/// The region is the downward closure of the polyline.
class RegionPolyline {
public:
    RegionPolyline(RegionKind kind, std::vector<CertifiedVertex> vertices);

    RegionKind kind() const { return kind_; }
    const std::vector<CertifiedVertex>& vertices() const { return vertices_; }

    double max_r1() const;
    double max_r2() const;
    /// Largest r2 in the region at abscissa r1 (the upper envelope).
    /// r1 past max_r1() yields -infinity.
    double boundary_r2(double r1) const;
    /// Degenerate single-point region {(0,0)}.
    bool degenerate() const;

private:
    RegionKind kind_;
    std::vector<CertifiedVertex> vertices_;
};

struct SearchConfig {
    std::size_t resolution = 64;       // simplex grid spacing per input
    std::size_t max_points = 1'000'000;  // grid cap; beyond it, seeded sampling
    std::size_t alphabet_cap = 16;     // largest alphabet accepted for search
    std::uint64_t seed = 1;            // drives the sampling fallback
};

struct SweepConfig {
    std::size_t lambda_steps = 257;
    std::size_t max_iterations = 5000;
    double tolerance = 1e-13;
};

/// (H(Y0|X2), H(Y0|X1)) for a deterministic uplink under p1 x p2. Equals
/// the general conditional-mutual-information rectangle for such uplinks.
RatePoint uplink_rectangle(const Pmf& p1, const Pmf& p2, const UplinkTable& u);

/// (I(X1;Y0|X2), I(X2;Y0|X1)) for an arbitrary uplink under p1 x p2.
RatePoint general_rectangle(const Pmf& p1, const Pmf& p2, const StochasticUplink& u);

/// Convex hull of the rectangle corners over product input distributions,
/// as an upper-boundary polyline with (p1, p2) certificates. An inner
/// approximation that only grows under grid refinement.
RegionPolyline conv_r1(const UplinkTable& u, const SearchConfig& cfg = {});

struct ExtremePoints {
    CertifiedVertex r0;      // both inputs fixed: the origin rectangle
    CertifiedVertex r1_max;  // largest r1, second coordinate 0
    CertifiedVertex r2_max;  // largest r2, first coordinate 0
};

/// Exact extreme points of the hull: r1_max maximizes H(Y0 | X2 = x2) over
/// the fixed symbol x2 and p(x1); certificates are (p(x1), point mass).
ExtremePoints extreme_points(const UplinkTable& u);

struct TimeShareComponent {
    double weight;
    Pmf p1;
    Pmf p2;
};

/// At most 3 weighted input pairs whose rectangle corners average to a target.
struct TimeShare {
    std::vector<TimeShareComponent> components;
};

/// Expresses a point of the hull as a weighted average of at most three
/// certified rectangle corners: boundary points need two, interior points
/// add the origin rectangle. Throws PointOutsideRegion.
TimeShare decompose_time_sharing(const RatePoint& target, const RegionPolyline& region,
                                 const UplinkTable& u, double tol = 1e-9);

/// Pareto frontier of {(I(X0;Y2), I(X0;Y1))} over p(x0), traced by
/// lambda-scalarization with an alternating-maximization inner solver,
/// each vertex certified by its p(x0).
RegionPolyline r2_frontier(const DownlinkChannel& d, const SweepConfig& cfg = {});

/// Upper boundary of the intersection of two downward-closed convex regions.
/// Vertices inherit certificates from whichever input constrains them;
/// crossing points carry both.
RegionPolyline intersect_regions(const RegionPolyline& a, const RegionPolyline& b);

/// conv_r1 intersected with the downlink frontier. Requires a deterministic
/// uplink; throws NotDeterministic otherwise.
RegionPolyline capacity_region(const ChannelSpec& spec, const SearchConfig& search = {},
                               const SweepConfig& sweep = {});

/// Membership in the downward closure, boundary up to tol.
bool region_contains(const RegionPolyline& region, const RatePoint& p, double tol);

/// Compress-forward evaluation input. Cardinality bounds: |Q| <= 4 and
/// |Y0hat| <= |Y0| + 3.
struct CfInput {
    Pmf q_pmf;
    std::vector<Pmf> x1_given_q;      // one pmf over X1 per q
    std::vector<Pmf> x2_given_q;      // one pmf over X2 per q
    std::vector<Pmf> y0hat_given_y0;  // one pmf over Y0hat per y0
    Pmf x0_pmf;

    std::size_t y0hat_size() const { return y0hat_given_y0.front().size(); }

    /// Y0hat = Y0 exactly, degenerate Q: the quantizer-free operating point.
    static CfInput identity_quantizer(const Pmf& p1, const Pmf& p2, const Pmf& p0,
                                      std::size_t y0_size);
};

struct CfEvaluation {
    RatePoint rates;                  // (I(X1;Y0hat|X2,Q), I(X2;Y0hat|X1,Q))
    bool feasible;                    // both constraint margins exceed delta
    std::pair<double, double> slack;  // margins of the two forwarding constraints
};

CfEvaluation cf_evaluate(const CfInput& cf, const StochasticUplink& u,
                         const DownlinkChannel& d, double delta = 0.0);
CfEvaluation cf_evaluate(const CfInput& cf, const UplinkTable& u,
                         const DownlinkChannel& d, double delta = 0.0);

/// Componentwise min of the uplink rectangle and the downlink pair
/// (I(X0;Y2), I(X0;Y1)). Requires a deterministic uplink.
RatePoint r4_point(const Pmf& p1, const Pmf& p2, const Pmf& p0, const ChannelSpec& spec);

/// Hull of r4_point over the conv_r1 search grid with p0 swept alongside;
/// approximates the simpler scheme's achievable region.
RegionPolyline r4_hull(const ChannelSpec& spec, const SearchConfig& cfg = {},
                       const SweepConfig& sweep = {});

}  // namespace twrc

#endif
