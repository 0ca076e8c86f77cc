#include "twrc/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace twrc {

namespace {

constexpr double kCollinearTol = 1e-9;
constexpr double kCoordEq = 1e-12;

double cross(const RatePoint& o, const RatePoint& a, const RatePoint& b) {
    return (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1);
}

/// Builds the upper-right boundary chain of the downward closure of a corner
/// set. anchor_axes adds the (0, r2max) / (r1max, 0) endpoints, which for
/// rectangle-corner sets are themselves corners produced by point-mass pairs.
std::vector<CertifiedVertex> upper_right_chain(std::vector<CertifiedVertex> corners,
                                               bool anchor_axes) {
    if (corners.empty()) throw Error("upper_right_chain: no corners");

    double r1max = 0.0, r2max = 0.0;
    for (auto& c : corners) {
        c.point.r1 = std::max(c.point.r1, 0.0);
        c.point.r2 = std::max(c.point.r2, 0.0);
        r1max = std::max(r1max, c.point.r1);
        r2max = std::max(r2max, c.point.r2);
    }
    if (r1max <= kCoordEq && r2max <= kCoordEq) {
        CertifiedVertex origin = corners.front();
        origin.point = {0.0, 0.0};
        return {origin};
    }

    std::sort(corners.begin(), corners.end(), [](const auto& a, const auto& b) {
        if (a.point.r1 != b.point.r1) return a.point.r1 < b.point.r1;
        return a.point.r2 > b.point.r2;
    });

    // One survivor per abscissa cluster (keeping the cluster's largest r2),
    // then Pareto staircase extremes.
    std::vector<CertifiedVertex> staircase;
    for (const auto& c : corners) {
        if (!staircase.empty() &&
            c.point.r1 - staircase.back().point.r1 <= kCoordEq) {
            if (c.point.r2 > staircase.back().point.r2) staircase.back() = c;
            continue;
        }
        staircase.push_back(c);
    }
    std::vector<CertifiedVertex> pareto;
    double best_r2 = -1.0;
    for (auto it = staircase.rbegin(); it != staircase.rend(); ++it) {
        if (it->point.r2 > best_r2 + kCoordEq) {
            pareto.push_back(*it);
            best_r2 = it->point.r2;
        }
    }
    std::reverse(pareto.begin(), pareto.end());

    // Monotone chain, dropping non-convex and collinear interior points.
    std::vector<CertifiedVertex> hull;
    for (const auto& c : pareto) {
        while (hull.size() >= 2 &&
               cross(hull[hull.size() - 2].point, hull.back().point, c.point) >=
                   -kCollinearTol) {
            hull.pop_back();
        }
        hull.push_back(c);
    }

    if (anchor_axes) {
        if (hull.front().point.r1 > kCoordEq) {
            // The corner set contains a (0, r2max) corner from a point-mass
            // first input; find it so the endpoint stays certified.
            const CertifiedVertex* best = nullptr;
            for (const auto& c : corners) {
                if (c.point.r1 <= kCoordEq &&
                    (best == nullptr || c.point.r2 > best->point.r2)) {
                    best = &c;
                }
            }
            if (best != nullptr && best->point.r2 >= hull.front().point.r2 - kCollinearTol) {
                CertifiedVertex v = *best;
                v.point.r2 = std::max(v.point.r2, hull.front().point.r2);
                hull.insert(hull.begin(), std::move(v));
            } else {
                CertifiedVertex v = hull.front();
                v.point = {0.0, hull.front().point.r2};
                hull.insert(hull.begin(), v);
            }
        }
        if (hull.back().point.r2 > kCoordEq) {
            const CertifiedVertex* best = nullptr;
            for (const auto& c : corners) {
                if (c.point.r2 <= kCoordEq &&
                    (best == nullptr || c.point.r1 > best->point.r1)) {
                    best = &c;
                }
            }
            if (best != nullptr && best->point.r1 >= hull.back().point.r1 - kCollinearTol) {
                CertifiedVertex v = *best;
                v.point.r1 = std::max(v.point.r1, hull.back().point.r1);
                hull.push_back(std::move(v));
            } else {
                CertifiedVertex v = hull.back();
                v.point = {hull.back().point.r1, 0.0};
                hull.push_back(v);
            }
        }
    }
    return hull;
}

Pmf dirichlet_sample(std::size_t dim, RandomSource& rng) {
    std::vector<double> w(dim);
    for (auto& v : w) {
        v = -std::log1p(-rng.next_double());
    }
    return Pmf::normalized(std::move(w));
}

/// Grid count that never throws; nullopt when past the cap.
std::optional<std::size_t> grid_count(std::size_t dim, std::size_t resolution,
                                      std::size_t cap) {
    std::size_t count = 1;
    for (std::size_t i = 1; i < dim; ++i) {
        count = count * (resolution + i) / i;
        if (count > cap) return std::nullopt;
    }
    return count;
}

/// For each fixed x2 column, mass spread uniformly over one x1 per distinct
/// output maximizes H(Y0 | X2 = x2); value is log2(#distinct outputs).
std::pair<double, Pmf> best_column_input(const UplinkTable& u, std::size_t x2) {
    std::vector<std::size_t> rep;  // representative x1 per distinct y0
    std::vector<bool> seen(u.y0_size, false);
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        const std::size_t y = u(a, x2);
        if (!seen[y]) {
            seen[y] = true;
            rep.push_back(a);
        }
    }
    std::vector<double> p(u.x1_size, 0.0);
    for (std::size_t a : rep) p[a] = 1.0 / static_cast<double>(rep.size());
    return {std::log2(static_cast<double>(rep.size())), Pmf(std::move(p))};
}

std::pair<double, Pmf> best_row_input(const UplinkTable& u, std::size_t x1) {
    std::vector<std::size_t> rep;
    std::vector<bool> seen(u.y0_size, false);
    for (std::size_t b = 0; b < u.x2_size; ++b) {
        const std::size_t y = u(x1, b);
        if (!seen[y]) {
            seen[y] = true;
            rep.push_back(b);
        }
    }
    std::vector<double> p(u.x2_size, 0.0);
    for (std::size_t b : rep) p[b] = 1.0 / static_cast<double>(rep.size());
    return {std::log2(static_cast<double>(rep.size())), Pmf(std::move(p))};
}

/// Search set over product input distributions: full grid when it fits the
/// budget, seeded Dirichlet sampling otherwise. Point-mass pairs and the
/// extreme-point inputs are always present so the hull endpoints are exact.
std::vector<std::pair<Pmf, Pmf>> input_pairs(const UplinkTable& u,
                                             const SearchConfig& cfg) {
    std::vector<std::pair<Pmf, Pmf>> pairs;
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        for (std::size_t b = 0; b < u.x2_size; ++b) {
            pairs.emplace_back(Pmf::point_mass(u.x1_size, a),
                               Pmf::point_mass(u.x2_size, b));
        }
    }
    for (std::size_t b = 0; b < u.x2_size; ++b) {
        auto [val, p1] = best_column_input(u, b);
        (void)val;
        pairs.emplace_back(std::move(p1), Pmf::point_mass(u.x2_size, b));
    }
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        auto [val, p2] = best_row_input(u, a);
        (void)val;
        pairs.emplace_back(Pmf::point_mass(u.x1_size, a), std::move(p2));
    }
    // the simplex center, exact even when the grid spacing skips it
    pairs.emplace_back(Pmf::uniform(u.x1_size), Pmf::uniform(u.x2_size));

    const auto c1 = grid_count(u.x1_size, cfg.resolution, cfg.max_points);
    const auto c2 = grid_count(u.x2_size, cfg.resolution, cfg.max_points);
    const bool gridable = u.x1_size <= cfg.alphabet_cap && u.x2_size <= cfg.alphabet_cap &&
                          c1 && c2 && *c1 * *c2 <= cfg.max_points;
    if (gridable) {
        const auto g1 = simplex_grid(u.x1_size, cfg.resolution, cfg.max_points);
        const auto g2 = simplex_grid(u.x2_size, cfg.resolution, cfg.max_points);
        for (const auto& p1 : g1) {
            for (const auto& p2 : g2) {
                pairs.emplace_back(p1, p2);
            }
        }
    } else {
        RandomSource rng(cfg.seed, 0xC011EC7ULL);
        for (std::size_t i = 0; i < cfg.max_points; ++i) {
            pairs.emplace_back(dirichlet_sample(u.x1_size, rng),
                               dirichlet_sample(u.x2_size, rng));
        }
    }
    return pairs;
}

double clamp01(double v) { return std::min(std::max(v, 0.0), 1.0); }

/// sum_g p(g) H(conditional slice g) over a flattened [group][width] array
/// of joint mass.
double grouped_conditional_entropy(const std::vector<double>& mass,
                                   std::size_t groups, std::size_t width) {
    double h = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
        double pg = 0.0;
        for (std::size_t i = 0; i < width; ++i) pg += mass[g * width + i];
        if (pg < kZeroMass) continue;
        double hg = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            const double v = mass[g * width + i] / pg;
            if (v >= kZeroMass) hg -= v * std::log2(v);
        }
        h += pg * hg;
    }
    return std::max(h, 0.0);
}

}  // namespace

const char* to_string(RegionKind kind) {
    switch (kind) {
        case RegionKind::conv_r1: return "conv_r1";
        case RegionKind::r2_frontier: return "r2_frontier";
        case RegionKind::capacity: return "capacity";
        case RegionKind::r4_hull: return "r4_hull";
    }
    return "unknown";
}

RegionPolyline::RegionPolyline(RegionKind kind, std::vector<CertifiedVertex> vertices)
    : kind_(kind), vertices_(std::move(vertices)) {
    if (vertices_.empty()) throw Error("RegionPolyline: no vertices");
    for (auto& v : vertices_) {
        if (!std::isfinite(v.point.r1) || !std::isfinite(v.point.r2) ||
            v.point.r1 < -kCoordEq || v.point.r2 < -kCoordEq) {
            throw Error("RegionPolyline: invalid vertex coordinates");
        }
        v.point.r1 = std::max(v.point.r1, 0.0);
        v.point.r2 = std::max(v.point.r2, 0.0);
    }
    // Drop consecutive duplicates.
    std::vector<CertifiedVertex> cleaned;
    for (auto& v : vertices_) {
        if (!cleaned.empty() &&
            std::abs(v.point.r1 - cleaned.back().point.r1) <= kCoordEq &&
            std::abs(v.point.r2 - cleaned.back().point.r2) <= kCoordEq) {
            continue;
        }
        cleaned.push_back(std::move(v));
    }
    vertices_ = std::move(cleaned);
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
        const auto& prev = vertices_[i - 1].point;
        const auto& cur = vertices_[i].point;
        if (cur.r1 < prev.r1 - kCoordEq || cur.r2 > prev.r2 + kCoordEq) {
            throw Error("RegionPolyline: boundary is not a monotone staircase");
        }
    }
    for (std::size_t i = 2; i < vertices_.size(); ++i) {
        if (cross(vertices_[i - 2].point, vertices_[i - 1].point, vertices_[i].point) >
            kCollinearTol) {
            throw Error("RegionPolyline: boundary is not convex");
        }
    }
    const bool axis_kind = kind_ == RegionKind::conv_r1 || kind_ == RegionKind::capacity ||
                           kind_ == RegionKind::r4_hull;
    if (axis_kind && !degenerate()) {
        if (vertices_.front().point.r1 > kCollinearTol ||
            vertices_.back().point.r2 > kCollinearTol) {
            throw Error("RegionPolyline: endpoints must touch the axes");
        }
    }
}

double RegionPolyline::max_r1() const { return vertices_.back().point.r1; }

double RegionPolyline::max_r2() const { return vertices_.front().point.r2; }

double RegionPolyline::boundary_r2(double r1) const {
    if (r1 > max_r1() + kCoordEq) return -std::numeric_limits<double>::infinity();
    r1 = std::max(r1, 0.0);
    if (r1 <= vertices_.front().point.r1) return vertices_.front().point.r2;
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
        const auto& a = vertices_[i - 1].point;
        const auto& b = vertices_[i].point;
        if (r1 <= b.r1 + kCoordEq) {
            if (b.r1 - a.r1 <= kCoordEq) return a.r2;  // vertical edge: top end
            const double t = clamp01((r1 - a.r1) / (b.r1 - a.r1));
            return a.r2 + t * (b.r2 - a.r2);
        }
    }
    return vertices_.back().point.r2;
}

bool RegionPolyline::degenerate() const {
    return vertices_.size() == 1 && vertices_.front().point.r1 <= kCoordEq &&
           vertices_.front().point.r2 <= kCoordEq;
}

RatePoint uplink_rectangle(const Pmf& p1, const Pmf& p2, const UplinkTable& u) {
    const JointPmf joint = uplink_joint(p1, p2, u);
    const double h_given_x2 = conditional_entropy(joint.marginalize_out(0), 0);
    const double h_given_x1 = conditional_entropy(joint.marginalize_out(1), 0);
    return {h_given_x2, h_given_x1};
}

RatePoint general_rectangle(const Pmf& p1, const Pmf& p2, const StochasticUplink& u) {
    const JointPmf joint = uplink_joint(p1, p2, u);
    // I(X1;Y0|X2) = H(Y0|X2) - H(Y0|X1,X2), and symmetrically.
    const double h_given_both = conditional_entropy(joint.merge_adjacent(0), 0);
    const double h_given_x2 = conditional_entropy(joint.marginalize_out(0), 0);
    const double h_given_x1 = conditional_entropy(joint.marginalize_out(1), 0);
    return {std::max(h_given_x2 - h_given_both, 0.0),
            std::max(h_given_x1 - h_given_both, 0.0)};
}

RegionPolyline conv_r1(const UplinkTable& u, const SearchConfig& cfg) {
    std::vector<CertifiedVertex> corners;
    for (auto& [p1, p2] : input_pairs(u, cfg)) {
        const RatePoint corner = uplink_rectangle(p1, p2, u);
        corners.push_back({corner, Certificate{p1, p2, std::nullopt}});
    }
    return RegionPolyline(RegionKind::conv_r1, upper_right_chain(std::move(corners), true));
}

ExtremePoints extreme_points(const UplinkTable& u) {
    ExtremePoints out{
        {{0.0, 0.0},
         Certificate{Pmf::point_mass(u.x1_size, 0), Pmf::point_mass(u.x2_size, 0),
                     std::nullopt}},
        {},
        {}};
    double best1 = -1.0;
    for (std::size_t b = 0; b < u.x2_size; ++b) {
        auto [val, p1] = best_column_input(u, b);
        if (val > best1) {
            best1 = val;
            out.r1_max = {{val, 0.0},
                          Certificate{std::move(p1), Pmf::point_mass(u.x2_size, b),
                                      std::nullopt}};
        }
    }
    double best2 = -1.0;
    for (std::size_t a = 0; a < u.x1_size; ++a) {
        auto [val, p2] = best_row_input(u, a);
        if (val > best2) {
            best2 = val;
            out.r2_max = {{0.0, val},
                          Certificate{Pmf::point_mass(u.x1_size, a), std::move(p2),
                                      std::nullopt}};
        }
    }
    return out;
}

TimeShare decompose_time_sharing(const RatePoint& target, const RegionPolyline& region,
                                 const UplinkTable& u, double tol) {
    if (region.kind() != RegionKind::conv_r1) {
        throw Error("decompose_time_sharing: region must be of kind conv_r1");
    }
    if (!region_contains(region, target, tol)) {
        throw PointOutsideRegion("decompose target (" + std::to_string(target.r1) + "," +
                                 std::to_string(target.r2) + ") is outside the region");
    }
    const RatePoint t{std::max(target.r1, 0.0), std::max(target.r2, 0.0)};
    const auto& verts = region.vertices();

    const auto component = [&](double w, const CertifiedVertex& v) {
        return TimeShareComponent{w, *v.cert.p1, *v.cert.p2};
    };
    const Pmf origin_p1 = Pmf::point_mass(u.x1_size, 0);
    const Pmf origin_p2 = Pmf::point_mass(u.x2_size, 0);

    TimeShare out;
    // Vertex hit: a single rectangle suffices.
    for (const auto& v : verts) {
        if (std::abs(v.point.r1 - t.r1) <= 1e-12 && std::abs(v.point.r2 - t.r2) <= 1e-12) {
            out.components.push_back(component(1.0, v));
            return out;
        }
    }
    if (t.r1 <= 1e-15 && t.r2 <= 1e-15) {
        out.components.push_back({1.0, origin_p1, origin_p2});
        return out;
    }

    // Axis targets mix one extreme vertex with the origin rectangle.
    if (t.r1 <= 1e-15 || t.r2 <= 1e-15) {
        const CertifiedVertex& extreme = t.r1 <= 1e-15 ? verts.front() : verts.back();
        const double alpha = t.r1 <= 1e-15 ? t.r2 / extreme.point.r2
                                           : t.r1 / extreme.point.r1;
        const double capped = std::min(alpha, 1.0);
        out.components.push_back(component(capped, extreme));
        if (1.0 - capped > 1e-12) {
            out.components.push_back({1.0 - capped, origin_p1, origin_p2});
        }
        return out;
    }

    // Boundary point hit by the ray from the origin through the target, then
    // the target as a mix of that point and the origin rectangle.
    double scale = -1.0;   // u* with boundary point = u* . t
    double seg_mu = 0.0;   // position inside the hit segment
    std::size_t seg = 0;
    for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
        const auto& a = verts[i].point;
        const auto& b = verts[i + 1].point;
        // Solve s*t = a + mu*(b - a).
        const double d1 = b.r1 - a.r1;
        const double d2 = b.r2 - a.r2;
        const double det = -t.r1 * d2 + t.r2 * d1;
        if (std::abs(det) < 1e-12) continue;
        const double s = (a.r2 * d1 - a.r1 * d2) / det;
        const double mu = (t.r1 * a.r2 - t.r2 * a.r1) / det;
        if (mu >= -1e-9 && mu <= 1.0 + 1e-9 && s > 0.0) {
            scale = s;
            seg = i;
            seg_mu = clamp01(mu);
            break;
        }
    }
    if (scale < 0.0) {
        // Numerically on the boundary but between probes; nearest vertex wins.
        std::size_t best = 0;
        double bestd = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < verts.size(); ++i) {
            const double d = std::hypot(verts[i].point.r1 - t.r1, verts[i].point.r2 - t.r2);
            if (d < bestd) {
                bestd = d;
                best = i;
            }
        }
        out.components.push_back(component(1.0, verts[best]));
        return out;
    }

    const double alpha = std::min(1.0 / scale, 1.0);  // weight on the boundary point
    const double w_first = alpha * (1.0 - seg_mu);
    const double w_second = seg < verts.size() - 1 ? alpha * seg_mu : 0.0;
    const double w_origin = 1.0 - alpha;
    if (w_first > 1e-12) out.components.push_back(component(w_first, verts[seg]));
    if (w_second > 1e-12) out.components.push_back(component(w_second, verts[seg + 1]));
    if (w_origin > 1e-12) out.components.push_back({w_origin, origin_p1, origin_p2});
    if (out.components.empty()) out.components.push_back(component(1.0, verts[seg]));

    // Renormalize the tiny drop from pruning near-zero weights.
    double total = 0.0;
    for (const auto& c : out.components) total += c.weight;
    for (auto& c : out.components) c.weight /= total;
    return out;
}

namespace {

struct FrontierPoint {
    double i_y2;  // bounds R1
    double i_y1;  // bounds R2
    Pmf p0;
};

/// Weighted-objective ascent: alternates the exact reverse-channel /
/// input-distribution maximizations of the scalarized problem
/// lambda*I(X0;Y2) + (1-lambda)*I(X0;Y1); concave, so the interior start
/// reaches the global optimum.
FrontierPoint maximize_weighted(const DownlinkChannel& d, double lambda,
                                const SweepConfig& cfg) {
    const std::size_t nx = d.x0_size;
    const auto w1 = d.leg1();
    const auto w2 = d.leg2();

    const auto kl_terms = [&](const std::vector<double>& p, std::vector<double>& a) {
        std::vector<double> q1(d.y1_size, 0.0), q2(d.y2_size, 0.0);
        for (std::size_t x = 0; x < nx; ++x) {
            for (std::size_t y = 0; y < d.y1_size; ++y) q1[y] += p[x] * w1[x * d.y1_size + y];
            for (std::size_t y = 0; y < d.y2_size; ++y) q2[y] += p[x] * w2[x * d.y2_size + y];
        }
        for (std::size_t x = 0; x < nx; ++x) {
            double d1 = 0.0, d2 = 0.0;
            for (std::size_t y = 0; y < d.y1_size; ++y) {
                const double wxy = w1[x * d.y1_size + y];
                if (wxy >= kZeroMass && q1[y] >= kZeroMass) {
                    d1 += wxy * std::log2(wxy / q1[y]);
                }
            }
            for (std::size_t y = 0; y < d.y2_size; ++y) {
                const double wxy = w2[x * d.y2_size + y];
                if (wxy >= kZeroMass && q2[y] >= kZeroMass) {
                    d2 += wxy * std::log2(wxy / q2[y]);
                }
            }
            a[2 * x] = d1;
            a[2 * x + 1] = d2;
        }
    };

    std::vector<std::vector<double>> starts;
    starts.push_back(std::vector<double>(nx, 1.0 / static_cast<double>(nx)));
    for (std::size_t s = 0; s < nx; ++s) {
        std::vector<double> p(nx, 0.05 / static_cast<double>(nx));
        p[s] += 0.95;
        double total = 0.0;
        for (double v : p) total += v;
        for (double& v : p) v /= total;
        starts.push_back(std::move(p));
    }

    double best_obj = -1.0;
    std::vector<double> best_p;
    std::vector<double> a(2 * nx);
    for (auto& p : starts) {
        for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
            kl_terms(p, a);
            // p'(x) proportional to p(x) * 2^(lambda*D2 + (1-lambda)*D1)
            double shift = -std::numeric_limits<double>::infinity();
            std::vector<double> lg(nx, -std::numeric_limits<double>::infinity());
            for (std::size_t x = 0; x < nx; ++x) {
                if (p[x] < kZeroMass) continue;
                lg[x] = std::log2(p[x]) + lambda * a[2 * x + 1] + (1.0 - lambda) * a[2 * x];
                shift = std::max(shift, lg[x]);
            }
            double total = 0.0;
            std::vector<double> next(nx, 0.0);
            for (std::size_t x = 0; x < nx; ++x) {
                if (lg[x] == -std::numeric_limits<double>::infinity()) continue;
                next[x] = std::exp2(lg[x] - shift);
                total += next[x];
            }
            double delta = 0.0;
            for (std::size_t x = 0; x < nx; ++x) {
                next[x] /= total;
                delta = std::max(delta, std::abs(next[x] - p[x]));
            }
            p.swap(next);
            if (delta < cfg.tolerance) break;
        }
        kl_terms(p, a);
        double i1 = 0.0, i2 = 0.0;
        for (std::size_t x = 0; x < nx; ++x) {
            i1 += p[x] * a[2 * x];
            i2 += p[x] * a[2 * x + 1];
        }
        const double obj = lambda * i2 + (1.0 - lambda) * i1;
        if (obj > best_obj) {
            best_obj = obj;
            best_p = p;
        }
    }

    const Pmf p0 = Pmf::normalized(std::move(best_p));
    const auto [j1, j2] = downlink_joints(p0, d);
    return {mutual_information(j2), mutual_information(j1), p0};
}

}  // namespace

RegionPolyline r2_frontier(const DownlinkChannel& d, const SweepConfig& cfg) {
    if (cfg.lambda_steps < 2) throw BudgetExceeded("r2_frontier: need at least 2 sweep steps");
    std::vector<CertifiedVertex> points;
    for (std::size_t k = 0; k < cfg.lambda_steps; ++k) {
        double lambda = static_cast<double>(k) / static_cast<double>(cfg.lambda_steps - 1);
        // Nudged endpoints act as lexicographic tie-breaks, so weakly
        // dominated maximizers of a single coordinate are not kept.
        lambda = std::min(std::max(lambda, 1e-9), 1.0 - 1e-9);
        FrontierPoint fp = maximize_weighted(d, lambda, cfg);
        points.push_back({{fp.i_y2, fp.i_y1},
                          Certificate{std::nullopt, std::nullopt, std::move(fp.p0)}});
    }
    return RegionPolyline(RegionKind::r2_frontier,
                          upper_right_chain(std::move(points), false));
}

namespace {

Certificate merge_certs(const Certificate& a, const Certificate& b) {
    Certificate out = a;
    if (!out.p1 && b.p1) out.p1 = b.p1;
    if (!out.p2 && b.p2) out.p2 = b.p2;
    if (!out.p0 && b.p0) out.p0 = b.p0;
    return out;
}

/// Certificate of the vertex governing abscissa r1 on the chain (left
/// endpoint of the covering segment).
const CertifiedVertex& covering_vertex(const RegionPolyline& r, double r1) {
    const auto& v = r.vertices();
    for (std::size_t i = v.size(); i-- > 0;) {
        if (v[i].point.r1 <= r1 + kCoordEq) return v[i];
    }
    return v.front();
}

}  // namespace

RegionPolyline intersect_regions(const RegionPolyline& a, const RegionPolyline& b) {
    if (a.degenerate() || b.degenerate()) {
        return RegionPolyline(RegionKind::capacity,
                              {CertifiedVertex{{0.0, 0.0}, Certificate{}}});
    }
    const double end = std::min(a.max_r1(), b.max_r1());

    std::vector<double> xs{0.0, end};
    for (const auto& v : a.vertices()) {
        if (v.point.r1 < end) xs.push_back(v.point.r1);
    }
    for (const auto& v : b.vertices()) {
        if (v.point.r1 < end) xs.push_back(v.point.r1);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double u, double v) { return std::abs(u - v) <= kCoordEq; }),
             xs.end());

    std::vector<CertifiedVertex> verts;
    const auto emit = [&](double x, double y, const Certificate& cert) {
        verts.push_back({{x, std::max(y, 0.0)}, cert});
    };

    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double fa = a.boundary_r2(x);
        const double fb = b.boundary_r2(x);
        Certificate cert;
        if (fa <= fb + kCoordEq) cert = merge_certs(cert, covering_vertex(a, x).cert);
        if (fb <= fa + kCoordEq) cert = merge_certs(cert, covering_vertex(b, x).cert);
        emit(x, std::min(fa, fb), cert);

        // Crossing strictly inside the next interval.
        if (i + 1 < xs.size()) {
            const double xr = xs[i + 1];
            const double dl = fa - fb;
            const double dr = a.boundary_r2(xr) - b.boundary_r2(xr);
            if ((dl > kCoordEq && dr < -kCoordEq) || (dl < -kCoordEq && dr > kCoordEq)) {
                const double denom = dl - dr;
                if (std::abs(denom) > 1e-12) {
                    const double xc = x + dl * (xr - x) / denom;
                    if (xc > x + kCoordEq && xc < xr - kCoordEq) {
                        emit(xc, a.boundary_r2(xc),
                             merge_certs(covering_vertex(a, xc).cert,
                                         covering_vertex(b, xc).cert));
                    }
                }
            }
        }
    }

    // Close onto the r1 axis; the constraining chain's last vertex witnesses it.
    if (verts.back().point.r2 > kCoordEq) {
        const Certificate cert = a.max_r1() <= b.max_r1() ? a.vertices().back().cert
                                                          : b.vertices().back().cert;
        emit(end, 0.0, cert);
    }

    // Convexity cleanup of floating-point jitter on the min-envelope.
    std::vector<CertifiedVertex> hull;
    for (auto& v : verts) {
        while (hull.size() >= 2 &&
               cross(hull[hull.size() - 2].point, hull.back().point, v.point) >
                   kCollinearTol / 2) {
            hull.pop_back();
        }
        hull.push_back(std::move(v));
    }
    return RegionPolyline(RegionKind::capacity, std::move(hull));
}

RegionPolyline capacity_region(const ChannelSpec& spec, const SearchConfig& search,
                               const SweepConfig& sweep) {
    if (!spec.deterministic_uplink()) {
        throw NotDeterministic(
            "capacity_region applies to deterministic uplinks only; this uplink is noisy");
    }
    const RegionPolyline up = conv_r1(spec.uplink_table(), search);
    const RegionPolyline down = r2_frontier(spec.downlink, sweep);
    return intersect_regions(up, down);
}

bool region_contains(const RegionPolyline& region, const RatePoint& p, double tol) {
    if (p.r1 < -tol || p.r2 < -tol) return false;
    if (p.r1 > region.max_r1() + tol) return false;
    const double cap = region.boundary_r2(std::min(p.r1, region.max_r1()));
    return p.r2 <= cap + tol;
}

CfInput CfInput::identity_quantizer(const Pmf& p1, const Pmf& p2, const Pmf& p0,
                                    std::size_t y0_size) {
    std::vector<Pmf> identity;
    identity.reserve(y0_size);
    for (std::size_t y = 0; y < y0_size; ++y) {
        identity.push_back(Pmf::point_mass(y0_size, y));
    }
    return CfInput{Pmf({1.0}), {p1}, {p2}, std::move(identity), p0};
}

CfEvaluation cf_evaluate(const CfInput& cf, const StochasticUplink& u,
                         const DownlinkChannel& d, double delta) {
    const std::size_t nq = cf.q_pmf.size();
    if (nq > 4) {
        throw CardinalityViolation("cf_evaluate: |Q| = " + std::to_string(nq) +
                                   " exceeds the bound |Q| <= 4");
    }
    const std::size_t ny0 = u.y0_size;
    if (cf.y0hat_given_y0.size() != ny0) {
        throw SizeMismatch("cf_evaluate: quantizer must have one row per y0 symbol");
    }
    const std::size_t nyh = cf.y0hat_size();
    for (const auto& row : cf.y0hat_given_y0) {
        if (row.size() != nyh) {
            throw SizeMismatch("cf_evaluate: ragged quantizer rows");
        }
    }
    if (nyh > ny0 + 3) {
        throw CardinalityViolation("cf_evaluate: |Y0hat| = " + std::to_string(nyh) +
                                   " exceeds the bound |Y0| + 3 = " +
                                   std::to_string(ny0 + 3));
    }
    if (cf.x1_given_q.size() != nq || cf.x2_given_q.size() != nq) {
        throw SizeMismatch("cf_evaluate: need one input pmf per q symbol");
    }
    const std::size_t nx1 = u.x1_size;
    const std::size_t nx2 = u.x2_size;
    for (const auto& p : cf.x1_given_q) {
        if (p.size() != nx1) throw SizeMismatch("cf_evaluate: x1 pmf size mismatch");
    }
    for (const auto& p : cf.x2_given_q) {
        if (p.size() != nx2) throw SizeMismatch("cf_evaluate: x2 pmf size mismatch");
    }

    // Accumulate the factored joint p(q)p(x1|q)p(x2|q)p*(y0|x1,x2)p(yh|y0)
    // into the conditioning groups the rate and constraint terms need.
    std::vector<double> by_x2q(nx2 * nq * nyh, 0.0);
    std::vector<double> by_x1q(nx1 * nq * nyh, 0.0);
    std::vector<double> by_x1x2q(nx1 * nx2 * nq * nyh, 0.0);
    std::vector<double> by_y0(ny0 * nyh, 0.0);
    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t a = 0; a < nx1; ++a) {
            for (std::size_t b = 0; b < nx2; ++b) {
                const double w0 = cf.q_pmf[q] * cf.x1_given_q[q][a] * cf.x2_given_q[q][b];
                if (w0 < kZeroMass) continue;
                for (std::size_t y = 0; y < ny0; ++y) {
                    const double w = w0 * u.at(a, b, y);
                    if (w < kZeroMass) continue;
                    for (std::size_t yh = 0; yh < nyh; ++yh) {
                        const double m = w * cf.y0hat_given_y0[y][yh];
                        if (m < kZeroMass) continue;
                        by_x2q[(b * nq + q) * nyh + yh] += m;
                        by_x1q[(a * nq + q) * nyh + yh] += m;
                        by_x1x2q[((a * nx2 + b) * nq + q) * nyh + yh] += m;
                        by_y0[y * nyh + yh] += m;
                    }
                }
            }
        }
    }

    const double h_x2q = grouped_conditional_entropy(by_x2q, nx2 * nq, nyh);
    const double h_x1q = grouped_conditional_entropy(by_x1q, nx1 * nq, nyh);
    const double h_all = grouped_conditional_entropy(by_x1x2q, nx1 * nx2 * nq, nyh);
    const double h_y0 = grouped_conditional_entropy(by_y0, ny0, nyh);

    const auto [j1, j2] = downlink_joints(cf.x0_pmf, d);
    const double i_y1 = mutual_information(j1);
    const double i_y2 = mutual_information(j2);

    CfEvaluation out;
    out.rates = {std::max(h_x2q - h_all, 0.0), std::max(h_x1q - h_all, 0.0)};
    out.slack = {i_y1 - (h_x1q - h_y0), i_y2 - (h_x2q - h_y0)};
    out.feasible = out.slack.first > delta && out.slack.second > delta;
    return out;
}

CfEvaluation cf_evaluate(const CfInput& cf, const UplinkTable& u,
                         const DownlinkChannel& d, double delta) {
    return cf_evaluate(cf, lift(u), d, delta);
}

RatePoint r4_point(const Pmf& p1, const Pmf& p2, const Pmf& p0, const ChannelSpec& spec) {
    const UplinkTable table = spec.uplink_table();
    const RatePoint rect = uplink_rectangle(p1, p2, table);
    const auto [j1, j2] = downlink_joints(p0, spec.downlink);
    const double i_y1 = mutual_information(j1);
    const double i_y2 = mutual_information(j2);
    return {std::min(rect.r1, i_y2), std::min(rect.r2, i_y1)};
}

RegionPolyline r4_hull(const ChannelSpec& spec, const SearchConfig& cfg,
                       const SweepConfig& sweep) {
    const UplinkTable table = spec.uplink_table();
    std::vector<Pmf> relay_inputs{Pmf::uniform(spec.downlink.x0_size)};
    const RegionPolyline frontier = r2_frontier(spec.downlink, sweep);
    for (const auto& v : frontier.vertices()) {
        if (v.cert.p0) relay_inputs.push_back(*v.cert.p0);
    }
    std::vector<CertifiedVertex> points;
    for (auto& [p1, p2] : input_pairs(table, cfg)) {
        for (const auto& p0 : relay_inputs) {
            points.push_back(
                {r4_point(p1, p2, p0, spec), Certificate{p1, p2, p0}});
        }
    }
    return RegionPolyline(RegionKind::r4_hull, upper_right_chain(std::move(points), true));
}

}  // namespace twrc
