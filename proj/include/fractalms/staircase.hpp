#ifndef FRACTALMS_STAIRCASE_HPP
#define FRACTALMS_STAIRCASE_HPP

#include "fractalms/curve.hpp"
#include "fractalms/errors.hpp"
#include "fractalms/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace fractalms {

/// Thresholds shared by every limit classification in the library.
struct LimitThresholds {
    double divergence = 1e6;
    double zero = 1e-9;
    double rtol = 1e-4;
};

namespace detail {

inline void check_interval(const FractalCurve& curve, double a, double b)
{
    if (!(a < b))
        throw domain_error("interval requires a < b");
    if (!curve.contains(a) || !curve.contains(b))
        throw domain_error("interval lies outside the curve domain");
}

/// Sum of |w(t_{i+1}) - w(t_i)|^alpha over consecutive points, left to right.
template <class Points>
double chord_power_sum(const FractalCurve& curve, const Points& pts, double alpha)
{
    double sum = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        sum += std::pow(curve.chord(pts[i - 1], pts[i]), alpha);
    return sum;
}

/// Points of the domain grid with `cells` equal cells that fall inside (a, b), with a and b added.
inline std::vector<double> grid_points(const FractalCurve& curve, double a, double b, double cells)
{
    const double span = curve.b() - curve.a();
    const double step = span / cells;
    std::vector<double> pts{a};
    auto i = static_cast<long long>(std::floor((a - curve.a()) / step)) + 1;
    for (;; ++i) {
        const double t = curve.a() + span * static_cast<double>(i) / cells;
        if (t >= b)
            break;
        if (t > a)
            pts.push_back(t);
    }
    pts.push_back(b);
    return pts;
}

/// Level-j 4-adic lattice of the curve domain trimmed to [a, b].
inline std::vector<double> lattice_points(const FractalCurve& curve, double a, double b, int level)
{
    return grid_points(curve, a, b, std::pow(4.0, level));
}

inline double max_gap(const std::vector<double>& pts)
{
    double m = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        m = std::max(m, pts[i] - pts[i - 1]);
    return m;
}

/// Finest component count we allow for a curve with no resolution floor.
inline constexpr double exact_curve_max_components = 1048576.0; // 2^20

struct Candidate {
    double mesh;
    double sigma;
};

/// Dyadic grids of the curve domain trimmed to [a, b] (these include every
/// 4-adic lattice), no finer than the curve's resolution, with their
/// sigma^alpha values.
inline std::vector<Candidate> candidate_subdivisions(const FractalCurve& curve, double a, double b, double alpha)
{
    const double norm = lanczos_gamma(alpha + 1.0);
    const double res = curve.resolution();
    const double span = curve.b() - curve.a();
    const double floor_step = res > 0.0 ? res * (1.0 - 1e-9) : span / exact_curve_max_components;
    std::vector<Candidate> out;
    for (double cells = 1.0; span / cells >= floor_step; cells *= 2.0) {
        const auto pts = grid_points(curve, a, b, cells);
        out.push_back({max_gap(pts), chord_power_sum(curve, pts, alpha) / norm});
    }
    return out;
}

inline double min_over_mesh(const std::vector<Candidate>& cands, double delta)
{
    double best = std::numeric_limits<double>::infinity();
    double finest_mesh = std::numeric_limits<double>::infinity();
    double finest_sigma = 0.0;
    for (const auto& c : cands) {
        if (c.mesh <= delta * (1.0 + 1e-12))
            best = std::min(best, c.sigma);
        if (c.mesh < finest_mesh) {
            finest_mesh = c.mesh;
            finest_sigma = c.sigma;
        }
    }
    // Below the resolution floor the polyline is straight; report the finest faithful value.
    return std::isfinite(best) ? best : finest_sigma;
}

} // namespace detail

/// sigma^alpha[F, P] = sum |w(t_{i+1}) - w(t_i)|^alpha / Gamma(alpha + 1).
inline double sigma_alpha(const FractalCurve& curve, const Subdivision& sub, double alpha)
{
    if (!(alpha > 0.0))
        throw domain_error("alpha must be positive");
    if (!curve.contains(sub.front()) || !curve.contains(sub.back()))
        throw domain_error("subdivision lies outside the curve domain");
    return detail::chord_power_sum(curve, sub.points(), alpha) / lanczos_gamma(alpha + 1.0);
}

/// Coarse-grained mass: the minimum of sigma^alpha over the dyadic and 4-adic
/// grid subdivisions of [a, b] with mesh <= delta.
inline double coarse_mass(const FractalCurve& curve, double a, double b, double alpha, double delta)
{
    detail::check_interval(curve, a, b);
    if (!(delta > 0.0))
        throw domain_error("delta must be positive");
    if (!(alpha > 0.0))
        throw domain_error("alpha must be positive");
    return detail::min_over_mesh(detail::candidate_subdivisions(curve, a, b, alpha), delta);
}

enum class LimitKind { finite, divergent, zero };

inline const char* to_string(LimitKind k)
{
    switch (k) {
    case LimitKind::finite: return "finite";
    case LimitKind::divergent: return "divergent";
    case LimitKind::zero: return "zero";
    }
    return "?";
}

struct MassLadderStep {
    double delta;
    double coarse;
    double scale_sigma;  // sigma^alpha of the 4-adic lattice subdivision at this delta
};

struct MassFunctionResult {
    LimitKind kind;
    double estimate;                   // +inf when divergent, 0 when zero
    double rate;                       // geometric growth factor per 4x refinement
    std::vector<MassLadderStep> sequence;
};

/// Mass function gamma^alpha(F, a, b) by a delta_k = |b - a| 4^-k ladder.
///
/// The ladder stops at the curve resolution. The limit is classified from the
/// per-scale sigma sequence by its geometric rate, with the raw thresholds
/// short-circuiting when already crossed.
inline MassFunctionResult mass_function(const FractalCurve& curve, double a, double b, double alpha, int levels,
                                        const LimitThresholds& th = {})
{
    detail::check_interval(curve, a, b);
    if (levels < 3)
        throw domain_error("mass_function needs at least 3 levels");
    if (!(alpha > 0.0))
        throw domain_error("alpha must be positive");

    const auto cands = detail::candidate_subdivisions(curve, a, b, alpha);
    const double res = curve.resolution();
    const double norm = lanczos_gamma(alpha + 1.0);
    const double span = curve.b() - curve.a();

    MassFunctionResult out{LimitKind::finite, 0.0, 1.0, {}};
    int lattice_level = 0;
    for (int k = 1; k <= levels; ++k) {
        const double delta = std::abs(b - a) * std::pow(4.0, -k);
        if (res > 0.0 && delta < res * (1.0 - 1e-9))
            break;
        if (res == 0.0 && (b - a) / delta > detail::exact_curve_max_components)
            break;
        while (span / std::pow(4.0, lattice_level) > delta * (1.0 + 1e-12))
            ++lattice_level;
        std::vector<double> pts;
        int lvl = lattice_level;
        // the trimmed lattice can still exceed delta next to a or b
        for (;; ++lvl) {
            pts = detail::lattice_points(curve, a, b, lvl);
            if (detail::max_gap(pts) <= delta * (1.0 + 1e-12))
                break;
        }
        const double scale = detail::chord_power_sum(curve, pts, alpha) / norm;
        out.sequence.push_back({delta, detail::min_over_mesh(cands, delta), scale});
    }
    if (out.sequence.size() < 3)
        throw estimation_error("curve resolution admits only " + std::to_string(out.sequence.size()) +
                               " ladder levels; at least 3 are required");

    const auto& seq = out.sequence;
    const std::size_t n = seq.size();
    const double last = seq[n - 1].coarse;
    const double s_last = seq[n - 1].scale_sigma;
    const double s_prev2 = seq[n - 3].scale_sigma;
    out.rate = s_prev2 > 0.0 ? std::sqrt(s_last / s_prev2) : std::numeric_limits<double>::infinity();

    if (last > th.divergence || s_last > th.divergence) {
        out.kind = LimitKind::divergent;
    } else if (s_last < th.zero) {
        out.kind = LimitKind::zero;
    } else if (out.rate > 1.0 + th.rtol) {
        out.kind = LimitKind::divergent;
    } else if (out.rate < 1.0 - th.rtol) {
        out.kind = LimitKind::zero;
    } else {
        out.kind = LimitKind::finite;
    }

    switch (out.kind) {
    case LimitKind::finite: out.estimate = last; break;
    case LimitKind::divergent: out.estimate = std::numeric_limits<double>::infinity(); break;
    case LimitKind::zero: out.estimate = 0.0; break;
    }
    return out;
}

/// Default ladder depth used by dimension estimation for a given curve.
inline int default_mass_levels(const FractalCurve& curve)
{
    return curve.resolution() > 0.0 ? std::max(3, curve.level()) : 8;
}

struct DimensionTrace {
    double alpha;
    MassFunctionResult mass;
};

/// gamma-dimension by bisection of alpha on [1, n] using the mass-function
/// trichotomy. Every evaluated alpha is appended to `trace` when given.
inline double gamma_dimension(const FractalCurve& curve, double a, double b, double tol,
                              std::vector<DimensionTrace>* trace = nullptr)
{
    if (!(tol >= 1e-4))
        throw domain_error("gamma_dimension requires tol >= 1e-4");
    const int levels = default_mass_levels(curve);
    auto classify = [&](double alpha) {
        auto r = mass_function(curve, a, b, alpha, levels);
        if (trace)
            trace->push_back({alpha, r});
        return r.kind;
    };

    double lo = 1.0;
    double hi = static_cast<double>(curve.dimension());
    const LimitKind klo = classify(lo);
    if (klo == LimitKind::finite)
        return lo;
    if (hi == lo)
        throw estimation_error("dimension bracket [1, n] is degenerate and alpha = 1 is not finite");
    const LimitKind khi = classify(hi);
    if (khi == LimitKind::finite)
        return hi;
    if (klo == khi || klo != LimitKind::divergent)
        throw estimation_error("alpha bracket [1, n] does not bracket the gamma-dimension");

    while (hi - lo >= tol) {
        const double mid = 0.5 * (lo + hi);
        switch (classify(mid)) {
        case LimitKind::finite: return mid;
        case LimitKind::divergent: lo = mid; break;
        case LimitKind::zero: hi = mid; break;
        }
    }
    return 0.5 * (lo + hi);
}

/// Snap an estimated dimension to the known closed form for the curve family
/// when it lies within tol of it.
inline double round_to_known_dimension(const FractalCurve& curve, double estimate, double tol)
{
    const double known = curve.kind() == CurveKind::koch && curve.level() > 0 ? koch_dimension : 1.0;
    if (curve.kind() == CurveKind::polyline)
        return estimate;
    return std::abs(estimate - known) <= tol ? known : estimate;
}

struct StaircaseOptions {
    std::size_t grid_size = 0;           // 0 = curve edge count (line: 1024)
    std::optional<double> total_mass;    // rescale S so S(b1) - S(a1) equals this
};

/// Tabulated staircase function S_F^alpha and the J map built on it.
///
/// Samples (t_i, S_i) on a uniform parameter grid with p0 inserted; S is
/// interpolated linearly between samples. Immutable after construction.
class StaircaseTable {
public:
    StaircaseTable(std::shared_ptr<const FractalCurve> curve, double alpha, double p0, std::vector<double> t,
                   std::vector<double> s, double scale)
        : curve_(std::move(curve)), alpha_(alpha), p0_(p0), t_(std::move(t)), s_(std::move(s)), scale_(scale)
    {
        for (std::size_t i = 1; i < s_.size(); ++i) {
            if (s_[i] <= s_[i - 1])
                ++plateaus_;
        }
    }

    const FractalCurve& curve() const { return *curve_; }
    std::shared_ptr<const FractalCurve> curve_ptr() const { return curve_; }
    double alpha() const { return alpha_; }
    double p0() const { return p0_; }
    /// Gamma(alpha + 1), the normalization used in sigma^alpha.
    double gamma_norm() const { return lanczos_gamma(alpha_ + 1.0); }
    /// Factor applied to the raw masses (1 unless a total mass was requested).
    double scale() const { return scale_; }
    const std::vector<double>& t_values() const { return t_; }
    const std::vector<double>& s_values() const { return s_; }
    double s_min() const { return s_.front(); }
    double s_max() const { return s_.back(); }
    double s_range() const { return s_.back() - s_.front(); }
    std::size_t plateau_count() const { return plateaus_; }
    bool strictly_increasing() const { return plateaus_ == 0; }

    /// S_F^alpha(t).
    double S(double t) const
    {
        if (!curve_->contains(t))
            throw domain_error("staircase parameter outside curve domain");
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        if (it == t_.end())
            return s_.back();
        const auto i = static_cast<std::size_t>(it - t_.begin());
        if (i == 0)
            return s_.front();
        const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
        return s_[i - 1] + w * (s_[i] - s_[i - 1]);
    }

    /// Parameter t with S(t) = s (smallest such t on plateaus).
    double parameter_at(double s) const
    {
        const double tol = 1e-12 * std::max(1.0, std::abs(s_range()));
        if (!(s >= s_.front() - tol && s <= s_.back() + tol))
            throw domain_error("staircase value outside [S(a1), S(b1)]");
        s = std::clamp(s, s_.front(), s_.back());
        auto it = std::lower_bound(s_.begin(), s_.end(), s);
        const auto i = static_cast<std::size_t>(it - s_.begin());
        if (i == 0)
            return t_.front();
        const double ds = s_[i] - s_[i - 1];
        if (ds <= 0.0)
            return t_[i];
        const double w = (s - s_[i - 1]) / ds;
        return t_[i - 1] + w * (t_[i] - t_[i - 1]);
    }

    /// J(theta) = S(w^-1(theta)), with w^-1 by nearest-segment projection.
    double J(const Point& theta, double snap_tol = 1e-9) const
    {
        const auto proj = curve_->project(theta);
        if (proj.distance > snap_tol)
            throw geometry_error("point is not on the curve (distance " + std::to_string(proj.distance) + ")");
        return S(proj.t);
    }

    /// The curve point whose J coordinate equals s.
    Point j_inverse(double s) const { return curve_->evaluate(parameter_at(s)); }

private:
    std::shared_ptr<const FractalCurve> curve_;
    double alpha_;
    double p0_;
    std::vector<double> t_;
    std::vector<double> s_;
    double scale_;
    std::size_t plateaus_ = 0;
};

/// Mass of one grid cell: sigma^alpha over the cell ends and every curve vertex inside.
inline double cell_mass(const FractalCurve& curve, double t0, double t1, double alpha)
{
    const auto [first, last] = curve.interior_vertices(t0, t1);
    double prev = t0;
    double sum = 0.0;
    for (std::size_t v = first; v < last; ++v) {
        const double tv = curve.vertex_parameter(v);
        sum += std::pow(curve.chord(prev, tv), alpha);
        prev = tv;
    }
    sum += std::pow(curve.chord(prev, t1), alpha);
    return sum / lanczos_gamma(alpha + 1.0);
}

/// Tabulate S_F^alpha with origin p0: +mass(p0, t) for t >= p0, -mass(t, p0) below.
inline StaircaseTable build_staircase(std::shared_ptr<const FractalCurve> curve, double alpha, double p0,
                                      const StaircaseOptions& opts = {})
{
    if (!curve)
        throw domain_error("null curve");
    if (!curve->contains(p0))
        throw domain_error("p0 outside curve domain");
    if (!(alpha > 0.0))
        throw domain_error("alpha must be positive");
    std::size_t grid = opts.grid_size;
    if (grid == 0)
        grid = curve->kind() == CurveKind::line ? 1024 : curve->edge_count();

    std::vector<double> t = make_subdivision(curve->a(), curve->b(), grid).points();
    auto pos = std::lower_bound(t.begin(), t.end(), p0);
    if (pos == t.end() || *pos != p0)
        pos = t.insert(pos, p0);
    const auto origin = static_cast<std::size_t>(pos - t.begin());

    std::vector<double> cells(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        cells[i] = std::max(0.0, cell_mass(*curve, t[i], t[i + 1], alpha));

    std::vector<double> s(t.size(), 0.0);
    for (std::size_t i = origin + 1; i < t.size(); ++i)
        s[i] = s[i - 1] + cells[i - 1];
    for (std::size_t i = origin; i-- > 0;)
        s[i] = s[i + 1] - cells[i];

    double scale = 1.0;
    if (opts.total_mass) {
        const double total = s.back() - s.front();
        if (!(total > 0.0) || !(*opts.total_mass > 0.0))
            throw domain_error("cannot rescale a staircase with zero total mass");
        scale = *opts.total_mass / total;
        for (auto& v : s)
            v *= scale;
    }
    return StaircaseTable(std::move(curve), alpha, p0, std::move(t), std::move(s), scale);
}

inline StaircaseTable build_staircase(const FractalCurve& curve, double alpha, double p0,
                                      const StaircaseOptions& opts = {})
{
    return build_staircase(std::make_shared<const FractalCurve>(curve), alpha, p0, opts);
}

inline double j_of_theta(const StaircaseTable& table, const Point& theta) { return table.J(theta); }
inline Point j_inverse(const StaircaseTable& table, double s) { return table.j_inverse(s); }

} // namespace fractalms

#endif // FRACTALMS_STAIRCASE_HPP
