#ifndef FRACTALMS_CURVE_HPP
#define FRACTALMS_CURVE_HPP

#include "fractalms/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fractalms {

using Point = std::vector<double>;

enum class CurveKind { koch, line, polyline };

inline const char* to_string(CurveKind kind)
{
    switch (kind) {
    case CurveKind::koch: return "koch";
    case CurveKind::line: return "line";
    case CurveKind::polyline: return "polyline";
    }
    return "?";
}

/// Self-similarity dimension of the von Koch curve, log 4 / log 3.
inline const double koch_dimension = std::log(4.0) / std::log(3.0);

inline constexpr int max_koch_level = 12;

/// A parameterized curve w : [a, b] -> R^n stored as a polyline.
///
/// Koch and line curves carry a uniform vertex parameterization (vertex i at
/// a + (b - a) i / E); custom polylines carry an explicit strictly increasing
/// parameter per vertex. Evaluation is piecewise linear between vertices.
/// Instances are immutable once built.
class FractalCurve {
public:
    /// Unit-base von Koch curve on [0, 1] with the 4-adic parameterization.
    static FractalCurve koch(int level)
    {
        if (level < 0)
            throw domain_error("koch level must be non-negative");
        if (level > max_koch_level)
            throw resource_error("koch level " + std::to_string(level) + " exceeds the supported maximum " +
                                 std::to_string(max_koch_level));

        std::vector<double> xy = {0.0, 0.0, 1.0, 0.0};
        const double c60 = 0.5;
        const double s60 = std::sqrt(3.0) / 2.0;
        for (int l = 0; l < level; ++l) {
            const std::size_t edges = xy.size() / 2 - 1;
            std::vector<double> next;
            next.reserve((4 * edges + 1) * 2);
            for (std::size_t e = 0; e < edges; ++e) {
                const double px = xy[2 * e], py = xy[2 * e + 1];
                const double qx = xy[2 * e + 2], qy = xy[2 * e + 3];
                const double dx = (qx - px) / 3.0, dy = (qy - py) / 3.0;
                const double ax = px + dx, ay = py + dy;
                next.insert(next.end(), {px, py, ax, ay, ax + dx * c60 - dy * s60, ay + dx * s60 + dy * c60,
                                         px + 2.0 * dx, py + 2.0 * dy});
            }
            next.push_back(xy[xy.size() - 2]);
            next.push_back(xy[xy.size() - 1]);
            xy = std::move(next);
        }

        FractalCurve c;
        c.kind_ = CurveKind::koch;
        c.a_ = 0.0;
        c.b_ = 1.0;
        c.dim_ = 2;
        c.level_ = level;
        c.alpha_ = koch_dimension;
        c.coords_ = std::move(xy);
        return c;
    }

    /// Straight segment w(t) = t on [a, b] with alpha = 1.
    static FractalCurve line(double a, double b)
    {
        if (!(a < b))
            throw domain_error("line requires a < b");
        FractalCurve c;
        c.kind_ = CurveKind::line;
        c.a_ = a;
        c.b_ = b;
        c.dim_ = 1;
        c.level_ = 0;
        c.alpha_ = 1.0;
        c.coords_ = {a, b};
        return c;
    }

    /// Custom polyline; `coords` holds params.size() points of `dim` coordinates each.
    static FractalCurve polyline(std::vector<double> params, std::vector<double> coords, std::size_t dim,
                                 double alpha = 1.0)
    {
        if (dim == 0)
            throw domain_error("polyline dimension must be positive");
        if (params.size() < 2 || coords.size() != params.size() * dim)
            throw domain_error("polyline needs at least two vertices with matching coordinates");
        for (std::size_t i = 1; i < params.size(); ++i) {
            if (!(params[i - 1] < params[i]))
                throw domain_error("polyline parameters must be strictly increasing");
        }
        if (!(alpha > 0.0) || alpha > static_cast<double>(dim))
            throw domain_error("alpha must lie in (0, n]");

        // Injectivity: no vertex may repeat.
        std::vector<std::size_t> order(params.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        auto vless = [&](std::size_t i, std::size_t j) {
            return std::lexicographical_compare(coords.begin() + i * dim, coords.begin() + (i + 1) * dim,
                                                coords.begin() + j * dim, coords.begin() + (j + 1) * dim);
        };
        std::sort(order.begin(), order.end(), vless);
        for (std::size_t k = 1; k < order.size(); ++k) {
            if (std::equal(coords.begin() + order[k - 1] * dim, coords.begin() + (order[k - 1] + 1) * dim,
                           coords.begin() + order[k] * dim))
                throw domain_error("polyline repeats a vertex; the curve must be injective");
        }

        FractalCurve c;
        c.kind_ = CurveKind::polyline;
        c.a_ = params.front();
        c.b_ = params.back();
        c.dim_ = dim;
        c.level_ = 0;
        c.alpha_ = alpha;
        c.params_ = std::move(params);
        c.coords_ = std::move(coords);
        return c;
    }

    CurveKind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t dimension() const { return dim_; }
    int level() const { return level_; }
    double alpha() const { return alpha_; }

    FractalCurve with_alpha(double alpha) const
    {
        if (!(alpha > 0.0) || alpha > static_cast<double>(dim_))
            throw domain_error("alpha must lie in (0, n]");
        if (kind_ == CurveKind::line && alpha != 1.0)
            throw domain_error("a line curve has alpha = 1");
        FractalCurve c = *this;
        c.alpha_ = alpha;
        return c;
    }

    std::size_t vertex_count() const { return coords_.size() / dim_; }
    std::size_t edge_count() const { return vertex_count() - 1; }

    double vertex_parameter(std::size_t i) const
    {
        if (!params_.empty())
            return params_[i];
        if (i + 1 == vertex_count())
            return b_;
        return a_ + (b_ - a_) * static_cast<double>(i) / static_cast<double>(edge_count());
    }

    Point vertex(std::size_t i) const
    {
        return Point(coords_.begin() + i * dim_, coords_.begin() + (i + 1) * dim_);
    }

    /// Parameter step below which the polyline is straight; 0 when w is exact
    /// at every scale (a single straight segment).
    double resolution() const
    {
        if (kind_ == CurveKind::line || edge_count() == 1)
            return 0.0;
        if (params_.empty())
            return (b_ - a_) / static_cast<double>(edge_count());
        double step = 0.0;
        for (std::size_t i = 1; i < params_.size(); ++i)
            step = std::max(step, params_[i] - params_[i - 1]);
        return step;
    }

    bool contains(double t) const { return t >= a_ && t <= b_; }

    Point evaluate(double t) const
    {
        check_domain(t);
        const auto [i, frac] = locate(t);
        Point p(dim_);
        for (std::size_t c = 0; c < dim_; ++c)
            p[c] = lerp(i, c, frac);
        return p;
    }

    Point operator()(double t) const { return evaluate(t); }

    /// Euclidean distance |w(t2) - w(t1)| without allocating.
    double chord(double t1, double t2) const
    {
        check_domain(t1);
        check_domain(t2);
        const auto [i1, f1] = locate(t1);
        const auto [i2, f2] = locate(t2);
        double sq = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) {
            const double d = lerp(i2, c, f2) - lerp(i1, c, f1);
            sq += d * d;
        }
        return std::sqrt(sq);
    }

    /// Parameters of every vertex strictly inside (t1, t2).
    std::pair<std::size_t, std::size_t> interior_vertices(double t1, double t2) const
    {
        // Returns the half-open index range [first, last).
        const std::size_t n = vertex_count();
        if (params_.empty()) {
            const double scale = static_cast<double>(edge_count()) / (b_ - a_);
            auto first = static_cast<std::size_t>(std::floor((t1 - a_) * scale)) + 1;
            auto last = static_cast<std::size_t>(std::ceil((t2 - a_) * scale));
            first = std::min(first, n);
            last = std::min(last, n);
            while (first < last && vertex_parameter(first) <= t1)
                ++first;
            while (last > first && vertex_parameter(last - 1) >= t2)
                --last;
            return {first, std::max(first, last)};
        }
        const auto lo = std::upper_bound(params_.begin(), params_.end(), t1) - params_.begin();
        const auto hi = std::lower_bound(params_.begin(), params_.end(), t2) - params_.begin();
        return {static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi))};
    }

    struct Projection {
        double t;
        double distance;
    };

    /// Nearest point of the polyline to `p` (parameter and distance).
    Projection project(const Point& p) const
    {
        if (p.size() != dim_)
            throw geometry_error("point dimension does not match the curve");
        Projection best{a_, std::numeric_limits<double>::infinity()};
        const std::size_t edges = edge_count();
        for (std::size_t e = 0; e < edges; ++e) {
            double dd = 0.0, dp = 0.0;
            for (std::size_t c = 0; c < dim_; ++c) {
                const double d = coords_[(e + 1) * dim_ + c] - coords_[e * dim_ + c];
                dd += d * d;
                dp += d * (p[c] - coords_[e * dim_ + c]);
            }
            const double s = dd > 0.0 ? std::clamp(dp / dd, 0.0, 1.0) : 0.0;
            double sq = 0.0;
            for (std::size_t c = 0; c < dim_; ++c) {
                const double x = coords_[e * dim_ + c] + s * (coords_[(e + 1) * dim_ + c] - coords_[e * dim_ + c]);
                sq += (x - p[c]) * (x - p[c]);
            }
            const double dist = std::sqrt(sq);
            if (dist < best.distance) {
                const double t0 = vertex_parameter(e), t1 = vertex_parameter(e + 1);
                best = {t0 + s * (t1 - t0), dist};
            }
        }
        return best;
    }

    /// Total polyline length.
    double length() const
    {
        double total = 0.0;
        for (std::size_t e = 0; e < edge_count(); ++e)
            total += chord(vertex_parameter(e), vertex_parameter(e + 1));
        return total;
    }

    /// Compact description used in CSV metadata.
    std::string describe() const
    {
        std::ostringstream os;
        os.precision(17);
        os << "curve=" << to_string(kind_) << ",level=" << level_ << ",alpha=" << alpha_;
        return os.str();
    }

private:
    FractalCurve() = default;

    void check_domain(double t) const
    {
        if (!(t >= a_ && t <= b_))
            throw domain_error("parameter " + std::to_string(t) + " outside curve domain [" + std::to_string(a_) +
                               ", " + std::to_string(b_) + "]");
    }

    std::pair<std::size_t, double> locate(double t) const
    {
        const std::size_t edges = edge_count();
        if (params_.empty()) {
            const double u = (t - a_) / (b_ - a_) * static_cast<double>(edges);
            auto i = static_cast<std::size_t>(std::max(0.0, std::floor(u)));
            i = std::min(i, edges - 1);
            return {i, u - static_cast<double>(i)};
        }
        auto it = std::upper_bound(params_.begin(), params_.end(), t);
        auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - params_.begin()) - 1));
        i = std::min(i, edges - 1);
        return {i, (t - params_[i]) / (params_[i + 1] - params_[i])};
    }

    double lerp(std::size_t edge, std::size_t c, double frac) const
    {
        const double x0 = coords_[edge * dim_ + c];
        const double x1 = coords_[(edge + 1) * dim_ + c];
        return x0 + frac * (x1 - x0);
    }

    CurveKind kind_ = CurveKind::line;
    double a_ = 0.0;
    double b_ = 1.0;
    std::size_t dim_ = 1;
    int level_ = 0;
    double alpha_ = 1.0;
    std::vector<double> params_;
    std::vector<double> coords_;
};

inline FractalCurve build_koch(int level) { return FractalCurve::koch(level); }
inline FractalCurve build_line(double a, double b) { return FractalCurve::line(a, b); }

/// Load a custom polyline from CSV with header `t,x[,y,...]`.
inline FractalCurve load_polyline_csv(std::istream& in, double alpha = 1.0)
{
    std::string line;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (line.rfind("t,", 0) != 0)
            throw domain_error("polyline CSV header must start with 't,'");
        dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
        break;
    }
    if (dim == 0)
        throw domain_error("polyline CSV has no header");

    std::vector<double> params, coords;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ','))
            values.push_back(std::stod(cell));
        if (values.size() != dim + 1)
            throw domain_error("polyline CSV row has " + std::to_string(values.size()) + " columns, expected " +
                               std::to_string(dim + 1));
        params.push_back(values[0]);
        coords.insert(coords.end(), values.begin() + 1, values.end());
    }
    return FractalCurve::polyline(std::move(params), std::move(coords), dim, alpha);
}

/// A finite strictly increasing set of points t_0 = a < ... < t_k = b.
class Subdivision {
public:
    explicit Subdivision(std::vector<double> points) : points_(std::move(points))
    {
        if (points_.size() < 2)
            throw domain_error("subdivision needs at least two points");
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i - 1] < points_[i]))
                throw domain_error("subdivision points must be strictly increasing");
        }
    }

    const std::vector<double>& points() const { return points_; }
    std::size_t components() const { return points_.size() - 1; }
    double front() const { return points_.front(); }
    double back() const { return points_.back(); }

    double mesh() const
    {
        double m = 0.0;
        for (std::size_t i = 1; i < points_.size(); ++i)
            m = std::max(m, points_[i] - points_[i - 1]);
        return m;
    }

    /// True when every point of `coarse` also belongs to this subdivision.
    bool refines(const Subdivision& coarse, double tol = 1e-12) const
    {
        return std::all_of(coarse.points_.begin(), coarse.points_.end(), [&](double p) {
            auto it = std::lower_bound(points_.begin(), points_.end(), p - tol);
            return it != points_.end() && std::abs(*it - p) <= tol;
        });
    }

private:
    std::vector<double> points_;
};

/// Uniform subdivision of [a, b] with k components.
inline Subdivision make_subdivision(double a, double b, std::size_t k)
{
    if (!(a < b))
        throw domain_error("subdivision requires a < b");
    if (k == 0)
        throw domain_error("subdivision requires k >= 1");
    std::vector<double> pts(k + 1);
    for (std::size_t i = 0; i <= k; ++i)
        pts[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(k);
    pts.back() = b;
    return Subdivision(std::move(pts));
}

} // namespace fractalms

#endif // FRACTALMS_CURVE_HPP
