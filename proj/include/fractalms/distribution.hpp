#ifndef FRACTALMS_DISTRIBUTION_HPP
#define FRACTALMS_DISTRIBUTION_HPP

#include "fractalms/curve.hpp"
#include "fractalms/errors.hpp"
#include "fractalms/falpha.hpp"
#include "fractalms/philox.hpp"
#include "fractalms/staircase.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace fractalms {

struct UniformFamily {};

struct MemorylessFamily {
    double lambda;
};

/// User density in the J coordinate; normalized internally over the support.
struct CustomFamily {
    std::function<double(double)> pdf;
};

using DistributionFamily = std::variant<UniformFamily, MemorylessFamily, CustomFamily>;

/// Random variable valued on a fractal curve, described in the J coordinate.
///
/// Curve points are ordered by J, so "X <= theta" means J(X) <= J(theta).
class DistributionOnCurve {
public:
    static DistributionOnCurve uniform(std::shared_ptr<const StaircaseTable> table)
    {
        const double lo = table->s_min(), hi = table->s_max();
        return DistributionOnCurve(std::move(table), UniformFamily{}, lo, hi);
    }

    static DistributionOnCurve memoryless(std::shared_ptr<const StaircaseTable> table, double lambda)
    {
        if (!(lambda > 0.0))
            throw domain_error("memoryless rate lambda must be positive");
        const double lo = std::max(0.0, table->s_min()), hi = table->s_max();
        if (!(hi > lo))
            throw domain_error("memoryless distribution needs J > 0 on the curve");
        return DistributionOnCurve(std::move(table), MemorylessFamily{lambda}, lo, hi);
    }

    /// Custom density on the J-interval [lo, hi] (a sub-range of the staircase).
    static DistributionOnCurve custom(std::shared_ptr<const StaircaseTable> table, std::function<double(double)> pdf,
                                      double lo, double hi)
    {
        if (!(lo < hi) || lo < table->s_min() || hi > table->s_max())
            throw domain_error("custom support must be a J sub-interval of the staircase range");
        DistributionOnCurve d(std::move(table), CustomFamily{std::move(pdf)}, lo, hi);
        d.tabulate_custom();
        return d;
    }

    const StaircaseTable& table() const { return *table_; }
    const DistributionFamily& family() const { return family_; }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }

    /// Gamma(alpha + 1), the uniform density constant as written for a curve
    /// whose total mass is 1 / Gamma(alpha + 1).
    double unnormalized_uniform_density() const { return table_->gamma_norm(); }

    /// CDF as a function of the J coordinate.
    double cdf_at_j(double s) const
    {
        return std::visit(
            [&](const auto& fam) -> double {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, UniformFamily>) {
                    return std::clamp((s - lo_) / (hi_ - lo_), 0.0, 1.0);
                } else if constexpr (std::is_same_v<T, MemorylessFamily>) {
                    return s >= 0.0 ? -std::expm1(-fam.lambda * s) : 0.0;
                } else {
                    if (s <= lo_)
                        return 0.0;
                    if (s >= hi_)
                        return 1.0;
                    return interp(custom_j_, custom_cdf_, s);
                }
            },
            family_);
    }

    /// Density with respect to d_F^alpha theta, as a function of J.
    double pdf_at_j(double s) const
    {
        return std::visit(
            [&](const auto& fam) -> double {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, UniformFamily>) {
                    return s >= lo_ && s <= hi_ ? 1.0 / (hi_ - lo_) : 0.0;
                } else if constexpr (std::is_same_v<T, MemorylessFamily>) {
                    return s >= 0.0 ? fam.lambda * std::exp(-fam.lambda * s) : 0.0;
                } else {
                    return s >= lo_ && s <= hi_ ? std::max(0.0, fam.pdf(s)) / custom_norm_ : 0.0;
                }
            },
            family_);
    }

    double cdf(const Point& theta) const { return cdf_at_j(table_->J(theta)); }
    double pdf(const Point& theta) const { return pdf_at_j(table_->J(theta)); }

    /// J value with CDF(J) = u. Memoryless draws past the end of the curve
    /// are clipped to the end and reported through `clipped`.
    double quantile_j(double u, bool* clipped = nullptr) const
    {
        if (clipped)
            *clipped = false;
        return std::visit(
            [&](const auto& fam) -> double {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, UniformFamily>) {
                    return lo_ + u * (hi_ - lo_);
                } else if constexpr (std::is_same_v<T, MemorylessFamily>) {
                    const double s = -std::log1p(-u) / fam.lambda;
                    if (s > hi_) {
                        if (clipped)
                            *clipped = true;
                        return hi_;
                    }
                    return s;
                } else {
                    return interp(custom_cdf_, custom_j_, u);
                }
            },
            family_);
    }

private:
    DistributionOnCurve(std::shared_ptr<const StaircaseTable> table, DistributionFamily family, double lo, double hi)
        : table_(std::move(table)), family_(std::move(family)), lo_(lo), hi_(hi)
    {
    }

    static double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x)
    {
        auto it = std::lower_bound(xs.begin(), xs.end(), x);
        if (it == xs.begin())
            return ys.front();
        if (it == xs.end())
            return ys.back();
        const auto i = static_cast<std::size_t>(it - xs.begin());
        const double dx = xs[i] - xs[i - 1];
        if (dx <= 0.0)
            return ys[i];
        return ys[i - 1] + (x - xs[i - 1]) / dx * (ys[i] - ys[i - 1]);
    }

    void tabulate_custom()
    {
        const auto& fam = std::get<CustomFamily>(family_);
        constexpr std::size_t cells = 8192;
        custom_j_.resize(cells + 1);
        custom_cdf_.assign(cells + 1, 0.0);
        double prev = std::max(0.0, fam.pdf(lo_));
        custom_j_[0] = lo_;
        for (std::size_t i = 1; i <= cells; ++i) {
            const double s = i == cells ? hi_ : lo_ + (hi_ - lo_) * static_cast<double>(i) / cells;
            const double v = std::max(0.0, fam.pdf(s));
            if (!std::isfinite(v))
                throw evaluation_error("custom pdf is not finite");
            custom_j_[i] = s;
            custom_cdf_[i] = custom_cdf_[i - 1] + 0.5 * (prev + v) * (s - custom_j_[i - 1]);
            prev = v;
        }
        custom_norm_ = custom_cdf_.back();
        if (!(custom_norm_ > 0.0))
            throw domain_error("custom pdf integrates to zero");
        for (auto& c : custom_cdf_)
            c /= custom_norm_;
    }

    std::shared_ptr<const StaircaseTable> table_;
    DistributionFamily family_;
    double lo_;
    double hi_;
    std::vector<double> custom_j_;
    std::vector<double> custom_cdf_;
    double custom_norm_ = 1.0;
};

struct SampleSet {
    std::vector<CurvePoint> points;
    std::vector<double> j;
    std::uint64_t seed = 0;
    std::size_t count = 0;
    std::size_t clipped = 0;  // draws beyond the curve's J range
};

/// Inverse-CDF sampling. Draw i uses Philox stream i under `seed`, so any
/// subset of draws can be regenerated independently.
inline SampleSet sample(const DistributionOnCurve& dist, std::uint64_t seed, std::size_t count)
{
    if (count == 0)
        throw domain_error("sample count must be positive");
    SampleSet out;
    out.seed = seed;
    out.count = count;
    out.points.reserve(count);
    out.j.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Philox4x32 rng(seed, i);
        bool clipped = false;
        const double s = dist.quantile_j(uniform_open01(rng), &clipped);
        if (clipped)
            ++out.clipped;
        const double t = dist.table().parameter_at(s);
        out.points.push_back(point_at_parameter(dist.table(), t));
        out.j.push_back(dist.table().S(t));
    }
    return out;
}

enum class MomentMode { componentwise, j_coordinate };

namespace detail {

inline std::size_t default_moment_cells(const StaircaseTable& table)
{
    return std::max<std::size_t>(1024, table.curve().edge_count());
}

} // namespace detail

/// m-th moment: the F^alpha integral of theta^m pdf over the support.
/// Componentwise by default; j_coordinate integrates J(theta)^m pdf instead.
inline Point moment(const DistributionOnCurve& dist, int m, MomentMode mode = MomentMode::componentwise,
                    std::size_t cells = 0)
{
    if (m < 1)
        throw domain_error("moment order must be >= 1");
    const auto& table = dist.table();
    if (cells == 0)
        cells = detail::default_moment_cells(table);
    const double ta = table.parameter_at(dist.support_lo());
    const double tb = table.parameter_at(dist.support_hi());
    if (mode == MomentMode::j_coordinate) {
        CurveFunction f = [&](const CurvePoint& p) {
            const double s = table.S(p.t);
            return std::pow(s, m) * dist.pdf_at_j(s);
        };
        return {falpha_integral(f, table, ta, tb, cells)};
    }
    Point out(table.curve().dimension());
    for (std::size_t c = 0; c < out.size(); ++c) {
        CurveFunction f = [&, c](const CurvePoint& p) { return std::pow(p.x[c], m) * dist.pdf_at_j(table.S(p.t)); };
        out[c] = falpha_integral(f, table, ta, tb, cells);
    }
    return out;
}

/// Componentwise variance, integral of (theta - E[X])^2 pdf.
inline Point variance(const DistributionOnCurve& dist, std::size_t cells = 0)
{
    const auto& table = dist.table();
    if (cells == 0)
        cells = detail::default_moment_cells(table);
    const Point mean = moment(dist, 1, MomentMode::componentwise, cells);
    for (double v : mean) {
        if (!std::isfinite(v))
            throw estimation_error("mean is not finite");
    }
    const double ta = table.parameter_at(dist.support_lo());
    const double tb = table.parameter_at(dist.support_hi());
    Point out(mean.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        CurveFunction f = [&, c](const CurvePoint& p) {
            const double d = p.x[c] - mean[c];
            return d * d * dist.pdf_at_j(table.S(p.t));
        };
        out[c] = falpha_integral(f, table, ta, tb, cells);
    }
    return out;
}

/// Kolmogorov-Smirnov distance between samples (in J) and an analytic CDF.
///
/// Samples at or beyond `upper` (draws clipped to the end of the curve) still
/// count in n but are left out of the supremum, which then covers J < upper.
inline double ks_statistic(std::vector<double> js, const std::function<double(double)>& cdf,
                           double upper = std::numeric_limits<double>::infinity())
{
    if (js.empty())
        throw domain_error("ks_statistic needs samples");
    std::sort(js.begin(), js.end());
    const double n = static_cast<double>(js.size());
    double d = 0.0;
    for (std::size_t i = 0; i < js.size() && js[i] < upper; ++i) {
        const double f = cdf(js[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

} // namespace fractalms

#endif // FRACTALMS_DISTRIBUTION_HPP
