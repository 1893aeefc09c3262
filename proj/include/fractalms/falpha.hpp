#ifndef FRACTALMS_FALPHA_HPP
#define FRACTALMS_FALPHA_HPP

#include "fractalms/curve.hpp"
#include "fractalms/errors.hpp"
#include "fractalms/staircase.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace fractalms {

/// A curve point together with its parameter, so evaluators never need w^-1.
struct CurvePoint {
    double t;
    Point x;
};

/// Real-valued function on the curve.
using CurveFunction = std::function<double(const CurvePoint&)>;

inline CurvePoint point_at_parameter(const StaircaseTable& table, double t)
{
    return {t, table.curve().evaluate(t)};
}

inline CurvePoint point_at_j(const StaircaseTable& table, double s)
{
    return point_at_parameter(table, table.parameter_at(s));
}

/// Symmetric F^alpha difference quotient in the J coordinate at parameter t.
///
/// theta+- = J^-1(J(theta) +- h); one-sided at the ends of the staircase range.
inline double falpha_derivative_at_parameter(const CurveFunction& f, const StaircaseTable& table, double t, double h)
{
    const double range = table.s_range();
    if (!(h > 0.0) || h < 1e-12 * std::abs(range))
        throw resolution_error("step h = " + std::to_string(h) + " is below the staircase resolution");
    if (2.0 * h > range)
        throw resolution_error("step h exceeds half of the staircase range");

    const double s = table.S(t);
    const double s_hi = std::min(s + h, table.s_max());
    const double s_lo = std::max(s - h, table.s_min());
    const double t_hi = s_hi == s ? t : table.parameter_at(s_hi);
    const double t_lo = s_lo == s ? t : table.parameter_at(s_lo);
    const double dj = table.S(t_hi) - table.S(t_lo);
    if (!(dj > 0.0))
        throw singularity_error("staircase is flat around the evaluation point");
    return (f(point_at_parameter(table, t_hi)) - f(point_at_parameter(table, t_lo))) / dj;
}

/// D_F^alpha f(theta) for a point on the curve.
inline double falpha_derivative(const CurveFunction& f, const StaircaseTable& table, const Point& theta, double h)
{
    const auto proj = table.curve().project(theta);
    if (proj.distance > 1e-9)
        throw geometry_error("derivative point is not on the curve");
    return falpha_derivative_at_parameter(f, table, proj.t, h);
}

/// Default derivative step: 1e-4 of the staircase range.
inline double default_derivative_step(const StaircaseTable& table) { return 1e-4 * table.s_range(); }

namespace detail {

inline double riemann_stieltjes_midpoint(const CurveFunction& f, const StaircaseTable& table, double a, double b,
                                         std::size_t k)
{
    double sum = 0.0;
    double s_prev = table.S(a);
    for (std::size_t i = 1; i <= k; ++i) {
        const double t0 = a + (b - a) * static_cast<double>(i - 1) / static_cast<double>(k);
        const double t1 = i == k ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(k);
        const double s1 = table.S(t1);
        const double v = f(point_at_parameter(table, 0.5 * (t0 + t1)));
        if (!std::isfinite(v))
            throw evaluation_error("integrand is not finite at t = " + std::to_string(0.5 * (t0 + t1)));
        sum += v * (s1 - s_prev);
        s_prev = s1;
    }
    return sum;
}

} // namespace detail

/// F^alpha integral of f over C(a, b): midpoint-tagged Riemann-Stieltjes sums
/// against S on k and 2k components, combined by one Richardson step.
inline double falpha_integral(const CurveFunction& f, const StaircaseTable& table, double a, double b, std::size_t k)
{
    if (k == 0)
        throw domain_error("falpha_integral requires k >= 1");
    if (!table.curve().contains(a) || !table.curve().contains(b))
        throw domain_error("integration bounds outside the curve domain");
    if (a == b)
        return 0.0;
    if (a > b)
        return -falpha_integral(f, table, b, a, k);
    const double coarse = detail::riemann_stieltjes_midpoint(f, table, a, b, k);
    const double fine = detail::riemann_stieltjes_midpoint(f, table, a, b, 2 * k);
    return (4.0 * fine - coarse) / 3.0;
}

} // namespace fractalms

#endif // FRACTALMS_FALPHA_HPP
