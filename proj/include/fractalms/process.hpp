#ifndef FRACTALMS_PROCESS_HPP
#define FRACTALMS_PROCESS_HPP

#include "fractalms/errors.hpp"
#include "fractalms/philox.hpp"
#include "fractalms/staircase.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fractalms {

// Processes are indexed by the J coordinate of curve points; "tau + eps"
// means the point whose J coordinate is J(tau) + eps.

/// One sample path X(zeta, .) as a function of J.
using Realization = std::function<double(double)>;

/// Draws a realization from a random source.
using RealizationFactory = std::function<Realization(Philox4x32&)>;

/// Correlation function R(tau1, tau2) in J coordinates.
using CorrelationFunction = std::function<double(double, double)>;

/// Weight f(tau, u) in an m.s. integral.
using WeightFunction = std::function<double(double, double)>;

struct FractalProcess {
    std::string name;
    RealizationFactory draw;
    std::optional<CorrelationFunction> correlation;
};

namespace detail {

inline double standard_normal(Philox4x32& rng)
{
    // Box-Muller on two open-interval uniforms; identical on every platform.
    const double u1 = uniform_open01(rng);
    const double u2 = uniform_open01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Running mean and standard error.
class MeanAccumulator {
public:
    void add(double x)
    {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline Realization draw_realization(const FractalProcess& proc, std::uint64_t seed, std::size_t r)
{
    Philox4x32 rng(seed, r);
    return proc.draw(rng);
}

/// Least-squares slope of log|y| against log x over entries with y != 0.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (y[i] == 0.0 || x[i] <= 0.0)
            continue;
        const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2)
        return 0.0;
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Built-in fixtures

/// X(tau) = A J(tau), A ~ N(0, sigma2). R = sigma2 tau s.
inline FractalProcess linear_amplitude_process(double sigma2)
{
    const double sd = std::sqrt(sigma2);
    return {"linear-amplitude",
            [sd](Philox4x32& rng) -> Realization {
                const double a = sd * detail::standard_normal(rng);
                return [a](double tau) { return a * tau; };
            },
            [sigma2](double t, double s) { return sigma2 * t * s; }};
}

/// X(tau) = cos(J(tau) + Phi), Phi uniform on a J-interval of length 2 pi.
inline FractalProcess cosine_phase_process()
{
    return {"cosine-phase",
            [](Philox4x32& rng) -> Realization {
                const double phi = 2.0 * std::numbers::pi * uniform_open01(rng);
                return [phi](double tau) { return std::cos(tau + phi); };
            },
            [](double t, double s) { return 0.5 * std::cos(t - s); }};
}

/// Independent N(0, 1) at every index point.
inline FractalProcess white_noise_process()
{
    return {"white-noise",
            [](Philox4x32& rng) -> Realization {
                const std::uint64_t key = rng();
                return [key](double tau) {
                    Philox4x32 local(key, std::bit_cast<std::uint64_t>(tau));
                    return detail::standard_normal(local);
                };
            },
            [](double t, double s) { return t == s ? 1.0 : 0.0; }};
}

/// Brownian motion in J on [0, horizon] via a truncated Levy-Ciesielski
/// (Schauder) expansion; realizations are consistent at arbitrary points.
inline FractalProcess brownian_like_process(double horizon = 16.0, int levels = 24)
{
    return {"brownian-like",
            [horizon, levels](Philox4x32& rng) -> Realization {
                const std::uint64_t key = rng();
                return [key, horizon, levels](double tau) {
                    if (tau < 0.0 || tau > horizon)
                        throw domain_error("brownian-like index outside [0, horizon]");
                    const double x = tau / horizon;
                    Philox4x32 z0(key, 0);
                    double w = x * detail::standard_normal(z0);
                    for (int n = 0; n < levels; ++n) {
                        const double scale = std::ldexp(1.0, n);
                        const double y = x * scale;
                        auto k = static_cast<std::uint64_t>(std::min(std::floor(y), scale - 1.0));
                        const double frac = y - static_cast<double>(k);
                        const double tent = 1.0 - std::abs(2.0 * frac - 1.0);
                        if (tent <= 0.0)
                            continue;
                        Philox4x32 z(key, (static_cast<std::uint64_t>(n + 1) << 40) | k);
                        w += detail::standard_normal(z) * std::ldexp(1.0, -n / 2 - 1) *
                             (n % 2 ? std::numbers::sqrt2 / 2.0 : 1.0) * tent;
                    }
                    return std::sqrt(horizon) * w;
                };
            },
            [](double t, double s) { return std::min(t, s); }};
}

/// X(tau) = c.
inline FractalProcess constant_process(double c)
{
    return {"constant", [c](Philox4x32&) -> Realization { return [c](double) { return c; }; },
            [c](double, double) { return c * c; }};
}

/// X(tau) = A, A ~ N(0, sigma2), constant along the curve.
inline FractalProcess random_constant_process(double sigma2)
{
    const double sd = std::sqrt(sigma2);
    return {"random-constant",
            [sd](Philox4x32& rng) -> Realization {
                const double a = sd * detail::standard_normal(rng);
                return [a](double) { return a; };
            },
            [sigma2](double, double) { return sigma2; }};
}

/// X(tau) = A J(tau) + c, A ~ N(0, sigma2).
inline FractalProcess affine_amplitude_process(double sigma2, double c)
{
    const double sd = std::sqrt(sigma2);
    return {"affine-amplitude",
            [sd, c](Philox4x32& rng) -> Realization {
                const double a = sd * detail::standard_normal(rng);
                return [a, c](double tau) { return a * tau + c; };
            },
            [sigma2, c](double t, double s) { return sigma2 * t * s + c * c; }};
}

/// a X + b Y with X and Y drawn from the same random source (Y after X).
inline FractalProcess linear_combination(double a, const FractalProcess& x, double b, const FractalProcess& y)
{
    return {"combination",
            [a, b, dx = x.draw, dy = y.draw](Philox4x32& rng) -> Realization {
                Realization rx = dx(rng);
                Realization ry = dy(rng);
                return [a, b, rx = std::move(rx), ry = std::move(ry)](double tau) { return a * rx(tau) + b * ry(tau); };
            },
            std::nullopt};
}

// ---------------------------------------------------------------------------
// Correlation

struct CorrelationEstimate {
    double R;
    double std_error;
};

/// Monte Carlo R(tau1, tau2) = E[X(tau1) X(tau2)] over n realizations.
inline CorrelationEstimate correlation_mc(const FractalProcess& proc, double tau1, double tau2, std::size_t n,
                                         std::uint64_t seed)
{
    if (n < 100)
        throw domain_error("correlation_mc needs n >= 100 realizations");
    detail::MeanAccumulator acc;
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = detail::draw_realization(proc, seed, r);
        acc.add(x(tau1) * x(tau2));
    }
    return {acc.mean(), acc.std_error()};
}

/// R estimates on a grid of J values, all pairs from common realizations.
struct CorrelationGrid {
    std::vector<double> taus;
    std::vector<double> R;       // row-major taus.size() x taus.size()
    std::vector<double> std_error;
    std::size_t samples = 0;

    double at(std::size_t i, std::size_t j) const { return R[i * taus.size() + j]; }
    double se(std::size_t i, std::size_t j) const { return std_error[i * taus.size() + j]; }
};

inline CorrelationGrid correlation_grid(const FractalProcess& proc, const std::vector<double>& taus, std::size_t n,
                                        std::uint64_t seed)
{
    if (n < 100)
        throw domain_error("correlation_grid needs n >= 100 realizations");
    const std::size_t m = taus.size();
    std::vector<detail::MeanAccumulator> acc(m * m);
    std::vector<double> values(m);
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = detail::draw_realization(proc, seed, r);
        for (std::size_t i = 0; i < m; ++i)
            values[i] = x(taus[i]);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j)
                acc[i * m + j].add(values[i] * values[j]);
        }
    }
    CorrelationGrid g{taus, std::vector<double>(m * m), std::vector<double>(m * m), n};
    for (std::size_t k = 0; k < m * m; ++k) {
        g.R[k] = acc[k].mean();
        g.std_error[k] = acc[k].std_error();
    }
    return g;
}

// ---------------------------------------------------------------------------
// Mean-square diagnostics

/// Dyadic ladder 2^-1 ... 2^-steps; dyadic offsets keep polynomial R exact.
inline std::vector<double> dyadic_ladder(int steps = 10)
{
    std::vector<double> eps;
    for (int k = 1; k <= steps; ++k)
        eps.push_back(std::ldexp(1.0, -k));
    return eps;
}

struct SecondDerivativeResult {
    std::vector<double> values;
    double limit;  // +inf when divergent
    bool divergent;
};

namespace detail {

inline void check_ladder(const std::vector<double>& eps)
{
    if (eps.size() < 3)
        throw domain_error("epsilon ladder needs at least 3 entries");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0) || (i > 0 && !(eps[i] < eps[i - 1])))
            throw domain_error("epsilon ladder must be positive and decreasing");
    }
}

inline SecondDerivativeResult classify_second_derivative(const std::vector<double>& eps, std::vector<double> values,
                                                         const LimitThresholds& th)
{
    SecondDerivativeResult out{std::move(values), 0.0, false};
    const auto& v = out.values;
    const std::size_t n = v.size();
    bool monotone_growth = true;
    for (std::size_t i = 1; i < n; ++i) {
        if (!(std::abs(v[i]) > std::abs(v[i - 1])))
            monotone_growth = false;
    }
    const double exponent = -log_log_slope(eps, v);
    const bool over = std::any_of(v.begin(), v.end(), [&](double x) { return !std::isfinite(x) || std::abs(x) > th.divergence; });
    if (over || (monotone_growth && exponent >= 0.5)) {
        out.divergent = true;
        out.limit = std::numeric_limits<double>::infinity();
        return out;
    }
    // one Richardson step on the two finest entries, first-order error model
    const double e1 = eps[n - 2], e2 = eps[n - 1];
    out.limit = (v[n - 1] * e1 - v[n - 2] * e2) / (e1 - e2);
    return out;
}

} // namespace detail

/// Mixed second difference quotient of R on the diagonal along eps = eps'.
inline SecondDerivativeResult second_generalized_derivative(const CorrelationFunction& R, double tau,
                                                            const std::vector<double>& eps,
                                                            const LimitThresholds& th = {})
{
    detail::check_ladder(eps);
    std::vector<double> values;
    values.reserve(eps.size());
    for (double e : eps) {
        const double q = (R(tau + e, tau + e) - R(tau + e, tau) - R(tau, tau + e) + R(tau, tau)) / (e * e);
        values.push_back(q);
    }
    return detail::classify_second_derivative(eps, std::move(values), th);
}

/// Same quotient estimated from realizations: E[(X(tau + e) - X(tau))^2] / e^2.
inline SecondDerivativeResult second_generalized_derivative_mc(const FractalProcess& proc, double tau,
                                                               const std::vector<double>& eps, std::size_t n,
                                                               std::uint64_t seed, const LimitThresholds& th = {})
{
    detail::check_ladder(eps);
    std::vector<detail::MeanAccumulator> acc(eps.size());
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = detail::draw_realization(proc, seed, r);
        const double x0 = x(tau);
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const double q = (x(tau + eps[i]) - x0) / eps[i];
            acc[i].add(q * q);
        }
    }
    std::vector<double> values;
    for (const auto& a : acc)
        values.push_back(a.mean());
    return detail::classify_second_derivative(eps, std::move(values), th);
}

struct ContinuityResult {
    std::vector<double> deltas;
    std::vector<double> stderrs;
    double exponent;
    bool continuous;
};

namespace detail {

inline ContinuityResult classify_continuity(const std::vector<double>& eps, std::vector<double> deltas,
                                            std::vector<double> stderrs)
{
    ContinuityResult out{std::move(deltas), std::move(stderrs), 0.0, false};
    const auto& d = out.deltas;
    const auto& se = out.stderrs;
    const std::size_t n = d.size();
    out.exponent = log_log_slope(eps, d);
    const bool at_zero = d[n - 1] <= 10.0 * se[n - 1];
    bool monotone = true;
    for (std::size_t i = 1; i < n; ++i) {
        if (d[i] > d[i - 1] + 3.0 * std::hypot(se[i], se[i - 1]))
            monotone = false;
    }
    out.continuous = at_zero || (monotone && out.exponent >= 0.5);
    return out;
}

} // namespace detail

/// E[(X(tau + eps) - X(tau))^2] along the ladder from realizations.
inline ContinuityResult ms_continuity_check(const FractalProcess& proc, double tau, const std::vector<double>& eps,
                                            std::size_t n, std::uint64_t seed)
{
    detail::check_ladder(eps);
    if (n < 100)
        throw domain_error("ms_continuity_check needs n >= 100 realizations");
    std::vector<detail::MeanAccumulator> acc(eps.size());
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = detail::draw_realization(proc, seed, r);
        const double x0 = x(tau);
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const double d = x(tau + eps[i]) - x0;
            acc[i].add(d * d);
        }
    }
    std::vector<double> deltas, se;
    for (const auto& a : acc) {
        deltas.push_back(a.mean());
        se.push_back(a.std_error());
    }
    return detail::classify_continuity(eps, std::move(deltas), std::move(se));
}

/// Exact deltas R(tau+e, tau+e) - 2 R(tau+e, tau) + R(tau, tau) from an analytic R.
inline ContinuityResult ms_continuity_check(const CorrelationFunction& R, double tau, const std::vector<double>& eps)
{
    detail::check_ladder(eps);
    std::vector<double> deltas;
    for (double e : eps)
        deltas.push_back(std::max(0.0, R(tau + e, tau + e) - R(tau + e, tau) - R(tau, tau + e) + R(tau, tau)));
    return detail::classify_continuity(eps, std::move(deltas), std::vector<double>(eps.size(), 0.0));
}

struct DerivativeVerdict {
    bool differentiable;
    bool continuous;
    double value;  // generalized second derivative estimate (+inf when divergent)
    SecondDerivativeResult second;
    ContinuityResult continuity;
};

namespace detail {

inline DerivativeVerdict finish_verdict(SecondDerivativeResult second, ContinuityResult cont)
{
    DerivativeVerdict v{!second.divergent, cont.continuous, second.limit, std::move(second), std::move(cont)};
    if (v.differentiable && !v.continuous)
        throw invariant_violation("m.s. differentiable but not m.s. continuous");
    return v;
}

} // namespace detail

/// Differentiability from an analytic R, with the differentiable => continuous check.
inline DerivativeVerdict ms_derivative_check(const CorrelationFunction& R, double tau,
                                             const std::vector<double>& eps = dyadic_ladder())
{
    return detail::finish_verdict(second_generalized_derivative(R, tau, eps), ms_continuity_check(R, tau, eps));
}

/// Differentiability of a process: analytic R when present, otherwise Monte Carlo.
inline DerivativeVerdict ms_derivative_check(const FractalProcess& proc, double tau, std::size_t n,
                                             std::uint64_t seed, const std::vector<double>& eps = dyadic_ladder())
{
    if (proc.correlation)
        return ms_derivative_check(*proc.correlation, tau, eps);
    return detail::finish_verdict(second_generalized_derivative_mc(proc, tau, eps, n, seed),
                                  ms_continuity_check(proc, tau, eps, n, seed));
}

// ---------------------------------------------------------------------------
// Mean-square integral

struct ExistenceCheck {
    std::vector<std::size_t> cells;
    std::vector<double> values;  // double Riemann-Stieltjes sums (or E[Y_k^2])
    bool converged;
};

struct PartialSumCauchy {
    std::vector<std::size_t> cells;
    std::vector<double> ms_differences;  // E[(Y_{2k} - Y_k)^2]
    std::vector<double> stderrs;
    double second_moment;                // E[Y^2] at the finest k
    bool cauchy;
};

struct MsIntegralResult {
    double Y;
    double std_error;
    std::vector<double> realizations;
    ExistenceCheck existence;
};

namespace detail {

struct Panel {
    std::vector<double> tau;  // J at the midpoint tags
    std::vector<double> dS;
};

inline Panel make_panel(const StaircaseTable& table, double a, double b, std::size_t k)
{
    Panel p;
    p.tau.resize(k);
    p.dS.resize(k);
    double s_prev = table.S(a);
    for (std::size_t i = 1; i <= k; ++i) {
        const double t0 = a + (b - a) * static_cast<double>(i - 1) / static_cast<double>(k);
        const double t1 = i == k ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(k);
        const double s1 = table.S(t1);
        p.tau[i - 1] = table.S(0.5 * (t0 + t1));
        p.dS[i - 1] = s1 - s_prev;
        s_prev = s1;
    }
    return p;
}

inline double panel_sum(const Panel& p, const WeightFunction& f, double u, const Realization& x)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < p.tau.size(); ++i)
        sum += f(p.tau[i], u) * x(p.tau[i]) * p.dS[i];
    return sum;
}

inline void check_integral_args(const StaircaseTable& table, double a, double b, std::size_t k)
{
    if (!(a < b) || !table.curve().contains(a) || !table.curve().contains(b))
        throw domain_error("m.s. integral bounds must satisfy a < b inside the curve domain");
    if (k == 0)
        throw domain_error("m.s. integral needs k >= 1");
}

} // namespace detail

/// Existence pre-check: the double sum of f f R dS dS on k, 2k, 4k, 8k grids
/// must be finite and Cauchy. Without an analytic R, E[Y_k^2] (the same
/// quantity) is estimated from n realizations.
inline ExistenceCheck existence_precheck(const FractalProcess& proc, const StaircaseTable& table,
                                         const WeightFunction& f, double a, double b, double u, std::size_t k,
                                         std::size_t n, std::uint64_t seed, const LimitThresholds& th = {})
{
    detail::check_integral_args(table, a, b, k);
    ExistenceCheck out{{}, {}, false};
    for (std::size_t level = 0; level < 4; ++level) {
        const std::size_t cells = k << level;
        const auto panel = detail::make_panel(table, a, b, cells);
        double value = 0.0;
        if (proc.correlation) {
            std::vector<double> w(cells);
            for (std::size_t i = 0; i < cells; ++i)
                w[i] = f(panel.tau[i], u) * panel.dS[i];
            for (std::size_t i = 0; i < cells; ++i) {
                double row = 0.0;
                for (std::size_t j = 0; j < cells; ++j)
                    row += w[j] * (*proc.correlation)(panel.tau[i], panel.tau[j]);
                value += w[i] * row;
            }
        } else {
            detail::MeanAccumulator acc;
            for (std::size_t r = 0; r < n; ++r) {
                const double y = detail::panel_sum(panel, f, u, detail::draw_realization(proc, seed, r));
                acc.add(y * y);
            }
            value = acc.mean();
        }
        out.cells.push_back(cells);
        out.values.push_back(value);
    }
    const auto& v = out.values;
    const double last = v.back(), prev = v[v.size() - 2];
    out.converged = std::isfinite(last) && std::abs(last) < th.divergence &&
                    std::abs(last - prev) <= th.rtol * std::abs(last) + 1e-12;
    return out;
}

/// Empirical m.s. Cauchy test of the partial sums Y_k, Y_2k, Y_4k, Y_8k
/// under common realizations.
inline PartialSumCauchy partial_sum_cauchy(const FractalProcess& proc, const StaircaseTable& table,
                                           const WeightFunction& f, double a, double b, double u, std::size_t k,
                                           std::size_t n, std::uint64_t seed, const LimitThresholds& th = {})
{
    detail::check_integral_args(table, a, b, k);
    constexpr std::size_t levels = 4;
    std::vector<detail::Panel> panels;
    PartialSumCauchy out{{}, {}, {}, 0.0, false};
    for (std::size_t l = 0; l < levels; ++l) {
        panels.push_back(detail::make_panel(table, a, b, k << l));
        out.cells.push_back(k << l);
    }
    std::vector<detail::MeanAccumulator> diff(levels - 1);
    detail::MeanAccumulator second;
    std::array<double, levels> y{};
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = detail::draw_realization(proc, seed, r);
        for (std::size_t l = 0; l < levels; ++l)
            y[l] = detail::panel_sum(panels[l], f, u, x);
        for (std::size_t l = 0; l + 1 < levels; ++l)
            diff[l].add((y[l + 1] - y[l]) * (y[l + 1] - y[l]));
        second.add(y[levels - 1] * y[levels - 1]);
    }
    for (const auto& d : diff) {
        out.ms_differences.push_back(d.mean());
        out.stderrs.push_back(d.std_error());
    }
    out.second_moment = second.mean();
    const double last = out.ms_differences.back();
    out.cauchy = std::isfinite(last) &&
                 last <= th.rtol * th.rtol * out.second_moment + 3.0 * out.stderrs.back() + 1e-24;
    return out;
}

/// Definite m.s. integral Y(u) = integral over C(a, b) of f(tau, u) X(tau)
/// d_F^alpha tau, after the existence pre-check. Returns the ensemble mean,
/// its standard error and every realization.
inline MsIntegralResult ms_integral(const FractalProcess& proc, const StaircaseTable& table, const WeightFunction& f,
                                    double a, double b, double u, std::size_t k, std::size_t n, std::uint64_t seed)
{
    if (n == 0)
        throw domain_error("m.s. integral needs n >= 1");
    auto pre = existence_precheck(proc, table, f, a, b, u, k, n, seed);
    if (!pre.converged)
        throw existence_error("double integral of f f R does not converge; the m.s. integral does not exist");
    const auto panel = detail::make_panel(table, a, b, k);
    detail::MeanAccumulator acc;
    std::vector<double> ys;
    ys.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double y = detail::panel_sum(panel, f, u, detail::draw_realization(proc, seed, r));
        ys.push_back(y);
        acc.add(y);
    }
    return {acc.mean(), acc.std_error(), std::move(ys), std::move(pre)};
}

struct ImproperIntegralResult {
    double Y;
    double std_error;
    bool converged;
    std::vector<double> values;
    std::vector<double> stderrs;
};

/// Improper m.s. integral along an increasing ladder of upper parameters.
///
/// `k` is the cell count on C(a, b_0); longer segments keep that parameter
/// mesh, so successive values differ only by the added tail.
inline ImproperIntegralResult improper_ms_integral(const FractalProcess& proc, const StaircaseTable& table,
                                                   const WeightFunction& f, double a, double u,
                                                   const std::vector<double>& b_ladder, std::size_t k, std::size_t n,
                                                   std::uint64_t seed)
{
    if (b_ladder.size() < 2)
        throw domain_error("improper integral ladder needs at least two entries");
    for (std::size_t i = 1; i < b_ladder.size(); ++i) {
        if (!(b_ladder[i] > b_ladder[i - 1]))
            throw domain_error("improper integral ladder must be increasing");
    }
    ImproperIntegralResult out{0.0, 0.0, false, {}, {}};
    if (!(b_ladder.front() > a))
        throw domain_error("improper integral ladder must start above a");
    for (double b : b_ladder) {
        const double cells = std::round(static_cast<double>(k) * (b - a) / (b_ladder.front() - a));
        const auto r = ms_integral(proc, table, f, a, b, u, static_cast<std::size_t>(std::max(1.0, cells)), n, seed);
        out.values.push_back(r.Y);
        out.stderrs.push_back(r.std_error);
    }
    const std::size_t m = out.values.size();
    out.Y = out.values.back();
    out.std_error = out.stderrs.back();
    const double tol = std::max(1e-6, 3.0 * std::hypot(out.stderrs[m - 1], out.stderrs[m - 2]));
    out.converged = std::abs(out.values[m - 1] - out.values[m - 2]) < tol;
    return out;
}

// ---------------------------------------------------------------------------
// Limits of products

/// One realization of (X_n, X'_n, X, X') at sequence index n.
using JointSequenceSampler = std::function<std::array<double, 4>(Philox4x32&, double)>;

struct ProductLimitResult {
    std::vector<double> index;
    std::vector<double> products;  // E[X_n X'_n]
    std::vector<double> stderrs;
    double limit;                  // E[X X']
    double limit_stderr;
    bool converges;
};

/// Checks E[X_n X'_n] -> E[X X'] along an index ladder, within 3 combined stderr at the end.
inline ProductLimitResult product_limit_check(const JointSequenceSampler& seq, const std::vector<double>& index,
                                              std::size_t n, std::uint64_t seed)
{
    if (index.size() < 2)
        throw domain_error("product_limit_check needs at least two ladder indices");
    ProductLimitResult out{index, {}, {}, 0.0, 0.0, false};
    detail::MeanAccumulator lim;
    std::vector<detail::MeanAccumulator> acc(index.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < index.size(); ++i) {
            Philox4x32 rng(seed, r);
            const auto v = seq(rng, index[i]);
            acc[i].add(v[0] * v[1]);
            if (i == 0)
                lim.add(v[2] * v[3]);
        }
    }
    out.limit = lim.mean();
    out.limit_stderr = lim.std_error();
    for (const auto& a : acc) {
        out.products.push_back(a.mean());
        out.stderrs.push_back(a.std_error());
    }
    const double gap = std::abs(out.products.back() - out.limit);
    out.converges = gap <= 3.0 * std::hypot(out.stderrs.back(), out.limit_stderr) + 1e-12 * std::abs(out.limit);
    return out;
}

} // namespace fractalms

#endif // FRACTALMS_PROCESS_HPP
