#ifndef FRACTALMS_SDE_HPP
#define FRACTALMS_SDE_HPP

#include "fractalms/errors.hpp"
#include "fractalms/philox.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

// Series solution of the random oscillator (D_F^alpha)^2 X + A^2 X = 0 with
// X(0) = X0, D_F^alpha X(0) = X1, written as a power series in J(tau).
// N counts terms per parity chain: the truncated series has degree 2N + 1.

namespace fractalms {

/// E[B^m] for B ~ Beta(mu, nu): prod_{k<m} (mu + k) / (mu + nu + k).
inline double beta_raw_moment(double mu, double nu, int m)
{
    if (!(mu > 0.0) || !(nu > 0.0))
        throw domain_error("Beta parameters must be positive");
    if (m < 0)
        throw domain_error("moment order must be non-negative");
    double out = 1.0;
    for (int k = 0; k < m; ++k)
        out *= (mu + k) / (mu + nu + k);
    return out;
}

/// Source of E[(A^2)^m]: a Beta(mu, nu) variable or a deterministic value.
class A2Moments {
public:
    struct Beta {
        double mu;
        double nu;
    };
    struct Deterministic {
        double a2;
    };

    static A2Moments beta(double mu, double nu)
    {
        if (!(mu > 0.0) || !(nu > 0.0))
            throw domain_error("Beta parameters must be positive");
        return A2Moments(Beta{mu, nu});
    }

    static A2Moments deterministic(double a2)
    {
        if (!(a2 >= 0.0))
            throw domain_error("deterministic A^2 must be non-negative");
        return A2Moments(Deterministic{a2});
    }

    bool is_beta() const { return std::holds_alternative<Beta>(law_); }
    const std::variant<Beta, Deterministic>& law() const { return law_; }

    /// E[(A^2)^m]; 1 at m = 0.
    double raw(int m) const
    {
        if (const auto* b = std::get_if<Beta>(&law_))
            return beta_raw_moment(b->mu, b->nu, m);
        if (m < 0)
            throw domain_error("moment order must be non-negative");
        return std::pow(std::get<Deterministic>(law_).a2, m);
    }

    double mean() const { return raw(1); }
    double variance() const { return raw(2) - raw(1) * raw(1); }

    /// One draw of A^2.
    double sample(Philox4x32& rng) const
    {
        if (const auto* b = std::get_if<Beta>(&law_)) {
            std::gamma_distribution<double> gx(b->mu, 1.0), gy(b->nu, 1.0);
            const double x = gx(rng);
            const double y = gy(rng);
            return x / (x + y);
        }
        return std::get<Deterministic>(law_).a2;
    }

    std::string describe() const
    {
        char buf[128];
        if (const auto* b = std::get_if<Beta>(&law_))
            std::snprintf(buf, sizeof buf, "beta(%.17g,%.17g)", b->mu, b->nu);
        else
            std::snprintf(buf, sizeof buf, "deterministic(%.17g)", std::get<Deterministic>(law_).a2);
        return buf;
    }

private:
    explicit A2Moments(std::variant<Beta, Deterministic> law) : law_(law) {}
    std::variant<Beta, Deterministic> law_;
};

/// Joint moments of the initial data and the A^2 law (A^2 independent of X0, X1).
struct MomentSpec {
    double ex0 = 1.0;
    double ex0sq = 1.0;
    double ex1 = 0.0;
    double ex1sq = 0.0;
    double ex0x1 = 0.0;
    A2Moments a2 = A2Moments::deterministic(1.0);

    void validate() const
    {
        constexpr double tol = 1e-12;
        if (ex0sq < ex0 * ex0 - tol)
            throw domain_error("E[X0^2] < E[X0]^2");
        if (ex1sq < ex1 * ex1 - tol)
            throw domain_error("E[X1^2] < E[X1]^2");
        if (std::abs(ex0x1) > std::sqrt(ex0sq * ex1sq) + tol)
            throw domain_error("|E[X0 X1]| exceeds sqrt(E[X0^2] E[X1^2])");
    }
};

namespace detail {

/// 1/k! for k = 0..n.
inline std::vector<double> inverse_factorials(int n)
{
    std::vector<double> f(static_cast<std::size_t>(n) + 1, 1.0);
    for (int k = 1; k <= n; ++k)
        f[k] = f[k - 1] / k;
    return f;
}

inline void check_order(int N)
{
    if (N < 1)
        throw domain_error("truncation order N must be >= 1");
}

} // namespace detail

/// Horner evaluation of sum c_k x^k.
inline double evaluate_polynomial(std::span<const double> c, double x)
{
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it)
        acc = acc * x + *it;
    return acc;
}

/// Coefficients X_0 .. X_{2N+1} of the series, from X_{m+2} = -A^2 X_m / ((m+2)(m+1)).
inline std::vector<double> frobenius_coefficients(double x0, double x1, double a2, int N)
{
    detail::check_order(N);
    std::vector<double> c(2 * static_cast<std::size_t>(N) + 2);
    c[0] = x0;
    c[1] = x1;
    for (std::size_t m = 0; m + 2 < c.size(); ++m)
        c[m + 2] = -a2 * c[m] / static_cast<double>((m + 2) * (m + 1));
    return c;
}

/// Coefficients of E[X_N(tau)] as a polynomial in J.
inline std::vector<double> mean_coefficients(const MomentSpec& spec, int N)
{
    detail::check_order(N);
    const auto inv = detail::inverse_factorials(2 * N + 1);
    std::vector<double> c(2 * static_cast<std::size_t>(N) + 2);
    for (int m = 0; m <= N; ++m) {
        const double sign = m % 2 ? -1.0 : 1.0;
        const double am = spec.a2.raw(m);
        c[2 * m] = spec.ex0 * sign * am * inv[2 * m];
        c[2 * m + 1] = spec.ex1 * sign * am * inv[2 * m + 1];
    }
    return c;
}

enum class SecondMomentForm {
    diagonal,  // diagonal E[(A^2)^{2m}] terms plus the X0 X1 cross double sum
    exact   // full Cauchy product of the truncated series
};

/// Coefficients of E[X_N(tau)^2] as a polynomial in J.
inline std::vector<double> second_moment_coefficients(const MomentSpec& spec, int N,
                                                      SecondMomentForm form = SecondMomentForm::diagonal)
{
    detail::check_order(N);
    const auto inv = detail::inverse_factorials(2 * N + 1);
    std::vector<double> c(4 * static_cast<std::size_t>(N) + 3, 0.0);
    for (int n = 0; n <= N; ++n) {
        for (int m = 0; m <= N; ++m) {
            const double sign = (n + m) % 2 ? -1.0 : 1.0;
            const double am = spec.a2.raw(n + m);
            c[2 * (n + m) + 1] += 2.0 * spec.ex0x1 * sign * am * inv[2 * n] * inv[2 * m + 1];
            if (form == SecondMomentForm::exact) {
                c[2 * (n + m)] += spec.ex0sq * sign * am * inv[2 * n] * inv[2 * m];
                c[2 * (n + m) + 2] += spec.ex1sq * sign * am * inv[2 * n + 1] * inv[2 * m + 1];
            }
        }
    }
    if (form == SecondMomentForm::diagonal) {
        for (int m = 0; m <= N; ++m) {
            const double a2m = spec.a2.raw(2 * m);
            c[4 * m] += spec.ex0sq * a2m * inv[2 * m] * inv[2 * m];
            c[4 * m + 2] += spec.ex1sq * a2m * inv[2 * m + 1] * inv[2 * m + 1];
        }
    }
    return c;
}

inline std::vector<double> truncated_mean(const MomentSpec& spec, int N, std::span<const double> js)
{
    spec.validate();
    const auto c = mean_coefficients(spec, N);
    std::vector<double> out;
    out.reserve(js.size());
    for (double j : js)
        out.push_back(evaluate_polynomial(c, j));
    return out;
}

inline std::vector<double> truncated_second_moment(const MomentSpec& spec, int N, std::span<const double> js,
                                                   SecondMomentForm form = SecondMomentForm::diagonal)
{
    spec.validate();
    const auto c = second_moment_coefficients(spec, N, form);
    std::vector<double> out;
    out.reserve(js.size());
    for (double j : js)
        out.push_back(evaluate_polynomial(c, j));
    return out;
}

struct VarianceResult {
    std::vector<double> variance;
    std::size_t negative_points = 0;  // points where variance < -1e-9 (truncation diagnostic)
};

/// Var[X_N] = E[X_N^2] - E[X_N]^2 pointwise.
inline VarianceResult truncated_variance(const MomentSpec& spec, int N, std::span<const double> js,
                                         SecondMomentForm form = SecondMomentForm::diagonal)
{
    const auto mean = truncated_mean(spec, N, js);
    const auto second = truncated_second_moment(spec, N, js, form);
    VarianceResult out;
    out.variance.resize(js.size());
    for (std::size_t i = 0; i < js.size(); ++i) {
        out.variance[i] = second[i] - mean[i] * mean[i];
        if (out.variance[i] < -1e-9)
            ++out.negative_points;
    }
    return out;
}

/// Pathwise solution x0 cos(a j) + (x1 / a) sin(a j); x0 + x1 j when a = 0.
inline double closed_form_sample(double a, double x0, double x1, double j)
{
    if (a == 0.0)
        return x0 + x1 * j;
    return x0 * std::cos(a * j) + x1 / a * std::sin(a * j);
}

struct McMoments {
    std::vector<double> mean;
    std::vector<double> second;
    std::vector<double> mean_stderr;
    std::vector<double> second_stderr;
    std::size_t zero_amplitude_draws = 0;  // draws with A = 0 that used the limit form
};

/// Draws (A^2, X0, X1) n times and averages the closed-form paths.
///
/// (X0, X1) is Gaussian with the given means and covariance (degenerate
/// components are deterministic); A^2 follows the given law, independently.
/// Realization r uses Philox stream r.
inline McMoments mc_solution_moments(const MomentSpec& spec, std::size_t n, std::uint64_t seed,
                                     std::span<const double> js)
{
    spec.validate();
    if (n == 0)
        throw domain_error("Monte Carlo sample count must be positive");
    const double var0 = std::max(0.0, spec.ex0sq - spec.ex0 * spec.ex0);
    const double var1 = std::max(0.0, spec.ex1sq - spec.ex1 * spec.ex1);
    const double cov = spec.ex0x1 - spec.ex0 * spec.ex1;
    if (cov * cov > var0 * var1 + 1e-12)
        throw domain_error("initial-condition covariance is not positive semi-definite");
    const double s0 = std::sqrt(var0);
    const double l10 = s0 > 0.0 ? cov / s0 : 0.0;
    const double l11 = std::sqrt(std::max(0.0, var1 - l10 * l10));

    const std::size_t m = js.size();
    // Welford running means of X and X^2 and their centered sums of squares
    std::vector<double> mx(m, 0.0), vx(m, 0.0), mx2(m, 0.0), vx2(m, 0.0);
    McMoments out;
    std::normal_distribution<double> normal;
    for (std::size_t r = 0; r < n; ++r) {
        Philox4x32 rng(seed, r);
        const double a2 = spec.a2.sample(rng);
        const double z1 = var0 > 0.0 || var1 > 0.0 ? normal(rng) : 0.0;
        const double z2 = var1 > 0.0 ? normal(rng) : 0.0;
        normal.reset();
        const double x0 = spec.ex0 + s0 * z1;
        const double x1 = spec.ex1 + l10 * z1 + l11 * z2;
        const double a = std::sqrt(a2);
        if (a == 0.0 && x1 != 0.0)
            ++out.zero_amplitude_draws;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = closed_form_sample(a, x0, x1, js[i]);
            const double k = static_cast<double>(r + 1);
            const double d = x - mx[i];
            mx[i] += d / k;
            vx[i] += d * (x - mx[i]);
            const double d2 = x * x - mx2[i];
            mx2[i] += d2 / k;
            vx2[i] += d2 * (x * x - mx2[i]);
        }
    }
    const double dn = static_cast<double>(n);
    auto stderr_of = [dn](double ss) { return dn < 2.0 ? 0.0 : std::sqrt(std::max(0.0, ss) / (dn - 1.0) / dn); };
    for (std::size_t i = 0; i < m; ++i) {
        out.mean.push_back(mx[i]);
        out.second.push_back(mx2[i]);
        out.mean_stderr.push_back(stderr_of(vx[i]));
        out.second_stderr.push_back(stderr_of(vx2[i]));
    }
    return out;
}

/// Max |p''(J) + a2 p(J)| over the grid for the truncated pathwise series p,
/// with p'' by a central difference of step h.
inline double residual_check(double a2, double x0, double x1, int N, std::span<const double> js, double h = 1e-3)
{
    if (!(h > 0.0))
        throw domain_error("difference step must be positive");
    const auto c = frobenius_coefficients(x0, x1, a2, N);
    double worst = 0.0;
    for (double j : js) {
        const double p = evaluate_polynomial(c, j);
        const double d2 = (evaluate_polynomial(c, j + h) - 2.0 * p + evaluate_polynomial(c, j - h)) / (h * h);
        worst = std::max(worst, std::abs(d2 + a2 * p));
    }
    return worst;
}

} // namespace fractalms

#endif // FRACTALMS_SDE_HPP
