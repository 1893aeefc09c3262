// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include "cli_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace fractalms;
using namespace fractalms::testing;

namespace {

const double kd = std::log(4.0) / std::log(3.0);

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

Outcome gamma_dimension_koch()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run({"dimension", "--curve", "koch", "--level", "6"});
    const double secs = seconds_since(t0);
    if (r.code != 0)
        return {false, "exit " + std::to_string(r.code) + ": " + r.err};
    const double dim = std::stod(parse_csv(r.out).meta_value("dimension"));
    return {std::abs(dim - kd) <= 0.02 && secs < 30.0, "dimension=" + num(dim) + " runtime=" + num(secs) + "s"};
}

Outcome staircase_linearity()
{
    const auto r = run({"staircase", "--curve", "koch", "--level", "6", "--alpha", "1.2618595071429148"});
    if (r.code != 0)
        return {false, r.err};
    const auto csv = parse_csv(r.out);
    const double s1 = csv.num(csv.rows.size() - 1, "S");
    double worst = 0.0;
    std::size_t fouradic = 0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double t = csv.num(i, "t");
        if (t * 4096.0 != std::floor(t * 4096.0))
            continue;
        ++fouradic;
        worst = std::max(worst, std::abs(csv.num(i, "S") - t * s1) / s1);
    }
    return {worst < 1e-6 && fouradic == 4097, "max rel dev=" + num(worst) + " over " + std::to_string(fouradic) + " points"};
}

Outcome classical_degeneration()
{
    const auto table = build_staircase(build_line(0, 1), 1.0, 0.0);
    CurveFunction sq = [](const CurvePoint& p) { return p.x[0] * p.x[0]; };
    CurveFunction id = [](const CurvePoint& p) { return p.x[0]; };
    double worst = 0.0;
    for (int i = 1; i <= 20; ++i) {
        const double th = i / 21.0;
        worst = std::max(worst, std::abs(falpha_derivative(sq, table, {th}, 1e-4) - 2.0 * th));
    }
    const double integral = falpha_integral(id, table, 0.0, 1.0, 64);
    const double ierr = std::abs(integral - 0.5);
    return {worst < 1e-6 && ierr < 1e-9, "derivative err=" + num(worst) + " integral err=" + num(ierr)};
}

Outcome memoryless_cdf()
{
    const auto r = run({"cdf", "--lambda", "1"});
    if (r.code != 0)
        return {false, r.err};
    const auto csv = parse_csv(r.out);
    bool monotone = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double j = csv.num(i, "J"), f = csv.num(i, "F_X");
        worst = std::max(worst, std::abs(f - (1.0 - std::exp(-j))));
        if (i > 0 && f < csv.num(i - 1, "F_X"))
            monotone = false;
    }
    const bool at_zero = csv.num(0, "J") == 0.0 && csv.num(0, "F_X") == 0.0;

    const std::size_t n = 100000;
    const auto s = run({"sample", "--lambda", "1", "--count", std::to_string(n)});
    if (s.code != 0)
        return {false, s.err};
    const auto sc = parse_csv(s.out);
    std::vector<double> js;
    for (std::size_t i = 0; i < sc.rows.size(); ++i)
        js.push_back(sc.num(i, "J"));
    const double jmax = csv.num(csv.rows.size() - 1, "J");
    const double ks = ks_statistic(js, [](double x) { return 1.0 - std::exp(-x); }, jmax);
    const double band = 1.36 / std::sqrt(static_cast<double>(n));
    return {monotone && at_zero && worst <= 1e-12 && ks < band && js.size() == n,
            "pointwise err=" + num(worst) + " KS=" + num(ks) + " band=" + num(band)};
}

Outcome coefficient_regression()
{
    MomentSpec s;
    s.ex0 = 1.0;
    s.ex1 = 1.0;
    s.ex0x1 = 1.0;
    s.ex0sq = 1.0;
    s.ex1sq = 1.0;
    s.a2 = A2Moments::beta(2.0, 1.0);
    const auto m = mean_coefficients(s, 20);
    const auto q = second_moment_coefficients(s, 20);
    const double em = std::max({std::abs(m[0] - 1.0), std::abs(m[1] - 1.0), std::abs(m[2] + 1.0 / 3.0),
                                std::abs(m[3] + 1.0 / 9.0)});
    const double eq = std::max({std::abs(q[0] - 1.0), std::abs(q[1] - 2.0), std::abs(q[2] - 1.0)});
    return {em <= 1e-12 && eq <= 1e-12, "mean err=" + num(em) + " second moment err=" + num(eq)};
}

Outcome oscillator_mean()
{
    const auto r = run({"sde", "--a2", "4", "--ex0", "1", "--ex1", "0", "--ex1sq", "0", "--ex0x1", "0", "--jmax", "2",
                        "--N", "20", "--grid", "400", "--n", "0"});
    if (r.code != 0)
        return {false, r.err};
    const auto csv = parse_csv(r.out);
    double worst = 0.0, jhi = 0.0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double j = csv.num(i, "J");
        jhi = std::max(jhi, j);
        worst = std::max(worst, std::abs(csv.num(i, "mean") - std::cos(2.0 * j)));
    }
    return {worst < 1e-8 && std::abs(jhi - 2.0) < 1e-9, "sup err=" + num(worst) + " on J in [0," + num(jhi) + "]"};
}

Outcome monte_carlo_coherence()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run({"sde", "--mu", "2", "--nu", "1", "--n", "100000", "--grid", "20", "--jmax", "1"});
    const double secs = seconds_since(t0);
    if (r.code != 0)
        return {false, r.err};
    const auto csv = parse_csv(r.out);
    double worst = 0.0;
    bool ok = csv.rows.size() == 21;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double gap = std::abs(csv.num(i, "mean") - csv.num(i, "mc_mean"));
        const double se = csv.num(i, "mc_stderr");
        if (gap > 3.0 * se + 1e-15)
            ok = false;
        if (se > 0)
            worst = std::max(worst, gap / se);
    }
    return {ok && secs < 60.0, "max |series-mc|/stderr=" + num(worst) + " runtime=" + num(secs) + "s"};
}

Outcome ms_diagnostics()
{
    const auto eps = dyadic_ladder();
    const auto lin = second_generalized_derivative(*linear_amplitude_process(2.0).correlation, 0.5, eps);
    const bool exact = std::all_of(lin.values.begin(), lin.values.end(), [](double v) { return v == 2.0; });
    const bool wn_cont = ms_continuity_check(white_noise_process(), 0.5, eps, 4000, 12345).continuous;
    const auto r = run({"msdiag"});
    bool consistent = r.code == 0;
    const auto csv = parse_csv(r.out);
    for (const auto& row : csv.rows) {
        if (row[csv.col("differentiable")] == "yes" && row[csv.col("continuous")] != "yes")
            consistent = false;
    }
    return {exact && !wn_cont && consistent && csv.rows.size() == 4,
            std::string("linear exact=") + (exact ? "yes" : "no") + " white-noise continuous=" +
                (wn_cont ? "yes" : "no") + " implication held=" + (consistent ? "yes" : "no")};
}

Outcome integral_existence()
{
    StaircaseOptions o;
    o.total_mass = 1.0;
    const auto table = build_staircase(build_koch(6), kd, 0.0, o);
    WeightFunction one = [](double, double) { return 1.0; };
    WeightFunction sing = [](double tau, double) { return 1.0 / tau; };
    struct Case {
        FractalProcess p;
        WeightFunction f;
        bool expect;
    };
    const std::vector<Case> cases = {{constant_process(1.0), one, true},
                                     {random_constant_process(1.0), one, true},
                                     {affine_amplitude_process(1.0, 1.0), one, true},
                                     {constant_process(1.0), sing, false}};
    std::string detail;
    bool ok = true;
    for (const auto& c : cases) {
        const auto pre = existence_precheck(c.p, table, c.f, 0.0, 1.0, 0.0, 64, 2000, 7);
        const auto cau = partial_sum_cauchy(c.p, table, c.f, 0.0, 1.0, 0.0, 64, 2000, 7);
        ok = ok && pre.converged == cau.cauchy && pre.converged == c.expect;
        detail += c.p.name + (c.expect ? "" : "/singular") + ":" + (pre.converged ? "exists" : "diverges") + "/" +
                  (cau.cauchy ? "cauchy" : "not-cauchy") + " ";
    }
    return {ok, detail};
}

Outcome determinism()
{
    const std::vector<std::vector<std::string>> commands = {
        {"dimension"},
        {"staircase"},
        {"cdf"},
        {"sample", "--count", "2000"},
        {"correlation", "--n", "500"},
        {"msdiag", "--n", "1000"},
        {"sde", "--n", "5000"},
    };
    std::string failed;
    for (const auto& c : commands) {
        const auto a = run(c), b = run(c);
        if (a.code != 0 || a.out != b.out || a.out.empty())
            failed += c[0] + " ";
    }
    return {failed.empty(), failed.empty() ? "7 commands byte-identical" : "differs: " + failed};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gamma-dimension of Koch level 6", gamma_dimension_koch},
        {"staircase linearity on Koch", staircase_linearity},
        {"classical degeneration on a line", classical_degeneration},
        {"memoryless CDF and sampling (lambda=1)", memoryless_cdf},
        {"truncated moment coefficients", coefficient_regression},
        {"oscillator mean equals cos(2J)", oscillator_mean},
        {"Monte Carlo coherence of the series mean", monte_carlo_coherence},
        {"mean-square diagnostic suite", ms_diagnostics},
        {"m.s. integral existence coherence", integral_existence},
        {"CLI determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass)
            ++failures;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
