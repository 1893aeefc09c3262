#ifndef FRACTALMS_TOOLS_CLI_APP_HPP
#define FRACTALMS_TOOLS_CLI_APP_HPP

#include "CLI11.hpp"
#include "fractalms/fractalms.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fractalms::cli {

inline constexpr const char* version = "0.1.0";

enum exit_code : int { ok = 0, user_error = 2, numerical_error = 3 };

/// Flat key=value configuration. Keys are the long flag names without dashes.
using RunConfig = std::map<std::string, std::string>;

struct KeySpec {
    const char* key;
    const char* fallback;
    const char* help;
};

// keys every subcommand understands
inline const std::vector<KeySpec>& global_keys()
{
    static const std::vector<KeySpec> keys = {
        {"seed", "12345", "RNG seed"},
        {"curve", "koch", "curve kind: koch|line"},
        {"level", "6", "Koch refinement level"},
        {"alpha", "auto", "order alpha: auto or a real"},
        {"a", "0", "line domain start"},
        {"b", "1", "line domain end"},
    };
    return keys;
}

inline const std::map<std::string, std::vector<KeySpec>>& command_keys()
{
    static const std::map<std::string, std::vector<KeySpec>> keys = {
        {"dimension", {{"tol", "1e-4", "bisection tolerance on alpha"}}},
        {"staircase",
         {{"p0", "", "staircase origin (default: domain start)"},
          {"grid", "0", "grid cells (0: curve edges, 1024 for a line)"},
          {"jmax", "", "rescale so S(b) - S(a) equals this"}}},
        {"cdf",
         {{"family", "memoryless", "memoryless|uniform"},
          {"lambda", "1", "memoryless rate"},
          {"grid", "0", "grid cells"},
          {"jmax", "1", "J range of the curve (empty: raw masses)"}}},
        {"sample",
         {{"family", "memoryless", "memoryless|uniform"},
          {"lambda", "1", "memoryless rate"},
          {"count", "1000", "number of draws"},
          {"grid", "0", "grid cells"},
          {"jmax", "1", "J range of the curve (empty: raw masses)"}}},
        {"correlation",
         {{"fixture", "cosine-phase", "linear-amplitude|cosine-phase|white-noise|brownian-like"},
          {"sigma2", "2", "amplitude variance for linear-amplitude"},
          {"points", "9", "J grid points"},
          {"n", "2000", "realizations"},
          {"jmax", "1", "J range of the curve"}}},
        {"msdiag",
         {{"fixture", "all", "fixture name or all"},
          {"sigma2", "2", "amplitude variance for linear-amplitude"},
          {"tau", "0.5", "diagnostic point (J coordinate)"},
          {"steps", "10", "dyadic ladder length"},
          {"n", "4000", "realizations for Monte Carlo checks"}}},
        {"sde",
         {{"mu", "2", "Beta law of A^2: mu"},
          {"nu", "1", "Beta law of A^2: nu"},
          {"a2", "", "deterministic A^2 (overrides mu, nu)"},
          {"ex0", "1", "E[X0]"},
          {"ex1", "1", "E[X1]"},
          {"ex0x1", "1", "E[X0 X1]"},
          {"ex0sq", "1", "E[X0^2]"},
          {"ex1sq", "1", "E[X1^2]"},
          {"N", "20", "terms per parity chain"},
          {"form", "diagonal", "second moment form: diagonal|exact"},
          {"grid", "20", "grid cells on the parameter domain"},
          {"n", "10000", "Monte Carlo realizations (0: skip)"},
          {"jmax", "1", "J range of the curve"}}},
    };
    return keys;
}

inline RunConfig parse_config_text(std::istream& in)
{
    RunConfig out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw domain_error("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty())
            throw domain_error("config line " + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

/// FNV-1a over the sorted, resolved "key=value\n" lines.
inline std::uint64_t config_hash(const RunConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [k, v] : cfg) {
        for (char c : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

inline std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline double get_double(const RunConfig& cfg, const std::string& key)
{
    const auto& v = cfg.at(key);
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return x;
    } catch (const std::logic_error&) {
        throw domain_error("'" + key + "' is not a number: '" + v + "'");
    }
}

inline long long get_int(const RunConfig& cfg, const std::string& key)
{
    const auto& v = cfg.at(key);
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return x;
    } catch (const std::logic_error&) {
        throw domain_error("'" + key + "' is not an integer: '" + v + "'");
    }
}

inline std::uint64_t get_seed(const RunConfig& cfg)
{
    const auto& v = cfg.at("seed");
    try {
        std::size_t pos = 0;
        const auto x = std::stoull(v, &pos);
        if (pos != v.size() || v.find('-') != std::string::npos)
            throw std::invalid_argument(v);
        return x;
    } catch (const std::logic_error&) {
        throw domain_error("'seed' must be a non-negative integer: '" + v + "'");
    }
}

inline std::optional<double> get_optional(const RunConfig& cfg, const std::string& key)
{
    if (cfg.at(key).empty())
        return std::nullopt;
    return get_double(cfg, key);
}

inline std::size_t get_count(const RunConfig& cfg, const std::string& key, long long min)
{
    const auto v = get_int(cfg, key);
    if (v < min)
        throw domain_error("'" + key + "' must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

/// Curve with alpha resolved, plus how alpha was obtained.
struct ResolvedCurve {
    std::shared_ptr<const FractalCurve> curve;
    double alpha;
    std::string alpha_source;
};

inline ResolvedCurve resolve_curve(const RunConfig& cfg)
{
    const auto& kind = cfg.at("curve");
    std::shared_ptr<FractalCurve> curve;
    if (kind == "koch") {
        curve = std::make_shared<FractalCurve>(build_koch(static_cast<int>(get_int(cfg, "level"))));
    } else if (kind == "line") {
        curve = std::make_shared<FractalCurve>(build_line(get_double(cfg, "a"), get_double(cfg, "b")));
    } else {
        throw domain_error("unknown curve '" + kind + "' (expected koch|line)");
    }
    const auto& a = cfg.at("alpha");
    if (a == "auto") {
        const double tol = 1e-4;
        const double est = gamma_dimension(*curve, curve->a(), curve->b(), tol);
        const double alpha = round_to_known_dimension(*curve, est, 1e-3);
        return {curve, alpha, "auto"};
    }
    const double alpha = get_double(cfg, "alpha");
    *curve = curve->with_alpha(alpha);
    return {curve, alpha, "fixed"};
}

inline std::shared_ptr<const StaircaseTable> make_table(const ResolvedCurve& rc, const RunConfig& cfg)
{
    StaircaseOptions opts;
    opts.grid_size = cfg.count("grid") ? get_count(cfg, "grid", 0) : 0;
    if (cfg.count("jmax")) {
        opts.total_mass = get_optional(cfg, "jmax");
        if (opts.total_mass && !(*opts.total_mass > 0.0))
            throw domain_error("'jmax' must be positive");
    }
    double p0 = rc.curve->a();
    if (cfg.count("p0") && !cfg.at("p0").empty())
        p0 = get_double(cfg, "p0");
    return std::make_shared<const StaircaseTable>(build_staircase(rc.curve, rc.alpha, p0, opts));
}

inline FractalProcess make_fixture(const std::string& name, const RunConfig& cfg)
{
    if (name == "linear-amplitude")
        return linear_amplitude_process(get_double(cfg, "sigma2"));
    if (name == "cosine-phase")
        return cosine_phase_process();
    if (name == "white-noise")
        return white_noise_process();
    if (name == "brownian-like")
        return brownian_like_process();
    throw domain_error("unknown fixture '" + name +
                       "' (expected linear-amplitude|cosine-phase|white-noise|brownian-like)");
}

class CsvOut {
public:
    explicit CsvOut(std::ostream& os) : os_(os) {}
    void meta(const std::string& line) { os_ << "# " << line << '\n'; }
    void header(const std::string& cols) { os_ << cols << '\n'; }
    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i)
            os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }
    void row(std::initializer_list<double> xs)
    {
        std::vector<std::string> cells;
        for (double x : xs)
            cells.push_back(fmt(x));
        row(cells);
    }

private:
    std::ostream& os_;
};

inline void write_preamble(CsvOut& csv, const std::string& command, const RunConfig& cfg, const ResolvedCurve* rc)
{
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    csv.meta(std::string("fractalms ") + version);
    csv.meta("command=" + command);
    csv.meta(std::string("config_hash=") + hash);
    csv.meta("seed=" + cfg.at("seed"));
    if (rc)
        csv.meta("curve=" + std::string(to_string(rc->curve->kind())) + ",level=" + std::to_string(rc->curve->level()) +
                 ",alpha=" + fmt(rc->alpha) + ",alpha_source=" + rc->alpha_source);
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_dimension(const RunConfig& cfg, std::ostream& os)
{
    const auto& kind = cfg.at("curve");
    std::shared_ptr<FractalCurve> curve;
    if (kind == "koch")
        curve = std::make_shared<FractalCurve>(build_koch(static_cast<int>(get_int(cfg, "level"))));
    else if (kind == "line")
        curve = std::make_shared<FractalCurve>(build_line(get_double(cfg, "a"), get_double(cfg, "b")));
    else
        throw domain_error("unknown curve '" + kind + "' (expected koch|line)");
    const double tol = get_double(cfg, "tol");
    std::vector<DimensionTrace> trace;
    const double dim = gamma_dimension(*curve, curve->a(), curve->b(), tol, &trace);

    CsvOut csv(os);
    ResolvedCurve rc{curve, dim, "estimated"};
    write_preamble(csv, "dimension", cfg, &rc);
    csv.header("delta,mass");
    for (const auto& step : trace) {
        csv.meta("alpha=" + fmt(step.alpha) + ",verdict=" + to_string(step.mass.kind) + ",rate=" + fmt(step.mass.rate));
        for (const auto& s : step.mass.sequence)
            csv.row({s.delta, s.coarse});
    }
    csv.meta("dimension=" + fmt(dim));
    return ok;
}

inline int cmd_staircase(const RunConfig& cfg, std::ostream& os)
{
    const auto rc = resolve_curve(cfg);
    const auto table = make_table(rc, cfg);
    CsvOut csv(os);
    write_preamble(csv, "staircase", cfg, &rc);
    csv.meta("p0=" + fmt(table->p0()) + ",scale=" + fmt(table->scale()) + ",plateaus=" +
             std::to_string(table->plateau_count()));
    csv.header("t,S");
    const auto& t = table->t_values();
    const auto& s = table->s_values();
    for (std::size_t i = 0; i < t.size(); ++i)
        csv.row({t[i], s[i]});
    return ok;
}

inline DistributionOnCurve make_distribution(const RunConfig& cfg, std::shared_ptr<const StaircaseTable> table)
{
    const auto& fam = cfg.at("family");
    if (fam == "memoryless") {
        const double lambda = get_double(cfg, "lambda");
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw domain_error("'lambda' must be positive");
        return DistributionOnCurve::memoryless(std::move(table), lambda);
    }
    if (fam == "uniform")
        return DistributionOnCurve::uniform(std::move(table));
    throw domain_error("unknown family '" + fam + "' (expected memoryless|uniform)");
}

inline int cmd_cdf(const RunConfig& cfg, std::ostream& os)
{
    const auto rc = resolve_curve(cfg);
    const auto table = make_table(rc, cfg);
    const auto dist = make_distribution(cfg, table);
    CsvOut csv(os);
    write_preamble(csv, "cdf", cfg, &rc);
    csv.meta("family=" + cfg.at("family") + ",lambda=" + cfg.at("lambda"));
    csv.meta("j_range=" + fmt(table->s_min()) + ":" + fmt(table->s_max()));
    csv.header("t,J,F_X");
    const auto& t = table->t_values();
    const auto& s = table->s_values();
    for (std::size_t i = 0; i < t.size(); ++i)
        csv.row({t[i], s[i], dist.cdf_at_j(s[i])});
    csv.meta("final_F_X=" + fmt(dist.cdf_at_j(table->s_max())));
    return ok;
}

inline int cmd_sample(const RunConfig& cfg, std::ostream& os)
{
    const auto rc = resolve_curve(cfg);
    const auto table = make_table(rc, cfg);
    const auto dist = make_distribution(cfg, table);
    const auto count = get_count(cfg, "count", 1);
    const auto set = sample(dist, get_seed(cfg), count);
    CsvOut csv(os);
    write_preamble(csv, "sample", cfg, &rc);
    csv.meta("family=" + cfg.at("family") + ",lambda=" + cfg.at("lambda"));
    csv.meta("count=" + std::to_string(count) + ",clipped=" + std::to_string(set.clipped));
    std::string cols = "i,t,J";
    const auto dim = rc.curve->dimension();
    for (std::size_t c = 0; c < dim; ++c)
        cols += ",x" + std::to_string(c + 1);
    csv.header(cols);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<std::string> cells = {std::to_string(i), fmt(set.points[i].t), fmt(set.j[i])};
        for (double x : set.points[i].x)
            cells.push_back(fmt(x));
        csv.row(cells);
    }
    return ok;
}

inline int cmd_correlation(const RunConfig& cfg, std::ostream& os)
{
    const auto rc = resolve_curve(cfg);
    const auto table = make_table(rc, cfg);
    const auto proc = make_fixture(cfg.at("fixture"), cfg);
    const auto points = get_count(cfg, "points", 2);
    const auto n = get_count(cfg, "n", 100);
    std::vector<double> taus;
    const auto& c = table->curve();
    for (std::size_t i = 0; i < points; ++i)
        taus.push_back(table->S(c.a() + (c.b() - c.a()) * static_cast<double>(i) / static_cast<double>(points - 1)));
    const auto grid = correlation_grid(proc, taus, n, get_seed(cfg));
    CsvOut csv(os);
    write_preamble(csv, "correlation", cfg, &rc);
    csv.meta("fixture=" + proc.name + ",n=" + std::to_string(n));
    csv.header("J1,J2,R,stderr");
    for (std::size_t i = 0; i < points; ++i) {
        for (std::size_t j = 0; j < points; ++j)
            csv.row({taus[i], taus[j], grid.at(i, j), grid.se(i, j)});
    }
    return ok;
}

inline int cmd_msdiag(const RunConfig& cfg, std::ostream& os)
{
    std::vector<std::string> names;
    if (cfg.at("fixture") == "all")
        names = {"linear-amplitude", "cosine-phase", "white-noise", "brownian-like"};
    else
        names = {cfg.at("fixture")};
    std::vector<FractalProcess> procs;
    for (const auto& nm : names)
        procs.push_back(make_fixture(nm, cfg));
    const double tau = get_double(cfg, "tau");
    const auto steps = static_cast<int>(get_count(cfg, "steps", 3));
    const auto n = get_count(cfg, "n", 100);
    const auto seed = get_seed(cfg);
    const auto eps = dyadic_ladder(steps);

    CsvOut csv(os);
    write_preamble(csv, "msdiag", cfg, nullptr);
    csv.meta("tau=" + fmt(tau) + ",steps=" + std::to_string(steps) + ",n=" + std::to_string(n));
    csv.header("fixture,continuous,differentiable,second_derivative,continuity_exponent,finest_quotient");
    bool violated = false;
    for (std::size_t i = 0; i < procs.size(); ++i) {
        const auto second = procs[i].correlation ? second_generalized_derivative(*procs[i].correlation, tau, eps)
                                                 : second_generalized_derivative_mc(procs[i], tau, eps, n, seed);
        const auto cont = procs[i].correlation ? ms_continuity_check(*procs[i].correlation, tau, eps)
                                               : ms_continuity_check(procs[i], tau, eps, n, seed);
        const bool differentiable = !second.divergent;
        if (differentiable && !cont.continuous)
            violated = true;
        csv.row({names[i], cont.continuous ? "yes" : "no", differentiable ? "yes" : "no", fmt(second.limit),
                 fmt(cont.exponent), fmt(second.values.back())});
    }
    if (violated) {
        csv.meta("invariant_violation=differentiable but not continuous");
        return numerical_error;
    }
    return ok;
}

inline int cmd_sde(const RunConfig& cfg, std::ostream& os)
{
    MomentSpec spec;
    spec.ex0 = get_double(cfg, "ex0");
    spec.ex1 = get_double(cfg, "ex1");
    spec.ex0x1 = get_double(cfg, "ex0x1");
    spec.ex0sq = get_double(cfg, "ex0sq");
    spec.ex1sq = get_double(cfg, "ex1sq");
    if (const auto a2 = get_optional(cfg, "a2")) {
        spec.a2 = A2Moments::deterministic(*a2);
    } else {
        spec.a2 = A2Moments::beta(get_double(cfg, "mu"), get_double(cfg, "nu"));
    }
    spec.validate();
    const auto N = static_cast<int>(get_count(cfg, "N", 1));
    SecondMomentForm form;
    if (cfg.at("form") == "diagonal")
        form = SecondMomentForm::diagonal;
    else if (cfg.at("form") == "exact")
        form = SecondMomentForm::exact;
    else
        throw domain_error("unknown form '" + cfg.at("form") + "' (expected diagonal|exact)");
    const auto cells = get_count(cfg, "grid", 1);
    const auto n = get_count(cfg, "n", 0);

    const auto rc = resolve_curve(cfg);
    RunConfig tcfg = cfg;
    tcfg.erase("grid");
    const auto table = make_table(rc, tcfg);
    const auto& c = table->curve();
    std::vector<double> ts, js;
    for (std::size_t i = 0; i <= cells; ++i) {
        const double t = i == cells ? c.b() : c.a() + (c.b() - c.a()) * static_cast<double>(i) / static_cast<double>(cells);
        ts.push_back(t);
        js.push_back(table->S(t));
    }
    const auto mean = truncated_mean(spec, N, js);
    const auto second = truncated_second_moment(spec, N, js, form);
    const auto var = truncated_variance(spec, N, js, form);
    std::optional<McMoments> mc;
    if (n > 0)
        mc = mc_solution_moments(spec, n, get_seed(cfg), js);

    CsvOut csv(os);
    write_preamble(csv, "sde", cfg, &rc);
    csv.meta("a2_law=" + spec.a2.describe() + ",N=" + std::to_string(N) + ",form=" + cfg.at("form") +
             ",n=" + std::to_string(n));
    csv.meta("negative_variance_points=" + std::to_string(var.negative_points));
    csv.header("t,J,mean,second_moment,variance,mc_mean,mc_stderr");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < js.size(); ++i) {
        csv.row({ts[i], js[i], mean[i], second[i], var.variance[i], mc ? mc->mean[i] : nan,
                 mc ? mc->mean_stderr[i] : nan});
    }
    return ok;
}

} // namespace detail

/// Runs one CLI invocation. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Fractal mean-square calculus toolkit", "fractalms"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", version);

    std::string config_path, out_path;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> flag_opts;
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--out", out_path, "output file (default stdout)");
    for (const auto& k : global_keys())
        flag_opts[k.key] = app.add_option(std::string("--") + k.key, flags[k.key], k.help);

    std::map<std::string, CLI::App*> subs;
    std::map<std::string, std::map<std::string, CLI::Option*>> sub_opts;
    for (const auto& [name, keys] : command_keys()) {
        auto* sub = app.add_subcommand(name);
        subs[name] = sub;
        for (const auto& k : keys) {
            const std::string key = k.key;
            sub_opts[name][key] = sub->add_option("--" + key, flags[name + "." + key], k.help);
        }
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << version << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return user_error;
    }

    std::string command;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed())
            command = name;
    }

    try {
        // defaults < config file < flags
        RunConfig cfg;
        for (const auto& k : global_keys())
            cfg[k.key] = k.fallback;
        for (const auto& k : command_keys().at(command))
            cfg[k.key] = k.fallback;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in)
                throw domain_error("cannot open config file '" + config_path + "'");
            for (const auto& [k, v] : parse_config_text(in)) {
                if (!cfg.count(k))
                    throw domain_error("unknown config key '" + k + "' for command " + command);
                cfg[k] = v;
            }
        }
        for (const auto& [k, opt] : flag_opts) {
            if (opt->count())
                cfg[k] = flags[k];
        }
        for (const auto& [k, opt] : sub_opts[command]) {
            if (opt->count())
                cfg[k] = flags[command + "." + k];
        }
        detail::get_seed(cfg);

        std::ostringstream body;
        int rc = ok;
        if (command == "dimension")
            rc = detail::cmd_dimension(cfg, body);
        else if (command == "staircase")
            rc = detail::cmd_staircase(cfg, body);
        else if (command == "cdf")
            rc = detail::cmd_cdf(cfg, body);
        else if (command == "sample")
            rc = detail::cmd_sample(cfg, body);
        else if (command == "correlation")
            rc = detail::cmd_correlation(cfg, body);
        else if (command == "msdiag")
            rc = detail::cmd_msdiag(cfg, body);
        else
            rc = detail::cmd_sde(cfg, body);

        if (out_path.empty() || out_path == "-") {
            out << body.str();
        } else {
            std::ofstream f(out_path, std::ios::binary);
            if (!f)
                throw domain_error("cannot open output file '" + out_path + "'");
            f << body.str();
        }
        if (rc == numerical_error)
            err << "error: invariant violated (see report)\n";
        return rc;
    } catch (const domain_error& e) {
        err << "error: " << e.what() << '\n';
        return user_error;
    } catch (const resource_error& e) {
        err << "error: " << e.what() << '\n';
        return user_error;
    } catch (const error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_error;
    }
}

} // namespace fractalms::cli

#endif // FRACTALMS_TOOLS_CLI_APP_HPP
