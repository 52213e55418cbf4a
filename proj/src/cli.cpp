#include "seqtest/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "seqtest/bounds.hpp"
#include "seqtest/distributions.hpp"
#include "seqtest/eprocess.hpp"
#include "seqtest/klinf.hpp"
#include "seqtest/simharness.hpp"
#include "seqtest/stopping.hpp"

namespace seqtest {

namespace {

const std::map<std::string, KernelKind> kKernelNames = {
    {"lr", KernelKind::LikelihoodRatio},
    {"numeraire", KernelKind::NumeraireSubGaussian},
    {"mixture", KernelKind::MixtureSubGaussian},
    {"klinf-empirical", KernelKind::KLinfEmpirical},
    {"tilde-dh", KernelKind::TildeKLinfDH},
    {"lil", KernelKind::LILConfidence},
    {"constraint-mixture", KernelKind::ConstraintMixture},
};

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt6f(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string config_path;
    std::string kernel = "numeraire";
    std::string dist;
    std::string null_dist;
    double alpha = 0.05;
    double m0 = 0.5;
    long reps = 1000;
    long horizon = 100000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_path;
    double r_n_const = 3.0;
    double lil_c1 = 1.7, lil_c2 = 2.0, lil_c3 = 5.2;
    int nodes = 1025;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool needs_alt,
                      bool alpha_required = false) {
    cmd->add_option("--kernel", o.kernel,
                    "e-process kernel: lr, numeraire, mixture, klinf-empirical, "
                    "tilde-dh, lil, constraint-mixture");
    auto* dist = cmd->add_option("--dist", o.dist,
                                 "alternative distribution (bern:p, gauss:m, "
                                 "point:x, atoms:a1,..@w1,..)");
    if (needs_alt) dist->required();
    cmd->add_option("--null-dist", o.null_dist, "null distribution, same grammar");
    auto* alpha = cmd->add_option("--alpha", o.alpha, "error level in (0,1)");
    if (alpha_required) alpha->required();
    cmd->add_option("--m0", o.m0, "null mean threshold in (0,1)");
    cmd->add_option("--reps", o.reps, "Monte-Carlo replications");
    cmd->add_option("--horizon", o.horizon, "max samples per trajectory");
    cmd->add_option("--seed", o.seed, "master seed (64-bit)");
    cmd->add_option("--workers", o.workers, "parallel worker threads");
    cmd->add_option("--out", o.out_path, "CSV output path");
    cmd->add_option("--r-n-const", o.r_n_const,
                    "constant in R_n = c log(1 + log2(2n)) for tilde-dh");
    cmd->add_option("--lil-c1", o.lil_c1, "LIL boundary constant c1");
    cmd->add_option("--lil-c2", o.lil_c2, "LIL boundary constant c2 (inside log log)");
    cmd->add_option("--lil-c3", o.lil_c3, "LIL boundary constant c3 (over alpha)");
    cmd->add_option("--nodes", o.nodes, "quadrature nodes per axis (constraint-mixture)");
    cmd->add_option("--config", o.config_path,
                    "config file with 'key = value' lines, # comments; inline "
                    "flags take precedence");
}

// Expands "--config file" into "--key value" arguments appended after the
// inline ones. Keys already given inline are skipped so flags win; unknown
// keys surface as regular CLI parse errors.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream file(path);
    if (!file) throw ConfigError("config: cannot read '" + path + "'");
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    auto given_inline = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> out = args;
    std::string line;
    int line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: empty key on line " + std::to_string(line_no));
        if (given_inline("--" + key)) continue;
        out.push_back("--" + key);
        out.push_back(value);
    }
    return out;
}

void check_common(const CommonOpts& o, bool alpha_used) {
    if (alpha_used && !(o.alpha > 0.0 && o.alpha < 1.0))
        throw ConfigError("alpha must lie in (0,1)");
    if (!(o.m0 > 0.0 && o.m0 < 1.0)) throw ConfigError("m0 must lie in (0,1)");
    if (o.reps < 1) throw ConfigError("reps must be >= 1");
    if (o.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (o.workers < 1) throw ConfigError("workers must be >= 1");
}

KernelConfig build_kernel(const CommonOpts& o) {
    auto it = kKernelNames.find(o.kernel);
    if (it == kKernelNames.end()) throw ConfigError("kernel: unknown name '" + o.kernel + "'");
    KernelConfig k;
    k.kind = it->second;
    k.m = o.m0;
    k.r_n_const = o.r_n_const;
    k.lil_c1 = o.lil_c1;
    k.lil_c2 = o.lil_c2;
    k.lil_c3 = o.lil_c3;
    k.lil_alpha = o.alpha;
    if (k.kind == KernelKind::LikelihoodRatio) {
        if (o.null_dist.empty() || o.dist.empty())
            throw ConfigError("kernel lr requires both dist and null-dist");
        k.lr_null = parse_dist(o.null_dist);
        k.lr_alt = parse_dist(o.dist);
    }
    if (k.kind == KernelKind::ConstraintMixture) {
        ConstraintSystem sys;
        const double m0 = o.m0;
        sys.constraint_functions = {[m0](double x) { return x - m0; }};
        sys.box_lo = {-1.0, -1.0};
        sys.box_hi = {1.0, 1.0};
        sys.quadrature_nodes_per_axis = o.nodes;
        k.constraint = sys;
    }
    return k;
}

ExperimentConfig build_experiment(const CommonOpts& o, bool needs_alt) {
    ExperimentConfig cfg;
    cfg.kernel = build_kernel(o);
    if (!o.dist.empty()) cfg.alt_dist = parse_dist(o.dist);
    else if (needs_alt) throw ConfigError("dist is required");
    if (!o.null_dist.empty()) cfg.null_dist = parse_dist(o.null_dist);
    cfg.alpha = o.alpha;
    cfg.replications = o.reps;
    cfg.horizon = o.horizon;
    cfg.master_seed = o.seed;
    cfg.workers = o.workers;
    cfg.output_path = o.out_path;
    return cfg;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(key + ": cannot parse '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

void maybe_write_csv(const CommonOpts& o, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    if (!o.out_path.empty()) write_csv(o.out_path, header, rows);
}

int cmd_klinf(const CommonOpts& o, bool tilde, std::ostream& out) {
    if (o.dist.empty()) throw ConfigError("dist is required");
    const Dist d = parse_dist(o.dist);
    auto* discrete = std::get_if<DiscreteBoundedDist>(&d);
    if (!discrete) throw ConfigError("dist: klinf requires a discrete distribution");
    if (!(o.m0 > 0.0 && o.m0 < 1.0)) throw ConfigError("m0 must lie in (0,1)");
    const DualSolution sol =
        tilde ? klinf_tilde(*discrete, o.m0) : klinf_bounded(*discrete, o.m0);
    out << "value " << fmt6f(sol.value) << "\n";
    out << "lambda " << fmt6f(sol.lambda_star) << "\n";
    out << "at_boundary " << (sol.at_boundary ? 1 : 0) << "\n";
    return 0;
}

int cmd_simulate(const CommonOpts& o, std::ostream& out) {
    check_common(o, true);
    const ExperimentConfig cfg = build_experiment(o, true);
    const TauEstimate est = estimate_expected_tau(cfg, nullptr);
    out << "mean_tau " << fmt6(est.mean) << "\n";
    out << "stderr " << fmt6(est.standard_error) << "\n";
    out << "nonstop_frac " << fmt6(est.nonstop_fraction) << "\n";
    maybe_write_csv(o, {"alpha", "mean_tau", "stderr", "nonstop_frac"},
                    {{cfg.alpha, est.mean, est.standard_error, est.nonstop_fraction}});
    return 0;
}

int cmd_type1(const CommonOpts& o, std::ostream& out) {
    check_common(o, true);
    if (o.null_dist.empty()) throw ConfigError("null-dist is required");
    const ExperimentConfig cfg = build_experiment(o, false);
    const Type1Result res = type1_experiment(cfg);
    out << "crossing_rate " << fmt6(res.crossing_rate) << "\n";
    out << "binomial_se " << fmt6(res.binomial_se) << "\n";
    maybe_write_csv(o, {"alpha", "crossing_rate", "binomial_se", "reps"},
                    {{cfg.alpha, res.crossing_rate, res.binomial_se,
                      static_cast<double>(res.replications)}});
    return 0;
}

int cmd_scale_alpha(const CommonOpts& o, const std::string& alphas_str,
                    double ref_klinf, std::ostream& out) {
    check_common(o, false);
    if (!(ref_klinf > 0.0)) throw ConfigError("ref-klinf must be positive");
    ExperimentConfig cfg = build_experiment(o, true);
    cfg.alpha_grid = parse_double_list(alphas_str, "alphas");
    const ScalingResult res = alpha_scaling(cfg, ref_klinf);
    out << "fitted_slope " << fmt6(res.fitted_slope) << "\n";
    out << "reference_slope " << fmt6(res.reference_slope) << "\n";
    std::vector<std::vector<double>> rows;
    for (const auto& r : res.rows)
        rows.push_back({r.alpha, r.mean_tau, r.standard_error, r.nonstop_fraction,
                        r.lb_floor});
    maybe_write_csv(o, {"alpha", "mean_tau", "stderr", "nonstop_frac", "lb_floor"},
                    rows);
    return 0;
}

int cmd_scale_gap(const CommonOpts& o, const std::string& deltas_str, bool gauss,
                  std::ostream& out) {
    check_common(o, true);
    const ExperimentConfig cfg = build_experiment(o, false);
    const std::vector<double> deltas = parse_double_list(deltas_str, "deltas");
    std::vector<Dist> alts;
    std::vector<double> klinfs;
    for (double d : deltas) {
        if (gauss) {
            alts.push_back(GaussianDist{d, 1.0});
            klinfs.push_back(klinf_gaussian(d, 0.0));
        } else {
            const double q = o.m0 - d;
            if (!(q > 0.0 && q < 1.0))
                throw ConfigError("deltas: m0 - delta outside (0,1)");
            DiscreteBoundedDist alt = DiscreteBoundedDist::bernoulli(q);
            klinfs.push_back(klinf_bounded(alt, o.m0).value);
            alts.push_back(std::move(alt));
        }
    }
    const std::vector<GapRow> rows = gap_scaling(cfg, deltas, alts, klinfs);
    std::vector<std::vector<double>> csv;
    for (const auto& r : rows) {
        out << "delta " << fmt6(r.delta) << " klinf " << fmt6(r.klinf) << " mean_tau "
            << fmt6(r.mean_tau) << " ratio " << fmt6(r.ratio) << "\n";
        csv.push_back({r.delta, r.klinf, r.mean_tau, r.standard_error,
                       r.nonstop_fraction, r.ratio});
    }
    maybe_write_csv(o, {"delta", "klinf", "mean_tau", "stderr", "nonstop_frac", "ratio"},
                    csv);
    return 0;
}

int cmd_concentration(const CommonOpts& o, const std::string& n_grid_str, double eps,
                      long n_max, std::ostream& out) {
    check_common(o, true);
    if (o.dist.empty()) throw ConfigError("dist is required");
    const Dist d = parse_dist(o.dist);
    auto* P = std::get_if<DiscreteBoundedDist>(&d);
    if (!P) throw ConfigError("dist: concentration requires a discrete distribution");
    std::vector<long> n_grid;
    for (double v : parse_double_list(n_grid_str, "n-grid"))
        n_grid.push_back(static_cast<long>(v));
    const ConcentrationResult res = concentration_experiment(
        *P, o.m0, n_grid, eps, n_max, o.alpha, o.reps, o.seed, o.workers);
    std::vector<std::vector<double>> rows;
    for (const auto& r : res.fixed_n) {
        out << "n " << r.n << " rate " << fmt6(r.empirical_rate) << " bound "
            << fmt6(r.analytic_bound) << "\n";
        rows.push_back({static_cast<double>(r.n), r.eps, r.empirical_rate,
                        r.analytic_bound, r.binomial_se});
    }
    out << "time_uniform_rate " << fmt6(res.time_uniform_rate) << " alpha "
        << fmt6(res.time_uniform_alpha) << "\n";
    maybe_write_csv(o, {"n", "eps", "rate", "bound", "binomial_se"}, rows);
    return 0;
}

int cmd_meta(const CommonOpts& o, std::ostream& out) {
    check_common(o, true);
    if (!(o.alpha < 0.5)) throw ConfigError("alpha must lie in (0,0.5) for meta");
    const ExperimentConfig cfg = build_experiment(o, true);
    const MetaResult res = meta_experiment(cfg);
    out << "base_mean_tau " << fmt6(res.base_mean_tau) << "\n";
    out << "meta_mean_samples " << fmt6(res.meta_mean_samples) << "\n";
    out << "overhead_bound " << fmt6(res.overhead_bound) << "\n";
    maybe_write_csv(o,
                    {"alpha", "base_mean_tau", "meta_mean_samples", "meta_stderr",
                     "overhead_bound"},
                    {{cfg.alpha, res.base_mean_tau, res.meta_mean_samples,
                      res.meta_standard_error, res.overhead_bound}});
    return 0;
}

int cmd_bounds(double alpha, double klinf, std::ostream& out) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
    if (!(klinf > 0.0)) throw ConfigError("klinf must be positive");
    out << fmt6(lb_expected_samples(alpha, klinf)) << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Sequential testing laboratory: e-process kernels, KL_inf dual "
                 "solvers, stopping rules, and Monte-Carlo experiments"};
    app.require_subcommand(1);

    CommonOpts o;
    bool tilde = false;
    std::string alphas_str, deltas_str, n_grid_str;
    double ref_klinf = 0.0, eps = 0.1, bounds_alpha = 0.05, bounds_klinf = 0.0;
    long n_max = 16384;
    bool gap_gauss = false;

    auto* klinf_cmd = app.add_subcommand(
        "klinf", "one-shot KL_inf dual solve for a discrete distribution");
    add_common_flags(klinf_cmd, o, true);
    klinf_cmd->add_option("--m", o.m0, "mean threshold in (0,1), alias of --m0");
    klinf_cmd->add_flag("--tilde", tilde, "restrict the dual multiplier to [-1,1]");

    auto* sim_cmd = app.add_subcommand(
        "simulate", "Monte-Carlo expected stopping time under the alternative");
    add_common_flags(sim_cmd, o, true, true);

    auto* type1_cmd = app.add_subcommand(
        "type1", "empirical crossing rate under a null distribution");
    add_common_flags(type1_cmd, o, false, true);

    auto* sa_cmd = app.add_subcommand(
        "scale-alpha", "mean tau vs log(1/alpha) regression over an alpha grid");
    add_common_flags(sa_cmd, o, true);
    sa_cmd->add_option("--alphas", alphas_str, "comma list, strictly decreasing")
        ->required();
    sa_cmd->add_option("--ref-klinf", ref_klinf, "reference KL_inf for the slope")
        ->required();

    auto* sg_cmd = app.add_subcommand(
        "scale-gap", "mean tau across shrinking-gap alternatives");
    add_common_flags(sg_cmd, o, false);
    sg_cmd->add_option("--deltas", deltas_str, "comma list of gaps")->required();
    sg_cmd->add_flag("--gauss", gap_gauss,
                     "alternatives gauss:delta instead of bern:(m0 - delta)");

    auto* conc_cmd = app.add_subcommand(
        "concentration", "empirical deviation rates vs analytic bounds");
    add_common_flags(conc_cmd, o, true);
    conc_cmd->add_option("--n-grid", n_grid_str, "comma list of sample sizes")
        ->required();
    conc_cmd->add_option("--eps", eps, "deviation size");
    conc_cmd->add_option("--n-max", n_max, "time-uniform check horizon");

    auto* meta_cmd = app.add_subcommand(
        "meta", "interleaved geometric-level copies of the base test");
    add_common_flags(meta_cmd, o, true);

    auto* bounds_cmd = app.add_subcommand(
        "bounds", "closed-form expected-sample floor log(1/alpha)/klinf");
    bounds_cmd->add_option("--alpha", bounds_alpha, "error level in (0,1]")->required();
    bounds_cmd->add_option("--klinf", bounds_klinf, "separation KL_inf > 0")->required();

    std::vector<std::string> expanded;
    try {
        expanded = expand_config(args);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    }
    std::vector<std::string> argv(expanded.rbegin(), expanded.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (klinf_cmd->parsed()) return cmd_klinf(o, tilde, out);
        if (sim_cmd->parsed()) return cmd_simulate(o, out);
        if (type1_cmd->parsed()) return cmd_type1(o, out);
        if (sa_cmd->parsed()) return cmd_scale_alpha(o, alphas_str, ref_klinf, out);
        if (sg_cmd->parsed()) return cmd_scale_gap(o, deltas_str, gap_gauss, out);
        if (conc_cmd->parsed())
            return cmd_concentration(o, n_grid_str, eps, n_max, out);
        if (meta_cmd->parsed()) return cmd_meta(o, out);
        if (bounds_cmd->parsed()) return cmd_bounds(bounds_alpha, bounds_klinf, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << "\n";
        return 1;
    }
    err << "config error: missing subcommand\n";
    return 2;
}

}  // namespace seqtest
