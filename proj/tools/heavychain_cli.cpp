// Command-line harness: wires JSON configs to the experiment sweeps and the
// chaining utilities, with reproducible seeded outputs.
//
// Exit codes: 0 success, 1 config error, 2 numerical failure, 3 acceptance
// band violation under --check.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "heavychain/chaining.hpp"
#include "heavychain/experiments.hpp"
#include "heavychain/parallel.hpp"

namespace {

using heavychain::ExperimentConfig;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
    bool plot = false;
    bool check = false;
    bool force = false;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file")->required();
    cmd->add_option("--seed", opts.seed, "master seed (overrides config)");
    cmd->add_option("--trials", opts.trials, "trials per cell (overrides config)");
    cmd->add_option("--out-dir", opts.out_dir, "output directory (overrides config)");
    cmd->add_option("--format", opts.format, "output format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--plot", opts.plot, "emit SVG plots");
    cmd->add_flag("--check", opts.check, "evaluate the config's acceptance bands");
    cmd->add_flag("--force", opts.force, "overwrite existing outputs");
    cmd->add_option("--jobs", opts.jobs, "worker cap (0 = all cores); results unchanged");
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

ExperimentConfig build_config(const CommonOpts& opts, const std::string& experiment) {
    nlohmann::json j = load_json(opts.config_path);
    if (!j.contains("experiment")) j["experiment"] = experiment;
    ExperimentConfig cfg = heavychain::config_from_json(j);
    if (cfg.experiment != experiment)
        throw std::invalid_argument("config experiment '" + cfg.experiment +
                                    "' does not match subcommand '" + experiment + "'");
    // precedence: flags > config file > HEAVYCHAIN_SEED
    if (cfg.seed == 0 && !opts.seed) {
        if (const char* env = std::getenv("HEAVYCHAIN_SEED"))
            cfg.seed = std::strtoull(env, nullptr, 10);
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.trials) cfg.trials = *opts.trials;
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    if (opts.format) cfg.format = *opts.format;
    if (opts.plot) cfg.plot = true;
    return cfg;
}

std::string one_line_summary(const heavychain::SweepResult& res) {
    const auto& s = res.summary;
    std::ostringstream out;
    out << res.experiment << ": ";
    if (res.experiment == "baiyin") {
        const auto& cell = s["cells"].front();
        out << "median smax/sqrtN=" << cell["smax_norm"]["median"].get<double>()
            << " smin/sqrtN=" << cell["smin_norm"]["median"].get<double>()
            << " fitted c4_max=" << cell["c4_max"].get<double>();
    } else if (res.experiment == "covariance") {
        const auto& cell = s["cells"].front();
        out << "median deviation=" << cell["deviation"]["median"].get<double>();
        if (cell.contains("fitted"))
            out << " fitted=" << cell["fitted"]["median"].get<double>();
    } else if (res.experiment == "theorem_b") {
        out << "max LHS/(E/sqrtN+E^2/N)=" << s["max_ratio"].get<double>();
    } else if (res.experiment == "symmetrization") {
        out << s["passes"].get<std::size_t>() << "/" << s["reps"].get<std::size_t>()
            << " repetitions satisfied the inequality at x=" << s["x"].get<double>();
    } else if (res.experiment == "weak_lp_tail") {
        out << "log-log slope=" << s["slope"].get<double>() << " (target "
            << s["target_slope"].get<double>() << ")";
    } else if (res.experiment == "tail_lemma") {
        out << "failure_rate=" << s["failure_rate"].get<double>()
            << " theory_bound=" << s["theory_bound"].get<double>();
    } else if (res.experiment == "omega_events") {
        out << "Pr(Omega_all)=" << s["pr_omega_all"].get<double>() << " conclusions "
            << s["conclusions_pass"].get<std::size_t>() << "/"
            << s["good_resamples"].get<std::size_t>()
            << " c2_fit=" << s["c2_fit"].get<double>();
    } else if (res.experiment == "gamma_sandwich") {
        out << "ratio range [" << s["ratio_min"].get<double>() << ", "
            << s["ratio_max"].get<double>() << "]";
    }
    return out.str();
}

int run_sweep(const CommonOpts& opts, const std::string& experiment) {
    ExperimentConfig cfg = build_config(opts, experiment);
    const auto result = heavychain::run_experiment(cfg);
    heavychain::write_outputs(result, cfg, opts.force);
    std::cout << one_line_summary(result) << "\n";
    if (opts.check) {
        const auto failures = heavychain::evaluate_check(cfg.check, result.summary);
        if (!failures.empty()) {
            for (const auto& f : failures) std::cerr << "[check] " << f << "\n";
            return 3;
        }
        std::cout << "all acceptance bands passed\n";
    }
    return 0;
}

// gamma subcommand: exact value for small point sets, greedy upper bound
// otherwise. Config keys: points (array of vectors), beta, metric (l2|linf).
int run_gamma(const CommonOpts& opts) {
    const auto j = load_json(opts.config_path);
    const auto points = j.at("points").get<std::vector<heavychain::Vec>>();
    const double beta = j.value("beta", 2.0);
    const std::string metric_name = j.value("metric", "l2");
    const auto metric =
        metric_name == "linf" ? heavychain::metric_linf() : heavychain::metric_l2();
    double value;
    std::string method;
    if (points.size() <= 6) {
        value = heavychain::gamma_beta_bruteforce(points, metric, beta, 3);
        method = "bruteforce";
    } else {
        const auto eta = heavychain::make_eta_standard(
            std::log2(static_cast<double>(points.size())) + 2.0);
        value = heavychain::gamma_beta_value(
            heavychain::greedy_admissible(points, metric, eta), beta, metric);
        method = "greedy-upper-bound";
    }
    std::cout << "gamma_" << beta << "(" << points.size() << " points, " << metric_name
              << ") = " << value << " [" << method << "]\n";
    return 0;
}

// decompose-verify subcommand: load a serialized decomposition and phi family,
// run the subset checks, report the first violation if any.
int run_decompose_verify(const CommonOpts& opts) {
    const auto j = load_json(opts.config_path);
    const auto D = heavychain::decomposition_from_json(j.at("decomposition"));
    const auto& pj = j.at("phi");
    heavychain::PhiFamily f =
        pj.at("kind") == "lq"
            ? heavychain::PhiFamily::make_lq(pj.at("q").get<double>(),
                                             pj.value("eps", 0.0),
                                             pj.at("N").get<std::size_t>())
            : heavychain::PhiFamily::make_beta(pj.at("beta").get<double>(),
                                               pj.at("N").get<std::size_t>());
    const auto report = heavychain::verify_decomposition(D, f);
    if (report.holds) {
        std::cout << "decomposition holds";
        double min_margin = std::numeric_limits<double>::infinity();
        for (double m : report.margins) min_margin = std::min(min_margin, m);
        std::cout << " (min slack " << min_margin << ")\n";
        const auto rhs =
            heavychain::bernoulli_rhs(D, f, j.value("r", 1.0), heavychain::RhsMode::full);
        std::cout << "bernoulli rhs (full mode) = " << rhs.value << "\n";
        return 0;
    }
    const auto& v = *report.first_violation;
    std::cout << "decomposition FAILS at level "
              << (v.level == std::numeric_limits<std::size_t>::max()
                      ? std::string("theta-sum")
                      : std::to_string(v.level))
              << " element " << v.element << " k=" << v.k << " lhs=" << v.lhs
              << " rhs=" << v.rhs << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"heavychain: chaining functionals and heavy-tail random matrix sweeps"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> sweep_cmds = {
        {"baiyin", "extreme singular value scaling sweep"},
        {"covariance", "sample covariance operator-norm sweep"},
        {"theorem-b", "quadratic process vs exponential-sup kernel"},
        {"symmetrize", "two-sided symmetrization inequality estimate"},
        {"tail-lemma", "order-statistic tail selector failure rate"},
        {"omega-check", "sparse-shell event probabilities and conclusions"},
        {"weak-lp-tail", "weak-lp norm exceedance decay"},
        {"gamma-sandwich", "gamma_1+gamma_2 vs exponential sup ratios"},
    };
    const std::map<std::string, std::string> cmd_to_experiment = {
        {"baiyin", "baiyin"},
        {"covariance", "covariance"},
        {"theorem-b", "theorem_b"},
        {"symmetrize", "symmetrization"},
        {"tail-lemma", "tail_lemma"},
        {"omega-check", "omega_events"},
        {"weak-lp-tail", "weak_lp_tail"},
        {"gamma-sandwich", "gamma_sandwich"},
    };

    std::map<std::string, CommonOpts> opts;
    for (const auto& [name, desc] : sweep_cmds) {
        auto* cmd = app.add_subcommand(name, desc);
        add_common(cmd, opts[name]);
    }
    auto* gamma_cmd = app.add_subcommand("gamma", "gamma_beta value of a point set");
    add_common(gamma_cmd, opts["gamma"]);
    auto* dv_cmd =
        app.add_subcommand("decompose-verify", "check a serialized decomposition");
    add_common(dv_cmd, opts["decompose-verify"]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints usage / help text
        return code == 0 ? 0 : 1;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        heavychain::par::set_jobs(opts[name].jobs);
        if (name == "gamma") return run_gamma(opts[name]);
        if (name == "decompose-verify") return run_decompose_verify(opts[name]);
        return run_sweep(opts[name], cmd_to_experiment.at(name));
    } catch (const heavychain::OutputExists& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}
