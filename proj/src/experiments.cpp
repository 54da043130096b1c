#include "heavychain/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "heavychain/linalg.hpp"
#include "heavychain/norms.hpp"
#include "heavychain/parallel.hpp"
#include "heavychain/rng.hpp"

namespace heavychain {

double quantile(std::vector<double> values, double q) {
    require(!values.empty(), "quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

namespace {

nlohmann::json summarize(const std::vector<double>& v) {
    nlohmann::json j;
    j["median"] = quantile(v, 0.5);
    j["q05"] = quantile(v, 0.05);
    j["q95"] = quantile(v, 0.95);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= std::max<std::size_t>(1, v.size() - 1);
    j["mean"] = mean;
    j["stderr"] = std::sqrt(var / static_cast<double>(v.size()));
    return j;
}

// Cell seeds derive from the cell's parameters, never its grid position, so a
// cell's records do not depend on what other cells share the grid.
std::uint64_t cell_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return derive_seed(master, a, b);
}

std::vector<Vec> signed_coordinate_family(std::size_t n) {
    std::vector<Vec> T;
    T.reserve(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        Vec e(n, 0.0);
        e[j] = 1.0;
        T.push_back(e);
        e[j] = -1.0;
        T.push_back(e);
    }
    return T;
}

std::vector<Vec> random_unit_family(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::vector<Vec> T(count, Vec(n, 0.0));
    for (std::size_t i = 0; i < count; ++i) {
        Engine eng = make_engine(derive_seed(seed, i));
        std::normal_distribution<double> normal(0.0, 1.0);
        double norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            T[i][j] = normal(eng);
            norm += T[i][j] * T[i][j];
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < n; ++j) T[i][j] /= norm == 0.0 ? 1.0 : norm;
    }
    return T;
}

std::vector<Vec> random_sparse_family(std::size_t n, std::size_t count, std::size_t k,
                                      std::uint64_t seed) {
    std::vector<Vec> T(count, Vec(n, 0.0));
    for (std::size_t i = 0; i < count; ++i) {
        Engine eng = make_engine(derive_seed(seed, i));
        std::vector<std::size_t> idx(n);
        for (std::size_t j = 0; j < n; ++j) idx[j] = j;
        for (std::size_t j = 0; j < k; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, n - 1);
            std::swap(idx[j], idx[pick(eng)]);
        }
        std::normal_distribution<double> normal(0.0, 1.0);
        double norm = 0.0;
        std::vector<double> vals(k);
        for (std::size_t j = 0; j < k; ++j) {
            vals[j] = normal(eng);
            norm += vals[j] * vals[j];
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < k; ++j) T[i][idx[j]] = vals[j] / (norm == 0.0 ? 1.0 : norm);
    }
    return T;
}

} // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.experiment = j.at("experiment").get<std::string>();
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("n")) cfg.n_grid = g["n"].get<std::vector<std::size_t>>();
        if (g.contains("beta")) cfg.beta_grid = g["beta"].get<std::vector<double>>();
        if (g.contains("N")) cfg.N_grid = g["N"].get<std::vector<std::size_t>>();
    }
    if (j.contains("distribution"))
        cfg.distribution = distribution_from_json(j["distribution"]);
    cfg.trials = j.value("trials", std::size_t{50});
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("params")) {
        const auto& p = j["params"];
        cfg.params.u = p.value("u", cfg.params.u);
        cfg.params.r = p.value("r", cfg.params.r);
        cfg.params.eps = p.value("eps", cfg.params.eps);
        cfg.params.kappa3 = p.value("kappa3", cfg.params.kappa3);
        cfg.params.kappa4 = p.value("kappa4", cfg.params.kappa4);
        cfg.params.c1 = p.value("c1", cfg.params.c1);
        cfg.params.p = p.value("p", cfg.params.p);
        cfg.params.s1 = p.value("s1", cfg.params.s1);
        cfg.params.ell = p.value("ell", cfg.params.ell);
        cfg.params.directions = p.value("directions", cfg.params.directions);
        cfg.params.probe_count = p.value("probe_count", cfg.params.probe_count);
        cfg.params.resamples = p.value("resamples", cfg.params.resamples);
        cfg.params.e_trials = p.value("e_trials", cfg.params.e_trials);
        cfg.params.net_points = p.value("net_points", cfg.params.net_points);
        cfg.params.sparse_points = p.value("sparse_points", cfg.params.sparse_points);
        cfg.params.sparsity = p.value("sparsity", cfg.params.sparsity);
        cfg.params.inner_samples = p.value("inner_samples", cfg.params.inner_samples);
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        cfg.out_dir = o.value("dir", cfg.out_dir);
        cfg.format = o.value("format", cfg.format);
        cfg.plot = o.value("plot", cfg.plot);
    }
    if (j.contains("check")) cfg.check = j["check"];
    return cfg;
}

double gine_zinn_threshold(double q, double d_lq, std::size_t N) {
    require(q > 2.0, "gine_zinn_threshold requires q > 2");
    if (q >= 4.0) return d_lq * d_lq * std::sqrt(static_cast<double>(N));
    return d_lq * d_lq * std::pow(static_cast<double>(N), 2.0 / q);
}

double reference_envelope(const std::string& kind, std::size_t n, std::size_t N,
                          const nlohmann::json& params) {
    require(n >= 2 && N >= 2, "reference_envelope requires n, N >= 2");
    const double nd = static_cast<double>(n), Nd = static_cast<double>(N);
    if (kind == "rudelson") return std::sqrt(nd * std::log(nd) / Nd);
    if (kind == "alpt") return std::sqrt(nd / Nd);
    if (kind == "vershynin") {
        const double q = params.at("q").get<double>();
        const double ll = std::log(std::log(nd));
        return ll * ll * std::pow(nd / Nd, 0.5 - 2.0 / q);
    }
    if (kind == "sv") {
        const double eta = params.at("eta").get<double>();
        return std::pow(nd / Nd, eta / (2.0 * eta + 2.0));
    }
    throw std::invalid_argument("reference_envelope: unknown kind " + kind);
}

// ---------------------------------------------------------------------------

SweepResult run_baiyin(const ExperimentConfig& cfg) {
    require(!cfg.n_grid.empty() && !cfg.beta_grid.empty(),
            "baiyin requires n and beta grids");
    require(cfg.trials >= 1, "baiyin requires trials >= 1");
    require(cfg.distribution.is_scalar_law() ||
                cfg.distribution.kind == DistKind::coordinate_measure,
            "baiyin requires an i.i.d.-entry law");

    SweepResult res;
    res.experiment = "baiyin";
    res.columns = {"n", "beta", "N", "trial", "smin_norm", "smax_norm", "c4"};

    nlohmann::json cells = nlohmann::json::array();
    const double q = cfg.distribution.tail_exponent;
    if (cfg.distribution.is_scalar_law() && q > 0.0 && q <= 4.0)
        res.summary["warnings"] = {"entry law has q <= 4: Bai-Yin scaling may fail"};

    for (std::size_t n : cfg.n_grid) {
        for (double beta : cfg.beta_grid) {
            require(beta > 0.0 && beta <= 1.0, "beta must be in (0, 1]");
            const std::size_t N =
                static_cast<std::size_t>(std::llround(static_cast<double>(n) / beta));
            require(N >= n, "baiyin: N < n after rounding");
            const std::uint64_t cseed =
                cell_seed(cfg.seed, n, std::bit_cast<std::uint64_t>(beta));

            std::vector<std::vector<double>> rows(cfg.trials);
            par::for_each_trial(cfg.trials, [&](std::size_t t) {
                const auto X =
                    sample_matrix(cfg.distribution, N, n, derive_seed(cseed, t));
                const auto sv = extreme_singulars(X.data);
                const double sqN = std::sqrt(static_cast<double>(N));
                const double smin = sv.s_min / sqN, smax = sv.s_max / sqN;
                const double c4 = std::max(std::abs(smax - 1.0), std::abs(1.0 - smin)) /
                                  std::sqrt(beta);
                rows[t] = {static_cast<double>(n), beta, static_cast<double>(N),
                           static_cast<double>(t), smin, smax, c4};
            });

            std::vector<double> smin_v, smax_v, c4_v;
            for (const auto& r : rows) {
                res.records.push_back(r);
                smin_v.push_back(r[4]);
                smax_v.push_back(r[5]);
                c4_v.push_back(r[6]);
            }
            nlohmann::json cell;
            cell["n"] = n;
            cell["beta"] = beta;
            cell["N"] = N;
            cell["smin_norm"] = summarize(smin_v);
            cell["smax_norm"] = summarize(smax_v);
            cell["c4"] = summarize(c4_v);
            cell["c4_max"] = *std::max_element(c4_v.begin(), c4_v.end());
            const double c4_q95 = quantile(c4_v, 0.95);
            cell["c4_q95"] = c4_q95;
            std::size_t within = 0;
            for (double c : c4_v)
                if (c <= c4_q95 + 1e-15) ++within;
            cell["frac_within_fitted"] =
                static_cast<double>(within) / static_cast<double>(c4_v.size());
            cells.push_back(cell);
        }
    }
    res.summary["cells"] = cells;
    if (cells.size() > 1)
        res.summary["c4_max_last_minus_first"] =
            cells.back()["c4_max"].get<double>() - cells.front()["c4_max"].get<double>();
    res.summary["fitted_definitions"] = {
        {"c4", "per-trial max(|smax/sqrtN - 1|, |1 - smin/sqrtN|) / sqrt(beta); "
               "c4_max is the max over trials, c4_q95 the 95th percentile"}};

    // plot: medians vs n, one pair of series per beta
    nlohmann::json series = nlohmann::json::array();
    for (double beta : cfg.beta_grid) {
        nlohmann::json smax_s, smin_s;
        smax_s["name"] = "median smax/sqrtN (beta=" + std::to_string(beta) + ")";
        smin_s["name"] = "median smin/sqrtN (beta=" + std::to_string(beta) + ")";
        std::vector<double> xs, ymax, ymin;
        for (const auto& cell : cells) {
            if (cell["beta"].get<double>() != beta) continue;
            xs.push_back(cell["n"].get<double>());
            ymax.push_back(cell["smax_norm"]["median"].get<double>());
            ymin.push_back(cell["smin_norm"]["median"].get<double>());
        }
        smax_s["x"] = xs;
        smax_s["y"] = ymax;
        smin_s["x"] = xs;
        smin_s["y"] = ymin;
        series.push_back(smax_s);
        series.push_back(smin_s);
    }
    res.summary["plot"] = {{"xlabel", "n"}, {"ylabel", "s/sqrt(N)"}, {"series", series}};
    return res;
}

SweepResult run_covariance(const ExperimentConfig& cfg) {
    require(!cfg.n_grid.empty() && !cfg.N_grid.empty(),
            "covariance requires n and N grids");

    SweepResult res;
    res.experiment = "covariance";
    res.columns = {"n", "N", "trial", "deviation", "fitted"};
    const double q = cfg.distribution.tail_exponent;

    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t n : cfg.n_grid) {
        for (std::size_t N : cfg.N_grid) {
            const Matrix identity = Matrix::identity(n);
            const std::uint64_t cseed = cell_seed(cfg.seed, n, N);
            std::vector<std::vector<double>> rows(cfg.trials);
            par::for_each_trial(cfg.trials, [&](std::size_t t) {
                const auto X =
                    sample_matrix(cfg.distribution, N, n, derive_seed(cseed, t));
                const double dev = op_norm_deviation(sample_covariance(X), identity);
                const double ratio = static_cast<double>(n) / static_cast<double>(N);
                double fitted;
                if (q > 2.0 && q <= 4.0) {
                    const double denom = std::pow(ratio, 1.0 - 2.0 / q) *
                                         std::log(static_cast<double>(N) /
                                                  static_cast<double>(n));
                    fitted = denom > 0.0 ? dev / denom
                                         : std::numeric_limits<double>::quiet_NaN();
                } else {
                    fitted = dev / std::sqrt(ratio);
                }
                rows[t] = {static_cast<double>(n), static_cast<double>(N),
                           static_cast<double>(t), dev, fitted};
            });

            std::vector<double> devs, fitteds;
            std::size_t ge1 = 0;
            for (const auto& r : rows) {
                res.records.push_back(r);
                devs.push_back(r[3]);
                if (std::isfinite(r[4])) fitteds.push_back(r[4]);
                if (r[3] >= 1.0 - 1e-12) ++ge1;
            }
            nlohmann::json cell;
            cell["n"] = n;
            cell["N"] = N;
            cell["deviation"] = summarize(devs);
            if (!fitteds.empty()) cell["fitted"] = summarize(fitteds);
            cell["frac_dev_ge_1"] =
                static_cast<double>(ge1) / static_cast<double>(cfg.trials);
            std::size_t le_01 = 0;
            for (double d : devs)
                if (d <= 0.1) ++le_01;
            cell["frac_dev_le_0.1"] =
                static_cast<double>(le_01) / static_cast<double>(cfg.trials);
            cell["envelope_rudelson"] = reference_envelope("rudelson", n, N, {});
            cell["envelope_alpt"] = reference_envelope("alpt", n, N, {});
            cells.push_back(cell);
        }
    }
    res.summary["cells"] = cells;
    res.summary["fitted_definitions"] = {
        {"fitted", "deviation / sqrt(n/N) when q > 4 or no moment limit is set; "
                   "deviation / ((n/N)^{1-2/q} log(N/n)) when 2 < q <= 4"}};

    nlohmann::json series = nlohmann::json::array();
    {
        nlohmann::json dev_s, rud_s, alpt_s;
        std::vector<double> xs, yd, yr, ya;
        for (const auto& cell : cells) {
            xs.push_back(cell["n"].get<double>() / cell["N"].get<double>());
            yd.push_back(cell["deviation"]["median"].get<double>());
            yr.push_back(cell["envelope_rudelson"].get<double>());
            ya.push_back(cell["envelope_alpt"].get<double>());
        }
        dev_s = {{"name", "median deviation"}, {"x", xs}, {"y", yd}};
        rud_s = {{"name", "rudelson envelope"}, {"x", xs}, {"y", yr}};
        alpt_s = {{"name", "alpt envelope"}, {"x", xs}, {"y", ya}};
        series = {dev_s, rud_s, alpt_s};
    }
    res.summary["plot"] = {{"xlabel", "n/N"}, {"ylabel", "deviation"}, {"series", series}};
    return res;
}

SweepResult run_theorem_b(const ExperimentConfig& cfg) {
    require(!cfg.n_grid.empty() && !cfg.N_grid.empty(),
            "theorem_b requires n and N grids");
    const auto kind = cfg.distribution.kind;
    if (kind != DistKind::lp_ball_uniform && kind != DistKind::laplace_exponential)
        throw std::invalid_argument(
            "theorem_b requires an isotropic unconditional log-concave law "
            "(lp_ball_uniform or laplace_exponential); got " +
            to_string(kind));

    SweepResult res;
    res.experiment = "theorem_b";
    res.columns = {"n", "N", "trial", "family", "lhs", "ratio"};

    nlohmann::json cells = nlohmann::json::array();
    double global_max_ratio = 0.0;
    for (std::size_t n : cfg.n_grid) {
        // index families: 0 = signed coordinates, 1 = spherical, 2 = sparse
        std::vector<std::vector<Vec>> families;
        families.push_back(signed_coordinate_family(n));
        families.push_back(
            random_unit_family(n, cfg.params.net_points, derive_seed(cfg.seed, 0xFA, 1)));
        families.push_back(random_sparse_family(n, cfg.params.sparse_points,
                                                cfg.params.sparsity,
                                                derive_seed(cfg.seed, 0xFA, 2)));
        std::vector<double> E_vals;
        for (std::size_t f = 0; f < families.size(); ++f)
            E_vals.push_back(
                exp_sup_E(families[f], cfg.params.e_trials, derive_seed(cfg.seed, 0xE7, f))
                    .mean);

        for (std::size_t N : cfg.N_grid) {
            const std::uint64_t cseed = cell_seed(cfg.seed, n, N);
            std::vector<std::vector<std::vector<double>>> rows(cfg.trials);
            par::for_each_trial(cfg.trials, [&](std::size_t t) {
                const auto X =
                    sample_matrix(cfg.distribution, N, n, derive_seed(cseed, t));
                for (std::size_t f = 0; f < families.size(); ++f) {
                    const double lhs = quadratic_sup_finite(X.data, families[f]);
                    const double E = E_vals[f];
                    const double kernel = E / std::sqrt(static_cast<double>(N)) +
                                          E * E / static_cast<double>(N);
                    rows[t].push_back({static_cast<double>(n), static_cast<double>(N),
                                       static_cast<double>(t), static_cast<double>(f), lhs,
                                       kernel > 0.0 ? lhs / kernel : 0.0});
                }
            });

            nlohmann::json cell;
            cell["n"] = n;
            cell["N"] = N;
            double cell_max = 0.0;
            nlohmann::json fam_stats = nlohmann::json::array();
            for (std::size_t f = 0; f < families.size(); ++f) {
                std::vector<double> ratios;
                for (std::size_t t = 0; t < cfg.trials; ++t) {
                    res.records.push_back(rows[t][f]);
                    ratios.push_back(rows[t][f][5]);
                }
                const double fmax = *std::max_element(ratios.begin(), ratios.end());
                cell_max = std::max(cell_max, fmax);
                nlohmann::json fs;
                fs["family"] = f;
                fs["E"] = E_vals[f];
                fs["ratio"] = summarize(ratios);
                fs["max_ratio"] = fmax;
                fam_stats.push_back(fs);
            }
            cell["families"] = fam_stats;
            cell["max_ratio"] = cell_max;
            global_max_ratio = std::max(global_max_ratio, cell_max);
            cells.push_back(cell);
        }
    }
    res.summary["cells"] = cells;
    res.summary["max_ratio"] = global_max_ratio;
    res.summary["fitted_definitions"] = {
        {"ratio", "LHS / (E(T)/sqrt(N) + E(T)^2/N) with E(T) the Monte Carlo "
                  "exponential supremum of the family"}};

    nlohmann::json series = nlohmann::json::array();
    {
        std::vector<double> xs, ys;
        for (const auto& cell : cells) {
            xs.push_back(cell["N"].get<double>());
            ys.push_back(cell["max_ratio"].get<double>());
        }
        series.push_back({{"name", "max LHS/kernel"}, {"x", xs}, {"y", ys}});
    }
    res.summary["plot"] = {{"xlabel", "N"}, {"ylabel", "ratio"}, {"series", series}};
    return res;
}

} // namespace heavychain
