#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "heavychain/experiments.hpp"
#include "heavychain/linalg.hpp"
#include "heavychain/norms.hpp"

using namespace heavychain;

namespace {

ExperimentConfig small_baiyin() {
    ExperimentConfig cfg;
    cfg.experiment = "baiyin";
    cfg.n_grid = {24};
    cfg.beta_grid = {0.5};
    cfg.distribution.kind = DistKind::gaussian;
    cfg.trials = 8;
    cfg.seed = 42;
    return cfg;
}

} // namespace

TEST_CASE("config parsing round trip") {
    const nlohmann::json j = {
        {"experiment", "baiyin"},
        {"grid", {{"n", {100, 200}}, {"beta", {0.25}}}},
        {"distribution", {{"kind", "gaussian"}}},
        {"trials", 50},
        {"seed", 7},
        {"params", {{"u", 8.0}, {"kappa3", 4.0}}},
        {"output", {{"dir", "out"}, {"format", "csv"}, {"plot", true}}},
    };
    const auto cfg = config_from_json(j);
    CHECK(cfg.experiment == "baiyin");
    CHECK(cfg.n_grid == std::vector<std::size_t>{100, 200});
    CHECK(cfg.beta_grid == std::vector<double>{0.25});
    CHECK(cfg.trials == 50);
    CHECK(cfg.seed == 7);
    CHECK(cfg.params.u == 8.0);
    CHECK(cfg.plot);
}

TEST_CASE("determinism: identical config reproduces identical records") {
    const auto cfg = small_baiyin();
    const auto a = run_baiyin(cfg);
    const auto b = run_baiyin(cfg);
    REQUIRE(a.records.size() == b.records.size());
    CHECK(a.records == b.records);
    CHECK(to_csv(a) == to_csv(b));
}

TEST_CASE("cell independence: a cell's records ignore the rest of the grid") {
    auto one = small_baiyin();
    auto two = small_baiyin();
    two.n_grid = {24, 32};
    const auto ra = run_baiyin(one);
    const auto rb = run_baiyin(two);
    for (std::size_t t = 0; t < one.trials; ++t) CHECK(ra.records[t] == rb.records[t]);
}

TEST_CASE("baiyin summary structure and q<=4 warning") {
    auto cfg = small_baiyin();
    const auto res = run_baiyin(cfg);
    const auto& cell = res.summary["cells"].front();
    CHECK(cell["N"] == 48);
    CHECK(cell["smax_norm"]["q05"].get<double>() <=
          cell["smax_norm"]["median"].get<double>());
    CHECK(cell["smax_norm"]["median"].get<double>() <=
          cell["smax_norm"]["q95"].get<double>());

    cfg.distribution.kind = DistKind::student_t;
    cfg.distribution.tail_exponent = 3.0;
    cfg.distribution.law_param = 5.0;
    cfg.distribution.standardized = true;
    cfg.trials = 2;
    const auto warned = run_baiyin(cfg);
    CHECK(warned.summary.contains("warnings"));
}

TEST_CASE("covariance: coordinate-measure negative control") {
    ExperimentConfig cfg;
    cfg.experiment = "covariance";
    cfg.n_grid = {50};
    cfg.N_grid = {50};
    cfg.distribution.kind = DistKind::coordinate_measure;
    cfg.trials = 50;
    cfg.seed = 9;
    const auto res = run_covariance(cfg);
    CHECK(res.summary["cells"].front()["frac_dev_ge_1"].get<double>() >= 0.99);
}

TEST_CASE("baiyin at aspect ratio 1: smallest singular value stays nonnegative") {
    ExperimentConfig cfg;
    cfg.experiment = "baiyin";
    cfg.n_grid = {12};
    cfg.beta_grid = {1.0};
    cfg.distribution.kind = DistKind::gaussian;
    cfg.trials = 10;
    cfg.seed = 16;
    const auto res = run_baiyin(cfg);
    for (const auto& r : res.records) CHECK(r[4] >= 0.0); // smin_norm column
}

TEST_CASE("covariance: truncated heavy-tail fitted constant stays in band") {
    ExperimentConfig cfg;
    cfg.experiment = "covariance";
    cfg.n_grid = {64};
    cfg.N_grid = {64, 256, 1024};
    cfg.distribution.kind = DistKind::student_t;
    cfg.distribution.tail_exponent = 6.0;
    cfg.distribution.law_param = 8.0;
    cfg.distribution.standardized = true;
    cfg.distribution.truncation = LpBallTruncation{3.0, 2.5};
    cfg.trials = 20;
    cfg.seed = 17;
    const auto res = run_covariance(cfg);
    std::vector<double> fitted;
    for (const auto& cell : res.summary["cells"])
        fitted.push_back(cell["fitted"]["median"].get<double>());
    const double lo = *std::min_element(fitted.begin(), fitted.end());
    const double hi = *std::max_element(fitted.begin(), fitted.end());
    // regression band frozen from the pinned seed: the sqrt(n/N) law keeps the
    // fitted constant O(1) across a 16x range of N
    CHECK(lo > 0.3);
    CHECK(hi < 3.0);
    CHECK(hi / lo < 2.5);
}

TEST_CASE("symmetrization factor exceeds 1/2 at the Chebyshev threshold") {
    // single gaussian linear functional, N = 100: Pr(|sum(g_i^2 - 1)| <= x/2)
    // >= 1/2 once (x/2)^2 >= 2 N Var(g^2) = 2N*2
    const std::size_t N = 100, M = 4000;
    const double x = 2.0 * std::sqrt(2.0) * std::sqrt(static_cast<double>(N) * 2.0);
    std::size_t small_dev = 0;
    for (std::size_t m = 0; m < M; ++m) {
        Engine eng = make_engine(derive_seed(18, m));
        std::normal_distribution<double> normal(0.0, 1.0);
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double g = normal(eng);
            s += g * g - 1.0;
        }
        if (std::abs(s) <= x / 2.0) ++small_dev;
    }
    const double beta_hat = static_cast<double>(small_dev) / static_cast<double>(M);
    const double se = std::sqrt(beta_hat * (1.0 - beta_hat) / static_cast<double>(M));
    CHECK(beta_hat >= 0.5 - 3.0 * se);
}

TEST_CASE("covariance: oversampled gaussian concentrates") {
    ExperimentConfig cfg;
    cfg.experiment = "covariance";
    cfg.n_grid = {16};
    cfg.N_grid = {160000};
    cfg.distribution.kind = DistKind::gaussian;
    cfg.trials = 20;
    cfg.seed = 10;
    const auto res = run_covariance(cfg);
    CHECK(res.summary["cells"].front()["frac_dev_le_0.1"].get<double>() >= 0.95);
}

TEST_CASE("theorem_b: refuses non-log-concave laws, runs on B_1 uniform") {
    ExperimentConfig cfg;
    cfg.experiment = "theorem_b";
    cfg.n_grid = {16};
    cfg.N_grid = {64};
    cfg.distribution.kind = DistKind::student_t;
    cfg.distribution.tail_exponent = 6.0;
    cfg.distribution.law_param = 8.0;
    cfg.trials = 2;
    CHECK_THROWS_AS((void)run_theorem_b(cfg), std::invalid_argument);

    cfg.distribution = DistributionSpec{};
    cfg.distribution.kind = DistKind::lp_ball_uniform;
    cfg.distribution.lp_ball_p = 1.0;
    cfg.trials = 5;
    cfg.seed = 11;
    cfg.params.net_points = 20;
    cfg.params.sparse_points = 20;
    cfg.params.e_trials = 2000;
    const auto res = run_theorem_b(cfg);
    CHECK(res.summary["max_ratio"].get<double>() > 0.0);
    CHECK(res.summary["max_ratio"].get<double>() < 10.0);
}

TEST_CASE("symmetrization: inequality holds with slack on a small run") {
    ExperimentConfig cfg;
    cfg.experiment = "symmetrization";
    cfg.n_grid = {16};
    cfg.N_grid = {100};
    cfg.distribution.kind = DistKind::student_t;
    cfg.distribution.tail_exponent = 6.0;
    cfg.distribution.law_param = 8.0;
    cfg.distribution.standardized = true;
    cfg.trials = 5;
    cfg.seed = 12;
    cfg.params.inner_samples = 60;
    const auto res = run_symmetrization(cfg);
    CHECK(res.summary["passes"].get<std::size_t>() == 5);
    CHECK(res.summary["x"].get<double>() > 0.0);
}

TEST_CASE("weak lp tail: bounded laws never exceed, q<=p refused") {
    ExperimentConfig cfg;
    cfg.experiment = "weak_lp_tail";
    cfg.n_grid = {32, 64};
    cfg.distribution.kind = DistKind::rademacher;
    cfg.distribution.tail_exponent = 6.0;
    cfg.trials = 10;
    cfg.seed = 13;
    cfg.params.p = 3.0;
    cfg.params.c1 = 1.5;
    const auto res = run_weak_lp_tail(cfg);
    for (const auto& cell : res.summary["cells"]) {
        CHECK(cell["p_row"].get<double>() == 0.0);
        CHECK(cell["p_max"].get<double>() == 0.0);
    }

    auto bad = cfg;
    bad.distribution.kind = DistKind::student_t;
    bad.distribution.tail_exponent = 2.5;
    bad.distribution.law_param = 6.0;
    bad.params.p = 3.0;
    CHECK_THROWS_AS((void)run_weak_lp_tail(bad), std::invalid_argument);
}

TEST_CASE("max over more rows only grows (nested-row check)") {
    DistributionSpec s;
    s.kind = DistKind::student_t;
    s.law_param = 6.0;
    s.standardized = true;
    const auto X = sample_matrix(s, 100, 32, 77);
    double max_half = 0.0, max_full = 0.0;
    for (std::size_t i = 0; i < 50; ++i)
        max_half = std::max(max_half, weak_lp_norm(X.data.row(i), 3.0));
    for (std::size_t i = 0; i < 100; ++i)
        max_full = std::max(max_full, weak_lp_norm(X.data.row(i), 3.0));
    CHECK(max_full >= max_half);
}

TEST_CASE("reference envelopes") {
    const std::size_t n = 100;
    const auto N = static_cast<std::size_t>(std::llround(100.0 * std::log(100.0) * 4.0));
    CHECK(reference_envelope("rudelson", n, N, {}) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(reference_envelope("alpt", 64, 64, {}) == doctest::Approx(1.0));
    const std::size_t ne = static_cast<std::size_t>(std::llround(std::exp(M_E)));
    const double v = reference_envelope("vershynin", ne, 4 * ne, {{"q", 8.0}});
    const double ll = std::log(std::log(static_cast<double>(ne)));
    CHECK(v == doctest::Approx(ll * ll * std::pow(0.25, 0.25)).epsilon(1e-9));
    CHECK(reference_envelope("sv", 32, 128, {{"eta", 1.0}}) ==
          doctest::Approx(std::pow(0.25, 0.25)).epsilon(1e-12));
    CHECK_THROWS_AS((void)reference_envelope("nope", 4, 4, {}), std::invalid_argument);
}

TEST_CASE("tail lemma sweep wrapper") {
    ExperimentConfig cfg;
    cfg.experiment = "tail_lemma";
    cfg.N_grid = {500};
    cfg.distribution.kind = DistKind::laplace_exponential;
    cfg.trials = 100;
    cfg.seed = 14;
    cfg.params.ell = 10;
    cfg.params.u = 4.0;
    cfg.params.eps = 1.0;
    cfg.params.kappa3 = 4.0;
    const auto res = run_tail_lemma(cfg);
    CHECK(res.records.size() == 1);
    CHECK(res.summary["failure_rate"].get<double>() <= 0.05);
}

TEST_CASE("gamma sandwich sweep stays in the regression band") {
    ExperimentConfig cfg;
    cfg.experiment = "gamma_sandwich";
    cfg.n_grid = {8};
    cfg.N_grid = {10};
    cfg.trials = 5;
    cfg.seed = 15;
    cfg.params.e_trials = 2000;
    const auto res = run_gamma_sandwich(cfg);
    CHECK(res.summary["ratio_min"].get<double>() >= 0.5);
    CHECK(res.summary["ratio_max"].get<double>() <= 50.0);
}

TEST_CASE("check evaluation") {
    nlohmann::json summary;
    summary["max_ratio"] = 3.0;
    nlohmann::json check = nlohmann::json::array();
    check.push_back({{"stat", "/max_ratio"}, {"le", 5.0}});
    CHECK(evaluate_check(check, summary).empty());
    check.push_back({{"stat", "/max_ratio"}, {"ge", 4.0}});
    CHECK(evaluate_check(check, summary).size() == 1);
    check.push_back({{"stat", "/missing"}, {"le", 1.0}});
    CHECK(evaluate_check(check, summary).size() == 2);
}

TEST_CASE("csv rendering is stable and quantiles are consistent") {
    SweepResult r;
    r.experiment = "demo";
    r.columns = {"a", "b"};
    r.records = {{1.0, 2.5}, {3.0, -0.125}};
    CHECK(to_csv(r) == "a,b\n1,2.5\n3,-0.125\n");

    std::vector<double> v{5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(quantile(v, 0.5) == doctest::Approx(3.0));
    CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
    CHECK(quantile(v, 1.0) == doctest::Approx(5.0));
    CHECK(quantile(v, 0.05) <= quantile(v, 0.5));
    CHECK(quantile(v, 0.5) <= quantile(v, 0.95));
}
