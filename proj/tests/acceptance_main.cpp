// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code is the failure count.
//
// Every tolerance below is pinned in code; seeds are fixed so reruns are
// byte-identical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "heavychain/chaining.hpp"
#include "heavychain/distributions.hpp"
#include "heavychain/experiments.hpp"
#include "heavychain/linalg.hpp"
#include "heavychain/norms.hpp"
#include "oracles.hpp"

using namespace heavychain;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int g_failures = 0;

void run_criterion(int id, const std::string& name, double budget_seconds,
                   const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = elapsed < budget_seconds;
    const bool pass = out.pass && in_budget;
    if (!pass) ++g_failures;
    std::printf("[%s] criterion %2d: %s (%s; %.1fs of %.0fs budget)\n",
                pass ? "PASS" : "FAIL", id, name.c_str(), out.detail.c_str(), elapsed,
                budget_seconds);
    std::fflush(stdout);
}

DistributionSpec student_t_q6() {
    DistributionSpec s;
    s.kind = DistKind::student_t;
    s.tail_exponent = 6.0;
    s.law_param = 8.0;
    s.standardized = true;
    return s;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

Outcome criterion_gaussian_edge() {
    ExperimentConfig cfg;
    cfg.experiment = "baiyin";
    cfg.n_grid = {200};
    cfg.beta_grid = {0.25};
    cfg.distribution.kind = DistKind::gaussian;
    cfg.trials = 50;
    cfg.seed = 1001;
    const auto res = run_baiyin(cfg);
    const auto& cell = res.summary["cells"].front();
    const double med_max = cell["smax_norm"]["median"].get<double>();
    const double med_min = cell["smin_norm"]["median"].get<double>();
    Outcome out;
    out.pass = std::abs(med_max - 1.5) <= 0.06 && std::abs(med_min - 0.5) <= 0.06;
    out.detail = fmt("median smax/sqrtN=%.4f (1.5 +- 0.06), smin/sqrtN=%.4f (0.5 +- 0.06)",
                     med_max, med_min);
    return out;
}

Outcome criterion_heavy_tail_stability() {
    ExperimentConfig cfg;
    cfg.experiment = "baiyin";
    cfg.n_grid = {100, 200, 400};
    cfg.beta_grid = {0.25};
    cfg.distribution = student_t_q6();
    cfg.trials = 30;
    cfg.seed = 1002;
    const auto res = run_baiyin(cfg);
    double c4_100 = 0.0, c4_400 = 0.0;
    for (const auto& cell : res.summary["cells"]) {
        if (cell["n"] == 100) c4_100 = cell["c4_max"].get<double>();
        if (cell["n"] == 400) c4_400 = cell["c4_max"].get<double>();
    }
    Outcome out;
    out.pass = c4_400 <= c4_100 + 0.1 && c4_400 <= 3.0;
    out.detail = fmt("fitted c4(100)=%.4f, c4(400)=%.4f (need c4(400) <= c4(100)+0.1 and <= 3)",
                     c4_100, c4_400);
    return out;
}

Outcome criterion_coupon_control() {
    ExperimentConfig cfg;
    cfg.experiment = "covariance";
    cfg.n_grid = {50};
    cfg.N_grid = {50};
    cfg.distribution.kind = DistKind::coordinate_measure;
    cfg.trials = 200;
    cfg.seed = 1003;
    const auto res = run_covariance(cfg);
    const double frac = res.summary["cells"].front()["frac_dev_ge_1"].get<double>();
    Outcome out;
    out.pass = frac >= 0.99;
    out.detail = fmt("deviation >= 1 in %.1f%% of trials (need >= 99%%)", 100.0 * frac);
    return out;
}

Outcome criterion_oracles() {
    Outcome out;
    DistributionSpec gauss;
    gauss.kind = DistKind::gaussian;

    // (a) Jacobi vs shifted power iteration on 100 random 12x5 matrices
    double worst_rel = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto A = sample_matrix(gauss, 12, 5, derive_seed(1004, i)).data;
        const auto jac = extreme_singulars(A);
        const auto pow = oracles::power_extreme_singulars(A);
        worst_rel = std::max(worst_rel,
                             std::abs(jac.s_max - pow.s_max) / std::max(pow.s_max, 1e-30));
        worst_rel = std::max(worst_rel,
                             std::abs(jac.s_min - pow.s_min) / std::max(pow.s_min, 1e-30));
    }
    const bool pass_a = worst_rel <= 1e-6;

    // (b) top-k reduction vs exhaustive subsets on 100 random instances, N <= 12
    bool pass_b = true;
    {
        Engine eng = make_engine(1005);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int inst = 0; inst < 100 && pass_b; ++inst) {
            const std::size_t N = 6 + inst % 7; // 6..12
            const auto eta = make_eta_standard(static_cast<double>(N));
            const auto f = PhiFamily::make_beta(1.0, N);
            const std::size_t m = 2 + inst % 3;
            std::vector<Vec> V(m, Vec(N));
            for (auto& v : V)
                for (double& x : v) x = normal(eng);
            DecompositionSpec D;
            D.V = V;
            D.seq = greedy_admissible(V, metric_l2(), eta);
            D.theta.assign(D.seq.levels.size(), std::vector<double>(m));
            D.delta_norm.assign(D.seq.levels.size(), std::vector<double>(m));
            for (std::size_t s = 0; s < D.seq.levels.size(); ++s)
                for (std::size_t v = 0; v < m; ++v) {
                    D.theta[s][v] = 2.0 * unif(eng);
                    double norm = 0.0;
                    for (double x : D.seq.increment(s, v)) norm += x * x;
                    D.delta_norm[s][v] = std::sqrt(norm) * (0.5 + unif(eng));
                }
            D.base_norm.assign(m, 0.0);
            for (std::size_t v = 0; v < m; ++v) {
                double norm = 0.0;
                for (double x : V[v]) norm += x * x;
                D.base_norm[v] = std::sqrt(norm);
            }
            D.d = *std::max_element(D.base_norm.begin(), D.base_norm.end());
            D.alpha = 0.4 + unif(eng);
            D.gamma = 3.0 * unif(eng);
            if (verify_decomposition(D, f).holds !=
                oracles::decomposition_holds_exhaustive(D, f))
                pass_b = false;
        }
    }

    // (c) greedy >= bruteforce on 100 random 5-point sets; equality on pairs
    bool pass_c = true;
    {
        const auto d = metric_l2();
        const auto eta = make_eta_standard(8.0);
        Engine eng = make_engine(1006);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int inst = 0; inst < 100 && pass_c; ++inst) {
            std::vector<Vec> T(5, Vec(3));
            for (auto& t : T)
                for (double& x : t) x = normal(eng);
            const double greedy = gamma_beta_value(greedy_admissible(T, d, eta), 2.0, d);
            if (greedy < gamma_beta_bruteforce(T, d, 2.0, 3) - 1e-9) pass_c = false;
        }
        for (int inst = 0; inst < 50 && pass_c; ++inst) {
            std::vector<Vec> T(2, Vec(3));
            for (auto& t : T)
                for (double& x : t) x = normal(eng);
            const double greedy = gamma_beta_value(greedy_admissible(T, d, eta), 2.0, d);
            const double brute = gamma_beta_bruteforce(T, d, 2.0, 3);
            if (std::abs(greedy - brute) > 1e-9) pass_c = false;
        }
    }

    out.pass = pass_a && pass_b && pass_c;
    out.detail =
        "jacobi-vs-power max rel err=" + fmt("%.2e", worst_rel) +
        (pass_b ? "; subset oracle agrees 100/100" : "; subset oracle MISMATCH") +
        (pass_c ? "; gamma greedy>=brute 100/100, pairs equal" : "; gamma ordering violated");
    return out;
}

Outcome criterion_tail_lemma() {
    DistributionSpec lap;
    lap.kind = DistKind::laplace_exponential;
    const auto res = check_tail_lemma(lap, 1000, 10, 4.0, 1.0, 4.0, 1000, 1007);
    Outcome out;
    out.pass = res.failure_rate <= 0.01;
    out.detail = fmt("violation rate=%.4f (need <= 0.01), theory bound=%.1e",
                     res.failure_rate, res.theory_bound);
    return out;
}

Outcome criterion_omega_events() {
    ExperimentConfig cfg;
    cfg.experiment = "omega_events";
    cfg.n_grid = {32};
    cfg.N_grid = {128};
    cfg.distribution = student_t_q6();
    cfg.seed = 1008;
    cfg.params.u = 8.0;
    cfg.params.eps = 1.0;
    cfg.params.p = 3.0;
    cfg.params.s1 = 2;
    cfg.params.resamples = 200;
    const auto res = run_omega_events(cfg);
    const double pr = res.summary["pr_omega_all"].get<double>();
    const auto good = res.summary["good_resamples"].get<std::size_t>();
    const auto concl = res.summary["conclusions_pass"].get<std::size_t>();
    Outcome out;
    out.pass = pr >= 0.9 && concl == good;
    out.detail = fmt("Pr(Omega_1 cap Omega_2 cap Omega_3)=%.3f (need >= 0.9); "
                     "conclusions passed on %.0f/%.0f good resamples",
                     pr, static_cast<double>(concl), static_cast<double>(good));
    return out;
}

Outcome criterion_theorem_b() {
    ExperimentConfig cfg;
    cfg.experiment = "theorem_b";
    cfg.n_grid = {64};
    cfg.N_grid = {64, 256, 1024};
    cfg.distribution.kind = DistKind::lp_ball_uniform;
    cfg.distribution.lp_ball_p = 1.0;
    cfg.trials = 100;
    cfg.seed = 1009;
    cfg.params.net_points = 100;
    cfg.params.sparse_points = 100;
    cfg.params.sparsity = 4;
    cfg.params.e_trials = 8000;
    const auto res = run_theorem_b(cfg);
    const double max_ratio = res.summary["max_ratio"].get<double>();
    Outcome out;
    out.pass = max_ratio <= 5.0;
    out.detail = fmt("max LHS/(E/sqrtN + E^2/N) over cells=%.3f (need <= 5)", max_ratio);
    return out;
}

Outcome criterion_symmetrization() {
    ExperimentConfig cfg;
    cfg.experiment = "symmetrization";
    cfg.n_grid = {16};
    cfg.N_grid = {100};
    cfg.distribution = student_t_q6();
    cfg.trials = 50;
    cfg.seed = 1010;
    cfg.params.directions = 20;
    cfg.params.inner_samples = 80;
    const auto res = run_symmetrization(cfg);
    const auto passes = res.summary["passes"].get<std::size_t>();
    Outcome out;
    out.pass = passes == 50;
    out.detail = fmt("inequality held in %.0f/50 repetitions at x=d^2 sqrtN=%.2f",
                     static_cast<double>(passes), res.summary["x"].get<double>());
    return out;
}

Outcome criterion_weak_lp_decay() {
    ExperimentConfig cfg;
    cfg.experiment = "weak_lp_tail";
    cfg.n_grid = {64, 128, 256, 512};
    cfg.distribution.kind = DistKind::student_t;
    cfg.distribution.law_param = 6.0; // tail index 6 = the lemma's q
    cfg.distribution.standardized = true;
    cfg.trials = 800;
    cfg.seed = 1011;
    cfg.params.p = 3.0;
    cfg.params.c1 = 1.0;
    const auto res = run_weak_lp_tail(cfg);
    const double slope = res.summary["slope"].get<double>();
    Outcome out;
    out.pass = std::abs(slope - (-1.0)) <= 0.3;
    out.detail = fmt("log-log slope=%.3f (need -1 +- 0.3)", slope);
    return out;
}

Outcome criterion_property_suites() {
    std::vector<std::string> failures;

    // phi monotonicity across both families
    for (double beta : {0.5, 1.0, 2.0, 4.0}) {
        const auto f = PhiFamily::make_beta(beta, 200);
        double prev = 0.0;
        for (double x = 1.0; x <= 200.0; x += 0.25) {
            const double v = phi_eval(f, x);
            if (v < prev - 1e-12) failures.push_back("phi_beta not monotone");
            prev = v;
        }
    }
    {
        const auto f = PhiFamily::make_lq(6.0, 0.5, 200);
        double prev = 0.0;
        for (double x = 1.0; x <= 200.0; x += 0.25) {
            const double v = phi_eval(f, x);
            if (v < prev - 1e-12) failures.push_back("phi_lq not monotone");
            prev = v;
        }
    }

    // f_u / F_u monotone in k and in kappa3; F dominates f under dominating z
    {
        DistributionSpec lap;
        lap.kind = DistKind::laplace_exponential;
        const auto y = QuantileTable::from_law(lap, 512, 1.0);
        const auto z = y.scaled(1.5);
        double prev_f = 0.0, prev_F = 0.0;
        for (double k = 1.0; k <= 512.0; k += 1.0) {
            const double fv = f_u(k, 4.0, y, 4.0);
            const double Fv = f_u(k, 4.0, z, 4.0);
            if (fv < prev_f - 1e-12) failures.push_back("f_u not monotone in k");
            if (Fv < prev_F - 1e-12) failures.push_back("F_u not monotone in k");
            if (Fv < fv) failures.push_back("F_u below f_u under dominating quantiles");
            if (f_u(k, 4.0, y, 8.0) < f_u(k, 4.0, y, 4.0))
                failures.push_back("f_u not monotone in kappa3");
            prev_f = fv;
            prev_F = Fv;
        }
    }

    // top-k additivity
    {
        Engine eng = make_engine(1012);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> v(30);
        for (double& x : v) x = normal(eng);
        double total = 0.0;
        for (double x : v) total += x * x;
        const auto sorted = order_stats_desc(v);
        for (std::size_t k = 1; k < v.size(); ++k) {
            double tail = 0.0;
            for (std::size_t i = k; i < sorted.size(); ++i) tail += sorted[i] * sorted[i];
            const double head = top_k_l2(v, k);
            if (std::abs(head * head + tail - total) > 1e-9)
                failures.push_back("top-k additivity violated");
        }
    }

    // sign-flip equivariance
    {
        DistributionSpec g;
        g.kind = DistKind::gaussian;
        const auto X = sample_matrix(g, 40, 10, 1013);
        Matrix flipped = X.data;
        for (std::size_t i = 0; i < flipped.rows(); ++i) flipped.at(i, 2) *= -1.0;
        const auto s1 = extreme_singulars(X.data);
        const auto s2 = extreme_singulars(flipped);
        if (std::abs(s1.s_max - s2.s_max) > 1e-9 ||
            std::abs(s1.s_min - s2.s_min) > 1e-9)
            failures.push_back("sign-flip equivariance violated");
        for (std::size_t i = 0; i < X.N(); ++i)
            if (std::abs(lp_norm(X.data.row(i), 4.0) - lp_norm(flipped.row(i), 4.0)) >
                1e-12)
                failures.push_back("sign-flip changed an lp norm");
    }

    // Phi_s <= Phi for both families
    {
        const auto eta = make_eta_standard(256.0);
        for (const auto& f :
             {PhiFamily::make_lq(8.0, 0.0, 256), PhiFamily::make_beta(1.0, 256)}) {
            const auto agg = phi_aggregates(f, eta);
            for (double ps : agg.Phi_s)
                if (ps > agg.Phi + 1e-12) failures.push_back("Phi_s exceeds Phi");
        }
    }

    // exhaustive vs Monte Carlo Bernoulli agreement
    {
        Engine eng = make_engine(1014);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Vec> V(3, Vec(12));
        for (auto& v : V)
            for (double& x : v) x = normal(eng);
        const auto all = bernoulli_sup_mc(V, 0, 0);
        double exact = 0.0;
        for (double s : all) exact += s;
        exact /= static_cast<double>(all.size());
        const auto mc = bernoulli_sup_mc(V, 6000, 1015);
        double mean = 0.0, var = 0.0;
        for (double s : mc) mean += s;
        mean /= static_cast<double>(mc.size());
        for (double s : mc) var += (s - mean) * (s - mean);
        var /= static_cast<double>(mc.size() - 1);
        const double se = std::sqrt(var / static_cast<double>(mc.size()));
        if (std::abs(mean - exact) > 3.0 * se)
            failures.push_back("Bernoulli MC disagrees with exhaustive mean");
    }

    Outcome out;
    out.pass = failures.empty();
    out.detail = failures.empty()
                     ? "phi/f_u/F_u monotone; top-k additive; sign-flip equivariant; "
                       "Phi_s<=Phi; Bernoulli MC==exhaustive"
                     : failures.front();
    return out;
}

} // namespace

int main() {
    std::printf("heavychain acceptance suite\n");
    run_criterion(1, "gaussian extreme singular value edge", 60.0,
                  criterion_gaussian_edge);
    run_criterion(2, "heavy-tail scaling stability", 180.0,
                  criterion_heavy_tail_stability);
    run_criterion(3, "coupon-collector negative control", 10.0,
                  criterion_coupon_control);
    run_criterion(4, "oracle equivalences", 60.0, criterion_oracles);
    run_criterion(5, "tail-functional selector lemma", 60.0, criterion_tail_lemma);
    run_criterion(6, "sparse-shell event probability + conclusions", 300.0,
                  criterion_omega_events);
    run_criterion(7, "quadratic process domination", 300.0, criterion_theorem_b);
    run_criterion(8, "symmetrization inequality", 60.0, criterion_symmetrization);
    run_criterion(9, "weak-lp tail decay slope", 180.0, criterion_weak_lp_decay);
    run_criterion(10, "property suites", 120.0, criterion_property_suites);

    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
