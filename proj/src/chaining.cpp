#include "heavychain/chaining.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "heavychain/norms.hpp"
#include "heavychain/parallel.hpp"
#include "heavychain/rng.hpp"

namespace heavychain {

namespace {

constexpr double kLog2Of10 = 3.321928094887362;

void check_ratios(const std::vector<double>& eta) {
    for (std::size_t s = 1; s + 1 < eta.size(); ++s) {
        const double ratio = eta[s + 1] / eta[s];
        if (!(ratio >= 1.1 && ratio <= 10.0)) {
            std::ostringstream msg;
            msg << "eta ratio invariant violated at s=" << s << ": eta_{s+1}/eta_s="
                << ratio;
            throw std::invalid_argument(msg.str());
        }
    }
    for (std::size_t s = 0; s + 1 < eta.size(); ++s)
        if (!(eta[s + 1] > eta[s])) {
            std::ostringstream msg;
            msg << "eta not increasing at s=" << s;
            throw std::invalid_argument(msg.str());
        }
}

void check_product(const std::vector<double>& eta) {
    for (std::size_t s = 0; s + 2 < eta.size(); ++s) {
        if (eta[s] + eta[s + 1] > kLog2Of10 + eta[s + 2] + 1e-9) {
            std::ostringstream msg;
            msg << "eta product invariant violated at s=" << s;
            throw std::invalid_argument(msg.str());
        }
    }
}

} // namespace

EtaSequence make_eta_standard(double cap) {
    EtaSequence eta;
    eta.kind = EtaKind::standard;
    eta.values.push_back(0.0);
    double v = 2.0;
    while (true) {
        eta.values.push_back(v);
        if (v > cap) break;
        v *= 2.0;
        if (v > 1e18) break;
    }
    check_ratios(eta.values);
    check_product(eta.values);
    return eta;
}

EtaSequence make_eta_ball(std::size_t n, int s1, double kappa4, double cap) {
    require(n >= 2, "ball schedule requires n >= 2");
    require(kappa4 >= 10.0, "ball schedule requires kappa4 >= 10");
    require(s1 >= 0, "ball schedule requires s1 >= 0");
    // 2^{s1} ~ n^delta, delta < 1/2, is the regime the probability estimates
    // assume; the schedule itself only needs the base shell to fit.
    require(std::exp2(s1) <= static_cast<double>(n) + 1e-9,
            "ball schedule requires 2^{s1} <= n");

    EtaSequence eta;
    eta.kind = EtaKind::ball;
    eta.n = n;
    eta.s1 = s1;
    eta.kappa4 = kappa4;
    const double en = M_E * static_cast<double>(n);
    for (std::size_t s = 0;; ++s) {
        const double shell = std::exp2(static_cast<double>(s) + s1);
        const double v = kappa4 * shell * std::max(std::log(en / shell), 1.0);
        eta.values.push_back(v);
        if (v > cap) break;
        if (s > 200) break;
    }
    check_ratios(eta.values);
    // The additive product condition is reported, not enforced, for this kind
    // (its own log band violates it; growth is controlled by the ratio bound).
    return eta;
}

double eta_product_slack(const EtaSequence& eta, std::size_t* argmin) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t where = 0;
    for (std::size_t s = 0; s + 2 < eta.values.size(); ++s) {
        const double slack = kLog2Of10 + eta.values[s + 2] - eta.values[s] - eta.values[s + 1];
        if (slack < best) {
            best = slack;
            where = s;
        }
    }
    if (argmin) *argmin = where;
    return best;
}

// ---------------------------------------------------------------------------

PhiFamily PhiFamily::make_beta(double beta, std::size_t N) {
    require(beta > 0.0, "phi_beta requires beta > 0");
    require(N >= 1, "phi family requires N >= 1");
    PhiFamily f;
    f.kind = Kind::beta;
    f.beta = beta;
    f.N = N;
    return f;
}

PhiFamily PhiFamily::make_lq(double q, double eps, std::size_t N) {
    require(q > 2.0, "phi_{q,eps} requires q > 2");
    require(eps >= 0.0 && eps < q / 2.0 - 1.0, "phi_{q,eps} requires 0 <= eps < q/2 - 1");
    require(N >= 1, "phi family requires N >= 1");
    PhiFamily f;
    f.kind = Kind::lq;
    f.q = q;
    f.eps = eps;
    f.N = N;
    return f;
}

double phi_eval(const PhiFamily& f, double x) {
    const double N = static_cast<double>(f.N);
    require(x >= 1.0 - 1e-12 && x <= N + 1e-9, "phi_eval: x out of [1, N]");
    x = std::clamp(x, 1.0, N);
    if (f.kind == PhiFamily::Kind::lq)
        return std::sqrt(x) * std::pow(N / x, (1.0 + f.eps) / f.q);
    // raw phi_beta peaks at N e^{1 - 2/beta}; hold the running maximum past it
    const double peak = std::clamp(N * std::exp(1.0 - 2.0 / f.beta), 1.0, N);
    const double xe = std::min(x, peak);
    return std::sqrt(xe) * std::pow(std::log(M_E * N / xe), 1.0 / f.beta);
}

PhiAggregates phi_aggregates(const PhiFamily& f, const EtaSequence& eta) {
    const std::size_t N = f.N;
    PhiAggregates out;
    double acc = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
        const double p = phi_eval(f, static_cast<double>(i));
        acc += (p * p) * (p * p) / (static_cast<double>(i) * static_cast<double>(i));
    }
    out.Phi = std::sqrt(acc);

    for (std::size_t s = 0; s < eta.levels(); ++s) {
        const double es = eta.at(s);
        if (es > static_cast<double>(N)) break;
        const std::size_t m = N - static_cast<std::size_t>(std::ceil(es - 1e-12));
        double sum = 0.0;
        for (std::size_t i = 1; i <= m; ++i) {
            const double a = phi_eval(f, es + static_cast<double>(i));
            const double b = phi_eval(f, static_cast<double>(i));
            sum += (a * a) / (es + static_cast<double>(i)) * (b * b) /
                   static_cast<double>(i);
        }
        out.Phi_s.push_back(std::sqrt(sum));
    }
    return out;
}

// ---------------------------------------------------------------------------

Vec AdmissibleSequence::increment(std::size_t s, std::size_t t) const {
    const Vec& cur = projected(s, t);
    if (s == 0) return cur;
    const Vec& prev = projected(s - 1, t);
    Vec out(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) out[i] = cur[i] - prev[i];
    return out;
}

void AdmissibleSequence::validate() const {
    require(levels.size() == assign.size(), "admissible: levels/assign size mismatch");
    require(levels.size() <= eta.levels(), "admissible: more levels than schedule");
    for (std::size_t s = 0; s < levels.size(); ++s) {
        const double budget = eta.at(s);
        if (budget < 63.0)
            require(static_cast<double>(levels[s].size()) <= std::exp2(budget) + 1e-9,
                    "admissible: level cardinality exceeds 2^{eta_s}");
        require(assign[s].size() == base.size(), "admissible: assignment size mismatch");
        for (std::size_t t = 0; t < base.size(); ++t)
            require(assign[s][t] < levels[s].size(), "admissible: assignment out of range");
    }
}

namespace {

std::size_t level_budget(double eta_s, std::size_t universe) {
    if (eta_s >= 63.0) return universe;
    const double b = std::exp2(eta_s);
    if (b >= static_cast<double>(universe)) return universe;
    return std::max<std::size_t>(1, static_cast<std::size_t>(b));
}

// Farthest-point ordering of T; prefix of size k is a greedy k-center net.
std::vector<std::size_t> farthest_point_order(const std::vector<Vec>& T, const Metric& d) {
    const std::size_t m = T.size();
    std::vector<std::size_t> order;
    order.reserve(m);
    std::vector<bool> used(m, false);
    std::vector<double> dist(m, std::numeric_limits<double>::infinity());
    std::size_t cur = 0;
    order.push_back(cur);
    used[cur] = true;
    for (std::size_t step = 1; step < m; ++step) {
        double best = -1.0;
        std::size_t pick = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (used[i]) continue;
            dist[i] = std::min(dist[i], d(T[i], T[cur]));
            if (dist[i] > best) {
                best = dist[i];
                pick = i;
            }
        }
        order.push_back(pick);
        used[pick] = true;
        cur = pick;
    }
    return order;
}

} // namespace

AdmissibleSequence greedy_admissible(const std::vector<Vec>& T, const Metric& d,
                                     const EtaSequence& eta) {
    require(!T.empty(), "greedy_admissible: empty T");
    AdmissibleSequence A;
    A.base = T;
    A.eta = eta;
    A.metric_tag = "custom";
    const auto order = farthest_point_order(T, d);

    for (std::size_t s = 0; s < eta.levels(); ++s) {
        const std::size_t cap = level_budget(eta.at(s), T.size());
        std::vector<Vec> centers;
        centers.reserve(cap);
        for (std::size_t i = 0; i < cap; ++i) centers.push_back(T[order[i]]);
        std::vector<std::size_t> pi(T.size(), 0);
        for (std::size_t t = 0; t < T.size(); ++t) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centers.size(); ++c) {
                const double dd = d(T[t], centers[c]);
                if (dd < best) {
                    best = dd;
                    pi[t] = c;
                }
            }
        }
        A.levels.push_back(std::move(centers));
        A.assign.push_back(std::move(pi));
    }
    A.validate();
    return A;
}

double gamma_beta_value(const AdmissibleSequence& A, double beta, const Metric& d) {
    require(A.eta.kind == EtaKind::standard,
            "gamma_beta_value requires the standard schedule");
    require(beta > 0.0, "gamma_beta_value requires beta > 0");
    double worst = 0.0;
    for (std::size_t t = 0; t < A.base.size(); ++t) {
        double sum = 0.0;
        for (std::size_t s = 0; s < A.levels.size(); ++s) {
            double dist = std::numeric_limits<double>::infinity();
            for (const auto& c : A.levels[s]) dist = std::min(dist, d(A.base[t], c));
            sum += std::exp2(static_cast<double>(s) / beta) * dist;
        }
        worst = std::max(worst, sum);
    }
    return worst;
}

double gamma_beta_bruteforce(const std::vector<Vec>& T, const Metric& d, double beta,
                             int max_levels) {
    require(T.size() >= 1 && T.size() <= 6, "gamma_beta_bruteforce: |T| must be in [1,6]");
    require(max_levels >= 1 && max_levels <= 3, "gamma_beta_bruteforce: max_levels in [1,3]");
    const std::size_t m = T.size();
    if (m == 1) return 0.0;

    // Standard budgets 2^{eta_s}: 1, 4, 16, ... Larger subsets never hurt, so
    // only maximal-size subsets are enumerated.
    std::vector<std::size_t> caps;
    caps.push_back(1);
    for (int s = 1; s <= max_levels; ++s)
        caps.push_back(level_budget(std::exp2(static_cast<double>(s)), m));
    require(caps.back() == m,
            "gamma_beta_bruteforce: schedule too short to cover T");

    // Precompute pairwise distances.
    std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) dist[i][j] = d(T[i], T[j]);

    // All subsets of each required size.
    auto subsets_of_size = [&](std::size_t k) {
        std::vector<std::vector<std::size_t>> out;
        std::vector<std::size_t> idx(k);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start,
                                                                std::size_t depth) {
            if (depth == k) {
                out.push_back(idx);
                return;
            }
            for (std::size_t i = start; i < m; ++i) {
                idx[depth] = i;
                rec(i + 1, depth + 1);
            }
        };
        rec(0, 0);
        return out;
    };

    std::vector<std::vector<std::vector<std::size_t>>> choices;
    for (std::size_t cap : caps) choices.push_back(subsets_of_size(std::min(cap, m)));

    // d(t, S) per subset cached lazily via direct evaluation (sets are tiny).
    auto dist_to_set = [&](std::size_t t, const std::vector<std::size_t>& S) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c : S) best = std::min(best, dist[t][c]);
        return best;
    };

    double best_value = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> pick(caps.size(), 0);
    std::function<void(std::size_t)> search = [&](std::size_t level) {
        if (level == caps.size()) {
            double worst = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                double sum = 0.0;
                for (std::size_t s = 0; s < caps.size(); ++s)
                    sum += std::exp2(static_cast<double>(s) / beta) *
                           dist_to_set(t, choices[s][pick[s]]);
                worst = std::max(worst, sum);
            }
            best_value = std::min(best_value, worst);
            return;
        }
        for (std::size_t i = 0; i < choices[level].size(); ++i) {
            pick[level] = i;
            search(level + 1);
        }
    };
    search(0);
    return best_value;
}

Metric metric_l2() {
    return [](const Vec& a, const Vec& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    };
}

Metric metric_linf() {
    return [](const Vec& a, const Vec& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            s = std::max(s, std::abs(a[i] - b[i]));
        return s;
    };
}

// ---------------------------------------------------------------------------

void DecompositionSpec::validate() const {
    const std::size_t levels = seq.levels.size();
    require(theta.size() == levels, "decomposition: theta levels mismatch");
    require(delta_norm.size() == levels, "decomposition: delta_norm levels mismatch");
    require(base_norm.size() == V.size(), "decomposition: base_norm size mismatch");
    require(seq.base.size() == V.size(), "decomposition: sequence not over V");
    for (std::size_t s = 0; s < levels; ++s) {
        require(theta[s].size() == V.size(), "decomposition: theta row size");
        require(delta_norm[s].size() == V.size(), "decomposition: delta_norm row size");
        for (std::size_t v = 0; v < V.size(); ++v) {
            require(std::isfinite(theta[s][v]) && theta[s][v] >= 0.0,
                    "decomposition: theta values must be finite nonnegative");
            require(std::isfinite(delta_norm[s][v]) && delta_norm[s][v] >= 0.0,
                    "decomposition: seminorm values must be finite nonnegative");
        }
    }
    double dmax = 0.0;
    for (double x : base_norm) dmax = std::max(dmax, x);
    require(std::abs(dmax - d) <= 1e-9 * std::max(1.0, dmax),
            "decomposition: d must equal max seminorm over V");
}

DecompositionParams decomposition_params(const DecompositionSpec& D, const PhiFamily& f) {
    require(D.ambient_dim() == f.N, "decomposition_params: V lives in R^N with N = f.N");
    DecompositionParams out;
    const double N = static_cast<double>(f.N);
    const auto agg = phi_aggregates(f, D.seq.eta);

    const double bq_exp = (f.kind == PhiFamily::Kind::lq)
                              ? 1.0 - 2.0 * (1.0 + f.eps) / f.q
                              : 0.5; // B4 exponent when no lq parameters exist
    for (std::size_t v = 0; v < D.V.size(); ++v) {
        double a1 = 0.0, a2 = 0.0, aphi = 0.0, b4 = 0.0, bq = 0.0;
        for (std::size_t s = 0; s < D.seq.levels.size(); ++s) {
            const double es = D.seq.eta.at(s);
            if (es > N) break;
            const double nrm = D.delta_norm[s][v];
            if (s > 0) {
                const double p = phi_eval(f, std::max(1.0, es));
                a1 += p * nrm;
                a2 += p * p * nrm;
            }
            if (s < agg.Phi_s.size()) aphi += agg.Phi_s[s] * std::sqrt(es) * nrm;
            b4 += std::sqrt(es) * nrm;
            bq += (es == 0.0 ? 0.0 : std::pow(es, bq_exp)) * nrm;
        }
        out.A1 = std::max(out.A1, a1);
        out.A2 = std::max(out.A2, a2);
        out.A_Phi = std::max(out.A_Phi, aphi);
        out.B4 = std::max(out.B4, b4);
        out.B_q_eps = std::max(out.B_q_eps, bq);
    }
    return out;
}

void OmegaReport::record(bool ok, std::size_t level, std::size_t element, std::size_t k,
                         double lhs, double rhs) {
    if (!ok && holds) {
        holds = false;
        first_violation = Violation{level, element, k, lhs, rhs};
    }
}

OmegaReport verify_decomposition(const DecompositionSpec& D, const PhiFamily& f) {
    D.validate();
    require(D.ambient_dim() == f.N, "verify_decomposition: V lives in R^N with N = f.N");
    OmegaReport rep;
    const std::size_t levels = D.seq.levels.size();
    const double N = static_cast<double>(f.N);
    rep.margins.assign(levels + 1, std::numeric_limits<double>::infinity());

    // Condition 1: sup_v (theta_0(pi_0 v) + sum_{s>0} theta_s(Delta_s v)) <= gamma.
    for (std::size_t v = 0; v < D.V.size(); ++v) {
        double total = 0.0;
        for (std::size_t s = 0; s < levels; ++s) total += D.theta[s][v];
        rep.record(total <= D.gamma + 1e-12, std::numeric_limits<std::size_t>::max(), v, 0,
                   total, D.gamma);
    }

    // Condition 2 over all subsets, via the top-k reduction.
    for (std::size_t v = 0; v < D.V.size(); ++v) {
        const auto sorted = order_stats_desc(D.V[v]);
        double acc = 0.0;
        for (std::size_t k = 1; k <= sorted.size(); ++k) {
            acc += sorted[k - 1] * sorted[k - 1];
            const double lhs = std::sqrt(acc);
            const double rhs =
                D.alpha * (D.gamma + D.d * phi_eval(f, std::min(static_cast<double>(k), N)));
            rep.margins[levels] = std::min(rep.margins[levels], rhs - lhs);
            rep.record(lhs <= rhs + 1e-12, levels, v, k, lhs, rhs);
        }
    }

    // Condition 3 per level.
    for (std::size_t s = 0; s < levels; ++s) {
        const double es = D.seq.eta.at(s);
        for (std::size_t v = 0; v < D.V.size(); ++v) {
            const Vec w = D.seq.increment(s, v);
            const auto sorted = order_stats_desc(w);
            double acc = 0.0;
            for (std::size_t k = 1; k <= sorted.size(); ++k) {
                acc += sorted[k - 1] * sorted[k - 1];
                const double lhs = std::sqrt(acc);
                double rhs;
                if (es <= N) {
                    rhs = D.alpha *
                          (D.theta[s][v] +
                           D.delta_norm[s][v] *
                               phi_eval(f, std::min(static_cast<double>(k), N)));
                } else {
                    rhs = D.alpha * D.theta[s][v];
                }
                rep.margins[s] = std::min(rep.margins[s], rhs - lhs);
                rep.record(lhs <= rhs + 1e-12, s, v, k, lhs, rhs);
            }
        }
    }
    return rep;
}

BernoulliRhs bernoulli_rhs(const DecompositionSpec& D, const PhiFamily& f, double r,
                           RhsMode mode) {
    require(r >= 1.0, "bernoulli_rhs requires r >= 1");
    const auto P = decomposition_params(D, f);
    const double N = static_cast<double>(f.N);
    BernoulliRhs out;
    out.constants["c2"] = 1.0;
    out.constants["r"] = r;
    out.constants["alpha"] = D.alpha;

    const double a2 = D.alpha * D.alpha;
    if (mode == RhsMode::full) {
        out.value = r * a2 *
                    (D.gamma * (D.gamma + D.d * phi_eval(f, N) + P.A1) +
                     D.d * (P.A2 + P.A_Phi));
        return out;
    }
    if (f.kind == PhiFamily::Kind::beta || f.q > 4.0) {
        out.value = r * a2 * (D.gamma * D.gamma + D.d * std::sqrt(N) * (D.gamma + P.B4));
        return out;
    }
    // 2 < q <= 4 needs 0 < eps < q/2 - 1
    if (!(f.eps > 0.0))
        throw std::invalid_argument(
            "bernoulli_rhs: compact mode with 2 < q <= 4 requires eps > 0");
    const double cq = 1.0 - 2.0 * (1.0 + f.eps) / f.q;
    out.constants["c_q_eps"] = cq;
    out.value = r * a2 / cq *
                (D.gamma * D.gamma + D.d * std::sqrt(N) * D.gamma +
                 D.d * std::pow(N, 2.0 * (1.0 + f.eps) / f.q) * P.B_q_eps);
    return out;
}

std::vector<double> bernoulli_sup_mc(const std::vector<Vec>& V, std::size_t trials,
                                     std::uint64_t seed) {
    require(!V.empty(), "bernoulli_sup_mc: empty V");
    const std::size_t N = V.front().size();
    for (const auto& v : V) require(v.size() == N, "bernoulli_sup_mc: ragged V");

    // squares, once
    std::vector<std::vector<double>> sq(V.size(), std::vector<double>(N));
    for (std::size_t v = 0; v < V.size(); ++v)
        for (std::size_t i = 0; i < N; ++i) sq[v][i] = V[v][i] * V[v][i];

    auto sup_for_signs = [&](const std::vector<double>& signs) {
        double best = 0.0;
        for (std::size_t v = 0; v < V.size(); ++v) {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += signs[i] * sq[v][i];
            best = std::max(best, std::abs(s));
        }
        return best;
    };

    if (trials == 0) { // exhaustive mode
        require(N <= 20, "bernoulli_sup_mc: exhaustive mode limited to N <= 20");
        const std::size_t count = static_cast<std::size_t>(1) << N;
        std::vector<double> out(count);
        par::for_each_trial(count, [&](std::size_t mask) {
            std::vector<double> signs(N);
            for (std::size_t i = 0; i < N; ++i)
                signs[i] = (mask >> i) & 1u ? 1.0 : -1.0;
            out[mask] = sup_for_signs(signs);
        });
        return out;
    }

    std::vector<double> out(trials);
    par::for_each_trial(trials, [&](std::size_t t) {
        Engine eng = make_engine(derive_seed(seed, t));
        std::vector<double> signs(N);
        for (std::size_t i = 0; i < N; ++i) signs[i] = (eng() & 1u) ? 1.0 : -1.0;
        out[t] = sup_for_signs(signs);
    });
    return out;
}

} // namespace heavychain
