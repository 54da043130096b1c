#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "heavychain/chaining.hpp"
#include "heavychain/norms.hpp"
#include "heavychain/parallel.hpp"
#include "heavychain/rng.hpp"

namespace heavychain {

LevelSelectors s0_and_ells(const EtaSequence& eta, std::size_t N) {
    require(N >= 1, "s0_and_ells requires N >= 1");
    const double log_eN = 1.0 + std::log(static_cast<double>(N));
    LevelSelectors sel;
    bool found = false;
    for (std::size_t s = 0; s < eta.levels(); ++s) {
        if (eta.at(s) >= log_eN) {
            sel.s0 = s;
            found = true;
            break;
        }
    }
    require(found, "s0_and_ells: schedule never reaches log(eN)");

    sel.ell.assign(eta.levels(), 1);
    std::size_t ell = 1;
    for (std::size_t s = 0; s < eta.levels(); ++s) {
        if (eta.at(s) < log_eN) {
            sel.ell[s] = 1;
            continue;
        }
        // largest ell <= N with ell log(eN/ell) <= eta_s; the left side is
        // increasing in ell, and ell_s is nondecreasing in s.
        while (ell < N) {
            const double next = static_cast<double>(ell + 1);
            const double val =
                next * std::log(M_E * static_cast<double>(N) / next);
            if (val <= eta.at(s))
                ++ell;
            else
                break;
        }
        sel.ell[s] = ell;
    }
    return sel;
}

// ---------------------------------------------------------------------------
// Quantiles
// ---------------------------------------------------------------------------

double quantile_from_tail(const DistributionSpec& law, double delta) {
    if (delta >= 1.0) return 0.0;
    require(delta > 0.0, "quantile_from_tail requires delta > 0");
    switch (law.kind) {
        case DistKind::rademacher:
            return 1.0;
        case DistKind::laplace_exponential:
            return -std::log(delta) / std::sqrt(2.0);
        case DistKind::sym_pareto: {
            const double s = law.standardized ? law.standardization_factor() : 1.0;
            return s * std::pow(delta, -1.0 / law.law_param);
        }
        case DistKind::gaussian: {
            // bisection on erfc(y / sqrt 2) = delta
            double lo = 0.0, hi = 60.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (std::erfc(mid / std::sqrt(2.0)) > delta)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        default:
            throw std::invalid_argument("quantile_from_tail: no closed-form tail for " +
                                        to_string(law.kind));
    }
}

double quantile_from_samples(std::span<const double> samples, double delta) {
    if (delta >= 1.0) return 0.0;
    const std::size_t M = samples.size();
    require(static_cast<double>(M) * delta >= 10.0,
            "quantile_from_samples: insufficient samples for requested delta");
    std::vector<double> abs(M);
    for (std::size_t i = 0; i < M; ++i) abs[i] = std::abs(samples[i]);
    std::sort(abs.begin(), abs.end());
    const std::size_t allowed = static_cast<std::size_t>(delta * static_cast<double>(M));
    return abs[M - allowed];
}

namespace {
double delta_j(std::size_t j, std::size_t N, double eps) {
    return std::pow(static_cast<double>(j) / (M_E * static_cast<double>(N)), 1.0 + eps);
}
} // namespace

double tail_quantile_y(const DistributionSpec& law, std::size_t j, std::size_t N,
                       double eps) {
    require(j >= 1 && j <= N, "tail_quantile_y: j out of [1, N]");
    require(eps > 0.0, "tail_quantile_y requires eps > 0");
    return quantile_from_tail(law, delta_j(j, N, eps));
}

double tail_quantile_y(std::span<const double> samples, std::size_t j, std::size_t N,
                       double eps) {
    require(j >= 1 && j <= N, "tail_quantile_y: j out of [1, N]");
    require(eps > 0.0, "tail_quantile_y requires eps > 0");
    return quantile_from_samples(samples, delta_j(j, N, eps));
}

double tail_quantile_y_lq(double lq_norm, double q, std::size_t j, std::size_t N,
                          double eps) {
    require(j >= 1 && j <= N, "tail_quantile_y_lq: j out of [1, N]");
    return lq_norm *
           std::pow(static_cast<double>(N) / static_cast<double>(j), (1.0 + eps) / q);
}

double QuantileTable::at_pow2(std::size_t j) const {
    if (j >= y_pow2.size()) throw std::invalid_argument("QuantileTable: missing dyadic quantile");
    return y_pow2[j];
}

namespace {
std::size_t dyadic_levels(std::size_t N) {
    std::size_t jmax = 0;
    while ((static_cast<std::size_t>(1) << (jmax + 1)) <= N) ++jmax;
    return jmax + 1; // exponents 0..jmax
}
} // namespace

QuantileTable QuantileTable::from_law(const DistributionSpec& law, std::size_t N,
                                      double eps) {
    QuantileTable t;
    t.N = N;
    t.eps = eps;
    const std::size_t count = dyadic_levels(N);
    for (std::size_t j = 0; j < count; ++j)
        t.y_pow2.push_back(tail_quantile_y(law, static_cast<std::size_t>(1) << j, N, eps));
    return t;
}

QuantileTable QuantileTable::from_samples(std::span<const double> samples, std::size_t N,
                                          double eps) {
    QuantileTable t;
    t.N = N;
    t.eps = eps;
    const std::size_t count = dyadic_levels(N);
    for (std::size_t j = 0; j < count; ++j)
        t.y_pow2.push_back(
            tail_quantile_y(samples, static_cast<std::size_t>(1) << j, N, eps));
    return t;
}

QuantileTable QuantileTable::from_lq_norm(double lq_norm, double q, std::size_t N,
                                          double eps) {
    QuantileTable t;
    t.N = N;
    t.eps = eps;
    const std::size_t count = dyadic_levels(N);
    for (std::size_t j = 0; j < count; ++j)
        t.y_pow2.push_back(
            tail_quantile_y_lq(lq_norm, q, static_cast<std::size_t>(1) << j, N, eps));
    return t;
}

QuantileTable QuantileTable::scaled(double factor) const {
    QuantileTable t = *this;
    for (double& y : t.y_pow2) y *= factor;
    return t;
}

double f_u(double k, double u, const QuantileTable& table, double kappa3) {
    require(k >= 1.0, "f_u requires k >= 1");
    require(u >= 1.0, "f_u requires u >= 1");
    require(kappa3 >= 0.0, "f_u requires kappa3 >= 0");
    const double m = std::ceil(k / u);
    double sum = 0.0;
    for (std::size_t j = 0;; ++j) {
        const double p2 = std::exp2(static_cast<double>(j));
        if (p2 > m) break;
        const double y = table.at_pow2(j);
        sum += p2 * y * y;
    }
    return kappa3 * std::sqrt(u) * std::sqrt(sum);
}

TailLemmaResult check_tail_lemma(const DistributionSpec& law, std::size_t N,
                                 std::size_t ell, double u, double eps, double kappa3,
                                 std::size_t trials, std::uint64_t seed) {
    require(u >= 1.0, "check_tail_lemma requires u >= 1");
    require(trials >= 100, "check_tail_lemma requires trials >= 100");
    require(ell >= 1 && ell <= N, "check_tail_lemma: ell out of range");

    const auto table = QuantileTable::from_law(law, N, eps);
    const std::size_t start =
        std::min(N, static_cast<std::size_t>(std::floor(u * static_cast<double>(ell) + 1e-9)));

    // f_u(k)^2 for k = start+1 .. N, once.
    std::vector<double> f_sq(N + 1, 0.0);
    for (std::size_t k = start + 1; k <= N; ++k) {
        const double f = f_u(static_cast<double>(k), u, table, kappa3);
        f_sq[k] = f * f;
    }

    std::vector<unsigned char> failed(trials, 0);
    par::for_each_trial(trials, [&](std::size_t t) {
        const auto draws = sample_scalar(law, N, derive_seed(seed, t));
        auto sorted = order_stats_desc(draws);
        double tail = 0.0;
        // prefix over ranks start+1..k of the squared order statistics
        for (std::size_t k = start + 1; k <= N; ++k) {
            tail += sorted[k - 1] * sorted[k - 1];
            if (tail > f_sq[k] * (1.0 + 1e-12)) {
                failed[t] = 1;
                break;
            }
        }
    });

    TailLemmaResult out;
    std::size_t bad = 0;
    for (unsigned char f : failed) bad += f;
    out.failure_rate = static_cast<double>(bad) / static_cast<double>(trials);
    out.theory_bound =
        2.0 * std::exp(-u * eps * static_cast<double>(ell) *
                       std::log(M_E * static_cast<double>(N) / static_cast<double>(ell)));
    return out;
}

// ---------------------------------------------------------------------------
// Omega events for linear classes on sampled rows
// ---------------------------------------------------------------------------

namespace {

// Squared inner products <w, X_i> sorted descending, plus prefix sums.
struct EvalProfile {
    std::vector<double> prefix_sq; // prefix_sq[k] = sum of k largest squares
};

EvalProfile evaluate_on_rows(const Matrix& X, const Vec& w) {
    const std::size_t N = X.rows(), n = X.cols();
    std::vector<double> vals(N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto row = X.row(i);
        double ip = 0.0;
        for (std::size_t j = 0; j < n; ++j) ip += row[j] * w[j];
        vals[i] = ip * ip;
    }
    std::sort(vals.begin(), vals.end(), std::greater<>());
    EvalProfile p;
    p.prefix_sq.assign(N + 1, 0.0);
    for (std::size_t k = 1; k <= N; ++k) p.prefix_sq[k] = p.prefix_sq[k - 1] + vals[k - 1];
    return p;
}

std::size_t u_count(double u, std::size_t ell, std::size_t N) {
    const double raw = u * static_cast<double>(ell);
    if (raw >= static_cast<double>(N)) return N;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

} // namespace

OmegaReport check_omega1(const OmegaInputs& in, const ThetaFn& theta) {
    const Matrix& X = *in.X;
    const AdmissibleSequence& A = *in.seq;
    const std::size_t N = X.rows();
    const auto sel = s0_and_ells(A.eta, N);
    const std::size_t levels = A.levels.size();
    require(sel.s0 < levels, "check_omega1: sequence has no level at s0");

    OmegaReport rep;
    rep.margins.assign(levels, std::numeric_limits<double>::infinity());

    for (std::size_t t = 0; t < A.base.size(); ++t) {
        for (std::size_t s = sel.s0; s < levels; ++s) {
            const double es = A.eta.at(s);
            const Vec delta = A.increment(s, t);
            const auto prof = evaluate_on_rows(X, delta);
            std::size_t k;
            if (es <= static_cast<double>(N)) {
                // top u * ell_{s+1} coordinates (terminating at N)
                const std::size_t ell_next =
                    (s + 1 < sel.ell.size()) ? sel.ell[s + 1] : N;
                k = u_count(in.u, ell_next, N);
            } else {
                k = N; // full sum once eta_s > N
            }
            const double lhs = std::sqrt(prof.prefix_sq[k]);
            const double rhs = theta(s, t, delta);
            rep.margins[s] = std::min(rep.margins[s], rhs - lhs);
            rep.record(lhs <= rhs + 1e-12, s, t, k, lhs, rhs);
        }
        // pi_{s0} condition
        {
            const Vec& proj = A.projected(sel.s0, t);
            const auto prof = evaluate_on_rows(X, proj);
            const std::size_t ell_next =
                (sel.s0 + 1 < sel.ell.size()) ? sel.ell[sel.s0 + 1] : N;
            const std::size_t k = u_count(in.u, ell_next, N);
            const double lhs = std::sqrt(prof.prefix_sq[k]);
            const double rhs = theta(sel.s0, t, proj);
            rep.margins[sel.s0] = std::min(rep.margins[sel.s0], rhs - lhs);
            rep.record(lhs <= rhs + 1e-12, sel.s0, t, k, lhs, rhs);
        }
    }
    return rep;
}

OmegaReport check_omega2(const OmegaInputs& in, const TableFn& increment_table,
                         const QuantileTable& class_table) {
    const Matrix& X = *in.X;
    const AdmissibleSequence& A = *in.seq;
    const std::size_t N = X.rows();
    const auto sel = s0_and_ells(A.eta, N);
    const std::size_t levels = A.levels.size();
    require(sel.s0 < levels, "check_omega2: sequence has no level at s0");

    OmegaReport rep;
    rep.margins.assign(levels, std::numeric_limits<double>::infinity());

    for (std::size_t t = 0; t < A.base.size(); ++t) {
        for (std::size_t s = sel.s0; s < levels; ++s) {
            const std::size_t m0 = u_count(in.u, sel.ell[s], N);
            if (m0 >= N) continue; // no j > u ell_s in range

            const Vec delta = A.increment(s, t);
            const auto dprof = evaluate_on_rows(X, delta);
            const auto dtable = increment_table(delta);
            const Vec& proj = A.projected(s, t);
            const auto pprof = evaluate_on_rows(X, proj);

            for (std::size_t j = m0 + 1; j <= N; ++j) {
                const double jd = static_cast<double>(j);
                const double lhs_d = std::sqrt(dprof.prefix_sq[j] - dprof.prefix_sq[m0]);
                const double rhs_d = f_u(jd, in.u, dtable, in.kappa3);
                rep.margins[s] = std::min(rep.margins[s], rhs_d - lhs_d);
                rep.record(lhs_d <= rhs_d + 1e-12, s, t, j, lhs_d, rhs_d);

                const double lhs_p = std::sqrt(pprof.prefix_sq[j] - pprof.prefix_sq[m0]);
                const double rhs_p = f_u(jd, in.u, class_table, in.kappa3);
                rep.margins[s] = std::min(rep.margins[s], rhs_p - lhs_p);
                rep.record(lhs_p <= rhs_p + 1e-12, s, t, j, lhs_p, rhs_p);
            }
        }
    }
    return rep;
}

OmegaReport check_omega3(const OmegaInputs& in, const TableFn& increment_table,
                         const QuantileTable& class_table) {
    const Matrix& X = *in.X;
    const AdmissibleSequence& A = *in.seq;
    const std::size_t N = X.rows();
    const double log_eN = 1.0 + std::log(static_cast<double>(N));

    OmegaReport rep;
    if (A.eta.at(0) >= log_eN) return rep; // vacuously true

    const auto sel = s0_and_ells(A.eta, N);
    require(sel.s0 < A.levels.size(), "check_omega3: sequence has no level at s0");
    rep.margins.assign(sel.s0 + 1, std::numeric_limits<double>::infinity());

    for (std::size_t t = 0; t < A.base.size(); ++t) {
        for (std::size_t s = 0; s < sel.s0; ++s) {
            const Vec delta = A.increment(s, t);
            const auto dprof = evaluate_on_rows(X, delta);
            const auto dtable = increment_table(delta);
            for (std::size_t j = 1; j <= N; ++j) {
                const double lhs = std::sqrt(dprof.prefix_sq[j]);
                const double rhs = f_u(static_cast<double>(j), in.u, dtable, in.kappa3);
                rep.margins[s] = std::min(rep.margins[s], rhs - lhs);
                rep.record(lhs <= rhs + 1e-12, s, t, j, lhs, rhs);
            }
        }
        const Vec& proj = A.projected(sel.s0, t);
        const auto pprof = evaluate_on_rows(X, proj);
        for (std::size_t j = 1; j <= N; ++j) {
            const double lhs = std::sqrt(pprof.prefix_sq[j]);
            const double rhs = f_u(static_cast<double>(j), in.u, class_table, in.kappa3);
            rep.margins[sel.s0] = std::min(rep.margins[sel.s0], rhs - lhs);
            rep.record(lhs <= rhs + 1e-12, sel.s0, t, j, lhs, rhs);
        }
    }
    return rep;
}

GoodEventReport check_good_event_conclusions(const OmegaInputs& in, const ThetaFn& theta,
                                             const TableFn& increment_table,
                                             const QuantileTable& class_table) {
    const Matrix& X = *in.X;
    const AdmissibleSequence& A = *in.seq;
    const std::size_t N = X.rows();
    const auto sel = s0_and_ells(A.eta, N);
    const std::size_t levels = A.levels.size();
    require(sel.s0 < levels, "good-event check: sequence has no level at s0");

    GoodEventReport rep;

    // gamma_u = sup over the tested directions of sum_{s > s0} theta_{u,s},
    // with the infimum replaced by the given sequence.
    for (std::size_t t = 0; t < A.base.size(); ++t) {
        double sum = 0.0;
        for (std::size_t s = sel.s0 + 1; s < levels; ++s)
            sum += theta(s, t, A.increment(s, t));
        rep.gamma_u = std::max(rep.gamma_u, sum);
    }

    auto record = [&](bool ok, std::size_t level, std::size_t element, std::size_t k,
                      double lhs, double rhs) {
        if (!ok && rep.holds) {
            rep.holds = false;
            rep.first_violation = Violation{level, element, k, lhs, rhs};
        }
    };

    for (std::size_t t = 0; t < A.base.size(); ++t) {
        // conclusion (1), per level; theta_{u,s} = 0 below s0 by convention
        for (std::size_t s = 0; s < levels; ++s) {
            const double es = A.eta.at(s);
            const Vec delta = A.increment(s, t);
            const auto prof = evaluate_on_rows(X, delta);
            const double th = s < sel.s0 ? 0.0 : theta(s, t, delta);
            const bool bounded_level = es <= static_cast<double>(N);
            const auto dtable = bounded_level ? increment_table(delta) : QuantileTable{};
            for (std::size_t k = 1; k <= N; ++k) {
                const double lhs = std::sqrt(prof.prefix_sq[k]);
                const double rhs =
                    bounded_level
                        ? th + f_u(static_cast<double>(k), in.u, dtable, in.kappa3)
                        : th;
                record(lhs <= rhs + 1e-12, s, t, k, lhs, rhs);
            }
        }
        // conclusion (2) on h itself
        const auto hprof = evaluate_on_rows(X, A.base[t]);
        const double r_theta = theta(sel.s0, t, A.projected(sel.s0, t));
        for (std::size_t k = 1; k <= N; ++k) {
            double fsum = 0.0;
            for (std::size_t i = 0;; ++i) {
                const double p2 = std::exp2(static_cast<double>(i));
                if (p2 > static_cast<double>(k)) break;
                fsum += f_u(in.u * p2, in.u, class_table, in.kappa3);
            }
            const double R =
                sel.s0 == 0
                    ? r_theta
                    : std::min(r_theta,
                               f_u(static_cast<double>(k), in.u, class_table, in.kappa3));
            const double lhs = std::sqrt(hprof.prefix_sq[k]);
            const double rhs = rep.gamma_u + fsum + R;
            record(lhs <= rhs + 1e-12, levels, t, k, lhs, rhs);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Ball construction
// ---------------------------------------------------------------------------

double theta_ball(std::size_t s, double u, std::size_t n, double p,
                  const EtaSequence& eta, int s1) {
    require(eta.kind == EtaKind::ball, "theta_ball requires the ball schedule");
    require(s < eta.levels(), "theta_ball: s out of schedule");
    const double es = eta.at(s);
    const double nd = static_cast<double>(n);
    const double su = std::sqrt(u);
    if (s == 0)
        return su * std::sqrt(es) * std::pow(nd, 1.0 / p) *
               std::exp2(static_cast<double>(s1) * (0.5 - 1.0 / p));
    const double shell = std::exp2(static_cast<double>(s) + s1);
    if (shell <= nd)
        return su * std::sqrt(es) * std::pow(nd, 1.0 / p) * std::pow(shell, -1.0 / p);
    // eta_s >= n here (kappa4 >= 10 forces it once the shell passes n)
    return su * std::sqrt(es) * std::exp2(-std::exp2(static_cast<double>(s)) / nd);
}

double theta_logconcave(std::size_t s, double u, const Vec& dt) {
    require(u >= 1.0, "theta_logconcave requires u >= 1");
    double linf = 0.0, l2 = 0.0;
    for (double x : dt) {
        linf = std::max(linf, std::abs(x));
        l2 += x * x;
    }
    const double p2 = std::exp2(static_cast<double>(s));
    return u * (p2 * linf + std::sqrt(p2) * std::sqrt(l2));
}

namespace {

std::size_t support_size(const Vec& v) {
    std::size_t c = 0;
    for (double x : v)
        if (x != 0.0) ++c;
    return c;
}

std::size_t level_budget_for(double eta_s) {
    if (eta_s >= 63.0) return std::numeric_limits<std::size_t>::max();
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::exp2(eta_s)));
}

// d(v, w) = ||v - w||_inf * M_{|supp(v-w)|}; M indexed from 1.
double psi2_proxy(const Vec& a, const Vec& b, const std::vector<double>& M) {
    double linf = 0.0;
    std::size_t supp = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) {
            ++supp;
            linf = std::max(linf, std::abs(d));
        }
    }
    if (supp == 0) return 0.0;
    return linf * M[supp];
}

Vec random_sparse_unit(std::size_t n, std::size_t supp, Engine& eng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    // partial Fisher-Yates for the support
    for (std::size_t i = 0; i < supp; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(eng)]);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n, 0.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < supp; ++i) {
        const double g = normal(eng);
        v[idx[i]] = g;
        norm += g * g;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[idx[0]] = 1.0;
        return v;
    }
    for (std::size_t i = 0; i < supp; ++i) v[idx[i]] /= norm;
    return v;
}

// Keep the `keep` largest-magnitude coordinates, zero the rest.
Vec keep_largest(const Vec& v, std::size_t keep) {
    if (support_size(v) <= keep) return v;
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double da = std::abs(v[a]), db = std::abs(v[b]);
        if (da != db) return da > db;
        return a < b;
    });
    Vec out(v.size(), 0.0);
    for (std::size_t i = 0; i < keep; ++i) out[idx[i]] = v[idx[i]];
    return out;
}

std::vector<Vec> greedy_net(const std::vector<Vec>& pool, std::size_t cap,
                            const Metric& d) {
    std::vector<Vec> net;
    if (pool.empty() || cap == 0) return net;
    net.push_back(pool.front());
    std::vector<double> dist(pool.size(), std::numeric_limits<double>::infinity());
    while (net.size() < std::min(cap, pool.size())) {
        double best = -1.0;
        std::size_t pick = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            dist[i] = std::min(dist[i], d(pool[i], net.back()));
            if (dist[i] > best) {
                best = dist[i];
                pick = i;
            }
        }
        if (pick == pool.size() || best <= 0.0) break;
        net.push_back(pool[pick]);
    }
    return net;
}

} // namespace

AdmissibleSequence ball_admissible(std::size_t n, double p, double kappa1, double kappa4,
                                   int s1, const Matrix& X_cal,
                                   const std::vector<Vec>& probes, std::uint64_t seed) {
    require(n >= 2, "ball_admissible requires n >= 2");
    require(!probes.empty(), "ball_admissible requires probe directions");
    require(X_cal.cols() == n, "ball_admissible: calibration dimension mismatch");
    // p and kappa1 describe the law the calibration sample came from; the
    // proxy metric itself only needs the empirical M_ell values.
    (void)p;
    (void)kappa1;

    EtaSequence eta = make_eta_ball(n, s1, kappa4, 6.0 * kappa4 * static_cast<double>(n));

    // Empirical M_ell for every ell, from the calibration sample.
    std::vector<double> M(n + 1, 0.0);
    for (std::size_t i = 0; i < X_cal.rows(); ++i) {
        auto sorted = order_stats_desc(X_cal.row(i));
        double acc = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            acc += sorted[k - 1] * sorted[k - 1];
            M[k] = std::max(M[k], std::sqrt(acc));
        }
    }
    Metric proxy = [M](const Vec& a, const Vec& b) { return psi2_proxy(a, b, M); };

    AdmissibleSequence A;
    A.base = probes;
    A.eta = eta;
    A.metric_tag = "psi2_proxy";

    Engine eng = make_engine(derive_seed(seed, 0xba11));
    std::size_t s_star = 0; // last shell level: 2^{s_star + s1} >= n
    for (std::size_t s = 0; s < eta.levels(); ++s) {
        const double shell = std::exp2(static_cast<double>(s) + s1);
        if (shell >= static_cast<double>(n)) {
            s_star = s;
            break;
        }
        s_star = s;
    }

    for (std::size_t s = 0; s < eta.levels(); ++s) {
        const double shell_d = std::exp2(static_cast<double>(s) + s1);
        const std::size_t supp =
            static_cast<std::size_t>(std::min(shell_d, static_cast<double>(n)));
        const bool sparse_level = s <= s_star;

        std::vector<Vec> pool;
        if (sparse_level) {
            for (std::size_t j = 0; j < n; ++j) { // coordinate anchors
                Vec e(n, 0.0);
                e[j] = 1.0;
                pool.push_back(std::move(e));
            }
            const std::size_t randoms = 32 + 4 * supp;
            for (std::size_t i = 0; i < randoms; ++i)
                pool.push_back(random_sparse_unit(n, supp, eng));
        } else {
            const std::size_t randoms = 64 + 2 * n;
            for (std::size_t i = 0; i < randoms; ++i)
                pool.push_back(random_sparse_unit(n, n, eng));
        }

        const std::size_t comp_cap = sparse_level ? (8 + 4 * supp) : (16 + 2 * n);
        const std::size_t cap = std::min(level_budget_for(eta.at(s)), comp_cap);
        std::vector<Vec> centers = greedy_net(pool, cap, proxy);
        if (s + 1 == eta.levels() || (!sparse_level && s >= s_star + 2)) {
            // terminate chains: the top usable level contains the probes
            for (const auto& t : probes) centers.push_back(t);
        }
        A.levels.push_back(std::move(centers));
        if (!sparse_level && s >= s_star + 2) break;
    }

    // Assignments: nearest center at the top, then largest-coordinate
    // reduction walking down through the shells.
    const std::size_t top = A.levels.size() - 1;
    A.assign.assign(A.levels.size(), std::vector<std::size_t>(probes.size(), 0));
    for (std::size_t t = 0; t < probes.size(); ++t) {
        Vec target = probes[t];
        for (std::size_t sr = 0; sr <= top; ++sr) {
            const std::size_t s = top - sr;
            const double shell_d = std::exp2(static_cast<double>(s) + s1);
            if (shell_d < static_cast<double>(n)) {
                const std::size_t keep =
                    static_cast<std::size_t>(std::min(shell_d, static_cast<double>(n)));
                target = keep_largest(target, keep);
            }
            double best = std::numeric_limits<double>::infinity();
            std::size_t pick = 0;
            for (std::size_t c = 0; c < A.levels[s].size(); ++c) {
                const double d = proxy(target, A.levels[s][c]);
                if (d < best) {
                    best = d;
                    pick = c;
                }
            }
            A.assign[s][t] = pick;
            target = A.levels[s][pick];
        }
    }
    A.validate();
    return A;
}

// ---------------------------------------------------------------------------
// Exponential suprema
// ---------------------------------------------------------------------------

MeanStderr exp_sup_E(const std::vector<Vec>& T, std::size_t trials, std::uint64_t seed,
                     bool gaussian) {
    require(!T.empty(), "exp_sup_E: empty T");
    require(trials >= 1, "exp_sup_E: trials >= 1");
    const std::size_t n = T.front().size();
    for (const auto& t : T) require(t.size() == n, "exp_sup_E: ragged T");

    std::vector<double> sups(trials);
    par::for_each_trial(trials, [&](std::size_t tr) {
        Engine eng = make_engine(derive_seed(seed, tr));
        Vec y(n);
        if (gaussian) {
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t i = 0; i < n; ++i) y[i] = normal(eng);
        } else {
            std::exponential_distribution<double> expo(std::sqrt(2.0));
            for (std::size_t i = 0; i < n; ++i) {
                const double mag = expo(eng);
                y[i] = (eng() & 1u) ? mag : -mag;
            }
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& t : T) {
            double ip = 0.0;
            for (std::size_t i = 0; i < n; ++i) ip += y[i] * t[i];
            best = std::max(best, ip);
        }
        sups[tr] = best;
    });

    MeanStderr out;
    double sum = 0.0;
    for (double s : sups) sum += s;
    out.mean = sum / static_cast<double>(trials);
    double var = 0.0;
    for (double s : sups) var += (s - out.mean) * (s - out.mean);
    var /= std::max<std::size_t>(1, trials - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(trials));
    return out;
}

GammaSandwich gamma12_vs_E_check(const std::vector<Vec>& T, const EtaSequence& eta,
                                 std::size_t trials, std::uint64_t seed) {
    GammaSandwich out;
    out.E = exp_sup_E(T, trials, seed).mean;
    if (T.size() < 2) return out; // both sides 0; ratio not applicable
    out.applicable = true;

    if (T.size() == 2) {
        // Exact two-point optimum over arbitrary centers: the metric midpoint
        // halves the distance at level 0 and level 1 holds both points.
        out.gamma1 = metric_linf()(T[0], T[1]) / 2.0;
        out.gamma2 = metric_l2()(T[0], T[1]) / 2.0;
    } else {
        out.gamma1 = gamma_beta_value(greedy_admissible(T, metric_linf(), eta), 1.0,
                                      metric_linf());
        out.gamma2 =
            gamma_beta_value(greedy_admissible(T, metric_l2(), eta), 2.0, metric_l2());
    }
    out.ratio = (out.gamma1 + out.gamma2) / out.E;
    return out;
}

// ---------------------------------------------------------------------------
// JSON round-trips
// ---------------------------------------------------------------------------

namespace {
nlohmann::json eta_to_json(const EtaSequence& eta) {
    nlohmann::json j;
    j["kind"] = eta.kind == EtaKind::standard ? "standard" : "ball";
    j["values"] = eta.values;
    if (eta.kind == EtaKind::ball) {
        j["n"] = eta.n;
        j["s1"] = eta.s1;
        j["kappa4"] = eta.kappa4;
    }
    return j;
}

EtaSequence eta_from_json(const nlohmann::json& j) {
    EtaSequence eta;
    eta.kind = j.at("kind") == "ball" ? EtaKind::ball : EtaKind::standard;
    eta.values = j.at("values").get<std::vector<double>>();
    if (eta.kind == EtaKind::ball) {
        eta.n = j.at("n").get<std::size_t>();
        eta.s1 = j.at("s1").get<int>();
        eta.kappa4 = j.at("kappa4").get<double>();
    }
    return eta;
}
} // namespace

nlohmann::json admissible_to_json(const AdmissibleSequence& A) {
    nlohmann::json j;
    j["base"] = A.base;
    j["levels"] = A.levels;
    j["assign"] = A.assign;
    j["eta"] = eta_to_json(A.eta);
    j["metric"] = A.metric_tag;
    return j;
}

AdmissibleSequence admissible_from_json(const nlohmann::json& j) {
    AdmissibleSequence A;
    A.base = j.at("base").get<std::vector<Vec>>();
    A.levels = j.at("levels").get<std::vector<std::vector<Vec>>>();
    A.assign = j.at("assign").get<std::vector<std::vector<std::size_t>>>();
    A.eta = eta_from_json(j.at("eta"));
    A.metric_tag = j.value("metric", "custom");
    A.validate();
    return A;
}

nlohmann::json decomposition_to_json(const DecompositionSpec& D) {
    nlohmann::json j;
    j["V"] = D.V;
    j["sequence"] = admissible_to_json(D.seq);
    j["theta"] = D.theta;
    j["delta_norm"] = D.delta_norm;
    j["base_norm"] = D.base_norm;
    j["alpha"] = D.alpha;
    j["gamma"] = D.gamma;
    j["d"] = D.d;
    return j;
}

DecompositionSpec decomposition_from_json(const nlohmann::json& j) {
    DecompositionSpec D;
    D.V = j.at("V").get<std::vector<Vec>>();
    D.seq = admissible_from_json(j.at("sequence"));
    D.theta = j.at("theta").get<std::vector<std::vector<double>>>();
    D.delta_norm = j.at("delta_norm").get<std::vector<std::vector<double>>>();
    D.base_norm = j.at("base_norm").get<std::vector<double>>();
    D.alpha = j.at("alpha").get<double>();
    D.gamma = j.at("gamma").get<double>();
    D.d = j.at("d").get<double>();
    D.validate();
    return D;
}

} // namespace heavychain
