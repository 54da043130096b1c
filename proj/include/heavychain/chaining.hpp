#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heavychain/distributions.hpp"
#include "heavychain/matrix.hpp"

namespace heavychain {

using Vec = std::vector<double>;
using Metric = std::function<double(const Vec&, const Vec&)>;

// ---------------------------------------------------------------------------
// Level schedules
// ---------------------------------------------------------------------------

enum class EtaKind { standard, ball };

// Nondecreasing level-budget exponents: level s may hold up to 2^{eta_s}
// centers. The standard kind is eta_0 = 0, eta_s = 2^s; the ball kind is
// eta_s = kappa4 * 2^{s+s1} * max(log(e n / 2^{s+s1}), 1).
struct EtaSequence {
    EtaKind kind = EtaKind::standard;
    std::vector<double> values;
    // ball parameters, kept for the theta formulas
    std::size_t n = 0;
    int s1 = 0;
    double kappa4 = 0.0;

    std::size_t levels() const { return values.size(); }
    double at(std::size_t s) const { return values[s]; }
};

// Builds a schedule whose final value exceeds `cap` (default choice at call
// sites: max(N, 2n)). Throws on ratio/monotonicity violations, reporting the
// offending level. The ball kind requires n >= 2, kappa4 >= 10 and
// 2^{s1} ~ n^delta with delta in (0, 1/2).
EtaSequence make_eta_standard(double cap);
EtaSequence make_eta_ball(std::size_t n, int s1, double kappa4, double cap);

// Minimum over s of log2(10) + eta_{s+2} - eta_s - eta_{s+1}. Nonnegative for
// the standard kind. The ball kind violates this additive form in the band
// where the log factor decays (the multiplicative growth eta_{s+2} >= 1.15
// eta_{s+1} is what the budget accounting downstream actually uses), so the
// slack is reported rather than enforced there.
double eta_product_slack(const EtaSequence& eta, std::size_t* argmin = nullptr);

// ---------------------------------------------------------------------------
// phi families
// ---------------------------------------------------------------------------

struct PhiFamily {
    enum class Kind { beta, lq } kind = Kind::beta;
    double beta = 1.0;  // beta kind
    double q = 0.0;     // lq kind
    double eps = 0.0;   // lq kind, 0 <= eps < q/2 - 1
    std::size_t N = 1;

    static PhiFamily make_beta(double beta, std::size_t N);
    static PhiFamily make_lq(double q, double eps, std::size_t N);
};

// Exact formula value with unit leading constant on [1, N]:
//   phi_beta(x) = sqrt(x) log^{1/beta}(eN/x),
//   phi_{q,eps}(x) = sqrt(x) (N/x)^{(1+eps)/q}.
// For beta < 2 the raw phi_beta formula decreases past x = N e^{1-2/beta};
// the value is held at its running maximum beyond that point so that phi is
// nondecreasing on [1, N], which the decomposition machinery assumes.
double phi_eval(const PhiFamily& f, double x);

struct PhiAggregates {
    double Phi = 0.0;
    std::vector<double> Phi_s; // one entry per level with eta_s <= N
};

// Phi = (sum_{i<=N} phi^4(i)/i^2)^{1/2} and the shifted-window sums
// Phi_s = (sum_{i<=N-ceil(eta_s)} phi^2(eta_s+i)/(eta_s+i) * phi^2(i)/i)^{1/2},
// both by direct summation.
PhiAggregates phi_aggregates(const PhiFamily& f, const EtaSequence& eta);

// ---------------------------------------------------------------------------
// Admissible sequences and gamma functionals
// ---------------------------------------------------------------------------

// Leveled centers T_s with nearest-center assignments pi_s over a finite base
// set. Level s holds at most 2^{eta_s} centers.
struct AdmissibleSequence {
    std::vector<Vec> base;                        // T
    std::vector<std::vector<Vec>> levels;         // centers per level
    std::vector<std::vector<std::size_t>> assign; // assign[s][t] -> index into levels[s]
    EtaSequence eta;
    std::string metric_tag;

    const Vec& projected(std::size_t s, std::size_t t) const {
        return levels[s][assign[s][t]];
    }
    // Delta_s t = pi_s t - pi_{s-1} t; Delta_0 t = pi_0 t.
    Vec increment(std::size_t s, std::size_t t) const;
    void validate() const; // cardinality budgets, assignment ranges
};

// Feasible (not optimal) sequence: farthest-point traversal of T caps each
// level at floor(2^{eta_s}) centers; pi_s maps to the nearest center.
AdmissibleSequence greedy_admissible(const std::vector<Vec>& T, const Metric& d,
                                     const EtaSequence& eta);

// sup_t sum_s 2^{s/beta} d(t, T_s) for the GIVEN sequence; an upper bound on
// gamma_beta(T, d). Standard schedules only (the 2^{s/beta} weights presume
// them).
double gamma_beta_value(const AdmissibleSequence& A, double beta, const Metric& d);

// Exact minimum over admissible sequences with centers restricted to points
// of T (|T| <= 6, max_levels <= 3); exhaustive enumeration.
double gamma_beta_bruteforce(const std::vector<Vec>& T, const Metric& d, double beta,
                             int max_levels);

Metric metric_l2();
Metric metric_linf();

// ---------------------------------------------------------------------------
// Decompositions (sets V in R^N with functionals theta_s and a seminorm)
// ---------------------------------------------------------------------------

struct DecompositionSpec {
    std::vector<Vec> V; // vectors in R^N
    AdmissibleSequence seq;
    // theta[s][v]: theta_s(Delta_s v) for s > 0, theta_0(pi_0 v) at s = 0
    std::vector<std::vector<double>> theta;
    // seminorm of the increments; delta_norm[s][v] = ||Delta_s v|| (s = 0 ->
    // ||pi_0 v||)
    std::vector<std::vector<double>> delta_norm;
    std::vector<double> base_norm; // ||v|| per element
    double alpha = 1.0;
    double gamma = 0.0;
    double d = 0.0; // max over V of base_norm

    std::size_t ambient_dim() const { return V.empty() ? 0 : V.front().size(); }
    void validate() const;
};

struct DecompositionParams {
    double A1 = 0.0, A2 = 0.0, A_Phi = 0.0, B4 = 0.0, B_q_eps = 0.0;
};

DecompositionParams decomposition_params(const DecompositionSpec& D, const PhiFamily& f);

struct Violation {
    std::size_t level = 0;   // level s, or SIZE_MAX for the base-vector condition
    std::size_t element = 0; // index into V
    std::size_t k = 0;       // subset size
    double lhs = 0.0, rhs = 0.0;
};

struct OmegaReport {
    bool holds = true;
    std::optional<Violation> first_violation;
    std::vector<double> margins; // per-level min slack (rhs - lhs)

    void record(bool ok, std::size_t level, std::size_t element, std::size_t k,
                double lhs, double rhs);
};

// Checks Definition-style decomposition conditions: condition 1
// (sum of thetas <= gamma) and conditions 2-3 for all subsets I via the
// top-k reduction (the worst I of size k is the k largest coordinates).
OmegaReport verify_decomposition(const DecompositionSpec& D, const PhiFamily& f);

enum class RhsMode { full, compact };

struct BernoulliRhs {
    double value = 0.0;
    std::map<std::string, double> constants; // every unspecified constant used
};

// Right-hand side of the Bernoulli-process bound:
//   full:    r alpha^2 (gamma (gamma + d phi(N) + A1) + d (A2 + A_Phi))
//   compact: r alpha^2 (gamma^2 + d sqrt(N) (gamma + B4))   [beta or q > 4]
//            r alpha^2 / (1-2(1+eps)/q) *
//              (gamma^2 + d sqrt(N) gamma + d N^{2(1+eps)/q} B_{q,eps})
//                                                           [2 < q <= 4]
BernoulliRhs bernoulli_rhs(const DecompositionSpec& D, const PhiFamily& f, double r,
                           RhsMode mode);

// Per-trial sup_{v in V} |sum_i eps_i v_i^2| over random sign vectors;
// trials == 0 enumerates all 2^N sign patterns (N <= 20 only).
std::vector<double> bernoulli_sup_mc(const std::vector<Vec>& V, std::size_t trials,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Tail selectors: s0, ell_s, quantiles, f_u / F_u
// ---------------------------------------------------------------------------

struct LevelSelectors {
    std::size_t s0 = 0;
    std::vector<std::size_t> ell; // per level; 1 below log(eN), N once eta_s >= N
};

LevelSelectors s0_and_ells(const EtaSequence& eta, std::size_t N);

// Smallest y with Pr(|Y| >= y) <= delta. delta >= 1 gives 0.
double quantile_from_tail(const DistributionSpec& law, double delta);
double quantile_from_samples(std::span<const double> samples, double delta);

// Tail quantile at level delta_j = (j / eN)^{1+eps}.
double tail_quantile_y(const DistributionSpec& law, std::size_t j, std::size_t N,
                       double eps);
double tail_quantile_y(std::span<const double> samples, std::size_t j, std::size_t N,
                       double eps);
// The L_q Markov form y_j = ||Y||_{L_q} (N/j)^{(1+eps)/q}.
double tail_quantile_y_lq(double lq_norm, double q, std::size_t j, std::size_t N,
                          double eps);

// Quantiles at the dyadic indices j = 2^0, 2^1, ..., <= N.
struct QuantileTable {
    std::vector<double> y_pow2;
    std::size_t N = 0;
    double eps = 0.0;

    double at_pow2(std::size_t j) const; // j is the exponent
    static QuantileTable from_law(const DistributionSpec& law, std::size_t N, double eps);
    static QuantileTable from_samples(std::span<const double> samples, std::size_t N,
                                      double eps);
    static QuantileTable from_lq_norm(double lq_norm, double q, std::size_t N, double eps);
    QuantileTable scaled(double factor) const;
};

// f_u(Y, k) = kappa3 sqrt(u) (sum_{j >= 0, 2^j <= ceil(k/u)} 2^j y_{2^j}^2)^{1/2}.
// F_u is the same formula over the class-uniform z quantiles; both use the
// ceiling (the monotone-safe reading).
double f_u(double k, double u, const QuantileTable& table, double kappa3);

struct TailLemmaResult {
    double failure_rate = 0.0; // fraction of trials with some k > u*ell violating
    double theory_bound = 0.0;  // 2 exp(-c2 u eps ell log(eN/ell)), c2 = 1
};

// Monte Carlo check that sum_{i=u ell+1}^{k} (Y_i^2)^* <= f_u(Y, k)^2 for all
// k > u ell (the sum is compared against f^2: f carries the dimensions of a
// norm).
TailLemmaResult check_tail_lemma(const DistributionSpec& law, std::size_t N,
                                 std::size_t ell, double u, double eps, double kappa3,
                                 std::size_t trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Omega event checkers for linear classes h = <t, .> on sampled rows
// ---------------------------------------------------------------------------

// theta_{u,s} evaluated on an increment (level, base index, increment vector).
using ThetaFn = std::function<double(std::size_t s, std::size_t t, const Vec& delta)>;
// Quantile table for the law of <dir, X> (used per increment by Omega_2/3).
using TableFn = std::function<QuantileTable(const Vec& dir)>;

struct OmegaInputs {
    const Matrix* X = nullptr;            // N x n rows
    const AdmissibleSequence* seq = nullptr; // over directions in R^n
    double u = 1.0;
    double kappa3 = 4.0;
};

OmegaReport check_omega1(const OmegaInputs& in, const ThetaFn& theta);
OmegaReport check_omega2(const OmegaInputs& in, const TableFn& increment_table,
                         const QuantileTable& class_table);
OmegaReport check_omega3(const OmegaInputs& in, const TableFn& increment_table,
                         const QuantileTable& class_table);

struct GoodEventReport {
    bool holds = true;
    double gamma_u = 0.0;
    std::optional<Violation> first_violation;
};

// On a resample where Omega_1/2/3 hold, the chaining conclusions must follow:
//  (1) per level and direction, top-k sums of increments are bounded by
//      theta + f_u (full sums by theta alone past eta_s > N);
//  (2) top-k sums of h itself are bounded by gamma_u + sum_{2^i <= k}
//      F_u(u 2^i) + R_{s0}.
// gamma_u is max over directions of sum_{s > s0} theta_{u,s}(Delta_s h).
GoodEventReport check_good_event_conclusions(const OmegaInputs& in, const ThetaFn& theta,
                                             const TableFn& increment_table,
                                             const QuantileTable& class_table);

// ---------------------------------------------------------------------------
// Ball construction and theta families
// ---------------------------------------------------------------------------

// Three-regime theta for the sparse-shell construction, constant 1:
//   s = 0:             sqrt(u) eta_0^{1/2} n^{1/p} 2^{s1 (1/2 - 1/p)}
//   2^{s+s1} <= n:     sqrt(u) eta_s^{1/2} n^{1/p} 2^{-(s+s1)/p}
//   eta_s >= n:        sqrt(u) eta_s^{1/2} 2^{-2^s/n}
double theta_ball(std::size_t s, double u, std::size_t n, double p,
                  const EtaSequence& eta, int s1);

// u (2^s ||dt||_inf + 2^{s/2} ||dt||_2), constant 1; standard schedules.
double theta_logconcave(std::size_t s, double u, const Vec& dt);

// Sparse-shell admissible sequence: levels with 2^{s+s1} <= n are greedy nets
// of U_{2^{s+s1}} = {x in B_2^n : |supp x| <= 2^{s+s1}} under the proxy metric
// d(v, w) = ||v-w||_inf * M_{|supp(v-w)|}; later levels use nets of B_2^n.
// Assignments walk down through the largest-coordinate reductions. The probe
// directions are appended to the final level so chains terminate.
AdmissibleSequence ball_admissible(std::size_t n, double p, double kappa1, double kappa4,
                                   int s1, const Matrix& X_cal,
                                   const std::vector<Vec>& probes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Exponential suprema and the gamma_1 + gamma_2 sandwich
// ---------------------------------------------------------------------------

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// E(T) = E sup_{t in T} <y, t> with y i.i.d. symmetric exponential variance 1;
// gaussian = true swaps in the gaussian analogue G(T).
MeanStderr exp_sup_E(const std::vector<Vec>& T, std::size_t trials, std::uint64_t seed,
                     bool gaussian = false);

struct GammaSandwich {
    bool applicable = false; // false for singletons (both sides 0)
    double gamma1 = 0.0;     // upper bound on gamma_1(T, l_inf)
    double gamma2 = 0.0;     // upper bound on gamma_2(T, l_2)
    double E = 0.0;
    double ratio = 0.0; // (gamma1 + gamma2) / E
};

GammaSandwich gamma12_vs_E_check(const std::vector<Vec>& T, const EtaSequence& eta,
                                 std::size_t trials, std::uint64_t seed);

// JSON round-trip for replay / cross-implementation comparison.
nlohmann::json admissible_to_json(const AdmissibleSequence& A);
AdmissibleSequence admissible_from_json(const nlohmann::json& j);
nlohmann::json decomposition_to_json(const DecompositionSpec& D);
DecompositionSpec decomposition_from_json(const nlohmann::json& j);

} // namespace heavychain
