#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "heavychain/matrix.hpp"
#include "heavychain/rng.hpp"

namespace heavychain {

enum class DistKind {
    gaussian,
    rademacher,
    student_t,
    sym_pareto,
    laplace_exponential,
    lp_ball_uniform,
    coordinate_measure,
};

std::string to_string(DistKind kind);
DistKind dist_kind_from_string(const std::string& name);

// Optional conditioning of the row law to the body kappa1 * n^{1/p} B_p^n.
struct LpBallTruncation {
    double p;             // p > 2
    double radius_factor; // kappa1 > 0
};

// A named scalar or vector law. `tail_exponent` is the moment order q whose
// finiteness the law is asked to certify; `law_param` is the distribution's
// own parameter (degrees of freedom for student_t, tail index for
// sym_pareto). The sampler refuses q >= law_param, where E|xi|^q is infinite.
struct DistributionSpec {
    DistKind kind = DistKind::gaussian;
    double tail_exponent = 0.0; // q, for student_t / sym_pareto
    double law_param = 0.0;     // nu (student_t) or pareto tail index
    double lp_ball_p = 0.0;     // p of lp_ball_uniform
    std::optional<LpBallTruncation> truncation;
    bool standardized = false;

    bool is_scalar_law() const;
    bool is_symmetric() const;
    // Multiplier applied to raw draws so that E xi^2 = 1 (closed form).
    double standardization_factor() const;
    void validate() const;
};

nlohmann::json to_json(const DistributionSpec& spec);
DistributionSpec distribution_from_json(const nlohmann::json& j);

// N x n matrix of row samples, reproducible from (spec, seed, N, n).
struct SampleMatrix {
    Matrix data;
    std::uint64_t seed = 0;
    DistributionSpec spec;

    std::size_t N() const { return data.rows(); }
    std::size_t n() const { return data.cols(); }
};

// i.i.d. draws from a scalar law.
std::vector<double> sample_scalar(const DistributionSpec& spec, std::size_t count,
                                  std::uint64_t seed);

// Rows i.i.d. from the vector law induced by spec: entrywise i.i.d. for
// scalar kinds, whole-vector draws for lp_ball_uniform / coordinate_measure.
// If spec.truncation is set, rows are rejection-resampled into the p-ball.
SampleMatrix sample_matrix(const DistributionSpec& spec, std::size_t N, std::size_t n,
                           std::uint64_t seed);

// count x n matrix of i.i.d. symmetric exponential entries with variance 1
// (density ~ exp(-sqrt(2)|t|)).
Matrix sample_exponential_vector(std::size_t n, std::size_t count, std::uint64_t seed);

struct TruncationResult {
    SampleMatrix matrix;
    double rejection_rate; // rejected attempts / total attempts
};

// Conditions the rows of X to kappa1 * n^{1/p} B_p^n by resampling offending
// rows from X's own law until they land inside. Aborts if a pilot batch
// estimates acceptance below 1e-3.
TruncationResult truncate_to_lp_ball(const SampleMatrix& X, double p, double kappa1);

// Exact second moment of a coordinate under the uniform measure on B_p^n;
// lp_ball_uniform rows are divided by its square root to make them isotropic.
double lp_ball_coordinate_second_moment(double p, std::size_t n);

// ||xi||_{L_q} in closed form where available (gaussian, laplace_exponential,
// rademacher, sym_pareto, student_t), for the standardized law when
// spec.standardized is set. Throws for laws without a usable closed form.
double scalar_lq_norm(const DistributionSpec& spec, double q);

// Pr(|xi| >= t) for scalar laws with closed-form tails; used by the analytic
// quantile mode in chaining.
double scalar_tail_probability(const DistributionSpec& spec, double t);
bool has_closed_form_tail(const DistributionSpec& spec);

} // namespace heavychain
