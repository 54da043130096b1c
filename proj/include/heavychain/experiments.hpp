#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "heavychain/chaining.hpp"
#include "heavychain/distributions.hpp"

namespace heavychain {

struct ExperimentParams {
    double u = 8.0;
    double r = 1.0;
    double eps = 1.0;
    double kappa3 = 4.0;
    double kappa4 = 10.0;
    double c1 = 1.0;  // weak-lp threshold factor
    double p = 3.0;   // ball construction / small-diameter exponent
    int s1 = 2;       // ball shell offset, 2^{s1} ~ n^delta
    std::size_t ell = 10;          // tail lemma
    std::size_t directions = 20;   // symmetrization class size
    std::size_t probe_count = 16;  // omega-events tested directions
    std::size_t resamples = 200;   // omega-events resamples
    std::size_t e_trials = 4000;   // E(T) Monte Carlo budget
    std::size_t net_points = 100;  // theorem-b spherical family
    std::size_t sparse_points = 100;
    std::size_t sparsity = 4;
    std::size_t inner_samples = 80; // symmetrization probability estimates
};

struct ExperimentConfig {
    std::string experiment;
    std::vector<std::size_t> n_grid;
    std::vector<double> beta_grid; // baiyin
    std::vector<std::size_t> N_grid;
    DistributionSpec distribution;
    std::size_t trials = 50;
    std::uint64_t seed = 0;
    ExperimentParams params;
    std::string out_dir = "out";
    std::string format = "csv";
    bool plot = false;
    nlohmann::json check; // optional acceptance bands for --check
};

ExperimentConfig config_from_json(const nlohmann::json& j);

// Per-cell Monte Carlo records under a fixed column schema, plus a JSON
// summary (per-cell statistics, fitted constants, plot series). Rerunning the
// same config reproduces the records byte for byte.
struct SweepResult {
    std::string experiment;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> records;
    nlohmann::json summary;
};

SweepResult run_baiyin(const ExperimentConfig& cfg);
SweepResult run_covariance(const ExperimentConfig& cfg);
SweepResult run_theorem_b(const ExperimentConfig& cfg);
SweepResult run_symmetrization(const ExperimentConfig& cfg);
SweepResult run_weak_lp_tail(const ExperimentConfig& cfg);
SweepResult run_tail_lemma(const ExperimentConfig& cfg);
SweepResult run_omega_events(const ExperimentConfig& cfg);
SweepResult run_gamma_sandwich(const ExperimentConfig& cfg);

SweepResult run_experiment(const ExperimentConfig& cfg);

// Prior-work envelope curves with unit constants, for plot overlays:
// rudelson sqrt(n log n / N); alpt sqrt(n/N); vershynin (loglog n)^2
// (n/N)^{1/2-2/q}; sv (n/N)^{eta/(2 eta + 2)}.
double reference_envelope(const std::string& kind, std::size_t n, std::size_t N,
                          const nlohmann::json& params);

std::string to_csv(const SweepResult& result);

// Outputs are write-once; attempting to overwrite without force throws this.
struct OutputExists : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_outputs(const SweepResult& result, const ExperimentConfig& cfg, bool force);

// Failed check descriptions; empty means all bands passed. `check` is an
// array of {"stat": <json pointer into summary>, "le"/"ge": number}.
std::vector<std::string> evaluate_check(const nlohmann::json& check,
                                        const nlohmann::json& summary);

// Linear-interpolation quantile of a sample (q in [0,1]).
double quantile(std::vector<double> values, double q);

// Threshold x for the symmetrization experiment: d^2 sqrt(N) for q >= 4,
// d^2 N^{2/q} for 2 < q < 4 (constant 1 recorded by the caller).
double gine_zinn_threshold(double q, double d_lq, std::size_t N);

} // namespace heavychain
