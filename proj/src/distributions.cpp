#include "heavychain/distributions.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "heavychain/parallel.hpp"

namespace heavychain {

namespace {

constexpr std::uint64_t kResampleTag = 0x7472756e63ULL; // row resampling stream
constexpr std::uint64_t kPilotTag = 0x70696c6f74ULL;    // acceptance pilot stream

double lp_norm(std::span<const double> v, double p) {
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), p);
    return std::pow(s, 1.0 / p);
}

} // namespace

std::string to_string(DistKind kind) {
    switch (kind) {
        case DistKind::gaussian: return "gaussian";
        case DistKind::rademacher: return "rademacher";
        case DistKind::student_t: return "student_t";
        case DistKind::sym_pareto: return "sym_pareto";
        case DistKind::laplace_exponential: return "laplace_exponential";
        case DistKind::lp_ball_uniform: return "lp_ball_uniform";
        case DistKind::coordinate_measure: return "coordinate_measure";
    }
    throw std::logic_error("unknown DistKind");
}

DistKind dist_kind_from_string(const std::string& name) {
    if (name == "gaussian") return DistKind::gaussian;
    if (name == "rademacher") return DistKind::rademacher;
    if (name == "student_t") return DistKind::student_t;
    if (name == "sym_pareto") return DistKind::sym_pareto;
    if (name == "laplace_exponential") return DistKind::laplace_exponential;
    if (name == "lp_ball_uniform") return DistKind::lp_ball_uniform;
    if (name == "coordinate_measure") return DistKind::coordinate_measure;
    throw std::invalid_argument("unknown distribution kind: " + name);
}

bool DistributionSpec::is_scalar_law() const {
    switch (kind) {
        case DistKind::gaussian:
        case DistKind::rademacher:
        case DistKind::student_t:
        case DistKind::sym_pareto:
        case DistKind::laplace_exponential:
            return true;
        default:
            return false;
    }
}

bool DistributionSpec::is_symmetric() const { return true; } // all provided laws are

double DistributionSpec::standardization_factor() const {
    switch (kind) {
        case DistKind::student_t:
            // Var(t_nu) = nu/(nu-2)
            return 1.0 / std::sqrt(law_param / (law_param - 2.0));
        case DistKind::sym_pareto:
            // E P^2 = a/(a-2) for Pareto(1, a)
            return 1.0 / std::sqrt(law_param / (law_param - 2.0));
        default:
            return 1.0; // gaussian, rademacher, laplace(1/sqrt 2) are unit variance
    }
}

void DistributionSpec::validate() const {
    if (kind == DistKind::student_t || kind == DistKind::sym_pareto) {
        require(law_param > 2.0, "student_t/sym_pareto require law parameter > 2");
        if (tail_exponent > 0.0)
            require(tail_exponent < law_param,
                    "tail exponent q must satisfy q < nu (E|xi|^q infinite otherwise)");
    }
    if (kind == DistKind::lp_ball_uniform)
        require(lp_ball_p >= 1.0, "lp_ball_uniform requires p >= 1");
    if (truncation) {
        require(truncation->p > 2.0, "truncation requires p > 2");
        require(truncation->radius_factor > 0.0, "truncation requires kappa1 > 0");
    }
}

nlohmann::json to_json(const DistributionSpec& spec) {
    nlohmann::json j;
    j["kind"] = to_string(spec.kind);
    if (spec.tail_exponent > 0.0) j["q"] = spec.tail_exponent;
    if (spec.law_param > 0.0) j["nu"] = spec.law_param;
    if (spec.kind == DistKind::lp_ball_uniform) {
        j["p"] = spec.lp_ball_p;
    } else if (spec.truncation) {
        j["p"] = spec.truncation->p;
        j["kappa1"] = spec.truncation->radius_factor;
    }
    if (spec.standardized) j["standardized"] = true;
    return j;
}

DistributionSpec distribution_from_json(const nlohmann::json& j) {
    DistributionSpec spec;
    spec.kind = dist_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("q")) spec.tail_exponent = j["q"].get<double>();
    if (j.contains("nu")) spec.law_param = j["nu"].get<double>();
    if (spec.kind == DistKind::lp_ball_uniform) {
        spec.lp_ball_p = j.value("p", 1.0);
    } else if (j.contains("p") && j.contains("kappa1")) {
        spec.truncation = LpBallTruncation{j["p"].get<double>(), j["kappa1"].get<double>()};
    }
    spec.standardized = j.value("standardized", false);
    spec.validate();
    return spec;
}

double lp_ball_coordinate_second_moment(double p, std::size_t n) {
    // |x_1|^p ~ Beta(1/p, (n-1)/p + 1) under the uniform measure on B_p^n.
    const double nn = static_cast<double>(n);
    return std::exp(std::lgamma(3.0 / p) + std::lgamma((nn + p) / p) -
                    std::lgamma(1.0 / p) - std::lgamma((nn + p + 2.0) / p));
}

namespace {

double draw_scalar(const DistributionSpec& spec, Engine& eng) {
    switch (spec.kind) {
        case DistKind::gaussian: {
            std::normal_distribution<double> d(0.0, 1.0);
            return d(eng);
        }
        case DistKind::rademacher:
            return (eng() & 1u) ? 1.0 : -1.0;
        case DistKind::student_t: {
            std::student_t_distribution<double> d(spec.law_param);
            double x = d(eng);
            return spec.standardized ? x * spec.standardization_factor() : x;
        }
        case DistKind::sym_pareto: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double mag = std::pow(1.0 - u(eng), -1.0 / spec.law_param);
            const double sign = (eng() & 1u) ? 1.0 : -1.0;
            const double x = sign * mag;
            return spec.standardized ? x * spec.standardization_factor() : x;
        }
        case DistKind::laplace_exponential: {
            std::exponential_distribution<double> e(std::sqrt(2.0));
            const double mag = e(eng);
            return (eng() & 1u) ? mag : -mag;
        }
        default:
            throw std::invalid_argument("unsupported kind for scalar sampling: " +
                                        to_string(spec.kind));
    }
}

// One row of the vector law induced by spec, without truncation.
void draw_row(const DistributionSpec& spec, std::size_t n, Engine& eng,
              std::span<double> out) {
    switch (spec.kind) {
        case DistKind::lp_ball_uniform: {
            // Generalized-normal radial method: g_i = sign * Gamma(1/p,1)^{1/p},
            // W ~ Exp(1); g / (sum|g|^p + W)^{1/p} is uniform on B_p^n. The
            // exact marginal second moment then makes the output isotropic.
            const double p = spec.lp_ball_p;
            std::gamma_distribution<double> gamma(1.0 / p, 1.0);
            std::exponential_distribution<double> expo(1.0);
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double v = gamma(eng);
                const double sign = (eng() & 1u) ? 1.0 : -1.0;
                out[j] = sign * std::pow(v, 1.0 / p);
                sum += v;
            }
            const double radius = std::pow(sum + expo(eng), 1.0 / p);
            const double iso = 1.0 / std::sqrt(lp_ball_coordinate_second_moment(p, n));
            for (std::size_t j = 0; j < n; ++j) out[j] = out[j] / radius * iso;
            return;
        }
        case DistKind::coordinate_measure: {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            const std::size_t j = pick(eng);
            for (std::size_t k = 0; k < n; ++k) out[k] = 0.0;
            out[j] = std::sqrt(static_cast<double>(n));
            return;
        }
        default: {
            for (std::size_t j = 0; j < n; ++j) out[j] = draw_scalar(spec, eng);
            return;
        }
    }
}

bool row_in_ball(std::span<const double> row, double p, double threshold) {
    return lp_norm(row, p) <= threshold;
}

} // namespace

std::vector<double> sample_scalar(const DistributionSpec& spec, std::size_t count,
                                  std::uint64_t seed) {
    spec.validate();
    require(spec.is_scalar_law(),
            "unsupported kind for scalar sampling (vector law)");
    require(count >= 1, "count must be >= 1");
    std::vector<double> out(count);
    Engine eng = make_engine(seed);
    for (std::size_t i = 0; i < count; ++i) out[i] = draw_scalar(spec, eng);
    return out;
}

SampleMatrix sample_matrix(const DistributionSpec& spec, std::size_t N, std::size_t n,
                           std::uint64_t seed) {
    spec.validate();
    require(N >= 1 && n >= 1, "sample_matrix requires N, n >= 1");

    SampleMatrix out;
    out.data = Matrix(N, n);
    out.seed = seed;
    out.spec = spec;

    const bool truncated = spec.truncation.has_value();
    const double thr = truncated
                           ? spec.truncation->radius_factor *
                                 std::pow(static_cast<double>(n), 1.0 / spec.truncation->p)
                           : 0.0;

    // Each row gets its own stream so regeneration is independent of thread
    // count and of how many redraws other rows needed. Exceptions must not
    // cross the parallel region; a flag carries the failure out.
    std::atomic<bool> stuck{false};
    par::for_each_trial(N, [&](std::size_t i) {
        Engine eng = make_engine(derive_seed(seed, i));
        auto row = out.data.row(i);
        draw_row(spec, n, eng, row);
        if (truncated) {
            std::size_t attempts = 1;
            while (!row_in_ball(row, spec.truncation->p, thr)) {
                if (++attempts > 100000) {
                    stuck.store(true);
                    return;
                }
                draw_row(spec, n, eng, row);
            }
        }
    });
    if (stuck.load())
        throw std::runtime_error("truncation acceptance too small (kappa1 too small?)");
    return out;
}

Matrix sample_exponential_vector(std::size_t n, std::size_t count, std::uint64_t seed) {
    require(n >= 1, "dimension must be >= 1");
    require(count >= 1, "count must be >= 1");
    DistributionSpec spec;
    spec.kind = DistKind::laplace_exponential;
    Matrix out(count, n);
    par::for_each_trial(count, [&](std::size_t i) {
        Engine eng = make_engine(derive_seed(seed, i));
        auto row = out.row(i);
        for (std::size_t j = 0; j < n; ++j) row[j] = draw_scalar(spec, eng);
    });
    return out;
}

TruncationResult truncate_to_lp_ball(const SampleMatrix& X, double p, double kappa1) {
    require(p > 2.0, "truncate_to_lp_ball requires p > 2");
    require(kappa1 > 0.0, "truncate_to_lp_ball requires kappa1 > 0");

    const std::size_t N = X.N(), n = X.n();
    const double thr = kappa1 * std::pow(static_cast<double>(n), 1.0 / p);

    std::vector<std::size_t> violators;
    for (std::size_t i = 0; i < N; ++i)
        if (!row_in_ball(X.data.row(i), p, thr)) violators.push_back(i);

    TruncationResult res;
    res.matrix = X;
    res.matrix.spec.truncation = LpBallTruncation{p, kappa1};
    if (violators.empty()) {
        res.rejection_rate = 0.0;
        return res;
    }

    // Pilot estimate of the acceptance probability before looping.
    {
        const std::size_t pilot = 2000;
        std::size_t accepted = 0;
        std::vector<double> buf(n);
        for (std::size_t i = 0; i < pilot; ++i) {
            Engine eng = make_engine(derive_seed(X.seed, kPilotTag, i));
            draw_row(X.spec, n, eng, buf);
            if (row_in_ball(buf, p, thr)) ++accepted;
        }
        if (static_cast<double>(accepted) / static_cast<double>(pilot) < 1e-3) {
            std::ostringstream msg;
            msg << "truncate_to_lp_ball: estimated acceptance "
                << static_cast<double>(accepted) / static_cast<double>(pilot)
                << " below 1e-3; kappa1=" << kappa1 << " is too small for p=" << p;
            throw std::runtime_error(msg.str());
        }
    }

    std::vector<std::size_t> redraws(violators.size(), 0);
    std::atomic<bool> stuck{false};
    par::for_each_trial(violators.size(), [&](std::size_t vi) {
        const std::size_t i = violators[vi];
        Engine eng = make_engine(derive_seed(X.seed, kResampleTag, i));
        auto row = res.matrix.data.row(i);
        std::size_t attempts = 0;
        do {
            if (++attempts > 100000) {
                stuck.store(true);
                return;
            }
            draw_row(X.spec, n, eng, row);
        } while (!row_in_ball(row, p, thr));
        redraws[vi] = attempts;
    });
    if (stuck.load())
        throw std::runtime_error("truncate_to_lp_ball: row resampling stuck");

    std::size_t total_attempts = N;
    std::size_t rejected = violators.size(); // the original offending draws
    for (std::size_t a : redraws) {
        total_attempts += a;
        rejected += a - 1; // all but the final accepted draw
    }
    res.rejection_rate =
        static_cast<double>(rejected) / static_cast<double>(total_attempts);
    return res;
}

double scalar_lq_norm(const DistributionSpec& spec, double q) {
    require(q >= 1.0, "q must be >= 1");
    const double s = spec.standardized ? spec.standardization_factor() : 1.0;
    switch (spec.kind) {
        case DistKind::gaussian:
            // E|g|^q = 2^{q/2} Gamma((q+1)/2) / sqrt(pi)
            return std::pow(std::exp2(q / 2.0) * std::exp(std::lgamma((q + 1.0) / 2.0)) /
                                std::sqrt(M_PI),
                            1.0 / q);
        case DistKind::rademacher:
            return 1.0;
        case DistKind::laplace_exponential:
            // |Y| ~ Exp(sqrt 2): E|Y|^q = Gamma(q+1) / 2^{q/2}
            return std::pow(std::exp(std::lgamma(q + 1.0)), 1.0 / q) / std::sqrt(2.0);
        case DistKind::sym_pareto: {
            const double a = spec.law_param;
            require(q < a, "E|xi|^q infinite for q >= tail index");
            return std::pow(a / (a - q), 1.0 / q) * s;
        }
        case DistKind::student_t: {
            const double nu = spec.law_param;
            require(q < nu, "E|xi|^q infinite for q >= nu");
            const double logm = 0.5 * q * std::log(nu) + std::lgamma((q + 1.0) / 2.0) +
                                std::lgamma((nu - q) / 2.0) - 0.5 * std::log(M_PI) -
                                std::lgamma(nu / 2.0);
            return std::exp(logm / q) * s;
        }
        default:
            throw std::invalid_argument("no closed-form L_q norm for " +
                                        to_string(spec.kind));
    }
}

bool has_closed_form_tail(const DistributionSpec& spec) {
    switch (spec.kind) {
        case DistKind::gaussian:
        case DistKind::rademacher:
        case DistKind::laplace_exponential:
        case DistKind::sym_pareto:
            return true;
        default:
            return false;
    }
}

double scalar_tail_probability(const DistributionSpec& spec, double t) {
    if (t <= 0.0) return 1.0;
    switch (spec.kind) {
        case DistKind::gaussian:
            return std::erfc(t / std::sqrt(2.0));
        case DistKind::rademacher:
            return t <= 1.0 ? 1.0 : 0.0;
        case DistKind::laplace_exponential:
            return std::exp(-std::sqrt(2.0) * t);
        case DistKind::sym_pareto: {
            const double s = spec.standardized ? spec.standardization_factor() : 1.0;
            return t <= s ? 1.0 : std::pow(t / s, -spec.law_param);
        }
        default:
            throw std::invalid_argument("no closed-form tail for " + to_string(spec.kind));
    }
}

} // namespace heavychain
