#include "heavychain/norms.hpp"

#include <algorithm>
#include <cmath>

namespace heavychain {

std::vector<double> order_stats_desc(std::span<const double> v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

double top_k_l2_sorted(std::span<const double> sorted_desc, std::size_t k) {
    require(k >= 1 && k <= sorted_desc.size(), "top_k_l2: k out of range");
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += sorted_desc[i] * sorted_desc[i];
    return std::sqrt(s);
}

double top_k_l2(std::span<const double> v, std::size_t k) {
    const auto sorted = order_stats_desc(v);
    return top_k_l2_sorted(sorted, k);
}

double weak_lp_norm(std::span<const double> v, double p) {
    require(p > 0.0, "weak_lp_norm requires p > 0");
    const auto sorted = order_stats_desc(v);
    double best = 0.0;
    for (std::size_t k = 1; k <= sorted.size(); ++k)
        best = std::max(best, sorted[k - 1] / std::pow(static_cast<double>(k), 1.0 / p));
    return best;
}

double lp_norm(std::span<const double> v, double p) {
    require(p > 0.0, "lp_norm requires p > 0");
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), p);
    return std::pow(s, 1.0 / p);
}

double empirical_Lq(std::span<const double> samples, double q) {
    require(q >= 1.0, "empirical_Lq requires q >= 1");
    require(!samples.empty(), "empirical_Lq requires samples");
    double s = 0.0;
    for (double x : samples) s += std::pow(std::abs(x), q);
    return std::pow(s / static_cast<double>(samples.size()), 1.0 / q);
}

double psi_alpha_estimate(std::span<const double> samples, double alpha,
                          std::span<const double> q_grid) {
    require(alpha > 0.0, "psi_alpha_estimate requires alpha > 0");
    require(!q_grid.empty(), "psi_alpha_estimate: empty grid");
    double best = 0.0;
    for (double q : q_grid)
        best = std::max(best, empirical_Lq(samples, q) / std::pow(q, 1.0 / alpha));
    return best;
}

double p_norm_local(std::span<const double> samples, double p,
                    std::span<const double> q_grid) {
    require(p >= 1.0, "p_norm_local requires p >= 1");
    double best = 0.0;
    bool any = false;
    for (double q : q_grid) {
        if (q < 1.0 || q > p) continue;
        any = true;
        best = std::max(best, empirical_Lq(samples, q) / std::sqrt(q));
    }
    require(any, "p_norm_local: grid has no points in [1, p]");
    return best;
}

double M_ell_estimate(const Matrix& X, std::size_t ell) {
    require(ell >= 1 && ell <= X.cols(), "M_ell_estimate: ell out of range");
    double best = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i)
        best = std::max(best, top_k_l2(X.row(i), ell));
    return best;
}

double M_ell_ceiling(double kappa1, std::size_t n, double p, std::size_t ell) {
    return kappa1 * std::pow(static_cast<double>(n), 1.0 / p) *
           std::pow(static_cast<double>(ell), 0.5 - 1.0 / p);
}

NormReport m_ell_report(const Matrix& X, std::size_t ell) {
    return {M_ell_estimate(X, ell), NormReport::Method::empirical, X.rows()};
}

NormReport m_ell_ceiling_report(double kappa1, std::size_t n, double p, std::size_t ell) {
    return {M_ell_ceiling(kappa1, n, p, ell), NormReport::Method::analytic, 0};
}

double l1ball_moment_formula(std::span<const double> t, double p) {
    require(p >= 1.0 && p <= static_cast<double>(t.size()),
            "l1ball_moment_formula: p out of [1, n]");
    const auto sorted = order_stats_desc(t);
    const std::size_t cut = static_cast<std::size_t>(p); // floor
    double tail = 0.0;
    for (std::size_t i = cut; i < sorted.size(); ++i) tail += sorted[i] * sorted[i];
    return p * sorted[0] + std::sqrt(p) * std::sqrt(tail);
}

} // namespace heavychain
