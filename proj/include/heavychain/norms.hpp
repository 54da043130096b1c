#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heavychain/matrix.hpp"

namespace heavychain {

struct NormReport {
    double value = 0.0;
    enum class Method { analytic, empirical } method = Method::empirical;
    std::size_t sample_size = 0;
};

// Non-increasing rearrangement of |v|.
std::vector<double> order_stats_desc(std::span<const double> v);

// (sum of the k largest v_i^2)^{1/2}. Equals ||v||_2 at k = len(v).
double top_k_l2(std::span<const double> v, std::size_t k);

// Same on a pre-sorted descending-absolute-value vector (no re-sort).
double top_k_l2_sorted(std::span<const double> sorted_desc, std::size_t k);

// max_k v_k^* / k^{1/p}
double weak_lp_norm(std::span<const double> v, double p);

double lp_norm(std::span<const double> v, double p);

// (mean |x|^q)^{1/q}
double empirical_Lq(std::span<const double> samples, double q);

// Moment-sup estimate of the psi_alpha norm: max over the grid of
// ||.||_{L_q} / q^{1/alpha}. Grids above log(sample count) are unreliable and
// are the caller's responsibility.
double psi_alpha_estimate(std::span<const double> samples, double alpha,
                          std::span<const double> q_grid);

// (p)-norm, sup_{1<=q<=p} ||.||_{L_q}/sqrt(q), restricted to the grid.
double p_norm_local(std::span<const double> samples, double p,
                    std::span<const double> q_grid);

// Empirical essential-sup proxy M_ell = max over rows of top_k_l2(row, ell).
double M_ell_estimate(const Matrix& X, std::size_t ell);

// Analytic ceiling kappa1 n^{1/p} ell^{1/2 - 1/p} valid for rows confined to
// kappa1 n^{1/p} B_p^n (Hoelder, constant 1 for p >= 2).
double M_ell_ceiling(double kappa1, std::size_t n, double p, std::size_t ell);

// Tagged versions, for callers that need to know which route produced the
// number (the true essential sup is analytic only under truncation).
NormReport m_ell_report(const Matrix& X, std::size_t ell);
NormReport m_ell_ceiling_report(double kappa1, std::size_t n, double p, std::size_t ell);

// p ||t||_inf + sqrt(p) (sum_{i > floor(p)} (t_i^2)^*)^{1/2}, the closed-form
// equivalent of the L_p moments of linear functionals on the isotropic B_1^n.
double l1ball_moment_formula(std::span<const double> t, double p);

} // namespace heavychain
