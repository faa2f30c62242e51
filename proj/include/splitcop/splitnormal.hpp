#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace splitcop::splitnorm {

/// Largest |rho| accepted; keeps the derived upper-piece variance and all
/// downstream quadratures well conditioned.
inline constexpr double max_abs_correlation = 0.995;

/// Full parameterization of the bivariate split normal distribution: two
/// zero-mean equal-variance normal halves glued continuously along
/// w + v = 0, with the lower-piece variance fixed at 1 for identification.
struct Params {
    double rho_u; // correlation of the upper piece (w + v > 0)
    double rho_l; // correlation of the lower piece (w + v <= 0)
    double sigma_u_sq; // derived: (1 - rho_l) / (1 - rho_u)
    double a_u; // derived piece weights, a_u + a_l = 2
    double a_l;
};

/// Derive (sigma_u_sq, a_u, a_l) from the two tail correlations.
Params complete_params(double rho_u, double rho_l);

double joint_density(const Params& p, double w, double v);
double log_joint_density(const Params& p, double w, double v);

/// P(W < w, W + V > 0): mass of the upper piece left of w.
double tail_prob_upper(const Params& p, double w);

/// P(W < w, W + V <= 0): mass of the lower piece left of w.
double tail_prob_lower(const Params& p, double w);

/// Marginal CDF F_W(w), the sum of the two tail probabilities.
double marginal_cdf_exact(const Params& p, double w);

/// Closed-form marginal density f_W(w).
double marginal_density(const Params& p, double w);

/// Closed-form derivative f_W'(w).
double marginal_density_derivative(const Params& p, double w);

/// n i.i.d. draws, reproducible for a given seed. Draws the piece with
/// probability a/2, then rejection-samples the matching full bivariate
/// normal into that half plane (acceptance rate exactly 1/2).
std::vector<std::pair<double, double>> sample(const Params& p, std::size_t n,
                                              std::uint64_t seed);

} // namespace splitcop::splitnorm
