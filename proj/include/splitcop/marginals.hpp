#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "splitcop/errors.hpp"

namespace splitcop::garch {

/// AR(p)-GARCH(1,1) with Student-t innovations:
///   r_t = mu + sum_i gamma_i r_{t-i} + e_t,   e_t = sigma_t eps_t,
///   sigma_t^2 = alpha0 + alpha1 e_{t-1}^2 + beta1 sigma_{t-1}^2,
/// where eps_t is a unit-variance scaled t: eps = eta sqrt((nu-2)/nu),
/// eta ~ t_nu.
struct GarchSpec {
    int p = 0;
    bool include_mean = true;
    // Innovation convention: true (default) takes eps unit-variance, the
    // scaled t above; false takes eps as the raw unit-scale t_nu. The
    // alternative exists for sensitivity checks.
    bool scaled_t = true;
};

struct GarchParams {
    double mu = 0.0;
    std::vector<double> ar; // gamma_1..gamma_p
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double beta1 = 0.0;
    double nu = 0.0;
};

struct GarchFit {
    GarchSpec spec;
    GarchParams params;
    std::vector<double> std_errors; // order: mu?, gamma..., a0, a1, b1, nu
    double loglik = 0.0;
    double aic = 0.0;
    std::vector<double> std_residuals; // e_t / sigma_t, t = p..n-1
    std::vector<double> pit_values;    // F_t of rescaled residuals, in (0,1)
};

/// Thrown when the optimizer stalls; carries the best fit found so far.
class convergence_error : public numeric_error {
public:
    convergence_error(const std::string& msg, GarchFit best)
        : numeric_error(msg), best_fit(std::move(best)) {}
    GarchFit best_fit;
};

inline constexpr int min_observations = 150;
inline constexpr int max_ar_order = 5;

/// Conditional MLE on percent returns. The variance recursion starts at
/// the sample variance, with pre-sample squared shocks set to it as well.
GarchFit fit_garch(std::span<const double> returns, const GarchSpec& spec);

/// Smallest-AIC AR order in 0..max_p (ties toward smaller p).
GarchSpec select_ar_order(std::span<const double> returns, int max_p = max_ar_order);

/// Order selection returning the winning fit as well.
std::pair<GarchSpec, GarchFit> select_and_fit(std::span<const double> returns,
                                              int max_p = max_ar_order);

/// Probability integral transform of the standardized residuals:
/// u_t = F_t(eps_t sqrt(nu/(nu-2)); nu) under the unit-variance
/// convention (eps_t = F_t(eps_t; nu) under the raw one), clamped into
/// (0,1).
std::vector<double> pit(const GarchParams& params,
                        std::span<const double> std_residuals,
                        bool scaled_t = true);

/// Conditional log-likelihood at given parameters (used by tests and the
/// Hessian); throws on infeasible parameters.
double log_likelihood(std::span<const double> returns, const GarchSpec& spec,
                      const GarchParams& params);

/// Simulate a series from the model, reproducible for a given seed.
std::vector<double> simulate(const GarchParams& params, std::size_t n,
                             std::uint64_t seed, std::size_t burnin = 250,
                             bool scaled_t = true);

} // namespace splitcop::garch
