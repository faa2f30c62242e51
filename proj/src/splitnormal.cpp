#include "splitcop/splitnormal.hpp"

#include <cmath>
#include <sstream>

#include "splitcop/errors.hpp"
#include "splitcop/numerics.hpp"
#include "splitcop/rng.hpp"

namespace splitcop::splitnorm {

namespace {

constexpr double two_pi = 6.28318530717958647692;

void check_correlation(double rho, const char* name) {
    if (!(std::fabs(rho) <= max_abs_correlation)) {
        std::ostringstream os;
        os << name << " = " << rho << " outside [-" << max_abs_correlation
           << ", " << max_abs_correlation << "]";
        throw input_error(os.str());
    }
}

double log_piece_prefactor(double a, double rho, double sigma_sq) {
    return std::log(a) -
           std::log(two_pi * sigma_sq * std::sqrt(1.0 - rho * rho));
}

double quad_form(double w, double v, double rho, double sigma_sq) {
    return (w * w - 2.0 * rho * w * v + v * v) /
           (2.0 * (1.0 - rho * rho) * sigma_sq);
}

} // namespace

Params complete_params(double rho_u, double rho_l) {
    check_correlation(rho_u, "rho_u");
    check_correlation(rho_l, "rho_l");
    Params p;
    p.rho_u = rho_u;
    p.rho_l = rho_l;
    p.sigma_u_sq = (1.0 - rho_l) / (1.0 - rho_u);
    // Height matching on w + v = 0 fixes the weight ratio; a_u + a_l = 2
    // makes the total mass one.
    const double ratio = std::sqrt(1.0 - rho_l * rho_l) /
                         (p.sigma_u_sq * std::sqrt(1.0 - rho_u * rho_u));
    p.a_u = 2.0 / (1.0 + ratio);
    p.a_l = 2.0 - p.a_u;
    return p;
}

double log_joint_density(const Params& p, double w, double v) {
    if (w + v > 0.0)
        return log_piece_prefactor(p.a_u, p.rho_u, p.sigma_u_sq) -
               quad_form(w, v, p.rho_u, p.sigma_u_sq);
    return log_piece_prefactor(p.a_l, p.rho_l, 1.0) -
           quad_form(w, v, p.rho_l, 1.0);
}

double joint_density(const Params& p, double w, double v) {
    return std::exp(log_joint_density(p, w, v));
}

double tail_prob_upper(const Params& p, double w) {
    // With S = Z1 + Z2 under the upper piece, corr(Z1, S) = sqrt((1+rho)/2);
    // P(Z1 < w, S > 0) is one orthant probability of the standardized pair.
    const double r = std::sqrt(0.5 * (1.0 + p.rho_u));
    const double z = w / std::sqrt(p.sigma_u_sq);
    return p.a_u * num::bivariate_normal_cdf(z, 0.0, -r);
}

double tail_prob_lower(const Params& p, double w) {
    const double r = std::sqrt(0.5 * (1.0 + p.rho_l));
    return p.a_l * num::bivariate_normal_cdf(w, 0.0, r);
}

double marginal_cdf_exact(const Params& p, double w) {
    return tail_prob_upper(p, w) + tail_prob_lower(p, w);
}

double marginal_density(const Params& p, double w) {
    // Integrate each piece over v via the conditional-normal factorization.
    const double su = std::sqrt(p.sigma_u_sq);
    const double tu = (1.0 + p.rho_u) / (su * std::sqrt(1.0 - p.rho_u * p.rho_u));
    const double tl = (1.0 + p.rho_l) / std::sqrt(1.0 - p.rho_l * p.rho_l);
    return p.a_u / su * num::std_normal_pdf(w / su) * num::std_normal_cdf(tu * w) +
           p.a_l * num::std_normal_pdf(w) * num::std_normal_cdf(-tl * w);
}

double marginal_density_derivative(const Params& p, double w) {
    const double su = std::sqrt(p.sigma_u_sq);
    const double tu = (1.0 + p.rho_u) / (su * std::sqrt(1.0 - p.rho_u * p.rho_u));
    const double tl = (1.0 + p.rho_l) / std::sqrt(1.0 - p.rho_l * p.rho_l);
    const double phi_u = num::std_normal_pdf(w / su);
    const double phi_l = num::std_normal_pdf(w);
    const double upper = p.a_u / su *
                         (-(w / p.sigma_u_sq) * phi_u * num::std_normal_cdf(tu * w) +
                          tu * phi_u * num::std_normal_pdf(tu * w));
    const double lower = p.a_l * (-w * phi_l * num::std_normal_cdf(-tl * w) -
                                  tl * phi_l * num::std_normal_pdf(tl * w));
    return upper + lower;
}

std::vector<std::pair<double, double>> sample(const Params& p, std::size_t n,
                                              std::uint64_t seed) {
    if (n < 1)
        throw input_error("sample: n must be >= 1");
    Rng rng(seed);
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    const double su = std::sqrt(p.sigma_u_sq);
    for (std::size_t i = 0; i < n; ++i) {
        const bool upper = rng.uniform01() < 0.5 * p.a_u;
        const double rho = upper ? p.rho_u : p.rho_l;
        const double sigma = upper ? su : 1.0;
        const double c = std::sqrt(1.0 - rho * rho);
        for (;;) {
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            const double w = sigma * z1;
            const double v = sigma * (rho * z1 + c * z2);
            if ((w + v > 0.0) == upper) {
                out.emplace_back(w, v);
                break;
            }
        }
    }
    return out;
}

} // namespace splitcop::splitnorm
