#include "splitcop/copula.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "splitcop/errors.hpp"

namespace splitcop::copula {

namespace {

constexpr double two_pi = 6.28318530717958647692;

// Solve F_W(w) = target by bisection on the exact tail probabilities.
double invert_exact_cdf(const splitnorm::Params& p, double target) {
    double lo = -1.0;
    double hi = 1.0;
    while (splitnorm::marginal_cdf_exact(p, lo) > target) {
        lo *= 2.0;
        if (lo < -1e4)
            throw numeric_error("marginal table: lower bracket failed");
    }
    while (splitnorm::marginal_cdf_exact(p, hi) < target) {
        hi *= 2.0;
        if (hi > 1e4)
            throw numeric_error("marginal table: upper bracket failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (splitnorm::marginal_cdf_exact(p, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double MarginalTable::quantile_raw(double u) const {
    return quantile_spline(std::clamp(u, u_clamp, 1.0 - u_clamp));
}

double MarginalTable::quantile(double u) const {
    u = std::clamp(u, u_clamp, 1.0 - u_clamp);
    double w = quantile_spline(u);
    if (u > cdf_values.front() && u < cdf_values.back()) {
        const std::size_t k = cdf_spline.locate(w);
        const double f = cdf_spline.deriv_on(k, w);
        if (f > 1e-300)
            w -= (cdf_spline.eval_on(k, w) - u) / f;
        w = std::clamp(w, grid.front(), grid.back());
    }
    return w;
}

MarginalTable::FastPoint MarginalTable::fast_point(double u) const {
    u = std::clamp(u, u_clamp, 1.0 - u_clamp);
    const double uc = std::clamp(u, cdf_values.front(), cdf_values.back());
    const std::size_t k = quantile_spline.locate(uc);
    double w = quantile_spline.eval_on(k, uc);
    if (u > cdf_values.front() && u < cdf_values.back()) {
        const std::size_t kw = cdf_spline.locate(w);
        const double f = cdf_spline.deriv_on(kw, w);
        if (f > 1e-300)
            w -= (cdf_spline.eval_on(kw, w) - u) / f;
        w = std::clamp(w, grid.front(), grid.back());
    }
    // the refined knots nest the table knots: ud[3k] == cdf_values[k]
    const auto& ud = log_pdf_spline.knots();
    std::size_t kd = 3 * k;
    kd += static_cast<std::size_t>(uc >= ud[kd + 1]);
    kd += static_cast<std::size_t>(uc >= ud[kd + 1]);
    return {w, log_pdf_spline.eval_on(kd, uc)};
}

MarginalTable build_marginal_table(const splitnorm::Params& p, int m) {
    if (m < 10)
        throw input_error("build_marginal_table: need m >= 10");
    const double w_lo = invert_exact_cdf(p, table_tail_mass);
    const double w_hi = invert_exact_cdf(p, 1.0 - table_tail_mass);

    std::vector<double> w(m), u(m), slope_cdf(m), slope_q(m);
    const double h = (w_hi - w_lo) / (m - 1);
    for (int i = 0; i < m; ++i) {
        w[i] = w_lo + h * i;
        u[i] = splitnorm::marginal_cdf_exact(p, w[i]);
        const double f = splitnorm::marginal_density(p, w[i]);
        slope_cdf[i] = f;
        slope_q[i] = 1.0 / f;
    }
    for (int i = 0; i + 1 < m; ++i)
        if (!(u[i] < u[i + 1]))
            throw numeric_error("build_marginal_table: CDF not increasing");

    // log f_W on a grid refined 3x in w; only the likelihood kernel reads it
    const int md = 3 * m - 2;
    std::vector<double> ud(md), logf(md), slope_logf(md);
    const double hd = (w_hi - w_lo) / (md - 1);
    for (int i = 0; i < md; ++i) {
        const double wd = w_lo + hd * i;
        ud[i] = i % 3 == 0 ? u[i / 3] : splitnorm::marginal_cdf_exact(p, wd);
        const double f = splitnorm::marginal_density(p, wd);
        const double fp = splitnorm::marginal_density_derivative(p, wd);
        logf[i] = std::log(f);
        slope_logf[i] = fp / (f * f); // d/du log f(Q(u))
    }
    for (int i = 0; i + 1 < md; ++i)
        if (!(ud[i] < ud[i + 1]))
            throw numeric_error("build_marginal_table: CDF not increasing");

    return MarginalTable{
        w,
        u,
        num::CubicSpline::monotone(w, u, slope_cdf),
        num::CubicSpline::monotone(u, w, slope_q),
        num::CubicSpline::hermite(ud, logf, slope_logf),
    };
}

CopulaModel::CopulaModel(const splitnorm::Params& p, int m)
    : params_(p), table_(build_marginal_table(p, m)) {
    log_pref_u_ = std::log(p.a_u) -
                  std::log(two_pi * p.sigma_u_sq *
                           std::sqrt(1.0 - p.rho_u * p.rho_u));
    log_pref_l_ =
        std::log(p.a_l) - std::log(two_pi * std::sqrt(1.0 - p.rho_l * p.rho_l));
    qc_u_ = 1.0 / (2.0 * (1.0 - p.rho_u * p.rho_u) * p.sigma_u_sq);
    qc_l_ = 1.0 / (2.0 * (1.0 - p.rho_l * p.rho_l));
}

double CopulaModel::log_density(double x, double y, DensityMode mode) const {
    if (!std::isfinite(x) || !std::isfinite(y))
        throw input_error("copula density: non-finite input");
    const double wx = table_.quantile(x);
    const double wy = table_.quantile(y);
    double lognum;
    if (wx + wy > 0.0)
        lognum = log_pref_u_ -
                 qc_u_ * (wx * wx - 2.0 * params_.rho_u * wx * wy + wy * wy);
    else
        lognum = log_pref_l_ -
                 qc_l_ * (wx * wx - 2.0 * params_.rho_l * wx * wy + wy * wy);
    double fx, fy;
    if (mode == DensityMode::analytic) {
        fx = splitnorm::marginal_density(params_, wx);
        fy = splitnorm::marginal_density(params_, wy);
    } else {
        fx = table_.cdf_spline.derivative(wx);
        fy = table_.cdf_spline.derivative(wy);
        if (!(fx > 0.0) || !(fy > 0.0))
            throw numeric_error(
                "copula density: spline-derivative marginal vanished");
    }
    return lognum - std::log(fx) - std::log(fy);
}

double CopulaModel::density(double x, double y, DensityMode mode) const {
    return std::exp(log_density(x, y, mode));
}

double CopulaModel::log_density_fast(double x, double y) const {
    const auto px = table_.fast_point(x);
    const auto py = table_.fast_point(y);
    const double wx = px.w;
    const double wy = py.w;
    double lognum;
    if (wx + wy > 0.0)
        lognum = log_pref_u_ -
                 qc_u_ * (wx * wx - 2.0 * params_.rho_u * wx * wy + wy * wy);
    else
        lognum = log_pref_l_ -
                 qc_l_ * (wx * wx - 2.0 * params_.rho_l * wx * wy + wy * wy);
    return lognum - px.log_f - py.log_f;
}

double CopulaModel::log_likelihood(
    std::span<const std::pair<double, double>> data, DensityMode mode) const {
    if (data.empty())
        throw input_error("log_likelihood: empty data");
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i].first) || !std::isfinite(data[i].second)) {
            std::ostringstream os;
            os << "log_likelihood: non-finite pair at index " << i;
            throw input_error(os.str());
        }
        const double ld = log_density(data[i].first, data[i].second, mode);
        if (!std::isfinite(ld)) {
            std::ostringstream os;
            os << "log_likelihood: non-finite density at index " << i;
            throw numeric_error(os.str());
        }
        sum += ld;
    }
    return sum;
}

} // namespace splitcop::copula
