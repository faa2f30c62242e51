#include "splitcop/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "splitcop/numerics.hpp"
#include "splitcop/rng.hpp"

namespace splitcop::garch {

namespace {

constexpr double nu_floor = 2.05;
constexpr double nu_cap = 1000.0;

double sample_mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    const double m = sample_mean(x);
    double s = 0.0;
    for (double v : x)
        s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

// log density of the innovation at z: the unit-variance scaled t has
//   log g(z) = C(nu) - (nu+1)/2 log(1 + z^2/(nu-2));
// the raw unit-scale t replaces nu-2 by nu in both places.
double log_t_const(double nu, bool scaled_t) {
    const double denom = scaled_t ? nu - 2.0 : nu;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(denom * 3.14159265358979323846);
}

struct Series {
    std::span<const double> r;
    double var0; // recursion start and pre-sample e^2
};

// Conditional log-likelihood; -inf for infeasible parameters.
double conditional_loglik(const Series& s, const GarchSpec& spec,
                          const GarchParams& q) {
    if (!(q.alpha0 > 0.0) || q.alpha1 < 0.0 || q.beta1 < 0.0 ||
        q.alpha1 + q.beta1 >= 1.0 || !(q.nu > 2.0))
        return -std::numeric_limits<double>::infinity();
    const std::size_t n = s.r.size();
    const std::size_t t0 = static_cast<std::size_t>(spec.p);
    const double c = log_t_const(q.nu, spec.scaled_t);
    const double half_nu1 = 0.5 * (q.nu + 1.0);
    const double inv_nu2 = 1.0 / (spec.scaled_t ? q.nu - 2.0 : q.nu);
    double sigma2 = s.var0;
    double prev_e2 = s.var0;
    double ll = 0.0;
    for (std::size_t t = t0; t < n; ++t) {
        if (t > t0)
            sigma2 = q.alpha0 + q.alpha1 * prev_e2 + q.beta1 * sigma2;
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            return -std::numeric_limits<double>::infinity();
        double e = s.r[t] - q.mu;
        for (int i = 0; i < spec.p; ++i)
            e -= q.ar[static_cast<std::size_t>(i)] * s.r[t - 1 - static_cast<std::size_t>(i)];
        const double z2 = e * e / sigma2;
        ll += c - half_nu1 * std::log1p(z2 * inv_nu2) - 0.5 * std::log(sigma2);
        prev_e2 = e * e;
    }
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

// Unconstrained parameterization for the optimizer:
//   theta = [mu?, gamma_1..p, log alpha0, logit(alpha1+beta1),
//            logit(alpha1/(alpha1+beta1)), log(nu-2)]
double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

GarchParams decode(const std::vector<double>& theta, const GarchSpec& spec) {
    GarchParams q;
    std::size_t k = 0;
    q.mu = spec.include_mean ? theta[k++] : 0.0;
    q.ar.resize(static_cast<std::size_t>(spec.p));
    for (int i = 0; i < spec.p; ++i)
        q.ar[static_cast<std::size_t>(i)] = theta[k++];
    q.alpha0 = std::exp(std::clamp(theta[k++], -30.0, 30.0));
    const double s = logistic(std::clamp(theta[k++], -30.0, 30.0));
    const double f = logistic(std::clamp(theta[k++], -30.0, 30.0));
    q.alpha1 = s * f;
    q.beta1 = s * (1.0 - f);
    q.nu = 2.0 + std::exp(std::clamp(theta[k++], std::log(nu_floor - 2.0),
                                     std::log(nu_cap - 2.0)));
    return q;
}

std::vector<double> encode(const GarchParams& q, const GarchSpec& spec) {
    std::vector<double> theta;
    if (spec.include_mean)
        theta.push_back(q.mu);
    for (double g : q.ar)
        theta.push_back(g);
    theta.push_back(std::log(q.alpha0));
    const double s = std::clamp(q.alpha1 + q.beta1, 1e-6, 1.0 - 1e-6);
    const double f = std::clamp(q.alpha1 / s, 1e-6, 1.0 - 1e-6);
    theta.push_back(logit(s));
    theta.push_back(logit(f));
    theta.push_back(std::log(std::clamp(q.nu, nu_floor, nu_cap) - 2.0));
    return theta;
}

// Nelder-Mead with standard coefficients. Returns the best point found.
struct NmResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    bool converged = false;
};

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                     std::vector<double> start,
                     const std::vector<double>& steps, int max_iter,
                     double ftol) {
    const std::size_t d = start.size();
    std::vector<std::vector<double>> pts(d + 1, start);
    std::vector<double> fv(d + 1);
    for (std::size_t i = 0; i < d; ++i)
        pts[i + 1][i] += steps[i];
    for (std::size_t i = 0; i <= d; ++i)
        fv[i] = fn(pts[i]);

    std::vector<std::size_t> order(d + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    };
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    NmResult res;
    for (int it = 0; it < max_iter; ++it) {
        sort_simplex();
        const std::size_t best = order[0], worst = order[d], second = order[d - 1];
        if (std::fabs(fv[worst] - fv[best]) <=
            ftol * (1.0 + std::fabs(fv[best]))) {
            res.converged = true;
            break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == worst)
                continue;
            for (std::size_t j = 0; j < d; ++j)
                centroid[j] += pts[i][j];
        }
        for (double& c : centroid)
            c /= static_cast<double>(d);

        for (std::size_t j = 0; j < d; ++j)
            xr[j] = centroid[j] + (centroid[j] - pts[worst][j]);
        const double fr = fn(xr);
        if (fr < fv[best]) {
            for (std::size_t j = 0; j < d; ++j)
                xe[j] = centroid[j] + 2.0 * (centroid[j] - pts[worst][j]);
            const double fe = fn(xe);
            if (fe < fr) {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const std::vector<double>& base = outside ? xr : pts[worst];
            for (std::size_t j = 0; j < d; ++j)
                xc[j] = centroid[j] + 0.5 * (base[j] - centroid[j]);
            const double fc = fn(xc);
            if (fc < std::min(fr, fv[worst])) {
                pts[worst] = xc;
                fv[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 0; i <= d; ++i) {
                    if (i == order[0])
                        continue;
                    for (std::size_t j = 0; j < d; ++j)
                        pts[i][j] = pts[order[0]][j] + 0.5 * (pts[i][j] - pts[order[0]][j]);
                    fv[i] = fn(pts[i]);
                }
            }
        }
    }
    sort_simplex();
    res.x = pts[order[0]];
    res.f = fv[order[0]];
    return res;
}

// Gauss-Jordan inverse with partial pivoting for the (small) Hessian.
bool invert_in_place(std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col]))
                piv = r;
        if (std::fabs(a[piv][col]) < 1e-12)
            return false;
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const double scale = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= scale;
            inv[col][j] /= scale;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double factor = a[r][col];
            if (factor == 0.0)
                continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= factor * a[col][j];
                inv[r][j] -= factor * inv[col][j];
            }
        }
    }
    a = std::move(inv);
    return true;
}

std::vector<double> natural_vector(const GarchParams& q, const GarchSpec& spec) {
    std::vector<double> v;
    if (spec.include_mean)
        v.push_back(q.mu);
    for (double g : q.ar)
        v.push_back(g);
    v.push_back(q.alpha0);
    v.push_back(q.alpha1);
    v.push_back(q.beta1);
    v.push_back(q.nu);
    return v;
}

GarchParams from_natural(const std::vector<double>& v, const GarchSpec& spec) {
    GarchParams q;
    std::size_t k = 0;
    q.mu = spec.include_mean ? v[k++] : 0.0;
    q.ar.assign(v.begin() + static_cast<std::ptrdiff_t>(k),
                v.begin() + static_cast<std::ptrdiff_t>(k) + spec.p);
    k += static_cast<std::size_t>(spec.p);
    q.alpha0 = v[k++];
    q.alpha1 = v[k++];
    q.beta1 = v[k++];
    q.nu = v[k];
    return q;
}

std::vector<double> hessian_std_errors(const Series& s, const GarchSpec& spec,
                                       const GarchParams& q) {
    const std::vector<double> w0 = natural_vector(q, spec);
    const std::size_t d = w0.size();
    auto nll = [&](const std::vector<double>& w) {
        return -conditional_loglik(s, spec, from_natural(w, spec));
    };
    std::vector<double> h(d);
    for (std::size_t i = 0; i < d; ++i)
        h[i] = std::max(1e-5, 1e-4 * std::fabs(w0[i]));
    std::vector<std::vector<double>> H(d, std::vector<double>(d, 0.0));
    bool ok = true;
    for (std::size_t i = 0; i < d && ok; ++i) {
        for (std::size_t j = i; j < d && ok; ++j) {
            std::vector<double> w = w0;
            auto f = [&](double di, double dj) {
                w = w0;
                w[i] += di;
                w[j] += dj;
                return nll(w);
            };
            const double v = (f(h[i], h[j]) - f(h[i], -h[j]) - f(-h[i], h[j]) +
                              f(-h[i], -h[j])) /
                             (4.0 * h[i] * h[j]);
            if (!std::isfinite(v))
                ok = false;
            H[i][j] = H[j][i] = v;
        }
    }
    std::vector<double> se(d, std::numeric_limits<double>::quiet_NaN());
    if (ok && invert_in_place(H))
        for (std::size_t i = 0; i < d; ++i)
            se[i] = H[i][i] > 0.0 ? std::sqrt(H[i][i])
                                  : std::numeric_limits<double>::quiet_NaN();
    return se;
}

} // namespace

double log_likelihood(std::span<const double> returns, const GarchSpec& spec,
                      const GarchParams& params) {
    if (returns.size() < static_cast<std::size_t>(spec.p) + 2)
        throw input_error("garch log_likelihood: series too short");
    Series s{returns, sample_variance(returns)};
    return conditional_loglik(s, spec, params);
}

std::vector<double> pit(const GarchParams& params,
                        std::span<const double> std_residuals, bool scaled_t) {
    const double scale =
        scaled_t ? std::sqrt(params.nu / (params.nu - 2.0)) : 1.0;
    std::vector<double> u(std_residuals.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = std::clamp(num::student_t_cdf(std_residuals[i] * scale, params.nu),
                          1e-6, 1.0 - 1e-6);
    return u;
}

GarchFit fit_garch(std::span<const double> returns, const GarchSpec& spec) {
    if (static_cast<int>(returns.size()) < min_observations)
        throw input_error("fit_garch: need at least 150 observations");
    if (spec.p < 0 || spec.p > max_ar_order)
        throw input_error("fit_garch: AR order out of range");
    for (double r : returns)
        if (!std::isfinite(r))
            throw input_error("fit_garch: non-finite return");

    Series s{returns, sample_variance(returns)};
    auto objective = [&](const std::vector<double>& theta) {
        const double ll = conditional_loglik(s, spec, decode(theta, spec));
        return std::isfinite(ll) ? -ll : 1e12;
    };

    GarchParams start;
    start.mu = spec.include_mean ? sample_mean(returns) : 0.0;
    start.ar.assign(static_cast<std::size_t>(spec.p), 0.0);
    start.alpha1 = 0.08;
    start.beta1 = 0.85;
    start.alpha0 = std::max(1e-8, s.var0 * (1.0 - start.alpha1 - start.beta1));
    start.nu = 8.0;

    const std::size_t d = encode(start, spec).size();
    std::vector<double> steps(d, 0.25);
    if (spec.include_mean)
        steps[0] = 0.2 * std::sqrt(s.var0);
    for (int i = 0; i < spec.p; ++i)
        steps[static_cast<std::size_t>(i) + (spec.include_mean ? 1 : 0)] = 0.1;

    const int max_iter = 400 * static_cast<int>(d);
    NmResult best;
    Rng perturb(0x5eedULL);
    for (int attempt = 0; attempt < 6; ++attempt) {
        std::vector<double> theta0 = encode(start, spec);
        if (attempt > 0)
            for (double& t : theta0)
                t += 0.5 * (perturb.uniform01() - 0.5);
        NmResult r = nelder_mead(objective, theta0, steps, max_iter, 1e-10);
        // polish: restart from the solution with a smaller simplex
        std::vector<double> half(d);
        for (std::size_t i = 0; i < d; ++i)
            half[i] = 0.25 * steps[i];
        NmResult r2 = nelder_mead(objective, r.x, half, max_iter, 1e-11);
        if (r2.f < best.f)
            best = r2;
        if (best.converged && best.f < 1e11)
            break;
    }

    GarchFit fit;
    fit.spec = spec;
    fit.params = decode(best.x, spec);
    fit.loglik = -best.f;
    const int k = spec.p + 4 + (spec.include_mean ? 1 : 0);
    fit.aic = 2.0 * k - 2.0 * fit.loglik;

    if (!(best.f < 1e11))
        throw convergence_error("fit_garch: optimizer failed to find a feasible "
                                "point",
                                fit);
    const GarchParams& q = fit.params;
    if (!(q.alpha0 > 0.0) || q.alpha1 < 0.0 || q.beta1 < 0.0 ||
        q.alpha1 + q.beta1 >= 1.0 || !(q.nu > 2.0))
        throw convergence_error("fit_garch: constraints violated at optimum", fit);
    if (!best.converged)
        throw convergence_error("fit_garch: no convergence after restarts", fit);

    // residual pass with the fitted parameters
    const std::size_t n = returns.size();
    const std::size_t t0 = static_cast<std::size_t>(spec.p);
    double sigma2 = s.var0;
    double prev_e2 = s.var0;
    fit.std_residuals.reserve(n - t0);
    for (std::size_t t = t0; t < n; ++t) {
        if (t > t0)
            sigma2 = q.alpha0 + q.alpha1 * prev_e2 + q.beta1 * sigma2;
        double e = returns[t] - q.mu;
        for (int i = 0; i < spec.p; ++i)
            e -= q.ar[static_cast<std::size_t>(i)] * returns[t - 1 - static_cast<std::size_t>(i)];
        fit.std_residuals.push_back(e / std::sqrt(sigma2));
        prev_e2 = e * e;
    }
    fit.pit_values = pit(q, fit.std_residuals, spec.scaled_t);
    fit.std_errors = hessian_std_errors(s, spec, q);
    return fit;
}

GarchSpec select_ar_order(std::span<const double> returns, int max_p) {
    return select_and_fit(returns, max_p).first;
}

std::pair<GarchSpec, GarchFit> select_and_fit(std::span<const double> returns,
                                              int max_p) {
    if (max_p < 0 || max_p > max_ar_order)
        throw input_error("select_ar_order: max_p out of range");
    if (static_cast<int>(returns.size()) < min_observations + max_p)
        throw input_error("select_ar_order: need at least 150 + max_p "
                          "observations");
    // Candidates are conditioned on the same observations: order p is fit
    // on the series starting at max_p - p, so every AIC covers exactly the
    // last n - max_p points. The winner is then refit on the full series.
    bool have_best = false;
    int best_p = 0;
    double best_aic = 0.0;
    std::string last_error;
    for (int p = 0; p <= max_p; ++p) {
        try {
            const GarchFit fit = fit_garch(
                returns.subspan(static_cast<std::size_t>(max_p - p)),
                GarchSpec{p, true});
            if (!have_best || fit.aic < best_aic) {
                best_p = p;
                best_aic = fit.aic;
                have_best = true;
            }
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    if (!have_best)
        throw numeric_error("select_ar_order: all fits failed (last: " +
                            last_error + ")");
    const GarchSpec spec{best_p, true};
    return {spec, fit_garch(returns, spec)};
}

std::vector<double> simulate(const GarchParams& params, std::size_t n,
                             std::uint64_t seed, std::size_t burnin,
                             bool scaled_t) {
    if (!(params.alpha0 > 0.0) || params.alpha1 < 0.0 || params.beta1 < 0.0 ||
        params.alpha1 + params.beta1 >= 1.0 || !(params.nu > 2.0))
        throw input_error("garch simulate: infeasible parameters");
    Rng rng(seed);
    const double scale =
        scaled_t ? std::sqrt((params.nu - 2.0) / params.nu) : 1.0;
    const std::size_t p = params.ar.size();
    std::vector<double> r;
    r.reserve(n + burnin);
    double sigma2 = params.alpha0 / (1.0 - params.alpha1 - params.beta1);
    double prev_e2 = sigma2;
    for (std::size_t t = 0; t < n + burnin; ++t) {
        if (t > 0)
            sigma2 = params.alpha0 + params.alpha1 * prev_e2 + params.beta1 * sigma2;
        const double eps =
            num::student_t_quantile(rng.uniform01(), params.nu) * scale;
        const double e = std::sqrt(sigma2) * eps;
        double x = params.mu + e;
        for (std::size_t i = 0; i < p && i < r.size(); ++i)
            x += params.ar[i] * r[r.size() - 1 - i];
        r.push_back(x);
        prev_e2 = e * e;
    }
    return {r.begin() + static_cast<std::ptrdiff_t>(burnin), r.end()};
}

} // namespace splitcop::garch
