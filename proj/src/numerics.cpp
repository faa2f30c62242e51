#include "splitcop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "splitcop/errors.hpp"

namespace splitcop::num {

namespace {

constexpr double pi = 3.14159265358979323846;
constexpr double two_pi = 6.28318530717958647692;

} // namespace

double std_normal_pdf(double x) {
    return inv_sqrt_two_pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
    // erfc is accurate in the lower tail where 1 - Phi would cancel.
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

double std_normal_quantile(double p) {
    // Wichura (1988), algorithm AS 241, PPND16. Relative error ~1e-16.
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0)
            return -std::numeric_limits<double>::infinity();
        if (p == 1.0)
            return std::numeric_limits<double>::infinity();
        throw input_error("std_normal_quantile: p must lie in [0,1]");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

namespace {

// Gauss-Legendre half rules used by Genz's hybrid bivariate normal scheme.
const double gl_w6[3] = {0.1713244923791705, 0.3607615730481384,
                         0.4679139345726904};
const double gl_x6[3] = {0.9324695142031522, 0.6612093864662647,
                         0.2386191860831970};
const double gl_w12[6] = {0.04717533638651177, 0.1069393259953183,
                          0.1600783285433464, 0.2031674267230659,
                          0.2334925365383547, 0.2491470458134029};
const double gl_x12[6] = {0.9815606342467191, 0.9041172563704750,
                          0.7699026741943050, 0.5873179542866171,
                          0.3678314989981802, 0.1252334085114692};
const double gl_w20[10] = {0.01761400713915212, 0.04060142980038694,
                           0.06267204833410906, 0.08327674157670475,
                           0.1019301198172404,  0.1181945319615184,
                           0.1316886384491766,  0.1420961093183821,
                           0.1491729864726037,  0.1527533871307259};
const double gl_x20[10] = {0.9931285991850949, 0.9639719272779138,
                           0.9122344282513259, 0.8391169718222188,
                           0.7463319064601508, 0.6360536807265150,
                           0.5108670019508271, 0.3737060887154196,
                           0.2277858511416451, 0.07652652113349733};

} // namespace

double bivariate_normal_cdf(double x, double y, double rho) {
    if (std::isnan(x) || std::isnan(y) || !std::isfinite(rho))
        throw input_error("bivariate_normal_cdf: non-finite argument");
    if (std::fabs(rho) >= 1.0)
        throw input_error("bivariate_normal_cdf: |rho| must be < 1");
    if (std::isinf(x) || std::isinf(y)) {
        if ((std::isinf(x) && x < 0.0) || (std::isinf(y) && y < 0.0))
            return 0.0;
        if (std::isinf(x) && std::isinf(y))
            return 1.0;
        return std::isinf(x) ? std_normal_cdf(y) : std_normal_cdf(x);
    }

    // Genz (2004), "Numerical computation of rectangular bivariate and
    // trivariate normal and t probabilities", hybrid scheme of the BVND
    // Fortran code. Computes P(Z1 > h, Z2 > k) with h = -x, k = -y.
    const double* gw;
    const double* gx;
    int ng;
    const double ar = std::fabs(rho);
    if (ar < 0.3) {
        gw = gl_w6;
        gx = gl_x6;
        ng = 3;
    } else if (ar < 0.75) {
        gw = gl_w12;
        gx = gl_x12;
        ng = 6;
    } else {
        gw = gl_w20;
        gx = gl_x20;
        ng = 10;
    }

    double h = -x;
    double k = -y;
    double hk = h * k;
    double bvn = 0.0;

    if (ar < 0.925) {
        if (ar > 0.0) {
            const double hs = 0.5 * (h * h + k * k);
            const double asr = std::asin(rho);
            for (int i = 0; i < ng; ++i) {
                for (int is = -1; is <= 1; is += 2) {
                    const double sn = std::sin(asr * 0.5 * (is * gx[i] + 1.0));
                    bvn += gw[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
                }
            }
            bvn *= asr / (2.0 * two_pi);
        }
        bvn += std_normal_cdf(-h) * std_normal_cdf(-k);
    } else {
        if (rho < 0.0) {
            k = -k;
            hk = -hk;
        }
        const double as = (1.0 - rho) * (1.0 + rho);
        const double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        double asr = -0.5 * (bs / as + hk);
        if (asr > -100.0)
            bvn = a * std::exp(asr) *
                  (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 +
                   c * d * as * as / 5.0);
        if (-hk < 100.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-0.5 * hk) * sqrt_two_pi * std_normal_cdf(-b / a) *
                   b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        const double ah = 0.5 * a;
        for (int i = 0; i < ng; ++i) {
            for (int is = -1; is <= 1; is += 2) {
                const double xs0 = ah * (is * gx[i] + 1.0);
                const double xs = xs0 * xs0;
                asr = -0.5 * (bs / xs + hk);
                if (asr > -100.0) {
                    const double rs = std::sqrt(1.0 - xs);
                    bvn += ah * gw[i] * std::exp(asr) *
                           (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                            (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / two_pi;
        if (rho > 0.0) {
            bvn += std_normal_cdf(-std::max(h, k));
        } else {
            bvn = -bvn;
            if (k > h) {
                if (h >= 0.0)
                    bvn += std_normal_cdf(-h) - std_normal_cdf(-k);
                else
                    bvn += std_normal_cdf(k) - std_normal_cdf(h);
            }
        }
    }
    return std::clamp(bvn, 0.0, 1.0);
}

namespace {

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta, modified Lentz algorithm.
double inc_beta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 3e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double f = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        f *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double mult = d * c;
        f *= mult;
        if (std::fabs(mult - 1.0) < eps)
            break;
    }
    return f;
}

} // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0 && b > 0.0) || std::isnan(x))
        throw input_error("regularized_incomplete_beta: bad arguments");
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * inc_beta_cf(x, a, b) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(a, b)) *
                     inc_beta_cf(1.0 - x, b, a) / b;
}

double student_t_pdf(double x, double nu) {
    if (!(nu > 0.0))
        throw input_error("student_t_pdf: nu must be > 0");
    const double lc = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                      0.5 * std::log(nu * pi);
    return std::exp(lc - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

double student_t_cdf(double x, double nu) {
    if (!(nu > 0.0))
        throw input_error("student_t_cdf: nu must be > 0");
    if (std::isnan(x))
        throw input_error("student_t_cdf: x is NaN");
    if (std::isinf(x))
        return x > 0.0 ? 1.0 : 0.0;
    const double half = 0.5 * regularized_incomplete_beta(nu / (x * x + nu),
                                                          0.5 * nu, 0.5);
    return x >= 0.0 ? 1.0 - half : half;
}

double student_t_quantile(double p, double nu) {
    if (!(nu > 0.0))
        throw input_error("student_t_quantile: nu must be > 0");
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0)
            return -std::numeric_limits<double>::infinity();
        if (p == 1.0)
            return std::numeric_limits<double>::infinity();
        throw input_error("student_t_quantile: p must lie in [0,1]");
    }
    if (p == 0.5)
        return 0.0;
    // Reduce to the upper half and invert by bracketed Newton.
    const bool flip = p < 0.5;
    const double pu = flip ? 1.0 - p : p;
    double lo = 0.0;
    double hi = 1.0;
    while (student_t_cdf(hi, nu) < pu) {
        hi *= 2.0;
        if (hi > 1e150)
            throw numeric_error("student_t_quantile: bracket expansion failed");
    }
    double xq = nu > 2.0 ? std_normal_quantile(pu) * std::sqrt(nu / (nu - 2.0))
                         : std_normal_quantile(pu);
    xq = std::clamp(xq, lo, hi);
    for (int it = 0; it < 100; ++it) {
        const double f = student_t_cdf(xq, nu) - pu;
        if (f > 0.0)
            hi = xq;
        else
            lo = xq;
        const double df = student_t_pdf(xq, nu);
        double step = df > 0.0 ? f / df : 0.0;
        double next = xq - step;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::fabs(next - xq) < 1e-12 * (1.0 + std::fabs(next))) {
            xq = next;
            break;
        }
        xq = next;
    }
    return flip ? -xq : xq;
}

// ---------------------------------------------------------------------------
// CubicSpline

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y,
                         std::vector<double> m)
    : x_(std::move(x)), y_(std::move(y)), m_(std::move(m)) {}

namespace {

void check_grid(std::span<const double> knots, std::span<const double> values) {
    if (knots.size() != values.size())
        throw input_error("spline: knots/values length mismatch");
    if (knots.size() < 4)
        throw input_error("spline: need at least 4 knots");
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (!(knots[i] < knots[i + 1])) {
            std::ostringstream os;
            os << "spline: knots not strictly increasing at index " << i;
            throw input_error(os.str());
        }
    }
    for (double v : values)
        if (!std::isfinite(v))
            throw input_error("spline: non-finite value");
}

// Fritsch-Carlson limiting: project slopes into the monotone region of
// each interval. Intervals with zero secant force flat slopes.
void limit_slopes(const std::vector<double>& x, const std::vector<double>& y,
                  std::vector<double>& m) {
    const std::size_t n = x.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double d = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        if (d == 0.0) {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        double alpha = m[k] / d;
        double beta = m[k + 1] / d;
        if (alpha < 0.0) {
            m[k] = 0.0;
            alpha = 0.0;
        }
        if (beta < 0.0) {
            m[k + 1] = 0.0;
            beta = 0.0;
        }
        const double s = alpha * alpha + beta * beta;
        if (s > 9.0) {
            const double tau = 3.0 / std::sqrt(s);
            m[k] = tau * alpha * d;
            m[k + 1] = tau * beta * d;
        }
    }
}

} // namespace

CubicSpline CubicSpline::monotone(std::span<const double> knots,
                                  std::span<const double> values) {
    check_grid(knots, values);
    const std::size_t n = knots.size();
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = knots[k + 1] - knots[k];
        d[k] = (values[k + 1] - values[k]) / h[k];
    }
    // Fritsch & Butland (1984) slope estimates.
    std::vector<double> m(n);
    m[0] = d[0];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double prod = d[k - 1] * d[k];
        if (prod > 0.0) {
            const double a = (h[k - 1] + 2.0 * h[k]) / (3.0 * (h[k - 1] + h[k]));
            m[k] = prod / (a * d[k] + (1.0 - a) * d[k - 1]);
        } else {
            m[k] = 0.0;
        }
    }
    m[n - 1] = d[n - 2];
    std::vector<double> xv(knots.begin(), knots.end());
    std::vector<double> yv(values.begin(), values.end());
    limit_slopes(xv, yv, m);
    return CubicSpline(std::move(xv), std::move(yv), std::move(m));
}

CubicSpline CubicSpline::monotone(std::span<const double> knots,
                                  std::span<const double> values,
                                  std::span<const double> slopes) {
    check_grid(knots, values);
    if (slopes.size() != knots.size())
        throw input_error("spline: slopes length mismatch");
    std::vector<double> xv(knots.begin(), knots.end());
    std::vector<double> yv(values.begin(), values.end());
    std::vector<double> m(slopes.begin(), slopes.end());
    limit_slopes(xv, yv, m);
    return CubicSpline(std::move(xv), std::move(yv), std::move(m));
}

CubicSpline CubicSpline::hermite(std::span<const double> knots,
                                 std::span<const double> values,
                                 std::span<const double> slopes) {
    check_grid(knots, values);
    if (slopes.size() != knots.size())
        throw input_error("spline: slopes length mismatch");
    return CubicSpline(std::vector<double>(knots.begin(), knots.end()),
                       std::vector<double>(values.begin(), values.end()),
                       std::vector<double>(slopes.begin(), slopes.end()));
}

std::size_t CubicSpline::locate(double x) const {
    if (x <= x_[1])
        return 0;
    if (x >= x_[x_.size() - 2])
        return x_.size() - 2;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double CubicSpline::eval_on(std::size_t k, double x) const {
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t;
    const double omt = 1.0 - t;
    const double omt2 = omt * omt;
    return y_[k] * (1.0 + 2.0 * t) * omt2 + m_[k] * h * t * omt2 +
           y_[k + 1] * t2 * (3.0 - 2.0 * t) - m_[k + 1] * h * t2 * omt;
}

double CubicSpline::deriv_on(std::size_t k, double x) const {
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t;
    return (y_[k] * (6.0 * t2 - 6.0 * t) + y_[k + 1] * (6.0 * t - 6.0 * t2)) / h +
           m_[k] * (3.0 * t2 - 4.0 * t + 1.0) + m_[k + 1] * (3.0 * t2 - 2.0 * t);
}

double CubicSpline::operator()(double x) const {
    if (x <= x_.front())
        return y_.front();
    if (x >= x_.back())
        return y_.back();
    return eval_on(locate(x), x);
}

double CubicSpline::derivative(double x) const {
    if (x < x_.front() || x > x_.back())
        return 0.0;
    return deriv_on(locate(x), x);
}

} // namespace splitcop::num
