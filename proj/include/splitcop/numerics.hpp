#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace splitcop::num {

inline constexpr double inv_sqrt_two_pi = 0.39894228040143267794;
inline constexpr double sqrt_two_pi = 2.50662827463100050242;

/// Standard normal density.
double std_normal_pdf(double x);

/// Standard normal CDF, absolute error below 1e-15.
double std_normal_cdf(double x);

/// Standard normal quantile (Wichura, algorithm AS 241).
double std_normal_quantile(double p);

/// P(Z1 <= h, Z2 <= k) for a standard bivariate normal pair with
/// correlation rho, |rho| < 1. Infinite h or k express half planes.
/// Hybrid quadrature of Genz (2004); absolute error well below 1e-8.
double bivariate_normal_cdf(double h, double k, double rho);

/// Density of the unit-scale Student-t with nu > 0 degrees of freedom.
double student_t_pdf(double x, double nu);

/// CDF of the unit-scale Student-t via the regularized incomplete beta.
double student_t_cdf(double x, double nu);

/// Inverse of student_t_cdf in x.
double student_t_quantile(double p, double nu);

double regularized_incomplete_beta(double x, double a, double b);

/// Piecewise cubic Hermite interpolant on strictly increasing knots.
///
/// Three construction modes:
///  - monotone(knots, values): slopes estimated from the data
///    (Fritsch-Butland) and limited to the Fritsch-Carlson monotone
///    region; reproduces linear data exactly.
///  - monotone(knots, values, slopes): caller-supplied slopes, limited
///    so monotone data stay monotone.
///  - hermite(knots, values, slopes): slopes used as given (for
///    non-monotone data such as log densities).
///
/// Evaluation clamps to the endpoint values outside the knot range;
/// the derivative is 0 there.
class CubicSpline {
public:
    static CubicSpline monotone(std::span<const double> knots,
                                std::span<const double> values);
    static CubicSpline monotone(std::span<const double> knots,
                                std::span<const double> values,
                                std::span<const double> slopes);
    static CubicSpline hermite(std::span<const double> knots,
                               std::span<const double> values,
                               std::span<const double> slopes);

    double operator()(double x) const;
    double derivative(double x) const;

    std::size_t size() const { return x_.size(); }
    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    double front_knot() const { return x_.front(); }
    double back_knot() const { return x_.back(); }

    /// Index of the interval containing x (clamped to valid intervals).
    std::size_t locate(double x) const;
    /// Evaluate on a known interval; t need not be recomputed by callers.
    double eval_on(std::size_t k, double x) const;
    double deriv_on(std::size_t k, double x) const;

private:
    CubicSpline(std::vector<double> x, std::vector<double> y,
                std::vector<double> m);

    std::vector<double> x_, y_, m_;
};

} // namespace splitcop::num
