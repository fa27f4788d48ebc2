#pragma once

// Special functions needed by the closed-form escape/trapping/survival
// evaluators: Gamma, upper incomplete Gamma, and the normal CDF.

#include <cmath>
#include <limits>
#include <string>

#include "levylab/errors.hpp"

namespace levylab {

inline double gamma_fn(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("gamma_fn: argument must be positive, got " + std::to_string(x));
    }
    return std::tgamma(x);
}

namespace detail {

// Regularized lower incomplete gamma P(a,x) by its power series; valid for x < a+1.
inline double gamma_p_series(double a, double x) {
    const int max_iter = 1000;
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < max_iter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw numeric_error("gamma_p_series: no convergence (a=" + std::to_string(a) +
                        ", x=" + std::to_string(x) + ")");
}

// Regularized upper incomplete gamma Q(a,x) by Lentz continued fraction; valid for x >= a+1.
inline double gamma_q_contfrac(double a, double x) {
    const int max_iter = 1000;
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= max_iter; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) {
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
        }
    }
    throw numeric_error("gamma_q_contfrac: no convergence (a=" + std::to_string(a) +
                        ", x=" + std::to_string(x) + ")");
}

}  // namespace detail

// Regularized Q(a,x) = Gamma(a,x)/Gamma(a).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("gamma_q: a must be positive");
    if (x < 0.0) throw std::domain_error("gamma_q: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

// Upper incomplete gamma Gamma(a,x) = \int_x^inf t^(a-1) e^(-t) dt.
inline double incomplete_gamma_upper(double a, double x) {
    return gamma_q(a, x) * gamma_fn(a);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace levylab
