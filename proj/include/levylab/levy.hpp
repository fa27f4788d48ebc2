#pragma once

// Levy-Ito jump machinery for the truncated per-parameter stable noise: jump
// intensity and threshold, non-homogeneous Poisson arrivals by thinning,
// Pareto-tailed large jumps, small-jump increments with Gaussian compensation
// of the sub-resolution activity, and the single-jump escape probability.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "levylab/errors.hpp"
#include "levylab/rng.hpp"
#include "levylab/stable.hpp"

namespace levylab {

namespace detail {

inline void check_jump_params(double alpha, double eps, double rho) {
    if (!(alpha > 0.5) || !(alpha <= 2.0)) {
        throw std::invalid_argument("alpha must be in (0.5, 2], got " + std::to_string(alpha));
    }
    if (!(eps > 0.0) || !(eps < 1.0)) {
        throw std::invalid_argument("eps must be in (0, 1), got " + std::to_string(eps));
    }
    if (!(rho > 0.0) || !(rho < 1.0)) {
        throw std::invalid_argument("rho must be in (0, 1), got " + std::to_string(rho));
    }
}

}  // namespace detail

// Normalization constant C(alpha) relating the bare Levy measure
// |y|^(-1-alpha) dy to the unit-scale SaS law: a process with measure
// c |y|^(-1-alpha) has SaS increments of scale (c C(alpha) t)^(1/alpha).
// C(alpha) = -2 Gamma(2-alpha) cos(pi alpha/2) / (alpha (alpha-1)), C(1) = pi.
inline double stable_levy_constant(double alpha) {
    if (!(alpha > 0.0) || alpha >= 2.0) {
        throw std::invalid_argument("stable_levy_constant: alpha must be in (0, 2)");
    }
    if (std::fabs(alpha - 1.0) < 1e-9) return std::numbers::pi;
    return -2.0 * std::tgamma(2.0 - alpha) * std::cos(std::numbers::pi * alpha / 2.0) /
           (alpha * (alpha - 1.0));
}

// Jump intensity beta_l(t) = (2/alpha) s_t^(rho(alpha-1)) eps^(rho alpha).
inline double jump_intensity(double alpha, double eps, double rho, double s) {
    detail::check_jump_params(alpha, eps, rho);
    if (!(s > 0.0) || !(s <= 1.0)) {
        throw std::invalid_argument("jump_intensity: s must be in (0, 1]");
    }
    return (2.0 / alpha) * std::pow(s, rho * (alpha - 1.0)) * std::pow(eps, rho * alpha);
}

// Large-jump threshold O = eps^(-rho) s^(-rho (alpha-1)/alpha).
inline double jump_threshold(double eps, double rho, double alpha, double s) {
    detail::check_jump_params(alpha, eps, rho);
    if (!(s > 0.0) || !(s <= 1.0)) {
        throw std::invalid_argument("jump_threshold: s must be in (0, 1]");
    }
    return std::pow(eps, -rho) * std::pow(s, -rho * (alpha - 1.0) / alpha);
}

struct JumpStream {
    std::vector<double> times;    // strictly increasing arrival times
    std::vector<double> heights;  // signed magnitudes, |height| > threshold at arrival
    std::vector<int> param_index;
};

// Arrival times of a Poisson process with rate beta(t) on [0, horizon] by
// Lewis-Shedler thinning against the supplied supremum beta_max.
inline std::vector<double> sample_jump_times(const std::function<double(double)>& intensity_fn,
                                             double horizon, double beta_max,
                                             std::uint64_t seed) {
    if (!(horizon >= 0.0)) throw std::invalid_argument("sample_jump_times: horizon must be >= 0");
    if (!std::isfinite(beta_max) || beta_max < 0.0) {
        throw contract_violation("sample_jump_times: intensity bound must be finite and >= 0");
    }
    std::vector<double> out;
    if (beta_max == 0.0) return out;
    Rng g = make_rng(seed);
    double t = 0.0;
    for (;;) {
        t += -std::log1p(-uniform01(g)) / beta_max;
        if (t > horizon) break;
        double b = intensity_fn(t);
        if (b > beta_max * (1.0 + 1e-12)) {
            throw contract_violation("sample_jump_times: intensity exceeds stated bound at t=" +
                                     std::to_string(t));
        }
        if (uniform01(g) * beta_max < b) out.push_back(t);
    }
    return out;
}

// One signed jump with |J| Pareto(alpha) above the threshold O:
// P(|J| > d) = (d/O)^(-alpha), sign uniform.
inline double sample_large_jump(double alpha, double O, Rng& g) {
    if (!(O > 0.0)) throw std::invalid_argument("sample_large_jump: threshold must be > 0");
    if (!(alpha > 0.5) || alpha >= 2.0) {
        throw std::invalid_argument("sample_large_jump: alpha must be in (0.5, 2)");
    }
    double u = 1.0 - uniform01(g);  // in (0, 1]
    double mag = O * std::pow(u, -1.0 / alpha);
    return uniform01(g) < 0.5 ? -mag : mag;
}

inline double sample_large_jump(double alpha, double O, std::uint64_t seed) {
    Rng g = make_rng(seed);
    return sample_large_jump(alpha, O, g);
}

// One increment over dt of the jump process with Levy measure
// levy_coeff |y|^(-1-alpha) dy truncated to |y| <= O. The infinite activity
// below delta_inner = 1e-3 O is replaced by a variance-matched Gaussian
// (Asmussen-Rosinski compensation); activity in [delta_inner, O] is compound
// Poisson. With the default coefficient 1/C(alpha) and O = infinity the
// increment is exactly SaS(alpha, dt^(1/alpha)) and is drawn directly.
inline double sample_small_increment(double alpha, double O, double dt, Rng& g,
                                     double levy_coeff = -1.0) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_small_increment: dt must be > 0");
    if (!(O > 0.0)) throw std::invalid_argument("sample_small_increment: threshold must be > 0");
    if (!(alpha > 0.5) || alpha >= 2.0) {
        throw std::invalid_argument("sample_small_increment: alpha must be in (0.5, 2)");
    }
    double C = stable_levy_constant(alpha);
    if (levy_coeff < 0.0) levy_coeff = 1.0 / C;
    if (!std::isfinite(O)) {
        return std::pow(levy_coeff * C * dt, 1.0 / alpha) * sample_sas_standard(alpha, g);
    }
    double delta_inner = 1e-3 * O;
    // compound-Poisson part on [delta_inner, O]
    double rate = 2.0 * levy_coeff *
                  (std::pow(delta_inner, -alpha) - std::pow(O, -alpha)) / alpha;
    std::poisson_distribution<int> pd(rate * dt);
    int n_jumps = pd(g);
    double x = 0.0;
    double a_in = std::pow(delta_inner, -alpha);
    double a_out = std::pow(O, -alpha);
    for (int k = 0; k < n_jumps; ++k) {
        double u = uniform01(g);
        double mag = std::pow(a_in - u * (a_in - a_out), -1.0 / alpha);
        x += uniform01(g) < 0.5 ? -mag : mag;
    }
    // Gaussian stand-in for the discarded sub-delta_inner jumps
    double var = dt * 2.0 * levy_coeff * std::pow(delta_inner, 2.0 - alpha) / (2.0 - alpha);
    x += std::sqrt(var) * std::normal_distribution<double>(0.0, 1.0)(g);
    return x;
}

inline double sample_small_increment(double alpha, double O, double dt, std::uint64_t seed) {
    Rng g = make_rng(seed);
    return sample_small_increment(alpha, O, dt, g);
}

struct EscapeProb {
    double value = 0.0;
    bool regime_flag = false;  // set when the asymptotic formula exceeds 1
};

// Probability that a single large jump leaves the interval [d_minus, d_plus]:
// m Phi s^(alpha-1) / beta with m = lambda^alpha eps^alpha / alpha and
// Phi = (-d_minus)^(-alpha) + d_plus^(-alpha); at s = 1 this reduces to
// lambda^alpha eps^(alpha(1-rho)) Phi / 2.
inline EscapeProb first_jump_escape_prob(double alpha, double eps, double rho, double lambda_row,
                                         double s, double d_minus, double d_plus) {
    detail::check_jump_params(alpha, eps, rho);
    if (!(d_plus > 0.0) || !(d_minus < 0.0)) {
        throw std::invalid_argument("first_jump_escape_prob: need d_minus < 0 < d_plus");
    }
    if (!(lambda_row >= 0.0)) {
        throw std::invalid_argument("first_jump_escape_prob: lambda_row must be >= 0");
    }
    double phi = std::pow(-d_minus, -alpha) + std::pow(d_plus, -alpha);
    double m = std::pow(lambda_row, alpha) * std::pow(eps, alpha) / alpha;
    double beta = jump_intensity(alpha, eps, rho, s);
    EscapeProb p;
    p.value = m * phi * std::pow(s, alpha - 1.0) / beta;
    p.regime_flag = p.value > 1.0;
    return p;
}

}  // namespace levylab
