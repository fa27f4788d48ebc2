#pragma once

// Symmetric alpha-stable (SaS) core: Chambers-Mallows-Stuck sampling, density
// and CDF by numeric Fourier inversion of the characteristic function
// exp(-scale^alpha |w|^alpha), quantile-based tail-index estimation, and
// Gaussian-vs-SaS histogram fit comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "levylab/errors.hpp"
#include "levylab/rng.hpp"
#include "levylab/special.hpp"

namespace levylab {

struct StableLaw {
    double alpha;  // stability index, (0.5, 2]; alpha = 2 is Normal(0, 2 scale^2)
    double scale;  // dispersion sigma > 0

    void validate() const {
        if (!(alpha > 0.5) || !(alpha <= 2.0)) {
            throw std::invalid_argument("StableLaw: alpha must be in (0.5, 2], got " +
                                        std::to_string(alpha));
        }
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw std::invalid_argument("StableLaw: scale must be positive, got " +
                                        std::to_string(scale));
        }
    }
};

// One standard SaS(alpha, 1) draw by the Chambers-Mallows-Stuck construction.
inline double sample_sas_standard(double alpha, Rng& g) {
    const double pi = std::numbers::pi;
    double v = (uniform01(g) - 0.5) * pi;            // Uniform(-pi/2, pi/2)
    double w = -std::log1p(-uniform01(g));           // Exp(1)
    if (w < 1e-300) w = 1e-300;
    if (alpha == 1.0) return std::tan(v);
    double a = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha);
    double b = std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
    return a * b;
}

inline std::vector<double> sample_sas(const StableLaw& law, std::size_t n, std::uint64_t seed) {
    law.validate();
    if (n < 1) throw std::invalid_argument("sample_sas: n must be >= 1");
    Rng g = make_rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = law.scale * sample_sas_standard(law.alpha, g);
    return out;
}

namespace detail {

// Gauss-Legendre 10-point nodes/weights on [-1, 1].
inline constexpr std::array<double, 5> kGl10X = {
    0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
    0.8650633666889845, 0.9739065285171717};
inline constexpr std::array<double, 5> kGl10W = {
    0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
    0.1494513491505806, 0.0666713443086881};

// Precomputed quadrature grid for integrals (1/pi) int_0^inf h(z u) e^(-u^alpha) du,
// with weights already carrying the exp(-u^alpha) factor. Panels are sized to
// resolve oscillations of frequency up to z_max.
struct FourierGrid {
    std::vector<double> u;
    std::vector<double> w;

    FourierGrid(double alpha, double z_max) {
        const double pi = std::numbers::pi;
        // e^{-u^alpha} < 2e-15 beyond u_end
        double u_end = std::pow(34.0, 1.0 / alpha);
        double h = std::min(0.35, pi / (4.0 * std::max(std::fabs(z_max), 1.0)));
        auto n_panels = static_cast<std::size_t>(std::ceil(u_end / h));
        if (n_panels > 50'000'000) {
            throw numeric_error("FourierGrid: quadrature grid too large (alpha=" +
                                std::to_string(alpha) + ", z_max=" + std::to_string(z_max) + ")");
        }
        u.reserve(n_panels * 10);
        w.reserve(n_panels * 10);
        for (std::size_t p = 0; p < n_panels; ++p) {
            double a = h * static_cast<double>(p);
            double c = a + 0.5 * h, r = 0.5 * h;
            for (int k = 0; k < 5; ++k) {
                for (double s : {-1.0, 1.0}) {
                    double uu = c + s * r * kGl10X[static_cast<std::size_t>(k)];
                    u.push_back(uu);
                    w.push_back(r * kGl10W[static_cast<std::size_t>(k)] *
                                std::exp(-std::pow(uu, alpha)));
                }
            }
        }
    }
};

inline double pdf_standard(double alpha, double z, const FourierGrid& grid) {
    const double pi = std::numbers::pi;
    double s = 0.0;
    for (std::size_t i = 0; i < grid.u.size(); ++i) s += grid.w[i] * std::cos(z * grid.u[i]);
    return s / pi;
}

inline double cdf_standard_grid(double z, const FourierGrid& grid) {
    const double pi = std::numbers::pi;
    double s = 0.0;
    for (std::size_t i = 0; i < grid.u.size(); ++i)
        s += grid.w[i] * std::sin(z * grid.u[i]) / grid.u[i];
    return std::min(1.0, std::max(0.0, 0.5 + s / pi));
}

// Upper-tail probability P(X > z) of the standard law by the power series
// (1/pi) sum_k (-1)^(k+1) Gamma(alpha k)/k! sin(k pi alpha/2) z^(-alpha k);
// convergent for alpha < 1 and an excellent asymptotic expansion otherwise.
// Only used for z above the Fourier/series switch point.
inline double tail_prob_series(double alpha, double z) {
    const double pi = std::numbers::pi;
    double s = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    double log_kfact = 0.0;
    for (int k = 1; k <= 40; ++k) {
        log_kfact += k > 1 ? std::log(static_cast<double>(k)) : 0.0;
        double mag = std::exp(std::lgamma(alpha * k) - log_kfact - alpha * k * std::log(z)) / pi;
        double term = (k % 2 == 1 ? 1.0 : -1.0) * mag * std::sin(k * pi * alpha / 2.0);
        if (mag > prev) break;  // asymptotic series started diverging; truncate
        s += term;
        prev = mag;
        if (mag < 1e-15) break;
    }
    return std::min(1.0, std::max(0.0, s));
}

// z >= 0 switch point between Fourier inversion and the tail series.
inline constexpr double kCdfTailSwitch = 30.0;

}  // namespace detail

// Density of SaS(alpha, scale) at x, absolute error <= 1e-8.
inline double sas_pdf(const StableLaw& law, double x) {
    law.validate();
    if (!std::isfinite(x)) throw std::invalid_argument("sas_pdf: x must be finite");
    double z = std::fabs(x) / law.scale;
    detail::FourierGrid grid(law.alpha, z);
    double f = detail::pdf_standard(law.alpha, z, grid) / law.scale;
    if (!std::isfinite(f)) throw numeric_error("sas_pdf: quadrature produced non-finite value");
    return std::max(0.0, f);
}

// CDF of SaS(alpha, scale) at x (numeric Fourier inversion, tail series for
// far-out arguments).
inline double sas_cdf(const StableLaw& law, double x) {
    law.validate();
    double z = x / law.scale;
    double zz = std::fabs(z);
    double f;
    if (zz > detail::kCdfTailSwitch) {
        f = 1.0 - detail::tail_prob_series(law.alpha, zz);
    } else {
        detail::FourierGrid grid(law.alpha, zz);
        f = detail::cdf_standard_grid(zz, grid);
    }
    return z >= 0.0 ? f : 1.0 - f;
}

// CDF of the standard law at many points sharing one quadrature grid.
inline std::vector<double> sas_cdf_standard_batch(double alpha, const std::vector<double>& z) {
    double z_max = 1.0;
    for (double v : z)
        if (std::isfinite(v)) z_max = std::max(z_max, std::min(std::fabs(v), detail::kCdfTailSwitch));
    detail::FourierGrid grid(alpha, z_max);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        double zz = std::fabs(z[i]);
        double f = zz > detail::kCdfTailSwitch ? 1.0 - detail::tail_prob_series(alpha, zz)
                                               : detail::cdf_standard_grid(zz, grid);
        out[i] = (z[i] >= 0.0 || std::isnan(z[i])) ? f : 1.0 - f;
    }
    return out;
}

#include "levylab/stable_quantile_table.inc"

namespace detail {

// Interpolate a column of the standard-law quantile table at alpha.
inline double table_lookup(double alpha, bool want_q75) {
    const auto& t = kStableQuantileTable;
    double a = std::clamp(alpha, t.front().alpha, t.back().alpha);
    std::size_t i = 1;
    while (i + 1 < t.size() && t[i].alpha < a) ++i;
    const auto& lo = t[i - 1];
    const auto& hi = t[i];
    double f = (a - lo.alpha) / (hi.alpha - lo.alpha);
    return want_q75 ? lo.q75 + f * (hi.q75 - lo.q75) : lo.nu + f * (hi.nu - lo.nu);
}

inline double quantile_sorted(const std::vector<double>& xs, double p) {
    // linear interpolation between order statistics (R type 7)
    double h = (static_cast<double>(xs.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, xs.size() - 1);
    double f = h - std::floor(h);
    return xs[lo] + f * (xs[hi] - xs[lo]);
}

}  // namespace detail

// 75% quantile of the standard SaS(alpha, 1) law (table interpolation).
inline double sas_q75(double alpha) { return detail::table_lookup(alpha, true); }

// McCulloch-style quantile estimator of the stability index. The statistic
// nu = (q95 - q05)/(q75 - q25) is scale-free and strictly decreasing in alpha;
// it is inverted against a table of exact standard-law quantiles.
inline double estimate_alpha(const std::vector<double>& samples) {
    if (samples.size() < 1000) {
        throw insufficient_data_error("estimate_alpha: need >= 1000 samples, got " +
                                      std::to_string(samples.size()));
    }
    std::vector<double> xs(samples);
    std::sort(xs.begin(), xs.end());
    double q05 = detail::quantile_sorted(xs, 0.05);
    double q25 = detail::quantile_sorted(xs, 0.25);
    double q75 = detail::quantile_sorted(xs, 0.75);
    double q95 = detail::quantile_sorted(xs, 0.95);
    double iqr = q75 - q25;
    if (!(iqr > 0.0)) throw degenerate_data_error("estimate_alpha: interquartile range is zero");
    double nu = (q95 - q05) / iqr;

    const auto& t = kStableQuantileTable;
    if (nu <= t.back().nu) return 2.0;
    if (nu >= t.front().nu) return t.front().alpha + 1e-6;
    // nu is decreasing in alpha; invert by piecewise-linear interpolation in log nu.
    std::size_t i = 1;
    while (i + 1 < t.size() && t[i].nu > nu) ++i;
    const auto& lo = t[i - 1];  // larger nu, smaller alpha
    const auto& hi = t[i];
    double f = (std::log(lo.nu) - std::log(nu)) / (std::log(lo.nu) - std::log(hi.nu));
    double a = lo.alpha + f * (hi.alpha - lo.alpha);
    return std::clamp(a, t.front().alpha + 1e-6, 2.0);
}

// Scale fit by interquartile-range matching (moments are infinite for alpha < 2).
inline double estimate_scale(const std::vector<double>& samples, double alpha) {
    std::vector<double> xs(samples);
    std::sort(xs.begin(), xs.end());
    double iqr = detail::quantile_sorted(xs, 0.75) - detail::quantile_sorted(xs, 0.25);
    if (!(iqr > 0.0)) throw degenerate_data_error("estimate_scale: interquartile range is zero");
    return iqr / (2.0 * sas_q75(alpha));
}

struct FitReport {
    double sse_gaussian = 0.0;
    double sse_sas_fixed_alpha = 0.0;
    double sse_sas_free_alpha = 0.0;
    double alpha_hat = 0.0;
    std::vector<double> bin_edges;  // finite edges; first/last bins are overflow to +-inf
    std::vector<double> bin_mass;   // empirical mass per bin, sums to 1
};

namespace detail {

inline double sse_against(const std::vector<double>& emp, const std::vector<double>& model) {
    double s = 0.0;
    for (std::size_t i = 0; i < emp.size(); ++i) {
        double d = emp[i] - model[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

// Histogram fit comparison: Gaussian by moment matching vs SaS with a fixed
// caller-supplied alpha vs SaS with estimated alpha. Binning is
// Freedman-Diaconis on the central 99.5% with two overflow bins.
inline FitReport fit_report(const std::vector<double>& samples, double fixed_alpha) {
    if (samples.size() < 1000) {
        throw insufficient_data_error("fit_report: need >= 1000 samples");
    }
    StableLaw{fixed_alpha, 1.0}.validate();
    std::vector<double> xs(samples);
    std::sort(xs.begin(), xs.end());
    auto n = static_cast<double>(xs.size());

    double lo = detail::quantile_sorted(xs, 0.0025);
    double hi = detail::quantile_sorted(xs, 0.9975);
    double iqr = detail::quantile_sorted(xs, 0.75) - detail::quantile_sorted(xs, 0.25);
    if (!(iqr > 0.0) || !(hi > lo)) {
        throw degenerate_data_error("fit_report: degenerate sample spread");
    }
    double width = 2.0 * iqr / std::cbrt(n);
    auto n_bins = static_cast<std::size_t>(std::clamp(std::ceil((hi - lo) / width), 4.0, 400.0));

    FitReport rep;
    rep.bin_edges.resize(n_bins + 1);
    for (std::size_t k = 0; k <= n_bins; ++k) {
        rep.bin_edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_bins);
    }
    // bins: [-inf, e0), [e0, e1), ..., [e_{n-1}, e_n), [e_n, inf)
    rep.bin_mass.assign(n_bins + 2, 0.0);
    for (double x : xs) {
        auto it = std::upper_bound(rep.bin_edges.begin(), rep.bin_edges.end(), x);
        rep.bin_mass[static_cast<std::size_t>(it - rep.bin_edges.begin())] += 1.0 / n;
    }

    auto model_mass = [&](auto cdf_at_edge) {
        std::vector<double> m(n_bins + 2);
        double prev = 0.0;
        for (std::size_t k = 0; k <= n_bins; ++k) {
            double c = cdf_at_edge(k);
            m[k] = c - prev;
            prev = c;
        }
        m[n_bins + 1] = 1.0 - prev;
        return m;
    };

    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;
    double sd = std::sqrt(std::max(var, 1e-300));
    auto gauss = model_mass(
        [&](std::size_t k) { return normal_cdf((rep.bin_edges[k] - mean) / sd); });

    double median = detail::quantile_sorted(xs, 0.5);
    auto sas_mass = [&](double alpha) {
        double sigma = iqr / (2.0 * sas_q75(alpha));
        std::vector<double> z(rep.bin_edges.size());
        for (std::size_t k = 0; k < z.size(); ++k) z[k] = (rep.bin_edges[k] - median) / sigma;
        auto cdf = sas_cdf_standard_batch(alpha, z);
        return model_mass([&](std::size_t k) { return cdf[k]; });
    };

    rep.alpha_hat = estimate_alpha(samples);
    rep.sse_gaussian = detail::sse_against(rep.bin_mass, gauss);
    rep.sse_sas_free_alpha = detail::sse_against(rep.bin_mass, sas_mass(rep.alpha_hat));
    rep.sse_sas_fixed_alpha = detail::sse_against(rep.bin_mass, sas_mass(fixed_alpha));
    return rep;
}

}  // namespace levylab
