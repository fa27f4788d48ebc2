#pragma once

// Objective functions with gradients (and Hessians for small instances), the
// box escape domain with its exit tubes, and the per-trial exit record.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace levylab {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

struct Potential {
    int dim = 0;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;  // may be null
    Vec minimizer;                           // empty when not analytic

    void check(const Vec& w) const {
        if (static_cast<int>(w.size()) != dim) {
            throw std::invalid_argument("Potential: point has dimension " +
                                        std::to_string(w.size()) + ", expected " +
                                        std::to_string(dim));
        }
    }
};

// U(w) = 1/2 w^T diag(h) w
inline Potential make_quadratic(Vec h_diag) {
    auto n = static_cast<int>(h_diag.size());
    Potential p;
    p.dim = n;
    p.minimizer.assign(h_diag.size(), 0.0);
    auto h = std::make_shared<Vec>(std::move(h_diag));
    p.value = [h](const Vec& w) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += 0.5 * (*h)[i] * w[i] * w[i];
        return s;
    };
    p.gradient = [h](const Vec& w) {
        Vec g(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) g[i] = (*h)[i] * w[i];
        return g;
    };
    p.hessian = [h, n](const Vec&) {
        Mat m(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n), 0.0));
        for (std::size_t i = 0; i < m.size(); ++i) m[i][i] = (*h)[i];
        return m;
    };
    return p;
}

// U(w) = (w^2 - 1)^2 / 4, minima at +-1
inline Potential make_double_well() {
    Potential p;
    p.dim = 1;
    p.minimizer = {1.0};
    p.value = [](const Vec& w) {
        double q = w[0] * w[0] - 1.0;
        return 0.25 * q * q;
    };
    p.gradient = [](const Vec& w) { return Vec{w[0] * (w[0] * w[0] - 1.0)}; };
    p.hessian = [](const Vec& w) { return Mat{{3.0 * w[0] * w[0] - 1.0}}; };
    return p;
}

// 2D Ackley with the canonical constants a=20, b=0.2, c=2*pi; global minimum
// at the origin (where the radial term has a cone, gradient defined as 0).
inline Potential make_ackley2d() {
    const double a = 20.0, b = 0.2, c = 2.0 * std::numbers::pi;
    Potential p;
    p.dim = 2;
    p.minimizer = {0.0, 0.0};
    p.value = [=](const Vec& w) {
        double r2 = (w[0] * w[0] + w[1] * w[1]) / 2.0;
        double cs = (std::cos(c * w[0]) + std::cos(c * w[1])) / 2.0;
        return -a * std::exp(-b * std::sqrt(r2)) - std::exp(cs) + a + std::numbers::e;
    };
    p.gradient = [=](const Vec& w) {
        double r = std::sqrt((w[0] * w[0] + w[1] * w[1]) / 2.0);
        double cs = (std::cos(c * w[0]) + std::cos(c * w[1])) / 2.0;
        Vec g(2);
        for (int i = 0; i < 2; ++i) {
            double radial = r > 1e-12 ? a * b * std::exp(-b * r) * w[static_cast<std::size_t>(i)] / (2.0 * r) : 0.0;
            double osc = std::exp(cs) * c * std::sin(c * w[static_cast<std::size_t>(i)]) / 2.0;
            g[static_cast<std::size_t>(i)] = radial + osc;
        }
        return g;
    };
    return p;
}

struct Domain {
    Vec center;   // W*
    Vec d_plus;   // per-coordinate boundary distance, > 0 (may be +inf)
    Vec d_minus;  // per-coordinate boundary distance, < 0 (may be -inf)
    double delta = 0.05;  // tube half-width for exit classification

    void validate() const {
        if (center.empty() || center.size() != d_plus.size() || center.size() != d_minus.size()) {
            throw std::invalid_argument("Domain: inconsistent dimensions");
        }
        double min_dp = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < center.size(); ++i) {
            if (!(d_plus[i] > 0.0) || !(d_minus[i] < 0.0)) {
                throw std::invalid_argument("Domain: need d_minus < 0 < d_plus");
            }
            min_dp = std::min(min_dp, d_plus[i]);
        }
        if (!(delta > 0.0) || !(delta < min_dp)) {
            throw std::invalid_argument("Domain: delta must be in (0, min d_plus)");
        }
    }

    // signed overshoot beyond the box along coordinate i (0 when inside);
    // second member is +1/-1 for the side
    std::pair<double, int> overshoot(const Vec& w, std::size_t i) const {
        double up = w[i] - (center[i] + d_plus[i]);
        double dn = (center[i] + d_minus[i]) - w[i];
        if (up > 0.0) return {up, +1};
        if (dn > 0.0) return {dn, -1};
        return {0.0, 0};
    }

    bool inside(const Vec& w) const {
        for (std::size_t i = 0; i < center.size(); ++i) {
            if (overshoot(w, i).first > 0.0) return false;
        }
        return true;
    }
};

struct EscapeRecord {
    double exit_time = 0.0;       // continuous time sigma
    long long exit_iteration = 0; // integer step (or jump count for two-phase)
    int exit_coord = -1;          // coordinate index, -1 when censored
    int exit_side = 0;            // +1 / -1
    bool censored = false;
};

}  // namespace levylab
