#pragma once

// NoiseProfile: the per-parameter (alpha, row-sum noise scale, eps, boundary
// distances) bundle consumed by every closed-form evaluator and by the SDE
// simulators, with the derived network-level aggregates cached at build time.

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace levylab {

struct NoiseProfile {
    // per-parameter inputs, index l = 0..N-1
    std::vector<double> alpha;       // stability index in (0.5, 2]
    std::vector<double> lambda_row;  // row sum of the noise covariance, >= 0
    std::vector<double> eps;         // noise scale in (0, 1)
    std::vector<double> d_plus;      // boundary distance, > 0
    std::vector<double> d_minus;     // boundary distance, < 0
    double rho = 0.5;                // truncation exponent in (0, 1)

    // derived per-parameter quantities
    std::vector<double> phi;       // (-d_minus)^(-alpha) + d_plus^(-alpha)
    std::vector<double> m_bar;     // lambda^alpha eps^alpha / alpha
    std::vector<double> beta_bar;  // 2 eps^(rho alpha) / alpha
    std::vector<double> A;         // A_{l,nu}

    // network-level aggregates; the "nu" quantities are evaluated at the mean
    // stability index with mean lambda/eps/boundaries
    double beta_S = 0.0;
    double alpha_nu = 0.0;
    double lambda_nu = 0.0, eps_nu = 0.0;
    double phi_nu = 0.0, m_nu = 0.0, beta_nu = 0.0;

    std::vector<std::string> regime_flags;

    std::size_t size() const { return alpha.size(); }

    static NoiseProfile make(std::vector<double> alpha, std::vector<double> lambda_row,
                             std::vector<double> eps, std::vector<double> d_plus,
                             std::vector<double> d_minus, double rho) {
        NoiseProfile p;
        p.alpha = std::move(alpha);
        p.lambda_row = std::move(lambda_row);
        p.eps = std::move(eps);
        p.d_plus = std::move(d_plus);
        p.d_minus = std::move(d_minus);
        p.rho = rho;
        p.finalize();
        return p;
    }

    // uniform profile: every coordinate shares the same parameters
    static NoiseProfile uniform(std::size_t n, double alpha, double lambda_row, double eps,
                                double d_plus, double d_minus, double rho) {
        return make(std::vector<double>(n, alpha), std::vector<double>(n, lambda_row),
                    std::vector<double>(n, eps), std::vector<double>(n, d_plus),
                    std::vector<double>(n, d_minus), rho);
    }

    void finalize() {
        auto n = alpha.size();
        if (n == 0) throw std::invalid_argument("NoiseProfile: empty profile");
        for (auto* v : {&lambda_row, &eps, &d_plus, &d_minus}) {
            if (v->size() != n) {
                throw std::invalid_argument("NoiseProfile: per-parameter arrays differ in length");
            }
        }
        if (!(rho > 0.0) || !(rho < 1.0)) {
            throw std::invalid_argument("NoiseProfile: rho must be in (0, 1)");
        }
        for (std::size_t l = 0; l < n; ++l) {
            if (!(alpha[l] > 0.5) || !(alpha[l] <= 2.0)) {
                throw std::invalid_argument("NoiseProfile: alpha[" + std::to_string(l) +
                                            "] must be in (0.5, 2]");
            }
            if (!(lambda_row[l] >= 0.0)) {
                throw std::invalid_argument("NoiseProfile: lambda_row must be >= 0");
            }
            if (!(eps[l] > 0.0) || !(eps[l] < 1.0)) {
                throw std::invalid_argument("NoiseProfile: eps must be in (0, 1)");
            }
            if (!(d_plus[l] > 0.0) || !(d_minus[l] < 0.0)) {
                throw std::invalid_argument("NoiseProfile: need d_minus < 0 < d_plus");
            }
        }

        phi.resize(n);
        m_bar.resize(n);
        beta_bar.resize(n);
        beta_S = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            phi[l] = std::pow(-d_minus[l], -alpha[l]) + std::pow(d_plus[l], -alpha[l]);
            m_bar[l] = std::pow(lambda_row[l], alpha[l]) * std::pow(eps[l], alpha[l]) / alpha[l];
            beta_bar[l] = 2.0 * std::pow(eps[l], rho * alpha[l]) / alpha[l];
            beta_S += beta_bar[l];
        }
        auto mean = [n](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
        };
        alpha_nu = mean(alpha);
        lambda_nu = mean(lambda_row);
        eps_nu = mean(eps);
        double dp_nu = mean(d_plus), dm_nu = mean(d_minus);
        phi_nu = std::pow(-dm_nu, -alpha_nu) + std::pow(dp_nu, -alpha_nu);
        m_nu = std::pow(lambda_nu, alpha_nu) * std::pow(eps_nu, alpha_nu) / alpha_nu;
        beta_nu = 2.0 * std::pow(eps_nu, rho * alpha_nu) / alpha_nu;

        A.resize(n);
        regime_flags.clear();
        double escape_factor = 1.0 - m_nu * phi_nu / beta_nu;
        if (!(escape_factor > 0.0)) {
            regime_flags.push_back("network escape factor 1 - m_nu phi_nu / beta_nu <= 0");
        }
        for (std::size_t l = 0; l < n; ++l) {
            A[l] = escape_factor * (1.0 - beta_bar[l] / beta_S);
            if (!(A[l] > 0.0) || !(A[l] < 1.0)) {
                regime_flags.push_back("A[" + std::to_string(l) + "] outside (0, 1)");
            }
        }
    }
};

}  // namespace levylab
