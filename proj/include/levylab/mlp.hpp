#pragma once

// Minimal dense MLP with manual reverse-mode gradients: ReLU hidden layers,
// softmax-cross-entropy or mean-squared-error head, He initialization. Small
// enough to audit; sized for desk-scale stochastic-gradient-noise studies.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "levylab/errors.hpp"
#include "levylab/potential.hpp"
#include "levylab/rng.hpp"

namespace levylab {

enum class LossKind { cross_entropy, mse };

struct MlpSpec {
    std::vector<int> layer_sizes;  // [d_in, hidden..., d_out]
    LossKind loss = LossKind::cross_entropy;
    std::uint64_t init_seed = 1;

    void validate() const {
        if (layer_sizes.size() < 2) {
            throw std::invalid_argument("MlpSpec: need at least input and output layers");
        }
        long long params = 0;
        for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
            if (layer_sizes[i] < 1 || layer_sizes[i + 1] < 1) {
                throw std::invalid_argument("MlpSpec: layer sizes must be >= 1");
            }
            params += static_cast<long long>(layer_sizes[i]) * layer_sizes[i + 1] +
                      layer_sizes[i + 1];
        }
        if (params > 100000) {
            throw capacity_error("MlpSpec: parameter count " + std::to_string(params) +
                                 " exceeds the 1e5 desk-scale cap");
        }
    }
};

class Mlp {
  public:
    explicit Mlp(const MlpSpec& spec) : spec_(spec) {
        spec.validate();
        Rng g = make_rng(spec.init_seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        auto L = spec.layer_sizes.size() - 1;
        w_.resize(L);
        b_.resize(L);
        for (std::size_t k = 0; k < L; ++k) {
            int fan_in = spec.layer_sizes[k];
            int fan_out = spec.layer_sizes[k + 1];
            double sd = std::sqrt(2.0 / fan_in);  // He init for ReLU stacks
            w_[k].assign(static_cast<std::size_t>(fan_out) * fan_in, 0.0);
            for (auto& x : w_[k]) x = sd * nd(g);
            b_[k].assign(static_cast<std::size_t>(fan_out), 0.0);
        }
    }

    const MlpSpec& spec() const { return spec_; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t k = 0; k < w_.size(); ++k) n += w_[k].size() + b_[k].size();
        return n;
    }

    double get_param(std::size_t idx) const {
        auto [k, off, is_bias] = locate(idx);
        return is_bias ? b_[k][off] : w_[k][off];
    }
    void set_param(std::size_t idx, double v) {
        auto [k, off, is_bias] = locate(idx);
        (is_bias ? b_[k][off] : w_[k][off]) = v;
    }

    Vec flatten() const {
        Vec out;
        out.reserve(param_count());
        for (std::size_t k = 0; k < w_.size(); ++k) {
            out.insert(out.end(), w_[k].begin(), w_[k].end());
            out.insert(out.end(), b_[k].begin(), b_[k].end());
        }
        return out;
    }
    void unflatten(const Vec& flat) {
        if (flat.size() != param_count()) {
            throw std::invalid_argument("Mlp::unflatten: wrong parameter vector length");
        }
        std::size_t p = 0;
        for (std::size_t k = 0; k < w_.size(); ++k) {
            for (auto& x : w_[k]) x = flat[p++];
            for (auto& x : b_[k]) x = flat[p++];
        }
    }

    // forward pass for one sample; returns the network output (pre-softmax
    // logits for cross-entropy)
    Vec forward(const Vec& x) const {
        Vec a = x;
        for (std::size_t k = 0; k < w_.size(); ++k) {
            a = affine(k, a);
            if (k + 1 < w_.size()) {
                for (auto& v : a) v = v > 0.0 ? v : 0.0;
            }
        }
        return a;
    }

    // per-sample loss; label is the class index for cross-entropy, the target
    // value (broadcast over outputs of size 1) for MSE
    double sample_loss(const Vec& x, double label) const {
        Vec out = forward(x);
        return loss_from_output(out, label);
    }

    // accumulate d(loss)/d(params) for one sample into grad (flat layout)
    void accumulate_gradient(const Vec& x, double label, Vec& grad) const {
        auto L = w_.size();
        std::vector<Vec> acts(L + 1);  // post-activation per layer
        acts[0] = x;
        for (std::size_t k = 0; k < L; ++k) {
            acts[k + 1] = affine(k, acts[k]);
            if (k + 1 < L) {
                for (auto& v : acts[k + 1]) v = v > 0.0 ? v : 0.0;
            }
        }
        Vec delta = output_delta(acts[L], label);
        for (std::size_t kk = L; kk-- > 0;) {
            std::size_t base = offset(kk);
            auto in = static_cast<std::size_t>(spec_.layer_sizes[kk]);
            auto out = static_cast<std::size_t>(spec_.layer_sizes[kk + 1]);
            for (std::size_t r = 0; r < out; ++r) {
                for (std::size_t c = 0; c < in; ++c) {
                    grad[base + r * in + c] += delta[r] * acts[kk][c];
                }
                grad[base + out * in + r] += delta[r];
            }
            if (kk == 0) break;
            Vec prev(in, 0.0);
            for (std::size_t c = 0; c < in; ++c) {
                double s = 0.0;
                for (std::size_t r = 0; r < out; ++r) s += w_[kk][r * in + c] * delta[r];
                prev[c] = acts[kk][c] > 0.0 ? s : 0.0;  // ReLU mask
            }
            delta = std::move(prev);
        }
    }

  private:
    MlpSpec spec_;
    std::vector<Vec> w_;  // row-major (out x in) per layer
    std::vector<Vec> b_;

    Vec affine(std::size_t k, const Vec& a) const {
        auto in = static_cast<std::size_t>(spec_.layer_sizes[k]);
        auto out = static_cast<std::size_t>(spec_.layer_sizes[k + 1]);
        if (a.size() != in) throw std::invalid_argument("Mlp: input dimension mismatch");
        Vec r(out);
        for (std::size_t i = 0; i < out; ++i) {
            double s = b_[k][i];
            for (std::size_t j = 0; j < in; ++j) s += w_[k][i * in + j] * a[j];
            r[i] = s;
        }
        return r;
    }

    // flat offset of layer k's weight block (biases follow the weights)
    std::size_t offset(std::size_t k) const {
        std::size_t p = 0;
        for (std::size_t i = 0; i < k; ++i) p += w_[i].size() + b_[i].size();
        return p;
    }

    std::tuple<std::size_t, std::size_t, bool> locate(std::size_t idx) const {
        for (std::size_t k = 0; k < w_.size(); ++k) {
            if (idx < w_[k].size()) return {k, idx, false};
            idx -= w_[k].size();
            if (idx < b_[k].size()) return {k, idx, true};
            idx -= b_[k].size();
        }
        throw std::out_of_range("Mlp: parameter index out of range");
    }

    double loss_from_output(const Vec& out, double label) const {
        if (spec_.loss == LossKind::mse) {
            double s = 0.0;
            for (double v : out) s += 0.5 * (v - label) * (v - label);
            return s;
        }
        auto cls = static_cast<std::size_t>(label);
        if (cls >= out.size()) {
            throw std::invalid_argument("Mlp: class label out of range");
        }
        double mx = out[0];
        for (double v : out) mx = std::max(mx, v);
        double z = 0.0;
        for (double v : out) z += std::exp(v - mx);
        return std::log(z) - (out[cls] - mx);
    }

    Vec output_delta(const Vec& out, double label) const {
        Vec d(out.size());
        if (spec_.loss == LossKind::mse) {
            for (std::size_t i = 0; i < out.size(); ++i) d[i] = out[i] - label;
            return d;
        }
        auto cls = static_cast<std::size_t>(label);
        double mx = out[0];
        for (double v : out) mx = std::max(mx, v);
        double z = 0.0;
        for (double v : out) z += std::exp(v - mx);
        for (std::size_t i = 0; i < out.size(); ++i) {
            d[i] = std::exp(out[i] - mx) / z - (i == cls ? 1.0 : 0.0);
        }
        return d;
    }
};

}  // namespace levylab
