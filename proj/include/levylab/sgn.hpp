#pragma once

// SGD training with the plateau stopping rule, per-parameter stochastic
// gradient noise collection (zeta = full-data gradient minus minibatch
// gradient), per-parameter tail-index variability, and the empirical noise
// covariance row sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "levylab/dataset.hpp"
#include "levylab/errors.hpp"
#include "levylab/mlp.hpp"
#include "levylab/rng.hpp"
#include "levylab/scheduler.hpp"
#include "levylab/stable.hpp"

namespace levylab {

struct StopRule {
    double plateau_eps = 1e-5;   // full-data loss band width
    int plateau_iters = 100;     // iterations the band must hold
    long long max_iters = 20000;
};

struct TrainResult {
    Vec weights;                  // checkpoint (flat)
    std::vector<double> loss_trace;  // full-data loss per iteration (index 0 = initial)
    long long iterations = 0;
    bool converged = false;  // plateau rule fired
    bool diverged = false;   // loss went non-finite; weights = last stable point
};

inline double full_loss(const Mlp& net, const Dataset& ds) {
    double s = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) s += net.sample_loss(ds.features[i], ds.labels[i]);
    return s / static_cast<double>(ds.size());
}

// mean gradient over the index subset [first, last) of perm (full data when
// perm covers everything)
inline Vec subset_gradient(const Mlp& net, const Dataset& ds, const std::vector<std::size_t>& idx) {
    Vec g(net.param_count(), 0.0);
    for (std::size_t i : idx) net.accumulate_gradient(ds.features[i], ds.labels[i], g);
    double inv = 1.0 / static_cast<double>(idx.size());
    for (auto& v : g) v *= inv;
    return g;
}

// Plain SGD (no momentum, no weight decay) with epoch-wise reshuffled disjoint
// minibatches; the scheduler modulates the learning rate by iteration count.
// Stops when the full-data loss stays inside a plateau_eps band for
// plateau_iters consecutive iterations.
inline TrainResult train_sgd(const MlpSpec& spec, const Dataset& ds, double lr, std::size_t batch,
                             const SchedulerSpec& sched, std::uint64_t seed,
                             const StopRule& stop = {}) {
    ds.validate();
    sched.validate();
    if (!(lr >= 0.0)) throw std::invalid_argument("train_sgd: lr must be >= 0");
    if (batch < 1 || batch > ds.size()) {
        throw std::invalid_argument("train_sgd: batch must be in [1, D]");
    }
    Mlp net(spec);
    Rng g = make_rng(seed);
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), 0);

    TrainResult res;
    res.weights = net.flatten();
    res.loss_trace.push_back(full_loss(net, ds));
    std::vector<double> window;  // recent full-data losses for the plateau rule
    window.push_back(res.loss_trace.back());

    std::size_t cursor = ds.size();  // force a shuffle on the first iteration
    std::vector<std::size_t> mb;
    for (long long k = 1; k <= stop.max_iters; ++k) {
        if (cursor + batch > ds.size()) {
            std::shuffle(perm.begin(), perm.end(), g);
            cursor = 0;
        }
        mb.assign(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                  perm.begin() + static_cast<std::ptrdiff_t>(cursor + batch));
        cursor += batch;
        Vec grad = subset_gradient(net, ds, mb);
        double step = lr * scheduler_value(sched, static_cast<double>(k));
        Vec w = net.flatten();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * grad[i];
        net.unflatten(w);
        double loss = full_loss(net, ds);
        if (!std::isfinite(loss)) {
            res.diverged = true;  // res.weights still holds the last stable point
            res.iterations = k;
            return res;
        }
        res.weights = std::move(w);
        res.loss_trace.push_back(loss);
        res.iterations = k;
        window.push_back(loss);
        if (static_cast<int>(window.size()) > stop.plateau_iters + 1) {
            window.erase(window.begin());
        }
        if (static_cast<int>(window.size()) == stop.plateau_iters + 1) {
            auto [lo, hi] = std::minmax_element(window.begin(), window.end());
            if (*hi - *lo <= stop.plateau_eps) {
                res.converged = true;
                break;
            }
        }
    }
    return res;
}

struct SgnSample {
    std::size_t param_index = 0;
    std::vector<double> noise_values;  // one zeta per full-size minibatch
};

struct SgnCollection {
    std::vector<SgnSample> samples;
    double weighted_mean_residual = 0.0;  // max over params of |weighted mean zeta| (relative)
};

// One epoch sweep of disjoint seed-shuffled minibatches at fixed weights:
// zeta = full-data gradient - minibatch gradient per selected parameter. The
// remainder block keeps its proportional weight in the zero-mean identity but
// contributes no sample (unequal size would distort the distribution).
inline SgnCollection collect_sgn(const Mlp& net, const Dataset& ds, std::size_t batch,
                                 const std::vector<std::size_t>& param_indices,
                                 std::uint64_t seed) {
    ds.validate();
    if (batch < 1 || batch > ds.size()) {
        throw std::invalid_argument("collect_sgn: batch must be in [1, D]");
    }
    for (std::size_t p : param_indices) {
        if (p >= net.param_count()) {
            throw std::invalid_argument("collect_sgn: parameter index out of range");
        }
    }
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    Vec full = subset_gradient(net, ds, all);

    Rng g = make_rng(seed);
    std::shuffle(all.begin(), all.end(), g);

    SgnCollection col;
    col.samples.resize(param_indices.size());
    for (std::size_t j = 0; j < param_indices.size(); ++j) {
        col.samples[j].param_index = param_indices[j];
    }
    Vec weighted_sum(param_indices.size(), 0.0);
    std::size_t cursor = 0;
    std::vector<std::size_t> mb;
    while (cursor < ds.size()) {
        std::size_t take = std::min(batch, ds.size() - cursor);
        mb.assign(all.begin() + static_cast<std::ptrdiff_t>(cursor),
                  all.begin() + static_cast<std::ptrdiff_t>(cursor + take));
        cursor += take;
        // accumulate in index order so batch == D reproduces the full-data
        // gradient bit-for-bit (zeta exactly zero)
        std::sort(mb.begin(), mb.end());
        Vec grad = subset_gradient(net, ds, mb);
        double weight = static_cast<double>(take) / static_cast<double>(ds.size());
        for (std::size_t j = 0; j < param_indices.size(); ++j) {
            double zeta = full[param_indices[j]] - grad[param_indices[j]];
            weighted_sum[j] += weight * zeta;
            if (take == batch) col.samples[j].noise_values.push_back(zeta);
        }
    }
    for (std::size_t j = 0; j < param_indices.size(); ++j) {
        double scale = std::max(1e-12, std::fabs(full[param_indices[j]]));
        col.weighted_mean_residual =
            std::max(col.weighted_mean_residual, std::fabs(weighted_sum[j]) / scale);
    }
    return col;
}

struct AlphaVariability {
    std::vector<std::size_t> param_indices;
    std::vector<double> alpha_hat;
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

inline AlphaVariability summarize_alpha(std::vector<std::size_t> idx, std::vector<double> hats) {
    AlphaVariability v;
    v.param_indices = std::move(idx);
    v.alpha_hat = std::move(hats);
    if (v.alpha_hat.empty()) throw insufficient_data_error("summarize_alpha: no estimates");
    double s = 0.0, s2 = 0.0;
    v.min = v.alpha_hat[0];
    v.max = v.alpha_hat[0];
    for (double a : v.alpha_hat) {
        s += a;
        s2 += a * a;
        v.min = std::min(v.min, a);
        v.max = std::max(v.max, a);
    }
    auto n = static_cast<double>(v.alpha_hat.size());
    v.mean = s / n;
    v.stddev = n > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1.0))) : 0.0;
    return v;
}

// evenly spread parameter sample (deterministic); per-parameter alpha_hat via
// the quantile estimator on one collection sweep
inline AlphaVariability alpha_variability(const Mlp& net, const Dataset& ds, std::size_t batch,
                                          std::size_t n_params, std::uint64_t seed) {
    if (n_params < 1 || n_params > net.param_count()) {
        throw std::invalid_argument("alpha_variability: n_params must be in [1, param_count]");
    }
    std::vector<std::size_t> idx(n_params);
    for (std::size_t j = 0; j < n_params; ++j) {
        idx[j] = j * net.param_count() / n_params;
    }
    auto col = collect_sgn(net, ds, batch, idx, seed);
    std::vector<double> hats;
    hats.reserve(n_params);
    for (const auto& s : col.samples) hats.push_back(estimate_alpha(s.noise_values));
    return summarize_alpha(std::move(idx), std::move(hats));
}

// Row sums of the minibatch noise covariance
//   Sigma = (1/B) [ (1/D) sum_j grad^(j) grad^(j)T - grad gradT ]
// evaluated at the checkpoint; full rows only for networks up to 500
// parameters.
inline Vec empirical_cov_rowsum_all(const Mlp& net, const Dataset& ds, double batch) {
    ds.validate();
    if (!(batch >= 1.0)) throw std::invalid_argument("empirical_cov_rowsum: batch must be >= 1");
    auto n = net.param_count();
    if (n > 500) {
        throw capacity_error("empirical_cov_rowsum: full rows limited to 500 parameters");
    }
    auto D = ds.size();
    Mat grads(D);
    for (std::size_t j = 0; j < D; ++j) {
        Vec gj(n, 0.0);
        net.accumulate_gradient(ds.features[j], ds.labels[j], gj);
        grads[j] = std::move(gj);
    }
    Vec mean(n, 0.0);
    for (const auto& gj : grads) {
        for (std::size_t i = 0; i < n; ++i) mean[i] += gj[i];
    }
    for (auto& v : mean) v /= static_cast<double>(D);
    Vec rows(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        double s = 0.0;
        for (std::size_t j2 = 0; j2 < n; ++j2) {
            double u = 0.0;
            for (const auto& gj : grads) u += gj[l] * gj[j2];
            u /= static_cast<double>(D);
            s += u - mean[l] * mean[j2];
        }
        rows[l] = s / batch;
    }
    return rows;
}

inline double empirical_cov_rowsum(const Mlp& net, const Dataset& ds, double batch,
                                   std::size_t l) {
    auto rows = empirical_cov_rowsum_all(net, ds, batch);
    if (l >= rows.size()) throw std::invalid_argument("empirical_cov_rowsum: index out of range");
    return rows[l];
}

}  // namespace levylab
