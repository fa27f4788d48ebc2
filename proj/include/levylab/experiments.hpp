#pragma once

// Experiment protocols: learning-rate sweep of neural escape times, survival
// curves (neural and SDE), Ackley exit-axis selection with per-axis stable
// noise, and the learning-rate-decay noise-amplitude probe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "levylab/dynamics.hpp"
#include "levylab/errors.hpp"
#include "levylab/sgn.hpp"
#include "levylab/theory.hpp"

namespace levylab {

struct EscapeCell {
    double lr = 0.0;
    std::vector<long long> escape_iters;  // per escape-phase seed, escaped runs only
    int n_censored = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct EscapeSweep {
    std::vector<EscapeCell> cells;
    double min_loss = 0.0;
    double loss_delta = 0.0;  // absolute threshold actually used
    std::vector<long long> train_iterations;  // per lr
};

// Run SGD at the small escape batch from the checkpoint until the full-data
// loss exceeds min_loss + delta; returns the crossing iteration or -1 when
// censored at max_iters.
inline long long run_escape_phase(const MlpSpec& spec, const Vec& checkpoint, const Dataset& ds,
                                  double lr, std::size_t batch, double threshold,
                                  std::uint64_t seed, long long max_iters) {
    Mlp net(spec);
    net.unflatten(checkpoint);
    Rng g = make_rng(seed);
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t cursor = ds.size();
    std::vector<std::size_t> mb;
    for (long long k = 1; k <= max_iters; ++k) {
        if (cursor + batch > ds.size()) {
            std::shuffle(perm.begin(), perm.end(), g);
            cursor = 0;
        }
        mb.assign(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                  perm.begin() + static_cast<std::ptrdiff_t>(cursor + batch));
        cursor += batch;
        Vec grad = subset_gradient(net, ds, mb);
        Vec w = net.flatten();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
        net.unflatten(w);
        double loss = full_loss(net, ds);
        if (!std::isfinite(loss) || loss > threshold) return k;
    }
    return -1;
}

// Per learning rate: train to the plateau minimum, then repeatedly attempt
// escape at the smaller batch. loss_delta <= 0 selects the relative default
// 0.1 x (initial loss - minimum loss).
inline EscapeSweep escape_experiment(const MlpSpec& spec, const Dataset& ds,
                                     const std::vector<double>& lrs, std::size_t train_batch,
                                     std::size_t escape_batch, int n_seeds, double loss_delta,
                                     std::uint64_t root_seed, const StopRule& stop = {},
                                     long long escape_max_iters = 200000) {
    if (escape_batch >= train_batch) {
        throw std::invalid_argument("escape_experiment: escape_batch must be < train_batch");
    }
    if (n_seeds < 10) throw std::invalid_argument("escape_experiment: need >= 10 seeds");
    EscapeSweep sweep;
    for (std::size_t li = 0; li < lrs.size(); ++li) {
        auto train = train_sgd(spec, ds, lrs[li], train_batch, SchedulerSpec::constant(),
                               derive_seed(root_seed, 1000 + li, 0), stop);
        sweep.train_iterations.push_back(train.iterations);
        EscapeCell cell;
        cell.lr = lrs[li];
        if (train.diverged || !train.converged) {
            cell.n_censored = n_seeds;  // per-lr failure entry, not an abort
            sweep.cells.push_back(std::move(cell));
            continue;
        }
        double min_loss = train.loss_trace.back();
        // negative delta selects the relative default; 0 is the degenerate
        // any-fluctuation threshold
        double delta = loss_delta >= 0.0
                           ? loss_delta
                           : 0.1 * (train.loss_trace.front() - min_loss);
        sweep.min_loss = min_loss;
        sweep.loss_delta = delta;
        for (int sidx = 0; sidx < n_seeds; ++sidx) {
            long long it = run_escape_phase(spec, train.weights, ds, lrs[li], escape_batch,
                                            min_loss + delta,
                                            derive_seed(root_seed, 2000 + li,
                                                        static_cast<std::uint64_t>(sidx)),
                                            escape_max_iters);
            if (it < 0) {
                cell.n_censored++;
            } else {
                cell.escape_iters.push_back(it);
            }
        }
        if (!cell.escape_iters.empty()) {
            double s = 0.0, s2 = 0.0;
            for (long long v : cell.escape_iters) {
                s += static_cast<double>(v);
                s2 += static_cast<double>(v) * static_cast<double>(v);
            }
            auto n = static_cast<double>(cell.escape_iters.size());
            cell.mean = s / n;
            cell.stddev = n > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1.0))) : 0.0;
        }
        sweep.cells.push_back(std::move(cell));
    }
    return sweep;
}

// best multiplicative constant in log space: min_c sum (ln data - ln(c model))^2
struct MultiplierFit {
    double log_c = 0.0;
    double residual = 0.0;  // sum of squared log residuals
};

inline MultiplierFit fit_log_multiplier(const std::vector<double>& model,
                                        const std::vector<double>& data) {
    if (model.size() != data.size() || model.empty()) {
        throw std::invalid_argument("fit_log_multiplier: size mismatch or empty");
    }
    MultiplierFit fit;
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (!(model[i] > 0.0) || !(data[i] > 0.0)) {
            throw std::invalid_argument("fit_log_multiplier: values must be positive");
        }
        fit.log_c += std::log(data[i]) - std::log(model[i]);
    }
    fit.log_c /= static_cast<double>(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        double r = std::log(data[i]) - std::log(model[i]) - fit.log_c;
        fit.residual += r * r;
    }
    return fit;
}

struct TheoryFitComparison {
    double levy_residual = 0.0;
    double gauss_residual = 0.0;
    double levy_log_c = 0.0;  // fitted log multiplicative constant of the heavy-tail model
    double gauss_c = 0.0;     // fitted exponent constant c of exp(c / lr)
};

// One-free-constant fits of the measured mean escape iterations: the
// heavy-tail bound with noise scale proportional to the learning rate gets a
// free multiplicative constant, while the Gaussian-diffusion alternative is
// exp(c / lr) with the free constant c in the exponent. Residuals are sums of
// squared log deviations in both cases.
inline TheoryFitComparison escape_theory_fit(const EscapeSweep& sweep, double alpha) {
    std::vector<double> lrs, data;
    for (const auto& c : sweep.cells) {
        if (c.escape_iters.empty()) continue;
        lrs.push_back(c.lr);
        data.push_back(c.mean);
    }
    if (lrs.size() < 2) throw insufficient_data_error("escape_theory_fit: need >= 2 lr cells");
    std::vector<double> levy_model;
    for (double lr : lrs) {
        double eps = std::min(0.999, lr);  // noise scale tracks the learning rate
        auto p = NoiseProfile::uniform(2, alpha, 1.0, eps, 1.0, -1.0, 0.5);
        levy_model.push_back(mean_escape_constant(p).value);
    }
    auto lf = fit_log_multiplier(levy_model, data);

    // ln T = c / lr through the origin in (1/lr, ln T)
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lrs.size(); ++i) {
        double x = 1.0 / lrs[i];
        sxy += x * std::log(data[i]);
        sxx += x * x;
    }
    double c_hat = sxy / sxx;
    double gauss_res = 0.0;
    for (std::size_t i = 0; i < lrs.size(); ++i) {
        double r = std::log(data[i]) - c_hat / lrs[i];
        gauss_res += r * r;
    }
    return {lf.residual, gauss_res, lf.log_c, c_hat};
}

struct SurvivalFit {
    std::vector<double> u;       // exit times/iterations, sorted
    std::vector<double> s;       // empirical survival at u
    double rate = 0.0;           // -slope of ln S vs u
    double r2 = 0.0;
    int n_censored = 0;
    std::size_t n_runs = 0;
};

// empirical survival curve with a least-squares line through ln S(u)
inline SurvivalFit survival_from_exit_times(std::vector<double> times, int n_censored) {
    SurvivalFit fit;
    fit.n_censored = n_censored;
    fit.n_runs = times.size() + static_cast<std::size_t>(n_censored);
    if (times.size() < 2 || times.size() < static_cast<std::size_t>(n_censored)) {
        throw insufficient_data_error(
            "survival_from_exit_times: over half the runs censored or too few escapes");
    }
    std::sort(times.begin(), times.end());
    auto n = static_cast<double>(fit.n_runs);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        double surv = 1.0 - static_cast<double>(i + 1) / n;
        if (!(surv > 0.0)) break;  // last point has ln S = -inf
        fit.u.push_back(times[i]);
        fit.s.push_back(surv);
        double x = times[i], y = std::log(surv);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++m;
    }
    if (m < 2) throw insufficient_data_error("survival_from_exit_times: too few escape points");
    auto md = static_cast<double>(m);
    double slope = (md * sxy - sx * sy) / (md * sxx - sx * sx);
    fit.rate = -slope;
    double ss_tot = syy - sy * sy / md;
    double intercept = (sy - slope * sx) / md;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double r = std::log(fit.s[i]) - (slope * fit.u[i] + intercept);
        ss_res += r * r;
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

// SDE first-exit survival on an explicit potential/domain/profile
inline SurvivalFit survival_sde(const Potential& pot, const Domain& domain,
                                const NoiseProfile& profile, const SchedulerSpec& sched,
                                int n_runs, std::uint64_t root_seed, const SdeOptions& opts = {}) {
    std::vector<double> times;
    int censored = 0;
    for (int i = 0; i < n_runs; ++i) {
        auto rec = simulate_sde(pot, domain, profile, sched,
                                derive_seed(root_seed, 3, static_cast<std::uint64_t>(i)), opts)
                       .record;
        if (rec.censored) {
            ++censored;
        } else {
            times.push_back(rec.exit_time);
        }
    }
    return survival_from_exit_times(std::move(times), censored);
}

// neural escape-time survival: repeated escape phases from one trained minimum
inline SurvivalFit survival_experiment(const MlpSpec& spec, const Dataset& ds, double lr,
                                       std::size_t train_batch, std::size_t escape_batch,
                                       int n_runs, double loss_delta, std::uint64_t root_seed,
                                       const StopRule& stop = {},
                                       long long escape_max_iters = 100000) {
    if (n_runs < 200) throw std::invalid_argument("survival_experiment: need >= 200 runs");
    auto train = train_sgd(spec, ds, lr, train_batch, SchedulerSpec::constant(),
                           derive_seed(root_seed, 10, 0), stop);
    if (train.diverged) throw numeric_error("survival_experiment: training diverged");
    double min_loss = train.loss_trace.back();
    double delta =
        loss_delta >= 0.0 ? loss_delta : 0.1 * (train.loss_trace.front() - min_loss);
    std::vector<double> times;
    int censored = 0;
    for (int i = 0; i < n_runs; ++i) {
        long long it = run_escape_phase(spec, train.weights, ds, lr, escape_batch,
                                        min_loss + delta,
                                        derive_seed(root_seed, 11, static_cast<std::uint64_t>(i)),
                                        escape_max_iters);
        if (it < 0) {
            ++censored;
        } else {
            times.push_back(static_cast<double>(it));
        }
    }
    return survival_from_exit_times(std::move(times), censored);
}

struct AckleyAxisResult {
    double p_axis1 = 0.0;  // probability the first axis (heavier tail) wins
    int n_exits = 0;
    int n_censored = 0;
};

// Noisy gradient descent on the 2D Ackley surface from the origin with
// independent per-axis SaS noise scaled by lr^(1/alpha_i); a run ends when
// |w| exceeds the radius, and the exit axis is the larger coordinate.
inline AckleyAxisResult ackley_axis_experiment(double alpha1, double delta, double lr,
                                               double radius, int n_runs, std::uint64_t root_seed,
                                               long long max_iters = 200000) {
    double alpha2 = alpha1 + delta;
    if (!(alpha1 > 0.5) || !(delta >= 0.0) || !(alpha2 <= 2.0)) {
        throw std::invalid_argument(
            "ackley_axis_experiment: need 0.5 < alpha1 <= alpha1 + delta <= 2");
    }
    if (!(lr > 0.0) || !(radius > 0.0) || n_runs < 1) {
        throw std::invalid_argument("ackley_axis_experiment: need lr > 0, radius > 0, runs >= 1");
    }
    auto pot = make_ackley2d();
    double c1 = std::pow(lr, 1.0 / alpha1);
    double c2 = std::pow(lr, 1.0 / alpha2);
    AckleyAxisResult res;
    int axis1 = 0;
    for (int run = 0; run < n_runs; ++run) {
        Rng g = make_rng(derive_seed(root_seed, 20, static_cast<std::uint64_t>(run)));
        Vec w = {0.0, 0.0};
        bool exited = false;
        for (long long k = 0; k < max_iters; ++k) {
            Vec grad = pot.gradient(w);
            w[0] += -lr * grad[0] + c1 * sample_sas_standard(alpha1, g);
            w[1] += -lr * grad[1] + c2 * sample_sas_standard(alpha2, g);
            if (w[0] * w[0] + w[1] * w[1] > radius * radius) {
                ++res.n_exits;
                if (std::fabs(w[0]) >= std::fabs(w[1])) ++axis1;
                exited = true;
                break;
            }
        }
        if (!exited) ++res.n_censored;
    }
    if (res.n_exits == 0) {
        throw insufficient_data_error("ackley_axis_experiment: no exits within the horizon");
    }
    res.p_axis1 = static_cast<double>(axis1) / res.n_exits;
    return res;
}

struct LrDecayProbe {
    std::vector<std::size_t> param_indices;
    std::vector<double> update_noise_std_before;  // std of lr * zeta per parameter
    std::vector<double> update_noise_std_after;
    double median_ratio = 0.0;  // median over parameters of after/before
};

namespace detail {
inline double sample_std(const std::vector<double>& v) {
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
        s += x;
        s2 += x * x;
    }
    auto n = static_cast<double>(v.size());
    return std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1.0)));
}
}  // namespace detail

// Train decay_epochs epochs at lr, probe the update-step noise lr x zeta, then
// continue one epoch at lr x decay_factor (or with collect_batch_after bigger
// than collect_batch when probing batch growth instead) and probe again.
inline LrDecayProbe lr_decay_noise_probe(const MlpSpec& spec, const Dataset& ds, double lr,
                                         double decay_factor, int decay_epochs,
                                         std::size_t train_batch, std::size_t collect_batch,
                                         std::size_t n_params, std::uint64_t root_seed,
                                         std::size_t collect_batch_after = 0) {
    if (!(decay_factor > 0.0) || !(decay_factor <= 1.0)) {
        throw std::invalid_argument("lr_decay_noise_probe: decay_factor must be in (0, 1]");
    }
    if (decay_epochs < 1) throw std::invalid_argument("lr_decay_noise_probe: decay_epochs >= 1");
    if (collect_batch_after == 0) collect_batch_after = collect_batch;
    auto iters_per_epoch = static_cast<long long>(ds.size() / train_batch);
    StopRule no_stop;
    no_stop.plateau_eps = 0.0;  // run the fixed iteration budget
    no_stop.max_iters = iters_per_epoch * decay_epochs;
    auto before = train_sgd(spec, ds, lr, train_batch, SchedulerSpec::constant(),
                            derive_seed(root_seed, 30, 0), no_stop);
    if (before.diverged) throw numeric_error("lr_decay_noise_probe: training diverged");
    Mlp net(spec);
    net.unflatten(before.weights);

    LrDecayProbe probe;
    probe.param_indices.resize(n_params);
    for (std::size_t j = 0; j < n_params; ++j) {
        probe.param_indices[j] = j * net.param_count() / n_params;
    }
    auto col_before = collect_sgn(net, ds, collect_batch, probe.param_indices,
                                  derive_seed(root_seed, 31, 0));

    // one further epoch at the decayed learning rate, continuing from the
    // checkpoint (fresh shuffling stream, same weights)
    double lr2 = lr * decay_factor;
    Rng g = make_rng(derive_seed(root_seed, 32, 0));
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    std::size_t cursor = 0;
    std::vector<std::size_t> mb;
    while (cursor + train_batch <= ds.size()) {
        mb.assign(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                  perm.begin() + static_cast<std::ptrdiff_t>(cursor + train_batch));
        cursor += train_batch;
        Vec grad = subset_gradient(net, ds, mb);
        Vec w = net.flatten();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr2 * grad[i];
        net.unflatten(w);
    }
    auto col_after = collect_sgn(net, ds, collect_batch_after, probe.param_indices,
                                 derive_seed(root_seed, 33, 0));

    std::vector<double> ratios;
    for (std::size_t j = 0; j < n_params; ++j) {
        double sb = lr * detail::sample_std(col_before.samples[j].noise_values);
        double sa = lr2 * detail::sample_std(col_after.samples[j].noise_values);
        probe.update_noise_std_before.push_back(sb);
        probe.update_noise_std_after.push_back(sa);
        if (sb > 0.0) ratios.push_back(sa / sb);
    }
    if (ratios.empty()) throw degenerate_data_error("lr_decay_noise_probe: zero noise throughout");
    std::sort(ratios.begin(), ratios.end());
    probe.median_ratio = ratios[ratios.size() / 2];
    return probe;
}

}  // namespace levylab
