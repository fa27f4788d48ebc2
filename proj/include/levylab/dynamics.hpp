#pragma once

// Path-level machinery: the deterministic gradient flow, the full Levy-driven
// Euler-Maruyama SDE with first-exit detection, the two-phase (relax + large
// jump) approximation, the small-jump-only process, and exit classification
// into the per-coordinate tubes.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "levylab/errors.hpp"
#include "levylab/levy.hpp"
#include "levylab/potential.hpp"
#include "levylab/profile.hpp"
#include "levylab/rng.hpp"
#include "levylab/scheduler.hpp"

namespace levylab {

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
};

// 4th-order Runge-Kutta integration of dY/dt = -grad U(Y).
inline Trajectory flow_deterministic(const Potential& pot, const Vec& w0, double t_end,
                                     double dt) {
    pot.check(w0);
    if (!(dt > 0.0) || !(t_end >= 0.0)) {
        throw std::invalid_argument("flow_deterministic: need dt > 0 and t_end >= 0");
    }
    auto n_steps = static_cast<long long>(std::ceil(t_end / dt));
    Trajectory traj;
    traj.times.reserve(static_cast<std::size_t>(n_steps) + 1);
    traj.states.reserve(static_cast<std::size_t>(n_steps) + 1);
    Vec w = w0;
    traj.times.push_back(0.0);
    traj.states.push_back(w);
    auto axpy = [](const Vec& a, double c, const Vec& b) {
        Vec r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + c * b[i];
        return r;
    };
    for (long long k = 0; k < n_steps; ++k) {
        double h = std::min(dt, t_end - static_cast<double>(k) * dt);
        Vec k1 = pot.gradient(w);
        Vec k2 = pot.gradient(axpy(w, -0.5 * h, k1));
        Vec k3 = pot.gradient(axpy(w, -0.5 * h, k2));
        Vec k4 = pot.gradient(axpy(w, -h, k3));
        double norm2 = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            norm2 += w[i] * w[i];
        }
        if (!(norm2 < 1e12)) {
            throw numeric_error("flow_deterministic: trajectory diverged; reduce dt");
        }
        traj.times.push_back(std::min(static_cast<double>(k + 1) * dt, t_end));
        traj.states.push_back(w);
    }
    return traj;
}

struct ExitClass {
    bool outside_tubes = false;
    int coord = -1;
    int side = 0;
};

// Boundary-crossing coordinate with the largest relative overshoot
// (|overshoot| / boundary distance); used to attribute simultaneous crossings.
inline std::pair<std::size_t, int> largest_overshoot(const Vec& point, const Domain& domain) {
    std::size_t best = 0;
    double best_ratio = -1.0;
    int best_side = 0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        auto [over, side] = domain.overshoot(point, i);
        if (side == 0) continue;
        double extent = side > 0 ? domain.d_plus[i] : -domain.d_minus[i];
        double ratio = std::isfinite(extent) ? over / extent : 0.0;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = i;
            best_side = side;
        }
    }
    if (best_side == 0) {
        throw contract_violation("largest_overshoot: point is inside the domain");
    }
    return {best, best_side};
}

// Attribute an exit point to the coordinate whose tube contains it: the
// boundary-crossing coordinate with the largest relative overshoot, provided
// every other crossing coordinate overshoots by at most the tube width delta.
inline ExitClass classify_exit(const Vec& point, const Domain& domain) {
    domain.validate();
    if (domain.inside(point)) {
        throw contract_violation("classify_exit: point is inside the domain");
    }
    auto [best, side] = largest_overshoot(point, domain);
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (i == best) continue;
        if (domain.overshoot(point, i).first > domain.delta) {
            return {true, -1, 0};
        }
    }
    return {false, static_cast<int>(best), side};
}

struct SdeOptions {
    double dt = 1e-2;
    double horizon = 1e5;       // continuous time units
    long long record_every = 0; // 0: do not store the trajectory
};

struct SdeResult {
    EscapeRecord record;
    Trajectory trajectory;  // populated only when record_every > 0
};

// Euler-Maruyama integration of the per-parameter Levy SDE
//   dW_l = -s_t grad U_l dt + s_t^((a-1)/a) eps_l lambda_l dL_l
// where L_l carries the bare jump measure |y|^(-1-alpha_l); increments are
// therefore SaS draws scaled by (C(alpha_l) dt)^(1/alpha_l). Exits from the
// domain box are detected after every step.
inline SdeResult simulate_sde(const Potential& pot, const Domain& domain,
                              const NoiseProfile& profile, const SchedulerSpec& sched,
                              std::uint64_t seed, const SdeOptions& opts = {}) {
    domain.validate();
    sched.validate();
    auto n = profile.size();
    pot.check(domain.center);
    if (n != domain.center.size()) {
        throw std::invalid_argument("simulate_sde: profile/domain dimension mismatch");
    }
    if (!(opts.dt > 0.0)) throw std::invalid_argument("simulate_sde: dt must be > 0");

    // per-coordinate noise prefactor for one step of length dt
    std::vector<double> base_scale(n);
    for (std::size_t l = 0; l < n; ++l) {
        double a = profile.alpha[l];
        double c = a >= 2.0 ? 1.0 : stable_levy_constant(a);
        base_scale[l] = profile.eps[l] * profile.lambda_row[l] * std::pow(c * opts.dt, 1.0 / a);
    }

    Rng g = make_rng(seed);
    Vec w = domain.center;
    SdeResult res;
    if (opts.record_every > 0) {
        res.trajectory.times.push_back(0.0);
        res.trajectory.states.push_back(w);
    }
    auto n_steps = static_cast<long long>(std::ceil(opts.horizon / opts.dt));
    for (long long k = 1; k <= n_steps; ++k) {
        double t = static_cast<double>(k) * opts.dt;
        double s = scheduler_value(sched, t);
        Vec grad = pot.gradient(w);
        bool bad = false;
        for (std::size_t l = 0; l < n; ++l) {
            double a = profile.alpha[l];
            double noise = base_scale[l] * std::pow(s, (a - 1.0) / a) *
                           sample_sas_standard(a, g);
            w[l] += -s * grad[l] * opts.dt + noise;
            if (!std::isfinite(w[l])) bad = true;
        }
        if (bad) throw numeric_error("simulate_sde: non-finite state at t=" + std::to_string(t));
        if (opts.record_every > 0 && k % opts.record_every == 0) {
            res.trajectory.times.push_back(t);
            res.trajectory.states.push_back(w);
        }
        if (!domain.inside(w)) {
            auto [coord, side] = largest_overshoot(w, domain);
            res.record = {t, k, static_cast<int>(coord), side, false};
            return res;
        }
    }
    res.record = {static_cast<double>(n_steps) * opts.dt, n_steps, -1, 0, true};
    res.record.censored = true;
    return res;
}

// Jump-driven approximation: the path relaxes to the minimizer between large
// jumps, so each jump is an independent escape attempt from the center. Jump
// arrivals follow the scheduler-modulated intensities; the jump displacement
// along coordinate l is s^((alpha-1)/alpha) eps lambda J with J Pareto above
// the threshold in force at the arrival time.
inline EscapeRecord simulate_two_phase(const Potential& pot, const Domain& domain,
                                       const NoiseProfile& profile, const SchedulerSpec& sched,
                                       std::uint64_t seed, long long max_jumps = 1000000) {
    domain.validate();
    sched.validate();
    pot.check(domain.center);
    auto n = profile.size();
    if (n != domain.center.size()) {
        throw std::invalid_argument("simulate_two_phase: profile/domain dimension mismatch");
    }
    Rng g = make_rng(seed);

    auto beta_l = [&](std::size_t l, double s) {
        return jump_intensity(profile.alpha[l], profile.eps[l], profile.rho, s);
    };
    auto beta_total = [&](double t) {
        double s = scheduler_value(sched, t);
        double b = 0.0;
        for (std::size_t l = 0; l < n; ++l) b += beta_l(l, s);
        return b;
    };

    // windowed thinning: the scheduler is monotone within a window, so the
    // supremum of the combined intensity sits at one of the window ends
    const double window = 64.0;
    double t = 0.0;
    long long jumps = 0;
    double win_start = 0.0;
    while (jumps < max_jumps) {
        double win_end = win_start + window;
        double b_sup = std::max(beta_total(win_start), beta_total(win_end)) * (1.0 + 1e-9);
        t = std::max(t, win_start);
        for (;;) {
            t += -std::log1p(-uniform01(g)) / b_sup;
            if (t > win_end) break;
            double bt = beta_total(t);
            if (uniform01(g) * b_sup >= bt) continue;
            // accepted arrival; attribute to a coordinate by intensity share
            ++jumps;
            double s = scheduler_value(sched, t);
            double pick = uniform01(g) * bt;
            std::size_t l = 0;
            for (double acc = 0.0; l < n; ++l) {
                acc += beta_l(l, s);
                if (pick < acc) break;
            }
            if (l >= n) l = n - 1;
            double O = jump_threshold(profile.eps[l], profile.rho, profile.alpha[l], s);
            double J = sample_large_jump(profile.alpha[l], O, g);
            double disp = std::pow(s, (profile.alpha[l] - 1.0) / profile.alpha[l]) *
                          profile.eps[l] * profile.lambda_row[l] * J;
            if (disp > domain.d_plus[l] || disp < domain.d_minus[l]) {
                return {t, jumps, static_cast<int>(l), disp > 0 ? +1 : -1, false};
            }
            if (jumps >= max_jumps) break;
        }
        win_start = win_end;
    }
    return {t, jumps, -1, 0, true};
}

// Euler path driven by the small-jump part only (jumps above the threshold
// O = eps_bar^(-rho) removed, sub-resolution activity Gaussian-compensated).
inline Trajectory simulate_small_jump_process(const Potential& pot, const Vec& w0, double alpha,
                                              double eps_bar, double rho, double t_end,
                                              double dt, std::uint64_t seed) {
    pot.check(w0);
    if (!(dt > 0.0) || !(t_end >= 0.0)) {
        throw std::invalid_argument("simulate_small_jump_process: need dt > 0, t_end >= 0");
    }
    if (eps_bar != 0.0 && (!(eps_bar > 0.0) || !(eps_bar < 1.0))) {
        throw std::invalid_argument("simulate_small_jump_process: eps_bar must be 0 or in (0,1)");
    }
    Rng g = make_rng(seed);
    double O = eps_bar > 0.0 ? std::pow(eps_bar, -rho) : 0.0;
    auto n_steps = static_cast<long long>(std::ceil(t_end / dt));
    Trajectory traj;
    Vec w = w0;
    traj.times.push_back(0.0);
    traj.states.push_back(w);
    for (long long k = 1; k <= n_steps; ++k) {
        Vec grad = pot.gradient(w);
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= grad[i] * dt;
            if (eps_bar > 0.0) {
                // bare jump measure |y|^(-1-alpha): levy_coeff = 1
                w[i] += eps_bar * sample_small_increment(alpha, O, dt, g, 1.0);
            }
            if (!std::isfinite(w[i])) {
                throw numeric_error("simulate_small_jump_process: non-finite state");
            }
        }
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.states.push_back(w);
    }
    return traj;
}

}  // namespace levylab
