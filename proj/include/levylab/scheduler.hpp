#pragma once

// Learning-rate schedules s_t: constant, exponential t^(gamma-1) decay, and
// piecewise-constant multistep stages.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace levylab {

struct SchedulerSpec {
    enum class Kind { constant, exponential, multistep };

    Kind kind = Kind::constant;
    double gamma = 1.0;  // cooling rate for the exponential kind, s_t = t^(gamma-1)
    std::vector<std::pair<double, double>> stages;  // (T_p, gamma_p) for multistep
    double floor = 1e-12;                           // minimum s value

    static SchedulerSpec constant() { return {}; }
    static SchedulerSpec exponential(double gamma, double floor = 1e-12) {
        SchedulerSpec s;
        s.kind = Kind::exponential;
        s.gamma = gamma;
        s.floor = floor;
        return s;
    }
    static SchedulerSpec multistep(std::vector<std::pair<double, double>> stages) {
        SchedulerSpec s;
        s.kind = Kind::multistep;
        s.stages = std::move(stages);
        return s;
    }

    void validate() const {
        if (!(floor > 0.0)) throw std::invalid_argument("SchedulerSpec: floor must be > 0");
        if (kind == Kind::exponential && (!(gamma > 0.0) || !(gamma <= 1.0))) {
            throw std::invalid_argument("SchedulerSpec: gamma must be in (0, 1], got " +
                                        std::to_string(gamma));
        }
        if (kind == Kind::multistep) {
            if (stages.empty() || stages.front().first != 0.0) {
                throw std::invalid_argument("SchedulerSpec: multistep stages must start at T=0");
            }
            for (std::size_t p = 0; p < stages.size(); ++p) {
                if (!(stages[p].second > 0.0) || !(stages[p].second <= 1.0)) {
                    throw std::invalid_argument("SchedulerSpec: stage multipliers must be in (0,1]");
                }
                if (p > 0 && (stages[p].first <= stages[p - 1].first ||
                              stages[p].second > stages[p - 1].second)) {
                    throw std::invalid_argument(
                        "SchedulerSpec: stage times must increase and multipliers must not");
                }
            }
        }
    }
};

inline double scheduler_value(const SchedulerSpec& spec, double t) {
    if (t < 0.0) throw std::invalid_argument("scheduler_value: t must be >= 0");
    switch (spec.kind) {
        case SchedulerSpec::Kind::constant:
            return 1.0;
        case SchedulerSpec::Kind::exponential:
            // t^(gamma-1) diverges at 0 for gamma < 1; iteration count starts at 1.
            if (t < 1.0) return 1.0;
            return std::max(std::pow(t, spec.gamma - 1.0), spec.floor);
        case SchedulerSpec::Kind::multistep: {
            double s = spec.stages.front().second;
            for (const auto& [tp, gp] : spec.stages) {
                if (t >= tp) s = gp;
            }
            return std::max(s, spec.floor);
        }
    }
    throw std::logic_error("scheduler_value: unreachable");
}

}  // namespace levylab
