// levylab command-line front end: parses a strict JSON config, runs one of the
// experiment/evaluation pipelines, and emits plot-ready CSV tables plus a JSON
// summary that embeds everything needed for byte-identical replay.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "levylab/dynamics.hpp"
#include "levylab/experiments.hpp"
#include "levylab/io.hpp"
#include "levylab/theory.hpp"

using nlohmann::json;
using namespace levylab;

namespace {

struct schema_error : std::runtime_error {
    std::string field;
    schema_error(std::string f, const std::string& msg)
        : std::runtime_error(msg), field(std::move(f)) {}
};

// Strict config access: every key must be consumed exactly where the command's
// schema expects it; leftovers are reported with their full field path.
class Cfg {
  public:
    Cfg(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j_->is_object()) throw schema_error(path_, "expected an object at " + path_);
    }

    bool exists(const std::string& key) const { return j_->contains(key); }

    double num(const std::string& key) { return as_number(require(key), key); }
    double num(const std::string& key, double def) {
        return exists(key) ? as_number(require(key), key) : def;
    }
    long long integer(const std::string& key) {
        const json& v = require(key);
        if (!v.is_number_integer()) {
            throw schema_error(at(key), "expected an integer at " + at(key));
        }
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long def) {
        return exists(key) ? integer(key) : def;
    }
    std::string str(const std::string& key) {
        const json& v = require(key);
        if (!v.is_string()) throw schema_error(at(key), "expected a string at " + at(key));
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& def) {
        return exists(key) ? str(key) : def;
    }

    std::vector<double> nums(const std::string& key) {
        const json& v = require(key);
        if (!v.is_array()) throw schema_error(at(key), "expected an array at " + at(key));
        std::vector<double> out;
        for (const auto& e : v) out.push_back(as_number(e, key));
        return out;
    }
    // scalar-or-array field broadcast to length n
    std::vector<double> nums_broadcast(const std::string& key, std::size_t n) {
        const json& v = require(key);
        if (v.is_array()) {
            auto a = nums_of(v, key);
            if (a.size() != n) {
                throw schema_error(at(key), "expected " + std::to_string(n) + " entries at " +
                                                at(key));
            }
            return a;
        }
        return std::vector<double>(n, as_number(v, key));
    }

    std::vector<std::pair<double, double>> stages(const std::string& key) {
        const json& v = require(key);
        if (!v.is_array()) throw schema_error(at(key), "expected an array at " + at(key));
        std::vector<std::pair<double, double>> out;
        for (const auto& e : v) {
            if (!e.is_array() || e.size() != 2) {
                throw schema_error(at(key), "expected [time, gamma] pairs at " + at(key));
            }
            out.emplace_back(as_number(e[0], key), as_number(e[1], key));
        }
        return out;
    }

    Cfg& obj(const std::string& key) {
        const json& v = require(key);
        kids_.push_back(std::make_unique<Cfg>(v, at(key)));
        return *kids_.back();
    }
    Cfg* obj_opt(const std::string& key) { return exists(key) ? &obj(key) : nullptr; }

    void finish() const {
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            if (!consumed_.count(it.key())) {
                throw schema_error(at(it.key()), "unknown field " + at(it.key()));
            }
        }
        for (const auto& k : kids_) k->finish();
    }

  private:
    const json* j_;
    std::string path_;
    std::set<std::string> consumed_;
    std::vector<std::unique_ptr<Cfg>> kids_;

    std::string at(const std::string& key) const { return path_ + "." + key; }
    const json& require(const std::string& key) {
        if (!j_->contains(key)) throw schema_error(at(key), "missing required field " + at(key));
        consumed_.insert(key);
        return (*j_)[key];
    }
    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) throw schema_error(at(key), "expected a number at " + at(key));
        return v.get<double>();
    }
    std::vector<double> nums_of(const json& v, const std::string& key) const {
        std::vector<double> out;
        for (const auto& e : v) out.push_back(as_number(e, key));
        return out;
    }
};

NoiseProfile parse_profile(Cfg& c) {
    auto n = static_cast<std::size_t>(c.integer("n", 1));
    auto p = NoiseProfile::make(c.nums_broadcast("alpha", n), c.nums_broadcast("lambda", n),
                                c.nums_broadcast("eps", n), c.nums_broadcast("d_plus", n),
                                c.nums_broadcast("d_minus", n), c.num("rho", 0.5));
    return p;
}

SchedulerSpec parse_scheduler(Cfg& c) {
    auto kind = c.str("kind", "constant");
    if (kind == "constant") return SchedulerSpec::constant();
    if (kind == "exponential") return SchedulerSpec::exponential(c.num("gamma"));
    if (kind == "multistep") return SchedulerSpec::multistep(c.stages("stages"));
    throw schema_error("config.scheduler.kind", "unknown scheduler kind '" + kind + "'");
}

Potential parse_potential(Cfg& c) {
    auto kind = c.str("kind");
    if (kind == "quadratic") return make_quadratic(c.nums("h_diag"));
    if (kind == "double_well") return make_double_well();
    if (kind == "ackley2d") return make_ackley2d();
    throw schema_error("config.potential.kind", "unknown potential kind '" + kind + "'");
}

Domain parse_domain(Cfg& c, std::size_t n) {
    Domain d;
    d.center = c.exists("center") ? c.nums_broadcast("center", n) : Vec(n, 0.0);
    d.d_plus = c.nums_broadcast("d_plus", n);
    d.d_minus = c.nums_broadcast("d_minus", n);
    d.delta = c.num("delta", 0.05);
    d.validate();
    return d;
}

MlpSpec parse_mlp(Cfg& c) {
    MlpSpec s;
    for (double v : c.nums("layers")) s.layer_sizes.push_back(static_cast<int>(v));
    auto loss = c.str("loss", "cross_entropy");
    if (loss == "cross_entropy") {
        s.loss = LossKind::cross_entropy;
    } else if (loss == "mse") {
        s.loss = LossKind::mse;
    } else {
        throw schema_error("config.mlp.loss", "unknown loss '" + loss + "'");
    }
    s.init_seed = static_cast<std::uint64_t>(c.integer("init_seed", 1));
    s.validate();
    return s;
}

Dataset parse_dataset(Cfg& c) {
    auto kind = c.str("kind", "named");
    if (kind == "named") {
        return make_named_synthetic(c.str("name"),
                                    static_cast<std::uint64_t>(c.integer("seed", 1)));
    }
    if (kind == "blobs") {
        return make_blobs("blobs", static_cast<std::size_t>(c.integer("samples")),
                          static_cast<std::size_t>(c.integer("dim")),
                          static_cast<int>(c.integer("classes")), c.num("separation", 2.0),
                          static_cast<std::uint64_t>(c.integer("seed", 1)));
    }
    if (kind == "csv") return load_csv(c.str("path"));
    throw schema_error("config.dataset.kind", "unknown dataset kind '" + kind + "'");
}

StopRule parse_stop(Cfg* c) {
    StopRule s;
    if (c) {
        s.plateau_eps = c->num("plateau_eps", s.plateau_eps);
        s.plateau_iters = static_cast<int>(c->integer("plateau_iters", s.plateau_iters));
        s.max_iters = c->integer("max_iters", s.max_iters);
    }
    return s;
}

struct RunContext {
    std::string out_dir;
    std::string hash;
    std::uint64_t seed = 1;
    int jobs = 1;
};

// deterministic parallel map: slot i always receives the same work item
void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& body) {
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

std::string csv_path(const RunContext& ctx, const std::string& base) {
    return ctx.out_dir + "/" + base;
}

json theory_terms_json(const TheoryResult& r) {
    json terms = json::array();
    for (const auto& t : r.terms) {
        terms.push_back({{"l", t.l}, {"value", t.value}, {"core", t.core}, {"A", t.A}});
    }
    return terms;
}

// ---------------------------------------------------------------- commands

json cmd_theory(Cfg& c, const RunContext& ctx, std::vector<std::string>& outputs) {
    auto p = parse_profile(c.obj("profile"));
    auto evaluator = c.str("evaluator");
    auto variant = c.str("variant", "main") == "derivation" ? ExponentVariant::derivation
                                                            : ExponentVariant::main;
    json results;
    TheoryResult r;
    bool have_terms = true;
    if (evaluator == "mean_escape_constant") {
        r = mean_escape_constant(p);
    } else if (evaluator == "mean_escape_exponential") {
        r = mean_escape_exponential(p, c.num("gamma"), variant);
    } else if (evaluator == "mean_escape_multistep") {
        r = mean_escape_multistep(p, parse_scheduler(c.obj("scheduler")));
    } else if (evaluator == "exit_direction_prob") {
        r = exit_direction_prob(p, static_cast<std::size_t>(c.integer("index", 0)),
                                c.num("gamma", 1.0), variant);
    } else if (evaluator == "survival") {
        r = survival_prob(p, c.num("u"), c.num("gamma", 1.0));
    } else if (evaluator == "trapping_exponential") {
        r = trapping_prob_exponential(p, c.num("gamma"));
    } else if (evaluator == "trapping_multistep") {
        r = trapping_prob_multistep(p, parse_scheduler(c.obj("scheduler")));
    } else if (evaluator == "exit_direction_ratio") {
        have_terms = false;
        results["value"] = exit_direction_ratio(p, static_cast<std::size_t>(c.integer("index")),
                                                static_cast<std::size_t>(c.integer("index_j")));
    } else if (evaluator == "relaxation_time") {
        have_terms = false;
        results["value"] = relaxation_time_bound(p, static_cast<std::size_t>(c.integer("index", 0)),
                                                 c.num("c1", 1.0));
    } else if (evaluator == "first_jump_escape") {
        have_terms = false;
        auto l = static_cast<std::size_t>(c.integer("index", 0));
        auto e = first_jump_escape_prob(p.alpha.at(l), p.eps.at(l), p.rho, p.lambda_row.at(l),
                                        c.num("s", 1.0), p.d_minus.at(l), p.d_plus.at(l));
        results["value"] = e.value;
        results["regime_flag"] = e.regime_flag;
    } else {
        throw schema_error("config.evaluator", "unknown evaluator '" + evaluator + "'");
    }

    CsvWriter csv(csv_path(ctx, "theory.csv"), ctx.hash, ctx.seed,
                  {"l", "value", "core", "A"});
    if (have_terms) {
        for (const auto& t : r.terms) {
            csv.row({std::to_string(t.l), format_g17(t.value), format_g17(t.core),
                     format_g17(t.A)});
        }
        results["value"] = r.value;
        results["terms"] = theory_terms_json(r);
        results["regime_flags"] = r.regime_flags;
    } else {
        csv.row({"0", format_g17(results["value"].get<double>()), "nan", "nan"});
    }
    outputs.push_back("theory.csv");
    return results;
}

json cmd_escape_sim(Cfg& c, const RunContext& ctx, std::vector<std::string>& outputs) {
    auto pot = parse_potential(c.obj("potential"));
    auto p = parse_profile(c.obj("profile"));
    auto dom = parse_domain(c.obj("domain"), p.size());
    auto sched = parse_scheduler(c.obj("scheduler"));
    auto simulator = c.str("simulator", "sde");
    auto trials = static_cast<std::size_t>(c.integer("trials"));
    SdeOptions opts;
    opts.dt = c.num("dt", opts.dt);
    opts.horizon = c.num("horizon", opts.horizon);
    auto max_jumps = c.integer("max_jumps", 1000000);
    if (simulator != "sde" && simulator != "two_phase") {
        throw schema_error("config.simulator", "unknown simulator '" + simulator + "'");
    }

    std::vector<EscapeRecord> recs(trials);
    parallel_for(ctx.jobs, trials, [&](std::size_t i) {
        auto s = derive_seed(ctx.seed, 0, i);
        recs[i] = simulator == "two_phase"
                      ? simulate_two_phase(pot, dom, p, sched, s, max_jumps)
                      : simulate_sde(pot, dom, p, sched, s, opts).record;
    });

    CsvWriter csv(csv_path(ctx, "escape_sim.csv"), ctx.hash, ctx.seed,
                  {"trial", "exit_time", "exit_iteration", "exit_coord", "exit_side", "censored"});
    double sum = 0.0, sum2 = 0.0;
    std::size_t escaped = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto& r = recs[i];
        csv.row({std::to_string(i), format_g17(r.exit_time), std::to_string(r.exit_iteration),
                 std::to_string(r.exit_coord), std::to_string(r.exit_side),
                 r.censored ? "1" : "0"});
        if (!r.censored) {
            sum += r.exit_time;
            sum2 += r.exit_time * r.exit_time;
            ++escaped;
        }
    }
    outputs.push_back("escape_sim.csv");
    json results;
    results["n_trials"] = trials;
    results["n_censored"] = trials - escaped;
    if (escaped > 0) {
        auto m = static_cast<double>(escaped);
        results["mean_exit_time"] = sum / m;
        results["std_exit_time"] =
            escaped > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / m) / (m - 1.0))) : 0.0;
    }
    return results;
}

json cmd_survival(Cfg& c, const RunContext& ctx, std::vector<std::string>& outputs) {
    auto mode = c.str("mode", "sde");
    SurvivalFit fit;
    if (mode == "sde") {
        auto pot = parse_potential(c.obj("potential"));
        auto p = parse_profile(c.obj("profile"));
        auto dom = parse_domain(c.obj("domain"), p.size());
        auto sched = parse_scheduler(c.obj("scheduler"));
        SdeOptions opts;
        opts.dt = c.num("dt", opts.dt);
        opts.horizon = c.num("horizon", opts.horizon);
        auto runs = static_cast<std::size_t>(c.integer("runs"));
        std::vector<EscapeRecord> recs(runs);
        parallel_for(ctx.jobs, runs, [&](std::size_t i) {
            recs[i] = simulate_sde(pot, dom, p, sched, derive_seed(ctx.seed, 3, i), opts).record;
        });
        std::vector<double> times;
        int censored = 0;
        for (const auto& r : recs) {
            if (r.censored) {
                ++censored;
            } else {
                times.push_back(r.exit_time);
            }
        }
        fit = survival_from_exit_times(std::move(times), censored);
    } else if (mode == "nn") {
        fit = survival_experiment(parse_mlp(c.obj("mlp")), parse_dataset(c.obj("dataset")),
                                  c.num("lr"), static_cast<std::size_t>(c.integer("train_batch")),
                                  static_cast<std::size_t>(c.integer("escape_batch")),
                                  static_cast<int>(c.integer("runs")), c.num("loss_delta", -1.0),
                                  ctx.seed, parse_stop(c.obj_opt("stop")),
                                  c.integer("escape_max_iters", 100000));
    } else {
        throw schema_error("config.mode", "unknown survival mode '" + mode + "'");
    }

    CsvWriter csv(csv_path(ctx, "survival.csv"), ctx.hash, ctx.seed, {"u", "survival"});
    for (std::size_t i = 0; i < fit.u.size(); ++i) {
        csv.row({format_g17(fit.u[i]), format_g17(fit.s[i])});
    }
    outputs.push_back("survival.csv");
    return {{"rate", fit.rate},
            {"r2", fit.r2},
            {"n_runs", fit.n_runs},
            {"n_censored", fit.n_censored}};
}

json cmd_fit_sgn(Cfg& c, const RunContext& ctx, std::vector<std::string>& outputs) {
    auto spec = parse_mlp(c.obj("mlp"));
    auto ds = parse_dataset(c.obj("dataset"));
    auto& tr = c.obj("train");
    double lr = tr.num("lr");
    auto batch = static_cast<std::size_t>(tr.integer("batch"));
    auto stop = parse_stop(c.obj_opt("stop"));
    auto& co = c.obj("collect");
    auto cbatch = static_cast<std::size_t>(co.integer("batch"));
    auto n_params = static_cast<std::size_t>(co.integer("n_params"));
    double fixed_alpha = c.num("fixed_alpha", 1.0);

    auto train = train_sgd(spec, ds, lr, batch, SchedulerSpec::constant(),
                           derive_seed(ctx.seed, 1, 0), stop);
    if (train.diverged) throw numeric_error("fit-sgn: training diverged");
    Mlp net(spec);
    net.unflatten(train.weights);
    std::vector<std::size_t> idx(n_params);
    for (std::size_t j = 0; j < n_params; ++j) idx[j] = j * net.param_count() / n_params;
    auto col = collect_sgn(net, ds, cbatch, idx, derive_seed(ctx.seed, 2, 0));

    CsvWriter csv(csv_path(ctx, "fit_sgn.csv"), ctx.hash, ctx.seed,
                  {"param_index", "alpha_hat", "sse_gaussian", "sse_sas_fixed", "sse_sas_free"});
    std::size_t sas_better = 0, usable = 0;
    std::vector<double> hats;
    for (const auto& s : col.samples) {
        try {
            auto rep = fit_report(s.noise_values, fixed_alpha);
            csv.row({std::to_string(s.param_index), format_g17(rep.alpha_hat),
                     format_g17(rep.sse_gaussian), format_g17(rep.sse_sas_fixed_alpha),
                     format_g17(rep.sse_sas_free_alpha)});
            hats.push_back(rep.alpha_hat);
            ++usable;
            if (rep.sse_sas_free_alpha <= rep.sse_gaussian) ++sas_better;
        } catch (const degenerate_data_error&) {
            csv.row({std::to_string(s.param_index), "nan", "nan", "nan", "nan"});
        }
    }
    outputs.push_back("fit_sgn.csv");
    if (usable == 0) throw degenerate_data_error("fit-sgn: every parameter was degenerate");
    auto var = summarize_alpha(idx, hats);
    return {{"n_params", n_params},
            {"n_usable", usable},
            {"fraction_sas_better", static_cast<double>(sas_better) / static_cast<double>(usable)},
            {"alpha_mean", var.mean},
            {"alpha_std", var.stddev},
            {"alpha_min", var.min},
            {"alpha_max", var.max},
            {"train_iterations", train.iterations},
            {"train_converged", train.converged}};
}

json cmd_escape_nn(Cfg& c, const RunContext& ctx, std::vector<std::string>& outputs) {
    auto spec = parse_mlp(c.obj("mlp"));
    auto ds = parse_dataset(c.obj("dataset"));
    auto sweep = escape_experiment(
        spec, ds, c.nums("lrs"), static_cast<std::size_t>(c.integer("train_batch")),
        static_cast<std::size_t>(c.integer("escape_batch")),
        static_cast<int>(c.integer("n_seeds")), c.num("loss_delta", -1.0), ctx.seed,
        parse_stop(c.obj_opt("stop")), c.integer("escape_max_iters", 200000));

    CsvWriter csv(csv_path(ctx, "escape_nn.csv"), ctx.hash, ctx.seed,
                  {"lr", "mean_escape", "std_escape", "n_escaped", "n_censored"});
    for (const auto& cell : sweep.cells) {
        csv.row({format_g17(cell.lr), format_g17(cell.mean), format_g17(cell.stddev),
                 std::to_string(cell.escape_iters.size()), std::to_string(cell.n_censored)});
    }
    outputs.push_back("escape_nn.csv");
    json results = {{"loss_delta", sweep.loss_delta}, {"min_loss", sweep.min_loss}};
    if (c.exists("fit_alpha")) {
        auto fit = escape_theory_fit(sweep, c.num("fit_alpha"));
        results["levy_residual"] = fit.levy_residual;
        results["gauss_residual"] = fit.gauss_residual;
    }
    return results;
}

json cmd_ackley_axis(Cfg& c, const RunContext& ctx, std::vector<std::string>& outputs) {
    double alpha1 = c.num("alpha1");
    double delta = c.num("delta");
    double lr = c.num("lr", 1e-4);
    double radius = c.num("radius", 10.0);
    auto runs = static_cast<int>(c.integer("runs"));
    auto max_iters = c.integer("max_iters", 200000);
    auto res = ackley_axis_experiment(alpha1, delta, lr, radius, runs, ctx.seed, max_iters);
    CsvWriter csv(csv_path(ctx, "ackley_axis.csv"), ctx.hash, ctx.seed,
                  {"alpha1", "delta", "p_exit_axis1", "n_exits", "n_censored"});
    csv.row({format_g17(alpha1), format_g17(delta), format_g17(res.p_axis1),
             std::to_string(res.n_exits), std::to_string(res.n_censored)});
    outputs.push_back("ackley_axis.csv");
    return {{"p_exit_axis1", res.p_axis1},
            {"n_exits", res.n_exits},
            {"n_censored", res.n_censored}};
}

json cmd_lrdecay_probe(Cfg& c, const RunContext& ctx, std::vector<std::string>& outputs) {
    auto probe = lr_decay_noise_probe(
        parse_mlp(c.obj("mlp")), parse_dataset(c.obj("dataset")), c.num("lr"),
        c.num("decay_factor"), static_cast<int>(c.integer("decay_epochs")),
        static_cast<std::size_t>(c.integer("train_batch")),
        static_cast<std::size_t>(c.integer("collect_batch")),
        static_cast<std::size_t>(c.integer("n_params")), ctx.seed,
        static_cast<std::size_t>(c.integer("collect_batch_after", 0)));
    CsvWriter csv(csv_path(ctx, "lrdecay_probe.csv"), ctx.hash, ctx.seed,
                  {"param_index", "update_noise_std_before", "update_noise_std_after"});
    for (std::size_t j = 0; j < probe.param_indices.size(); ++j) {
        csv.row({std::to_string(probe.param_indices[j]),
                 format_g17(probe.update_noise_std_before[j]),
                 format_g17(probe.update_noise_std_after[j])});
    }
    outputs.push_back("lrdecay_probe.csv");
    return {{"median_ratio", probe.median_ratio}};
}

json dispatch(const std::string& command, const json& config, const RunContext& ctx,
              std::vector<std::string>& outputs) {
    Cfg root(config, "config");
    json results;
    if (command == "theory") {
        results = cmd_theory(root, ctx, outputs);
    } else if (command == "escape-sim") {
        results = cmd_escape_sim(root, ctx, outputs);
    } else if (command == "survival") {
        results = cmd_survival(root, ctx, outputs);
    } else if (command == "fit-sgn") {
        results = cmd_fit_sgn(root, ctx, outputs);
    } else if (command == "escape-nn") {
        results = cmd_escape_nn(root, ctx, outputs);
    } else if (command == "ackley-axis") {
        results = cmd_ackley_axis(root, ctx, outputs);
    } else if (command == "lrdecay-probe") {
        results = cmd_lrdecay_probe(root, ctx, outputs);
    } else {
        throw schema_error("command", "unknown command '" + command + "'");
    }
    root.finish();
    return results;
}

std::string summary_name(const std::string& command) {
    std::string base = command;
    for (auto& ch : base) {
        if (ch == '-') ch = '_';
    }
    return base + "_summary.json";
}

// run one command end to end: dispatch, then write the self-describing summary
std::string run_and_summarize(const std::string& command, const json& config,
                              std::uint64_t seed, const std::string& out_dir, int jobs) {
    std::filesystem::create_directories(out_dir);
    json canonical = {{"command", command}, {"config", config}, {"seed", seed}};
    RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.seed = seed;
    ctx.jobs = jobs;
    ctx.hash = hash_hex(fnv1a64(canonical.dump()));
    std::vector<std::string> outputs;
    json results = dispatch(command, config, ctx, outputs);
    json summary = {{"command", command},  {"config", config},   {"config_hash", ctx.hash},
                    {"root_seed", seed},   {"outputs", outputs}, {"results", results}};
    std::string path = out_dir + "/" + summary_name(command);
    std::ofstream out(path);
    out << summary.dump(2) << "\n";
    return path;
}

int run_replay(const std::string& summary_path, const std::string& out_dir, int jobs) {
    json summary = json::parse(read_file(summary_path));
    auto command = summary.at("command").get<std::string>();
    auto config = summary.at("config");
    auto seed = summary.at("root_seed").get<std::uint64_t>();
    auto recorded_hash = summary.at("config_hash").get<std::string>();

    json canonical = {{"command", command}, {"config", config}, {"seed", seed}};
    auto fresh_hash = hash_hex(fnv1a64(canonical.dump()));
    if (fresh_hash != recorded_hash) {
        std::cerr << json{{"error", "replay_mismatch"},
                          {"message", "config hash mismatch: summary was tampered with"},
                          {"recorded", recorded_hash},
                          {"recomputed", fresh_hash}}
                         .dump()
                  << "\n";
        return 1;
    }

    std::string replay_dir = out_dir + "/replay_check";
    run_and_summarize(command, config, seed, replay_dir, jobs);

    auto base_dir = std::filesystem::path(summary_path).parent_path().string();
    if (base_dir.empty()) base_dir = ".";
    for (const auto& f : summary.at("outputs")) {
        auto name = f.get<std::string>();
        auto orig = read_file(base_dir + "/" + name);
        auto redo = read_file(replay_dir + "/" + name);
        if (orig != redo) {
            std::size_t line = 1, col = 0;
            for (std::size_t i = 0; i < std::min(orig.size(), redo.size()); ++i) {
                if (orig[i] != redo[i]) break;
                ++col;
                if (orig[i] == '\n') {
                    ++line;
                    col = 0;
                }
            }
            std::cerr << json{{"error", "replay_mismatch"},
                              {"file", name},
                              {"first_differing_line", line}}
                             .dump()
                      << "\n";
            return 1;
        }
    }
    std::cout << json{{"replay", "ok"}, {"outputs", summary.at("outputs")}}.dump() << "\n";
    return 0;
}

void apply_override(json& config, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw schema_error("--set", "override must be key=value, got '" + kv + "'");
    }
    std::string path = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    json* node = &config;
    std::size_t start = 0;
    for (;;) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw schema_error("--set", "empty path segment in '" + kv + "'");
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::parse_error&) {
                parsed = value;  // plain string
            }
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 1;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"levylab: heavy-tailed stochastic gradient noise laboratory"};
    app.require_subcommand(1);

    const char* env_out = std::getenv("LEVY_LAB_OUT");
    std::string default_out = env_out ? env_out : ".";

    Common common;
    common.out_dir = default_out;
    std::string replay_summary;
    std::string chosen;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config) {
            sub->add_option("--config", common.config_path, "JSON config path")->required();
            sub->add_option("--set", common.sets, "dotted-path overrides key=value");
        }
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--jobs", common.jobs, "worker pool size");
        auto* s = sub->add_option("--seed", common.seed, "root seed override");
        sub->callback([&, s, name = sub->get_name()] {
            common.seed_given = s->count() > 0;
            chosen = name;
        });
    };

    for (const char* name : {"fit-sgn", "escape-sim", "escape-nn", "survival", "ackley-axis",
                             "theory", "lrdecay-probe"}) {
        add_common(app.add_subcommand(name, ""), true);
    }
    auto* rp = app.add_subcommand("replay", "re-run a summary and check byte-identical outputs");
    rp->add_option("summary", replay_summary, "summary JSON path")->required();
    add_common(rp, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        if (chosen == "replay") return run_replay(replay_summary, common.out_dir, common.jobs);
        json config = json::parse(read_file(common.config_path));
        for (const auto& kv : common.sets) apply_override(config, kv);
        std::uint64_t seed = 1;
        if (config.contains("seed")) {
            if (!config["seed"].is_number_integer()) {
                throw schema_error("config.seed", "expected an integer at config.seed");
            }
            seed = config["seed"].get<std::uint64_t>();
            config.erase("seed");
        }
        if (common.seed_given) seed = common.seed;
        auto path = run_and_summarize(chosen, config, seed, common.out_dir, common.jobs);
        std::cout << json{{"summary", path}}.dump() << "\n";
        return 0;
    } catch (const schema_error& e) {
        std::cerr << json{{"error", "schema"}, {"field", e.field}, {"message", e.what()}}.dump()
                  << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << json{{"error", "schema"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << json{{"error", "schema"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "numeric"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    }
}
