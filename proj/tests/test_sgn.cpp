#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "levylab/experiments.hpp"

using namespace levylab;

namespace {

MlpSpec tiny_spec(std::vector<int> sizes, LossKind loss = LossKind::cross_entropy,
                  std::uint64_t seed = 5) {
    MlpSpec s;
    s.layer_sizes = std::move(sizes);
    s.loss = loss;
    s.init_seed = seed;
    return s;
}

}  // namespace

TEST_CASE("mlp: backprop gradients match finite differences") {
    for (auto loss : {LossKind::cross_entropy, LossKind::mse}) {
        Mlp net(tiny_spec({3, 5, 4, 2}, loss, 77));
        Vec x = {0.3, -1.2, 0.8};
        double label = loss == LossKind::cross_entropy ? 1.0 : 0.7;
        Vec grad(net.param_count(), 0.0);
        net.accumulate_gradient(x, label, grad);
        Rng g = make_rng(42);
        for (int rep = 0; rep < 40; ++rep) {
            auto idx = static_cast<std::size_t>(uniform01(g) * static_cast<double>(net.param_count()));
            double w0 = net.get_param(idx);
            double h = 1e-6 * std::max(1.0, std::fabs(w0));
            net.set_param(idx, w0 + h);
            double lp = net.sample_loss(x, label);
            net.set_param(idx, w0 - h);
            double lm = net.sample_loss(x, label);
            net.set_param(idx, w0);
            double fd = (lp - lm) / (2.0 * h);
            CHECK_THAT(grad[idx], Catch::Matchers::WithinAbs(fd, 1e-5 * std::max(1.0, std::fabs(fd))));
        }
    }
}

TEST_CASE("mlp: spec validation") {
    CHECK_THROWS_AS(Mlp(tiny_spec({4})), std::invalid_argument);
    CHECK_THROWS_AS(Mlp(tiny_spec({4, 0, 2})), std::invalid_argument);
    CHECK_THROWS_AS(Mlp(tiny_spec({400, 400, 400})), capacity_error);
    Mlp ok(tiny_spec({3, 4, 2}));
    CHECK(ok.param_count() == 3 * 4 + 4 + 4 * 2 + 2);
    // flatten/unflatten round trip
    auto w = ok.flatten();
    w[5] = 9.0;
    ok.unflatten(w);
    CHECK(ok.flatten() == w);
}

TEST_CASE("train_sgd: zero lr, determinism, convex monotone descent") {
    auto ds = make_separable2d(200, 8);
    auto spec = tiny_spec({2, 2});

    auto frozen = train_sgd(spec, ds, 0.0, 20, SchedulerSpec::constant(), 1,
                            {1e-12, 100, 150});
    CHECK(frozen.weights == Mlp(spec).flatten());

    StopRule no_stop{0.0, 100, 120};
    no_stop.plateau_eps = -1.0;  // never fires
    auto a = train_sgd(spec, ds, 0.05, 20, SchedulerSpec::constant(), 3, no_stop);
    auto b = train_sgd(spec, ds, 0.05, 20, SchedulerSpec::constant(), 3, no_stop);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.weights == b.weights);

    // full-batch gradient descent on the convex softmax-regression instance
    auto gd = train_sgd(spec, ds, 0.01, ds.size(), SchedulerSpec::constant(), 4, no_stop);
    REQUIRE(gd.loss_trace.size() >= 101);
    for (std::size_t k = 1; k <= 100; ++k) {
        CHECK(gd.loss_trace[k] < gd.loss_trace[k - 1]);
    }

    CHECK_THROWS_AS(train_sgd(spec, ds, 0.1, ds.size() + 1, SchedulerSpec::constant(), 1),
                    std::invalid_argument);
}

TEST_CASE("train_sgd: plateau rule stops a converged run") {
    auto ds = make_separable2d(200, 9);
    auto spec = tiny_spec({2, 2});
    auto res = train_sgd(spec, ds, 0.1, 20, SchedulerSpec::constant(), 5, {1e-4, 100, 20000});
    CHECK(res.converged);
    CHECK(res.iterations < 20000);
    // the last 100 recorded losses sit inside the band
    auto n = res.loss_trace.size();
    double lo = res.loss_trace[n - 1], hi = lo;
    for (std::size_t k = n - 101; k < n; ++k) {
        lo = std::min(lo, res.loss_trace[k]);
        hi = std::max(hi, res.loss_trace[k]);
    }
    CHECK(hi - lo <= 1e-4);
}

TEST_CASE("collect_sgn: decomposition identity and degenerate batch") {
    auto ds = make_blobs("t", 400, 6, 3, 2.0, 11);
    auto spec = tiny_spec({6, 8, 3});
    auto train = train_sgd(spec, ds, 0.05, 32, SchedulerSpec::constant(), 12, {1e-4, 100, 500});
    Mlp net(spec);
    net.unflatten(train.weights);
    std::vector<std::size_t> idx = {0, 7, 20, net.param_count() - 1};

    auto col = collect_sgn(net, ds, 32, idx, 99);
    CHECK(col.weighted_mean_residual < 1e-6);
    // 400 / 32 = 12 full minibatches, remainder of 16 excluded
    for (const auto& s : col.samples) CHECK(s.noise_values.size() == 12);

    auto full = collect_sgn(net, ds, ds.size(), idx, 99);
    for (const auto& s : full.samples) {
        REQUIRE(s.noise_values.size() == 1);
        CHECK(s.noise_values[0] == 0.0);
    }

    CHECK_THROWS_AS(collect_sgn(net, ds, ds.size() + 1, idx, 1), std::invalid_argument);
    CHECK_THROWS_AS(collect_sgn(net, ds, 32, {net.param_count()}, 1), std::invalid_argument);
}

TEST_CASE("alpha variability: injected tail indices recovered, Gaussian null is tight") {
    std::vector<double> truth = {0.9, 1.3, 1.7};
    std::vector<double> hats;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        auto draws = sample_sas({truth[j], 1.0}, 5000, 1234 + j);
        hats.push_back(estimate_alpha(draws));
    }
    auto inj = summarize_alpha({0, 1, 2}, hats);
    for (std::size_t j = 0; j < truth.size(); ++j) {
        CHECK_THAT(inj.alpha_hat[j], Catch::Matchers::WithinAbs(truth[j], 0.1));
    }

    // identical Gaussian noise on every parameter
    std::vector<double> null_hats;
    for (int j = 0; j < 20; ++j) {
        auto draws = sample_sas({2.0, 1.0}, 5000, 500 + static_cast<std::uint64_t>(j));
        null_hats.push_back(estimate_alpha(draws));
    }
    auto null = summarize_alpha({}, null_hats);
    CHECK(null.stddev < 0.05);
    CHECK(null.mean > 1.9);
}

TEST_CASE("empirical covariance row sums: oracle, duplication, single point, capacity") {
    // 3-parameter linear regression net: weights (2) + bias (1), MSE loss
    auto spec = tiny_spec({2, 1}, LossKind::mse, 3);
    Mlp net(spec);
    Dataset ds;
    ds.name = "quad3";
    ds.features = {{1.0, 0.2}, {-0.4, 1.1}, {0.7, -0.9}, {0.1, 0.5}};
    ds.labels = {0.8, -0.3, 0.4, 0.1};

    double B = 2.0;
    auto rows = empirical_cov_rowsum_all(net, ds, B);

    // direct oracle: per-sample gradient covariance row sums
    auto D = ds.size();
    auto n = net.param_count();
    Mat g(D, Vec(n, 0.0));
    for (std::size_t j = 0; j < D; ++j) net.accumulate_gradient(ds.features[j], ds.labels[j], g[j]);
    for (std::size_t l = 0; l < n; ++l) {
        double expect = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            double u = 0.0, a = 0.0, b = 0.0;
            for (std::size_t j = 0; j < D; ++j) {
                u += g[j][l] * g[j][m] / static_cast<double>(D);
                a += g[j][l] / static_cast<double>(D);
                b += g[j][m] / static_cast<double>(D);
            }
            expect += (u - a * b) / B;
        }
        CHECK_THAT(rows[l], Catch::Matchers::WithinAbs(expect, 1e-12));
        // diagonal of a PSD matrix: the variance part of row l is >= 0
    }

    // duplicating every point leaves the per-sample covariance unchanged
    Dataset dup = ds;
    for (std::size_t j = 0; j < D; ++j) {
        dup.features.push_back(ds.features[j]);
        dup.labels.push_back(ds.labels[j]);
    }
    auto rows2 = empirical_cov_rowsum_all(net, dup, B);
    for (std::size_t l = 0; l < n; ++l) {
        CHECK_THAT(rows2[l], Catch::Matchers::WithinAbs(rows[l], 1e-12));
    }

    // one data point: no sampling noise
    Dataset solo;
    solo.name = "solo";
    solo.features = {{0.5, -0.5}};
    solo.labels = {0.2};
    for (double v : empirical_cov_rowsum_all(net, solo, 1.0)) {
        CHECK_THAT(v, Catch::Matchers::WithinAbs(0.0, 1e-14));
    }

    auto big = tiny_spec({40, 40, 2});
    Mlp bignet(big);
    CHECK_THROWS_AS(empirical_cov_rowsum_all(bignet, ds, 1.0), capacity_error);
}

TEST_CASE("escape phase: degenerate threshold and noise-free stability") {
    // overlapping classes: positive Bayes error keeps the cross-entropy
    // minimum attained at finite weights
    auto ds = make_blobs("t", 300, 6, 2, 0.8, 21);
    auto spec = tiny_spec({6, 6, 2});
    auto train = train_sgd(spec, ds, 0.05, 100, SchedulerSpec::constant(), 22, {1e-3, 100, 6000});
    REQUIRE(train.converged);
    // polish with full-batch gradient descent so the checkpoint is a genuine
    // minimum of the full-data loss
    Mlp net(spec);
    net.unflatten(train.weights);
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    for (int k = 0; k < 2000; ++k) {
        Vec grad = subset_gradient(net, ds, all);
        Vec w = net.flatten();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= 0.05 * grad[i];
        net.unflatten(w);
    }
    Vec polished = net.flatten();
    double min_loss = full_loss(net, ds);

    // delta = 0: any minibatch fluctuation crosses immediately
    long long it = run_escape_phase(spec, polished, ds, 0.05, 3, min_loss, 77, 1000);
    CHECK(it >= 1);
    CHECK(it <= 1);

    // full-batch GD at the minimum has no noise: never escapes for delta > 0
    double d = 0.1 * (train.loss_trace.front() - min_loss);
    CHECK(run_escape_phase(spec, train.weights, ds, 0.05, ds.size(), min_loss + d, 77, 400) == -1);
}

TEST_CASE("escape sweep: validation and the one-constant fit helper") {
    auto ds = make_blobs("t", 300, 6, 2, 2.5, 21);
    auto spec = tiny_spec({6, 6, 2});
    CHECK_THROWS_AS(escape_experiment(spec, ds, {0.1}, 10, 10, 10, -1.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(escape_experiment(spec, ds, {0.1}, 10, 2, 5, -1.0, 1),
                    std::invalid_argument);

    // exact multiple -> zero residual; scaled data -> same residual
    MultiplierFit f = fit_log_multiplier({1.0, 2.0, 4.0}, {3.0, 6.0, 12.0});
    CHECK_THAT(f.log_c, Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));
    CHECK_THAT(f.residual, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THROWS_AS(fit_log_multiplier({1.0}, {-1.0}), std::invalid_argument);
}

TEST_CASE("escape sweep: mean escape iterations decrease monotonically in lr") {
    // cardio-shaped synthetic data (21 features, 3 classes), 20 seeds per lr;
    // strictly decreasing cell means give Spearman rho = -1 on a 4-point grid
    auto ds = make_blobs("cardio-mini", 600, 21, 3, 2.0, 11);
    MlpSpec spec;
    spec.layer_sizes = {21, 12, 3};
    spec.init_seed = 7;
    StopRule stop{5e-3, 100, 8000};
    auto sweep =
        escape_experiment(spec, ds, {0.015, 0.03, 0.06, 0.12}, 60, 1, 20, 0.01, 3, stop, 30000);
    REQUIRE(sweep.cells.size() == 4);
    for (const auto& c : sweep.cells) {
        CHECK(c.n_censored == 0);
        CHECK(c.escape_iters.size() == 20);
    }
    for (std::size_t i = 1; i < sweep.cells.size(); ++i) {
        CHECK(sweep.cells[i].mean < sweep.cells[i - 1].mean);
    }
}

TEST_CASE("survival fit: exponential data recovered, censoring guard") {
    Rng g = make_rng(404);
    std::vector<double> times;
    double rate = 0.35;
    for (int i = 0; i < 2000; ++i) times.push_back(-std::log1p(-uniform01(g)) / rate);
    auto fit = survival_from_exit_times(times, 0);
    CHECK_THAT(fit.rate, Catch::Matchers::WithinAbs(rate, 0.05));
    CHECK(fit.r2 > 0.95);

    CHECK_THROWS_AS(survival_from_exit_times({1.0, 2.0}, 3), insufficient_data_error);
}

TEST_CASE("sde survival matches the jump-rate theory on the quadratic well") {
    auto pot = make_quadratic({1.0});
    auto profile = NoiseProfile::uniform(1, 1.2, 1.0, 0.1, 1.0, -1.0, 0.5);
    Domain dom;
    dom.center = {0.0};
    dom.d_plus = {1.0};
    dom.d_minus = {-1.0};
    SdeOptions opts;
    opts.dt = 0.01;
    opts.horizon = 2000.0;
    auto fit = survival_sde(pot, dom, profile, SchedulerSpec::constant(), 600, 7, opts);
    CHECK(fit.r2 > 0.95);
    double m_phi = profile.m_bar[0] * profile.phi[0];
    CHECK(fit.rate > 0.5 * m_phi);
    CHECK(fit.rate < 2.0 * m_phi);
}

TEST_CASE("ackley exit axis: symmetric tails split 50/50") {
    auto res = ackley_axis_experiment(0.55, 0.0, 1e-4, 2.0, 1000, 31);
    CHECK(res.n_censored == 0);
    CHECK(res.p_axis1 > 0.47);
    CHECK(res.p_axis1 < 0.53);
    CHECK_THROWS_AS(ackley_axis_experiment(1.8, 0.5, 1e-4, 2.0, 10, 1), std::invalid_argument);
}

TEST_CASE("lr decay probe: decay shrinks the update noise, no decay does not") {
    auto ds = make_blobs("t", 600, 9, 2, 2.0, 61);
    auto spec = tiny_spec({9, 6, 2});
    auto decayed = lr_decay_noise_probe(spec, ds, 0.05, 0.1, 2, 30, 6, 20, 9001);
    CHECK(decayed.median_ratio < 0.5);

    auto flat = lr_decay_noise_probe(spec, ds, 0.05, 1.0, 2, 30, 6, 20, 9001);
    CHECK(flat.median_ratio > 0.5);
    CHECK(flat.median_ratio < 2.0);

    // growing the batch attenuates the update noise too
    auto bigger = lr_decay_noise_probe(spec, ds, 0.05, 1.0, 2, 30, 6, 20, 9001, 60);
    CHECK(bigger.median_ratio < 0.8);

    CHECK_THROWS_AS(lr_decay_noise_probe(spec, ds, 0.05, 0.0, 2, 30, 6, 20, 1),
                    std::invalid_argument);
}

TEST_CASE("dataset: generators, validation, csv round trip") {
    auto ds = make_named_synthetic("cardio", 5);
    CHECK(ds.size() == 2000);
    CHECK(ds.dim() == 21);
    CHECK(ds.n_classes() == 3);
    CHECK_THROWS_AS(make_named_synthetic("imagenet", 1), std::invalid_argument);

    // labels follow a fixed class rotation; blob means are reproducible
    auto again = make_named_synthetic("cardio", 5);
    CHECK(again.features == ds.features);

    std::string path = "test_sgn_tmp.csv";
    {
        std::ofstream out(path);
        out << "f1,f2,label\n";
        out << "0.5,-1.25,1\n";
        out << "2.0,0.0,0\n";
    }
    auto csv = load_csv(path);
    CHECK(csv.size() == 2);
    CHECK(csv.dim() == 2);
    CHECK(csv.features[0][1] == -1.25);
    CHECK(csv.labels[1] == 0.0);
    {
        std::ofstream out(path);
        out << "f1,label\n";
        out << "abc,1\n";
    }
    CHECK_THROWS_AS(load_csv(path), std::runtime_error);
    std::remove(path.c_str());
}
