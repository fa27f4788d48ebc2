#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "levylab/theory.hpp"
#include "oracles.hpp"

using namespace levylab;
using levylab_oracles::simpson_adaptive;
using levylab_oracles::upper_gamma_oracle;

namespace {

NoiseProfile ref1(double alpha = 1.0, double eps = 0.01, double lam = 1.0, double d = 1.0,
                  double rho = 0.5) {
    return NoiseProfile::uniform(1, alpha, lam, eps, d, -d, rho);
}

}  // namespace

TEST_CASE("gamma function identities and oracle grid") {
    CHECK_THAT(gamma_fn(1.0), Catch::Matchers::WithinAbs(1.0, 1e-14));
    CHECK_THAT(gamma_fn(0.5), Catch::Matchers::WithinRel(std::sqrt(std::numbers::pi), 1e-12));
    for (double a : {0.7, 1.3, 2.5}) {
        CHECK_THAT(incomplete_gamma_upper(a, 0.0), Catch::Matchers::WithinRel(gamma_fn(a), 1e-12));
    }
    for (double x : {0.1, 1.0, 5.0}) {
        CHECK_THAT(incomplete_gamma_upper(1.0, x),
                   Catch::Matchers::WithinRel(std::exp(-x), 1e-12));
    }
    CHECK_THROWS_AS(gamma_fn(-1.0), std::domain_error);

    // 200-point grid against the quadrature oracle
    int checked = 0;
    for (double a : {0.2, 0.5, 0.9, 1.0, 1.4, 2.0, 2.7, 3.5, 5.0, 8.0}) {
        for (double x : {0.0, 0.05, 0.3, 0.8, 1.5, 2.5, 4.0, 6.0, 9.0, 14.0,
                         20.0, 30.0, 45.0, 60.0, 80.0, 100.0, 3.3, 0.12, 7.7, 11.0}) {
            double ours = incomplete_gamma_upper(a, x);
            double oracle = upper_gamma_oracle(a, x);
            CHECK_THAT(ours, Catch::Matchers::WithinRel(oracle, 1e-10));
            ++checked;
        }
    }
    CHECK(checked == 200);
}

TEST_CASE("relaxation time bound sits below the mean jump gap") {
    auto p = ref1();
    CHECK_THAT(relaxation_time_bound(p, 0, 1.0),
               Catch::Matchers::WithinAbs(std::log(100.0), 1e-12));
    // E[S_k] = 1/beta_bar
    double mean_gap = 1.0 / p.beta_bar[0];
    CHECK_THAT(mean_gap, Catch::Matchers::WithinAbs(5.0, 1e-12));
    CHECK(relaxation_time_bound(p, 0, 1.0) < mean_gap);
    auto p2 = ref1(1.0, 0.001);
    CHECK_THAT(1.0 / p2.beta_bar[0], Catch::Matchers::WithinAbs(15.81, 0.01));
    CHECK_THAT(relaxation_time_bound(p2, 0, 1.0), Catch::Matchers::WithinAbs(6.908, 0.001));
    CHECK(relaxation_time_bound(ref1(1.0, 1.0 - 1e-12), 0, 1.0) < 1e-11);
}

TEST_CASE("constant-scheduler mean escape bound: reference value and scalings") {
    auto p = ref1();  // alpha=1, rho=0.5, eps=0.01, lambda=1, d=+-1
    auto r = mean_escape_constant(p);
    // beta_S = 0.2, m Phi = 0.02 -> per-parameter core = 50
    CHECK_THAT(r.terms[0].core, Catch::Matchers::WithinRel(50.0, 1e-12));
    // N = 1 makes A = 0: flagged, bound not finite
    CHECK_FALSE(r.regime_flags.empty());

    // doubling Phi (halving the box width effect) halves the core
    auto ph = ref1(1.0, 0.01, 1.0, 0.5);
    CHECK_THAT(mean_escape_constant(ph).terms[0].core, Catch::Matchers::WithinRel(25.0, 1e-10));

    // halving eps with alpha=1 doubles the bound: the eps^(alpha(1-rho))
    // denominator of the corollary combines with beta_S prop eps^(rho alpha)
    // to a net eps^(-alpha) scaling (the same combination the escape-time
    // acceptance slope asserts)
    auto pe = ref1(1.0, 0.005);
    CHECK_THAT(mean_escape_constant(pe).terms[0].core / r.terms[0].core,
               Catch::Matchers::WithinRel(2.0, 1e-10));
}

TEST_CASE("exponential-scheduler bound: gamma->1 identity, monotonicity, divergence") {
    for (double alpha : {0.8, 1.0, 1.4, 1.95}) {
        auto p = NoiseProfile::uniform(2, alpha, 1.0, 0.01, 1.0, -1.0, 0.5);
        auto e1 = mean_escape_exponential(p, 1.0);
        auto c = mean_escape_constant(p);
        CHECK_THAT(e1.value, Catch::Matchers::WithinRel(c.value, 1e-12));
    }

    auto p = NoiseProfile::uniform(2, 1.4, 1.0, 0.01, 1.0, -1.0, 0.5);
    double prev = 0.0;
    for (double g : {1.0, 0.9, 0.8, 0.7, 0.6}) {
        double v = mean_escape_exponential(p, g).value;
        CHECK(v >= prev);
        prev = v;
    }

    auto pdiv = NoiseProfile::uniform(2, 1.95, 1.0, 0.01, 1.0, -1.0, 0.5);
    CHECK(mean_escape_exponential(pdiv, 0.05).value >
          1e3 * mean_escape_exponential(pdiv, 1.0).value);

    // derivation-variant exponent is exposed and differs for gamma < 1
    CHECK(mean_escape_exponential(p, 0.7, ExponentVariant::derivation).value !=
          mean_escape_exponential(p, 0.7, ExponentVariant::main).value);
    CHECK_THAT(mean_escape_exponential(p, 1.0, ExponentVariant::derivation).value,
               Catch::Matchers::WithinRel(mean_escape_exponential(p, 1.0).value, 1e-12));
}

TEST_CASE("multistep mean escape: single-stage reduction, decay penalty, stage oracle") {
    auto p = ref1(1.3, 0.05);
    auto single = mean_escape_multistep(p, SchedulerSpec::multistep({{0.0, 1.0}}));
    auto constant = mean_escape_constant(p);
    CHECK_THAT(single.terms[0].core, Catch::Matchers::WithinRel(constant.terms[0].core, 1e-9));

    auto two = mean_escape_multistep(p, SchedulerSpec::multistep({{0.0, 1.0}, {50.0, 0.1}}));
    CHECK(two.terms[0].core > single.terms[0].core);

    // independent evaluation of one stage by quadrature of m Phi t e^(-C t)
    {
        auto sched = SchedulerSpec::multistep({{0.0, 1.0}, {40.0, 0.02}});
        double al = p.alpha[0], bl = p.beta_bar[0], bs = p.beta_S;
        double m_phi = p.m_bar[0] * p.phi[0];
        double oracle = 0.0;
        for (std::size_t st = 0; st < 2; ++st) {
            double gp = sched.stages[st].second;
            double tp = sched.stages[st].first;
            double tq = st == 0 ? 40.0 : 4000.0;  // truncation far into the exp decay
            double nu_nn = std::pow(gp, p.alpha_nu - 1.0) * p.m_nu * p.phi_nu / p.beta_nu;
            double share = (bl / bs) * std::pow(gp, p.rho * (al - p.alpha_nu));
            double ctil = share *
                          (std::pow(gp, al - 1.0) * m_phi -
                           std::pow(gp, p.rho * (al - 1.0)) * bl) /
                          (nu_nn + share * (1.0 - nu_nn));
            double c = bl * std::pow(gp, p.rho * (al - 1.0)) + ctil;
            double weight = std::pow(gp, al * (1.0 - p.rho) - 1.0 + p.rho * p.alpha_nu);
            auto f = [c](long double t) {
                return static_cast<double>(t) * std::exp(-c * static_cast<double>(t));
            };
            oracle += (bl / bs) * weight * m_phi *
                      static_cast<double>(simpson_adaptive(f, tp, tq, 1e-8L));
        }
        auto ours = mean_escape_multistep(p, sched);
        CHECK_THAT(ours.terms[0].core, Catch::Matchers::WithinRel(oracle, 1e-9));
    }
}

TEST_CASE("exit direction: symmetry, heavy-tail dominance, ratio consistency") {
    auto sym = NoiseProfile::uniform(2, 1.3, 1.0, 0.05, 1.0, -1.0, 0.5);
    CHECK_THAT(exit_direction_prob(sym, 0, 0.9).value,
               Catch::Matchers::WithinRel(exit_direction_prob(sym, 1, 0.9).value, 1e-12));

    auto mix = NoiseProfile::make({0.8, 1.6}, {1.0, 1.0}, {0.05, 0.05}, {1.0, 1.0},
                                  {-1.0, -1.0}, 0.5);
    auto b0 = exit_direction_prob(mix, 0, 0.9);
    auto b1 = exit_direction_prob(mix, 1, 0.9);
    CHECK(b0.value > b1.value);
    CHECK_THAT(b0.value / b1.value,
               Catch::Matchers::WithinRel(exit_direction_ratio(mix, 0, 1), 1e-9));

    // argmax is invariant under uniform lambda scaling
    auto scaled = NoiseProfile::make({0.8, 1.6}, {3.0, 3.0}, {0.05, 0.05}, {1.0, 1.0},
                                     {-1.0, -1.0}, 0.5);
    CHECK(exit_direction_prob(scaled, 0, 0.9).value > exit_direction_prob(scaled, 1, 0.9).value);
}

TEST_CASE("exit direction ratio: closed form and exact power law in eps") {
    auto same = NoiseProfile::uniform(2, 1.2, 1.0, 0.03, 1.0, -1.0, 0.5);
    CHECK_THAT(exit_direction_ratio(same, 0, 1), Catch::Matchers::WithinRel(1.0, 1e-12));

    auto mk = [](double eps) {
        return NoiseProfile::make({1.0, 1.5}, {1.0, 1.0}, {eps, eps}, {1.0, 1.0},
                                  {-1.0, -1.0}, 0.5);
    };
    CHECK_THAT(exit_direction_ratio(mk(0.01), 0, 1),
               Catch::Matchers::WithinRel(std::pow(0.01, -0.25), 1e-10));
    double slope = (std::log(exit_direction_ratio(mk(0.01), 0, 1)) -
                    std::log(exit_direction_ratio(mk(0.1), 0, 1))) /
                   (std::log(0.01) - std::log(0.1));
    CHECK_THAT(slope, Catch::Matchers::WithinAbs((1.0 - 1.5) * (1.0 - 0.5), 1e-10));
}

TEST_CASE("survival bound: corollary form at gamma=1 and monotonicity") {
    auto p = ref1(1.2, 0.1);  // m Phi = 0.10512
    double m_phi = p.m_bar[0] * p.phi[0];
    CHECK_THAT(m_phi, Catch::Matchers::WithinAbs(0.10512, 1e-4));
    auto s = survival_prob(p, 10.0, 1.0);
    CHECK_THAT(s.terms[0].core, Catch::Matchers::WithinRel(std::exp(-10.0 * m_phi), 1e-9));
    // u -> 0+: the core sum approaches sum beta_l / beta_S = 1
    CHECK_THAT(survival_prob(p, 1e-12, 1.0).terms[0].core,
               Catch::Matchers::WithinRel(1.0, 1e-6));
    CHECK(survival_prob(p, 5.0, 0.85).value >= survival_prob(p, 50.0, 0.85).value);

    // gamma < 1 evaluator against direct quadrature of the tail integrand:
    // survival core = (beta_l/beta_S) g m Phi int_u^inf t^(g-1+(kappa-1)g)... ;
    // instead verify through the incomplete-gamma identity by substitution
    double gamma = 0.8;
    double g = 1.0 + (gamma - 1.0) * (p.alpha[0] - 1.0);
    double kappa = (1.0 + (gamma - 1.0) * (p.alpha[0] - 1.0)) / g;  // alpha_nu = alpha_l here
    double x = m_phi * std::pow(7.0, g);
    double expected = (p.beta_bar[0] * m_phi) / (p.beta_S * g * std::pow(m_phi, kappa)) *
                      upper_gamma_oracle(kappa, x);
    CHECK_THAT(survival_prob(p, 7.0, gamma).terms[0].core,
               Catch::Matchers::WithinRel(expected, 1e-9));
}

TEST_CASE("trapping bound, exponential scheduler: oracle, continuity, vanishing escape mass") {
    auto p = ref1(1.2, 0.05);
    double gamma = 0.8;
    double m_phi = p.m_bar[0] * p.phi[0];
    double b = 2.0 * p.beta_bar[0] - m_phi;
    REQUIRE(b > 0.0);
    double a_exp = (gamma - 1.0) * (p.alpha[0] - 1.0 + p.rho * (p.alpha_nu - 1.0));
    double c = (gamma - 1.0) * p.rho * (p.alpha[0] - 1.0) + 1.0;
    // independent oracle: quadrature of int_0^inf t^a e^(-b t^c) dt
    auto f = [&](long double t) {
        double td = static_cast<double>(t);
        return std::pow(td, a_exp) * std::exp(-b * std::pow(td, c));
    };
    double integral = static_cast<double>(simpson_adaptive(f, 1e-12L, 400.0L, 1e-12L));
    double a2 = (p.beta_bar[0] / p.beta_S) * (1.0 - p.m_nu * p.phi_nu / p.beta_nu);
    double oracle = (m_phi / p.beta_S) * integral / a2;
    CHECK_THAT(trapping_prob_exponential(p, gamma).value,
               Catch::Matchers::WithinRel(oracle, 1e-9));

    double v1 = trapping_prob_exponential(p, 0.999).value;
    double v2 = trapping_prob_exponential(p, 0.9999).value;
    CHECK(std::fabs(v1 - v2) < 0.01 * std::fabs(v2));

    auto wide = ref1(1.2, 0.05, 1.0, 1e9);
    CHECK(trapping_prob_exponential(wide, 0.8).value <
          1e-6 * trapping_prob_exponential(p, 0.8).value);
}

TEST_CASE("trapping bound, multistep scheduler") {
    auto p = ref1(1.2, 0.05);
    double m_phi = p.m_bar[0] * p.phi[0];
    double b = 2.0 * p.beta_bar[0] - m_phi;
    double a2 = (p.beta_bar[0] / p.beta_S) * (1.0 - p.m_nu * p.phi_nu / p.beta_nu);
    // single trivial stage: closed value (m Phi / beta_S) / b / A2
    auto single = trapping_prob_multistep(p, SchedulerSpec::multistep({{0.0, 1.0}}));
    CHECK_THAT(single.value, Catch::Matchers::WithinRel((m_phi / p.beta_S) / b / a2, 1e-9));
    // matches the gamma -> 1 limit of the exponential-scheduler form
    CHECK_THAT(single.value,
               Catch::Matchers::WithinRel(trapping_prob_exponential(p, 1.0 - 1e-9).value, 1e-4));

    // additivity: appending a stage only changes the trailing contribution
    auto two = trapping_prob_multistep(p, SchedulerSpec::multistep({{0.0, 1.0}, {30.0, 0.4}}));
    double gp = 0.4;
    double rate2 = b * std::pow(gp, p.rho * (p.alpha[0] - 1.0));
    double w2 = std::pow(gp, p.rho * (1.0 - p.alpha_nu) + p.alpha[0] - 1.0);
    double head = (m_phi / p.beta_S) * (1.0 - std::exp(-b * 30.0)) / b / a2;
    double tail = (m_phi / p.beta_S) * w2 * std::exp(-rate2 * 30.0) / rate2 / a2;
    CHECK_THAT(two.value, Catch::Matchers::WithinRel(head + tail, 1e-12));

    // m Phi -> 0 kills the bound
    auto quiet = ref1(1.2, 0.05, 1e-9);
    CHECK(trapping_prob_multistep(quiet, SchedulerSpec::multistep({{0.0, 1.0}})).value < 1e-8);
}

TEST_CASE("between-jump second moment: degenerate cases") {
    auto p = NoiseProfile::make({1.5, 1.5}, {1.0, 1.0}, {1e-10, 1e-10}, {1.0, 1.0},
                                {-1.0, -1.0}, 0.5);
    std::vector<double> h = {1.0, 4.0};
    Vec w0 = {0.4, 0.6};
    // vanishing noise scale: the deterministic product survives alone
    CHECK_THAT(lemma2_moment(p, h, w0, 0, 1, 0.7),
               Catch::Matchers::WithinRel(0.4 * 0.6 * std::exp(-5.0 * 0.7), 1e-6));
    // t = 0 is the initial condition
    auto pn = NoiseProfile::make({1.3, 1.7}, {1.0, 1.0}, {0.01, 0.01}, {1.0, 1.0},
                                 {-1.0, -1.0}, 0.5);
    CHECK_THAT(lemma2_moment(pn, h, w0, 0, 1, 0.0), Catch::Matchers::WithinAbs(0.24, 1e-12));
    // alpha = 1 limit is ln(eps^-rho), approached smoothly from alpha != 1
    auto p1 = NoiseProfile::uniform(2, 1.0, 1.0, 0.01, 1.0, -1.0, 0.5);
    auto p1eps = NoiseProfile::uniform(2, 1.0 + 1e-7, 1.0, 0.01, 1.0, -1.0, 0.5);
    CHECK_THAT(lemma2_moment(p1, h, w0, 0, 1, 0.5),
               Catch::Matchers::WithinRel(lemma2_moment(p1eps, h, w0, 0, 1, 0.5), 1e-5));
}

TEST_CASE("covariance row sums: centering identities") {
    CovRowsumInput in;
    in.gradients = {{1.0, 2.0, -1.0}, {0.5, -1.0, 2.0}, {-0.3, 0.7, 1.1}};
    // identical per-sample Hessians: the Hessian term must vanish entirely
    Mat h = {{2.0, 0.1, 0.0}, {0.1, 1.0, 0.2}, {0.0, 0.2, 3.0}};
    in.hessians = {h, h, h};
    in.batch = 2.0;
    in.w0 = {0.3, -0.2, 0.5};
    in.h_diag = {2.0, 1.0, 3.0};
    in.t = 0.4;
    auto p = NoiseProfile::uniform(3, 1.4, 1.0, 0.05, 1.0, -1.0, 0.5);
    auto rows = covariance_rowsum(in, p);

    // direct computation of the gradient-product term alone
    for (std::size_t l = 0; l < 3; ++l) {
        double expect = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            double u = 0.0, gl = 0.0, gj = 0.0;
            for (const auto& g : in.gradients) {
                u += g[l] * g[j] / 3.0;
                gl += g[l] / 3.0;
                gj += g[j] / 3.0;
            }
            expect += u - gl * gj;
        }
        expect /= in.batch * 3.0;
        CHECK_THAT(rows[l], Catch::Matchers::WithinAbs(expect, 1e-12));
    }

    // one data sample: no sampling noise at all
    CovRowsumInput solo;
    solo.gradients = {{1.0, -2.0}};
    solo.hessians = {{{1.0, 0.0}, {0.0, 2.0}}};
    solo.batch = 1.0;
    auto p2 = NoiseProfile::uniform(2, 1.4, 1.0, 0.05, 1.0, -1.0, 0.5);
    auto r2 = covariance_rowsum(solo, p2);
    CHECK_THAT(r2[0], Catch::Matchers::WithinAbs(0.0, 1e-14));
    CHECK_THAT(r2[1], Catch::Matchers::WithinAbs(0.0, 1e-14));
}
