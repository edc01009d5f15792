#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "elearn/errors.hpp"
#include "elearn/model_core.hpp"
#include "oracles.hpp"

using namespace elearn;

TEST_CASE("kappa basics") {
    CHECK(kappa(1.0, 1.0) == doctest::Approx(0.5));
    CHECK(kappa(0.0, 1.0) == doctest::Approx(0.0));
    CHECK(kappa(1.0202, 1.0) == doctest::Approx(0.505).epsilon(1e-4));
    CHECK_THROWS_AS(kappa(1.0, 0.0), InvalidParameter);
    CHECK_THROWS_AS(kappa(-0.1, 1.0), InvalidParameter);
}

TEST_CASE("theta reference values and shape") {
    CHECK(theta(0.505, 5) == doctest::Approx(0.164).epsilon(0.004));
    CHECK(theta(0.505, 10) == doctest::Approx(0.089).epsilon(0.006));
    CHECK(theta(0.505, 15) == doctest::Approx(0.061).epsilon(0.009));
    CHECK(theta(0.3, 0) == 1.0);
    CHECK(theta(0.0, 0) == 1.0);
    CHECK(theta(1.0, 1) == 0.0);
    CHECK(theta(1.0, 7) == 0.0);
    CHECK_THROWS_AS(theta(0.5, -1), InvalidParameter);
    CHECK_THROWS_AS(theta(1.5, 3), InvalidParameter);
    // strictly decreasing, vanishing
    for (double k : {0.1, 0.5, 0.9}) {
        double prev = theta(k, 0);
        CHECK(prev == 1.0);
        for (int t = 1; t <= 50; ++t) {
            const double th = theta(k, t);
            CHECK(th < prev);
            prev = th;
        }
        CHECK(theta(k, 100000) < 1e-3);
    }
}

TEST_CASE("posterior_ability trivial cases") {
    CHECK(posterior_ability(0.7, {}, 0, 0.3) == doctest::Approx(0.7));
    CHECK(posterior_ability(0.7, 1.9, 1, 1.0) == doctest::Approx(1.9));
    CHECK_THROWS_AS(posterior_ability(0.7, {}, 2, 0.3), InvalidParameter);
}

TEST_CASE("posterior_ability matches joint-Gaussian conditioning") {
    std::mt19937_64 gen(991);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        const double s0 = u(gen), se = u(gen);
        const double k = kappa(s0, se);
        const int t = 1 + static_cast<int>(gen() % 10);
        const double prior = n(gen);
        const double a = prior + std::sqrt(s0) * n(gen);
        std::vector<double> signals;
        double sum = 0.0;
        for (int i = 0; i < t; ++i) {
            signals.push_back(a + std::sqrt(se) * n(gen));
            sum += signals.back();
        }
        const double got = posterior_ability(prior, sum / t, t, k);
        const double want = oracles::gaussian_posterior_mean(prior, signals, s0, se);
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("batch posterior equals sequential updating") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.05, 2.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const double s0 = u(gen), se = u(gen);
        const double k = kappa(s0, se);
        const double prior = n(gen);
        std::vector<double> signals;
        double sum = 0.0;
        for (int t = 1; t <= 50; ++t) {
            signals.push_back(n(gen) * 2.0);
            sum += signals.back();
            const double batch = posterior_ability(prior, sum / t, t, k);
            const double seq = oracles::sequential_posterior_mean(prior, signals, s0, se);
            CHECK(batch == doctest::Approx(seq).epsilon(1e-12));
        }
    }
}

TEST_CASE("posterior_variance") {
    LearningParams lp{1.0, 1.0};
    CHECK(posterior_variance(lp, 0) == doctest::Approx(1.0));
    CHECK(posterior_variance(lp, 1) == doctest::Approx(0.5));
    CHECK(posterior_variance({0.0, 2.0}, 5) == 0.0);
    CHECK(wage_variance_term(lp, 2.0, 1) == doctest::Approx(4.0 * 1.5));
}

TEST_CASE("conditional_prior no-selection case") {
    StructuralParams p = oracles::default_structure();
    p.cov_v_atilde = 0.0;
    p.var_atilde = consistent_var_atilde(p);
    const ConditionalPrior cp = conditional_prior(p, Regime::hidden);
    CHECK(cp.slope_s == doctest::Approx(0.015).epsilon(1e-10));
    CHECK(cp.slope_d == 0.0);
}

TEST_CASE("conditional_prior requires relevance under transparency") {
    StructuralParams p = oracles::default_structure();
    p.schooling_eq.first_stage = 0.0;
    CHECK_THROWS_AS(conditional_prior(p, Regime::transparent), IdentificationError);
}

TEST_CASE("conditional_prior matches sample regression of simulated draws") {
    std::mt19937_64 gen(4242);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 3; ++rep) {
        StructuralParams p;
        p.beta_ws = 0.04;
        p.delta_as = 0.01 + 0.03 * u(gen);
        p.delta_ad = 0.0;
        p.schooling_eq = {11.0, 0.2 + 0.3 * u(gen), 0.8 + 0.4 * u(gen), 0.3 + 0.4 * u(gen)};
        p.var_atilde = 0.4 + 0.4 * u(gen);
        const double max_c = std::sqrt(p.schooling_eq.sigma_v_sq * p.var_atilde);
        p.cov_v_atilde = 0.5 * max_c * u(gen);
        p.learning.sigma_eps_sq = 1.0;

        const std::size_t N = 1000000;
        std::vector<double> A(N), S(N), D(N);
        const double cond_slope = p.cov_v_atilde / p.schooling_eq.sigma_v_sq;
        const double cond_sd =
            std::sqrt(p.var_atilde - cond_slope * p.cov_v_atilde);
        for (std::size_t i = 0; i < N; ++i) {
            const double d = u(gen) < p.schooling_eq.treat_share ? 1.0 : 0.0;
            const double v = std::sqrt(p.schooling_eq.sigma_v_sq) * n(gen);
            const double at = cond_slope * v + cond_sd * n(gen);
            S[i] = p.schooling_eq.intercept + p.schooling_eq.first_stage * d + v;
            A[i] = p.delta_as * S[i] + at;
            D[i] = d;
        }
        const ConditionalPrior hid = conditional_prior(p, Regime::hidden);
        const ConditionalPrior tra = conditional_prior(p, Regime::transparent);
        auto bh = oracles::ols_slopes(A, {S});
        auto bt = oracles::ols_slopes(A, {S, D});
        // asymptotic 4-sigma bands from the population residual variance
        const double var_s = oracles::cov_raw(S, S);
        const double var_d = oracles::cov_raw(D, D);
        const double r2_sd = oracles::cov_raw(S, D) * oracles::cov_raw(S, D) / (var_s * var_d);
        const double se_s_h = std::sqrt(hid.residual_var / (var_s * N));
        const double se_s_t = std::sqrt(tra.residual_var / (var_s * (1.0 - r2_sd) * N));
        const double se_d_t = std::sqrt(tra.residual_var / (var_d * (1.0 - r2_sd) * N));
        CHECK(std::abs(bh(1) - hid.slope_s) < 4.0 * se_s_h);
        CHECK(std::abs(bt(1) - tra.slope_s) < 4.0 * se_s_t);
        CHECK(std::abs(bt(2) - tra.slope_d) < 4.0 * se_d_t);
        CHECK(hid.residual_var >= tra.residual_var - 1e-12);
    }
}

TEST_CASE("log_productivity") {
    StructuralParams p = oracles::default_structure(5);
    SUBCASE("direct substitution") {
        StructuralParams q = p;
        q.skill_prices = SkillPriceProfile{{1.0, 2.0}};
        q.beta_ws = 0.04;
        q.baseline = ExperienceBaseline{{0.0, 0.1}, false};
        CHECK(log_productivity(1.0, 0.0, 0.0, 0.0, 1, q) == doctest::Approx(0.18));
    }
    SUBCASE("identity with social-return form") {
        std::mt19937_64 gen(5);
        std::normal_distribution<double> n(0.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            const double s = 10 + n(gen), at = n(gen), eps = n(gen);
            const double a = p.delta_as * s + at;
            const int t = static_cast<int>(gen() % 6);
            const double lhs = log_productivity(s, a, 0.0, eps, t, p);
            const double rhs = social_return(p, t) * s + p.skill_prices.at(t) * (at + eps) +
                               p.baseline.at(t);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(log_productivity(1, 0, 0, 0, 99, p), InvalidParameter);
}

TEST_CASE("log_wage basics") {
    StructuralParams p = oracles::default_structure(10);
    SUBCASE("t=0 depends on S only under hidden regime") {
        const double w1 = log_wage(12.0, 0.0, 1.0, {}, 0, p, Regime::hidden);
        const double w2 = log_wage(12.0, 0.0, 0.0, {}, 0, p, Regime::hidden);
        CHECK(w1 == doctest::Approx(w2).epsilon(1e-15));
    }
    SUBCASE("transparent regime prices D") {
        const double w1 = log_wage(12.0, 0.0, 1.0, {}, 0, p, Regime::transparent);
        const double w2 = log_wage(12.0, 0.0, 0.0, {}, 0, p, Regime::transparent);
        CHECK(std::abs(w1 - w2) > 1e-8);
    }
    SUBCASE("signal history length enforced") {
        std::vector<double> sig{0.1};
        CHECK_THROWS_AS(log_wage(12.0, 0.0, 0.0, std::span<const double>(sig), 2, p,
                                 Regime::hidden),
                        InvalidParameter);
    }
    SUBCASE("hidden wage invariant to D given signals") {
        std::vector<double> sig{0.2, 0.3, 0.25};
        const double w1 = log_wage(12.0, 0.0, 1.0, std::span<const double>(sig), 3, p,
                                   Regime::hidden);
        const double w2 = log_wage(12.0, 0.0, 0.0, std::span<const double>(sig), 3, p,
                                   Regime::hidden);
        CHECK(w1 == doctest::Approx(w2).epsilon(1e-15));
    }
}

TEST_CASE("log_wage converges to noise-free productivity component") {
    // large t: employer belief ~ A, so ln W ~ lambda (beta S + A)
    StructuralParams p;
    p.beta_ws = 0.04;
    p.delta_as = 0.0;
    p.schooling_eq = {12.0, 0.3, 1.0, 0.5};
    p.cov_v_atilde = 0.0;
    p.learning.sigma_eps_sq = 1.0;
    p.learning.sigma0_sq = 1.0;  // kappa = 0.5
    p.var_atilde = 1.0;
    p.skill_prices = SkillPriceProfile::constant(200);
    p.baseline = ExperienceBaseline::zero(200);
    p.validate();
    const WageSetter ws(p, Regime::hidden);
    std::mt19937_64 gen(33);
    std::normal_distribution<double> n(0.0, 1.0);
    double err = 0.0;
    const int reps = 200;
    for (int i = 0; i < reps; ++i) {
        const double s = 12.0 + n(gen);
        const double a = n(gen);
        std::vector<double> sig(200);
        for (auto& x : sig) x = a + n(gen);
        const double w = ws.log_wage(s, 0.0, 0.0, sig, 200);
        err += std::abs(w - (p.beta_ws * s + a));
    }
    CHECK(err / reps < 0.01 * 10);  // averaged |error| small (sigma_eps = 1 here)
    CHECK(err / reps < 0.2);
}

TEST_CASE("private and social returns") {
    StructuralParams p = oracles::default_structure();
    CHECK(social_return(p, 0) == doctest::Approx(0.055).epsilon(1e-12));
    CHECK(private_return(p, 0) == doctest::Approx(0.198).epsilon(1e-9));
    CHECK(private_return(p, 5) == doctest::Approx(0.055 + theta(0.505, 5) * 0.143).epsilon(1e-3));
    CHECK(private_return(p, 5) == doctest::Approx(0.0785).epsilon(0.002));
    // t large: private -> social
    StructuralParams big = oracles::default_config(200).structural();
    CHECK(private_return(big, 200) == doctest::Approx(social_return(big, 200)).epsilon(1e-2));
    SUBCASE("lambda scaling") {
        // scaling lambda_t scales both the social return and the signaling gap
        StructuralParams q = oracles::default_config(10).structural();
        StructuralParams q3 = q;
        q3.skill_prices = SkillPriceProfile{{1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0}};
        for (int t = 1; t <= 10; ++t) {
            CHECK(social_return(q3, t) == doctest::Approx(2.0 * social_return(q, t)));
            const double gap3 = private_return(q3, t) - social_return(q3, t);
            const double gap1 = private_return(q, t) - social_return(q, t);
            CHECK(gap3 == doctest::Approx(2.0 * gap1).epsilon(1e-12));
        }
    }
}

TEST_CASE("returns_decomposition internal consistency") {
    StructuralParams p = oracles::default_structure(20);
    const auto dec = returns_decomposition(p);
    REQUIRE(dec.records.size() == 21);
    const ConditionalPrior cp = conditional_prior(p, Regime::hidden);
    const double adj = cp.slope_s - p.delta_as;
    for (const auto& r : dec.records) {
        CHECK(r.signaling_gap ==
              doctest::Approx(r.theta * p.skill_prices.at(r.t) * adj).epsilon(1e-12));
        CHECK(r.private_ - r.social == doctest::Approx(r.signaling_gap).epsilon(1e-12));
    }
}

TEST_CASE("StructuralParams validation") {
    StructuralParams p = oracles::default_structure();
    CHECK_NOTHROW(p.validate());
    SUBCASE("PSD violation") {
        StructuralParams q = p;
        q.var_atilde = 1e-6;  // cov_v_atilde^2 >> sigma_v_sq * var_atilde
        CHECK_THROWS_AS(q.validate(), InvalidParameter);
    }
    SUBCASE("sigma0 consistency enforced") {
        StructuralParams q = p;
        q.var_atilde = q.var_atilde * 2.0;
        CHECK_THROWS_AS(q.validate(), InvalidParameter);
        q.var_atilde = consistent_var_atilde(q);
        CHECK_NOTHROW(q.validate());
    }
    SUBCASE("zero first stage rejected") {
        StructuralParams q = p;
        q.schooling_eq.first_stage = 0.0;
        CHECK_THROWS_AS(q.validate(), InvalidParameter);
    }
    SUBCASE("treat share bounds") {
        StructuralParams q = p;
        q.schooling_eq.treat_share = 1.0;
        CHECK_THROWS_AS(q.validate(), InvalidParameter);
    }
}

TEST_CASE("skill price profile") {
    const SkillPriceProfile unnormalized{{0.9, 1.0}};
    CHECK_THROWS_AS(unnormalized.validate(), InvalidParameter);
    const SkillPriceProfile empty{};
    CHECK_THROWS_AS(empty.validate(), InvalidParameter);
    auto lin = SkillPriceProfile::linear(5, 0.01);
    CHECK(lin.at(0) == 1.0);
    CHECK(lin.at(5) == doctest::Approx(1.05));
    CHECK_THROWS_AS(lin.at(6), InvalidParameter);
}
