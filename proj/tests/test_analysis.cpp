#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "elearn/analysis.hpp"
#include "elearn/errors.hpp"
#include "oracles.hpp"

using namespace elearn;

TEST_CASE("flat profiles make the IRR equal the flat return") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ub(-0.2, 0.6), uw(0.5, 3.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double b = ub(gen);
        IrrInput in;
        in.profile.assign(5, b);
        in.career_length = 30 + static_cast<int>(gen() % 20);
        // arbitrary baseline stream: flat-return identity must survive any Wbar
        in.baseline.resize(10);
        for (auto& w : in.baseline) w = uw(gen);
        CHECK(irr(in) == doctest::Approx(b).epsilon(1e-10));
    }
    IrrInput zero;
    zero.profile.assign(3, 0.0);
    CHECK(irr(zero) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("declining profiles land between the endpoints") {
    IrrInput in;
    for (int t = 0; t <= 30; ++t) in.profile.push_back(0.055 + theta(0.505, t) * 0.143);
    const double r = irr(in);
    CHECK(r > 0.055);
    CHECK(r < 0.198);
    // early returns dominate a 40-year discounting horizon less than late ones,
    // so the IRR sits near the limit return
    CHECK(r < 0.10);
    SUBCASE("monotonicity in the profile") {
        IrrInput hi = in;
        for (auto& b : hi.profile) b += 0.01;
        CHECK(irr(hi) > r);
    }
    SUBCASE("matches the independent scan-based root finder") {
        CHECK(r == doctest::Approx(oracles::irr_scan(in.profile, in.baseline, in.career_length))
                       .epsilon(1e-8));
    }
}

TEST_CASE("explicit limit return controls extrapolation") {
    IrrInput in;
    in.profile = {0.20, 0.15, 0.12};
    in.career_length = 40;
    const double r_last = irr(in);  // extends at 0.12
    IrrInput lo = in;
    lo.b_limit = 0.04;
    const double r_lo = irr(lo);
    CHECK(r_lo < r_last);
    CHECK(r_lo == doctest::Approx(oracles::irr_scan({0.20, 0.15, 0.12, 0.04}, {}, 40))
                      .epsilon(1e-6));
}

TEST_CASE("irr error handling") {
    SUBCASE("no sign change") {
        IrrInput in;
        in.profile.assign(4, 1.5);  // would need r > 1, outside the bracket
        CHECK_THROWS_AS(irr(in), NumericError);
    }
    SUBCASE("input validation") {
        IrrInput in;
        CHECK_THROWS_AS(in.validate(), InvalidParameter);  // empty profile
        in.profile = {0.1, 0.12, 0.14};
        in.career_length = 1;  // shorter than the estimated profile
        CHECK_THROWS_AS(in.validate(), InvalidParameter);
    }
}

TEST_CASE("signaling decomposition") {
    SUBCASE("no signaling when private equals social") {
        std::vector<double> prof(10, 0.08);
        const auto s = signaling_decomposition(prof, prof);
        CHECK(s.signaling_points == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
        CHECK(s.signaling_share == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    }
    SUBCASE("reference calibration splits the private return") {
        std::vector<double> priv, soc;
        for (int t = 0; t <= 30; ++t) {
            priv.push_back(0.055 + theta(0.505, t) * 0.143);
            soc.push_back(0.055);
        }
        const auto s = signaling_decomposition(priv, soc);
        CHECK(s.social_return == doctest::Approx(0.055).epsilon(1e-8));
        CHECK(s.private_irr == doctest::Approx(oracles::irr_scan(priv, {}, 40)).epsilon(1e-8));
        CHECK(s.signaling_points == doctest::Approx(s.private_irr - 0.055).epsilon(1e-10));
        CHECK(s.signaling_share > 0.0);
        CHECK(s.signaling_share < 1.0);
        CHECK(s.signaling_share ==
              doctest::Approx(1.0 - s.social_return / s.private_irr).epsilon(1e-10));
    }
    SUBCASE("social above private gives a negative share") {
        std::vector<double> priv(8, 0.05), soc(8, 0.07);
        const auto s = signaling_decomposition(priv, soc);
        CHECK(s.signaling_share < 0.0);
    }
    SUBCASE("zero private IRR cannot be decomposed") {
        std::vector<double> priv(8, 0.0), soc(8, 0.02);
        CHECK_THROWS_AS(signaling_decomposition(priv, soc), NumericError);
    }
}

TEST_CASE("theta tables reproduce the reference speeds") {
    const auto slow = theta_table(0.505, {5, 10, 15});
    CHECK(slow[0] == doctest::Approx(0.164).epsilon(0.003));
    CHECK(slow[1] == doctest::Approx(0.089).epsilon(0.005));
    CHECK(slow[2] == doctest::Approx(0.061).epsilon(0.007));
    const auto fast = theta_table(0.532, {5, 10, 15});
    CHECK(fast[0] == doctest::Approx(0.150).epsilon(0.004));
    CHECK(fast[1] == doctest::Approx(0.081).epsilon(0.006));
    CHECK(fast[2] == doctest::Approx(0.055).epsilon(0.008));
}

TEST_CASE("decomposition CSV output") {
    const StructuralParams p = oracles::default_structure(3);
    std::ostringstream os;
    write_decomposition_csv(returns_decomposition(p), os, "check");
    const std::string text = os.str();
    CHECK(text.find("# check") != std::string::npos);
    CHECK(text.find("t,private,social,gap,theta") != std::string::npos);
    int lines = 0;
    for (char c : text) lines += c == '\n';
    CHECK(lines == 6);  // comment + header + 4 periods
}

TEST_CASE("signaling summary document") {
    SignalingSummary s{0.09, 0.055, 0.035, 0.3889};
    const auto doc = signaling_summary_doc(s);
    CHECK(doc.count("private_irr") == 1);
    CHECK(doc.count("social_return") == 1);
    CHECK(doc.count("signaling_points") == 1);
    CHECK(doc.count("signaling_share") == 1);
}
