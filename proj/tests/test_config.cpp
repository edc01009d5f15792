#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "elearn/config.hpp"
#include "elearn/errors.hpp"
#include "oracles.hpp"

using namespace elearn;

namespace {

std::string write_temp(const std::string& body) {
    const std::string path = "test_config_tmp.cfg";
    std::ofstream os(path);
    os << body;
    return path;
}

}  // namespace

TEST_CASE("default configuration resolves to the reference calibration") {
    const ExperimentConfig cfg;
    const StructuralParams p = cfg.structural();
    CHECK(kappa(p.learning) == doctest::Approx(0.505).epsilon(1e-12));
    CHECK(private_return(p, 0) == doctest::Approx(0.198).epsilon(1e-9));
    CHECK(social_return(p, 0) == doctest::Approx(0.055).epsilon(1e-12));
    const ConditionalPrior cp = conditional_prior(p, Regime::hidden);
    CHECK(cp.slope_s - p.delta_as == doctest::Approx(0.143).epsilon(1e-9));
    CHECK(cp.residual_var == doctest::Approx(p.learning.sigma0_sq).epsilon(1e-9));
}

TEST_CASE("map round trip preserves every field") {
    ExperimentConfig cfg;
    cfg.beta_ws = 0.037;
    cfg.lambda_slope = 0.01;
    cfg.regime = RegimeMode::partial;
    cfg.rho = 0.3;
    cfg.z_mode = ZMode::independent;
    cfg.covariate_region = true;
    cfg.fit_mode = FitMode::joint;
    cfg.inverse_variance_weights = true;
    cfg.n_reps = 7;
    cfg.seed = 99;
    const ExperimentConfig back = ExperimentConfig::from_map(cfg.to_map());
    CHECK(back.to_map() == cfg.to_map());
    CHECK(back.serialize() == cfg.serialize());
    CHECK(back.hash() == cfg.hash());
}

TEST_CASE("file parsing") {
    SUBCASE("comments, blanks, and spacing are tolerated") {
        const auto path = write_temp(
            "# comment\n"
            "\n"
            "simulation.n_workers = 123\n"
            "  structural.beta_ws=0.05  \n"
            "estimation.covariates = cohort, region\n");
        const ExperimentConfig cfg = ExperimentConfig::from_file(path);
        CHECK(cfg.n_workers == 123);
        CHECK(cfg.beta_ws == doctest::Approx(0.05));
        CHECK(cfg.covariate_cohort);
        CHECK(cfg.covariate_region);
        std::remove(path.c_str());
    }
    SUBCASE("duplicate keys are rejected") {
        const auto path = write_temp("simulation.seed = 1\nsimulation.seed = 2\n");
        CHECK_THROWS_AS(ExperimentConfig::from_file(path), ConfigError);
        std::remove(path.c_str());
    }
    SUBCASE("missing separator is rejected") {
        const auto path = write_temp("simulation.seed 1\n");
        CHECK_THROWS_AS(ExperimentConfig::from_file(path), ConfigError);
        std::remove(path.c_str());
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(ExperimentConfig::from_file("no/such/file.cfg"), ConfigError);
    }
}

TEST_CASE("strict key and value validation") {
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"simulation.n_worker", "10"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"structural.beta_ws", "abc"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"simulation.regime", "opaque"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"estimation.fit", "bayes"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"estimation.covariates", "municipality"}}),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"replication.n_reps", "0"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"estimation.kappa_grid", "2"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_map({{"simulation.horizon", "-1"}}), ConfigError);
    CHECK_NOTHROW(ExperimentConfig::from_map({{"structural.var_atilde", "auto"}}));
    CHECK_NOTHROW(ExperimentConfig::from_map({{"structural.sigma0_sq", "auto"}}));
}

TEST_CASE("derived parameter overrides") {
    SUBCASE("explicit sigma0 wins over kappa_true") {
        ExperimentConfig cfg = ExperimentConfig::from_map(
            {{"structural.sigma0_sq", "0.02"}, {"structural.kappa_true", "0.9"}});
        CHECK(cfg.structural().learning.sigma0_sq == doctest::Approx(0.02));
    }
    SUBCASE("inconsistent explicit var_atilde is rejected downstream") {
        ExperimentConfig cfg = ExperimentConfig::from_map({{"structural.var_atilde", "0.9"}});
        CHECK_THROWS_AS(cfg.structural(), InvalidParameter);
    }
    SUBCASE("kappa_true out of range") {
        ExperimentConfig cfg = ExperimentConfig::from_map({{"structural.kappa_true", "1.0"}});
        CHECK_THROWS_AS(cfg.structural(), ConfigError);
    }
    SUBCASE("lambda slope produces linear prices") {
        ExperimentConfig cfg;
        cfg.horizon = 4;
        cfg.lambda_slope = 0.02;
        const StructuralParams p = cfg.structural();
        CHECK(p.skill_prices.at(4) == doctest::Approx(1.08).epsilon(1e-12));
    }
}

TEST_CASE("hash covers everything except the parallelism hint") {
    const ExperimentConfig base;
    ExperimentConfig jobs = base;
    jobs.jobs = 8;
    CHECK(jobs.hash() == base.hash());
    ExperimentConfig seeded = base;
    seeded.seed = 2;
    CHECK(seeded.hash() != base.hash());
    ExperimentConfig tweaked = base;
    tweaked.kappa_true = 0.532;
    CHECK(tweaked.hash() != base.hash());
    CHECK(base.hash().size() == 16);
}

TEST_CASE("serialized form is sorted and stable") {
    const ExperimentConfig cfg;
    const std::string s = cfg.serialize();
    CHECK(s.rfind("analysis.baseline_wage_csv", 0) == 0);  // lexicographically first key
    CHECK(s.find("analysis.career_length = 40\n") != std::string::npos);
    CHECK(s.find("structural.kappa_true = 0.505") != std::string::npos);
    CHECK(s.find("replication.jobs = 1") != std::string::npos);
}
