#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "elearn/estimate.hpp"
#include "elearn/model_core.hpp"
#include "elearn/simulate.hpp"

namespace elearn {

enum class FitMode { mixing, sequential, joint };

// Flat dotted-key configuration with strict validation: unknown keys are
// rejected before any work happens. Defaults describe a constant-price
// generating process with a 0.237 first stage, kappa = 0.505, initial return
// 0.198 and limit return 0.055.
struct ExperimentConfig {
    // structural.*
    double beta_ws = 0.04;
    double beta_wq = 0.0;
    double delta_as = 0.015;
    double delta_qs = 0.0;
    double delta_ad = 0.0;
    double school_intercept = 12.0;
    double first_stage = 0.237;
    double sigma_v_sq = 1.0;
    double treat_share = 0.5;
    double adjustment_gap = 0.143;     // phi_{A|S} - delta_as; sets cov_v_atilde unless overridden
    double cov_v_atilde = -1.0;        // <0 = derive from adjustment_gap
    double var_atilde = -1.0;          // <0 = derive from sigma0_sq (consistent_var_atilde)
    double var_qtilde = 1.0;
    double sigma0_sq = -1.0;           // <0 = derive from kappa_true
    double kappa_true = 0.505;
    double sigma_eps_sq = 0.01;
    double lambda_slope = 0.0;         // lambda_t = 1 + slope*t
    bool include_variance_term = false;

    // simulation.*
    std::size_t n_workers = 200000;
    int horizon = 30;
    RegimeMode regime = RegimeMode::hidden;
    double rho = 0.0;
    std::uint64_t seed = 1;
    bool quality_violation = false;
    ZMode z_mode = ZMode::off;
    double z_noise_sd = 0.5;
    int n_cohorts = 4;
    int n_regions = 5;
    double cohort_wage_shift = 0.0;
    double region_school_shift = 0.0;

    // estimation.*
    std::size_t bootstrap_resamples = 0;
    std::uint64_t bootstrap_seed = 12345;
    bool inverse_variance_weights = false;
    int kappa_grid = 2001;
    bool covariate_cohort = false;
    bool covariate_region = false;
    FitMode fit_mode = FitMode::mixing;

    // analysis.*
    int career_length = 40;
    std::string baseline_wage_csv;

    // replication.*
    std::size_t n_reps = 1;
    int jobs = 1;
    int interval_grid = 401;  // kappa grid for bootstrap interval refits

    static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);
    static ExperimentConfig from_file(const std::string& path);
    std::map<std::string, std::string> to_map() const;
    std::string serialize() const;  // sorted key=value lines
    std::string hash() const;       // FNV-1a over serialize()

    StructuralParams structural() const;  // resolves derived fields
    SimulationConfig simulation() const;
    CovariateSpec covariates() const { return {covariate_cohort, covariate_region}; }
    FitOptions fit_options() const { return {kappa_grid, inverse_variance_weights}; }
};

}  // namespace elearn
