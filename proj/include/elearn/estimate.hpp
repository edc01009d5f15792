#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elearn/model_core.hpp"
#include "elearn/panel.hpp"
#include "elearn/simulate.hpp"

namespace elearn {

// Group-id columns to partial out via within-group demeaning of the outcome,
// schooling, and instrument (Frisch–Waugh–Lovell on saturated dummies).
struct CovariateSpec {
    bool cohort = false;
    bool region = false;

    bool any() const { return cohort || region; }
};

struct FirstStageResult {
    double kappa_hat = 0.0;
    double se = 0.0;
    double F = 0.0;
    std::size_t n = 0;
};

struct ExperienceEstimate {
    int t = 0;
    double b_hat = 0.0;
    double se = 0.0;
    std::size_t n_t = 0;
    bool ok = true;  // false when this period's estimate failed (flagged gap)
};

enum class EstimatorTag { hidden_iv, transparent_iv, partial_iv, ols, wols, late };

struct ExperienceEstimates {
    EstimatorTag tag = EstimatorTag::hidden_iv;
    std::vector<ExperienceEstimate> records;
    FirstStageResult first_stage;
    std::vector<std::vector<double>> bootstrap_profiles;  // [resample][t], when bootstrapped

    std::vector<double> b() const;
    std::vector<int> ts() const;
};

struct MixingFit {
    double b0 = 0.0;
    double b_inf = 0.0;
    double kappa_hat = 0.0;
    std::vector<double> lambda_profile;  // fixed input or jointly estimated
    double rss = 0.0;
    bool identified = true;
};

struct FitOptions {
    int kappa_grid = 2001;
    bool inverse_variance_weights = false;
};

struct WolsResult {
    std::vector<int> margins;            // schooling years s in (s_min, s_max]
    std::vector<double> weights;         // pi_s per margin
    std::vector<double> b_wols;          // per t
    std::vector<double> c_wols;          // per t, empty without Z
    std::vector<std::vector<double>> gamma1;  // [t][margin]
    std::vector<std::vector<double>> gamma2;  // [t][margin], empty without Z
    bool merged_margins = false;
};

struct SpeedFit {
    double kappa_hat = 0.0;
    double x0 = 0.0;   // initial coefficient
    double x_inf = 0.0;
    double rss = 0.0;
    bool identified = true;
};

struct OlsPaths {
    std::vector<int> ts;
    std::vector<double> b_ols;
    std::vector<double> c_ols;  // empty without Z
    SpeedFit fit_b;
    SpeedFit fit_c;
    double kappa_common = 0.0;
    double rss_common = 0.0;
    bool common_identified = true;
};

enum class PartialMode { bounds_only, point_id_with_hidden, point_id_with_transparent };

struct PartialIdResult {
    std::vector<double> lower_bounds;  // per-t
    double rho_scaled_gap = 0.0;       // rho * (b0_hidden - b0_transparent)
    double kappa_hat = 0.0;
    double b0 = 0.0;
    double b_inf = 0.0;
    PartialMode mode = PartialMode::bounds_only;
    bool identified = true;
};

struct LateFit {
    std::vector<double> late;  // per-t estimates the fit used
    double Upsilon = 0.0;
    double Upsilon_gap = 0.0;  // Upsilon_1 - Upsilon_0
    double kappa_hat = 0.0;
    std::vector<double> theta_path;
    std::vector<double> lambda_profile;
    bool identified = true;
};

struct FlatnessTest {
    double stat = 0.0;
    int dof = 0;
    double critical_5pct = 0.0;
    double p_value = 1.0;
    bool reject_5pct = false;
};

// ---- per-experience estimation ----

FirstStageResult first_stage(const Panel& panel, const CovariateSpec& covariates);

double wald_at(const Panel& panel, int t, const CovariateSpec& covariates);

struct ProfileOptions {
    CovariateSpec covariates;
    std::size_t bootstrap_resamples = 200;
    std::uint64_t bootstrap_seed = 12345;
    bool use_ols = false;  // OLS of wage on schooling instead of Wald
};

ExperienceEstimates experience_profile(const Panel& panel, const ProfileOptions& opts);

// Joint Wald test that b_t - b_0 = 0 for all t >= 1, with the covariance of
// the per-t Wald estimates built from per-worker influence functions.
FlatnessTest flatness_test(const Panel& panel, const CovariateSpec& covariates);

// ---- mixing fits ----

MixingFit fit_mixing(const ExperienceEstimates& estimates,
                     const std::vector<double>& lambda_profile, const FitOptions& opts = {});

struct SequentialFitResult {
    std::vector<double> lambda_profile;
    MixingFit fit;
};

SequentialFitResult sequential_fit(const ExperienceEstimates& transparent_estimates,
                                   const ExperienceEstimates& hidden_estimates,
                                   const FitOptions& opts = {});

struct JointFitResult {
    MixingFit fit;
    std::vector<double> lambda_profile;
    double delta_transparent = 0.0;  // flat social return the transparent profile identifies
    int iterations = 0;
};

JointFitResult joint_fit(const ExperienceEstimates& hidden_estimates,
                         const ExperienceEstimates& transparent_estimates,
                         const FitOptions& opts = {});

// ---- hidden-correlate OLS ----

OlsPaths ols_correlate_profile(const Panel& panel, const CovariateSpec& covariates);

void ols_speed_fit(OlsPaths& paths, const FitOptions& opts = {});

// ---- margin reweighting ----

struct MarginWeights {
    std::vector<int> margins;  // s in (s_min, s_max]
    std::vector<double> weights;
};

MarginWeights iv_margin_weights(const Panel& panel);

WolsResult weighted_ols_profile(const Panel& panel, const MarginWeights& weights,
                                const CovariateSpec& covariates);

// ---- partial transparency ----

PartialIdResult partial_bounds(const ExperienceEstimates& partial_estimates,
                               const FitOptions& opts = {});

PartialIdResult partial_point_id(const ExperienceEstimates& hidden_estimates,
                                 const ExperienceEstimates& partial_estimates,
                                 const FitOptions& opts = {});

// ---- complier LATE ----

ExperienceEstimates late_profile(const HPanel& hpanel);

LateFit late_learning_fit(const ExperienceEstimates& profile,
                          const std::optional<ExperienceEstimates>& transparent_profile = {},
                          const FitOptions& opts = {});

// ---- serialization ----

void write_estimates_csv(const std::vector<ExperienceEstimates>& all, std::ostream& os,
                         const std::string& header_comment = "");
std::map<std::string, std::string> fit_summary(const MixingFit& fit, const std::string& mode);

// Upper 5% critical value and survival function of chi-squared.
double chi_squared_critical_5pct(int dof);
double chi_squared_sf(double x, int dof);

}  // namespace elearn
