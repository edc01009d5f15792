#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace elearn {

// Closed forms of the employer-learning wage model. Everything here is a
// pure function of its inputs; the simulator and the estimators are both
// tested against these.

struct LearningParams {
    double sigma0_sq = 0.0;     // prior ability variance
    double sigma_eps_sq = 1.0;  // transitory output noise variance
};

// speed of learning, sigma0^2 / (sigma0^2 + sigma_eps^2), in [0,1)
double kappa(double sigma0_sq, double sigma_eps_sq);
inline double kappa(const LearningParams& lp) { return kappa(lp.sigma0_sq, lp.sigma_eps_sq); }

// weight on the initial signal after t output observations
double theta(double kappa, int t);

// posterior mean of ability given the initial prior and t accumulated signals
double posterior_ability(double prior_mean, std::optional<double> signal_mean, int t,
                         double kappa);

// posterior variance of ability after t signals, (1/sigma0^2 + t/sigma_eps^2)^-1
double posterior_variance(const LearningParams& lp, int t);

// wage variance term v_t = lambda_t^2 * (posterior variance + sigma_eps^2)
double wage_variance_term(const LearningParams& lp, double lambda_t, int t);

// Per-experience skill prices lambda_t, t = 0..T, normalized lambda_0 = 1.
struct SkillPriceProfile {
    std::vector<double> lambdas;

    static SkillPriceProfile constant(int horizon);
    static SkillPriceProfile linear(int horizon, double slope);  // 1 + slope*t
    int horizon() const { return static_cast<int>(lambdas.size()) - 1; }
    double at(int t) const;
    void validate() const;
};

// Common experience effects H(t); the v_t/2 term is added on top when
// include_variance_term is set.
struct ExperienceBaseline {
    std::vector<double> h;
    bool include_variance_term = false;

    static ExperienceBaseline zero(int horizon);
    double at(int t) const;
};

struct SchoolingEquation {
    double intercept = 12.0;      // o
    double first_stage = 0.237;   // effect of D on schooling years
    double sigma_v_sq = 1.0;      // selection residual variance
    double treat_share = 0.5;     // p = Pr(D = 1)
};

struct StructuralParams {
    double beta_ws = 0.04;    // partial productivity effect of schooling
    double beta_wq = 0.0;     // partial effect of employer-observed correlate Q; 0 disables Q
    double delta_as = 0.015;  // causal effect of schooling on ability
    double delta_qs = 0.0;    // causal effect of schooling on Q
    double delta_ad = 0.0;    // causal effect of the instrument on ability (exclusion violation)
    SchoolingEquation schooling_eq;
    double cov_v_atilde = 0.0;
    double var_atilde = 1.0;
    double var_qtilde = 1.0;  // residual variance of Q around its schooling projection
    LearningParams learning;
    SkillPriceProfile skill_prices;
    ExperienceBaseline baseline;

    bool q_enabled() const { return beta_wq != 0.0; }
    int horizon() const { return skill_prices.horizon(); }
    // Throws InvalidParameter on a non-PSD (v, A-tilde) covariance, kappa_fs = 0,
    // p outside (0,1), or sigma0_sq inconsistent with Var(A | S [, Q]).
    void validate() const;
};

enum class Regime { hidden, transparent };

// Employer prior E[A | conditioning set] as a linear function of the
// conditioning variables, plus the residual variance of that projection.
struct ConditionalPrior {
    double intercept = 0.0;
    double slope_s = 0.0;  // phi_{A|S}
    double slope_q = 0.0;  // phi_{A|Q}, 0 when Q disabled
    double slope_d = 0.0;  // 0 under the hidden regime
    double residual_var = 0.0;

    double mean(double s, double q = 0.0, double d = 0.0) const {
        return intercept + slope_s * s + slope_q * q + slope_d * d;
    }
};

// Projection coefficients implied by the structural covariance. Under the
// transparent regime the prior conditions additionally on D.
ConditionalPrior conditional_prior(const StructuralParams& params, Regime regime);

// Value of var_atilde that makes Var(A | S [, Q]) equal learning.sigma0_sq.
double consistent_var_atilde(const StructuralParams& params);

// Unconditional Var(A) implied by the structural covariance.
double ability_variance(const StructuralParams& params);

// lambda_t * (beta_ws*S + beta_wq*Q + A + eps) + H(t)
double log_productivity(double s, double a, double q, double eps, int t,
                        const StructuralParams& params);

double social_return(const StructuralParams& params, int t);
double private_return(const StructuralParams& params, int t);

struct ReturnsRecord {
    int t;
    double social;
    double private_;
    double signaling_gap;
    double theta;
};

struct ReturnsDecomposition {
    std::vector<ReturnsRecord> records;
};

ReturnsDecomposition returns_decomposition(const StructuralParams& params);

// Wage setter with the regime-specific prior and effective speed of learning
// resolved once; log_wage applies the Kalman mixture per (worker, t).
class WageSetter {
  public:
    WageSetter(const StructuralParams& params, Regime regime);

    double log_wage(double s, double q, double d, std::span<const double> signal_history,
                    int t) const;

    const ConditionalPrior& prior() const { return prior_; }
    double effective_kappa() const { return kappa_; }

  private:
    const StructuralParams& params_;
    Regime regime_;
    ConditionalPrior prior_;
    double kappa_;
};

// Convenience wrapper matching the one-shot operation contract.
double log_wage(double s, double q, double d, std::span<const double> signal_history, int t,
                const StructuralParams& params, Regime regime);

}  // namespace elearn
