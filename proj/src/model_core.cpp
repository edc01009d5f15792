#include "elearn/model_core.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "elearn/errors.hpp"

namespace elearn {

double kappa(double sigma0_sq, double sigma_eps_sq) {
    if (sigma_eps_sq <= 0.0)
        throw InvalidParameter("kappa: sigma_eps_sq must be positive");
    if (sigma0_sq < 0.0)
        throw InvalidParameter("kappa: sigma0_sq must be nonnegative");
    return sigma0_sq / (sigma0_sq + sigma_eps_sq);
}

double theta(double kappa, int t) {
    if (t < 0)
        throw InvalidParameter("theta: t must be nonnegative");
    if (kappa < 0.0 || kappa > 1.0)
        throw InvalidParameter("theta: kappa must lie in [0,1]");
    if (t == 0)
        return 1.0;
    if (kappa == 1.0)
        return 0.0;
    return (1.0 - kappa) / (1.0 + (t - 1) * kappa);
}

double posterior_ability(double prior_mean, std::optional<double> signal_mean, int t,
                         double kappa) {
    if (t < 0)
        throw InvalidParameter("posterior_ability: t must be nonnegative");
    if (t == 0)
        return prior_mean;
    if (!signal_mean)
        throw InvalidParameter("posterior_ability: signal_mean required for t > 0");
    const double th = theta(kappa, t);
    return th * prior_mean + (1.0 - th) * *signal_mean;
}

double posterior_variance(const LearningParams& lp, int t) {
    if (t < 0)
        throw InvalidParameter("posterior_variance: t must be nonnegative");
    if (lp.sigma_eps_sq <= 0.0)
        throw InvalidParameter("posterior_variance: sigma_eps_sq must be positive");
    if (lp.sigma0_sq == 0.0)
        return 0.0;
    return 1.0 / (1.0 / lp.sigma0_sq + static_cast<double>(t) / lp.sigma_eps_sq);
}

double wage_variance_term(const LearningParams& lp, double lambda_t, int t) {
    return lambda_t * lambda_t * (posterior_variance(lp, t) + lp.sigma_eps_sq);
}

SkillPriceProfile SkillPriceProfile::constant(int horizon) {
    if (horizon < 0)
        throw InvalidParameter("SkillPriceProfile: horizon must be nonnegative");
    return {std::vector<double>(static_cast<std::size_t>(horizon) + 1, 1.0)};
}

SkillPriceProfile SkillPriceProfile::linear(int horizon, double slope) {
    if (horizon < 0)
        throw InvalidParameter("SkillPriceProfile: horizon must be nonnegative");
    SkillPriceProfile p;
    p.lambdas.resize(static_cast<std::size_t>(horizon) + 1);
    for (int t = 0; t <= horizon; ++t) p.lambdas[static_cast<std::size_t>(t)] = 1.0 + slope * t;
    p.validate();
    return p;
}

double SkillPriceProfile::at(int t) const {
    if (t < 0 || t > horizon())
        throw InvalidParameter("SkillPriceProfile: experience out of horizon");
    return lambdas[static_cast<std::size_t>(t)];
}

void SkillPriceProfile::validate() const {
    if (lambdas.empty())
        throw InvalidParameter("SkillPriceProfile: empty profile");
    if (std::abs(lambdas.front() - 1.0) > 1e-12)
        throw InvalidParameter("SkillPriceProfile: lambda_0 must equal 1");
    for (double l : lambdas)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw InvalidParameter("SkillPriceProfile: lambdas must be finite and nonnegative");
}

ExperienceBaseline ExperienceBaseline::zero(int horizon) {
    if (horizon < 0)
        throw InvalidParameter("ExperienceBaseline: horizon must be nonnegative");
    return {std::vector<double>(static_cast<std::size_t>(horizon) + 1, 0.0), false};
}

double ExperienceBaseline::at(int t) const {
    if (t < 0)
        throw InvalidParameter("ExperienceBaseline: t must be nonnegative");
    if (h.empty())
        return 0.0;
    if (t >= static_cast<int>(h.size()))
        throw InvalidParameter("ExperienceBaseline: experience out of horizon");
    return h[static_cast<std::size_t>(t)];
}

namespace {

// Population second moments of (S, A, Q, D) implied by the generative form
// D ~ Bernoulli(p), S = o + kappa_fs*D + v, A = delta_as*S + delta_ad*D + Atilde,
// Q = delta_qs*S + Qtilde with Qtilde independent of (v, Atilde, D).
struct Moments {
    double e_s, e_a, e_q, e_d;
    double var_s, var_d, cov_sd;
    double var_a, cov_as, cov_ad;
    double var_q, cov_qs, cov_qd, cov_aq;
};

Moments moments(const StructuralParams& p) {
    const auto& eq = p.schooling_eq;
    Moments m{};
    m.e_d = eq.treat_share;
    m.var_d = eq.treat_share * (1.0 - eq.treat_share);
    m.e_s = eq.intercept + eq.first_stage * eq.treat_share;
    m.cov_sd = eq.first_stage * m.var_d;
    m.var_s = eq.first_stage * eq.first_stage * m.var_d + eq.sigma_v_sq;
    m.cov_as = p.delta_as * m.var_s + p.delta_ad * m.cov_sd + p.cov_v_atilde;
    m.cov_ad = p.delta_as * m.cov_sd + p.delta_ad * m.var_d;
    m.e_a = p.delta_as * m.e_s + p.delta_ad * m.e_d;
    m.var_a = p.delta_as * p.delta_as * m.var_s + p.delta_ad * p.delta_ad * m.var_d +
              p.var_atilde + 2.0 * p.delta_as * p.delta_ad * m.cov_sd +
              2.0 * p.delta_as * p.cov_v_atilde;
    m.e_q = p.delta_qs * m.e_s;
    m.cov_qs = p.delta_qs * m.var_s;
    m.cov_qd = p.delta_qs * m.cov_sd;
    m.var_q = p.delta_qs * p.delta_qs * m.var_s + p.var_qtilde;
    m.cov_aq = p.delta_qs * m.cov_as;
    return m;
}

// Projection of A on the conditioning set, without parameter validation so it
// can also be used to solve for the var_atilde consistent with sigma0_sq.
ConditionalPrior project(const StructuralParams& params, Regime regime) {
    const Moments m = moments(params);
    const bool with_q = params.q_enabled();
    const bool with_d = (regime == Regime::transparent);

    int k = 1 + (with_q ? 1 : 0) + (with_d ? 1 : 0);
    Eigen::MatrixXd cov(k, k);
    Eigen::VectorXd cav(k), mu(k);
    int iq = -1, id = -1;
    cov(0, 0) = m.var_s;
    cav(0) = m.cov_as;
    mu(0) = m.e_s;
    int idx = 1;
    if (with_q) {
        iq = idx++;
        cov(iq, iq) = m.var_q;
        cov(0, iq) = cov(iq, 0) = m.cov_qs;
        cav(iq) = m.cov_aq;
        mu(iq) = m.e_q;
    }
    if (with_d) {
        id = idx++;
        cov(id, id) = m.var_d;
        cov(0, id) = cov(id, 0) = m.cov_sd;
        if (iq >= 0) cov(iq, id) = cov(id, iq) = m.cov_qd;
        cav(id) = m.cov_ad;
        mu(id) = m.e_d;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
    lu.setThreshold(1e-10);
    if (lu.rank() < k)
        throw IdentificationError("conditional_prior: singular conditioning covariance");
    Eigen::VectorXd slopes = lu.solve(cav);

    ConditionalPrior cp;
    cp.slope_s = slopes(0);
    if (iq >= 0) cp.slope_q = slopes(iq);
    if (id >= 0) cp.slope_d = slopes(id);
    cp.intercept = m.e_a - slopes.dot(mu);
    cp.residual_var = m.var_a - slopes.dot(cav);
    if (cp.residual_var < 0.0 && cp.residual_var > -1e-10) cp.residual_var = 0.0;
    return cp;
}

void check_basic(const StructuralParams& p) {
    const auto& eq = p.schooling_eq;
    if (eq.sigma_v_sq < 0.0)
        throw InvalidParameter("StructuralParams: sigma_v_sq must be nonnegative");
    if (p.var_atilde < 0.0)
        throw InvalidParameter("StructuralParams: var_atilde must be nonnegative");
    if (p.q_enabled() && p.var_qtilde < 0.0)
        throw InvalidParameter("StructuralParams: var_qtilde must be nonnegative");
    if (!(eq.treat_share > 0.0 && eq.treat_share < 1.0))
        throw InvalidParameter("StructuralParams: treat_share must lie in (0,1)");
    // PSD of the (v, Atilde) covariance block
    if (p.cov_v_atilde * p.cov_v_atilde > eq.sigma_v_sq * p.var_atilde * (1.0 + 1e-12))
        throw InvalidParameter("StructuralParams: (v, Atilde) covariance not PSD");
}

}  // namespace

ConditionalPrior conditional_prior(const StructuralParams& params, Regime regime) {
    check_basic(params);
    if (regime == Regime::transparent && params.schooling_eq.first_stage == 0.0)
        throw IdentificationError("conditional_prior: zero first stage under transparent regime");
    return project(params, regime);
}

double ability_variance(const StructuralParams& params) { return moments(params).var_a; }

double consistent_var_atilde(const StructuralParams& params) {
    // residual_var is var_atilde plus a term that does not involve var_atilde,
    // so solve Var(A | S [, Q]) = sigma0_sq by evaluating at var_atilde = 0.
    StructuralParams p = params;
    p.var_atilde = 0.0;
    const double base = project(p, Regime::hidden).residual_var;
    const double v = params.learning.sigma0_sq - base;
    if (v < 0.0)
        throw InvalidParameter(
            "consistent_var_atilde: sigma0_sq too small for the selection covariance");
    return v;
}

void StructuralParams::validate() const {
    check_basic(*this);
    if (schooling_eq.first_stage == 0.0)
        throw InvalidParameter("StructuralParams: first_stage must be nonzero");
    if (learning.sigma_eps_sq <= 0.0)
        throw InvalidParameter("StructuralParams: sigma_eps_sq must be positive");
    if (learning.sigma0_sq < 0.0)
        throw InvalidParameter("StructuralParams: sigma0_sq must be nonnegative");
    skill_prices.validate();
    if (!baseline.h.empty() && static_cast<int>(baseline.h.size()) != horizon() + 1)
        throw InvalidParameter("StructuralParams: baseline length must match horizon");
    const double rv = project(*this, Regime::hidden).residual_var;
    const double tol = 1e-6 * std::max(1.0, learning.sigma0_sq);
    if (std::abs(rv - learning.sigma0_sq) > tol)
        throw InvalidParameter(
            "StructuralParams: sigma0_sq inconsistent with Var(A | conditioning set); "
            "set var_atilde accordingly (see consistent_var_atilde)");
}

double log_productivity(double s, double a, double q, double eps, int t,
                        const StructuralParams& params) {
    const double lam = params.skill_prices.at(t);
    return lam * (params.beta_ws * s + params.beta_wq * q + a + eps) + params.baseline.at(t);
}

double social_return(const StructuralParams& params, int t) {
    const double lam = params.skill_prices.at(t);
    return lam * (params.beta_ws + params.beta_wq * params.delta_qs + params.delta_as);
}

double private_return(const StructuralParams& params, int t) {
    const ConditionalPrior cp = conditional_prior(params, Regime::hidden);
    const double th = theta(kappa(params.learning), t);
    const double lam = params.skill_prices.at(t);
    const double adj = cp.slope_s + cp.slope_q * params.delta_qs - params.delta_as;
    return social_return(params, t) + th * lam * adj;
}

ReturnsDecomposition returns_decomposition(const StructuralParams& params) {
    const ConditionalPrior cp = conditional_prior(params, Regime::hidden);
    const double k = kappa(params.learning);
    const double adj = cp.slope_s + cp.slope_q * params.delta_qs - params.delta_as;
    ReturnsDecomposition out;
    out.records.reserve(static_cast<std::size_t>(params.horizon()) + 1);
    for (int t = 0; t <= params.horizon(); ++t) {
        const double soc = social_return(params, t);
        const double gap = theta(k, t) * params.skill_prices.at(t) * adj;
        out.records.push_back({t, soc, soc + gap, gap, theta(k, t)});
    }
    return out;
}

WageSetter::WageSetter(const StructuralParams& params, Regime regime)
    : params_(params), regime_(regime), prior_(conditional_prior(params, regime)) {
    kappa_ = kappa(prior_.residual_var, params.learning.sigma_eps_sq);
}

double WageSetter::log_wage(double s, double q, double d, std::span<const double> signal_history,
                            int t) const {
    if (static_cast<int>(signal_history.size()) != t)
        throw InvalidParameter("log_wage: signal_history must have exactly t entries");
    const double lam = params_.skill_prices.at(t);
    double prior_mean = prior_.mean(s, q, regime_ == Regime::hidden ? 0.0 : d);
    std::optional<double> sig_mean;
    if (t > 0) {
        sig_mean = std::accumulate(signal_history.begin(), signal_history.end(), 0.0) /
                   static_cast<double>(t);
    }
    const double belief = posterior_ability(prior_mean, sig_mean, t, kappa_);
    double h = params_.baseline.at(t);
    if (params_.baseline.include_variance_term) {
        LearningParams lp{prior_.residual_var, params_.learning.sigma_eps_sq};
        h += 0.5 * wage_variance_term(lp, lam, t);
    }
    return lam * (params_.beta_ws * s + params_.beta_wq * q + belief) + h;
}

double log_wage(double s, double q, double d, std::span<const double> signal_history, int t,
                const StructuralParams& params, Regime regime) {
    return WageSetter(params, regime).log_wage(s, q, d, signal_history, t);
}

}  // namespace elearn
