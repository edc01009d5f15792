#include "elearn/simulate.hpp"

#include <cmath>
#include <span>

#include "elearn/errors.hpp"
#include "elearn/rng.hpp"

namespace elearn {

void SimulationConfig::validate() const {
    if (n_workers < 1) throw InvalidParameter("SimulationConfig: n_workers must be >= 1");
    if (horizon < 0) throw InvalidParameter("SimulationConfig: horizon must be nonnegative");
    if (rho < 0.0 || rho > 1.0) throw InvalidParameter("SimulationConfig: rho must lie in [0,1]");
    if (!balanced) throw InvalidParameter("SimulationConfig: only balanced panels are supported");
    if (n_cohorts < 1 || n_regions < 1)
        throw InvalidParameter("SimulationConfig: group counts must be >= 1");
    if (z_mode != ZMode::off && z_noise_sd < 0.0)
        throw InvalidParameter("SimulationConfig: z_noise_sd must be nonnegative");
}

std::vector<WorkerDraw> draw_population(const SimulationConfig& config,
                                        const StructuralParams& structure, std::uint64_t seed) {
    config.validate();
    structure.validate();
    if (structure.delta_ad != 0.0 && !config.quality_violation)
        throw InvalidParameter(
            "draw_population: delta_ad != 0 requires the quality_violation flag");

    const auto& eq = structure.schooling_eq;
    const double c = structure.cov_v_atilde;
    const double cond_slope = eq.sigma_v_sq > 0.0 ? c / eq.sigma_v_sq : 0.0;
    const double cond_var = structure.var_atilde - cond_slope * c;
    const double cond_sd = std::sqrt(std::max(0.0, cond_var));
    const double v_sd = std::sqrt(eq.sigma_v_sq);

    double var_a = 0.0, beta_az = 0.0;
    if (config.z_mode == ZMode::ability_plus_noise) {
        var_a = ability_variance(structure);
        beta_az = var_a / (var_a + config.z_noise_sd * config.z_noise_sd);
    }

    std::vector<WorkerDraw> out(config.n_workers);
    for (std::size_t i = 0; i < config.n_workers; ++i) {
        Stream rs(seed, i, 0);
        WorkerDraw& w = out[i];
        w.id = i;
        w.D = rs.uniform() < eq.treat_share ? 1 : 0;
        const double v_g = v_sd * rs.normal();
        w.a_tilde = cond_slope * v_g + cond_sd * rs.normal();
        const double u_exposure = rs.uniform();
        switch (config.regime) {
            case RegimeMode::hidden: w.transparent_exposure = false; break;
            case RegimeMode::transparent: w.transparent_exposure = true; break;
            case RegimeMode::partial: w.transparent_exposure = u_exposure < config.rho; break;
        }
        w.cohort = std::min(config.n_cohorts - 1,
                            static_cast<int>(rs.uniform() * config.n_cohorts));
        w.region = std::min(config.n_regions - 1,
                            static_cast<int>(rs.uniform() * config.n_regions));
        const double region_shift =
            config.region_school_shift * (w.region - 0.5 * (config.n_regions - 1));
        w.v = v_g + region_shift;
        w.S = eq.intercept + eq.first_stage * w.D + w.v;
        w.A = structure.delta_as * w.S + structure.delta_ad * w.D + w.a_tilde;
        if (structure.q_enabled())
            w.Q = structure.delta_qs * w.S + std::sqrt(structure.var_qtilde) * rs.normal();
        switch (config.z_mode) {
            case ZMode::off: break;
            case ZMode::ability_plus_noise:
                w.Z = w.A + config.z_noise_sd * rs.normal();
                w.beta_az = beta_az;
                w.eta = w.A - beta_az * w.Z;
                break;
            case ZMode::independent:
                w.Z = rs.normal();
                w.beta_az = 0.0;
                w.eta = w.A;
                break;
        }
    }
    return out;
}

Panel simulate_panel(const std::vector<WorkerDraw>& workers, const StructuralParams& structure,
                     const SimulationConfig& config) {
    config.validate();
    if (config.horizon != structure.horizon())
        throw InvalidParameter("simulate_panel: config horizon does not match skill prices");

    const WageSetter hidden(structure, Regime::hidden);
    const bool need_transparent =
        config.regime == RegimeMode::transparent || config.regime == RegimeMode::partial;
    std::optional<WageSetter> transparent;
    if (need_transparent) transparent.emplace(structure, Regime::transparent);

    Panel panel;
    panel.horizon = config.horizon;
    const std::size_t n = workers.size();
    const std::size_t periods = static_cast<std::size_t>(config.horizon) + 1;
    panel.worker_id.reserve(n);
    panel.S.reserve(n);
    panel.D.reserve(n);
    panel.group_cohort.reserve(n);
    panel.group_region.reserve(n);
    panel.wage.resize(n * periods);
    panel.signal.resize(n * periods);
    if (structure.q_enabled()) panel.Q.reserve(n);
    if (config.z_mode != ZMode::off) panel.Z.reserve(n);

    const double eps_sd = std::sqrt(structure.learning.sigma_eps_sq);
    std::vector<double> signals(periods);
    for (std::size_t i = 0; i < n; ++i) {
        const WorkerDraw& w = workers[i];
        panel.worker_id.push_back(w.id);
        panel.S.push_back(w.S);
        panel.D.push_back(static_cast<double>(w.D));
        panel.group_cohort.push_back(w.cohort);
        panel.group_region.push_back(w.region);
        if (structure.q_enabled()) panel.Q.push_back(w.Q);
        if (config.z_mode != ZMode::off) panel.Z.push_back(w.Z);

        const WageSetter& setter = w.transparent_exposure ? *transparent : hidden;
        const double wage_shift =
            config.cohort_wage_shift * (w.cohort - 0.5 * (config.n_cohorts - 1));
        Stream rs(config.seed, w.id, 1);
        for (int t = 0; t <= config.horizon; ++t) {
            signals[static_cast<std::size_t>(t)] = w.A + eps_sd * rs.normal();
            const std::size_t k = i * periods + static_cast<std::size_t>(t);
            panel.signal[k] = signals[static_cast<std::size_t>(t)];
            panel.wage[k] =
                setter.log_wage(w.S, w.Q, static_cast<double>(w.D),
                                std::span<const double>(signals.data(), static_cast<std::size_t>(t)),
                                t) +
                wage_shift;
        }
    }
    return panel;
}

Panel discretize_schooling(const Panel& panel, int s_min, int s_max) {
    if (s_min > s_max) throw InvalidParameter("discretize_schooling: empty grid");
    Panel out = panel;
    out.S_raw = panel.S;
    for (auto& s : out.S) {
        double r = std::round(s);
        if (r < s_min) r = s_min;
        if (r > s_max) r = s_max;
        s = r;
    }
    return out;
}

void HeterogeneousConfig::validate() const {
    if (n_workers < 1) throw InvalidParameter("HeterogeneousConfig: n_workers must be >= 1");
    if (horizon < 0) throw InvalidParameter("HeterogeneousConfig: horizon must be nonnegative");
    if (share_defier != 0.0)
        throw ConfigError("HeterogeneousConfig: defier share must be 0 (monotonicity)");
    if (share_always < 0.0 || share_never < 0.0 || share_complier < 0.0)
        throw InvalidParameter("HeterogeneousConfig: type shares must be nonnegative");
    if (std::abs(share_always + share_never + share_complier - 1.0) > 1e-12)
        throw InvalidParameter("HeterogeneousConfig: type shares must sum to 1");
    if (!(treat_share > 0.0 && treat_share < 1.0))
        throw InvalidParameter("HeterogeneousConfig: treat_share must lie in (0,1)");
    if (sigma_psi_sq <= 0.0 || sigma_eps_sq <= 0.0)
        throw InvalidParameter("HeterogeneousConfig: variances must be positive");
}

double HeterogeneousConfig::mu(WorkerType type, int s) const {
    switch (type) {
        case WorkerType::always_taker: return mu_always[s];
        case WorkerType::never_taker: return mu_never[s];
        case WorkerType::complier: return mu_complier[s];
    }
    throw InvalidParameter("HeterogeneousConfig: bad worker type");
}

double market_prior(const HeterogeneousConfig& cfg, int s) {
    const double p = cfg.treat_share;
    double weight, mean;
    if (s == 1) {
        weight = cfg.share_always + cfg.share_complier * p;
        mean = cfg.share_always * cfg.mu_always[1] + cfg.share_complier * p * cfg.mu_complier[1];
    } else {
        weight = cfg.share_never + cfg.share_complier * (1.0 - p);
        mean = cfg.share_never * cfg.mu_never[0] +
               cfg.share_complier * (1.0 - p) * cfg.mu_complier[0];
    }
    if (weight <= 0.0)
        throw IdentificationError("market_prior: no workers at this schooling level");
    return mean / weight;
}

HPanel simulate_heterogeneous(const HeterogeneousConfig& hconfig,
                              const SkillPriceProfile& skill_prices, std::uint64_t seed) {
    hconfig.validate();
    skill_prices.validate();
    if (skill_prices.horizon() != hconfig.horizon)
        throw InvalidParameter("simulate_heterogeneous: skill price horizon mismatch");

    const std::size_t n = hconfig.n_workers;
    const double cut_a = hconfig.share_always;
    const double cut_n = hconfig.share_always + hconfig.share_never;
    const double k = kappa(hconfig.sigma_psi_sq, hconfig.sigma_eps_sq);
    const double psi_sd = std::sqrt(hconfig.sigma_psi_sq);
    const double eps_sd = std::sqrt(hconfig.sigma_eps_sq);
    const double prior[2] = {market_prior(hconfig, 0), market_prior(hconfig, 1)};

    HPanel hp;
    hp.horizon = hconfig.horizon;
    const std::size_t periods = static_cast<std::size_t>(hconfig.horizon) + 1;
    hp.worker_id.resize(n);
    hp.S.resize(n);
    hp.D.resize(n);
    hp.type.resize(n);
    hp.psi0.resize(n);
    hp.psi1.resize(n);
    hp.wage.resize(n * periods);
    hp.signal.resize(n * periods);

    for (std::size_t i = 0; i < n; ++i) {
        // deterministic type assignment by quantile so configured shares hold exactly
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        WorkerType type = u < cut_a   ? WorkerType::always_taker
                          : u < cut_n ? WorkerType::never_taker
                                      : WorkerType::complier;
        Stream rs(seed, i, 0);
        const int d = rs.uniform() < hconfig.treat_share ? 1 : 0;
        const double psi0 = hconfig.mu(type, 0) + psi_sd * rs.normal();
        const double psi1 = hconfig.mu(type, 1) + psi_sd * rs.normal();
        int s;
        switch (type) {
            case WorkerType::always_taker: s = 1; break;
            case WorkerType::never_taker: s = 0; break;
            default: s = d; break;
        }
        const double psi = s == 1 ? psi1 : psi0;

        hp.worker_id[i] = i;
        hp.S[i] = s;
        hp.D[i] = d;
        hp.type[i] = type;
        hp.psi0[i] = psi0;
        hp.psi1[i] = psi1;

        Stream es(seed, i, 1);
        double signal_sum = 0.0;
        for (int t = 0; t <= hconfig.horizon; ++t) {
            const double th = theta(k, t);
            const double sig_mean = t > 0 ? signal_sum / t : 0.0;
            const std::size_t kk = i * periods + static_cast<std::size_t>(t);
            hp.wage[kk] = skill_prices.at(t) * (th * prior[s] + (1.0 - th) * sig_mean);
            const double xi = psi + eps_sd * es.normal();
            hp.signal[kk] = xi;
            signal_sum += xi;
        }
    }
    return hp;
}

Panel to_panel(const HPanel& hpanel) {
    Panel p;
    p.horizon = hpanel.horizon;
    p.wage_is_level = true;
    p.worker_id = hpanel.worker_id;
    p.S.assign(hpanel.S.begin(), hpanel.S.end());
    p.D.assign(hpanel.D.begin(), hpanel.D.end());
    p.wage = hpanel.wage;
    p.signal = hpanel.signal;
    return p;
}

}  // namespace elearn
