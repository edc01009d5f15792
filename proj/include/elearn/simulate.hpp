#pragma once

#include <cstdint>
#include <vector>

#include "elearn/model_core.hpp"
#include "elearn/panel.hpp"

namespace elearn {

enum class RegimeMode { hidden, transparent, partial };

enum class ZMode { off, ability_plus_noise, independent };

struct SimulationConfig {
    std::size_t n_workers = 1000;
    int horizon = 30;
    RegimeMode regime = RegimeMode::hidden;
    double rho = 0.0;  // transparent share under the partial regime
    std::uint64_t seed = 1;
    bool balanced = true;
    bool quality_violation = false;  // allow delta_ad != 0

    ZMode z_mode = ZMode::off;
    double z_noise_sd = 0.5;

    // Group structure exercising fixed-effect partialling: cohorts shift wages,
    // regions shift schooling; both centered and independent of D.
    int n_cohorts = 4;
    int n_regions = 5;
    double cohort_wage_shift = 0.0;
    double region_school_shift = 0.0;

    void validate() const;
};

struct WorkerDraw {
    std::uint64_t id = 0;
    int D = 0;
    bool transparent_exposure = false;  // resolved from regime (and rho if partial)
    double S = 0.0;
    double v = 0.0;
    double a_tilde = 0.0;
    double A = 0.0;
    double Q = 0.0;     // meaningful only when structure.q_enabled()
    double Z = 0.0;     // meaningful only when z_mode != off
    double eta = 0.0;   // A - beta_az*Z residual
    double beta_az = 0.0;
    int cohort = 0;
    int region = 0;
};

// Deterministic given seed; per-worker substreams keyed on (seed, worker id).
std::vector<WorkerDraw> draw_population(const SimulationConfig& config,
                                        const StructuralParams& structure, std::uint64_t seed);

Panel simulate_panel(const std::vector<WorkerDraw>& workers, const StructuralParams& structure,
                     const SimulationConfig& config);

// Rounds schooling to integer years on [s_min, s_max], clamping; the original
// continuous values are retained in S_raw.
Panel discretize_schooling(const Panel& panel, int s_min, int s_max);

// ---- Binary-schooling potential-outcomes variant ----

enum class WorkerType { always_taker, never_taker, complier };

struct HeterogeneousConfig {
    std::size_t n_workers = 1000;
    int horizon = 30;
    std::uint64_t seed = 1;
    double share_always = 0.25;
    double share_never = 0.25;
    double share_complier = 0.50;
    double share_defier = 0.0;  // must stay 0 (monotonicity)
    double treat_share = 0.5;   // Pr(D = 1)
    // potential-productivity means mu[type][schooling level]
    double mu_always[2] = {0.0, 0.2};
    double mu_never[2] = {0.0, 0.2};
    double mu_complier[2] = {0.0, 0.2};
    double sigma_psi_sq = 1.0;
    double sigma_eps_sq = 1.0;

    void validate() const;
    double mu(WorkerType type, int s) const;
};

struct HPanel {
    int horizon = 0;
    std::vector<std::uint64_t> worker_id;
    std::vector<int> S;
    std::vector<int> D;
    std::vector<WorkerType> type;     // retained for oracle tests
    std::vector<double> psi0, psi1;   // potential productivities
    std::vector<double> wage;         // levels, n*(T+1)
    std::vector<double> signal;

    std::size_t n_workers() const { return worker_id.size(); }
    std::size_t periods() const { return static_cast<std::size_t>(horizon) + 1; }
    std::size_t idx(std::size_t w, int t) const { return w * periods() + static_cast<std::size_t>(t); }
};

// Market-wide priors E[psi_S | S] implied by type shares and treatment share.
double market_prior(const HeterogeneousConfig& cfg, int s);

HPanel simulate_heterogeneous(const HeterogeneousConfig& hconfig,
                              const SkillPriceProfile& skill_prices, std::uint64_t seed);

// View of the potential-outcomes panel in the common Panel layout (wage levels,
// binary schooling, no optional columns) for serialization and generic Wald code.
Panel to_panel(const HPanel& hpanel);

}  // namespace elearn
