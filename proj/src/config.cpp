#include "elearn/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elearn/errors.hpp"

namespace elearn {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean value for " + key + ": '" + v + "'");
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
    ExperimentConfig c;
    for (const auto& [key, raw] : kv) {
        const std::string v = trim(raw);
        if (key == "structural.beta_ws") c.beta_ws = to_double(key, v);
        else if (key == "structural.beta_wq") c.beta_wq = to_double(key, v);
        else if (key == "structural.delta_as") c.delta_as = to_double(key, v);
        else if (key == "structural.delta_qs") c.delta_qs = to_double(key, v);
        else if (key == "structural.delta_ad") c.delta_ad = to_double(key, v);
        else if (key == "structural.school_intercept") c.school_intercept = to_double(key, v);
        else if (key == "structural.first_stage") c.first_stage = to_double(key, v);
        else if (key == "structural.sigma_v_sq") c.sigma_v_sq = to_double(key, v);
        else if (key == "structural.treat_share") c.treat_share = to_double(key, v);
        else if (key == "structural.adjustment_gap") c.adjustment_gap = to_double(key, v);
        else if (key == "structural.cov_v_atilde")
            c.cov_v_atilde = v == "auto" ? -1.0 : to_double(key, v);
        else if (key == "structural.var_atilde")
            c.var_atilde = v == "auto" ? -1.0 : to_double(key, v);
        else if (key == "structural.var_qtilde") c.var_qtilde = to_double(key, v);
        else if (key == "structural.sigma0_sq")
            c.sigma0_sq = v == "auto" ? -1.0 : to_double(key, v);
        else if (key == "structural.kappa_true") c.kappa_true = to_double(key, v);
        else if (key == "structural.sigma_eps_sq") c.sigma_eps_sq = to_double(key, v);
        else if (key == "structural.lambda_slope") c.lambda_slope = to_double(key, v);
        else if (key == "structural.include_variance_term")
            c.include_variance_term = to_bool(key, v);
        else if (key == "simulation.n_workers") c.n_workers = to_u64(key, v);
        else if (key == "simulation.horizon") c.horizon = to_int(key, v);
        else if (key == "simulation.regime") {
            if (v == "hidden") c.regime = RegimeMode::hidden;
            else if (v == "transparent") c.regime = RegimeMode::transparent;
            else if (v == "partial") c.regime = RegimeMode::partial;
            else throw ConfigError("config: bad regime '" + v + "'");
        } else if (key == "simulation.rho") c.rho = to_double(key, v);
        else if (key == "simulation.seed") c.seed = to_u64(key, v);
        else if (key == "simulation.quality_violation") c.quality_violation = to_bool(key, v);
        else if (key == "simulation.z_mode") {
            if (v == "off") c.z_mode = ZMode::off;
            else if (v == "ability_plus_noise") c.z_mode = ZMode::ability_plus_noise;
            else if (v == "independent") c.z_mode = ZMode::independent;
            else throw ConfigError("config: bad z_mode '" + v + "'");
        } else if (key == "simulation.z_noise_sd") c.z_noise_sd = to_double(key, v);
        else if (key == "simulation.n_cohorts") c.n_cohorts = to_int(key, v);
        else if (key == "simulation.n_regions") c.n_regions = to_int(key, v);
        else if (key == "simulation.cohort_wage_shift") c.cohort_wage_shift = to_double(key, v);
        else if (key == "simulation.region_school_shift")
            c.region_school_shift = to_double(key, v);
        else if (key == "estimation.bootstrap_resamples") c.bootstrap_resamples = to_u64(key, v);
        else if (key == "estimation.bootstrap_seed") c.bootstrap_seed = to_u64(key, v);
        else if (key == "estimation.nlls_weighting") {
            if (v == "uniform") c.inverse_variance_weights = false;
            else if (v == "inverse_variance") c.inverse_variance_weights = true;
            else throw ConfigError("config: bad nlls_weighting '" + v + "'");
        } else if (key == "estimation.kappa_grid") c.kappa_grid = to_int(key, v);
        else if (key == "estimation.covariates") {
            c.covariate_cohort = c.covariate_region = false;
            if (v != "none" && !v.empty()) {
                std::stringstream ss(v);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    item = trim(item);
                    if (item == "cohort") c.covariate_cohort = true;
                    else if (item == "region") c.covariate_region = true;
                    else throw ConfigError("config: bad covariate '" + item + "'");
                }
            }
        } else if (key == "estimation.fit") {
            if (v == "mixing") c.fit_mode = FitMode::mixing;
            else if (v == "sequential") c.fit_mode = FitMode::sequential;
            else if (v == "joint") c.fit_mode = FitMode::joint;
            else throw ConfigError("config: bad fit mode '" + v + "'");
        } else if (key == "analysis.career_length") c.career_length = to_int(key, v);
        else if (key == "analysis.baseline_wage_csv") c.baseline_wage_csv = v;
        else if (key == "replication.n_reps") c.n_reps = to_u64(key, v);
        else if (key == "replication.jobs") c.jobs = to_int(key, v);
        else if (key == "replication.interval_grid") c.interval_grid = to_int(key, v);
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    if (c.n_reps < 1) throw ConfigError("config: replication.n_reps must be >= 1");
    if (c.jobs < 1) throw ConfigError("config: replication.jobs must be >= 1");
    if (c.kappa_grid < 3) throw ConfigError("config: estimation.kappa_grid must be >= 3");
    if (c.career_length < 0) throw ConfigError("config: analysis.career_length must be >= 0");
    if (c.horizon < 0) throw ConfigError("config: simulation.horizon must be >= 0");
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: missing '=' at line " + std::to_string(lineno));
        const std::string key = trim(s.substr(0, eq));
        if (kv.count(key))
            throw ConfigError("config: duplicate key '" + key + "'");
        kv[key] = trim(s.substr(eq + 1));
    }
    return from_map(kv);
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
    std::map<std::string, std::string> kv;
    kv["structural.beta_ws"] = fmt(beta_ws);
    kv["structural.beta_wq"] = fmt(beta_wq);
    kv["structural.delta_as"] = fmt(delta_as);
    kv["structural.delta_qs"] = fmt(delta_qs);
    kv["structural.delta_ad"] = fmt(delta_ad);
    kv["structural.school_intercept"] = fmt(school_intercept);
    kv["structural.first_stage"] = fmt(first_stage);
    kv["structural.sigma_v_sq"] = fmt(sigma_v_sq);
    kv["structural.treat_share"] = fmt(treat_share);
    kv["structural.adjustment_gap"] = fmt(adjustment_gap);
    kv["structural.cov_v_atilde"] = cov_v_atilde < 0 ? "auto" : fmt(cov_v_atilde);
    kv["structural.var_atilde"] = var_atilde < 0 ? "auto" : fmt(var_atilde);
    kv["structural.var_qtilde"] = fmt(var_qtilde);
    kv["structural.sigma0_sq"] = sigma0_sq < 0 ? "auto" : fmt(sigma0_sq);
    kv["structural.kappa_true"] = fmt(kappa_true);
    kv["structural.sigma_eps_sq"] = fmt(sigma_eps_sq);
    kv["structural.lambda_slope"] = fmt(lambda_slope);
    kv["structural.include_variance_term"] = include_variance_term ? "true" : "false";
    kv["simulation.n_workers"] = std::to_string(n_workers);
    kv["simulation.horizon"] = std::to_string(horizon);
    kv["simulation.regime"] = regime == RegimeMode::hidden        ? "hidden"
                              : regime == RegimeMode::transparent ? "transparent"
                                                                  : "partial";
    kv["simulation.rho"] = fmt(rho);
    kv["simulation.seed"] = std::to_string(seed);
    kv["simulation.quality_violation"] = quality_violation ? "true" : "false";
    kv["simulation.z_mode"] = z_mode == ZMode::off                  ? "off"
                              : z_mode == ZMode::ability_plus_noise ? "ability_plus_noise"
                                                                    : "independent";
    kv["simulation.z_noise_sd"] = fmt(z_noise_sd);
    kv["simulation.n_cohorts"] = std::to_string(n_cohorts);
    kv["simulation.n_regions"] = std::to_string(n_regions);
    kv["simulation.cohort_wage_shift"] = fmt(cohort_wage_shift);
    kv["simulation.region_school_shift"] = fmt(region_school_shift);
    kv["estimation.bootstrap_resamples"] = std::to_string(bootstrap_resamples);
    kv["estimation.bootstrap_seed"] = std::to_string(bootstrap_seed);
    kv["estimation.nlls_weighting"] = inverse_variance_weights ? "inverse_variance" : "uniform";
    kv["estimation.kappa_grid"] = std::to_string(kappa_grid);
    {
        std::string cv;
        if (covariate_cohort) cv = "cohort";
        if (covariate_region) cv += cv.empty() ? "region" : ",region";
        kv["estimation.covariates"] = cv.empty() ? "none" : cv;
    }
    kv["estimation.fit"] = fit_mode == FitMode::mixing       ? "mixing"
                           : fit_mode == FitMode::sequential ? "sequential"
                                                             : "joint";
    kv["analysis.career_length"] = std::to_string(career_length);
    kv["analysis.baseline_wage_csv"] = baseline_wage_csv;
    kv["replication.n_reps"] = std::to_string(n_reps);
    kv["replication.jobs"] = std::to_string(jobs);
    kv["replication.interval_grid"] = std::to_string(interval_grid);
    return kv;
}

std::string ExperimentConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : to_map()) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

std::string ExperimentConfig::hash() const {
    // FNV-1a 64, excluding the parallelism hint so --jobs never changes outputs
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [k, v] : to_map()) {
        if (k == "replication.jobs") continue;
        for (const std::string* s : {&k, &v}) {
            for (char ch : *s) {
                h ^= static_cast<unsigned char>(ch);
                h *= 1099511628211ULL;
            }
            h ^= static_cast<unsigned char>('\n');
            h *= 1099511628211ULL;
        }
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

StructuralParams ExperimentConfig::structural() const {
    StructuralParams p;
    p.beta_ws = beta_ws;
    p.beta_wq = beta_wq;
    p.delta_as = delta_as;
    p.delta_qs = delta_qs;
    p.delta_ad = delta_ad;
    p.schooling_eq = {school_intercept, first_stage, sigma_v_sq, treat_share};
    p.var_qtilde = var_qtilde;
    p.learning.sigma_eps_sq = sigma_eps_sq;
    if (sigma0_sq >= 0.0) {
        p.learning.sigma0_sq = sigma0_sq;
    } else {
        if (!(kappa_true >= 0.0 && kappa_true < 1.0))
            throw ConfigError("config: kappa_true must lie in [0,1)");
        p.learning.sigma0_sq = kappa_true / (1.0 - kappa_true) * sigma_eps_sq;
    }
    if (cov_v_atilde >= 0.0) {
        p.cov_v_atilde = cov_v_atilde;
    } else {
        // adjustment_gap = cov(v, Atilde)/Var(S) under the hidden regime
        const double var_d = treat_share * (1.0 - treat_share);
        const double var_s = first_stage * first_stage * var_d + sigma_v_sq;
        p.cov_v_atilde = adjustment_gap * var_s;
    }
    p.var_atilde = 1.0;  // placeholder for the consistency solve below
    if (var_atilde >= 0.0) {
        p.var_atilde = var_atilde;
    } else {
        p.var_atilde = consistent_var_atilde(p);
    }
    p.skill_prices = lambda_slope == 0.0 ? SkillPriceProfile::constant(horizon)
                                         : SkillPriceProfile::linear(horizon, lambda_slope);
    p.baseline = ExperienceBaseline::zero(horizon);
    p.baseline.include_variance_term = include_variance_term;
    p.validate();
    return p;
}

SimulationConfig ExperimentConfig::simulation() const {
    SimulationConfig sc;
    sc.n_workers = n_workers;
    sc.horizon = horizon;
    sc.regime = regime;
    sc.rho = rho;
    sc.seed = seed;
    sc.quality_violation = quality_violation;
    sc.z_mode = z_mode;
    sc.z_noise_sd = z_noise_sd;
    sc.n_cohorts = n_cohorts;
    sc.n_regions = n_regions;
    sc.cohort_wage_shift = cohort_wage_shift;
    sc.region_school_shift = region_school_shift;
    sc.validate();
    return sc;
}

}  // namespace elearn
