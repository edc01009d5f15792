#include "elearn/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "elearn/errors.hpp"
#include "elearn/rng.hpp"
#include "elearn/simulate.hpp"

namespace elearn {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<double> read_baseline_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("baseline wage file not found: " + path);
    std::vector<double> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        // accept "value" or "t,value" rows
        const auto comma = line.find(',');
        const std::string v = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            out.push_back(std::stod(v));
        } catch (const std::exception&) {
            throw ConfigError("baseline wage file: bad line '" + line + "'");
        }
    }
    if (out.empty()) throw ConfigError("baseline wage file is empty: " + path);
    return out;
}

std::string mode_name(FitMode m) {
    switch (m) {
        case FitMode::mixing: return "mixing";
        case FitMode::sequential: return "sequential";
        case FitMode::joint: return "joint";
    }
    return "unknown";
}

struct OutputTracker {
    std::vector<std::filesystem::path> written;

    std::ofstream open(const std::filesystem::path& p) {
        std::ofstream os(p);
        if (!os) throw ConfigError("cannot open output file " + p.string());
        written.push_back(p);
        return os;
    }
    void discard_all() {
        for (const auto& p : written) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
    }
};

std::map<std::string, std::string> read_kv_doc(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("missing document " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
    const StructuralParams structure = config.structural();
    const SimulationConfig sim = config.simulation();
    const std::string hash = config.hash();

    auto workers = draw_population(sim, structure, sim.seed);
    Panel panel = simulate_panel(workers, structure, sim);

    ProfileOptions popts;
    popts.covariates = config.covariates();
    popts.bootstrap_resamples = config.bootstrap_resamples;
    popts.bootstrap_seed = config.bootstrap_seed;

    ExperimentResult res;
    res.config_hash = hash;
    res.fit_mode = mode_name(config.fit_mode);
    res.primary = experience_profile(panel, popts);
    res.primary.tag = sim.regime == RegimeMode::hidden        ? EstimatorTag::hidden_iv
                      : sim.regime == RegimeMode::transparent ? EstimatorTag::transparent_iv
                                                              : EstimatorTag::partial_iv;

    const FitOptions fopts = config.fit_options();
    std::optional<Panel> secondary_panel;
    if (config.fit_mode == FitMode::mixing) {
        std::vector<double> ones(static_cast<std::size_t>(sim.horizon) + 1, 1.0);
        res.fit = fit_mixing(res.primary, ones, fopts);
        res.lambda_profile = ones;
    } else {
        if (sim.regime != RegimeMode::hidden)
            throw ConfigError("sequential/joint fits require simulation.regime = hidden");
        // complementary transparent panel on the same population draws
        auto tw = workers;
        for (auto& w : tw) w.transparent_exposure = true;
        SimulationConfig tsim = sim;
        tsim.regime = RegimeMode::transparent;
        secondary_panel = simulate_panel(tw, structure, tsim);
        ExperienceEstimates tr = experience_profile(*secondary_panel, popts);
        tr.tag = EstimatorTag::transparent_iv;
        res.secondary = tr;
        if (config.fit_mode == FitMode::sequential) {
            SequentialFitResult sf = sequential_fit(tr, res.primary, fopts);
            res.fit = sf.fit;
            res.lambda_profile = sf.lambda_profile;
        } else {
            JointFitResult jf = joint_fit(res.primary, tr, fopts);
            res.fit = jf.fit;
            res.lambda_profile = jf.lambda_profile;
        }
    }

    // decomposition implied by the fitted parameters
    std::vector<double> private_profile, social_profile;
    for (int t = 0; t <= sim.horizon; ++t) {
        const double lam = res.lambda_profile[static_cast<std::size_t>(t)];
        const double th = theta(res.fit.kappa_hat, t);
        const double priv = lam * (th * res.fit.b0 + (1.0 - th) * res.fit.b_inf);
        const double soc = lam * res.fit.b_inf;
        res.decomposition.records.push_back({t, soc, priv, priv - soc, th});
        private_profile.push_back(priv);
        social_profile.push_back(soc);
    }
    std::vector<double> baseline;
    if (!config.baseline_wage_csv.empty()) baseline = read_baseline_csv(config.baseline_wage_csv);
    if (res.fit.identified) {
        res.signaling = signaling_decomposition(private_profile, social_profile, baseline,
                                                config.career_length);
    } else {
        res.signaling = {};
    }

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        OutputTracker tracker;
        try {
            const std::string comment = "config " + hash;
            {
                auto os = tracker.open(fs::path(out_dir) / "panel.csv");
                write_panel_csv(panel, os, comment);
            }
            {
                auto os = tracker.open(fs::path(out_dir) / "estimates.csv");
                std::vector<ExperienceEstimates> all{res.primary};
                if (res.secondary) all.push_back(*res.secondary);
                write_estimates_csv(all, os, comment);
            }
            {
                auto os = tracker.open(fs::path(out_dir) / "fit_summary.txt");
                os << "# " << comment << "\n";
                for (const auto& [k, v] : fit_summary(res.fit, res.fit_mode))
                    os << k << " = " << v << "\n";
            }
            {
                auto os = tracker.open(fs::path(out_dir) / "decomposition.csv");
                write_decomposition_csv(res.decomposition, os, comment);
            }
            {
                auto os = tracker.open(fs::path(out_dir) / "summary.txt");
                os << "# " << comment << "\n";
                for (const auto& [k, v] : fit_summary(res.fit, res.fit_mode))
                    os << k << " = " << v << "\n";
                os << "first_stage = " << fmt(res.primary.first_stage.kappa_hat) << "\n";
                for (int t : {5, 10, 15})
                    os << "theta_" << t << " = " << fmt(theta(res.fit.kappa_hat, t)) << "\n";
                if (res.fit.identified)
                    for (const auto& [k, v] : signaling_summary_doc(res.signaling))
                        os << k << " = " << v << "\n";
            }
            {
                auto os = tracker.open(fs::path(out_dir) / "config.txt");
                os << "# config " << hash << "\n" << config.serialize();
            }
        } catch (...) {
            tracker.discard_all();
            throw;
        }
    }
    return res;
}

std::string ReplicationSummary::serialize() const {
    std::ostringstream os;
    os << "n_reps = " << n_reps << "\n";
    os << "failures = " << failures << "\n";
    for (const auto& [name, st] : params) {
        os << name << ".truth = " << fmt(st.truth) << "\n";
        os << name << ".mean = " << fmt(st.mean) << "\n";
        os << name << ".sd = " << (st.sd_defined ? fmt(st.sd) : "undefined") << "\n";
        os << name << ".bias = " << fmt(st.bias) << "\n";
        os << name << ".coverage = " << (st.coverage_defined ? fmt(st.coverage) : "undefined")
           << "\n";
    }
    return os.str();
}

ReplicationSummary run_replications(const ExperimentConfig& config) {
    const StructuralParams truth_structure = config.structural();
    const double truth_kappa = kappa(truth_structure.learning);
    const double truth_b0 = private_return(truth_structure, 0);
    const double truth_binf = social_return(truth_structure, 0);

    struct RepResult {
        bool ok = false;
        double kappa = 0.0, b0 = 0.0, b_inf = 0.0;
        bool has_interval = false;
        double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    };
    const std::size_t R = config.n_reps;
    std::vector<RepResult> reps(R);

    auto run_one = [&](std::size_t r) {
        RepResult& out = reps[r];
        try {
            ExperimentConfig c = config;
            c.seed = derive_seed(config.seed, r);
            ExperimentResult er = run_experiment(c, "");
            out.kappa = er.fit.kappa_hat;
            out.b0 = er.fit.b0;
            out.b_inf = er.fit.b_inf;
            out.ok = true;
            if (config.bootstrap_resamples >= 20 && !er.primary.bootstrap_profiles.empty() &&
                config.fit_mode == FitMode::mixing) {
                // percentile interval from refitting each bootstrap profile
                FitOptions f;
                f.kappa_grid = config.interval_grid;
                std::vector<double> ks, b0s, binfs;
                std::vector<double> ones(er.lambda_profile.size(), 1.0);
                for (const auto& bp : er.primary.bootstrap_profiles) {
                    ExperienceEstimates e;
                    for (std::size_t t = 0; t < bp.size(); ++t)
                        e.records.push_back(
                            {static_cast<int>(t), bp[t], 0.0, 0, true});
                    MixingFit mf = fit_mixing(e, ones, f);
                    ks.push_back(mf.kappa_hat);
                    b0s.push_back(mf.b0);
                    binfs.push_back(mf.b_inf);
                }
                auto pct = [](std::vector<double> v, double q) {
                    std::sort(v.begin(), v.end());
                    const double pos = q * (static_cast<double>(v.size()) - 1.0);
                    const std::size_t i = static_cast<std::size_t>(pos);
                    const double frac = pos - static_cast<double>(i);
                    return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
                };
                std::vector<double>* arrs[3] = {&ks, &b0s, &binfs};
                for (int j = 0; j < 3; ++j) {
                    out.lo[j] = pct(*arrs[j], 0.05);
                    out.hi[j] = pct(*arrs[j], 0.95);
                }
                out.has_interval = true;
            }
        } catch (const std::exception&) {
            out.ok = false;
        }
    };

    const int jobs = std::max(1, config.jobs);
    if (jobs == 1 || R == 1) {
        for (std::size_t r = 0; r < R; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mtx;
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t r;
                    {
                        std::lock_guard<std::mutex> lk(mtx);
                        if (next >= R) return;
                        r = next++;
                    }
                    run_one(r);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    ReplicationSummary sum;
    sum.n_reps = R;
    const double truths[3] = {truth_kappa, truth_b0, truth_binf};
    const char* names[3] = {"kappa", "b0", "b_inf"};
    std::vector<double> vals[3];
    std::size_t covered[3] = {0, 0, 0}, with_interval = 0;
    for (const auto& r : reps) {
        if (!r.ok) {
            sum.failures++;
            continue;
        }
        vals[0].push_back(r.kappa);
        vals[1].push_back(r.b0);
        vals[2].push_back(r.b_inf);
        if (r.has_interval) {
            with_interval++;
            for (int j = 0; j < 3; ++j)
                if (truths[j] >= r.lo[j] && truths[j] <= r.hi[j]) covered[j]++;
        }
    }
    for (int j = 0; j < 3; ++j) {
        ParamStats st;
        st.truth = truths[j];
        const auto& v = vals[j];
        if (!v.empty()) {
            double m = 0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            st.mean = m;
            st.bias = m - truths[j];
            if (v.size() >= 2) {
                double ss = 0;
                for (double x : v) ss += (x - m) * (x - m);
                st.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
                st.sd_defined = true;
            }
            if (with_interval > 0) {
                st.coverage =
                    static_cast<double>(covered[j]) / static_cast<double>(with_interval);
                st.coverage_defined = true;
            }
        }
        sum.params[names[j]] = st;
    }
    return sum;
}

std::string emit_report(const ExperimentResult& result) {
    std::ostringstream os;
    char buf[128];
    os << "=== Parameters of interest (" << result.fit_mode << " fit) ===\n";
    std::snprintf(buf, sizeof(buf), "  speed of learning kappa : %8.3f\n", result.fit.kappa_hat);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  initial return b0       : %8.3f\n", result.fit.b0);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  limit return b_inf      : %8.3f\n", result.fit.b_inf);
    os << buf;
    os << "  identified              : " << (result.fit.identified ? "yes" : "no") << "\n";
    os << "=== Weight on initial signal ===\n";
    for (int t : {5, 10, 15}) {
        std::snprintf(buf, sizeof(buf), "  t = %2d : %5.1f%%\n", t,
                      100.0 * theta(result.fit.kappa_hat, t));
        os << buf;
    }
    os << "=== Internal rate of return ===\n";
    std::snprintf(buf, sizeof(buf), "  private IRR     : %5.1f%%\n",
                  100.0 * result.signaling.private_irr);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  social return   : %5.1f%%\n",
                  100.0 * result.signaling.social_return);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  signaling share : %5.1f%%\n",
                  100.0 * result.signaling.signaling_share);
    os << buf;
    return os.str();
}

std::string emit_report_from_dir(const std::string& dir, std::vector<std::string>& missing) {
    namespace fs = std::filesystem;
    std::ostringstream os;
    char buf[128];
    const fs::path base(dir);

    if (fs::exists(base / "fit_summary.txt")) {
        auto kv = read_kv_doc((base / "fit_summary.txt").string());
        os << "=== Parameters of interest (" << kv["mode"] << " fit) ===\n";
        std::snprintf(buf, sizeof(buf), "  speed of learning kappa : %8.3f\n",
                      std::stod(kv["kappa_hat"]));
        os << buf;
        std::snprintf(buf, sizeof(buf), "  initial return b0       : %8.3f\n",
                      std::stod(kv["b0"]));
        os << buf;
        std::snprintf(buf, sizeof(buf), "  limit return b_inf      : %8.3f\n",
                      std::stod(kv["b_inf"]));
        os << buf;
        os << "  identified              : "
           << (kv["identified"] == "true" ? "yes" : "no") << "\n";
    } else {
        missing.push_back("parameters (fit_summary.txt)");
    }

    if (fs::exists(base / "summary.txt")) {
        auto kv = read_kv_doc((base / "summary.txt").string());
        os << "=== Weight on initial signal ===\n";
        for (int t : {5, 10, 15}) {
            const std::string key = "theta_" + std::to_string(t);
            if (kv.count(key)) {
                std::snprintf(buf, sizeof(buf), "  t = %2d : %5.1f%%\n", t,
                              100.0 * std::stod(kv[key]));
                os << buf;
            }
        }
        if (kv.count("private_irr")) {
            os << "=== Internal rate of return ===\n";
            std::snprintf(buf, sizeof(buf), "  private IRR     : %5.1f%%\n",
                          100.0 * std::stod(kv["private_irr"]));
            os << buf;
            std::snprintf(buf, sizeof(buf), "  social return   : %5.1f%%\n",
                          100.0 * std::stod(kv["social_return"]));
            os << buf;
            std::snprintf(buf, sizeof(buf), "  signaling share : %5.1f%%\n",
                          100.0 * std::stod(kv["signaling_share"]));
            os << buf;
        } else {
            missing.push_back("IRR/signaling (summary.txt keys)");
        }
    } else {
        missing.push_back("theta weights (summary.txt)");
        missing.push_back("IRR/signaling (summary.txt)");
    }
    return os.str();
}

}  // namespace elearn
