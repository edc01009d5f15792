#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "elearn/config.hpp"
#include "elearn/errors.hpp"
#include "elearn/experiment.hpp"
#include "elearn/simulate.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> reps;
    std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out = true) {
    cmd->add_option("--config", args.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--seed", args.seed, "master seed override");
    if (needs_out) cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--reps", args.reps, "replication count override");
    cmd->add_option("--jobs", args.jobs, "worker thread count");
}

elearn::ExperimentConfig load_config(const CommonArgs& args) {
    elearn::ExperimentConfig cfg = args.config_path.empty()
                                       ? elearn::ExperimentConfig{}
                                       : elearn::ExperimentConfig::from_file(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.reps) cfg.n_reps = *args.reps;
    if (args.jobs) cfg.jobs = *args.jobs;
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"employer-learning wage model: simulation and estimation toolkit"};
    app.require_subcommand(1);

    CommonArgs sim_args, est_args, ana_args, mc_args, rep_args;
    std::string est_panel_path;

    CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic worker panel");
    add_common(sim, sim_args);
    CLI::App* est = app.add_subcommand("estimate", "estimate returns profiles and mixing fit");
    add_common(est, est_args);
    est->add_option("--panel", est_panel_path, "existing panel CSV (skips simulation)");
    CLI::App* ana = app.add_subcommand("analyze", "full pipeline plus report");
    add_common(ana, ana_args);
    CLI::App* mc = app.add_subcommand("montecarlo", "replicated runs with summary statistics");
    add_common(mc, mc_args);
    CLI::App* rep = app.add_subcommand("report", "render the report from an artifact bundle");
    add_common(rep, rep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    namespace fs = std::filesystem;
    if (sim->parsed()) {
        auto cfg = load_config(sim_args);
        auto structure = cfg.structural();
        auto sc = cfg.simulation();
        auto workers = elearn::draw_population(sc, structure, sc.seed);
        elearn::Panel panel = elearn::simulate_panel(workers, structure, sc);
        fs::create_directories(sim_args.out_dir);
        std::ofstream os(fs::path(sim_args.out_dir) / "panel.csv");
        if (!os) throw elearn::ConfigError("cannot open output panel.csv");
        elearn::write_panel_csv(panel, os, "config " + cfg.hash());
        std::cout << "panel.csv written (" << panel.n_workers() << " workers, T=" << panel.horizon
                  << ")\n";
        return 0;
    }
    if (est->parsed()) {
        auto cfg = load_config(est_args);
        if (!est_panel_path.empty()) {
            std::ifstream is(est_panel_path);
            if (!is) throw elearn::ConfigError("cannot open panel " + est_panel_path);
            elearn::Panel panel = elearn::read_panel_csv(is);
            elearn::ProfileOptions popts;
            popts.covariates = cfg.covariates();
            popts.bootstrap_resamples = cfg.bootstrap_resamples;
            popts.bootstrap_seed = cfg.bootstrap_seed;
            auto profile = elearn::experience_profile(panel, popts);
            std::vector<double> ones(static_cast<std::size_t>(panel.horizon) + 1, 1.0);
            auto fit = elearn::fit_mixing(profile, ones, cfg.fit_options());
            fs::create_directories(est_args.out_dir);
            {
                std::ofstream os(fs::path(est_args.out_dir) / "estimates.csv");
                elearn::write_estimates_csv({profile}, os, "config " + cfg.hash());
            }
            {
                std::ofstream os(fs::path(est_args.out_dir) / "fit_summary.txt");
                os << "# config " << cfg.hash() << "\n";
                for (const auto& [k, v] : elearn::fit_summary(fit, "mixing"))
                    os << k << " = " << v << "\n";
            }
            std::cout << "estimates written to " << est_args.out_dir << "\n";
            return 0;
        }
        auto res = elearn::run_experiment(cfg, est_args.out_dir);
        std::cout << "kappa_hat = " << res.fit.kappa_hat << ", b0 = " << res.fit.b0
                  << ", b_inf = " << res.fit.b_inf << "\n";
        return 0;
    }
    if (ana->parsed()) {
        auto cfg = load_config(ana_args);
        auto res = elearn::run_experiment(cfg, ana_args.out_dir);
        std::cout << elearn::emit_report(res);
        return 0;
    }
    if (mc->parsed()) {
        auto cfg = load_config(mc_args);
        auto summary = elearn::run_replications(cfg);
        fs::create_directories(mc_args.out_dir);
        const std::string body = "# config " + cfg.hash() + "\n" + summary.serialize();
        std::ofstream os(fs::path(mc_args.out_dir) / "montecarlo_summary.txt");
        if (!os) throw elearn::ConfigError("cannot open montecarlo_summary.txt");
        os << body;
        std::cout << body;
        return 0;
    }
    if (rep->parsed()) {
        std::vector<std::string> missing;
        const std::string text = elearn::emit_report_from_dir(rep_args.out_dir, missing);
        std::cout << text;
        if (!missing.empty()) {
            std::cerr << "missing sections:\n";
            for (const auto& m : missing) std::cerr << "  - " << m << "\n";
            return 2;
        }
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const elearn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const elearn::InvalidParameter& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const elearn::IdentificationError& e) {
        std::cerr << "identification error: " << e.what() << "\n";
        return 3;
    } catch (const elearn::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
