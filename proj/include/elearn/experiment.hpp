#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elearn/analysis.hpp"
#include "elearn/config.hpp"
#include "elearn/estimate.hpp"
#include "elearn/panel.hpp"

namespace elearn {

struct ExperimentResult {
    ExperienceEstimates primary;                   // profile from the configured regime
    std::optional<ExperienceEstimates> secondary;  // complementary regime for sequential/joint
    MixingFit fit;
    std::vector<double> lambda_profile;
    std::string fit_mode;
    ReturnsDecomposition decomposition;  // implied by the fitted parameters
    SignalingSummary signaling;
    std::string config_hash;
};

// Runs simulate -> estimate -> analyze. When out_dir is nonempty, writes
// panel.csv, estimates.csv, fit_summary.txt, decomposition.csv, summary.txt,
// and config.txt there; partial outputs are removed on error.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir = "");

struct ParamStats {
    double truth = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    bool sd_defined = false;
    double bias = 0.0;
    double coverage = 0.0;
    bool coverage_defined = false;
};

struct ReplicationSummary {
    std::size_t n_reps = 0;
    std::size_t failures = 0;
    std::map<std::string, ParamStats> params;  // kappa, b0, b_inf

    std::string serialize() const;  // deterministic key=value document
};

// Replication r uses seed derived from (config.seed, r); the summary is
// identical for any jobs count.
ReplicationSummary run_replications(const ExperimentConfig& config);

// Three-panel human-readable table (parameters, weight-on-initial-signal at
// t = 5/10/15, IRR and signaling share).
std::string emit_report(const ExperimentResult& result);

// Renders the report from an artifact bundle directory; missing files are
// returned so the caller can fail with a list of absent sections.
std::string emit_report_from_dir(const std::string& dir, std::vector<std::string>& missing);

}  // namespace elearn
