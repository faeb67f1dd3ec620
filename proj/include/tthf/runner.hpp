#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tthf/analysis.hpp"
#include "tthf/config.hpp"
#include "tthf/data.hpp"
#include "tthf/engine.hpp"
#include "tthf/model.hpp"
#include "tthf/topology.hpp"

namespace tthf::cli {

// Everything instantiated from an ExperimentConfig.
struct BuiltExperiment {
    data::FederatedDataset dataset;
    model::LossModel loss;
    std::vector<topology::ConsensusMatrix> topologies;
    std::vector<int> cluster_sizes;
    std::optional<ModelVector> w_star;
    model::Shard eval_split;
    engine::Hyperparameters hp;  // mu/beta filled in
    double beta = 0.0;
};

BuiltExperiment build_experiment(const ExperimentConfig& cfg);

// Empirical constants for bound evaluation on a built experiment.
analysis::AnalysisConstants estimate_constants(const BuiltExperiment& built,
                                               const ExperimentConfig& cfg);

// Replicate traces; replicate r uses master seed derived from (seed, r).
std::vector<std::vector<engine::TraceRecord>> run_replicates(
    const BuiltExperiment& built, const ExperimentConfig& cfg, int jobs);

struct BoundCheckRow {
    std::string check;
    long t = 0;
    double measured = 0.0;
    double bound = 0.0;
    bool violated = false;
};

struct RunSummary {
    std::uint64_t config_hash = 0;
    std::uint64_t dm_hash = 0;
    std::uint64_t seed = 0;
    int replicates = 1;
    double final_loss = 0.0;
    double final_loss_gap = 0.0;
    long time_to_accuracy = -1;  // -1 when not reached or no metric
    double total_energy = 0.0;
    double total_delay = 0.0;
    long bound_violations = 0;
    double baseline_final_loss = 0.0;  // NaN when no baseline was run
};

struct ExperimentResult {
    RunSummary summary;
    std::vector<BoundCheckRow> bounds;
    bool ok = true;  // no enabled bound check failed
};

// Full pipeline: build, run replicates, verify bounds when enabled, write
// trace.csv / bounds.csv / summary.csv atomically into out_dir. Partial
// outputs are removed on failure. `bounds_only` skips trace/summary output.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                bool bounds_only = false);

// Aligned comparison table from summary.csv files; throws IncompatibleRuns
// when the data/model sections differ.
std::string compare_runs(const std::vector<std::string>& summary_paths);

}  // namespace tthf::cli
