#pragma once

#include <cstdint>
#include <string>

#include "tthf/analysis.hpp"
#include "tthf/engine.hpp"
#include "tthf/errors.hpp"

namespace tthf::cli {

enum class DataKind { synthetic_quadratic, synthetic_blobs, idx };
enum class BaselineKind { none, fedavg_full, fedavg_sampled };

struct NetworkConfig {
    int devices = 25;
    int clusters = 5;
    double spectral_target = 0.7;  // ignored when radius > 0
    double radius = 0.0;           // fixed geometric radius when positive
    std::uint64_t topology_seed = 1;
};

struct DataConfig {
    DataKind kind = DataKind::synthetic_quadratic;
    // synthetic_quadratic
    int dim = 5;
    int points_per_device = 20;
    double heterogeneity = 1.0;
    // synthetic_blobs / idx
    int num_classes = 10;
    int points_per_class = 100;
    double spread = 1.0;
    int labels_per_device = 3;
    double eval_fraction = 0.2;
    std::string images_path;
    std::string labels_path;
    std::uint64_t data_seed = 1;
};

struct ModelConfig {
    model::LossKind kind = model::LossKind::least_squares;
    double lambda_reg = 1.0;
};

struct RunConfig {
    int replicates = 1;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool verify_bounds = false;
    BaselineKind baseline = BaselineKind::none;
    int baseline_tau = 1;
    int jobs = 1;
};

struct ExperimentConfig {
    NetworkConfig network;
    DataConfig data;
    ModelConfig model;
    engine::Hyperparameters hp;
    analysis::ResourceModel resources;
    RunConfig run;
};

// Parses and fully validates a JSON config; unknown keys are rejected and
// defaults are materialized. Throws ParseError / ValidationError.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// Canonical serialization (sorted keys, all defaults explicit).
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization; stable across machines.
std::uint64_t config_hash(const ExperimentConfig& cfg);
// Hash over the data+model sections only, used by `compare`.
std::uint64_t data_model_hash(const ExperimentConfig& cfg);

}  // namespace tthf::cli
