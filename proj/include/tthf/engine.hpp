#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tthf/data.hpp"
#include "tthf/errors.hpp"
#include "tthf/model.hpp"
#include "tthf/topology.hpp"
#include "tthf/vector.hpp"

namespace tthf::engine {

enum class ConsensusPolicy { none, fixed_period, adaptive };
enum class Participation { one_per_cluster, full };

// Step-size schedule eta_t = gamma / (t + alpha). When theorem_mode is set,
// run_* validates gamma > 1/mu and alpha >= gamma beta^2 / mu against the
// mu/beta fields.
struct Hyperparameters {
    double gamma = 1.0;
    double alpha = 1.0;
    int tau = 1;
    long total_steps = 100;
    ConsensusPolicy policy = ConsensusPolicy::none;
    double phi = 0.0;        // adaptive policy target coefficient
    int fixed_rounds = 1;    // fixed_period policy round count
    int period = 5;          // fixed_period cadence in SGD steps
    int batch_size = 16;
    std::uint64_t master_seed = 0;
    bool theorem_mode = false;
    double mu = 0.0;   // constants for theorem-mode validation
    double beta = 0.0;

    double eta(long t) const { return gamma / (static_cast<double>(t) + alpha); }
};

void validate_hyperparameters(const Hyperparameters& hp);

struct TraceRecord {
    long t = 0;
    double loss = 0.0;
    double loss_gap = 0.0;        // NaN when the optimum is unknown
    double dispersion_A = 0.0;    // rho-weighted sq. deviation of cluster means
    double consensus_eps2 = 0.0;  // rho-weighted mean squared consensus error
    double max_consensus_err = 0.0;
    std::vector<int> gamma_rounds;  // per cluster
    std::vector<double> upsilon;    // per cluster, max pairwise distance
    double metric = 0.0;            // eval accuracy (NaN when no eval split)
    double cum_energy = 0.0;        // filled by resource accounting
    double cum_delay = 0.0;
};

struct RunInputs {
    const data::FederatedDataset* dataset = nullptr;
    const model::LossModel* loss = nullptr;
    // one consensus matrix per cluster; required unless policy == none
    const std::vector<topology::ConsensusMatrix>* topologies = nullptr;
    const ModelVector* w_star = nullptr;      // optional
    const model::Shard* eval_split = nullptr;  // optional, enables `metric`
    ModelVector w0;
};

// Adaptive round count: ceil(log(eta_t phi / (sqrt(s_c) upsilon)) /
// log(lambda_c)) clamped at zero. Guarantees lambda^Gamma sqrt(s_c) upsilon
// <= eta_t phi.
int schedule_gamma_remark1(double eta_t, double phi, int s_c, double upsilon,
                           double lambda_c);

// Full two-timescale loop: local SGD, per-cluster consensus per policy,
// cluster-sampled aggregation every tau steps.
std::vector<TraceRecord> run_tthf(const RunInputs& in,
                                  const Hyperparameters& hp);

// No D2D phase; aggregation every `tau` steps, either averaging all devices
// or sampling one per cluster.
std::vector<TraceRecord> run_fedavg_baseline(const RunInputs& in,
                                             const Hyperparameters& hp,
                                             Participation participation,
                                             int tau);

}  // namespace tthf::engine
