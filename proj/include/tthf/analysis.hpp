#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "tthf/engine.hpp"
#include "tthf/errors.hpp"

namespace tthf::analysis {

// Constants entering the convergence bounds.
struct AnalysisConstants {
    double mu = 0.0;
    double beta = 0.0;
    double sigma2 = 0.0;
    double delta = 0.0;
    double rho_min = 0.0;   // min_c s_c / I
    double epsilon0 = 0.0;  // eps^(0) = eta_0 * phi under the adaptive policy
    double phi = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
    int tau = 1;

    double eta(long t) const { return gamma / (static_cast<double>(t) + alpha); }
};

// lambda_c^Gamma * sqrt(s_c) * Upsilon
double lemma1_bound(double lambda_c, int gamma_rounds, int s_c, double upsilon);

// Sigma_t = sum_{l=t_{k-1}}^{t-1} beta eta_l prod_{j=l+1}^{t-1} (1+2 eta_j beta)
double sigma_sum(const AnalysisConstants& k, long t, long t_km1);

// 12 (rho_min)^-1 Sigma_t^2 [sigma^2/beta^2 + delta^2/beta^2 + eps0^2]
double prop1_bound(const AnalysisConstants& k, long t, long t_km1);

struct Theorem1Result {
    std::vector<double> residuals;  // RHS - LHS per step, index t -> t+1
    double min_residual = 0.0;
    // fraction of steps with residual >= -2 * stderr(gap_{t+1})
    double frac_nonneg = 0.0;
};

// One-step inequality over replicate means. gap_means/disp_means are
// per-step replicate means indexed from t=1; gap_stderr may be empty (treated
// as zero tolerance). The epsilon terms use the policy bound eta_t * phi.
Theorem1Result theorem1_check(const std::vector<double>& gap_means,
                              const std::vector<double>& disp_means,
                              const std::vector<double>& gap_stderr,
                              const AnalysisConstants& k);

struct Theorem2Envelope {
    double nu = 0.0;
    double z = 0.0;
    double alpha = 0.0;
    double at(long t) const { return nu / (static_cast<double>(t) + alpha); }
};

// Z and nu of the sublinear envelope. Throws HypothesisViolated naming the
// failed condition.
Theorem2Envelope theorem2_envelope(const AnalysisConstants& k,
                                   double initial_gap);

struct ResourceModel {
    double e_d2d = 0.0;   // energy per D2D round per device
    double e_glob = 0.0;  // energy per uplink transmission
    double d_d2d = 0.0;   // delay per D2D round
    double d_glob = 0.0;  // delay per global aggregation
};

struct ResourceCurves {
    std::vector<double> cum_energy;  // one entry per trace step
    std::vector<double> cum_delay;
};

// Per-cluster consensus runs in parallel (delay takes the max over clusters);
// uplinks charge per transmitting device.
ResourceCurves resource_accounting(const std::vector<engine::TraceRecord>& trace,
                                   const ResourceModel& rmodel,
                                   const std::vector<int>& cluster_sizes,
                                   engine::Participation participation,
                                   int tau);

// First step index (1-based into the series) at which the metric reaches
// target_fraction of its peak over the run; nullopt when never reached.
std::optional<long> time_to_accuracy(const std::vector<double>& metric,
                                     double target_fraction);

}  // namespace tthf::analysis
