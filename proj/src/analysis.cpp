#include "tthf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tthf::analysis {

double lemma1_bound(double lambda_c, int gamma_rounds, int s_c,
                    double upsilon) {
    return std::pow(lambda_c, gamma_rounds) *
           std::sqrt(static_cast<double>(s_c)) * upsilon;
}

double sigma_sum(const AnalysisConstants& k, long t, long t_km1) {
    double sum = 0.0;
    for (long l = t_km1; l <= t - 1; ++l) {
        double prod = 1.0;
        for (long j = l + 1; j <= t - 1; ++j)
            prod *= 1.0 + 2.0 * k.eta(j) * k.beta;
        sum += k.beta * k.eta(l) * prod;
    }
    return sum;
}

double prop1_bound(const AnalysisConstants& k, long t, long t_km1) {
    if (k.alpha < k.gamma * k.beta * k.beta / k.mu)
        throw HypothesisViolated("prop1_bound: requires alpha >= "
                                 "gamma*beta^2/mu");
    const double s = sigma_sum(k, t, t_km1);
    const double b2 = k.beta * k.beta;
    return 12.0 / k.rho_min * s * s *
           (k.sigma2 / b2 + k.delta * k.delta / b2 + k.epsilon0 * k.epsilon0);
}

Theorem1Result theorem1_check(const std::vector<double>& gap_means,
                              const std::vector<double>& disp_means,
                              const std::vector<double>& gap_stderr,
                              const AnalysisConstants& k) {
    if (gap_means.empty())
        throw UnknownOptimum("theorem1_check: no loss-gap series (optimum "
                             "unknown?)");
    Theorem1Result out;
    const std::size_t n = gap_means.size();
    out.min_residual = std::numeric_limits<double>::infinity();
    std::size_t nonneg = 0, total = 0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const long step = static_cast<long>(t) + 1;
        const double eta = k.eta(step);
        const double eta_next = k.eta(step + 1);
        const double eps = eta * k.phi;
        const double eps_next = eta_next * k.phi;
        const double rhs =
            (1.0 - k.mu * eta) * gap_means[t] +
            0.5 * eta * k.beta * k.beta * disp_means[t] +
            0.5 * (eta * k.beta * k.beta * eps * eps +
                   eta * eta * k.beta * k.sigma2 + k.beta * eps_next * eps_next);
        const double residual = rhs - gap_means[t + 1];
        out.residuals.push_back(residual);
        out.min_residual = std::min(out.min_residual, residual);
        const double tol =
            t + 1 < gap_stderr.size() ? 2.0 * gap_stderr[t + 1] : 0.0;
        ++total;
        if (residual >= -tol) ++nonneg;
    }
    out.frac_nonneg = total > 0 ? static_cast<double>(nonneg) / total : 1.0;
    return out;
}

Theorem2Envelope theorem2_envelope(const AnalysisConstants& k,
                                   double initial_gap) {
    if (k.gamma * k.mu <= 1.0)
        throw HypothesisViolated("theorem2_envelope: requires gamma > 1/mu");
    if (k.alpha < k.gamma * k.beta * k.beta / k.mu)
        throw HypothesisViolated("theorem2_envelope: requires alpha >= "
                                 "gamma*beta^2/mu");
    if (k.alpha <= 1.0)
        throw HypothesisViolated("theorem2_envelope: requires alpha > 1");
    if (k.tau < 1)
        throw HypothesisViolated("theorem2_envelope: requires tau >= 1");

    const double beta = k.beta;
    const double tau = static_cast<double>(k.tau);
    const double z =
        0.5 * (k.sigma2 / beta + 2.0 * k.phi * k.phi / beta) +
        24.0 / k.rho_min * beta * k.gamma * (tau - 1.0) *
            (1.0 + (tau - 2.0) / k.alpha) *
            std::pow(1.0 + (tau - 1.0) / (k.alpha - 1.0), 4.0 * beta * k.gamma) *
            (k.sigma2 / beta + k.phi * k.phi / beta +
             k.delta * k.delta / beta);

    Theorem2Envelope env;
    env.z = z;
    env.alpha = k.alpha;
    env.nu = std::max(beta * beta * k.gamma * k.gamma * z / (k.mu * k.gamma - 1.0),
                      k.alpha * initial_gap);
    return env;
}

ResourceCurves resource_accounting(const std::vector<engine::TraceRecord>& trace,
                                   const ResourceModel& rmodel,
                                   const std::vector<int>& cluster_sizes,
                                   engine::Participation participation,
                                   int tau) {
    ResourceCurves out;
    out.cum_energy.reserve(trace.size());
    out.cum_delay.reserve(trace.size());
    const int total_devices =
        std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), 0);
    double energy = 0.0, delay = 0.0;
    for (const auto& rec : trace) {
        int max_rounds = 0;
        for (std::size_t c = 0; c < rec.gamma_rounds.size(); ++c) {
            energy += static_cast<double>(rec.gamma_rounds[c]) *
                      cluster_sizes[c] * rmodel.e_d2d;
            max_rounds = std::max(max_rounds, rec.gamma_rounds[c]);
        }
        delay += max_rounds * rmodel.d_d2d;
        if (tau > 0 && rec.t % tau == 0) {
            const int uplinks = participation == engine::Participation::full
                                    ? total_devices
                                    : static_cast<int>(cluster_sizes.size());
            energy += uplinks * rmodel.e_glob;
            delay += rmodel.d_glob;
        }
        out.cum_energy.push_back(energy);
        out.cum_delay.push_back(delay);
    }
    return out;
}

std::optional<long> time_to_accuracy(const std::vector<double>& metric,
                                     double target_fraction) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : metric)
        if (std::isfinite(v)) peak = std::max(peak, v);
    if (!std::isfinite(peak)) return std::nullopt;
    const double target = target_fraction * peak;
    for (std::size_t i = 0; i < metric.size(); ++i)
        if (std::isfinite(metric[i]) && metric[i] >= target)
            return static_cast<long>(i) + 1;
    return std::nullopt;
}

}  // namespace tthf::analysis
