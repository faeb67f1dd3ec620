#include "tthf/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tthf::engine {

void validate_hyperparameters(const Hyperparameters& hp) {
    if (hp.tau < 1) throw ConfigError("hyperparameters: tau must be >= 1");
    if (hp.total_steps < 1)
        throw ConfigError("hyperparameters: total_steps must be >= 1");
    if (hp.batch_size < 1)
        throw ConfigError("hyperparameters: batch_size must be >= 1");
    if (hp.alpha <= 0.0)
        throw ConfigError("hyperparameters: alpha must be positive");
    if (hp.policy == ConsensusPolicy::adaptive && hp.phi <= 0.0)
        throw ConfigError("hyperparameters: adaptive policy requires phi > 0");
    if (hp.theorem_mode) {
        if (hp.mu <= 0.0 || hp.beta <= 0.0)
            throw ConfigError("hyperparameters: theorem mode requires mu and "
                              "beta constants");
        if (hp.gamma * hp.mu <= 1.0)
            throw ConfigError("hyperparameters: theorem mode requires "
                              "gamma > 1/mu");
        if (hp.alpha < hp.gamma * hp.beta * hp.beta / hp.mu)
            throw ConfigError("hyperparameters: theorem mode requires "
                              "alpha >= gamma*beta^2/mu");
    }
}

int schedule_gamma_remark1(double eta_t, double phi, int s_c, double upsilon,
                           double lambda_c) {
    if (!(lambda_c > 0.0 && lambda_c < 1.0))
        throw InvalidLambda("schedule_gamma_remark1: lambda_c must lie in "
                            "(0,1), got " +
                            std::to_string(lambda_c));
    if (upsilon <= 0.0) return 0;
    const double target = eta_t * phi;
    const double spread = std::sqrt(static_cast<double>(s_c)) * upsilon;
    if (target >= spread) return 0;
    if (target <= 0.0)
        throw Error("schedule_gamma_remark1: zero error target with nonzero "
                    "dispersion is unattainable");
    int rounds = static_cast<int>(
        std::ceil(std::log(target / spread) / std::log(lambda_c)));
    rounds = std::max(rounds, 0);
    // guard against floating-point rounding at the ceil boundary
    while (std::pow(lambda_c, rounds) * spread > target) ++rounds;
    return rounds;
}

namespace {

struct LoopConfig {
    bool d2d_enabled = true;
    Participation participation = Participation::one_per_cluster;
    int tau = 1;
};

double max_pairwise_dist(const std::vector<ModelVector>& vs) {
    double worst = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i + 1; j < vs.size(); ++j)
            worst = std::max(worst, sq_dist(vs[i], vs[j]));
    return std::sqrt(worst);
}

std::vector<TraceRecord> run_loop(const RunInputs& in,
                                  const Hyperparameters& hp,
                                  const LoopConfig& lc) {
    validate_hyperparameters(hp);
    const auto& ds = *in.dataset;
    const auto& loss = *in.loss;
    const int I = ds.num_devices;
    const int N = ds.num_clusters;
    const auto by_cluster = ds.devices_by_cluster();
    for (int c = 0; c < N; ++c)
        if (by_cluster[c].empty())
            throw ConfigError("run: cluster " + std::to_string(c) +
                              " has no devices");
    if (lc.d2d_enabled && hp.policy != ConsensusPolicy::none) {
        if (in.topologies == nullptr ||
            static_cast<int>(in.topologies->size()) != N)
            throw ConfigError("run: topologies must cover all clusters");
        for (int c = 0; c < N; ++c)
            if ((*in.topologies)[c].s != static_cast<int>(by_cluster[c].size()))
                throw ConfigError("run: topology size mismatch in cluster " +
                                  std::to_string(c));
    }

    std::vector<double> rho(N);  // varrho_c = s_c / I
    for (int c = 0; c < N; ++c)
        rho[c] = static_cast<double>(by_cluster[c].size()) / I;

    const std::size_t dim = in.w0.dim();
    std::vector<ModelVector> models(I, in.w0);
    std::vector<ModelVector> intermediates(I, ModelVector(dim));
    ModelVector global = in.w0;

    model::SgdContext ctx{hp.batch_size};
    std::vector<TraceRecord> trace;
    trace.reserve(hp.total_steps);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double loss_star =
        in.w_star != nullptr ? model::global_loss(loss, ds, *in.w_star) : nan;

    for (long t = 1; t <= hp.total_steps; ++t) {
        const double eta_prev = hp.eta(t - 1);
        const double eta_now = hp.eta(t);

        // local SGD step, per-device derived streams
        for (int i = 0; i < I; ++i) {
            Rng rng(derive_seed(hp.master_seed, stream::minibatch, i,
                                static_cast<std::uint64_t>(t)));
            ModelVector g = model::sgd_gradient(loss, ds.shards[i], models[i],
                                                ctx, rng);
            intermediates[i] = models[i];
            intermediates[i].add_scaled(-eta_prev, g);
        }

        TraceRecord rec;
        rec.t = t;
        rec.gamma_rounds.assign(N, 0);
        rec.upsilon.assign(N, 0.0);

        // consensus phase per cluster
        std::vector<ModelVector> cluster_means(N, ModelVector(dim));
        double eps2 = 0.0, max_err = 0.0;
        for (int c = 0; c < N; ++c) {
            const auto& members = by_cluster[c];
            const int s_c = static_cast<int>(members.size());
            std::vector<ModelVector> local(s_c, ModelVector(dim));
            for (int k = 0; k < s_c; ++k) local[k] = intermediates[members[k]];
            const double ups = max_pairwise_dist(local);
            rec.upsilon[c] = ups;

            int rounds = 0;
            if (lc.d2d_enabled && hp.policy == ConsensusPolicy::fixed_period) {
                if (hp.period > 0 && t % hp.period == 0)
                    rounds = hp.fixed_rounds;
            } else if (lc.d2d_enabled &&
                       hp.policy == ConsensusPolicy::adaptive) {
                const double lam = (*in.topologies)[c].lambda;
                if (lam <= 0.0) {
                    // exact averaging in one round (complete uniform graph)
                    rounds = (ups > 0.0 &&
                              eta_now * hp.phi <
                                  std::sqrt(static_cast<double>(s_c)) * ups)
                                 ? 1
                                 : 0;
                } else {
                    rounds = schedule_gamma_remark1(eta_now, hp.phi, s_c, ups,
                                                    lam);
                }
            }
            rec.gamma_rounds[c] = rounds;

            std::vector<ModelVector> mixed =
                rounds > 0
                    ? topology::run_consensus(local, (*in.topologies)[c],
                                              rounds)
                    : local;
            for (int k = 0; k < s_c; ++k) models[members[k]] = mixed[k];

            // cluster mean over pre-consensus intermediate models
            cluster_means[c] = mean_of(local);
            double cluster_eps2 = 0.0;
            for (int k = 0; k < s_c; ++k) {
                double e2 = sq_dist(mixed[k], cluster_means[c]);
                cluster_eps2 += e2;
                max_err = std::max(max_err, std::sqrt(e2));
            }
            eps2 += rho[c] * cluster_eps2 / s_c;
        }
        rec.consensus_eps2 = eps2;
        rec.max_consensus_err = max_err;

        // model dispersion across cluster means, single-trajectory measurement
        ModelVector global_mean(dim);
        for (int c = 0; c < N; ++c) global_mean.add_scaled(rho[c], cluster_means[c]);
        double A = 0.0;
        for (int c = 0; c < N; ++c)
            A += rho[c] * sq_dist(cluster_means[c], global_mean);
        rec.dispersion_A = A;

        // cluster-sampled global aggregation at interval ends
        if (t % lc.tau == 0) {
            const long k = t / lc.tau;
            if (lc.participation == Participation::full) {
                global = ModelVector(dim);
                for (int i = 0; i < I; ++i)
                    global.add_scaled(1.0 / I, models[i]);
            } else {
                Rng rng(derive_seed(hp.master_seed, stream::sampling,
                                    static_cast<std::uint64_t>(k)));
                global = ModelVector(dim);
                for (int c = 0; c < N; ++c) {
                    std::uniform_int_distribution<int> pick(
                        0, static_cast<int>(by_cluster[c].size()) - 1);
                    global.add_scaled(rho[c], models[by_cluster[c][pick(rng)]]);
                }
            }
            for (int i = 0; i < I; ++i) models[i] = global;  // broadcast
            rec.loss = model::global_loss(loss, ds, global);
        } else {
            // between aggregations the traced global model is the rho-weighted
            // average of the post-consensus local models
            ModelVector avg(dim);
            for (int c = 0; c < N; ++c) {
                ModelVector cm(dim);
                for (int idx : by_cluster[c])
                    cm.add_scaled(1.0 / static_cast<double>(by_cluster[c].size()),
                                  models[idx]);
                avg.add_scaled(rho[c], cm);
            }
            rec.loss = model::global_loss(loss, ds, avg);
            global = avg;
        }
        rec.loss_gap = in.w_star != nullptr ? rec.loss - loss_star : nan;
        rec.metric = in.eval_split != nullptr
                         ? model::classification_accuracy(loss, *in.eval_split,
                                                          global)
                         : nan;
        trace.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace

std::vector<TraceRecord> run_tthf(const RunInputs& in,
                                  const Hyperparameters& hp) {
    LoopConfig lc;
    lc.d2d_enabled = true;
    lc.participation = Participation::one_per_cluster;
    lc.tau = hp.tau;
    return run_loop(in, hp, lc);
}

std::vector<TraceRecord> run_fedavg_baseline(const RunInputs& in,
                                             const Hyperparameters& hp,
                                             Participation participation,
                                             int tau) {
    Hyperparameters local = hp;
    local.policy = ConsensusPolicy::none;
    local.tau = tau;
    LoopConfig lc;
    lc.d2d_enabled = false;
    lc.participation = participation;
    lc.tau = tau;
    return run_loop(in, local, lc);
}

}  // namespace tthf::engine
