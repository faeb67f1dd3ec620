#include "tthf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tthf::model {

double point_loss(const LossModel& m, const data::LabeledPoint& p,
                  const ModelVector& w) {
    if (m.kind == LossKind::least_squares) {
        double r = kernels::dot(p.x.data(), w.data(), p.x.size()) - p.y;
        return 0.5 * r * r;
    }
    // one-vs-rest squared hinge: sum_k max(0, 1 - s_k w_k.x)^2
    const int d = m.feature_dim;
    double loss = 0.0;
    for (int k = 0; k < m.num_classes; ++k) {
        double s = (p.label() == k) ? 1.0 : -1.0;
        double margin =
            1.0 - s * kernels::dot(p.x.data(), w.data() + static_cast<std::size_t>(k) * d,
                                   static_cast<std::size_t>(d));
        if (margin > 0.0) loss += margin * margin;
    }
    return loss;
}

void add_point_gradient(const LossModel& m, const data::LabeledPoint& p,
                        const ModelVector& w, ModelVector& grad, double scale) {
    if (m.kind == LossKind::least_squares) {
        double r = kernels::dot(p.x.data(), w.data(), p.x.size()) - p.y;
        kernels::axpy(scale * r, p.x.data(), grad.data(), p.x.size());
        return;
    }
    const int d = m.feature_dim;
    for (int k = 0; k < m.num_classes; ++k) {
        double s = (p.label() == k) ? 1.0 : -1.0;
        const double* wk = w.data() + static_cast<std::size_t>(k) * d;
        double margin = 1.0 - s * kernels::dot(p.x.data(), wk,
                                               static_cast<std::size_t>(d));
        if (margin > 0.0)
            kernels::axpy(scale * (-2.0 * s * margin), p.x.data(),
                          grad.data() + static_cast<std::size_t>(k) * d,
                          static_cast<std::size_t>(d));
    }
}

double local_loss(const LossModel& m, const Shard& shard,
                  const ModelVector& w) {
    if (shard.empty()) throw EmptyShard("local_loss: empty shard");
    double s = 0.0;
    for (const auto& p : shard) s += point_loss(m, p, w);
    return s / static_cast<double>(shard.size()) +
           0.5 * m.lambda_reg * w.sq_norm();
}

ModelVector full_gradient(const LossModel& m, const Shard& shard,
                          const ModelVector& w) {
    if (shard.empty()) throw EmptyShard("full_gradient: empty shard");
    ModelVector g(w.dim());
    const double inv = 1.0 / static_cast<double>(shard.size());
    for (const auto& p : shard) add_point_gradient(m, p, w, g, inv);
    g.add_scaled(m.lambda_reg, w);
    return g;
}

ModelVector sgd_gradient(const LossModel& m, const Shard& shard,
                         const ModelVector& w, const SgdContext& ctx,
                         Rng& rng) {
    const int D = static_cast<int>(shard.size());
    if (ctx.batch_size > D)
        throw BatchTooLarge("sgd_gradient: batch_size " +
                            std::to_string(ctx.batch_size) + " > shard size " +
                            std::to_string(D));
    // partial Fisher-Yates draw without replacement
    std::vector<int> idx(D);
    std::iota(idx.begin(), idx.end(), 0);
    ModelVector g(w.dim());
    const double inv = 1.0 / static_cast<double>(ctx.batch_size);
    for (int b = 0; b < ctx.batch_size; ++b) {
        std::uniform_int_distribution<int> pick(b, D - 1);
        std::swap(idx[b], idx[pick(rng)]);
        add_point_gradient(m, shard[idx[b]], w, g, inv);
    }
    g.add_scaled(m.lambda_reg, w);
    return g;
}

double cluster_loss(const LossModel& m, const data::FederatedDataset& ds,
                    int cluster, const ModelVector& w) {
    double s = 0.0;
    int n = 0;
    for (int i = 0; i < ds.num_devices; ++i)
        if (ds.cluster_of[i] == cluster) {
            s += local_loss(m, ds.shards[i], w);
            ++n;
        }
    return s / n;
}

ModelVector cluster_gradient(const LossModel& m,
                             const data::FederatedDataset& ds, int cluster,
                             const ModelVector& w) {
    ModelVector g(w.dim());
    int n = 0;
    for (int i = 0; i < ds.num_devices; ++i)
        if (ds.cluster_of[i] == cluster) ++n;
    for (int i = 0; i < ds.num_devices; ++i)
        if (ds.cluster_of[i] == cluster) {
            ModelVector gi = full_gradient(m, ds.shards[i], w);
            g.add_scaled(1.0 / n, gi);
        }
    return g;
}

double global_loss(const LossModel& m, const data::FederatedDataset& ds,
                   const ModelVector& w) {
    double s = 0.0;
    for (int i = 0; i < ds.num_devices; ++i)
        s += local_loss(m, ds.shards[i], w);
    return s / ds.num_devices;
}

ModelVector global_gradient(const LossModel& m,
                            const data::FederatedDataset& ds,
                            const ModelVector& w) {
    ModelVector g(w.dim());
    for (int i = 0; i < ds.num_devices; ++i) {
        ModelVector gi = full_gradient(m, ds.shards[i], w);
        g.add_scaled(1.0 / ds.num_devices, gi);
    }
    return g;
}

namespace {

// Largest eigenvalue of (1/D) X^T X by power iteration on the Gram action.
double gram_top_eigenvalue(const Shard& shard) {
    const std::size_t d = shard[0].x.size();
    const double invD = 1.0 / static_cast<double>(shard.size());
    std::vector<double> x(d), y(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = 1.0 + 0.1 * (i % 7);
    double est = 0.0;
    for (int it = 0; it < 2000; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (const auto& p : shard) {
            double a = kernels::dot(p.x.data(), x.data(), d) * invD;
            kernels::axpy(a, p.x.data(), y.data(), d);
        }
        double n = std::sqrt(kernels::sq_norm(y.data(), d));
        if (n < 1e-300) return 0.0;
        for (std::size_t i = 0; i < d; ++i) x[i] = y[i] / n;
        if (it > 0 && std::abs(n - est) <= 1e-12 * std::max(1.0, n)) return n;
        est = n;
    }
    return est;
}

}  // namespace

double estimate_beta(const LossModel& m, const data::FederatedDataset& ds) {
    double worst = 0.0;
    for (const auto& shard : ds.shards) {
        if (shard.empty()) continue;
        worst = std::max(worst, gram_top_eigenvalue(shard));
    }
    const double hess_scale = m.kind == LossKind::squared_svm ? 2.0 : 1.0;
    return hess_scale * worst + m.lambda_reg;
}

double estimate_sigma2(const LossModel& m, const data::FederatedDataset& ds,
                       const SgdContext& ctx,
                       const std::vector<ModelVector>& probe_points, int draws,
                       std::uint64_t seed) {
    double worst = 0.0;
    for (int i = 0; i < ds.num_devices; ++i) {
        for (std::size_t pi = 0; pi < probe_points.size(); ++pi) {
            const ModelVector& w = probe_points[pi];
            ModelVector exact = full_gradient(m, ds.shards[i], w);
            Rng rng(derive_seed(seed, stream::minibatch, i, pi));
            double acc = 0.0;
            for (int dwi = 0; dwi < draws; ++dwi) {
                ModelVector g = sgd_gradient(m, ds.shards[i], w, ctx, rng);
                acc += sq_dist(g, exact);
            }
            worst = std::max(worst, acc / draws);
        }
    }
    return worst;
}

double measure_gradient_diversity(const LossModel& m,
                                  const data::FederatedDataset& ds,
                                  const std::vector<ModelVector>& probe_points) {
    double worst = 0.0;
    for (const ModelVector& w : probe_points) {
        ModelVector g = global_gradient(m, ds, w);
        for (int c = 0; c < ds.num_clusters; ++c) {
            ModelVector gc = cluster_gradient(m, ds, c, w);
            worst = std::max(worst, dist(gc, g));
        }
    }
    return worst;
}

double classification_accuracy(const LossModel& m, const Shard& split,
                               const ModelVector& w) {
    if (split.empty()) return 0.0;
    const int d = m.feature_dim;
    int correct = 0;
    for (const auto& p : split) {
        int best = 0;
        double best_score = -1e300;
        for (int k = 0; k < m.num_classes; ++k) {
            double s = kernels::dot(
                p.x.data(), w.data() + static_cast<std::size_t>(k) * d,
                static_cast<std::size_t>(d));
            if (s > best_score) {
                best_score = s;
                best = k;
            }
        }
        if (best == p.label()) ++correct;
    }
    return static_cast<double>(correct) / split.size();
}

}  // namespace tthf::model
