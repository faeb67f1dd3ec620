#pragma once

#include <cstdint>
#include <vector>

#include "tthf/data.hpp"
#include "tthf/errors.hpp"
#include "tthf/rng.hpp"
#include "tthf/vector.hpp"

namespace tthf::model {

enum class LossKind { least_squares, squared_svm };

// Regularized loss family. Both kinds are lambda_reg-strongly convex, so
// mu = lambda_reg is a certified lower bound; beta comes from the data Gram
// matrix (estimate_beta).
struct LossModel {
    LossKind kind = LossKind::least_squares;
    double lambda_reg = 0.1;
    int num_classes = 0;   // squared_svm only (one-vs-rest)
    int feature_dim = 0;

    // parameter dimension M
    int param_dim() const {
        return kind == LossKind::squared_svm ? num_classes * feature_dim
                                             : feature_dim;
    }
    double mu() const { return lambda_reg; }
};

struct SgdContext {
    int batch_size = 16;
};

using Shard = std::vector<data::LabeledPoint>;

double point_loss(const LossModel& m, const data::LabeledPoint& p,
                  const ModelVector& w);
// grad += gradient of the (unregularized) per-point loss
void add_point_gradient(const LossModel& m, const data::LabeledPoint& p,
                        const ModelVector& w, ModelVector& grad,
                        double scale = 1.0);

// (1/D_i) sum point losses + (lambda/2)||w||^2
double local_loss(const LossModel& m, const Shard& shard, const ModelVector& w);
ModelVector full_gradient(const LossModel& m, const Shard& shard,
                          const ModelVector& w);

// Mini-batch gradient over a uniformly-without-replacement sample.
ModelVector sgd_gradient(const LossModel& m, const Shard& shard,
                         const ModelVector& w, const SgdContext& ctx, Rng& rng);

// Weighted aggregates per the loss decomposition F = sum_c rho_c F_hat_c.
double cluster_loss(const LossModel& m, const data::FederatedDataset& ds,
                    int cluster, const ModelVector& w);
ModelVector cluster_gradient(const LossModel& m,
                             const data::FederatedDataset& ds, int cluster,
                             const ModelVector& w);
double global_loss(const LossModel& m, const data::FederatedDataset& ds,
                   const ModelVector& w);
ModelVector global_gradient(const LossModel& m,
                            const data::FederatedDataset& ds,
                            const ModelVector& w);

// Exact curvature bound: max over devices of lam_max(Gram_i / D_i) (x2 for
// the squared hinge) + lambda_reg.
double estimate_beta(const LossModel& m, const data::FederatedDataset& ds);

// Max over devices and probe points of the empirical E||g_hat - grad F_i||^2
// over `draws` seeded mini-batch draws.
double estimate_sigma2(const LossModel& m, const data::FederatedDataset& ds,
                       const SgdContext& ctx,
                       const std::vector<ModelVector>& probe_points,
                       int draws = 1000, std::uint64_t seed = 0);

// Empirical gradient diversity: max_{c,w} ||grad F_hat_c(w) - grad F(w)||.
double measure_gradient_diversity(const LossModel& m,
                                  const data::FederatedDataset& ds,
                                  const std::vector<ModelVector>& probe_points);

// Top-1 accuracy of a one-vs-rest classifier on a labeled split.
double classification_accuracy(const LossModel& m, const Shard& split,
                               const ModelVector& w);

}  // namespace tthf::model
