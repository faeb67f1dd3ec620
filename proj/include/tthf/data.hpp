#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tthf/errors.hpp"
#include "tthf/vector.hpp"

namespace tthf::data {

struct LabeledPoint {
    std::vector<double> x;
    double y = 0.0;  // regression target, or integer class label

    int label() const { return static_cast<int>(y); }
};

// Per-device shards plus the device -> cluster partition.
struct FederatedDataset {
    std::vector<std::vector<LabeledPoint>> shards;  // shards[i] = D_i points
    std::vector<int> cluster_of;                    // device -> cluster
    int num_devices = 0;
    int num_clusters = 0;
    int labels_per_device = 0;  // 0 when not label-partitioned

    int feature_dim() const;
    std::vector<std::vector<int>> devices_by_cluster() const;
    // s_c / I
    double cluster_weight(int c) const;
};

struct SynthResult {
    FederatedDataset dataset;
    ModelVector optimum;  // closed-form minimizer of the pooled objective
};

// Least-squares task with a known optimum. Every device holds the same
// feature matrix; labels follow a per-cluster true parameter
// w_true + heterogeneity * u_c, so gradient diversity scales linearly with
// `heterogeneity` and vanishes at zero.
SynthResult synth_quadratic(int dim, int num_devices, int num_clusters,
                            int points_per_device, double heterogeneity,
                            double lambda_reg, std::uint64_t seed);

// Assigns `labels_per_device` classes to each device (round-robin, rotated
// per device with a seeded offset) and splits each class's points evenly
// among the devices holding that class.
FederatedDataset partition_label_skew(const std::vector<LabeledPoint>& pool,
                                      int num_devices, int num_clusters,
                                      int labels_per_device, int num_classes,
                                      std::uint64_t seed);

// Gaussian-blob classification pool (one mean per class).
std::vector<LabeledPoint> make_blob_pool(int num_classes, int points_per_class,
                                         int dim, double spread,
                                         std::uint64_t seed);

// IDX (MNIST-family) reader; pixels scaled to [0,1].
std::vector<LabeledPoint> load_idx(const std::string& images_path,
                                   const std::string& labels_path);

}  // namespace tthf::data
