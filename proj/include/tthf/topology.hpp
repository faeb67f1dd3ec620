#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tthf/errors.hpp"
#include "tthf/vector.hpp"

namespace tthf::topology {

// Undirected, connected device graph of one cluster. Edges are stored once
// with i < j; no self loops.
struct ClusterGraph {
    std::vector<int> node_ids;               // device indices in the cluster
    std::vector<std::pair<int, int>> edges;  // local indices, first < second

    int size() const { return static_cast<int>(node_ids.size()); }
    std::vector<std::vector<int>> adjacency() const;
    std::vector<int> degrees() const;
    bool is_connected() const;
    bool has_edge(int i, int j) const;
};

// Symmetric row-stochastic mixing matrix with its contraction factor
// lambda = rho(V - J/s).
struct ConsensusMatrix {
    std::vector<double> weights;  // row-major s x s
    int s = 0;
    double lambda = 0.0;

    double at(int i, int j) const { return weights[static_cast<std::size_t>(i) * s + j]; }
    double& at(int i, int j) { return weights[static_cast<std::size_t>(i) * s + j]; }
};

// Nodes placed uniformly in the unit square; edge iff distance <= radius.
// Disconnected draws are retried a bounded number of times, then patched by
// adding minimum-distance bridging edges between components.
ClusterGraph generate_random_geometric_cluster(int s_c, double radius,
                                               std::uint64_t seed);

// Metropolis-Hastings weights: v_ij = 1/(1+max(deg_i,deg_j)) on edges,
// diagonal makes rows sum to one. Throws DisconnectedGraph.
ConsensusMatrix metropolis_weights(const ClusterGraph& g);

// rho(V - 11^T/s): power iteration on the deflated matrix, tolerance 1e-10,
// cap 10000 iterations. Throws NoConvergence on a degenerate spectrum.
double spectral_radius(const std::vector<double>& V, int s_c);

// spectral_radius with a dense Jacobi eigendecomposition fallback when power
// iteration does not converge.
double spectral_radius_robust(const std::vector<double>& V, int s_c);

struct ToleranceNotMet : Error {
    ToleranceNotMet(std::string msg, ClusterGraph g, ConsensusMatrix m,
                    double achieved)
        : Error(std::move(msg)), closest_graph(std::move(g)),
          closest_matrix(std::move(m)), achieved_rho(achieved) {}
    ClusterGraph closest_graph;
    ConsensusMatrix closest_matrix;
    double achieved_rho;
};

// Bisection over the geometric radius until rho(V - J/s) is within +-0.05 of
// target_rho (at most 50 iterations). Throws ToleranceNotMet carrying the
// closest achieved pair.
std::pair<ClusterGraph, ConsensusMatrix> tune_radius_for_spectral_target(
    int s_c, double target_rho, std::uint64_t seed);

// Applies z <- V z exactly `rounds` times to the stacked vectors.
std::vector<ModelVector> run_consensus(const std::vector<ModelVector>& initial,
                                       const ConsensusMatrix& V, int rounds);

}  // namespace tthf::topology
