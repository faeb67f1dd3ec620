#include "tthf/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "tthf/rng.hpp"

namespace tthf::topology {

std::vector<std::vector<int>> ClusterGraph::adjacency() const {
    std::vector<std::vector<int>> adj(node_ids.size());
    for (auto [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    return adj;
}

std::vector<int> ClusterGraph::degrees() const {
    std::vector<int> deg(node_ids.size(), 0);
    for (auto [i, j] : edges) {
        ++deg[i];
        ++deg[j];
    }
    return deg;
}

bool ClusterGraph::is_connected() const {
    const int n = size();
    if (n <= 1) return true;
    auto adj = adjacency();
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                q.push(v);
            }
    }
    return count == n;
}

bool ClusterGraph::has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::find(edges.begin(), edges.end(), std::make_pair(i, j)) !=
           edges.end();
}

namespace {

struct Placement {
    std::vector<double> x, y;
};

Placement place_nodes(int n, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Placement p;
    p.x.resize(n);
    p.y.resize(n);
    for (int i = 0; i < n; ++i) p.x[i] = u(rng);
    for (int i = 0; i < n; ++i) p.y[i] = u(rng);
    return p;
}

double node_dist(const Placement& p, int i, int j) {
    return std::hypot(p.x[i] - p.x[j], p.y[i] - p.y[j]);
}

ClusterGraph threshold_graph(const Placement& p, int n, double radius) {
    ClusterGraph g;
    g.node_ids.resize(n);
    std::iota(g.node_ids.begin(), g.node_ids.end(), 0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (node_dist(p, i, j) <= radius) g.edges.emplace_back(i, j);
    return g;
}

std::vector<int> component_labels(const ClusterGraph& g) {
    const int n = g.size();
    auto adj = g.adjacency();
    std::vector<int> label(n, -1);
    int next = 0;
    for (int s = 0; s < n; ++s) {
        if (label[s] != -1) continue;
        std::queue<int> q;
        q.push(s);
        label[s] = next;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (label[v] == -1) {
                    label[v] = next;
                    q.push(v);
                }
        }
        ++next;
    }
    return label;
}

// Repeatedly joins the two closest components with a bridging edge.
void bridge_components(ClusterGraph& g, const Placement& p) {
    while (!g.is_connected()) {
        auto label = component_labels(g);
        double best = std::numeric_limits<double>::infinity();
        std::pair<int, int> pick{-1, -1};
        const int n = g.size();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (label[i] == label[j]) continue;
                double d = node_dist(p, i, j);
                if (d < best) {
                    best = d;
                    pick = {i, j};
                }
            }
        g.edges.push_back(pick);
    }
}

}  // namespace

ClusterGraph generate_random_geometric_cluster(int s_c, double radius,
                                               std::uint64_t seed) {
    constexpr int kMaxAttempts = 20;
    ClusterGraph last;
    Placement last_p;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(seed, stream::topology, attempt));
        Placement p = place_nodes(s_c, rng);
        ClusterGraph g = threshold_graph(p, s_c, radius);
        if (g.is_connected()) return g;
        last = std::move(g);
        last_p = std::move(p);
    }
    bridge_components(last, last_p);
    return last;
}

ConsensusMatrix metropolis_weights(const ClusterGraph& g) {
    if (!g.is_connected())
        throw DisconnectedGraph("metropolis_weights: graph is not connected");
    const int n = g.size();
    ConsensusMatrix m;
    m.s = n;
    m.weights.assign(static_cast<std::size_t>(n) * n, 0.0);
    auto deg = g.degrees();
    for (auto [i, j] : g.edges) {
        double w = 1.0 / (1.0 + std::max(deg[i], deg[j]));
        m.at(i, j) = w;
        m.at(j, i) = w;
    }
    for (int i = 0; i < n; ++i) {
        double off = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) off += m.at(i, j);
        m.at(i, i) = 1.0 - off;
    }
    m.lambda = spectral_radius_robust(m.weights, n);
    return m;
}

namespace {

// y = (V - J/n) x
void deflated_mul(const std::vector<double>& V, int n,
                  const std::vector<double>& x, std::vector<double>& y) {
    double xsum = std::accumulate(x.begin(), x.end(), 0.0);
    double avg = xsum / n;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = V.data() + static_cast<std::size_t>(i) * n;
        s = kernels::dot(row, x.data(), static_cast<std::size_t>(n));
        y[i] = s - avg;
    }
}

// Jacobi eigenvalue iteration for small dense symmetric matrices.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
    auto at = [&](int i, int j) -> double& {
        return a[static_cast<std::size_t>(i) * n + j];
    };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(at(p, q)) < 1e-18) continue;
                double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = at(i, i);
    return ev;
}

}  // namespace

double spectral_radius(const std::vector<double>& V, int s_c) {
    const int n = s_c;
    if (n == 1) return 0.0;
    // deterministic non-uniform start vector, orthogonalized against 1
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.37 * i + 0.11 * ((i * 7) % 5);
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    for (double& v : x) v -= mean;

    double prev = 0.0;
    for (int it = 0; it < 10000; ++it) {
        deflated_mul(V, n, x, y);
        double ynorm = std::sqrt(kernels::sq_norm(y.data(), n));
        if (ynorm < 1e-300) return 0.0;  // deflated matrix annihilates x
        for (int i = 0; i < n; ++i) x[i] = y[i] / ynorm;
        // Rayleigh quotient of the squared matrix gives |eigenvalue|
        deflated_mul(V, n, x, y);
        double est = std::sqrt(kernels::sq_norm(y.data(), n));
        if (it > 0 && std::abs(est - prev) <= 1e-10 * std::max(1.0, est))
            return est;
        prev = est;
    }
    throw NoConvergence("spectral_radius: power iteration did not converge");
}

double spectral_radius_robust(const std::vector<double>& V, int s_c) {
    try {
        return spectral_radius(V, s_c);
    } catch (const NoConvergence&) {
        // full eigendecomposition of the deflated matrix
        const int n = s_c;
        std::vector<double> d(V);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[static_cast<std::size_t>(i) * n + j] -= 1.0 / n;
        auto ev = jacobi_eigenvalues(std::move(d), n);
        double r = 0.0;
        for (double e : ev) r = std::max(r, std::abs(e));
        return r;
    }
}

std::pair<ClusterGraph, ConsensusMatrix> tune_radius_for_spectral_target(
    int s_c, double target_rho, std::uint64_t seed) {
    constexpr double kTol = 0.05;
    constexpr int kMaxIter = 50;
    constexpr int kPhaseLen = 5;  // bisection steps per node placement
    ClusterGraph best_g;
    ConsensusMatrix best_m;
    double best_err = std::numeric_limits<double>::infinity();

    double lo = 0.05, hi = std::sqrt(2.0);
    for (int it = 0; it < kMaxIter; ++it) {
        // a fixed placement per phase keeps rho roughly monotone in radius
        if (it % kPhaseLen == 0) {
            lo = 0.05;
            hi = std::sqrt(2.0);
        }
        const std::uint64_t phase_seed = derive_seed(seed, it / kPhaseLen);
        double mid = 0.5 * (lo + hi);
        ClusterGraph g = generate_random_geometric_cluster(s_c, mid, phase_seed);
        ConsensusMatrix m = metropolis_weights(g);
        double err = std::abs(m.lambda - target_rho);
        if (err < best_err) {
            best_err = err;
            best_g = g;
            best_m = m;
        }
        if (err <= kTol) return {std::move(best_g), std::move(best_m)};
        // denser graphs mix faster: rho decreases as the radius grows
        if (m.lambda > target_rho)
            lo = mid;
        else
            hi = mid;
    }
    const double achieved = best_m.lambda;
    throw ToleranceNotMet("tune_radius_for_spectral_target: no radius within "
                          "0.05 of target " +
                              std::to_string(target_rho),
                          std::move(best_g), std::move(best_m), achieved);
}

std::vector<ModelVector> run_consensus(const std::vector<ModelVector>& initial,
                                       const ConsensusMatrix& V, int rounds) {
    const int n = static_cast<int>(initial.size());
    if (n == 0) return {};
    const std::size_t dim = initial[0].dim();
    for (const auto& v : initial)
        if (v.dim() != dim)
            throw DimensionMismatch("run_consensus: vectors differ in length");

    std::vector<ModelVector> cur = initial;
    std::vector<ModelVector> next(n, ModelVector(dim));
    std::vector<const double*> rows(n);
    for (int r = 0; r < rounds; ++r) {
        for (int i = 0; i < n; ++i) rows[i] = cur[i].data();
        for (int i = 0; i < n; ++i)
            kernels::weighted_sum(rows.data(),
                                  V.weights.data() + static_cast<std::size_t>(i) * n,
                                  n, next[i].data(), dim);
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace tthf::topology
