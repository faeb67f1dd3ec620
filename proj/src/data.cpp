#include "tthf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "tthf/rng.hpp"

namespace tthf::data {

int FederatedDataset::feature_dim() const {
    for (const auto& s : shards)
        if (!s.empty()) return static_cast<int>(s[0].x.size());
    return 0;
}

std::vector<std::vector<int>> FederatedDataset::devices_by_cluster() const {
    std::vector<std::vector<int>> out(num_clusters);
    for (int i = 0; i < num_devices; ++i) out[cluster_of[i]].push_back(i);
    return out;
}

double FederatedDataset::cluster_weight(int c) const {
    int s_c = 0;
    for (int i = 0; i < num_devices; ++i)
        if (cluster_of[i] == c) ++s_c;
    return static_cast<double>(s_c) / num_devices;
}

namespace {

// Solves (dim x dim) A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                int n) {
    auto at = [&](int i, int j) -> double& {
        return a[static_cast<std::size_t>(i) * n + j];
    };
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(at(r, col)) > std::abs(at(piv, col))) piv = r;
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(at(col, j), at(piv, j));
            std::swap(b[col], b[piv]);
        }
        double d = at(col, col);
        for (int r = col + 1; r < n; ++r) {
            double f = at(r, col) / d;
            for (int j = col; j < n; ++j) at(r, j) -= f * at(col, j);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= at(i, j) * x[j];
        x[i] = s / at(i, i);
    }
    return x;
}

}  // namespace

SynthResult synth_quadratic(int dim, int num_devices, int num_clusters,
                            int points_per_device, double heterogeneity,
                            double lambda_reg, std::uint64_t seed) {
    if (num_devices % num_clusters != 0)
        throw InvalidShape("synth_quadratic: num_devices (" +
                           std::to_string(num_devices) +
                           ") not divisible by num_clusters (" +
                           std::to_string(num_clusters) + ")");
    const int D = points_per_device;
    Rng rng(derive_seed(seed, stream::datagen));
    std::normal_distribution<double> gauss(0.0, 1.0);

    // shared feature matrix across devices
    std::vector<std::vector<double>> feats(D, std::vector<double>(dim));
    for (auto& row : feats)
        for (double& v : row) v = gauss(rng);

    std::vector<double> w_true(dim);
    for (double& v : w_true) v = gauss(rng);

    // per-cluster unit direction, scaled by heterogeneity
    std::vector<std::vector<double>> w_cluster(num_clusters, w_true);
    for (int c = 0; c < num_clusters; ++c) {
        std::vector<double> u(dim);
        double nrm = 0.0;
        for (double& v : u) {
            v = gauss(rng);
            nrm += v * v;
        }
        nrm = std::sqrt(nrm);
        for (int j = 0; j < dim; ++j)
            w_cluster[c][j] += heterogeneity * u[j] / nrm;
    }

    FederatedDataset ds;
    ds.num_devices = num_devices;
    ds.num_clusters = num_clusters;
    ds.shards.resize(num_devices);
    ds.cluster_of.resize(num_devices);
    const int per_cluster = num_devices / num_clusters;
    for (int i = 0; i < num_devices; ++i) {
        const int c = i / per_cluster;
        ds.cluster_of[i] = c;
        ds.shards[i].resize(D);
        for (int p = 0; p < D; ++p) {
            LabeledPoint pt;
            pt.x = feats[p];
            double y = 0.0;
            for (int j = 0; j < dim; ++j) y += feats[p][j] * w_cluster[c][j];
            pt.y = y;
            ds.shards[i][p] = pt;
        }
    }

    // (H + lambda I) w* = H w_bar, H = (1/D) sum a a^T
    std::vector<double> H(static_cast<std::size_t>(dim) * dim, 0.0);
    for (const auto& a : feats)
        for (int r = 0; r < dim; ++r)
            for (int cidx = 0; cidx < dim; ++cidx)
                H[static_cast<std::size_t>(r) * dim + cidx] +=
                    a[r] * a[cidx] / D;
    std::vector<double> w_bar(dim, 0.0);
    for (int c = 0; c < num_clusters; ++c)
        for (int j = 0; j < dim; ++j)
            w_bar[j] += w_cluster[c][j] / num_clusters;
    std::vector<double> rhs(dim, 0.0);
    for (int r = 0; r < dim; ++r)
        for (int j = 0; j < dim; ++j)
            rhs[r] += H[static_cast<std::size_t>(r) * dim + j] * w_bar[j];
    std::vector<double> lhs = H;
    for (int r = 0; r < dim; ++r)
        lhs[static_cast<std::size_t>(r) * dim + r] += lambda_reg;

    SynthResult out;
    out.dataset = std::move(ds);
    out.optimum = ModelVector(solve_dense(std::move(lhs), std::move(rhs), dim));
    return out;
}

FederatedDataset partition_label_skew(const std::vector<LabeledPoint>& pool,
                                      int num_devices, int num_clusters,
                                      int labels_per_device, int num_classes,
                                      std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::datagen, 1));
    const int rot = static_cast<int>(rng() % static_cast<std::uint64_t>(num_classes));

    // device -> assigned classes; class -> assigned devices
    std::vector<std::vector<int>> classes_of(num_devices);
    std::vector<std::vector<int>> devices_of(num_classes);
    for (int i = 0; i < num_devices; ++i) {
        for (int j = 0; j < labels_per_device; ++j) {
            int cls = (rot + i + j) % num_classes;
            if (std::find(classes_of[i].begin(), classes_of[i].end(), cls) ==
                classes_of[i].end()) {
                classes_of[i].push_back(cls);
                devices_of[cls].push_back(i);
            }
        }
    }

    std::vector<std::vector<int>> points_of_class(num_classes);
    for (int p = 0; p < static_cast<int>(pool.size()); ++p) {
        int cls = pool[p].label();
        if (cls >= 0 && cls < num_classes) points_of_class[cls].push_back(p);
    }

    FederatedDataset ds;
    ds.num_devices = num_devices;
    ds.num_clusters = num_clusters;
    ds.labels_per_device = labels_per_device;
    ds.shards.resize(num_devices);
    ds.cluster_of.resize(num_devices);
    if (num_devices % num_clusters != 0)
        throw InvalidShape("partition_label_skew: num_devices not divisible "
                           "by num_clusters");
    const int per_cluster = num_devices / num_clusters;
    for (int i = 0; i < num_devices; ++i) ds.cluster_of[i] = i / per_cluster;

    for (int cls = 0; cls < num_classes; ++cls) {
        const auto& pts = points_of_class[cls];
        if (pts.empty()) continue;
        const auto& devs = devices_of[cls];
        if (devs.empty())
            throw InsufficientData("partition_label_skew: class " +
                                   std::to_string(cls) +
                                   " assigned to no device");
        const int m = static_cast<int>(devs.size());
        const int base = static_cast<int>(pts.size()) / m;
        const int rem = static_cast<int>(pts.size()) % m;
        int cursor = 0;
        for (int d = 0; d < m; ++d) {
            int take = base + (d < rem ? 1 : 0);  // leftovers go by index
            for (int q = 0; q < take; ++q)
                ds.shards[devs[d]].push_back(pool[pts[cursor++]]);
        }
    }

    for (int i = 0; i < num_devices; ++i)
        if (ds.shards[i].empty())
            throw InsufficientData("partition_label_skew: device " +
                                   std::to_string(i) + " received zero points");
    return ds;
}

std::vector<LabeledPoint> make_blob_pool(int num_classes, int points_per_class,
                                         int dim, double spread,
                                         std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::datagen, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim));
    for (auto& m : means)
        for (double& v : m) v = 2.0 * gauss(rng);
    std::vector<LabeledPoint> pool;
    pool.reserve(static_cast<std::size_t>(num_classes) * points_per_class);
    for (int c = 0; c < num_classes; ++c)
        for (int p = 0; p < points_per_class; ++p) {
            LabeledPoint pt;
            pt.x.resize(dim);
            for (int j = 0; j < dim; ++j)
                pt.x[j] = means[c][j] + spread * gauss(rng);
            pt.y = c;
            pool.push_back(std::move(pt));
        }
    // interleave classes so "leftover by index" splits are not class-ordered
    std::vector<LabeledPoint> mixed;
    mixed.reserve(pool.size());
    for (int p = 0; p < points_per_class; ++p)
        for (int c = 0; c < num_classes; ++c)
            mixed.push_back(pool[static_cast<std::size_t>(c) * points_per_class + p]);
    return mixed;
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw TruncatedFile("load_idx: truncated header in " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
}

}  // namespace

std::vector<LabeledPoint> load_idx(const std::string& images_path,
                                   const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw TruncatedFile("load_idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw TruncatedFile("load_idx: cannot open " + labels_path);

    if (read_be32(img, images_path) != 0x00000803u)
        throw BadMagic("load_idx: bad image magic in " + images_path);
    if (read_be32(lab, labels_path) != 0x00000801u)
        throw BadMagic("load_idx: bad label magic in " + labels_path);

    const std::uint32_t n_img = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const std::uint32_t n_lab = read_be32(lab, labels_path);
    if (n_img != n_lab)
        throw CountMismatch("load_idx: " + images_path + " has " +
                            std::to_string(n_img) + " images but " +
                            labels_path + " has " + std::to_string(n_lab) +
                            " labels");

    const std::size_t pix = static_cast<std::size_t>(rows) * cols;
    std::vector<LabeledPoint> out(n_img);
    std::vector<unsigned char> buf(pix);
    for (std::uint32_t i = 0; i < n_img; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(pix));
        if (!img) throw TruncatedFile("load_idx: truncated image data in " +
                                      images_path);
        out[i].x.resize(pix);
        for (std::size_t p = 0; p < pix; ++p) out[i].x[p] = buf[p] / 255.0;
        char l;
        lab.read(&l, 1);
        if (!lab) throw TruncatedFile("load_idx: truncated label data in " +
                                      labels_path);
        out[i].y = static_cast<unsigned char>(l);
    }
    return out;
}

}  // namespace tthf::data
