#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "tthf/data.hpp"
#include "tthf/model.hpp"

using namespace tthf;
using namespace tthf::data;

namespace {

// independent full-batch gradient-descent oracle on the pooled objective
ModelVector gd_oracle(const model::LossModel& m, const FederatedDataset& ds,
                      double step, double grad_tol) {
    ModelVector w(static_cast<std::size_t>(m.param_dim()));
    for (int it = 0; it < 200000; ++it) {
        ModelVector g = model::global_gradient(m, ds, w);
        if (g.norm() <= grad_tol) break;
        w.add_scaled(-step, g);
    }
    return w;
}

std::vector<ModelVector> probes(int dim) {
    std::vector<ModelVector> p;
    p.emplace_back(static_cast<std::size_t>(dim));
    std::vector<double> v(dim);
    for (int j = 0; j < dim; ++j) v[j] = 0.3 * (j + 1);
    p.emplace_back(v);
    return p;
}

void write_idx_pair(const std::string& img_path, const std::string& lab_path,
                    std::uint32_t img_magic, std::uint32_t lab_magic,
                    const std::vector<std::vector<unsigned char>>& images,
                    const std::vector<unsigned char>& labels,
                    std::uint32_t rows, std::uint32_t cols,
                    bool truncate_last_image = false) {
    auto be32 = [](std::ofstream& f, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
        f.write(reinterpret_cast<char*>(b), 4);
    };
    {
        std::ofstream f(img_path, std::ios::binary);
        be32(f, img_magic);
        be32(f, static_cast<std::uint32_t>(images.size()));
        be32(f, rows);
        be32(f, cols);
        for (std::size_t i = 0; i < images.size(); ++i) {
            std::size_t n = images[i].size();
            if (truncate_last_image && i + 1 == images.size()) n /= 2;
            f.write(reinterpret_cast<const char*>(images[i].data()),
                    static_cast<std::streamsize>(n));
        }
    }
    {
        std::ofstream f(lab_path, std::ios::binary);
        be32(f, lab_magic);
        be32(f, static_cast<std::uint32_t>(labels.size()));
        f.write(reinterpret_cast<const char*>(labels.data()),
                static_cast<std::streamsize>(labels.size()));
    }
}

}  // namespace

TEST_CASE("synth_quadratic optimum matches the GD oracle") {
    auto [ds, w_star] = synth_quadratic(2, 4, 2, 30, 1.0, 0.5, 5);
    model::LossModel m;
    m.kind = model::LossKind::least_squares;
    m.lambda_reg = 0.5;
    m.feature_dim = 2;

    CHECK(model::global_gradient(m, ds, w_star).norm() <= 1e-8);

    double beta = model::estimate_beta(m, ds);
    ModelVector oracle = gd_oracle(m, ds, 1.0 / beta, 1e-10);
    CHECK(dist(oracle, w_star) <= 1e-7);
}

TEST_CASE("synth_quadratic heterogeneity drives gradient diversity") {
    model::LossModel m;
    m.kind = model::LossKind::least_squares;
    m.lambda_reg = 0.5;
    m.feature_dim = 3;

    auto zero = synth_quadratic(3, 6, 3, 25, 0.0, 0.5, 9);
    double d0 = model::measure_gradient_diversity(m, zero.dataset, probes(3));
    CHECK(d0 <= 1e-8);

    auto half = synth_quadratic(3, 6, 3, 25, 0.5, 0.5, 9);
    auto full = synth_quadratic(3, 6, 3, 25, 1.0, 0.5, 9);
    double dh = model::measure_gradient_diversity(m, half.dataset, probes(3));
    double df = model::measure_gradient_diversity(m, full.dataset, probes(3));
    CHECK(dh > d0);
    CHECK(df > dh);
}

TEST_CASE("synth_quadratic rejects uneven cluster sizes") {
    CHECK_THROWS_AS(synth_quadratic(2, 5, 2, 10, 1.0, 0.5, 1), InvalidShape);
}

TEST_CASE("synth_quadratic cluster assignment partitions the devices") {
    auto [ds, w_star] = synth_quadratic(2, 12, 4, 10, 1.0, 0.5, 2);
    CHECK(ds.num_devices == 12);
    CHECK(ds.num_clusters == 4);
    auto by_c = ds.devices_by_cluster();
    int total = 0;
    for (int c = 0; c < 4; ++c) {
        CHECK(by_c[c].size() == 3);
        CHECK(ds.cluster_weight(c) == doctest::Approx(0.25));
        total += static_cast<int>(by_c[c].size());
    }
    CHECK(total == 12);
    for (const auto& shard : ds.shards) CHECK(shard.size() == 10);
}

TEST_CASE("label-skew partition covers the pool exactly") {
    // 2 classes, 50 points each, 4 devices, one label per device
    std::vector<LabeledPoint> pool;
    for (int p = 0; p < 100; ++p) {
        LabeledPoint pt;
        pt.x = {static_cast<double>(p)};
        pt.y = p % 2;
        pool.push_back(pt);
    }
    auto ds = partition_label_skew(pool, 4, 2, 1, 2, 17);

    std::multiset<double> seen;
    for (const auto& shard : ds.shards) {
        CHECK(!shard.empty());
        std::set<int> labels;
        for (const auto& pt : shard) {
            seen.insert(pt.x[0]);
            labels.insert(pt.label());
        }
        CHECK(static_cast<int>(labels.size()) <= 1);
    }
    CHECK(seen.size() == 100);  // disjoint (multiset has no duplicates)
    std::multiset<double> expect;
    for (const auto& pt : pool) expect.insert(pt.x[0]);
    CHECK(seen == expect);
}

TEST_CASE("labels_per_device equal to num_classes removes the skew") {
    auto pool = make_blob_pool(3, 30, 2, 0.5, 4);
    auto ds = partition_label_skew(pool, 6, 3, 3, 3, 4);
    for (const auto& shard : ds.shards) {
        std::set<int> labels;
        for (const auto& pt : shard) labels.insert(pt.label());
        CHECK(labels == std::set<int>({0, 1, 2}));
    }
}

TEST_CASE("every shard respects the label cardinality cap") {
    auto pool = make_blob_pool(10, 40, 3, 1.0, 21);
    auto ds = partition_label_skew(pool, 20, 5, 3, 10, 21);
    CHECK(ds.labels_per_device == 3);
    for (const auto& shard : ds.shards) {
        std::set<int> labels;
        for (const auto& pt : shard) labels.insert(pt.label());
        CHECK(static_cast<int>(labels.size()) <= 3);
        CHECK(!labels.empty());
    }
}

TEST_CASE("partition is deterministic in the seed") {
    auto pool = make_blob_pool(4, 25, 2, 1.0, 8);
    auto a = partition_label_skew(pool, 8, 4, 2, 4, 33);
    auto b = partition_label_skew(pool, 8, 4, 2, 4, 33);
    REQUIRE(a.shards.size() == b.shards.size());
    for (std::size_t i = 0; i < a.shards.size(); ++i) {
        REQUIRE(a.shards[i].size() == b.shards[i].size());
        for (std::size_t p = 0; p < a.shards[i].size(); ++p) {
            CHECK(a.shards[i][p].x == b.shards[i][p].x);
            CHECK(a.shards[i][p].y == b.shards[i][p].y);
        }
    }
}

TEST_CASE("partition rejects classes no device holds") {
    // pool only has class 0; class 1 is assigned but never populated,
    // so some device ends up empty
    std::vector<LabeledPoint> pool;
    for (int p = 0; p < 20; ++p) {
        LabeledPoint pt;
        pt.x = {1.0};
        pt.y = 0;
        pool.push_back(pt);
    }
    CHECK_THROWS_AS(partition_label_skew(pool, 4, 2, 1, 2, 1),
                    InsufficientData);
}

TEST_CASE("blob pool has the right shape and class counts") {
    auto pool = make_blob_pool(3, 20, 4, 1.0, 12);
    CHECK(pool.size() == 60);
    std::map<int, int> counts;
    for (const auto& pt : pool) {
        CHECK(pt.x.size() == 4);
        counts[pt.label()]++;
    }
    CHECK(counts == std::map<int, int>({{0, 20}, {1, 20}, {2, 20}}));
}

TEST_CASE("idx loader decodes a hand-built fixture") {
    const std::string img = "/tmp/tthf_test_imgs.idx";
    const std::string lab = "/tmp/tthf_test_labs.idx";
    write_idx_pair(img, lab, 0x00000803u, 0x00000801u,
                   {{0, 128, 255, 64}, {0, 0, 0, 0}}, {7, 1}, 2, 2);
    auto pts = load_idx(img, lab);
    REQUIRE(pts.size() == 2);
    REQUIRE(pts[0].x.size() == 4);
    CHECK(pts[0].x[0] == 0.0);
    CHECK(pts[0].x[1] == doctest::Approx(128.0 / 255.0));
    CHECK(pts[0].x[2] == 1.0);
    CHECK(pts[0].x[3] == doctest::Approx(64.0 / 255.0));
    CHECK(pts[0].label() == 7);
    CHECK(pts[1].x == std::vector<double>(4, 0.0));
    CHECK(pts[1].label() == 1);
    std::remove(img.c_str());
    std::remove(lab.c_str());
}

TEST_CASE("idx loader rejects malformed files, naming the culprit") {
    const std::string img = "/tmp/tthf_bad_imgs.idx";
    const std::string lab = "/tmp/tthf_bad_labs.idx";

    SUBCASE("wrong label magic") {
        write_idx_pair(img, lab, 0x00000803u, 0x00000999u, {{0, 0, 0, 0}}, {0},
                       2, 2);
        CHECK_THROWS_WITH_AS(load_idx(img, lab),
                             doctest::Contains("tthf_bad_labs"), BadMagic);
    }
    SUBCASE("wrong image magic") {
        write_idx_pair(img, lab, 0x00000802u, 0x00000801u, {{0, 0, 0, 0}}, {0},
                       2, 2);
        CHECK_THROWS_WITH_AS(load_idx(img, lab),
                             doctest::Contains("tthf_bad_imgs"), BadMagic);
    }
    SUBCASE("image and label counts differ") {
        write_idx_pair(img, lab, 0x00000803u, 0x00000801u,
                       {{0, 0, 0, 0}, {1, 1, 1, 1}}, {0}, 2, 2);
        CHECK_THROWS_AS(load_idx(img, lab), CountMismatch);
    }
    SUBCASE("truncated image payload") {
        write_idx_pair(img, lab, 0x00000803u, 0x00000801u, {{0, 0, 0, 0}}, {0},
                       2, 2, /*truncate_last_image=*/true);
        CHECK_THROWS_AS(load_idx(img, lab), TruncatedFile);
    }
    std::remove(img.c_str());
    std::remove(lab.c_str());
}
