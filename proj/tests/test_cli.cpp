#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tthf/config.hpp"
#include "tthf/runner.hpp"

using namespace tthf;
using namespace tthf::cli;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// small synthetic run that finishes in well under a second
std::string small_run_config(const std::string& out_dir) {
    return R"({
      "network": {"devices": 6, "clusters": 2, "spectral_target": 0.7},
      "data": {"kind": "synthetic_quadratic", "dim": 2,
               "points_per_device": 10, "heterogeneity": 1.0},
      "model": {"kind": "least_squares", "lambda_reg": 0.5},
      "hyperparameters": {"gamma": 0.4, "alpha": 4.0, "tau": 5,
                          "total_steps": 25, "batch_size": 4},
      "consensus": {"policy": "adaptive", "phi": 1.0},
      "run": {"replicates": 2, "seed": 11, "verify_bounds": true,
              "out_dir": ")" +
           out_dir + R"("}
    })";
}

}  // namespace

TEST_CASE("empty config materializes all defaults") {
    auto cfg = parse_config_text("{}");
    CHECK(cfg.network.devices == 25);
    CHECK(cfg.network.clusters == 5);
    CHECK(cfg.data.kind == DataKind::synthetic_quadratic);
    CHECK(cfg.model.lambda_reg == 1.0);
    CHECK(cfg.hp.tau == 1);
    CHECK(cfg.run.replicates == 1);
    CHECK(cfg.run.out_dir == "out");
    // defaults echoed by the canonical serialization
    auto text = serialize_config(cfg);
    CHECK(text.find("\"devices\": 25") != std::string::npos);
    CHECK(text.find("\"lambda_reg\": 1.0") != std::string::npos);
}

TEST_CASE("parse errors and validation errors name the problem") {
    CHECK_THROWS_AS(parse_config_text("not json"), ParseError);
    CHECK_THROWS_AS(parse_config_text("[1,2]"), ParseError);
    CHECK_THROWS_WITH_AS(parse_config_text(R"({"netwrok": {}})"),
                         doctest::Contains("netwrok"), ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"network": {"device_count": 4}})"),
        doctest::Contains("device_count"), ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"network": {"devices": 7, "clusters": 2}})"),
        doctest::Contains("divisible"), ValidationError);
    // theorem mode with gamma*mu <= 1 (defaults: gamma=1, lambda_reg=1)
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"hyperparameters": {"theorem_mode": true}})"),
        doctest::Contains("gamma"), ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"consensus": {"policy": "gossip"}})"),
        doctest::Contains("policy"), ValidationError);
}

TEST_CASE("serialize-parse round trip is the identity") {
    auto cfg = parse_config_text(R"({
      "network": {"devices": 10, "clusters": 5, "radius": 0.6},
      "data": {"kind": "synthetic_blobs", "num_classes": 4,
               "labels_per_device": 2, "spread": 0.8},
      "model": {"kind": "squared_svm", "lambda_reg": 0.3},
      "hyperparameters": {"gamma": 2.5, "alpha": 30, "tau": 10,
                          "total_steps": 200},
      "consensus": {"policy": "fixed_period", "rounds": 2, "period": 4},
      "resources": {"e_d2d": 0.01, "e_glob": 1.0},
      "run": {"replicates": 3, "seed": 42, "baseline": "fedavg_full",
              "baseline_tau": 20}
    })");
    auto text = serialize_config(cfg);
    auto cfg2 = parse_config_text(text);
    CHECK(serialize_config(cfg2) == text);
    CHECK(config_hash(cfg2) == config_hash(cfg));
    CHECK(data_model_hash(cfg2) == data_model_hash(cfg));
}

TEST_CASE("hashes separate run settings from the data and model") {
    auto a = parse_config_text(R"({"run": {"seed": 1}})");
    auto b = parse_config_text(R"({"run": {"seed": 2}})");
    CHECK(config_hash(a) != config_hash(b));
    CHECK(data_model_hash(a) == data_model_hash(b));

    auto c = parse_config_text(R"({"data": {"heterogeneity": 3.0}})");
    CHECK(data_model_hash(c) != data_model_hash(a));
}

TEST_CASE("run_experiment writes deterministic artifacts") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "tthf_cli_test_run";
    fs::remove_all(dir);
    auto cfg = parse_config_text(small_run_config(dir.string()));

    auto res = run_experiment(cfg);
    CHECK(res.ok);
    CHECK(res.summary.bound_violations == 0);
    REQUIRE(fs::exists(dir / "trace.csv"));
    REQUIRE(fs::exists(dir / "bounds.csv"));
    REQUIRE(fs::exists(dir / "summary.csv"));

    const std::string trace1 = slurp(dir / "trace.csv");
    const std::string bounds1 = slurp(dir / "bounds.csv");
    const std::string summary1 = slurp(dir / "summary.csv");

    // the adaptive run with verify_bounds produces one remark1 row per step
    CHECK(bounds1.find("remark1,1,") != std::string::npos);
    CHECK(bounds1.find("remark1,25,") != std::string::npos);
    // trace schema is fixed by the config
    std::string header = trace1.substr(0, trace1.find('\n'));
    CHECK(header ==
          "t,loss,loss_gap,mean_loss_gap,dispersion_A,mean_dispersion_A,"
          "consensus_eps2,max_consensus_err,metric,gamma_c0,gamma_c1,"
          "upsilon_c0,upsilon_c1,cum_energy,cum_delay");

    auto res2 = run_experiment(cfg);
    CHECK(res2.ok);
    CHECK(slurp(dir / "trace.csv") == trace1);
    CHECK(slurp(dir / "bounds.csv") == bounds1);
    CHECK(slurp(dir / "summary.csv") == summary1);
    fs::remove_all(dir);
}

TEST_CASE("compare aligns compatible runs and rejects mismatches") {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "tthf_cli_test_cmp";
    fs::remove_all(base);

    auto cfg_a = parse_config_text(small_run_config((base / "a").string()));
    auto cfg_b = parse_config_text(small_run_config((base / "b").string()));
    cfg_b.run.seed = 99;
    run_experiment(cfg_a);
    run_experiment(cfg_b);

    auto table = compare_runs(
        {(base / "a" / "summary.csv").string(),
         (base / "b" / "summary.csv").string()});
    std::istringstream is(table);
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) ++lines;
    CHECK(lines == 3);  // header + two rows
    CHECK(table.find("final_loss") != std::string::npos);

    // different data section -> different data_model_hash -> incompatible
    auto cfg_c = parse_config_text(small_run_config((base / "c").string()));
    cfg_c.data.heterogeneity = 2.0;
    run_experiment(cfg_c);
    CHECK_THROWS_AS(
        compare_runs({(base / "a" / "summary.csv").string(),
                      (base / "c" / "summary.csv").string()}),
        IncompatibleRuns);

    CHECK_THROWS_AS(compare_runs({(base / "a" / "summary.csv").string()}),
                    IncompatibleRuns);
    fs::remove_all(base);
}

TEST_CASE("bounds_only mode writes only the bounds table") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "tthf_cli_test_vb";
    fs::remove_all(dir);
    auto cfg = parse_config_text(small_run_config(dir.string()));
    auto res = run_experiment(cfg, /*bounds_only=*/true);
    CHECK(res.ok);
    CHECK(fs::exists(dir / "bounds.csv"));
    CHECK(!fs::exists(dir / "trace.csv"));
    CHECK(!fs::exists(dir / "summary.csv"));
    fs::remove_all(dir);
}
