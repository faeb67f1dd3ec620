#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tthf/config.hpp"
#include "tthf/kernels.hpp"
#include "tthf/runner.hpp"

namespace {

void apply_overrides(tthf::cli::ExperimentConfig& cfg,
                     const std::string& out_dir, long seed, int jobs) {
    if (!out_dir.empty()) cfg.run.out_dir = out_dir;
    if (seed >= 0) {
        cfg.run.seed = static_cast<std::uint64_t>(seed);
        cfg.hp.master_seed = cfg.run.seed;
    }
    if (jobs > 0) cfg.run.jobs = jobs;
}

void report(const tthf::cli::ExperimentResult& res) {
    const auto& s = res.summary;
    std::printf("final_loss=%.12g final_loss_gap=%.12g "
                "time_to_accuracy=%ld energy=%.12g delay=%.12g\n",
                s.final_loss, s.final_loss_gap, s.time_to_accuracy,
                s.total_energy, s.total_delay);
    if (!res.bounds.empty())
        std::printf("bound checks: %zu rows, %ld violation(s)\n",
                    res.bounds.size(), s.bound_violations);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-timescale hybrid federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, isa;
    long seed = -1;
    int jobs = 0;
    std::vector<std::string> summaries;

    app.add_option("--isa", isa, "Force kernel ISA (scalar|avx2)");

    auto* run = app.add_subcommand("run", "Execute an experiment config");
    run->add_option("config", config_path, "Experiment config (JSON)")
        ->required();
    run->add_option("--out-dir", out_dir, "Output directory override");
    run->add_option("--seed", seed, "Master seed override");
    run->add_option("--jobs", jobs, "Parallel replicate workers");

    auto* verify = app.add_subcommand(
        "verify-bounds", "Run only the bound-verification suites");
    verify->add_option("config", config_path, "Experiment config (JSON)")
        ->required();
    verify->add_option("--out-dir", out_dir, "Output directory override");
    verify->add_option("--seed", seed, "Master seed override");
    verify->add_option("--jobs", jobs, "Parallel replicate workers");

    auto* cmp = app.add_subcommand("compare", "Compare run summaries");
    cmp->add_option("summaries", summaries, "summary.csv files")
        ->required()
        ->expected(-2);

    CLI11_PARSE(app, argc, argv);

    if (!isa.empty()) {
        using tthf::kernels::Isa;
        if (isa == "scalar")
            tthf::kernels::force_isa(Isa::scalar);
        else if (isa == "avx2") {
            if (!tthf::kernels::force_isa(Isa::avx2)) {
                std::cerr << "avx2 not supported on this CPU; using scalar\n";
            }
        } else {
            std::cerr << "unknown --isa value: " << isa << "\n";
            return 2;
        }
    }

    try {
        if (run->parsed()) {
            auto cfg = tthf::cli::parse_config(config_path);
            apply_overrides(cfg, out_dir, seed, jobs);
            auto res = tthf::cli::run_experiment(cfg);
            report(res);
            return res.ok ? 0 : 1;
        }
        if (verify->parsed()) {
            auto cfg = tthf::cli::parse_config(config_path);
            apply_overrides(cfg, out_dir, seed, jobs);
            cfg.run.verify_bounds = true;
            auto res = tthf::cli::run_experiment(cfg, /*bounds_only=*/true);
            long total = static_cast<long>(res.bounds.size());
            std::printf("bound rows: %ld, violations: %ld\n", total,
                        res.summary.bound_violations);
            return res.ok ? 0 : 1;
        }
        if (cmp->parsed()) {
            std::cout << tthf::cli::compare_runs(summaries);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
