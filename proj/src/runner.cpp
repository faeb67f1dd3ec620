#include "tthf/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "tthf/rng.hpp"

namespace tthf::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kConsensusSlack = 1e-9;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
    BuiltExperiment b;

    // dataset + optimum + eval split
    switch (cfg.data.kind) {
        case DataKind::synthetic_quadratic: {
            auto synth = data::synth_quadratic(
                cfg.data.dim, cfg.network.devices, cfg.network.clusters,
                cfg.data.points_per_device, cfg.data.heterogeneity,
                cfg.model.lambda_reg, cfg.data.data_seed);
            b.dataset = std::move(synth.dataset);
            b.w_star = std::move(synth.optimum);
            break;
        }
        case DataKind::synthetic_blobs: {
            auto pool = data::make_blob_pool(
                cfg.data.num_classes, cfg.data.points_per_class, cfg.data.dim,
                cfg.data.spread, cfg.data.data_seed);
            const std::size_t eval_n = static_cast<std::size_t>(
                cfg.data.eval_fraction * static_cast<double>(pool.size()));
            b.eval_split.assign(pool.end() - static_cast<long>(eval_n),
                                pool.end());
            pool.resize(pool.size() - eval_n);
            b.dataset = data::partition_label_skew(
                pool, cfg.network.devices, cfg.network.clusters,
                cfg.data.labels_per_device, cfg.data.num_classes,
                cfg.data.data_seed);
            break;
        }
        case DataKind::idx: {
            auto pool = data::load_idx(cfg.data.images_path,
                                       cfg.data.labels_path);
            const std::size_t eval_n = static_cast<std::size_t>(
                cfg.data.eval_fraction * static_cast<double>(pool.size()));
            b.eval_split.assign(pool.end() - static_cast<long>(eval_n),
                                pool.end());
            pool.resize(pool.size() - eval_n);
            b.dataset = data::partition_label_skew(
                pool, cfg.network.devices, cfg.network.clusters,
                cfg.data.labels_per_device, cfg.data.num_classes,
                cfg.data.data_seed);
            break;
        }
    }

    b.loss.kind = cfg.model.kind;
    b.loss.lambda_reg = cfg.model.lambda_reg;
    b.loss.num_classes = cfg.data.num_classes;
    b.loss.feature_dim = b.dataset.feature_dim();

    // per-cluster topology
    const auto by_cluster = b.dataset.devices_by_cluster();
    for (int c = 0; c < b.dataset.num_clusters; ++c) {
        const int s_c = static_cast<int>(by_cluster[c].size());
        b.cluster_sizes.push_back(s_c);
        const std::uint64_t seed =
            derive_seed(cfg.network.topology_seed, stream::topology, c);
        if (cfg.network.radius > 0.0) {
            auto g = topology::generate_random_geometric_cluster(
                s_c, cfg.network.radius, seed);
            b.topologies.push_back(topology::metropolis_weights(g));
        } else if (s_c == 1) {
            topology::ConsensusMatrix m;
            m.s = 1;
            m.weights = {1.0};
            m.lambda = 0.0;
            b.topologies.push_back(std::move(m));
        } else {
            try {
                auto [g, m] = topology::tune_radius_for_spectral_target(
                    s_c, cfg.network.spectral_target, seed);
                b.topologies.push_back(std::move(m));
            } catch (topology::ToleranceNotMet& e) {
                // accept the closest achievable matrix
                b.topologies.push_back(std::move(e.closest_matrix));
            }
        }
    }

    b.hp = cfg.hp;
    b.beta = model::estimate_beta(b.loss, b.dataset);
    b.hp.mu = b.loss.mu();
    b.hp.beta = b.beta;
    engine::validate_hyperparameters(b.hp);
    return b;
}

analysis::AnalysisConstants estimate_constants(const BuiltExperiment& built,
                                               const ExperimentConfig& cfg) {
    analysis::AnalysisConstants k;
    k.mu = built.loss.mu();
    k.beta = built.beta;
    k.gamma = cfg.hp.gamma;
    k.alpha = cfg.hp.alpha;
    k.tau = cfg.hp.tau;
    k.phi = cfg.hp.phi;
    k.epsilon0 = cfg.hp.eta(0) * cfg.hp.phi;
    int s_min = built.dataset.num_devices;
    for (int s : built.cluster_sizes) s_min = std::min(s_min, s);
    k.rho_min = static_cast<double>(s_min) / built.dataset.num_devices;

    const int dim = built.loss.param_dim();
    std::vector<ModelVector> probes;
    probes.emplace_back(dim);  // origin = initial model
    if (built.w_star) probes.push_back(*built.w_star);
    Rng rng(derive_seed(cfg.run.seed, stream::datagen, 99));
    std::normal_distribution<double> gauss(0.0, 1.0);
    ModelVector p(dim);
    for (int i = 0; i < dim; ++i) p[i] = gauss(rng);
    probes.push_back(p);

    model::SgdContext ctx{cfg.hp.batch_size};
    k.sigma2 = model::estimate_sigma2(built.loss, built.dataset, ctx, probes,
                                      1000, cfg.run.seed);
    k.delta = model::measure_gradient_diversity(built.loss, built.dataset,
                                                probes);
    return k;
}

std::vector<std::vector<engine::TraceRecord>> run_replicates(
    const BuiltExperiment& built, const ExperimentConfig& cfg, int jobs) {
    const int R = cfg.run.replicates;
    std::vector<std::vector<engine::TraceRecord>> traces(R);

    auto run_one = [&](int r) {
        engine::RunInputs in;
        in.dataset = &built.dataset;
        in.loss = &built.loss;
        in.topologies = &built.topologies;
        in.w_star = built.w_star ? &*built.w_star : nullptr;
        in.eval_split = built.eval_split.empty() ? nullptr : &built.eval_split;
        in.w0 = ModelVector(static_cast<std::size_t>(built.loss.param_dim()));
        engine::Hyperparameters hp = built.hp;
        hp.master_seed = derive_seed(cfg.run.seed, 0x7265706cULL, r);
        switch (cfg.run.baseline) {
            case BaselineKind::none:
                traces[r] = engine::run_tthf(in, hp);
                break;
            case BaselineKind::fedavg_full:
                traces[r] = engine::run_fedavg_baseline(
                    in, hp, engine::Participation::full, cfg.run.baseline_tau);
                break;
            case BaselineKind::fedavg_sampled:
                traces[r] = engine::run_fedavg_baseline(
                    in, hp, engine::Participation::one_per_cluster,
                    cfg.run.baseline_tau);
                break;
        }
    };

    if (jobs <= 1 || R == 1) {
        for (int r = 0; r < R; ++r) run_one(r);
        return traces;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(jobs, R); ++w)
        pool.emplace_back([&] {
            for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1))
                run_one(r);
        });
    for (auto& th : pool) th.join();
    return traces;
}

namespace {

struct MeanSeries {
    std::vector<double> gap_mean, gap_stderr, disp_mean;
};

MeanSeries replicate_means(
    const std::vector<std::vector<engine::TraceRecord>>& traces) {
    MeanSeries out;
    if (traces.empty()) return out;
    const std::size_t T = traces[0].size();
    const double R = static_cast<double>(traces.size());
    out.gap_mean.resize(T);
    out.gap_stderr.resize(T);
    out.disp_mean.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0, sum2 = 0.0, dsum = 0.0;
        for (const auto& tr : traces) {
            sum += tr[t].loss_gap;
            sum2 += tr[t].loss_gap * tr[t].loss_gap;
            dsum += tr[t].dispersion_A;
        }
        out.gap_mean[t] = sum / R;
        out.disp_mean[t] = dsum / R;
        const double var =
            std::max(0.0, sum2 / R - out.gap_mean[t] * out.gap_mean[t]);
        out.gap_stderr[t] = R > 1 ? std::sqrt(var / (R - 1.0)) : 0.0;
    }
    return out;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << content;
        if (!f) throw Error("failed to write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string bounds_csv(const std::vector<BoundCheckRow>& rows) {
    std::ostringstream os;
    os << "check,t,measured,bound,violated\n";
    for (const auto& r : rows)
        os << r.check << ',' << r.t << ',' << fmt(r.measured) << ','
           << fmt(r.bound) << ',' << (r.violated ? 1 : 0) << '\n';
    return os.str();
}

std::string trace_csv(const std::vector<engine::TraceRecord>& trace,
                      const MeanSeries& means, int clusters) {
    std::ostringstream os;
    os << "t,loss,loss_gap,mean_loss_gap,dispersion_A,mean_dispersion_A,"
          "consensus_eps2,max_consensus_err,metric";
    for (int c = 0; c < clusters; ++c) os << ",gamma_c" << c;
    for (int c = 0; c < clusters; ++c) os << ",upsilon_c" << c;
    os << ",cum_energy,cum_delay\n";
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const auto& r = trace[t];
        os << r.t << ',' << fmt(r.loss) << ',' << fmt(r.loss_gap) << ','
           << fmt(means.gap_mean[t]) << ',' << fmt(r.dispersion_A) << ','
           << fmt(means.disp_mean[t]) << ',' << fmt(r.consensus_eps2) << ','
           << fmt(r.max_consensus_err) << ',' << fmt(r.metric);
        for (int c = 0; c < clusters; ++c) os << ',' << r.gamma_rounds[c];
        for (int c = 0; c < clusters; ++c) os << ',' << fmt(r.upsilon[c]);
        os << ',' << fmt(r.cum_energy) << ',' << fmt(r.cum_delay) << '\n';
    }
    return os.str();
}

std::string summary_csv(const RunSummary& s) {
    std::ostringstream os;
    os << "config_hash,data_model_hash,seed,replicates,final_loss,"
          "final_loss_gap,time_to_accuracy,total_energy,total_delay,"
          "bound_violations,baseline_final_loss\n";
    os << s.config_hash << ',' << s.dm_hash << ',' << s.seed << ','
       << s.replicates << ',' << fmt(s.final_loss) << ','
       << fmt(s.final_loss_gap) << ',' << s.time_to_accuracy << ','
       << fmt(s.total_energy) << ',' << fmt(s.total_delay) << ','
       << s.bound_violations << ',' << fmt(s.baseline_final_loss) << '\n';
    return os.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool bounds_only) {
    ExperimentResult res;
    BuiltExperiment built = build_experiment(cfg);
    auto traces = run_replicates(built, cfg, cfg.run.jobs);
    MeanSeries means = replicate_means(traces);

    const bool adaptive =
        cfg.hp.policy == engine::ConsensusPolicy::adaptive &&
        cfg.run.baseline == BaselineKind::none;
    if (cfg.run.verify_bounds) {
        // adaptive schedule: per-device consensus error within the policy bound
        if (adaptive) {
            for (std::size_t t = 0; t < traces[0].size(); ++t) {
                double worst = 0.0;
                for (const auto& tr : traces)
                    worst = std::max(worst, tr[t].max_consensus_err);
                const double bound =
                    cfg.hp.eta(static_cast<long>(t) + 1) * cfg.hp.phi;
                res.bounds.push_back({"remark1", static_cast<long>(t) + 1,
                                      worst, bound,
                                      worst > bound + kConsensusSlack});
            }
        }
        if (adaptive && cfg.hp.theorem_mode && built.w_star) {
            analysis::AnalysisConstants k = estimate_constants(built, cfg);
            const double init_gap =
                model::global_loss(built.loss, built.dataset,
                                   ModelVector(static_cast<std::size_t>(
                                       built.loss.param_dim()))) -
                model::global_loss(built.loss, built.dataset, *built.w_star);
            auto env = analysis::theorem2_envelope(k, init_gap);
            for (std::size_t t = 0; t < means.gap_mean.size(); ++t) {
                const long step = static_cast<long>(t) + 1;
                res.bounds.push_back({"theorem2", step, means.gap_mean[t],
                                      env.at(step),
                                      means.gap_mean[t] > env.at(step)});
            }
            for (std::size_t t = 0; t < means.disp_mean.size(); ++t) {
                const long step = static_cast<long>(t) + 1;
                const long t_km1 = ((step - 1) / cfg.hp.tau) * cfg.hp.tau;
                const double bound = analysis::prop1_bound(k, step, t_km1);
                res.bounds.push_back({"prop1", step, means.disp_mean[t], bound,
                                      means.disp_mean[t] > bound});
            }
            auto th1 = analysis::theorem1_check(means.gap_mean,
                                               means.disp_mean,
                                               means.gap_stderr, k);
            res.bounds.push_back({"theorem1_frac_nonneg", 0, th1.frac_nonneg,
                                  0.99, th1.frac_nonneg < 0.99});
        }
    }
    for (const auto& row : res.bounds)
        if (row.violated) ++res.summary.bound_violations;
    res.ok = res.summary.bound_violations == 0;

    // resource accounting on replicate 0
    auto participation = cfg.run.baseline == BaselineKind::fedavg_full
                             ? engine::Participation::full
                             : engine::Participation::one_per_cluster;
    const int tau = cfg.run.baseline == BaselineKind::none
                        ? cfg.hp.tau
                        : cfg.run.baseline_tau;
    auto curves = analysis::resource_accounting(
        traces[0], cfg.resources, built.cluster_sizes, participation, tau);
    for (std::size_t t = 0; t < traces[0].size(); ++t) {
        traces[0][t].cum_energy = curves.cum_energy[t];
        traces[0][t].cum_delay = curves.cum_delay[t];
    }

    RunSummary& s = res.summary;
    s.config_hash = config_hash(cfg);
    s.dm_hash = data_model_hash(cfg);
    s.seed = cfg.run.seed;
    s.replicates = cfg.run.replicates;
    s.final_loss = traces[0].back().loss;
    s.final_loss_gap = means.gap_mean.back();
    s.total_energy = curves.cum_energy.back();
    s.total_delay = curves.cum_delay.back();
    s.baseline_final_loss = std::numeric_limits<double>::quiet_NaN();
    {
        std::vector<double> metric;
        for (const auto& r : traces[0]) metric.push_back(r.metric);
        auto tta = analysis::time_to_accuracy(metric, 0.6);
        s.time_to_accuracy = tta ? *tta : -1;
    }

    const fs::path out_dir(cfg.run.out_dir);
    std::vector<fs::path> written;
    try {
        fs::create_directories(out_dir);
        if (!bounds_only) {
            atomic_write(out_dir / "trace.csv",
                         trace_csv(traces[0], means,
                                   built.dataset.num_clusters));
            written.push_back(out_dir / "trace.csv");
            atomic_write(out_dir / "summary.csv", summary_csv(s));
            written.push_back(out_dir / "summary.csv");
        }
        atomic_write(out_dir / "bounds.csv", bounds_csv(res.bounds));
        written.push_back(out_dir / "bounds.csv");
    } catch (...) {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }
    return res;
}

std::string compare_runs(const std::vector<std::string>& summary_paths) {
    if (summary_paths.size() < 2)
        throw IncompatibleRuns("compare: need at least two summaries");
    std::vector<std::map<std::string, std::string>> rows;
    for (const auto& path : summary_paths) {
        std::ifstream f(path);
        if (!f) throw ParseError("compare: cannot open " + path);
        std::string header, line;
        if (!std::getline(f, header) || !std::getline(f, line))
            throw ParseError("compare: malformed summary " + path);
        std::vector<std::string> keys, vals;
        std::stringstream hs(header), ls(line);
        std::string tok;
        while (std::getline(hs, tok, ',')) keys.push_back(tok);
        while (std::getline(ls, tok, ',')) vals.push_back(tok);
        if (keys.size() != vals.size())
            throw ParseError("compare: malformed summary " + path);
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < keys.size(); ++i) row[keys[i]] = vals[i];
        row["__file"] = path;
        rows.push_back(std::move(row));
    }
    const std::string ref = rows[0].at("data_model_hash");
    for (const auto& row : rows)
        if (row.at("data_model_hash") != ref)
            throw IncompatibleRuns(
                "compare: data/model sections differ between " +
                rows[0].at("__file") + " and " + row.at("__file"));

    std::ostringstream os;
    os << "file,final_loss,final_loss_gap,time_to_accuracy,total_energy,"
          "total_delay,bound_violations\n";
    for (const auto& row : rows)
        os << row.at("__file") << ',' << row.at("final_loss") << ','
           << row.at("final_loss_gap") << ',' << row.at("time_to_accuracy")
           << ',' << row.at("total_energy") << ',' << row.at("total_delay")
           << ',' << row.at("bound_violations") << '\n';
    return os.str();
}

}  // namespace tthf::cli
