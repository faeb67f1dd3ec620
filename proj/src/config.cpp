#include "tthf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tthf::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& section,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError("config: unknown key \"" + it.key() +
                                  "\" in section \"" + section + "\"");
}

template <typename T>
void take(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

DataKind parse_data_kind(const std::string& s) {
    if (s == "synthetic_quadratic") return DataKind::synthetic_quadratic;
    if (s == "synthetic_blobs") return DataKind::synthetic_blobs;
    if (s == "idx") return DataKind::idx;
    throw ValidationError("config: data.kind must be synthetic_quadratic, "
                          "synthetic_blobs, or idx (got \"" + s + "\")");
}

const char* data_kind_name(DataKind k) {
    switch (k) {
        case DataKind::synthetic_quadratic: return "synthetic_quadratic";
        case DataKind::synthetic_blobs: return "synthetic_blobs";
        case DataKind::idx: return "idx";
    }
    return "?";
}

model::LossKind parse_loss_kind(const std::string& s) {
    if (s == "least_squares") return model::LossKind::least_squares;
    if (s == "squared_svm") return model::LossKind::squared_svm;
    throw ValidationError("config: model.kind must be least_squares or "
                          "squared_svm (got \"" + s + "\")");
}

engine::ConsensusPolicy parse_policy(const std::string& s) {
    if (s == "none") return engine::ConsensusPolicy::none;
    if (s == "fixed_period") return engine::ConsensusPolicy::fixed_period;
    if (s == "adaptive") return engine::ConsensusPolicy::adaptive;
    throw ValidationError("config: consensus.policy must be none, "
                          "fixed_period, or adaptive (got \"" + s + "\")");
}

const char* policy_name(engine::ConsensusPolicy p) {
    switch (p) {
        case engine::ConsensusPolicy::none: return "none";
        case engine::ConsensusPolicy::fixed_period: return "fixed_period";
        case engine::ConsensusPolicy::adaptive: return "adaptive";
    }
    return "?";
}

BaselineKind parse_baseline(const std::string& s) {
    if (s == "none") return BaselineKind::none;
    if (s == "fedavg_full") return BaselineKind::fedavg_full;
    if (s == "fedavg_sampled") return BaselineKind::fedavg_sampled;
    throw ValidationError("config: run.baseline must be none, fedavg_full, or "
                          "fedavg_sampled (got \"" + s + "\")");
}

const char* baseline_name(BaselineKind b) {
    switch (b) {
        case BaselineKind::none: return "none";
        case BaselineKind::fedavg_full: return "fedavg_full";
        case BaselineKind::fedavg_sampled: return "fedavg_sampled";
    }
    return "?";
}

void validate(const ExperimentConfig& c) {
    if (c.network.devices < 1 || c.network.clusters < 1)
        throw ValidationError("config: network.devices and network.clusters "
                              "must be positive");
    if (c.network.devices % c.network.clusters != 0)
        throw ValidationError("config: network.devices must be divisible by "
                              "network.clusters");
    if (c.model.lambda_reg <= 0.0)
        throw ValidationError("config: model.lambda_reg must be positive");
    if (c.hp.tau < 1) throw ValidationError("config: hyperparameters.tau "
                                            "must be >= 1");
    if (c.hp.total_steps < 1)
        throw ValidationError("config: hyperparameters.total_steps must be "
                              ">= 1");
    if (c.hp.batch_size < 1)
        throw ValidationError("config: hyperparameters.batch_size must be "
                              ">= 1");
    if (c.hp.theorem_mode) {
        const double mu = c.model.lambda_reg;
        if (c.hp.gamma * mu <= 1.0)
            throw ValidationError("config: gamma must exceed 1/mu (= " +
                                  std::to_string(1.0 / mu) +
                                  ") in theorem mode");
    }
    if (c.hp.policy == engine::ConsensusPolicy::adaptive && c.hp.phi <= 0.0)
        throw ValidationError("config: consensus.phi must be positive under "
                              "the adaptive policy");
    if (c.data.kind == DataKind::idx &&
        (c.data.images_path.empty() || c.data.labels_path.empty()))
        throw ValidationError("config: data.images_path and data.labels_path "
                              "are required for idx data");
    if (c.data.labels_per_device < 1 ||
        c.data.labels_per_device > c.data.num_classes)
        throw ValidationError("config: data.labels_per_device must lie in "
                              "[1, num_classes]");
    if (c.data.eval_fraction < 0.0 || c.data.eval_fraction >= 1.0)
        throw ValidationError("config: data.eval_fraction must lie in [0,1)");
    if (c.run.replicates < 1)
        throw ValidationError("config: run.replicates must be >= 1");
    if (c.run.jobs < 1)
        throw ValidationError("config: run.jobs must be >= 1");
}

json data_model_json(const ExperimentConfig& c) {
    json j;
    j["data"] = {{"kind", data_kind_name(c.data.kind)},
                 {"dim", c.data.dim},
                 {"points_per_device", c.data.points_per_device},
                 {"heterogeneity", c.data.heterogeneity},
                 {"num_classes", c.data.num_classes},
                 {"points_per_class", c.data.points_per_class},
                 {"spread", c.data.spread},
                 {"labels_per_device", c.data.labels_per_device},
                 {"eval_fraction", c.data.eval_fraction},
                 {"images_path", c.data.images_path},
                 {"labels_path", c.data.labels_path},
                 {"data_seed", c.data.data_seed}};
    j["model"] = {{"kind", c.model.kind == model::LossKind::least_squares
                               ? "least_squares"
                               : "squared_svm"},
                  {"lambda_reg", c.model.lambda_reg}};
    return j;
}

json to_json(const ExperimentConfig& c) {
    json j = data_model_json(c);
    j["network"] = {{"devices", c.network.devices},
                    {"clusters", c.network.clusters},
                    {"spectral_target", c.network.spectral_target},
                    {"radius", c.network.radius},
                    {"topology_seed", c.network.topology_seed}};
    j["hyperparameters"] = {{"gamma", c.hp.gamma},
                            {"alpha", c.hp.alpha},
                            {"tau", c.hp.tau},
                            {"total_steps", c.hp.total_steps},
                            {"batch_size", c.hp.batch_size},
                            {"theorem_mode", c.hp.theorem_mode}};
    j["consensus"] = {{"policy", policy_name(c.hp.policy)},
                      {"phi", c.hp.phi},
                      {"rounds", c.hp.fixed_rounds},
                      {"period", c.hp.period}};
    j["resources"] = {{"e_d2d", c.resources.e_d2d},
                      {"e_glob", c.resources.e_glob},
                      {"d_d2d", c.resources.d_d2d},
                      {"d_glob", c.resources.d_glob}};
    j["run"] = {{"replicates", c.run.replicates},
                {"seed", c.run.seed},
                {"out_dir", c.run.out_dir},
                {"verify_bounds", c.run.verify_bounds},
                {"baseline", baseline_name(c.run.baseline)},
                {"baseline_tau", c.run.baseline_tau},
                {"jobs", c.run.jobs}};
    return j;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config: root must be an object");
    reject_unknown(j, "<root>",
                   {"network", "data", "model", "hyperparameters", "consensus",
                    "resources", "run"});

    ExperimentConfig c;
    if (j.contains("network")) {
        const json& s = j["network"];
        reject_unknown(s, "network",
                       {"devices", "clusters", "spectral_target", "radius",
                        "topology_seed"});
        take(s, "devices", c.network.devices);
        take(s, "clusters", c.network.clusters);
        take(s, "spectral_target", c.network.spectral_target);
        take(s, "radius", c.network.radius);
        take(s, "topology_seed", c.network.topology_seed);
    }
    if (j.contains("data")) {
        const json& s = j["data"];
        reject_unknown(s, "data",
                       {"kind", "dim", "points_per_device", "heterogeneity",
                        "num_classes", "points_per_class", "spread",
                        "labels_per_device", "eval_fraction", "images_path",
                        "labels_path", "data_seed"});
        if (s.contains("kind"))
            c.data.kind = parse_data_kind(s.at("kind").get<std::string>());
        take(s, "dim", c.data.dim);
        take(s, "points_per_device", c.data.points_per_device);
        take(s, "heterogeneity", c.data.heterogeneity);
        take(s, "num_classes", c.data.num_classes);
        take(s, "points_per_class", c.data.points_per_class);
        take(s, "spread", c.data.spread);
        take(s, "labels_per_device", c.data.labels_per_device);
        take(s, "eval_fraction", c.data.eval_fraction);
        take(s, "images_path", c.data.images_path);
        take(s, "labels_path", c.data.labels_path);
        take(s, "data_seed", c.data.data_seed);
    }
    if (j.contains("model")) {
        const json& s = j["model"];
        reject_unknown(s, "model", {"kind", "lambda_reg"});
        if (s.contains("kind"))
            c.model.kind = parse_loss_kind(s.at("kind").get<std::string>());
        take(s, "lambda_reg", c.model.lambda_reg);
    }
    if (j.contains("hyperparameters")) {
        const json& s = j["hyperparameters"];
        reject_unknown(s, "hyperparameters",
                       {"gamma", "alpha", "tau", "total_steps", "batch_size",
                        "theorem_mode"});
        take(s, "gamma", c.hp.gamma);
        take(s, "alpha", c.hp.alpha);
        take(s, "tau", c.hp.tau);
        take(s, "total_steps", c.hp.total_steps);
        take(s, "batch_size", c.hp.batch_size);
        take(s, "theorem_mode", c.hp.theorem_mode);
    }
    if (j.contains("consensus")) {
        const json& s = j["consensus"];
        reject_unknown(s, "consensus", {"policy", "phi", "rounds", "period"});
        if (s.contains("policy"))
            c.hp.policy = parse_policy(s.at("policy").get<std::string>());
        take(s, "phi", c.hp.phi);
        take(s, "rounds", c.hp.fixed_rounds);
        take(s, "period", c.hp.period);
    }
    if (j.contains("resources")) {
        const json& s = j["resources"];
        reject_unknown(s, "resources", {"e_d2d", "e_glob", "d_d2d", "d_glob"});
        take(s, "e_d2d", c.resources.e_d2d);
        take(s, "e_glob", c.resources.e_glob);
        take(s, "d_d2d", c.resources.d_d2d);
        take(s, "d_glob", c.resources.d_glob);
    }
    if (j.contains("run")) {
        const json& s = j["run"];
        reject_unknown(s, "run",
                       {"replicates", "seed", "out_dir", "verify_bounds",
                        "baseline", "baseline_tau", "jobs"});
        take(s, "replicates", c.run.replicates);
        take(s, "seed", c.run.seed);
        take(s, "out_dir", c.run.out_dir);
        take(s, "verify_bounds", c.run.verify_bounds);
        if (s.contains("baseline"))
            c.run.baseline = parse_baseline(s.at("baseline").get<std::string>());
        take(s, "baseline_tau", c.run.baseline_tau);
        take(s, "jobs", c.run.jobs);
    }
    c.hp.master_seed = c.run.seed;
    validate(c);
    return c;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    return to_json(cfg).dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a(to_json(cfg).dump());
}

std::uint64_t data_model_hash(const ExperimentConfig& cfg) {
    json j = data_model_json(cfg);
    j["network"] = {{"devices", cfg.network.devices},
                    {"clusters", cfg.network.clusters}};
    return fnv1a(j.dump());
}

}  // namespace tthf::cli
