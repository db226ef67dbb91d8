// SPDX-License-Identifier: Apache-2.0

#include "roadseg/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace roadseg {

void to_json(json& j, const ModelConfig& c) {
    j = json{{"arch", c.arch}, {"n_classes", c.n_classes}, {"width", c.width},
             {"depth", c.depth}, {"seed", c.seed}};
}

void from_json(const json& j, ModelConfig& c) {
    c.arch = j.value("arch", c.arch);
    c.n_classes = j.value("n_classes", c.n_classes);
    c.width = j.value("width", c.width);
    c.depth = j.value("depth", c.depth);
    c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const AlphaSchedule& c) {
    j = json{{"alpha_max", c.alpha_max},
             {"ramp_iters", c.ramp_iters},
             {"shape", c.shape == AlphaSchedule::Shape::Linear ? "linear" : "sigmoid"}};
}

void from_json(const json& j, AlphaSchedule& c) {
    c.alpha_max = j.value("alpha_max", c.alpha_max);
    c.ramp_iters = j.value("ramp_iters", c.ramp_iters);
    const std::string shape = j.value("shape", std::string("linear"));
    if (shape == "linear") c.shape = AlphaSchedule::Shape::Linear;
    else if (shape == "sigmoid") c.shape = AlphaSchedule::Shape::Sigmoid;
    else throw ValidationError("alpha schedule shape must be linear or sigmoid, got '" + shape + "'");
}

void to_json(json& j, const MccConfig& c) {
    j = json{{"temperature", c.temperature}, {"entropy_weighting", c.entropy_weighting}};
    if (c.pixel_subsample) j["pixel_subsample"] = *c.pixel_subsample;
    else j["pixel_subsample"] = nullptr;
}

void from_json(const json& j, MccConfig& c) {
    c.temperature = j.value("temperature", c.temperature);
    c.entropy_weighting = j.value("entropy_weighting", c.entropy_weighting);
    if (j.contains("pixel_subsample")) {
        if (j.at("pixel_subsample").is_null()) c.pixel_subsample.reset();
        else c.pixel_subsample = j.at("pixel_subsample").get<int64_t>();
    }
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"total_iters", c.total_iters},
             {"batch_labeled", c.batch_labeled},
             {"batch_unlabeled", c.batch_unlabeled},
             {"learning_rate", c.learning_rate},
             {"weight_decay", c.weight_decay},
             {"optimizer", c.optimizer},
             {"lr_schedule", c.lr_schedule},
             {"alpha_schedule", c.alpha_schedule},
             {"beta", c.beta},
             {"seed", c.seed},
             {"checkpoint_every", c.checkpoint_every},
             {"mcc", c.mcc},
             {"pseudo_threshold", c.pseudo_threshold}};
}

void from_json(const json& j, TrainConfig& c) {
    c.total_iters = j.value("total_iters", c.total_iters);
    c.batch_labeled = j.value("batch_labeled", c.batch_labeled);
    c.batch_unlabeled = j.value("batch_unlabeled", c.batch_unlabeled);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.optimizer = j.value("optimizer", c.optimizer);
    c.lr_schedule = j.value("lr_schedule", c.lr_schedule);
    if (j.contains("alpha_schedule")) c.alpha_schedule = j.at("alpha_schedule").get<AlphaSchedule>();
    c.beta = j.value("beta", c.beta);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("mcc")) c.mcc = j.at("mcc").get<MccConfig>();
    c.pseudo_threshold = j.value("pseudo_threshold", c.pseudo_threshold);
}

void to_json(json& j, const AugmentConfig& c) {
    j = json{{"scale_range", {c.scale_lo, c.scale_hi}},
             {"rotations", c.rotations},
             {"hflip_prob", c.hflip_prob},
             {"vflip_prob", c.vflip_prob},
             {"color_jitter", {c.brightness, c.contrast, c.saturation}},
             {"crop_size", c.crop_size},
             {"seed", c.seed}};
}

void from_json(const json& j, AugmentConfig& c) {
    if (j.contains("scale_range")) {
        c.scale_lo = j.at("scale_range").at(0).get<double>();
        c.scale_hi = j.at("scale_range").at(1).get<double>();
    }
    if (j.contains("rotations")) c.rotations = j.at("rotations").get<std::vector<int>>();
    c.hflip_prob = j.value("hflip_prob", c.hflip_prob);
    c.vflip_prob = j.value("vflip_prob", c.vflip_prob);
    if (j.contains("color_jitter")) {
        c.brightness = j.at("color_jitter").at(0).get<double>();
        c.contrast = j.at("color_jitter").at(1).get<double>();
        c.saturation = j.at("color_jitter").at(2).get<double>();
    }
    c.crop_size = j.value("crop_size", c.crop_size);
    c.seed = j.value("seed", c.seed);
}

std::string ExperimentConfig::dataset_path(const std::string& role) const {
    auto it = datasets.find(role);
    if (it == datasets.end())
        throw ConfigError("experiment config has no '" + role + "' dataset entry");
    return it->second;
}

namespace {

std::string resolve_data_path(const std::string& p, const std::string& cfg_dir) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    const char* root = std::getenv("ROADSEG_DATA_ROOT");
    const fs::path base = (root && *root) ? fs::path(root) : fs::path(cfg_dir);
    return (base / p).lexically_normal().string();
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed config JSON in " + path + ": " + e.what());
    }
    const int schema = j.value("schema_version", 1);
    if (schema != 1)
        throw VersionError("config schema_version " + std::to_string(schema) + " unsupported");

    ExperimentConfig cfg;
    try {
        if (j.contains("model")) cfg.model = j.at("model").get<ModelConfig>();
        if (j.contains("train")) cfg.train = j.at("train").get<TrainConfig>();
        if (j.contains("augment")) cfg.augment = j.at("augment").get<AugmentConfig>();
        if (j.contains("datasets"))
            cfg.datasets = j.at("datasets").get<std::map<std::string, std::string>>();
        cfg.pseudo_store = j.value("pseudo_store", std::string());
        cfg.teacher_checkpoint = j.value("teacher_checkpoint", std::string());
        cfg.output_dir = j.value("output_dir", std::string());
        cfg.eval_tile = j.value("eval_tile", 0);
    } catch (const json::exception& e) {
        throw ParseError("config " + path + " missing or mistyped key: " + e.what());
    }

    const std::string dir = fs::absolute(fs::path(path)).parent_path().string();
    for (auto& [role, mpath] : cfg.datasets) mpath = resolve_data_path(mpath, dir);
    cfg.pseudo_store = resolve_data_path(cfg.pseudo_store, dir);
    cfg.teacher_checkpoint = resolve_data_path(cfg.teacher_checkpoint, dir);
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    j["model"] = cfg.model;
    j["train"] = cfg.train;
    j["augment"] = cfg.augment;
    j["datasets"] = cfg.datasets;
    if (!cfg.pseudo_store.empty()) j["pseudo_store"] = cfg.pseudo_store;
    if (!cfg.teacher_checkpoint.empty()) j["teacher_checkpoint"] = cfg.teacher_checkpoint;
    j["output_dir"] = cfg.output_dir;
    j["eval_tile"] = cfg.eval_tile;
    return j;
}

void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config snapshot: " + path);
    out << experiment_config_to_json(cfg).dump(2) << "\n";
}

uint64_t config_hash(const json& j) {
    return fnv1a64(j.dump());  // dump() emits sorted keys for objects
}

}  // namespace roadseg
