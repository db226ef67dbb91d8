// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "roadseg/augment.hpp"
#include "roadseg/losses.hpp"
#include "roadseg/model.hpp"
#include "roadseg/trainer.hpp"

namespace roadseg {

// JSON (de)serialization for every config block. Round-trips losslessly.
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const AlphaSchedule& c);
void from_json(const nlohmann::json& j, AlphaSchedule& c);
void to_json(nlohmann::json& j, const MccConfig& c);
void from_json(const nlohmann::json& j, MccConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

// Top-level experiment description consumed by the train / pseudolabel /
// train-ssda / eval commands.
struct ExperimentConfig {
    ModelConfig model;
    TrainConfig train;
    AugmentConfig augment;
    std::map<std::string, std::string> datasets;  // role name -> manifest path
    std::string pseudo_store;                     // consumed by train-ssda when beta > 0
    std::string teacher_checkpoint;               // consumed by pseudolabel
    std::string output_dir;
    int eval_tile = 0;  // 0: use the eval image size

    std::string dataset_path(const std::string& role) const;
};

// Loads a config file; relative dataset paths resolve against
// ROADSEG_DATA_ROOT when set, else against the config file's directory.
ExperimentConfig load_experiment_config(const std::string& path);

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

// Resolved-config snapshot written next to every command's outputs.
void save_experiment_config(const ExperimentConfig& cfg, const std::string& path);

// Stable hash of a canonical JSON dump, for report metadata.
uint64_t config_hash(const nlohmann::json& j);

}  // namespace roadseg
