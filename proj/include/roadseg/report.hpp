// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>

#include "roadseg/config.hpp"
#include "roadseg/eval.hpp"

namespace roadseg {

// Declarative description of a transfer grid: shared model/train/augment
// settings, the experiment cells and the eval sets every cell is scored on.
struct GridRunConfig {
    ModelConfig model;
    TrainConfig train;
    AugmentConfig augment;
    int eval_tile = 0;
    std::map<std::string, std::string> eval_sets;  // display name -> manifest path
    std::vector<TransferExperiment> experiments;
    std::string output_dir;

    nlohmann::json to_json() const;
};

GridRunConfig load_grid_config(const std::string& path);

// Trains (or reuses) every cell's checkpoint, evaluates it on every eval
// set and assembles the grid. Cells with a source train through the full
// teacher -> pseudo-label -> adaptation pipeline, with the matching
// baseline cell as teacher. Per-cell failures become failure rows; the grid
// continues. Rows where a with-source cell scores below its no-source
// baseline on the same eval set are flagged as negative transfer.
TransferReport run_transfer_grid(const GridRunConfig& cfg);

// Writes report.csv and report.md under out_dir; byte-deterministic for a
// given report.
void write_transfer_report(const TransferReport& report, const std::string& out_dir);

}  // namespace roadseg
