// SPDX-License-Identifier: Apache-2.0
//
// Command-level entry points shared by the C API and the CLI. Every command
// writes a resolved-config snapshot next to its outputs so any result is
// reproducible from its directory alone.
#pragma once

#include <string>
#include <vector>

#include "roadseg/config.hpp"
#include "roadseg/eval.hpp"
#include "roadseg/report.hpp"
#include "roadseg/synth.hpp"
#include "roadseg/trainer.hpp"

namespace roadseg {

struct SynthOptions {
    SynthStyle style = SynthStyle::A;
    int n_images = 0;
    int size = 96;
    uint64_t seed = 0;
    std::string out_dir;
};
void run_synth(const SynthOptions& opts);

struct PrepOptions {
    std::string manifest_path;
    int tile_size = 512;
    int stride = 0;             // 0: non-overlapping (stride = tile_size)
    double target_resolution = 0.0;  // 0: keep native resolution
    std::string out_dir;
    bool force = false;
};
void run_prep(const PrepOptions& opts);

struct TrainOptions {
    std::string config_path;
    std::string out_dir;  // empty: config output_dir
    int64_t seed = -1;    // < 0: keep config seeds
    bool resume = false;
};
TrainResult run_train_cmd(const TrainOptions& opts, bool ssda);

struct PseudolabelOptions {
    std::string config_path;
    std::string teacher_checkpoint;  // empty: config teacher_checkpoint
    std::string out_dir;             // empty: config pseudo_store
    double threshold = -1.0;         // < 0: config pseudo_threshold
    bool force = false;
};
void run_pseudolabel_cmd(const PseudolabelOptions& opts);

struct EvalOptions {
    std::string checkpoint_path;
    std::string manifest_path;
    int tile_size = 0;   // 0: eval image size rounded up to the model grid
    std::string out_dir; // optional: writes eval.csv + config snapshot
};
IoUResult run_eval_cmd(const EvalOptions& opts, std::vector<std::string>* warnings = nullptr);

struct ReportOptions {
    std::string grid_config_path;
    std::string out_dir;  // empty: config output_dir
    bool force = false;
};
TransferReport run_report_cmd(const ReportOptions& opts);

}  // namespace roadseg
