// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roadseg/image.hpp"
#include "roadseg/manifest.hpp"

namespace roadseg {

struct IoUResult {
    uint64_t intersection_px = 0;
    uint64_t union_px = 0;
    uint64_t n_eval_px = 0;  // non-ignore pixels seen

    // 1.0 when the union is empty.
    double iou() const {
        return union_px == 0 ? 1.0 : static_cast<double>(intersection_px) / static_cast<double>(union_px);
    }
};

// Road-class IoU over non-ignore pixels. pred must be hard {0,1} labels;
// gt may additionally contain 255.
IoUResult road_iou(const MaskU8& pred, const MaskU8& gt);

// Micro accumulation: intersections and unions sum before the divide, so the
// result over a partition of an image equals the whole-image result exactly.
class IoUAccumulator {
public:
    void add(const IoUResult& r) {
        total_.intersection_px += r.intersection_px;
        total_.union_px += r.union_px;
        total_.n_eval_px += r.n_eval_px;
    }
    void add(const MaskU8& pred, const MaskU8& gt) { add(road_iou(pred, gt)); }
    const IoUResult& result() const { return total_; }

private:
    IoUResult total_;
};

// Predicts hard labels for one tile_size x tile_size RGB tile.
using TilePredictor = std::function<MaskU8(const ImageU8&)>;

// Tiles every image of the manifest's eval split on the non-overlapping
// grid (border tiles reflect-padded, mask padded 255 so every labeled pixel
// counts exactly once), runs the predictor, accumulates micro-IoU.
IoUResult evaluate_with_predictor(const TilePredictor& predictor, const DatasetManifest& manifest,
                                  const std::string& split, int tile_size);

// Single-forward-pass checkpoint evaluation (no test-time augmentation).
// Warnings (e.g. a resolution mismatch against the training data) are
// appended to *warnings.
IoUResult evaluate_checkpoint(const std::string& checkpoint_path, const DatasetManifest& manifest,
                              int tile_size, std::vector<std::string>* warnings = nullptr);

// ---- transfer grid ----

struct TransferExperiment {
    std::string name;
    std::string target_manifest;                 // labeled target training set
    std::optional<std::string> source_manifest;  // unlabeled source (absent = baseline)
};

struct TransferRow {
    std::string target_train;
    std::string source;  // "-" for baseline rows
    std::string eval_set;
    double road_iou_pct = 0.0;
    bool negative_transfer = false;
    bool failed = false;
    std::string error;
};

struct TransferReport {
    std::vector<TransferRow> rows;
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> checkpoint_ids;  // experiment -> id
    std::vector<std::string> warnings;
};

std::string render_report_csv(const TransferReport& report);
std::string render_report_markdown(const TransferReport& report);

}  // namespace roadseg
