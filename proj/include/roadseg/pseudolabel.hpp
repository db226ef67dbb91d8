// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "roadseg/model.hpp"
#include "roadseg/tiles.hpp"

namespace roadseg {

// Teacher prediction for one unlabeled tile. mask is 255 exactly where the
// max-class probability fell below the threshold.
struct PseudoLabelMap {
    MaskU8 mask;
    std::vector<float> confidence;  // h*w max-class probabilities in [0,1]
    std::string teacher_checkpoint_id;
    double threshold = 0.0;
};

// Runs the teacher in inference mode over the tiles: per-pixel argmax labels,
// low-confidence pixels ignored. Deterministic.
std::vector<PseudoLabelMap> generate_pseudo_labels(ToyNetF& teacher, const Normalization& norm,
                                                   const std::vector<TileSample>& tiles,
                                                   double threshold,
                                                   const std::string& teacher_checkpoint_id = "");

struct PseudoStats {
    double kept_fraction = 0.0;  // share of non-255 pixels
    double road_fraction = 0.0;  // share of road among kept
    std::vector<std::array<uint64_t, 3>> per_image_histogram;  // {background, road, ignore}
};

PseudoStats pseudo_label_stats(const std::vector<PseudoLabelMap>& maps);

// Store layout mirrors the tile store: {id}_pseudo.png + {id}_conf.png plus
// an index recording the teacher checkpoint and threshold.
struct PseudoStoreIndex {
    std::string teacher_checkpoint_id;
    double threshold = 0.0;
    std::vector<std::string> ids;
};

void write_pseudo_store(const std::string& dir, const std::vector<std::string>& ids,
                        const std::vector<PseudoLabelMap>& maps);
PseudoStoreIndex load_pseudo_store_index(const std::string& dir);
MaskU8 load_pseudo_mask(const std::string& dir, const std::string& id);

}  // namespace roadseg
