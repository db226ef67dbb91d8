// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "roadseg/rng.hpp"
#include "roadseg/tiles.hpp"

namespace roadseg {

// Training-time augmentation policy: random rescale, axis-aligned rotation,
// flips, color jitter, then a fixed-size random crop.
struct AugmentConfig {
    double scale_lo = 0.5;
    double scale_hi = 1.5;
    std::vector<int> rotations = {0, 90, 180, 270};  // degrees, multiples of 90
    double hflip_prob = 0.5;
    double vflip_prob = 0.5;
    double brightness = 0.2;  // max relative deltas
    double contrast = 0.2;
    double saturation = 0.2;
    int crop_size = 512;
    uint64_t seed = 0;

    void validate() const;
};

// Applies rescale -> rotate -> flip -> color -> crop. Geometric transforms
// hit image and mask identically (mask resampled nearest, image bilinear);
// color jitter touches the image only. If the rescaled tile is smaller than
// crop_size it is reflect-padded (mask padded with 255) before cropping.
// Deterministic given the rng state; the draw sequence is fixed regardless
// of which transforms end up active.
TileSample augment(const TileSample& sample, const AugmentConfig& cfg, Rng& rng);

}  // namespace roadseg
