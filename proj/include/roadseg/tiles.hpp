// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <vector>

#include "roadseg/image.hpp"
#include "roadseg/manifest.hpp"

namespace roadseg {

struct TileOrigin {
    std::string dataset;
    std::string image_id;
    int row = 0;
    int col = 0;
};

// One canonical training/eval unit: an RGB tile plus its {0,1,255} mask.
struct TileSample {
    ImageU8 image;
    MaskU8 mask;
    TileOrigin origin;
    double resolution_m_per_px = 1.0;
};

// Collapses a source labeling to the 3-value road alphabet: ids in road_ids
// map to 1, ids in nodata_ids to 255, everything else to 0.
MaskU8 reduce_labels(const ImageU8& raw_mask, const std::set<int>& road_ids,
                     const std::set<int>& nodata_ids);

// Non-overlapping-by-default grid tiling; partial border tiles are dropped.
// Tiles are pure pixel copies of the source.
std::vector<TileSample> extract_tiles(const ImageU8& image, const MaskU8& mask, int tile_size,
                                      int stride, const TileOrigin& origin,
                                      double resolution_m_per_px);

// Expected tile count of extract_tiles for given dims (0 when tile > dims).
int64_t tile_grid_count(int height, int width, int tile_size, int stride);

// Downscales a tile to a coarser ground resolution: area averaging for the
// image, nearest neighbour for the mask (keeps the {0,1,255} alphabet
// closed). Upscading requests are rejected.
TileSample harmonize_resolution(const TileSample& tile, double target_res);

// Resampling primitives (also used by augmentation).
ImageU8 resize_area(const ImageU8& img, int out_h, int out_w);
ImageU8 resize_bilinear(const ImageU8& img, int out_h, int out_w);
MaskU8 resize_nearest(const MaskU8& mask, int out_h, int out_w);

Normalization compute_normalization(const std::vector<TileSample>& tiles);

// Tile store: a directory of {id}_img.png / {id}_mask.png pairs plus an
// index JSON carrying origins, resolution and normalization statistics.
struct TileStoreEntry {
    std::string id;
    TileOrigin origin;
};

struct TileStoreIndex {
    std::string name;
    double resolution_m_per_px = 1.0;
    int tile_size = 0;
    Normalization normalization;
    std::vector<TileStoreEntry> entries;
};

void write_tile_store(const std::string& dir, const std::string& name,
                      const std::vector<TileSample>& tiles, const Normalization& norm);
TileStoreIndex load_tile_store_index(const std::string& dir);
TileSample load_tile(const std::string& dir, const TileStoreEntry& entry, double resolution);

// Loads one manifest split into memory. Masks come from the mask file
// (reduced through the manifest's id sets) or are rasterized from the vector
// roads; samples with neither get an all-ignore mask (rejected when
// need_mask). The tile id (origin.image_id) is the image filename stem,
// with a trailing "_img" stripped for store-produced files.
std::vector<TileSample> load_split_tiles(const DatasetManifest& manifest, const std::string& split,
                                         bool need_mask);

}  // namespace roadseg
