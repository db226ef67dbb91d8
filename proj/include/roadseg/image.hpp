// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadseg/common.hpp"

namespace roadseg {

// 8-bit raster, row-major, interleaved channels (c = 1 or 3).
struct ImageU8 {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<uint8_t> px;

    ImageU8() = default;
    ImageU8(int h_, int w_, int c_, uint8_t fill = 0)
        : h(h_), w(w_), c(c_), px(static_cast<size_t>(h_) * w_ * c_, fill) {}

    uint8_t& at(int y, int x, int ch = 0) {
        return px[(static_cast<size_t>(y) * w + x) * c + ch];
    }
    uint8_t at(int y, int x, int ch = 0) const {
        return px[(static_cast<size_t>(y) * w + x) * c + ch];
    }
    size_t size() const { return px.size(); }
    bool empty() const { return px.empty(); }
};

// Masks are single-channel ImageU8 with values in {0 background, 1 road,
// 255 ignore}.
using MaskU8 = ImageU8;

inline constexpr uint8_t kRoad = 1;
inline constexpr uint8_t kBackground = 0;
inline constexpr uint8_t kIgnore = 255;

// PNG in either 1 or 3 channels; TIFF read-only, decoded to RGB.
ImageU8 load_image(const std::string& path);          // by extension
ImageU8 load_png(const std::string& path);
ImageU8 load_tiff_rgb(const std::string& path);
void save_png(const std::string& path, const ImageU8& img);

}  // namespace roadseg
