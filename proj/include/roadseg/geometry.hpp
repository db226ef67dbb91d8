// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "roadseg/image.hpp"

namespace roadseg {

// Vector road centerline in pixel coordinates with a physical stroke width.
struct Polyline {
    std::vector<std::pair<double, double>> vertices;  // (x, y) in pixels
    double width_m = 1.0;
};

// Strokes every polyline into a {0,1} mask. The stroke is wpx = max(1,
// round(width_m / resolution)) pixels wide; segment ends are cut flush at the
// endpoints and interior vertices get round joins. A pixel is set when its
// center lies inside the stroked region; vertices outside the raster clip.
MaskU8 rasterize_roads(const std::vector<Polyline>& polylines, int height, int width,
                       double resolution_m_per_px);

// Parses a polyline file: JSON list of {"vertices": [[x,y],...], "width_m": w}.
std::vector<Polyline> load_polylines(const std::string& path);

}  // namespace roadseg
