// SPDX-License-Identifier: Apache-2.0

#include "roadseg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace roadseg {

namespace {

// Stamps the rectangle spanned by thickening segment (x1,y1)-(x2,y2) by
// radius r. Pixel centers whose projection falls within [0, len] and whose
// perpendicular distance is <= r are set (flush end caps).
void stamp_segment(MaskU8& mask, double x1, double y1, double x2, double y2, double r) {
    const double dx = x2 - x1, dy = y2 - y1;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return;  // joins cover degenerate segments

    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(x1, x2) - r - 1.0)));
    const int x_hi = std::min(mask.w - 1, static_cast<int>(std::ceil(std::max(x1, x2) + r + 1.0)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(y1, y2) - r - 1.0)));
    const int y_hi = std::min(mask.h - 1, static_cast<int>(std::ceil(std::max(y1, y2) + r + 1.0)));

    for (int py = y_lo; py <= y_hi; ++py) {
        const double cy = py + 0.5;
        for (int px = x_lo; px <= x_hi; ++px) {
            const double cx = px + 0.5;
            const double t = ((cx - x1) * dx + (cy - y1) * dy) / len2;
            if (t < 0.0 || t > 1.0) continue;
            const double ex = cx - (x1 + t * dx);
            const double ey = cy - (y1 + t * dy);
            if (ex * ex + ey * ey <= r * r) mask.at(py, px) = kRoad;
        }
    }
}

// Round join: disk of radius r at an interior vertex.
void stamp_disk(MaskU8& mask, double x0, double y0, double r) {
    const int x_lo = std::max(0, static_cast<int>(std::floor(x0 - r - 1.0)));
    const int x_hi = std::min(mask.w - 1, static_cast<int>(std::ceil(x0 + r + 1.0)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(y0 - r - 1.0)));
    const int y_hi = std::min(mask.h - 1, static_cast<int>(std::ceil(y0 + r + 1.0)));
    for (int py = y_lo; py <= y_hi; ++py) {
        const double ey = py + 0.5 - y0;
        for (int px = x_lo; px <= x_hi; ++px) {
            const double ex = px + 0.5 - x0;
            if (ex * ex + ey * ey <= r * r) mask.at(py, px) = kRoad;
        }
    }
}

}  // namespace

MaskU8 rasterize_roads(const std::vector<Polyline>& polylines, int height, int width,
                       double resolution_m_per_px) {
    if (resolution_m_per_px <= 0.0) throw ValidationError("rasterize_roads: resolution must be > 0");
    if (height <= 0 || width <= 0) throw ValidationError("rasterize_roads: raster dims must be positive");

    MaskU8 mask(height, width, 1, kBackground);
    for (const Polyline& pl : polylines) {
        if (pl.vertices.size() < 2) throw ValidationError("polyline needs at least 2 vertices");
        if (pl.width_m <= 0.0) throw ValidationError("polyline width_m must be > 0");
        const int wpx = std::max<int>(1, static_cast<int>(std::llround(pl.width_m / resolution_m_per_px)));
        const double r = wpx / 2.0;
        for (size_t i = 0; i + 1 < pl.vertices.size(); ++i) {
            stamp_segment(mask, pl.vertices[i].first, pl.vertices[i].second,
                          pl.vertices[i + 1].first, pl.vertices[i + 1].second, r);
            if (i + 2 < pl.vertices.size())
                stamp_disk(mask, pl.vertices[i + 1].first, pl.vertices[i + 1].second, r);
        }
    }
    return mask;
}

std::vector<Polyline> load_polylines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open polyline file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid polyline JSON in " + path + ": " + e.what());
    }
    if (!j.is_array()) throw ParseError("polyline file must be a JSON list: " + path);
    std::vector<Polyline> out;
    out.reserve(j.size());
    for (const auto& item : j) {
        Polyline pl;
        try {
            for (const auto& v : item.at("vertices"))
                pl.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
            pl.width_m = item.at("width_m").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("invalid polyline record in " + path + ": " + e.what());
        }
        if (pl.vertices.size() < 2) throw ValidationError("polyline needs at least 2 vertices: " + path);
        if (pl.width_m <= 0.0) throw ValidationError("polyline width_m must be > 0: " + path);
        out.push_back(std::move(pl));
    }
    return out;
}

}  // namespace roadseg
