// SPDX-License-Identifier: Apache-2.0

#include "roadseg/tiles.hpp"

#include "roadseg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace roadseg {

MaskU8 reduce_labels(const ImageU8& raw_mask, const std::set<int>& road_ids,
                     const std::set<int>& nodata_ids) {
    if (raw_mask.c != 1) throw ValidationError("reduce_labels expects a single-channel mask");
    MaskU8 out(raw_mask.h, raw_mask.w, 1);
    // 256-entry LUT: total function over the 8-bit alphabet.
    uint8_t lut[256];
    for (int v = 0; v < 256; ++v) {
        if (road_ids.count(v)) lut[v] = kRoad;
        else if (nodata_ids.count(v)) lut[v] = kIgnore;
        else lut[v] = kBackground;
    }
    for (size_t i = 0; i < raw_mask.px.size(); ++i) out.px[i] = lut[raw_mask.px[i]];
    return out;
}

int64_t tile_grid_count(int height, int width, int tile_size, int stride) {
    if (tile_size <= 0) throw ValidationError("tile_size must be positive");
    if (stride < 1) throw ValidationError("stride must be >= 1");
    if (tile_size > height || tile_size > width) return 0;
    const int64_t rows = (height - tile_size) / stride + 1;
    const int64_t cols = (width - tile_size) / stride + 1;
    return rows * cols;
}

std::vector<TileSample> extract_tiles(const ImageU8& image, const MaskU8& mask, int tile_size,
                                      int stride, const TileOrigin& origin,
                                      double resolution_m_per_px) {
    if (image.h != mask.h || image.w != mask.w)
        throw ValidationError("extract_tiles: image and mask dims differ");
    if (tile_size <= 0) throw ValidationError("tile_size must be positive");
    if (stride < 1) throw ValidationError("stride must be >= 1");

    std::vector<TileSample> out;
    if (tile_size > image.h || tile_size > image.w) return out;
    out.reserve(static_cast<size_t>(tile_grid_count(image.h, image.w, tile_size, stride)));

    for (int r = 0; r + tile_size <= image.h; r += stride) {
        for (int c = 0; c + tile_size <= image.w; c += stride) {
            TileSample t;
            t.image = ImageU8(tile_size, tile_size, image.c);
            t.mask = MaskU8(tile_size, tile_size, 1);
            for (int y = 0; y < tile_size; ++y) {
                std::copy_n(&image.px[(static_cast<size_t>(r + y) * image.w + c) * image.c],
                            static_cast<size_t>(tile_size) * image.c,
                            &t.image.px[static_cast<size_t>(y) * tile_size * image.c]);
                std::copy_n(&mask.px[static_cast<size_t>(r + y) * mask.w + c], tile_size,
                            &t.mask.px[static_cast<size_t>(y) * tile_size]);
            }
            t.origin = origin;
            t.origin.row = origin.row + r;
            t.origin.col = origin.col + c;
            t.resolution_m_per_px = resolution_m_per_px;
            out.push_back(std::move(t));
        }
    }
    return out;
}

ImageU8 resize_area(const ImageU8& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw ValidationError("resize_area: output dims must be positive");
    if (out_h == img.h && out_w == img.w) return img;
    ImageU8 out(out_h, out_w, img.c);
    const double fy = static_cast<double>(img.h) / out_h;
    const double fx = static_cast<double>(img.w) / out_w;
    std::vector<double> acc(img.c);
    for (int oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * fy, y1 = (oy + 1) * fy;
        for (int ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * fx, x1 = (ox + 1) * fx;
            std::fill(acc.begin(), acc.end(), 0.0);
            double area = 0.0;
            const int sy0 = static_cast<int>(std::floor(y0));
            const int sy1 = std::min(img.h - 1, static_cast<int>(std::ceil(y1)) - 1);
            const int sx0 = static_cast<int>(std::floor(x0));
            const int sx1 = std::min(img.w - 1, static_cast<int>(std::ceil(x1)) - 1);
            for (int sy = sy0; sy <= sy1; ++sy) {
                const double hy = std::min<double>(sy + 1, y1) - std::max<double>(sy, y0);
                if (hy <= 0) continue;
                for (int sx = sx0; sx <= sx1; ++sx) {
                    const double hx = std::min<double>(sx + 1, x1) - std::max<double>(sx, x0);
                    if (hx <= 0) continue;
                    const double wgt = hy * hx;
                    area += wgt;
                    for (int ch = 0; ch < img.c; ++ch) acc[ch] += wgt * img.at(sy, sx, ch);
                }
            }
            for (int ch = 0; ch < img.c; ++ch) {
                const double v = acc[ch] / std::max(area, 1e-12);
                out.at(oy, ox, ch) = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

ImageU8 resize_bilinear(const ImageU8& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw ValidationError("resize_bilinear: output dims must be positive");
    if (out_h == img.h && out_w == img.w) return img;
    ImageU8 out(out_h, out_w, img.c);
    const double fy = static_cast<double>(img.h) / out_h;
    const double fx = static_cast<double>(img.w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double sy = (oy + 0.5) * fy - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, img.h - 1);
        const int y1 = std::min(y0 + 1, img.h - 1);
        const double wy = std::clamp(sy - y0, 0.0, 1.0);
        for (int ox = 0; ox < out_w; ++ox) {
            const double sx = (ox + 0.5) * fx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, img.w - 1);
            const int x1 = std::min(x0 + 1, img.w - 1);
            const double wx = std::clamp(sx - x0, 0.0, 1.0);
            for (int ch = 0; ch < img.c; ++ch) {
                const double v = (1 - wy) * ((1 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch)) +
                                 wy * ((1 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch));
                out.at(oy, ox, ch) = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

MaskU8 resize_nearest(const MaskU8& mask, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw ValidationError("resize_nearest: output dims must be positive");
    if (out_h == mask.h && out_w == mask.w) return mask;
    MaskU8 out(out_h, out_w, mask.c);
    const double fy = static_cast<double>(mask.h) / out_h;
    const double fx = static_cast<double>(mask.w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const int sy = std::min(mask.h - 1, static_cast<int>((oy + 0.5) * fy));
        for (int ox = 0; ox < out_w; ++ox) {
            const int sx = std::min(mask.w - 1, static_cast<int>((ox + 0.5) * fx));
            for (int ch = 0; ch < mask.c; ++ch) out.at(oy, ox, ch) = mask.at(sy, sx, ch);
        }
    }
    return out;
}

TileSample harmonize_resolution(const TileSample& tile, double target_res) {
    if (target_res <= 0.0) throw ValidationError("harmonize_resolution: target resolution must be > 0");
    if (target_res < tile.resolution_m_per_px)
        throw UnsupportedError("harmonize_resolution: upscaling not supported (tile at " +
                               std::to_string(tile.resolution_m_per_px) + " m/px, target " +
                               std::to_string(target_res) + " m/px)");
    if (target_res == tile.resolution_m_per_px) return tile;

    const double f = target_res / tile.resolution_m_per_px;
    const int out_h = std::max(1, static_cast<int>(std::lround(tile.image.h / f)));
    const int out_w = std::max(1, static_cast<int>(std::lround(tile.image.w / f)));

    TileSample out;
    out.image = resize_area(tile.image, out_h, out_w);
    out.mask = resize_nearest(tile.mask, out_h, out_w);
    out.origin = tile.origin;
    out.resolution_m_per_px = target_res;
    return out;
}

Normalization compute_normalization(const std::vector<TileSample>& tiles) {
    Normalization n;
    if (tiles.empty()) return n;
    std::array<double, 3> sum{}, sumsq{};
    uint64_t count = 0;
    for (const auto& t : tiles) {
        for (int y = 0; y < t.image.h; ++y)
            for (int x = 0; x < t.image.w; ++x)
                for (int ch = 0; ch < 3; ++ch) {
                    const double v = t.image.at(y, x, ch);
                    sum[ch] += v;
                    sumsq[ch] += v * v;
                }
        count += static_cast<uint64_t>(t.image.h) * t.image.w;
    }
    for (int ch = 0; ch < 3; ++ch) {
        n.mean[ch] = sum[ch] / count;
        const double var = std::max(0.0, sumsq[ch] / count - n.mean[ch] * n.mean[ch]);
        n.stddev[ch] = std::max(1e-3, std::sqrt(var));
    }
    return n;
}

namespace {

std::string tile_id(size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu", i);
    return std::string(buf);
}

}  // namespace

void write_tile_store(const std::string& dir, const std::string& name,
                      const std::vector<TileSample>& tiles, const Normalization& norm) {
    if (tiles.empty()) throw ValidationError("write_tile_store: no tiles to write");
    fs::create_directories(dir);
    json index;
    index["schema_version"] = 1;
    index["name"] = name;
    index["resolution_m_per_px"] = tiles.front().resolution_m_per_px;
    index["tile_size"] = tiles.front().image.h;
    index["normalization"] = {{"mean", norm.mean}, {"std", norm.stddev}};
    json entries = json::array();
    for (size_t i = 0; i < tiles.size(); ++i) {
        const std::string id = tile_id(i);
        save_png((fs::path(dir) / (id + "_img.png")).string(), tiles[i].image);
        save_png((fs::path(dir) / (id + "_mask.png")).string(), tiles[i].mask);
        entries.push_back({{"id", id},
                           {"dataset", tiles[i].origin.dataset},
                           {"image_id", tiles[i].origin.image_id},
                           {"row", tiles[i].origin.row},
                           {"col", tiles[i].origin.col}});
    }
    index["tiles"] = std::move(entries);
    std::ofstream out(fs::path(dir) / "index.json");
    if (!out) throw IoError("cannot write tile store index in " + dir);
    out << index.dump(2) << "\n";
}

TileStoreIndex load_tile_store_index(const std::string& dir) {
    const std::string path = (fs::path(dir) / "index.json").string();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tile store index: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed tile store index " + path + ": " + e.what());
    }
    TileStoreIndex idx;
    try {
        idx.name = j.at("name").get<std::string>();
        idx.resolution_m_per_px = j.at("resolution_m_per_px").get<double>();
        idx.tile_size = j.at("tile_size").get<int>();
        for (int c = 0; c < 3; ++c) {
            idx.normalization.mean[c] = j.at("normalization").at("mean").at(c).get<double>();
            idx.normalization.stddev[c] = j.at("normalization").at("std").at(c).get<double>();
        }
        for (const auto& e : j.at("tiles")) {
            TileStoreEntry ent;
            ent.id = e.at("id").get<std::string>();
            ent.origin.dataset = e.at("dataset").get<std::string>();
            ent.origin.image_id = e.at("image_id").get<std::string>();
            ent.origin.row = e.at("row").get<int>();
            ent.origin.col = e.at("col").get<int>();
            idx.entries.push_back(std::move(ent));
        }
    } catch (const json::exception& e) {
        throw ParseError("tile store index " + path + " missing key: " + e.what());
    }
    return idx;
}

TileSample load_tile(const std::string& dir, const TileStoreEntry& entry, double resolution) {
    TileSample t;
    t.image = load_png((fs::path(dir) / (entry.id + "_img.png")).string());
    t.mask = load_png((fs::path(dir) / (entry.id + "_mask.png")).string());
    if (t.mask.c != 1) throw ValidationError("tile mask must be single-channel: " + entry.id);
    t.origin = entry.origin;
    t.resolution_m_per_px = resolution;
    return t;
}

std::vector<TileSample> load_split_tiles(const DatasetManifest& manifest, const std::string& split,
                                         bool need_mask) {
    const auto& samples = manifest.split(split);
    std::vector<TileSample> out;
    out.reserve(samples.size());
    for (const auto& sp : samples) {
        TileSample t;
        t.image = load_image(sp.image_path);
        if (t.image.c != 3)
            throw ValidationError("expected a 3-channel image: " + sp.image_path);
        if (sp.mask_path) {
            ImageU8 raw = load_png(*sp.mask_path);
            if (raw.c != 1)
                throw ValidationError("mask must be single-channel: " + *sp.mask_path);
            if (raw.h != t.image.h || raw.w != t.image.w)
                throw ValidationError("mask dims differ from image: " + *sp.mask_path);
            t.mask = reduce_labels(raw, manifest.road_class_ids, manifest.nodata_ids);
            if (sp.vector_roads_path) {
                // drawn roads override the raster labels
                MaskU8 drawn = rasterize_roads(load_polylines(*sp.vector_roads_path), t.image.h,
                                               t.image.w, manifest.resolution_m_per_px);
                for (size_t i = 0; i < drawn.px.size(); ++i)
                    if (drawn.px[i] == kRoad) t.mask.px[i] = kRoad;
            }
        } else if (sp.vector_roads_path) {
            t.mask = rasterize_roads(load_polylines(*sp.vector_roads_path), t.image.h, t.image.w,
                                     manifest.resolution_m_per_px);
        } else {
            if (need_mask)
                throw ValidationError("sample without labels in split '" + split + "': " +
                                      sp.image_path);
            t.mask = MaskU8(t.image.h, t.image.w, 1, kIgnore);
        }
        std::string stem = fs::path(sp.image_path).stem().string();
        if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, "_img") == 0)
            stem.resize(stem.size() - 4);
        t.origin.dataset = manifest.name;
        t.origin.image_id = stem;
        t.resolution_m_per_px = manifest.resolution_m_per_px;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace roadseg
