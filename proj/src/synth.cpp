// SPDX-License-Identifier: Apache-2.0

#include "roadseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "roadseg/geometry.hpp"
#include "roadseg/rng.hpp"

namespace fs = std::filesystem;

namespace roadseg {

namespace {

struct StyleParams {
    double base[3];        // background palette
    double blotch_amp;     // low-frequency texture amplitude
    int blotch_cells;      // texture frequency (grid cells across the image)
    double noise_sigma;    // per-pixel noise
    double road[3];        // road paint
    double road_jitter;    // per-road brightness jitter range
};

StyleParams style_params(SynthStyle s) {
    if (s == SynthStyle::A)
        return {{104.0, 122.0, 78.0}, 24.0, 4, 6.0, {58.0, 56.0, 54.0}, 10.0};
    return {{150.0, 149.0, 160.0}, 16.0, 9, 13.0, {112.0, 110.0, 116.0}, 10.0};
}

// Road layout for one image; independent of style so both domains share
// geometry for a given seed.
std::vector<Polyline> draw_geometry(int size, Rng& rng) {
    const int n_roads = 1 + static_cast<int>(rng.uniform_int(3));
    std::vector<Polyline> roads;
    roads.reserve(n_roads);
    for (int r = 0; r < n_roads; ++r) {
        Polyline pl;
        pl.width_m = rng.uniform(1.5, 5.5) * size / 64.0;
        double x = rng.uniform(-0.1, 1.1) * size;
        double y = rng.uniform(-0.1, 1.1) * size;
        double theta = rng.uniform(0.0, 6.283185307179586);
        pl.vertices.emplace_back(x, y);
        const int n_seg = 2 + static_cast<int>(rng.uniform_int(3));
        for (int sgi = 0; sgi < n_seg; ++sgi) {
            const double step = rng.uniform(0.4, 0.9) * size;
            theta += rng.uniform(-0.5, 0.5);
            x += step * std::cos(theta);
            y += step * std::sin(theta);
            pl.vertices.emplace_back(x, y);
        }
        roads.push_back(std::move(pl));
    }
    return roads;
}

// A single guaranteed-in-range layout, used if rejection sampling runs out of
// attempts (road fraction of a straight band of width ~size/24 is ~4%).
std::vector<Polyline> fallback_geometry(int size, Rng& rng) {
    Polyline pl;
    pl.width_m = std::max(2.0, size / 24.0);
    const double y = rng.uniform(0.2, 0.8) * size;
    pl.vertices.emplace_back(-1.0, y);
    pl.vertices.emplace_back(size + 1.0, y);
    return {pl};
}

double road_fraction(const MaskU8& mask) {
    uint64_t n = 0;
    for (uint8_t v : mask.px) n += (v == kRoad);
    return static_cast<double>(n) / mask.px.size();
}

// Smooth blotch field: a coarse grid of random offsets, bilinearly upsampled.
std::vector<float> blotch_field(int size, int cells, double amp, Rng& rng) {
    const int g = cells + 2;
    std::vector<double> grid(static_cast<size_t>(g) * g);
    for (auto& v : grid) v = rng.normal() * amp;
    std::vector<float> out(static_cast<size_t>(size) * size);
    const double f = static_cast<double>(cells) / size;
    for (int yy = 0; yy < size; ++yy) {
        const double gy = yy * f;
        const int y0 = static_cast<int>(gy);
        const double wy = gy - y0;
        for (int xx = 0; xx < size; ++xx) {
            const double gx = xx * f;
            const int x0 = static_cast<int>(gx);
            const double wx = gx - x0;
            const double v = (1 - wy) * ((1 - wx) * grid[y0 * g + x0] + wx * grid[y0 * g + x0 + 1]) +
                             wy * ((1 - wx) * grid[(y0 + 1) * g + x0] + wx * grid[(y0 + 1) * g + x0 + 1]);
            out[static_cast<size_t>(yy) * size + xx] = static_cast<float>(v);
        }
    }
    return out;
}

}  // namespace

SynthStyle parse_style(const std::string& s) {
    if (s == "A" || s == "a") return SynthStyle::A;
    if (s == "B" || s == "b") return SynthStyle::B;
    throw ValidationError("invalid synthetic style '" + s + "' (expected A or B)");
}

std::string style_name(SynthStyle s) { return s == SynthStyle::A ? "A" : "B"; }

std::vector<TileSample> generate_synthetic_domain(SynthStyle style, int n_images, int size,
                                                  uint64_t seed) {
    if (n_images < 1) throw ValidationError("n_images must be >= 1");
    if (size < 16) throw ValidationError("synthetic tile size must be >= 16");

    const StyleParams sp = style_params(style);
    const std::string img_stream = std::string("synth_img_") + style_name(style);

    std::vector<TileSample> out;
    out.reserve(n_images);
    for (int i = 0; i < n_images; ++i) {
        // Geometry: style-independent stream, rejection-sampled into the
        // target road-fraction band.
        MaskU8 mask;
        for (uint64_t attempt = 0;; ++attempt) {
            Rng geom = derive_rng(seed, "synth_geom", static_cast<uint64_t>(i), attempt);
            std::vector<Polyline> roads =
                attempt < 64 ? draw_geometry(size, geom) : fallback_geometry(size, geom);
            mask = rasterize_roads(roads, size, size, 1.0);
            const double frac = road_fraction(mask);
            if (frac >= 0.01 && frac <= 0.25) break;
        }

        Rng irng = derive_rng(seed, img_stream, static_cast<uint64_t>(i));
        const auto blotch = blotch_field(size, sp.blotch_cells, sp.blotch_amp, irng);
        double road_shift[3];
        for (double& v : road_shift) v = irng.uniform(-sp.road_jitter, sp.road_jitter);

        ImageU8 img(size, size, 3);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const bool is_road = mask.at(y, x) == kRoad;
                const double b = blotch[static_cast<size_t>(y) * size + x];
                for (int ch = 0; ch < 3; ++ch) {
                    double v = is_road ? sp.road[ch] + road_shift[ch] + 0.3 * b
                                       : sp.base[ch] + b;
                    v += irng.normal() * sp.noise_sigma;
                    img.at(y, x, ch) = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                }
            }
        }

        TileSample t;
        t.image = std::move(img);
        t.mask = std::move(mask);
        t.origin.dataset = std::string("synth") + style_name(style);
        t.origin.image_id = std::to_string(i);
        t.resolution_m_per_px = 1.0;
        out.push_back(std::move(t));
    }
    return out;
}

void write_synth_dataset(const std::string& out_dir, SynthStyle style, int n_images, int size,
                         uint64_t seed) {
    auto tiles = generate_synthetic_domain(style, n_images, size, seed);
    const std::string name = std::string("synth") + style_name(style);

    const int n_train = std::max<int>(1, static_cast<int>(tiles.size() * 8 / 10));
    std::vector<TileSample> train_tiles(tiles.begin(), tiles.begin() + n_train);
    const Normalization norm = compute_normalization(train_tiles);

    fs::create_directories(out_dir);
    const std::string store = (fs::path(out_dir) / "tiles").string();
    write_tile_store(store, name, tiles, norm);

    auto sample_for = [&](size_t i, bool with_mask) {
        char id[16];
        std::snprintf(id, sizeof(id), "%06zu", i);
        SamplePath sp;
        sp.image_path = (fs::path(store) / (std::string(id) + "_img.png")).string();
        if (with_mask) sp.mask_path = (fs::path(store) / (std::string(id) + "_mask.png")).string();
        return sp;
    };

    DatasetManifest base;
    base.name = name;
    base.resolution_m_per_px = 1.0;
    base.normalization = norm;

    {
        DatasetManifest m = base;
        m.role = Role::LabeledTarget;
        for (int i = 0; i < n_train; ++i) m.splits["train"].push_back(sample_for(i, true));
        save_manifest(m, (fs::path(out_dir) / "manifest_labeled.json").string());
    }
    {
        DatasetManifest m = base;
        m.role = Role::UnlabeledSource;
        for (int i = 0; i < n_train; ++i) m.splits["train"].push_back(sample_for(i, false));
        save_manifest(m, (fs::path(out_dir) / "manifest_unlabeled.json").string());
    }
    if (static_cast<size_t>(n_train) < tiles.size()) {
        DatasetManifest m = base;
        m.role = Role::Eval;
        for (size_t i = n_train; i < tiles.size(); ++i) m.splits["eval"].push_back(sample_for(i, true));
        save_manifest(m, (fs::path(out_dir) / "manifest_eval.json").string());
    }
}

}  // namespace roadseg
