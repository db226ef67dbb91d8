// SPDX-License-Identifier: Apache-2.0

#include "roadseg/pseudolabel.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace roadseg {

std::vector<PseudoLabelMap> generate_pseudo_labels(ToyNetF& teacher, const Normalization& norm,
                                                   const std::vector<TileSample>& tiles,
                                                   double threshold,
                                                   const std::string& teacher_checkpoint_id) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ValidationError("pseudo-label threshold must be in [0,1]");

    std::vector<PseudoLabelMap> out;
    out.reserve(tiles.size());
    for (const auto& tile : tiles) {
        const int h = tile.image.h, w = tile.image.w;
        TensorF x({1, 3, h, w});
        for (int ch = 0; ch < 3; ++ch) {
            const double mean = norm.mean[ch], sd = norm.stddev[ch];
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx)
                    x.at4(0, ch, y, xx) = static_cast<float>((tile.image.at(y, xx, ch) - mean) / sd);
        }
        TensorF probs = predict_probs(teacher, x);
        const int c = static_cast<int>(probs.dim(1));

        PseudoLabelMap m;
        m.mask = MaskU8(h, w, 1);
        m.confidence.resize(static_cast<size_t>(h) * w);
        m.teacher_checkpoint_id = teacher_checkpoint_id;
        m.threshold = threshold;
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                float best = probs.at4(0, 0, y, xx);
                int label = 0;
                for (int ci = 1; ci < c; ++ci) {
                    const float p = probs.at4(0, ci, y, xx);
                    if (p > best) {
                        best = p;
                        label = ci;
                    }
                }
                m.confidence[static_cast<size_t>(y) * w + xx] = best;
                m.mask.at(y, xx) =
                    best < threshold ? kIgnore : static_cast<uint8_t>(label);
            }
        out.push_back(std::move(m));
    }
    return out;
}

PseudoStats pseudo_label_stats(const std::vector<PseudoLabelMap>& maps) {
    if (maps.empty()) throw ValidationError("pseudo_label_stats: no maps");
    PseudoStats st;
    uint64_t total = 0, kept = 0, road = 0;
    for (const auto& m : maps) {
        std::array<uint64_t, 3> hist{0, 0, 0};
        for (uint8_t v : m.mask.px) {
            if (v == kIgnore) ++hist[2];
            else if (v == kRoad) {
                ++hist[1];
                ++kept;
                ++road;
            } else {
                ++hist[0];
                ++kept;
            }
        }
        total += m.mask.px.size();
        st.per_image_histogram.push_back(hist);
    }
    st.kept_fraction = total ? static_cast<double>(kept) / total : 0.0;
    st.road_fraction = kept ? static_cast<double>(road) / kept : 0.0;
    return st;
}

void write_pseudo_store(const std::string& dir, const std::vector<std::string>& ids,
                        const std::vector<PseudoLabelMap>& maps) {
    if (ids.size() != maps.size())
        throw ValidationError("write_pseudo_store: ids and maps differ in length");
    if (maps.empty()) throw ValidationError("write_pseudo_store: nothing to write");
    fs::create_directories(dir);
    for (size_t i = 0; i < maps.size(); ++i) {
        save_png((fs::path(dir) / (ids[i] + "_pseudo.png")).string(), maps[i].mask);
        ImageU8 conf(maps[i].mask.h, maps[i].mask.w, 1);
        for (size_t j = 0; j < conf.px.size(); ++j)
            conf.px[j] = static_cast<uint8_t>(std::lround(maps[i].confidence[j] * 255.0f));
        save_png((fs::path(dir) / (ids[i] + "_conf.png")).string(), conf);
    }
    json idx;
    idx["schema_version"] = 1;
    idx["teacher_checkpoint_id"] = maps.front().teacher_checkpoint_id;
    idx["threshold"] = maps.front().threshold;
    idx["ids"] = ids;
    std::ofstream out(fs::path(dir) / "index.json");
    if (!out) throw IoError("cannot write pseudo store index in " + dir);
    out << idx.dump(2) << "\n";
}

PseudoStoreIndex load_pseudo_store_index(const std::string& dir) {
    const std::string path = (fs::path(dir) / "index.json").string();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pseudo store index: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed pseudo store index " + path + ": " + e.what());
    }
    PseudoStoreIndex idx;
    try {
        idx.teacher_checkpoint_id = j.at("teacher_checkpoint_id").get<std::string>();
        idx.threshold = j.at("threshold").get<double>();
        idx.ids = j.at("ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ParseError("pseudo store index " + path + " missing key: " + e.what());
    }
    return idx;
}

MaskU8 load_pseudo_mask(const std::string& dir, const std::string& id) {
    MaskU8 m = load_png((fs::path(dir) / (id + "_pseudo.png")).string());
    if (m.c != 1) throw ParseError("pseudo mask must be single-channel: " + id);
    return m;
}

}  // namespace roadseg
