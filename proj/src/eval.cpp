// SPDX-License-Identifier: Apache-2.0

#include "roadseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "roadseg/model.hpp"
#include "roadseg/tiles.hpp"

namespace roadseg {

IoUResult road_iou(const MaskU8& pred, const MaskU8& gt) {
    if (pred.h != gt.h || pred.w != gt.w)
        throw ValidationError("road_iou: prediction and ground truth dims differ");
    IoUResult r;
    for (size_t i = 0; i < pred.px.size(); ++i) {
        const uint8_t p = pred.px[i];
        if (p != kBackground && p != kRoad)
            throw ValidationError("road_iou: predictions must be hard {0,1} labels, got " +
                                  std::to_string(int(p)));
        const uint8_t g = gt.px[i];
        if (g == kIgnore) continue;
        if (g != kBackground && g != kRoad)
            throw ValidationError("road_iou: ground truth value " + std::to_string(int(g)) +
                                  " outside {0,1,255}");
        ++r.n_eval_px;
        const bool pr = p == kRoad, gr = g == kRoad;
        if (pr && gr) ++r.intersection_px;
        if (pr || gr) ++r.union_px;
    }
    return r;
}

namespace {

int reflect_index(int q, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    q %= period;
    if (q < 0) q += period;
    return q < n ? q : period - q;
}

}  // namespace

IoUResult evaluate_with_predictor(const TilePredictor& predictor, const DatasetManifest& manifest,
                                  const std::string& split, int tile_size) {
    if (tile_size < 1) throw ValidationError("evaluate: tile_size must be >= 1");
    const auto tiles = load_split_tiles(manifest, split, /*need_mask=*/true);
    IoUAccumulator acc;
    for (const auto& sample : tiles) {
        const int h = sample.image.h, w = sample.image.w;
        const int nty = (h + tile_size - 1) / tile_size;
        const int ntx = (w + tile_size - 1) / tile_size;
        for (int ty = 0; ty < nty; ++ty) {
            for (int tx = 0; tx < ntx; ++tx) {
                ImageU8 timg(tile_size, tile_size, 3);
                MaskU8 tmask(tile_size, tile_size, 1, kIgnore);
                for (int y = 0; y < tile_size; ++y) {
                    const int gy = ty * tile_size + y;
                    const int sy = reflect_index(gy, h);
                    for (int x = 0; x < tile_size; ++x) {
                        const int gx = tx * tile_size + x;
                        const int sx = reflect_index(gx, w);
                        for (int ch = 0; ch < 3; ++ch) timg.at(y, x, ch) = sample.image.at(sy, sx, ch);
                        if (gy < h && gx < w) tmask.at(y, x) = sample.mask.at(gy, gx);
                    }
                }
                MaskU8 pred = predictor(timg);
                if (pred.h != tile_size || pred.w != tile_size)
                    throw ValidationError("predictor returned wrong tile dims");
                acc.add(pred, tmask);
            }
        }
    }
    return acc.result();
}

IoUResult evaluate_checkpoint(const std::string& checkpoint_path, const DatasetManifest& manifest,
                              int tile_size, std::vector<std::string>* warnings) {
    LoadedModel lm = load_model_checkpoint(checkpoint_path);
    ToyNetF net = lm.instantiate();

    if (warnings && std::abs(manifest.resolution_m_per_px - lm.train_resolution_m_per_px) > 1e-9) {
        char buf[192];
        std::snprintf(buf, sizeof(buf),
                      "resolution mismatch: eval set at %.4g m/px, checkpoint trained at %.4g m/px",
                      manifest.resolution_m_per_px, lm.train_resolution_m_per_px);
        warnings->push_back(buf);
    }

    const int64_t div = int64_t(1) << lm.config.depth;
    if (tile_size % div != 0)
        throw ValidationError("eval tile_size " + std::to_string(tile_size) +
                              " must be divisible by 2^depth = " + std::to_string(div));

    const Normalization norm = lm.normalization;
    TilePredictor predictor = [&](const ImageU8& tile) {
        TensorF x({1, 3, tile.h, tile.w});
        for (int ch = 0; ch < 3; ++ch) {
            const double mean = norm.mean[ch], sd = norm.stddev[ch];
            for (int y = 0; y < tile.h; ++y)
                for (int xx = 0; xx < tile.w; ++xx)
                    x.at4(0, ch, y, xx) = static_cast<float>((tile.at(y, xx, ch) - mean) / sd);
        }
        TensorF logits = net.forward(x, /*training=*/false, /*check_numerics=*/true);
        const int c = static_cast<int>(logits.dim(1));
        MaskU8 pred(tile.h, tile.w, 1);
        for (int y = 0; y < tile.h; ++y)
            for (int xx = 0; xx < tile.w; ++xx) {
                float best = logits.at4(0, 0, y, xx);
                int label = 0;
                for (int ci = 1; ci < c; ++ci)
                    if (logits.at4(0, ci, y, xx) > best) {
                        best = logits.at4(0, ci, y, xx);
                        label = ci;
                    }
                pred.at(y, xx) = static_cast<uint8_t>(label);
            }
        return pred;
    };

    const std::string split = manifest.has_split("eval") ? "eval" : "train";
    return evaluate_with_predictor(predictor, manifest, split, tile_size);
}

std::string render_report_csv(const TransferReport& report) {
    std::string out;
    out += "# transfer report\n";
    out += "# config_hash=" + report.config_hash + "\n";
    for (const auto& [name, id] : report.checkpoint_ids)
        out += "# checkpoint " + name + "=" + id + "\n";
    for (const auto& w : report.warnings) out += "# warning " + w + "\n";
    for (const auto& r : report.rows)
        if (r.failed)
            out += "# error " + r.target_train + "/" + r.source + "/" + r.eval_set + ": " + r.error + "\n";
    out += "# metric=road IoU (micro accumulation), percent\n";
    out += "target_train,source,eval_set,road_iou_pct,negative_transfer_flag\n";
    char buf[512];
    for (const auto& r : report.rows) {
        if (r.failed) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%s,,error\n", r.target_train.c_str(),
                          r.source.c_str(), r.eval_set.c_str());
        } else {
            std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.1f,%d\n", r.target_train.c_str(),
                          r.source.c_str(), r.eval_set.c_str(), r.road_iou_pct,
                          r.negative_transfer ? 1 : 0);
        }
        out += buf;
    }
    return out;
}

std::string render_report_markdown(const TransferReport& report) {
    std::string out = "# Transfer report\n\n";
    out += "Road IoU (micro), percent. config_hash `" + report.config_hash + "`\n\n";
    out += "| target train | source | eval set | road IoU % | negative transfer |\n";
    out += "|---|---|---|---|---|\n";
    char buf[512];
    for (const auto& r : report.rows) {
        if (r.failed) {
            std::snprintf(buf, sizeof(buf), "| %s | %s | %s | error | - |\n", r.target_train.c_str(),
                          r.source.c_str(), r.eval_set.c_str());
        } else {
            std::snprintf(buf, sizeof(buf), "| %s | %s | %s | %.1f | %s |\n", r.target_train.c_str(),
                          r.source.c_str(), r.eval_set.c_str(), r.road_iou_pct,
                          r.negative_transfer ? "yes" : "no");
        }
        out += buf;
    }
    if (!report.checkpoint_ids.empty()) {
        out += "\nCheckpoints:\n";
        for (const auto& [name, id] : report.checkpoint_ids)
            out += "- " + name + ": `" + id + "`\n";
    }
    bool any_err = false;
    for (const auto& r : report.rows) any_err = any_err || r.failed;
    if (any_err) {
        out += "\nFailures:\n";
        for (const auto& r : report.rows)
            if (r.failed)
                out += "- " + r.target_train + "/" + r.source + "/" + r.eval_set + ": " + r.error + "\n";
    }
    return out;
}

}  // namespace roadseg
