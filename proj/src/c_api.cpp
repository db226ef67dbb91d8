// SPDX-License-Identifier: Apache-2.0

#include "roadseg.h"

#include <cstring>
#include <memory>
#include <string>

#include "roadseg/pipeline.hpp"
#include "roadseg/pseudolabel.hpp"

using namespace roadseg;

namespace {

thread_local std::string g_last_error;

rs_status set_error(rs_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

// Maps the core exception hierarchy onto stable status codes.
template <typename Fn>
rs_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return RS_OK;
    } catch (const ValidationError& e) {
        return set_error(RS_ERR_VALIDATION, e.what());
    } catch (const ParseError& e) {
        return set_error(RS_ERR_PARSE, e.what());
    } catch (const IoError& e) {
        return set_error(RS_ERR_IO, e.what());
    } catch (const ConfigError& e) {
        return set_error(RS_ERR_CONFIG, e.what());
    } catch (const UnsupportedError& e) {
        return set_error(RS_ERR_UNSUPPORTED, e.what());
    } catch (const NumericError& e) {
        return set_error(RS_ERR_NUMERIC, e.what());
    } catch (const VersionError& e) {
        return set_error(RS_ERR_VERSION, e.what());
    } catch (const std::exception& e) {
        return set_error(RS_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(RS_ERR_INTERNAL, "unknown error");
    }
}

rs_status copy_string(const std::string& s, char* buf, size_t bufsize) {
    if (!buf || bufsize == 0) return set_error(RS_ERR_INVALID_ARGUMENT, "null output buffer");
    if (s.size() + 1 > bufsize)
        return set_error(RS_ERR_INVALID_ARGUMENT,
                         "buffer too small (" + std::to_string(bufsize) + " < " +
                             std::to_string(s.size() + 1) + ")");
    std::memcpy(buf, s.c_str(), s.size() + 1);
    g_last_error.clear();
    return RS_OK;
}

}  // namespace

struct rs_manifest {
    DatasetManifest rep;
};

struct rs_model {
    LoadedModel loaded;
    std::unique_ptr<ToyNetF> net;
};

extern "C" {

const char* rs_version(void) { return kVersion; }

const char* rs_last_error(void) { return g_last_error.c_str(); }

rs_status rs_manifest_open(const char* path, rs_manifest** out) {
    if (!path || !out) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new rs_manifest{parse_manifest(path)}; });
}

void rs_manifest_close(rs_manifest* m) { delete m; }

rs_status rs_manifest_name(const rs_manifest* m, char* buf, size_t bufsize) {
    if (!m) return set_error(RS_ERR_INVALID_ARGUMENT, "null manifest");
    return copy_string(m->rep.name, buf, bufsize);
}

rs_status rs_manifest_role(const rs_manifest* m, char* buf, size_t bufsize) {
    if (!m) return set_error(RS_ERR_INVALID_ARGUMENT, "null manifest");
    return copy_string(role_name(m->rep.role), buf, bufsize);
}

rs_status rs_manifest_resolution(const rs_manifest* m, double* out) {
    if (!m || !out) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    *out = m->rep.resolution_m_per_px;
    g_last_error.clear();
    return RS_OK;
}

rs_status rs_manifest_split_size(const rs_manifest* m, const char* split, size_t* out) {
    if (!m || !split || !out) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { *out = m->rep.split(split).size(); });
}

rs_status rs_model_open(const char* checkpoint_path, rs_model** out) {
    if (!checkpoint_path || !out) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto m = std::make_unique<rs_model>();
        m->loaded = load_model_checkpoint(checkpoint_path);
        m->net = std::make_unique<ToyNetF>(m->loaded.instantiate());
        *out = m.release();
    });
}

void rs_model_close(rs_model* m) { delete m; }

rs_status rs_model_checkpoint_id(const rs_model* m, char* buf, size_t bufsize) {
    if (!m) return set_error(RS_ERR_INVALID_ARGUMENT, "null model");
    return copy_string(m->loaded.checkpoint_id, buf, bufsize);
}

rs_status rs_model_predict(rs_model* m, const uint8_t* rgb, int32_t height, int32_t width,
                           uint8_t* mask_out) {
    if (!m || !rgb || !mask_out) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    if (height < 1 || width < 1) return set_error(RS_ERR_INVALID_ARGUMENT, "bad dimensions");
    return guarded([&] {
        const Normalization& norm = m->loaded.normalization;
        TensorF x({1, 3, height, width});
        for (int ch = 0; ch < 3; ++ch) {
            const double mean = norm.mean[ch], sd = norm.stddev[ch];
            for (int y = 0; y < height; ++y)
                for (int xx = 0; xx < width; ++xx)
                    x.at4(0, ch, y, xx) = static_cast<float>(
                        (rgb[(static_cast<size_t>(y) * width + xx) * 3 + ch] - mean) / sd);
        }
        TensorF logits = m->net->forward(x, /*training=*/false, /*check_numerics=*/true);
        const int c = static_cast<int>(logits.dim(1));
        for (int y = 0; y < height; ++y)
            for (int xx = 0; xx < width; ++xx) {
                float best = logits.at4(0, 0, y, xx);
                int label = 0;
                for (int ci = 1; ci < c; ++ci)
                    if (logits.at4(0, ci, y, xx) > best) {
                        best = logits.at4(0, ci, y, xx);
                        label = ci;
                    }
                mask_out[static_cast<size_t>(y) * width + xx] = static_cast<uint8_t>(label);
            }
    });
}

rs_status rs_road_iou(const uint8_t* pred, const uint8_t* gt, int32_t height, int32_t width,
                      rs_iou_result* out) {
    if (!pred || !gt || !out) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    if (height < 1 || width < 1) return set_error(RS_ERR_INVALID_ARGUMENT, "bad dimensions");
    return guarded([&] {
        MaskU8 p(height, width, 1), g(height, width, 1);
        std::memcpy(p.px.data(), pred, p.px.size());
        std::memcpy(g.px.data(), gt, g.px.size());
        const IoUResult r = road_iou(p, g);
        out->intersection_px = r.intersection_px;
        out->union_px = r.union_px;
        out->n_eval_px = r.n_eval_px;
        out->iou = r.iou();
    });
}

rs_status rs_synth(const rs_synth_opts* opts) {
    if (!opts || !opts->style || !opts->out_dir)
        return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        SynthOptions o;
        o.style = parse_style(opts->style);
        o.n_images = opts->n_images;
        o.size = opts->size;
        o.seed = opts->seed;
        o.out_dir = opts->out_dir;
        run_synth(o);
    });
}

rs_status rs_prep(const rs_prep_opts* opts) {
    if (!opts || !opts->manifest_path || !opts->out_dir)
        return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        PrepOptions o;
        o.manifest_path = opts->manifest_path;
        o.tile_size = opts->tile_size;
        o.stride = opts->stride;
        o.target_resolution = opts->target_resolution;
        o.out_dir = opts->out_dir;
        o.force = opts->force != 0;
        run_prep(o);
    });
}

static rs_status train_impl(const rs_train_opts* opts, bool ssda) {
    if (!opts || !opts->config_path) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        TrainOptions o;
        o.config_path = opts->config_path;
        o.out_dir = opts->out_dir ? opts->out_dir : "";
        o.seed = opts->seed;
        o.resume = opts->resume != 0;
        run_train_cmd(o, ssda);
    });
}

rs_status rs_train(const rs_train_opts* opts) { return train_impl(opts, false); }

rs_status rs_train_ssda(const rs_train_opts* opts) { return train_impl(opts, true); }

rs_status rs_pseudolabel(const rs_pseudolabel_opts* opts) {
    if (!opts || !opts->config_path) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        PseudolabelOptions o;
        o.config_path = opts->config_path;
        o.teacher_checkpoint = opts->teacher_checkpoint ? opts->teacher_checkpoint : "";
        o.out_dir = opts->out_dir ? opts->out_dir : "";
        o.threshold = opts->threshold;
        o.force = opts->force != 0;
        run_pseudolabel_cmd(o);
    });
}

rs_status rs_evaluate(const rs_eval_opts* opts, rs_iou_result* out) {
    if (!opts || !opts->checkpoint_path || !opts->manifest_path || !out)
        return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        EvalOptions o;
        o.checkpoint_path = opts->checkpoint_path;
        o.manifest_path = opts->manifest_path;
        o.tile_size = opts->tile_size;
        o.out_dir = opts->out_dir ? opts->out_dir : "";
        const IoUResult r = run_eval_cmd(o);
        out->intersection_px = r.intersection_px;
        out->union_px = r.union_px;
        out->n_eval_px = r.n_eval_px;
        out->iou = r.iou();
    });
}

rs_status rs_report(const char* grid_config_path, const char* out_dir, int32_t force) {
    if (!grid_config_path) return set_error(RS_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        ReportOptions o;
        o.grid_config_path = grid_config_path;
        o.out_dir = out_dir ? out_dir : "";
        o.force = force != 0;
        run_report_cmd(o);
    });
}

}  // extern "C"
