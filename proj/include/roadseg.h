/* SPDX-License-Identifier: Apache-2.0
 *
 * roadseg C API: road segmentation with semi-supervised domain adaptation.
 *
 * All functions return RS_OK on success; on failure they return a status
 * code and rs_last_error() carries a human-readable message (thread-local).
 * Objects returned through out-pointers are owned by the caller and released
 * with the matching *_close function.
 */
#ifndef ROADSEG_H
#define ROADSEG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef RS_API
#define RS_API __attribute__((visibility("default")))
#endif

typedef enum rs_status {
    RS_OK = 0,
    RS_ERR_INVALID_ARGUMENT = 1,
    RS_ERR_IO = 2,
    RS_ERR_PARSE = 3,
    RS_ERR_VALIDATION = 4,
    RS_ERR_CONFIG = 5,
    RS_ERR_UNSUPPORTED = 6,
    RS_ERR_NUMERIC = 7,
    RS_ERR_VERSION = 8,
    RS_ERR_INTERNAL = 9
} rs_status;

RS_API const char* rs_version(void);

/* Message for the last failing call on this thread; empty string if none. */
RS_API const char* rs_last_error(void);

/* ---- dataset manifests ---- */

typedef struct rs_manifest rs_manifest;

RS_API rs_status rs_manifest_open(const char* path, rs_manifest** out);
RS_API void rs_manifest_close(rs_manifest* m);
RS_API rs_status rs_manifest_name(const rs_manifest* m, char* buf, size_t bufsize);
RS_API rs_status rs_manifest_role(const rs_manifest* m, char* buf, size_t bufsize);
RS_API rs_status rs_manifest_resolution(const rs_manifest* m, double* out);
RS_API rs_status rs_manifest_split_size(const rs_manifest* m, const char* split, size_t* out);

/* ---- models ---- */

typedef struct rs_model rs_model;

RS_API rs_status rs_model_open(const char* checkpoint_path, rs_model** out);
RS_API void rs_model_close(rs_model* m);
RS_API rs_status rs_model_checkpoint_id(const rs_model* m, char* buf, size_t bufsize);

/* rgb: interleaved 8-bit, height*width*3 bytes, dimensions divisible by the
 * model's downsampling grid. mask_out receives height*width hard labels
 * (0 background, 1 road). */
RS_API rs_status rs_model_predict(rs_model* m, const uint8_t* rgb, int32_t height, int32_t width,
                                  uint8_t* mask_out);

/* ---- metrics ---- */

typedef struct rs_iou_result {
    uint64_t intersection_px;
    uint64_t union_px;
    uint64_t n_eval_px;
    double iou;
} rs_iou_result;

/* Road-class IoU over non-ignore pixels. pred holds {0,1}; gt may also hold
 * 255 for ignored pixels. */
RS_API rs_status rs_road_iou(const uint8_t* pred, const uint8_t* gt, int32_t height, int32_t width,
                             rs_iou_result* out);

/* ---- pipeline commands (the CLI maps 1:1 onto these) ---- */

typedef struct rs_synth_opts {
    const char* style; /* "A" or "B" */
    int32_t n_images;
    int32_t size;
    uint64_t seed;
    const char* out_dir;
} rs_synth_opts;

RS_API rs_status rs_synth(const rs_synth_opts* opts);

typedef struct rs_prep_opts {
    const char* manifest_path;
    int32_t tile_size;
    int32_t stride;           /* 0: non-overlapping grid */
    double target_resolution; /* 0: keep native resolution */
    const char* out_dir;
    int32_t force;
} rs_prep_opts;

RS_API rs_status rs_prep(const rs_prep_opts* opts);

typedef struct rs_train_opts {
    const char* config_path;
    const char* out_dir; /* NULL: config output_dir */
    int64_t seed;        /* < 0: keep config seeds */
    int32_t resume;
} rs_train_opts;

RS_API rs_status rs_train(const rs_train_opts* opts);
RS_API rs_status rs_train_ssda(const rs_train_opts* opts);

typedef struct rs_pseudolabel_opts {
    const char* config_path;
    const char* teacher_checkpoint; /* NULL: config teacher_checkpoint */
    const char* out_dir;            /* NULL: config pseudo_store */
    double threshold;               /* < 0: config pseudo_threshold */
    int32_t force;
} rs_pseudolabel_opts;

RS_API rs_status rs_pseudolabel(const rs_pseudolabel_opts* opts);

typedef struct rs_eval_opts {
    const char* checkpoint_path;
    const char* manifest_path;
    int32_t tile_size;   /* 0: image size rounded up to the model grid */
    const char* out_dir; /* NULL: no eval.csv */
} rs_eval_opts;

RS_API rs_status rs_evaluate(const rs_eval_opts* opts, rs_iou_result* out);

RS_API rs_status rs_report(const char* grid_config_path, const char* out_dir, int32_t force);

#ifdef __cplusplus
}
#endif

#endif /* ROADSEG_H */
