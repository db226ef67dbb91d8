// SPDX-License-Identifier: Apache-2.0
//
// Operator CLI. Thin argument layer over the roadseg C API: synth, prep,
// train, pseudolabel, train-ssda, eval, report.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "roadseg.h"

namespace {

// validation / usage problems exit 2, everything else 1
int exit_code_for(rs_status s) {
    switch (s) {
        case RS_OK:
            return 0;
        case RS_ERR_INVALID_ARGUMENT:
        case RS_ERR_PARSE:
        case RS_ERR_VALIDATION:
        case RS_ERR_CONFIG:
            return 2;
        default:
            return 1;
    }
}

int finish(rs_status s) {
    if (s != RS_OK) std::fprintf(stderr, "error: %s\n", rs_last_error());
    return exit_code_for(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roadseg: road segmentation from overhead imagery with semi-supervised "
                 "domain adaptation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rs_version()));

    // synth
    std::string synth_style = "A", synth_out;
    int synth_n = 0, synth_size = 96;
    uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic two-domain benchmark dataset");
    synth->add_option("--style", synth_style, "domain style: A or B")->required();
    synth->add_option("--n", synth_n, "number of images")->required();
    synth->add_option("--size", synth_size, "tile size in pixels");
    synth->add_option("--seed", synth_seed, "rng seed");
    synth->add_option("--out", synth_out, "output directory")->required();

    // prep
    std::string prep_manifest, prep_out;
    int prep_tile = 512, prep_stride = 0;
    double prep_res = 0.0;
    bool prep_force = false;
    auto* prep = app.add_subcommand("prep", "tile a raw dataset into the canonical store");
    prep->add_option("--manifest", prep_manifest, "input dataset manifest")->required();
    prep->add_option("--tile", prep_tile, "tile size in pixels");
    prep->add_option("--stride", prep_stride, "grid stride (default: tile size)");
    prep->add_option("--target-res", prep_res, "harmonize to this resolution (m/px)");
    prep->add_option("--out", prep_out, "output directory")->required();
    prep->add_flag("--force", prep_force, "overwrite an existing output");

    // train / train-ssda
    std::string train_cfg, train_out;
    int64_t train_seed = -1;
    bool train_resume = false;
    auto* train = app.add_subcommand("train", "supervised training on the labeled target set");
    train->add_option("--config", train_cfg, "experiment config JSON")->required();
    train->add_option("--out", train_out, "output directory (overrides config)");
    train->add_option("--seed", train_seed, "seed override");
    train->add_flag("--resume", train_resume, "resume from the state checkpoint");

    std::string ssda_cfg, ssda_out;
    int64_t ssda_seed = -1;
    bool ssda_resume = false;
    auto* ssda = app.add_subcommand("train-ssda",
                                    "semi-supervised adaptation training (labeled target + "
                                    "unlabeled source)");
    ssda->add_option("--config", ssda_cfg, "experiment config JSON")->required();
    ssda->add_option("--out", ssda_out, "output directory (overrides config)");
    ssda->add_option("--seed", ssda_seed, "seed override");
    ssda->add_flag("--resume", ssda_resume, "resume from the state checkpoint");

    // pseudolabel
    std::string pl_cfg, pl_teacher, pl_out;
    double pl_threshold = -1.0;
    bool pl_force = false;
    auto* pl = app.add_subcommand("pseudolabel", "generate the pseudo-label store from a teacher");
    pl->add_option("--config", pl_cfg, "experiment config JSON")->required();
    pl->add_option("--teacher", pl_teacher, "teacher checkpoint (overrides config)");
    pl->add_option("--out", pl_out, "store directory (overrides config pseudo_store)");
    pl->add_option("--threshold", pl_threshold, "confidence threshold (overrides config)");
    pl->add_flag("--force", pl_force, "overwrite an existing store");

    // eval
    std::string eval_ckpt, eval_manifest, eval_out;
    int eval_tile = 0;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on an eval manifest (road IoU)");
    ev->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    ev->add_option("--manifest", eval_manifest, "eval dataset manifest")->required();
    ev->add_option("--tile", eval_tile, "eval tile size (0: image size)");
    ev->add_option("--out", eval_out, "directory for eval.csv");

    // report
    std::string rep_cfg, rep_out;
    bool rep_force = false;
    auto* rep = app.add_subcommand("report", "run a transfer grid and emit the report");
    rep->add_option("--config", rep_cfg, "grid config JSON")->required();
    rep->add_option("--out", rep_out, "output directory (overrides config)");
    rep->add_flag("--force", rep_force, "overwrite an existing report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (synth->parsed()) {
        rs_synth_opts o{synth_style.c_str(), synth_n, synth_size, synth_seed, synth_out.c_str()};
        return finish(rs_synth(&o));
    }
    if (prep->parsed()) {
        rs_prep_opts o{prep_manifest.c_str(), prep_tile, prep_stride, prep_res, prep_out.c_str(),
                       prep_force ? 1 : 0};
        return finish(rs_prep(&o));
    }
    if (train->parsed()) {
        rs_train_opts o{train_cfg.c_str(), train_out.empty() ? nullptr : train_out.c_str(),
                        train_seed, train_resume ? 1 : 0};
        return finish(rs_train(&o));
    }
    if (ssda->parsed()) {
        rs_train_opts o{ssda_cfg.c_str(), ssda_out.empty() ? nullptr : ssda_out.c_str(), ssda_seed,
                        ssda_resume ? 1 : 0};
        return finish(rs_train_ssda(&o));
    }
    if (pl->parsed()) {
        rs_pseudolabel_opts o{pl_cfg.c_str(), pl_teacher.empty() ? nullptr : pl_teacher.c_str(),
                              pl_out.empty() ? nullptr : pl_out.c_str(), pl_threshold,
                              pl_force ? 1 : 0};
        return finish(rs_pseudolabel(&o));
    }
    if (ev->parsed()) {
        rs_eval_opts o{eval_ckpt.c_str(), eval_manifest.c_str(), eval_tile,
                       eval_out.empty() ? nullptr : eval_out.c_str()};
        rs_iou_result r{};
        const rs_status s = rs_evaluate(&o, &r);
        if (s == RS_OK)
            std::printf("road_iou_pct=%.2f intersection=%llu union=%llu eval_px=%llu\n",
                        100.0 * r.iou, static_cast<unsigned long long>(r.intersection_px),
                        static_cast<unsigned long long>(r.union_px),
                        static_cast<unsigned long long>(r.n_eval_px));
        return finish(s);
    }
    if (rep->parsed()) {
        return finish(rs_report(rep_cfg.c_str(), rep_out.empty() ? nullptr : rep_out.c_str(),
                                rep_force ? 1 : 0));
    }
    return 2;
}
