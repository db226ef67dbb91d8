// SPDX-License-Identifier: Apache-2.0

#include "roadseg/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "roadseg/pseudolabel.hpp"

namespace fs = std::filesystem;

namespace roadseg {

void run_synth(const SynthOptions& opts) {
    if (opts.n_images < 1) throw ValidationError("synth: --n must be >= 1");
    if (opts.out_dir.empty()) throw ValidationError("synth: --out is required");
    write_synth_dataset(opts.out_dir, opts.style, opts.n_images, opts.size, opts.seed);
    std::fprintf(stderr, "[synth] wrote %d style-%s tiles under %s\n", opts.n_images,
                 style_name(opts.style).c_str(), opts.out_dir.c_str());
}

void run_prep(const PrepOptions& opts) {
    if (opts.manifest_path.empty()) throw ValidationError("prep: --manifest is required");
    if (opts.out_dir.empty()) throw ValidationError("prep: --out is required");
    if (opts.tile_size < 1) throw ValidationError("prep: --tile must be >= 1");
    const int stride = opts.stride > 0 ? opts.stride : opts.tile_size;

    const DatasetManifest src = parse_manifest(opts.manifest_path);
    if (!opts.force && fs::exists(fs::path(opts.out_dir) / "manifest.json"))
        throw ConfigError("prep: output already exists, pass --force to overwrite: " + opts.out_dir);

    const bool need_mask = src.role != Role::UnlabeledSource;
    const double out_res = opts.target_resolution > 0.0 ? opts.target_resolution
                                                        : src.resolution_m_per_px;

    std::vector<TileSample> all_tiles;
    std::map<std::string, std::pair<size_t, size_t>> split_ranges;  // split -> [begin, end)
    std::vector<std::string> failures;

    for (const auto& [split_name, samples] : src.splits) {
        const size_t begin = all_tiles.size();
        for (size_t si = 0; si < samples.size(); ++si) {
            try {
                DatasetManifest one = src;
                one.splits.clear();
                one.splits[split_name] = {samples[si]};
                TileSample big = load_split_tiles(one, split_name, need_mask).front();
                if (opts.target_resolution > 0.0)
                    big = harmonize_resolution(big, opts.target_resolution);
                auto tiles = extract_tiles(big.image, big.mask, opts.tile_size, stride, big.origin,
                                           big.resolution_m_per_px);
                for (auto& t : tiles) all_tiles.push_back(std::move(t));
            } catch (const Error& e) {
                failures.push_back(samples[si].image_path + ": " + e.what());
            }
        }
        split_ranges[split_name] = {begin, all_tiles.size()};
    }
    if (all_tiles.empty()) {
        std::string msg = "prep: no tiles produced";
        for (const auto& f : failures) msg += "\n  " + f;
        throw ValidationError(msg);
    }

    // normalization from the train split when present, else everything
    Normalization norm;
    if (split_ranges.count("train") && split_ranges["train"].second > split_ranges["train"].first) {
        std::vector<TileSample> train(all_tiles.begin() + split_ranges["train"].first,
                                      all_tiles.begin() + split_ranges["train"].second);
        norm = compute_normalization(train);
    } else {
        norm = compute_normalization(all_tiles);
    }

    const std::string store = (fs::path(opts.out_dir) / "tiles").string();
    write_tile_store(store, src.name, all_tiles, norm);

    DatasetManifest out;
    out.name = src.name;
    out.resolution_m_per_px = out_res;
    out.role = src.role;
    out.normalization = norm;
    const bool with_masks = src.role != Role::UnlabeledSource;
    for (const auto& [split_name, range] : split_ranges) {
        if (range.first == range.second) continue;
        for (size_t i = range.first; i < range.second; ++i) {
            char id[16];
            std::snprintf(id, sizeof(id), "%06zu", i);
            SamplePath sp;
            sp.image_path = (fs::path(store) / (std::string(id) + "_img.png")).string();
            if (with_masks)
                sp.mask_path = (fs::path(store) / (std::string(id) + "_mask.png")).string();
            out.splits[split_name].push_back(std::move(sp));
        }
    }
    save_manifest(out, (fs::path(opts.out_dir) / "manifest.json").string());
    std::fprintf(stderr, "[prep] wrote %zu tiles under %s\n", all_tiles.size(), opts.out_dir.c_str());

    if (!failures.empty()) {
        std::string msg = "prep completed with per-file failures:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw IoError(msg);
    }
}

namespace {

ExperimentConfig load_and_override(const std::string& config_path, const std::string& out_dir,
                                   int64_t seed) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed >= 0) {
        cfg.train.seed = static_cast<uint64_t>(seed);
        cfg.model.seed = static_cast<uint64_t>(seed);
    }
    if (cfg.output_dir.empty()) throw ConfigError("config has no output_dir and no --out given");
    return cfg;
}

void write_snapshot(const ExperimentConfig& cfg, const std::string& dir) {
    fs::create_directories(dir);
    save_experiment_config(cfg, (fs::path(dir) / "config.resolved.json").string());
}

}  // namespace

TrainResult run_train_cmd(const TrainOptions& opts, bool ssda) {
    ExperimentConfig cfg = load_and_override(opts.config_path, opts.out_dir, opts.seed);
    cfg.train.resolve_and_validate(cfg.model.n_classes);
    write_snapshot(cfg, cfg.output_dir);

    const DatasetManifest labeled = parse_manifest(cfg.dataset_path("labeled_target"));
    if (!ssda)
        return train_supervised(cfg.train, cfg.model, cfg.augment, labeled, cfg.output_dir,
                                opts.resume);
    const DatasetManifest unlabeled = parse_manifest(cfg.dataset_path("unlabeled_source"));
    return train_ssda(cfg.train, cfg.model, cfg.augment, labeled, unlabeled, cfg.pseudo_store,
                      cfg.output_dir, opts.resume);
}

void run_pseudolabel_cmd(const PseudolabelOptions& opts) {
    ExperimentConfig cfg = load_experiment_config(opts.config_path);
    const std::string teacher_path =
        !opts.teacher_checkpoint.empty() ? opts.teacher_checkpoint : cfg.teacher_checkpoint;
    if (teacher_path.empty())
        throw ConfigError("pseudolabel: no teacher checkpoint (config teacher_checkpoint or "
                          "--teacher)");
    const std::string out = !opts.out_dir.empty() ? opts.out_dir : cfg.pseudo_store;
    if (out.empty()) throw ConfigError("pseudolabel: no output (config pseudo_store or --out)");
    const double threshold = opts.threshold >= 0.0 ? opts.threshold : cfg.train.pseudo_threshold;
    if (!opts.force && fs::exists(fs::path(out) / "index.json"))
        throw ConfigError("pseudolabel: store already exists, pass --force to overwrite: " + out);

    const DatasetManifest unlabeled = parse_manifest(cfg.dataset_path("unlabeled_source"));
    LoadedModel lm = load_model_checkpoint(teacher_path);
    ToyNetF teacher = lm.instantiate();
    auto tiles = load_split_tiles(unlabeled, "train", /*need_mask=*/false);
    auto maps = generate_pseudo_labels(teacher, lm.normalization, tiles, threshold, lm.checkpoint_id);
    std::vector<std::string> ids;
    ids.reserve(tiles.size());
    for (const auto& t : tiles) ids.push_back(t.origin.image_id);
    write_pseudo_store(out, ids, maps);

    cfg.pseudo_store = out;
    cfg.teacher_checkpoint = teacher_path;
    cfg.train.pseudo_threshold = threshold;
    write_snapshot(cfg, out);

    const PseudoStats st = pseudo_label_stats(maps);
    std::fprintf(stderr, "[pseudolabel] %zu maps, kept %.3f road %.3f (threshold %.2f) -> %s\n",
                 maps.size(), st.kept_fraction, st.road_fraction, threshold, out.c_str());
}

IoUResult run_eval_cmd(const EvalOptions& opts, std::vector<std::string>* warnings) {
    if (opts.checkpoint_path.empty()) throw ValidationError("eval: --checkpoint is required");
    if (opts.manifest_path.empty()) throw ValidationError("eval: --manifest is required");
    const DatasetManifest manifest = parse_manifest(opts.manifest_path);

    int tile = opts.tile_size;
    const LoadedModel lm = load_model_checkpoint(opts.checkpoint_path);
    const int64_t div = int64_t(1) << lm.config.depth;
    if (tile <= 0) {
        const std::string split = manifest.has_split("eval") ? "eval" : "train";
        auto probe = load_split_tiles(manifest, split, /*need_mask=*/true);
        int64_t t = probe.empty() ? div : std::min(probe[0].image.h, probe[0].image.w);
        tile = static_cast<int>((t + div - 1) / div * div);
    }

    IoUResult r = evaluate_checkpoint(opts.checkpoint_path, manifest, tile, warnings);
    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        std::ofstream out(fs::path(opts.out_dir) / "eval.csv", std::ios::binary);
        if (!out) throw IoError("cannot write eval.csv in " + opts.out_dir);
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "checkpoint_id,eval_set,road_iou_pct,intersection_px,union_px,n_eval_px\n"
                      "%s,%s,%.2f,%llu,%llu,%llu\n",
                      lm.checkpoint_id.c_str(), manifest.name.c_str(), 100.0 * r.iou(),
                      static_cast<unsigned long long>(r.intersection_px),
                      static_cast<unsigned long long>(r.union_px),
                      static_cast<unsigned long long>(r.n_eval_px));
        out << buf;
    }
    return r;
}

TransferReport run_report_cmd(const ReportOptions& opts) {
    GridRunConfig cfg = load_grid_config(opts.grid_config_path);
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    if (cfg.output_dir.empty()) throw ConfigError("report: no output_dir and no --out given");
    if (!opts.force && fs::exists(fs::path(cfg.output_dir) / "report.csv"))
        throw ConfigError("report: report.csv already exists, pass --force to overwrite: " +
                          cfg.output_dir);
    cfg.train.resolve_and_validate(cfg.model.n_classes);

    TransferReport report = run_transfer_grid(cfg);
    write_transfer_report(report, cfg.output_dir);
    {
        fs::create_directories(cfg.output_dir);
        std::ofstream out(fs::path(cfg.output_dir) / "config.resolved.json");
        if (!out) throw IoError("cannot write config snapshot in " + cfg.output_dir);
        out << cfg.to_json().dump(2) << "\n";
    }
    return report;
}

}  // namespace roadseg
