// SPDX-License-Identifier: Apache-2.0

#include "roadseg/report.hpp"

#include <filesystem>
#include <fstream>

#include "roadseg/pseudolabel.hpp"
#include "roadseg/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace roadseg {

nlohmann::json GridRunConfig::to_json() const {
    json j;
    j["schema_version"] = 1;
    j["model"] = model;
    j["train"] = train;
    j["augment"] = augment;
    j["eval_tile"] = eval_tile;
    j["eval_sets"] = eval_sets;
    json exps = json::array();
    for (const auto& e : experiments) {
        json je;
        je["name"] = e.name;
        je["target"] = e.target_manifest;
        if (e.source_manifest) je["source"] = *e.source_manifest;
        else je["source"] = nullptr;
        exps.push_back(std::move(je));
    }
    j["experiments"] = std::move(exps);
    j["output_dir"] = output_dir;
    return j;
}

GridRunConfig load_grid_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed grid config JSON in " + path + ": " + e.what());
    }
    GridRunConfig cfg;
    const std::string dir = fs::absolute(fs::path(path)).parent_path().string();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (fs::path(dir) / p).lexically_normal().string();
    };
    try {
        if (j.contains("model")) cfg.model = j.at("model").get<ModelConfig>();
        if (j.contains("train")) cfg.train = j.at("train").get<TrainConfig>();
        if (j.contains("augment")) cfg.augment = j.at("augment").get<AugmentConfig>();
        cfg.eval_tile = j.value("eval_tile", 0);
        for (const auto& [name, p] : j.at("eval_sets").items())
            cfg.eval_sets[name] = resolve(p.get<std::string>());
        for (const auto& je : j.at("experiments")) {
            TransferExperiment e;
            e.name = je.at("name").get<std::string>();
            e.target_manifest = resolve(je.at("target").get<std::string>());
            if (je.contains("source") && !je.at("source").is_null())
                e.source_manifest = resolve(je.at("source").get<std::string>());
            cfg.experiments.push_back(std::move(e));
        }
        cfg.output_dir = j.value("output_dir", std::string("grid_out"));
    } catch (const json::exception& e) {
        throw ParseError("grid config " + path + " missing or mistyped key: " + e.what());
    }
    if (cfg.experiments.empty()) throw ValidationError("grid config has no experiments");
    if (cfg.eval_sets.empty()) throw ValidationError("grid config has no eval_sets");
    return cfg;
}

namespace {

// Cell checkpoints are cached in the grid output directory; an existing
// model.ckpt short-circuits training so report regeneration is cheap and
// deterministic.
std::string ensure_supervised(const GridRunConfig& cfg, const DatasetManifest& target,
                              const std::string& cell_dir) {
    const std::string ckpt = (fs::path(cell_dir) / "model.ckpt").string();
    if (fs::exists(ckpt)) return ckpt;
    return train_supervised(cfg.train, cfg.model, cfg.augment, target, cell_dir).model_checkpoint;
}

std::string ensure_pseudo_store(const GridRunConfig& cfg, const std::string& teacher_ckpt,
                                const DatasetManifest& unlabeled, const std::string& dir) {
    if (fs::exists(fs::path(dir) / "index.json")) return dir;
    LoadedModel lm = load_model_checkpoint(teacher_ckpt);
    ToyNetF teacher = lm.instantiate();
    auto tiles = load_split_tiles(unlabeled, "train", /*need_mask=*/false);
    auto maps = generate_pseudo_labels(teacher, lm.normalization, tiles, cfg.train.pseudo_threshold,
                                       lm.checkpoint_id);
    std::vector<std::string> ids;
    ids.reserve(tiles.size());
    for (const auto& t : tiles) ids.push_back(t.origin.image_id);
    write_pseudo_store(dir, ids, maps);
    return dir;
}

}  // namespace

TransferReport run_transfer_grid(const GridRunConfig& cfg) {
    TransferReport report;
    report.config_hash = to_hex(config_hash(cfg.to_json()));
    fs::create_directories(cfg.output_dir);

    // baseline checkpoints by target manifest path, for teachers and
    // negative-transfer comparison
    std::map<std::string, std::string> baseline_ckpt;

    struct Cell {
        const TransferExperiment* exp;
        std::string ckpt;
        std::string target_name;
        std::string source_name;
        bool failed = false;
        std::string error;
    };
    std::vector<Cell> cells;

    for (const auto& exp : cfg.experiments) {
        Cell cell;
        cell.exp = &exp;
        const std::string cell_dir = (fs::path(cfg.output_dir) / "cells" / exp.name).string();
        try {
            DatasetManifest target = parse_manifest(exp.target_manifest);
            cell.target_name = target.name;
            if (!exp.source_manifest) {
                cell.source_name = "-";
                cell.ckpt = ensure_supervised(cfg, target, cell_dir);
                baseline_ckpt[exp.target_manifest] = cell.ckpt;
            } else {
                DatasetManifest source = parse_manifest(*exp.source_manifest);
                cell.source_name = source.name;
                const std::string ckpt = (fs::path(cell_dir) / "model.ckpt").string();
                if (!fs::exists(ckpt)) {
                    // teacher: the baseline cell for this target, trained on
                    // demand if the grid does not contain one
                    std::string teacher = baseline_ckpt.count(exp.target_manifest)
                                              ? baseline_ckpt[exp.target_manifest]
                                              : ensure_supervised(cfg, target,
                                                                  (fs::path(cell_dir) / "teacher").string());
                    std::string pseudo_dir;
                    if (cfg.train.beta > 0.0)
                        pseudo_dir = ensure_pseudo_store(cfg, teacher, source,
                                                         (fs::path(cell_dir) / "pseudo").string());
                    cell.ckpt = train_ssda(cfg.train, cfg.model, cfg.augment, target, source,
                                           pseudo_dir, cell_dir).model_checkpoint;
                } else {
                    cell.ckpt = ckpt;
                }
            }
            report.checkpoint_ids.emplace_back(exp.name, load_model_checkpoint(cell.ckpt).checkpoint_id);
        } catch (const Error& e) {
            cell.failed = true;
            cell.error = e.what();
            if (cell.target_name.empty()) cell.target_name = exp.name;
            if (cell.source_name.empty()) cell.source_name = exp.source_manifest ? "?" : "-";
        }
        cells.push_back(std::move(cell));
    }

    // evaluate every cell on every eval set
    for (const auto& cell : cells) {
        for (const auto& [eval_name, eval_path] : cfg.eval_sets) {
            TransferRow row;
            row.target_train = cell.target_name;
            row.source = cell.source_name;
            row.eval_set = eval_name;
            if (cell.failed) {
                row.failed = true;
                row.error = cell.error;
                report.rows.push_back(std::move(row));
                continue;
            }
            try {
                DatasetManifest em = parse_manifest(eval_path);
                int tile = cfg.eval_tile;
                if (tile <= 0) {
                    // use the eval image size, rounded up to the model grid
                    auto probe = load_split_tiles(em, em.has_split("eval") ? "eval" : "train", true);
                    const int64_t div = int64_t(1) << cfg.model.depth;
                    int64_t t = probe.empty() ? div : std::min(probe[0].image.h, probe[0].image.w);
                    tile = static_cast<int>((t + div - 1) / div * div);
                }
                std::vector<std::string> warn;
                IoUResult r = evaluate_checkpoint(cell.ckpt, em, tile, &warn);
                for (auto& w : warn)
                    report.warnings.push_back(cell.exp->name + "/" + eval_name + ": " + w);
                row.road_iou_pct = 100.0 * r.iou();
            } catch (const Error& e) {
                row.failed = true;
                row.error = e.what();
            }
            report.rows.push_back(std::move(row));
        }
    }

    // negative-transfer flags: with-source rows vs the no-source baseline on
    // the same (target, eval set)
    for (auto& row : report.rows) {
        if (row.failed || row.source == "-") continue;
        for (const auto& base : report.rows) {
            if (base.failed || base.source != "-") continue;
            if (base.target_train == row.target_train && base.eval_set == row.eval_set) {
                row.negative_transfer = row.road_iou_pct < base.road_iou_pct;
                break;
            }
        }
    }
    return report;
}

void write_transfer_report(const TransferReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "report.csv", std::ios::binary);
        if (!out) throw IoError("cannot write report.csv in " + out_dir);
        out << render_report_csv(report);
    }
    {
        std::ofstream out(fs::path(out_dir) / "report.md", std::ios::binary);
        if (!out) throw IoError("cannot write report.md in " + out_dir);
        out << render_report_markdown(report);
    }
}

}  // namespace roadseg
