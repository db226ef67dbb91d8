// SPDX-License-Identifier: Apache-2.0

#include "roadseg/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "roadseg/checkpoint.hpp"
#include "roadseg/config.hpp"
#include "roadseg/pseudolabel.hpp"

namespace fs = std::filesystem;

namespace roadseg {

void TrainConfig::resolve_and_validate(int n_classes) {
    if (total_iters < 1) throw ValidationError("train: total_iters must be >= 1");
    if (batch_labeled < 1 || batch_unlabeled < 1)
        throw ValidationError("train: batch sizes must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("train: learning_rate must be > 0");
    if (weight_decay < 0.0) throw ValidationError("train: weight_decay must be >= 0");
    if (optimizer != "adamw")
        throw UnsupportedError("train: optimizer '" + optimizer + "' not available (use adamw)");
    if (lr_schedule != "constant" && lr_schedule != "cosine")
        throw ValidationError("train: lr_schedule must be constant or cosine");
    if (beta < 0.0) throw ValidationError("train: beta must be >= 0");
    if (pseudo_threshold < 0.0 || pseudo_threshold > 1.0)
        throw ValidationError("train: pseudo_threshold must be in [0,1]");
    if (checkpoint_every < 0) throw ValidationError("train: checkpoint_every must be >= 0");
    if (alpha_schedule.ramp_iters == 0)
        alpha_schedule.ramp_iters = std::max<int64_t>(1, total_iters / 10);
    alpha_schedule.validate();
    mcc.validate(n_classes);
}

void AdamW::init(const std::vector<Param<float>>& params) {
    step_ = 0;
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
        m_.emplace_back(p.name, std::vector<float>(p.value.size(), 0.f));
        v_.emplace_back(p.name, std::vector<float>(p.value.size(), 0.f));
    }
}

void AdamW::restore(int64_t step, std::vector<std::pair<std::string, std::vector<float>>> m,
                    std::vector<std::pair<std::string, std::vector<float>>> v) {
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
}

void AdamW::step(std::vector<Param<float>>& params, double lr, double weight_decay) {
    if (m_.size() != params.size()) throw ValidationError("optimizer state does not match model");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        auto& m = m_[i].second;
        auto& v = v_[i].second;
        const bool decay =
            p.name.size() > 2 && p.name.compare(p.name.size() - 2, 2, ".w") == 0;
        for (size_t j = 0; j < p.value.size(); ++j) {
            const double g = static_cast<double>(p.grad[j]);
            m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g);
            v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * g * g);
            const double mhat = static_cast<double>(m[j]) / bc1;
            const double vhat = static_cast<double>(v[j]) / bc2;
            double upd = mhat / (std::sqrt(vhat) + eps_);
            if (decay) upd += weight_decay * static_cast<double>(p.value[j]);
            p.value[j] = static_cast<float>(static_cast<double>(p.value[j]) - lr * upd);
        }
    }
}

std::string format_log_csv(const std::vector<TrainLogRow>& rows) {
    std::string out = "iter,ce_labeled,ce_pseudo,mcc,alpha,total,lr\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      static_cast<long long>(r.iter), r.loss.ce_labeled, r.loss.ce_pseudo,
                      r.loss.mcc, r.loss.alpha, r.loss.total, r.lr);
        out += buf;
    }
    return out;
}

void save_train_state(const TrainState& state, const std::string& path) {
    ArchiveWriter w;
    w.header["kind"] = "train_state";
    w.header["iteration"] = state.iteration;
    w.header["adam_step"] = state.adam_step;
    w.header["seed"] = state.seed;
    w.header["model_config"] = state.model_cfg;
    w.header["train_config"] = state.train_cfg;
    w.header["augment_config"] = state.augment_cfg;
    w.header["normalization"] = {{"mean", state.normalization.mean},
                                 {"std", state.normalization.stddev}};
    w.header["train_resolution_m_per_px"] = state.train_resolution_m_per_px;
    for (const auto& [name, vals] : state.params) w.add_f32("param." + name, vals.data(), vals.size());
    for (const auto& [name, vals] : state.adam_m) w.add_f32("adam_m." + name, vals.data(), vals.size());
    for (const auto& [name, vals] : state.adam_v) w.add_f32("adam_v." + name, vals.data(), vals.size());
    std::vector<double> flat;
    flat.reserve(state.log.size() * 7);
    for (const auto& r : state.log) {
        flat.push_back(static_cast<double>(r.iter));
        flat.push_back(r.loss.ce_labeled);
        flat.push_back(r.loss.ce_pseudo);
        flat.push_back(r.loss.mcc);
        flat.push_back(r.loss.alpha);
        flat.push_back(r.loss.total);
        flat.push_back(r.lr);
    }
    w.add_f64("log", flat.data(), flat.size());
    w.save(path);
}

TrainState load_train_state(const std::string& path) {
    ArchiveReader r(path);
    if (!r.header().contains("kind") || r.header().at("kind") != "train_state")
        throw ParseError("not a training-state checkpoint: " + path);
    TrainState st;
    st.iteration = r.header().at("iteration").get<int64_t>();
    st.adam_step = r.header().at("adam_step").get<int64_t>();
    st.seed = r.header().at("seed").get<uint64_t>();
    st.model_cfg = r.header().at("model_config").get<ModelConfig>();
    st.train_cfg = r.header().at("train_config").get<TrainConfig>();
    st.augment_cfg = r.header().at("augment_config").get<AugmentConfig>();
    for (int c = 0; c < 3; ++c) {
        st.normalization.mean[c] = r.header().at("normalization").at("mean").at(c).get<double>();
        st.normalization.stddev[c] = r.header().at("normalization").at("std").at(c).get<double>();
    }
    st.train_resolution_m_per_px = r.header().at("train_resolution_m_per_px").get<double>();
    for (const auto& e : r.header().at("entries")) {
        const std::string name = e.at("name").get<std::string>();
        if (name.rfind("param.", 0) == 0)
            st.params.emplace_back(name.substr(6), r.f32(name));
        else if (name.rfind("adam_m.", 0) == 0)
            st.adam_m.emplace_back(name.substr(7), r.f32(name));
        else if (name.rfind("adam_v.", 0) == 0)
            st.adam_v.emplace_back(name.substr(7), r.f32(name));
    }
    const auto flat = r.f64("log");
    if (flat.size() % 7 != 0) throw ParseError("corrupt training log in checkpoint: " + path);
    for (size_t i = 0; i < flat.size(); i += 7) {
        TrainLogRow row;
        row.iter = static_cast<int64_t>(flat[i]);
        row.loss.ce_labeled = flat[i + 1];
        row.loss.ce_pseudo = flat[i + 2];
        row.loss.mcc = flat[i + 3];
        row.loss.alpha = flat[i + 4];
        row.loss.total = flat[i + 5];
        row.lr = flat[i + 6];
        st.log.push_back(row);
    }
    return st;
}

namespace {

enum class Mode { Supervised, Ssda };

void fill_batch(const std::vector<TileSample>& tiles, const std::vector<int64_t>& idx,
                const AugmentConfig& aug, uint64_t seed, const char* stream, int64_t iter,
                const Normalization& norm, TensorF& x, Tensor<uint8_t>& y) {
    const int b = static_cast<int>(idx.size());
    const int crop = aug.crop_size;
    x = TensorF({b, 3, crop, crop});
    y = Tensor<uint8_t>({b, crop, crop});
    for (int s = 0; s < b; ++s) {
        Rng rng = derive_rng(seed, stream, static_cast<uint64_t>(iter), static_cast<uint64_t>(s));
        TileSample a = augment(tiles[static_cast<size_t>(idx[static_cast<size_t>(s)])], aug, rng);
        for (int ch = 0; ch < 3; ++ch) {
            const double mean = norm.mean[ch], sd = norm.stddev[ch];
            for (int yy = 0; yy < crop; ++yy)
                for (int xx = 0; xx < crop; ++xx)
                    x.at4(s, ch, yy, xx) = static_cast<float>((a.image.at(yy, xx, ch) - mean) / sd);
        }
        for (int yy = 0; yy < crop; ++yy)
            for (int xx = 0; xx < crop; ++xx)
                y[(static_cast<size_t>(s) * crop + yy) * crop + xx] = a.mask.at(yy, xx);
    }
}

TrainState snapshot_state(int64_t next_iter, const ToyNetF& net, AdamW& adam, uint64_t seed,
                          const ModelConfig& mcfg, const TrainConfig& tcfg,
                          const AugmentConfig& acfg, const Normalization& norm, double resolution,
                          const std::vector<TrainLogRow>& log) {
    TrainState st;
    st.iteration = next_iter;
    st.adam_step = adam.step_count();
    st.seed = seed;
    st.model_cfg = mcfg;
    st.train_cfg = tcfg;
    st.augment_cfg = acfg;
    st.normalization = norm;
    st.train_resolution_m_per_px = resolution;
    for (const auto& p : net.params())
        st.params.emplace_back(p.name, std::vector<float>(p.value.data(), p.value.data() + p.value.size()));
    st.adam_m = adam.m();
    st.adam_v = adam.v();
    st.log = log;
    return st;
}

void write_log_csv(const std::vector<TrainLogRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write training log: " + path);
    out << format_log_csv(rows);
}

TrainResult run_training(Mode mode, TrainConfig cfg, ModelConfig model_cfg,
                         const AugmentConfig& augment_cfg, const DatasetManifest& labeled,
                         const DatasetManifest* unlabeled, const std::string& pseudo_store_dir,
                         const std::string& out_dir, bool resume) {
    model_cfg.validate();
    cfg.resolve_and_validate(model_cfg.n_classes);
    augment_cfg.validate();
    if (labeled.role != Role::LabeledTarget)
        throw ValidationError("training requires a labeled_target manifest, got role '" +
                              role_name(labeled.role) + "'");
    if (!labeled.has_split("train"))
        throw ValidationError("labeled manifest '" + labeled.name + "' has no train split");
    const int64_t div = int64_t(1) << model_cfg.depth;
    if (augment_cfg.crop_size % div != 0)
        throw ValidationError("crop_size " + std::to_string(augment_cfg.crop_size) +
                              " must be divisible by 2^depth = " + std::to_string(div));

    auto labeled_tiles = load_split_tiles(labeled, "train", /*need_mask=*/true);
    Normalization norm =
        labeled.normalization ? *labeled.normalization : compute_normalization(labeled_tiles);

    std::vector<TileSample> unlabeled_tiles;
    bool use_pseudo = false;
    if (mode == Mode::Ssda) {
        if (!unlabeled) throw ValidationError("adaptation training requires an unlabeled manifest");
        unlabeled_tiles = load_split_tiles(*unlabeled, "train", /*need_mask=*/false);
        if (cfg.beta > 0.0) {
            if (pseudo_store_dir.empty() || !fs::exists(fs::path(pseudo_store_dir) / "index.json"))
                throw ConfigError("pseudo-label store required when beta > 0 (generate it with the "
                                  "pseudolabel command, or set beta to 0): " + pseudo_store_dir);
            const PseudoStoreIndex pidx = load_pseudo_store_index(pseudo_store_dir);
            std::set<std::string> ids(pidx.ids.begin(), pidx.ids.end());
            for (auto& t : unlabeled_tiles) {
                if (!ids.count(t.origin.image_id))
                    throw ConfigError("pseudo store has no entry for tile '" + t.origin.image_id + "'");
                MaskU8 pm = load_pseudo_mask(pseudo_store_dir, t.origin.image_id);
                if (pm.h != t.image.h || pm.w != t.image.w)
                    throw ConfigError("pseudo mask dims differ from tile '" + t.origin.image_id + "'");
                t.mask = std::move(pm);
            }
            use_pseudo = true;
        }
    }

    fs::create_directories(out_dir);
    const std::string state_path = (fs::path(out_dir) / "state.ckpt").string();
    const std::string model_path = (fs::path(out_dir) / "model.ckpt").string();
    const std::string csv_path = (fs::path(out_dir) / "train_log.csv").string();

    ToyNetF net(model_cfg);
    AdamW adam;
    adam.init(net.params());
    std::vector<TrainLogRow> log;
    int64_t start_iter = 0;

    if (resume && fs::exists(state_path)) {
        TrainState st = load_train_state(state_path);
        if (nlohmann::json(st.model_cfg) != nlohmann::json(model_cfg) ||
            nlohmann::json(st.train_cfg) != nlohmann::json(cfg) ||
            nlohmann::json(st.augment_cfg) != nlohmann::json(augment_cfg))
            throw ConfigError("cannot resume: " + state_path + " was produced by a different config");
        net.load_param_values(st.params);
        adam.restore(st.adam_step, std::move(st.adam_m), std::move(st.adam_v));
        log = std::move(st.log);
        start_iter = st.iteration;
        norm = st.normalization;
        std::fprintf(stderr, "[train] resuming %s at iteration %lld\n", out_dir.c_str(),
                     static_cast<long long>(start_iter));
    }

    const auto lr_at = [&](int64_t t) {
        if (cfg.lr_schedule == "cosine")
            return cfg.learning_rate * 0.5 *
                   (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(t) /
                                   static_cast<double>(cfg.total_iters)));
        return cfg.learning_rate;
    };

    const int64_t n_labeled = static_cast<int64_t>(labeled_tiles.size());
    const int64_t n_unlabeled = static_cast<int64_t>(unlabeled_tiles.size());
    const int64_t report_every = std::max<int64_t>(1, cfg.total_iters / 20);

    TensorF x, logits, grad;
    Tensor<uint8_t> y;

    for (int64_t t = start_iter; t < cfg.total_iters; ++t) {
        net.zero_grads();

        Rng sampler = derive_rng(cfg.seed, "sampler_labeled", static_cast<uint64_t>(t));
        std::vector<int64_t> idx(static_cast<size_t>(cfg.batch_labeled));
        for (auto& i : idx) i = sampler.uniform_int(n_labeled);
        fill_batch(labeled_tiles, idx, augment_cfg, cfg.seed, "augment_labeled", t, norm, x, y);
        logits = net.forward(x, /*training=*/true);
        const double ce_l = ce_ignore(logits, y, &grad);
        net.backward(grad);

        const double alpha = mode == Mode::Ssda ? alpha_at(cfg.alpha_schedule, t) : 0.0;
        double ce_p = 0.0, mcc_v = 0.0;
        if (mode == Mode::Ssda && (alpha > 0.0 || cfg.beta > 0.0)) {
            Rng usampler = derive_rng(cfg.seed, "sampler_unlabeled", static_cast<uint64_t>(t));
            std::vector<int64_t> uidx(static_cast<size_t>(cfg.batch_unlabeled));
            for (auto& i : uidx) i = usampler.uniform_int(n_unlabeled);
            TensorF xu;
            Tensor<uint8_t> yu;
            fill_batch(unlabeled_tiles, uidx, augment_cfg, cfg.seed, "augment_unlabeled", t, norm,
                       xu, yu);
            TensorF logits_u = net.forward(xu, /*training=*/true);
            TensorF gp, gm;
            if (use_pseudo) ce_p = ce_ignore(logits_u, yu, &gp);
            mcc_v = mcc_loss(logits_u, cfg.mcc, mix_seed(cfg.seed, "mcc_subsample", static_cast<uint64_t>(t)),
                             alpha > 0.0 ? &gm : nullptr);
            TensorF gu(logits_u.shape());
            for (size_t j = 0; j < gu.size(); ++j) {
                double g = 0.0;
                if (use_pseudo) g += cfg.beta * static_cast<double>(gp[j]);
                if (alpha > 0.0) g += alpha * static_cast<double>(gm[j]);
                gu[j] = static_cast<float>(g);
            }
            net.backward(gu);
        }

        for (const auto& p : net.params())
            if (!p.grad.all_finite())
                throw NumericError("non-finite gradient in parameter '" + p.name +
                                   "' at iteration " + std::to_string(t));

        const double lr = lr_at(t);
        adam.step(net.params(), lr, cfg.weight_decay);

        TrainLogRow row;
        row.iter = t;
        row.loss.ce_labeled = ce_l;
        row.loss.ce_pseudo = ce_p;
        row.loss.mcc = mcc_v;
        row.loss.alpha = alpha;
        row.loss.total = ce_l + cfg.beta * ce_p + alpha * mcc_v;
        row.lr = lr;
        log.push_back(row);

        if ((t + 1) % report_every == 0 || t + 1 == cfg.total_iters)
            std::fprintf(stderr, "[train] iter %lld/%lld total %.4f ce %.4f mcc %.4f alpha %.3f\n",
                         static_cast<long long>(t + 1), static_cast<long long>(cfg.total_iters),
                         row.loss.total, ce_l, mcc_v, alpha);

        if (cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0 &&
            t + 1 < cfg.total_iters) {
            save_train_state(snapshot_state(t + 1, net, adam, cfg.seed, model_cfg, cfg, augment_cfg,
                                            norm, labeled.resolution_m_per_px, log),
                             state_path);
            write_log_csv(log, csv_path);
        }
    }

    save_train_state(snapshot_state(cfg.total_iters, net, adam, cfg.seed, model_cfg, cfg,
                                    augment_cfg, norm, labeled.resolution_m_per_px, log),
                     state_path);
    const std::string ckpt_id = save_model_checkpoint(net, norm, labeled.resolution_m_per_px, model_path);
    write_log_csv(log, csv_path);

    TrainResult res;
    res.model_checkpoint = model_path;
    res.state_checkpoint = state_path;
    res.log_csv = csv_path;
    res.checkpoint_id = ckpt_id;
    res.log = std::move(log);
    return res;
}

}  // namespace

TrainResult train_supervised(const TrainConfig& cfg, const ModelConfig& model_cfg,
                             const AugmentConfig& augment_cfg, const DatasetManifest& labeled,
                             const std::string& out_dir, bool resume) {
    return run_training(Mode::Supervised, cfg, model_cfg, augment_cfg, labeled, nullptr, "",
                        out_dir, resume);
}

TrainResult train_ssda(const TrainConfig& cfg, const ModelConfig& model_cfg,
                       const AugmentConfig& augment_cfg, const DatasetManifest& labeled,
                       const DatasetManifest& unlabeled, const std::string& pseudo_store_dir,
                       const std::string& out_dir, bool resume) {
    return run_training(Mode::Ssda, cfg, model_cfg, augment_cfg, labeled, &unlabeled,
                        pseudo_store_dir, out_dir, resume);
}

}  // namespace roadseg
