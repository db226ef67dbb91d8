// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "roadseg/augment.hpp"
#include "roadseg/losses.hpp"
#include "roadseg/manifest.hpp"
#include "roadseg/model.hpp"

namespace roadseg {

struct TrainConfig {
    int64_t total_iters = 300000;
    int batch_labeled = 6;
    int batch_unlabeled = 6;
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    std::string optimizer = "adamw";
    std::string lr_schedule = "constant";  // constant | cosine
    AlphaSchedule alpha_schedule{1.0, 0, AlphaSchedule::Shape::Linear};  // ramp 0 = auto: 10% of total
    double beta = 1.0;
    uint64_t seed = 0;
    int64_t checkpoint_every = 0;  // 0: final only
    MccConfig mcc;
    double pseudo_threshold = 0.9;

    // Fills auto fields (alpha ramp) and checks invariants.
    void resolve_and_validate(int n_classes);
};

struct TrainLogRow {
    int64_t iter = 0;
    LossBreakdown loss;
    double lr = 0.0;
};

// Full resumable optimization state.
struct TrainState {
    int64_t iteration = 0;  // next iteration to execute
    int64_t adam_step = 0;
    uint64_t seed = 0;
    ModelConfig model_cfg;
    TrainConfig train_cfg;
    AugmentConfig augment_cfg;
    Normalization normalization;
    double train_resolution_m_per_px = 1.0;
    std::vector<std::pair<std::string, std::vector<float>>> params;
    std::vector<std::pair<std::string, std::vector<float>>> adam_m;
    std::vector<std::pair<std::string, std::vector<float>>> adam_v;
    std::vector<TrainLogRow> log;
};

void save_train_state(const TrainState& state, const std::string& path);
TrainState load_train_state(const std::string& path);

// Decoupled-weight-decay Adam; decay applies to conv weights only.
class AdamW {
public:
    AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void init(const std::vector<Param<float>>& params);
    void step(std::vector<Param<float>>& params, double lr, double weight_decay);

    int64_t step_count() const { return step_; }
    std::vector<std::pair<std::string, std::vector<float>>>& m() { return m_; }
    std::vector<std::pair<std::string, std::vector<float>>>& v() { return v_; }
    void restore(int64_t step, std::vector<std::pair<std::string, std::vector<float>>> m,
                 std::vector<std::pair<std::string, std::vector<float>>> v);

private:
    double beta1_, beta2_, eps_;
    int64_t step_ = 0;
    std::vector<std::pair<std::string, std::vector<float>>> m_, v_;
};

struct TrainResult {
    std::string model_checkpoint;
    std::string state_checkpoint;
    std::string log_csv;
    std::string checkpoint_id;
    std::vector<TrainLogRow> log;
};

// Supervised baseline: cross-entropy over augmented labeled tiles.
TrainResult train_supervised(const TrainConfig& cfg, const ModelConfig& model_cfg,
                             const AugmentConfig& augment_cfg, const DatasetManifest& labeled,
                             const std::string& out_dir, bool resume = false);

// Adaptation run: per step one labeled and one unlabeled batch; the combined
// objective adds the iteration-ramped class-confusion term and pseudo-label
// cross-entropy on the unlabeled stream. pseudo_store_dir may be empty only
// when beta == 0.
TrainResult train_ssda(const TrainConfig& cfg, const ModelConfig& model_cfg,
                       const AugmentConfig& augment_cfg, const DatasetManifest& labeled,
                       const DatasetManifest& unlabeled, const std::string& pseudo_store_dir,
                       const std::string& out_dir, bool resume = false);

std::string format_log_csv(const std::vector<TrainLogRow>& rows);

}  // namespace roadseg
