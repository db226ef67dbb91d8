// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "roadseg/manifest.hpp"
#include "roadseg/nn_ops.hpp"
#include "roadseg/rng.hpp"

namespace roadseg {

struct ModelConfig {
    std::string arch = "toynet";
    int n_classes = 2;
    int width = 8;   // base channel count
    int depth = 3;   // down/up stages
    uint64_t seed = 1;

    void validate() const;
};

// Architecture registry. toynet is the trainable desk-scale default; the
// other names are recognized extension points that larger encoder-decoder
// variants would plug into.
struct ArchInfo {
    std::string name;
    bool buildable;
};
const std::vector<ArchInfo>& arch_registry();

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
};

// Small UNet-style encoder-decoder: per stage two (conv3x3 + groupnorm +
// relu) blocks, 2x2 max pool down, nearest x2 up with skip concatenation,
// 1x1 conv head producing per-pixel class logits.
template <typename T>
class ToyNet {
public:
    explicit ToyNet(const ModelConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        if (cfg.arch != "toynet")
            throw UnsupportedError("arch '" + cfg.arch + "' is a registry extension point; only "
                                   "'toynet' is buildable");
        build();
        init_params();
    }

    const ModelConfig& config() const { return cfg_; }
    std::vector<Param<T>>& params() { return params_; }
    const std::vector<Param<T>>& params() const { return params_; }

    // Input [n, 3, h, w] with h, w divisible by 2^depth. Returns logits
    // [n, n_classes, h, w]. With `training` the activations needed by
    // backward() are cached; `check_numerics` scans every block output and
    // names the offending layer on non-finite values.
    Tensor<T> forward(const Tensor<T>& x, bool training, bool check_numerics = false);

    // Accumulates parameter gradients for the batch of the last training
    // forward; returns the gradient w.r.t. the input.
    Tensor<T> backward(const Tensor<T>& glogits);

    void zero_grads() {
        for (auto& p : params_) p.grad.fill(T(0));
    }

    void load_param_values(const std::vector<std::pair<std::string, std::vector<T>>>& values);

private:
    struct Block {  // double conv
        int w1, b1, g1, be1, w2, b2, g2, be2;
        int cin, cout, groups;
    };
    struct BlockCache {
        Tensor<T> x0, y1, r1, y2, r2;
        Tensor<T> mean1, rstd1, mean2, rstd2;
    };

    static int groups_for(int c) { return c % 4 == 0 ? 4 : (c % 2 == 0 ? 2 : 1); }

    int add_param(const std::string& name, std::vector<int64_t> shape) {
        params_.push_back({name, Tensor<T>(shape), Tensor<T>(shape)});
        return static_cast<int>(params_.size()) - 1;
    }

    Block add_block(const std::string& name, int cin, int cout) {
        Block b;
        b.cin = cin;
        b.cout = cout;
        b.groups = groups_for(cout);
        b.w1 = add_param(name + ".conv1.w", {cout, cin, 3, 3});
        b.b1 = add_param(name + ".conv1.b", {cout});
        b.g1 = add_param(name + ".gn1.gamma", {cout});
        b.be1 = add_param(name + ".gn1.beta", {cout});
        b.w2 = add_param(name + ".conv2.w", {cout, cout, 3, 3});
        b.b2 = add_param(name + ".conv2.b", {cout});
        b.g2 = add_param(name + ".gn2.gamma", {cout});
        b.be2 = add_param(name + ".gn2.beta", {cout});
        return b;
    }

    void build();
    void init_params();

    Tensor<T> block_forward(const Block& b, const Tensor<T>& x, BlockCache& cache);
    Tensor<T> block_backward(const Block& b, const BlockCache& cache, const Tensor<T>& gy);
    void check_block(const Tensor<T>& t, const std::string& layer, bool enabled) const {
        if (enabled && !t.all_finite())
            throw NumericError("non-finite activation in layer '" + layer + "'");
    }

    ModelConfig cfg_;
    std::vector<Param<T>> params_;
    std::vector<Block> enc_, dec_;
    Block bott_{};
    int head_w_ = -1, head_b_ = -1;

    // training cache
    std::vector<BlockCache> enc_cache_, dec_cache_;
    BlockCache bott_cache_;
    std::vector<Tensor<uint8_t>> pool_idx_;
    std::vector<int> pool_in_h_, pool_in_w_;
    Tensor<T> head_in_;
    bool have_cache_ = false;

    mutable std::vector<T> scratch_, scratch2_;
};

using ToyNetF = ToyNet<float>;
using ToyNetD = ToyNet<double>;

// Per-pixel softmax over the class dimension, computed in double and cast
// back. Input is a logits tensor [n, c, h, w].
template <typename T>
Tensor<T> softmax_probs(const Tensor<T>& logits);

// Inference entry point: normalized images in, class probabilities out, with
// per-layer numeric checks enabled.
template <typename T>
Tensor<T> predict_probs(ToyNet<T>& net, const Tensor<T>& images) {
    Tensor<T> logits = net.forward(images, /*training=*/false, /*check_numerics=*/true);
    return softmax_probs(logits);
}

// ---- checkpoint IO (float graphs) ----

struct LoadedModel {
    ModelConfig config;
    std::vector<std::pair<std::string, std::vector<float>>> param_values;
    Normalization normalization;
    double train_resolution_m_per_px = 0.0;
    std::string checkpoint_id;

    ToyNetF instantiate() const {
        ToyNetF net(config);
        net.load_param_values(param_values);
        return net;
    }
};

// Returns the checkpoint content id.
std::string save_model_checkpoint(const ToyNetF& net, const Normalization& norm,
                                  double train_resolution_m_per_px, const std::string& path);
LoadedModel load_model_checkpoint(const std::string& path);

// ---- template implementations ----

template <typename T>
void ToyNet<T>::build() {
    const int d = cfg_.depth;
    int prev = 3;
    for (int i = 0; i < d; ++i) {
        const int c = cfg_.width << i;
        enc_.push_back(add_block("enc" + std::to_string(i), prev, c));
        prev = c;
    }
    bott_ = add_block("bott", prev, cfg_.width << d);
    dec_.resize(d, Block{});
    for (int i = d - 1; i >= 0; --i) {
        const int c = cfg_.width << i;
        const int cin = (cfg_.width << (i + 1)) + c;  // upsampled + skip
        dec_[i] = add_block("dec" + std::to_string(i), cin, c);
    }
    head_w_ = add_param("head.w", {cfg_.n_classes, cfg_.width, 1, 1});
    head_b_ = add_param("head.b", {cfg_.n_classes});

    enc_cache_.resize(d);
    dec_cache_.resize(d);
    pool_idx_.resize(d);
    pool_in_h_.resize(d);
    pool_in_w_.resize(d);
}

template <typename T>
void ToyNet<T>::init_params() {
    Rng rng = derive_rng(cfg_.seed, "model_init");
    for (auto& p : params_) {
        const bool is_conv_w = p.name.size() > 2 && p.name.rfind(".w") == p.name.size() - 2;
        const bool is_gamma = p.name.find(".gamma") != std::string::npos;
        if (is_conv_w) {
            const auto& s = p.value.shape();
            const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
            const double stddev = std::sqrt(2.0 / fan_in);
            for (size_t i = 0; i < p.value.size(); ++i)
                p.value[i] = static_cast<T>(rng.normal() * stddev);
        } else if (is_gamma) {
            p.value.fill(T(1));
        } else {
            p.value.fill(T(0));
        }
    }
}

template <typename T>
Tensor<T> ToyNet<T>::block_forward(const Block& b, const Tensor<T>& x, BlockCache& cache) {
    cache.x0 = x;
    cache.y1 = nn::conv2d_forward(x, params_[b.w1].value, params_[b.b1].value, scratch_);
    Tensor<T> n1 = nn::groupnorm_forward(cache.y1, params_[b.g1].value, params_[b.be1].value,
                                         b.groups, cache.mean1, cache.rstd1);
    cache.r1 = nn::relu_forward(n1);
    cache.y2 = nn::conv2d_forward(cache.r1, params_[b.w2].value, params_[b.b2].value, scratch_);
    Tensor<T> n2 = nn::groupnorm_forward(cache.y2, params_[b.g2].value, params_[b.be2].value,
                                         b.groups, cache.mean2, cache.rstd2);
    cache.r2 = nn::relu_forward(n2);
    return cache.r2;
}

template <typename T>
Tensor<T> ToyNet<T>::block_backward(const Block& b, const BlockCache& cache, const Tensor<T>& gy) {
    Tensor<T> g = nn::relu_backward(cache.r2, gy);
    g = nn::groupnorm_backward(cache.y2, params_[b.g2].value, cache.mean2, cache.rstd2, g,
                               b.groups, params_[b.g2].grad, params_[b.be2].grad);
    g = nn::conv2d_backward(cache.r1, params_[b.w2].value, g, params_[b.w2].grad,
                            params_[b.b2].grad, scratch_, scratch2_);
    g = nn::relu_backward(cache.r1, g);
    g = nn::groupnorm_backward(cache.y1, params_[b.g1].value, cache.mean1, cache.rstd1, g,
                               b.groups, params_[b.g1].grad, params_[b.be1].grad);
    g = nn::conv2d_backward(cache.x0, params_[b.w1].value, g, params_[b.w1].grad,
                            params_[b.b1].grad, scratch_, scratch2_);
    return g;
}

template <typename T>
Tensor<T> ToyNet<T>::forward(const Tensor<T>& x, bool training, bool check_numerics) {
    if (x.rank() != 4 || x.dim(1) != 3)
        throw ValidationError("model input must be [n,3,h,w], got " + x.shape_str());
    const int64_t div = int64_t(1) << cfg_.depth;
    if (x.dim(2) % div != 0 || x.dim(3) % div != 0)
        throw ValidationError("model input " + x.shape_str() + " spatial dims must be divisible by " +
                              std::to_string(div));
    if (!training) have_cache_ = false;

    std::vector<BlockCache> local_enc, local_dec;
    BlockCache local_bott;
    auto& encC = training ? enc_cache_ : local_enc;
    auto& decC = training ? dec_cache_ : local_dec;
    auto& bottC = training ? bott_cache_ : local_bott;
    if (!training) {
        local_enc.resize(cfg_.depth);
        local_dec.resize(cfg_.depth);
    }

    Tensor<T> cur = x;
    std::vector<Tensor<T>> skips(cfg_.depth);
    for (int i = 0; i < cfg_.depth; ++i) {
        cur = block_forward(enc_[i], cur, encC[i]);
        check_block(cur, "enc" + std::to_string(i), check_numerics);
        skips[i] = cur;
        pool_in_h_[i] = static_cast<int>(cur.dim(2));
        pool_in_w_[i] = static_cast<int>(cur.dim(3));
        cur = nn::maxpool2_forward(cur, pool_idx_[i]);
    }
    cur = block_forward(bott_, cur, bottC);
    check_block(cur, "bott", check_numerics);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
        Tensor<T> up = nn::upsample2_forward(cur);
        Tensor<T> cat = nn::concat_channels(up, skips[i]);
        cur = block_forward(dec_[i], cat, decC[i]);
        check_block(cur, "dec" + std::to_string(i), check_numerics);
    }
    if (training) head_in_ = cur;
    Tensor<T> logits =
        nn::conv2d_forward(cur, params_[head_w_].value, params_[head_b_].value, scratch_);
    check_block(logits, "head", check_numerics);
    have_cache_ = training;
    return logits;
}

template <typename T>
Tensor<T> ToyNet<T>::backward(const Tensor<T>& glogits) {
    if (!have_cache_) throw ValidationError("backward called without a training forward");
    Tensor<T> g = nn::conv2d_backward(head_in_, params_[head_w_].value, glogits,
                                      params_[head_w_].grad, params_[head_b_].grad, scratch_,
                                      scratch2_);
    std::vector<Tensor<T>> gskips(cfg_.depth);
    for (int i = 0; i < cfg_.depth; ++i) {
        g = block_backward(dec_[i], dec_cache_[i], g);
        Tensor<T> gup;
        const int up_ch = cfg_.width << (i + 1);
        nn::split_channels(g, up_ch, gup, gskips[i]);
        g = nn::upsample2_backward(gup);
    }
    g = block_backward(bott_, bott_cache_, g);
    for (int i = cfg_.depth - 1; i >= 0; --i) {
        g = nn::maxpool2_backward(pool_idx_[i], g, pool_in_h_[i], pool_in_w_[i]);
        for (size_t j = 0; j < g.size(); ++j) g[j] += gskips[i][j];
        g = block_backward(enc_[i], enc_cache_[i], g);
    }
    return g;
}

template <typename T>
void ToyNet<T>::load_param_values(const std::vector<std::pair<std::string, std::vector<T>>>& values) {
    if (values.size() != params_.size())
        throw ValidationError("checkpoint has " + std::to_string(values.size()) + " params, model has " +
                              std::to_string(params_.size()));
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i].first != params_[i].name)
            throw ValidationError("checkpoint param '" + values[i].first + "' does not match model param '" +
                                  params_[i].name + "'");
        if (values[i].second.size() != params_[i].value.size())
            throw ValidationError("checkpoint param '" + values[i].first + "' has wrong size");
        std::copy(values[i].second.begin(), values[i].second.end(), params_[i].value.data());
        if (!params_[i].value.all_finite())
            throw NumericError("checkpoint param '" + values[i].first + "' contains non-finite values");
    }
}

template <typename T>
Tensor<T> softmax_probs(const Tensor<T>& logits) {
    const int n = static_cast<int>(logits.dim(0)), c = static_cast<int>(logits.dim(1));
    const int hw = static_cast<int>(logits.dim(2) * logits.dim(3));
    Tensor<T> probs(logits.shape());
    std::vector<double> z(c);
    for (int ni = 0; ni < n; ++ni) {
        const size_t base = static_cast<size_t>(ni) * c * hw;
        for (int i = 0; i < hw; ++i) {
            double m = -1e300;
            for (int ci = 0; ci < c; ++ci) {
                z[ci] = static_cast<double>(logits[base + static_cast<size_t>(ci) * hw + i]);
                m = std::max(m, z[ci]);
            }
            double denom = 0.0;
            for (int ci = 0; ci < c; ++ci) {
                z[ci] = std::exp(z[ci] - m);
                denom += z[ci];
            }
            for (int ci = 0; ci < c; ++ci)
                probs[base + static_cast<size_t>(ci) * hw + i] = static_cast<T>(z[ci] / denom);
        }
    }
    return probs;
}

}  // namespace roadseg
