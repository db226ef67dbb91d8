// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>

#include "roadseg/image.hpp"
#include "roadseg/rng.hpp"
#include "roadseg/tensor.hpp"

namespace roadseg {

// Weight ramp for the class-confusion term: 0 at iteration 0, alpha_max from
// ramp_iters on, nondecreasing in between.
struct AlphaSchedule {
    double alpha_max = 1.0;
    int64_t ramp_iters = 1;
    enum class Shape { Linear, Sigmoid } shape = Shape::Linear;

    void validate() const;
};

double alpha_at(const AlphaSchedule& schedule, int64_t iteration);

struct MccConfig {
    double temperature = 2.5;
    bool entropy_weighting = true;
    std::optional<int64_t> pixel_subsample = 4096;  // uniform without replacement, seeded

    void validate(int n_classes) const;
};

struct LossBreakdown {
    double ce_labeled = 0.0;
    double ce_pseudo = 0.0;
    double mcc = 0.0;
    double alpha = 0.0;
    double total = 0.0;
};

// Mean cross-entropy over pixels whose target is not 255. Targets are
// [n, h, w] with values < n_classes or 255. Returns 0 when every pixel is
// ignored. When `grad` is given it receives dLoss/dlogits with exact zeros
// at every ignored pixel.
template <typename T>
double ce_ignore(const Tensor<T>& logits, const Tensor<uint8_t>& target, Tensor<T>* grad = nullptr);

// Class-confusion loss on a batch of per-pixel logits. Pixels are the
// examples: rows of a temperature-softmax matrix, optionally
// certainty-weighted, correlated into a class-by-class matrix whose
// row-normalized off-diagonal mass is the loss. Value is in [0, 1] and is
// exactly invariant to pixel permutations (order-invariant reductions).
// subsample_seed drives the without-replacement pixel subsample when the
// batch exceeds cfg.pixel_subsample.
template <typename T>
double mcc_loss(const Tensor<T>& logits, const MccConfig& cfg, uint64_t subsample_seed = 0,
                Tensor<T>* grad = nullptr);

// The training objective: supervised CE on the labeled batch plus
// beta * pseudo-label CE and alpha(iteration) * MCC on the unlabeled batch.
// Component values are recorded; an absent pseudo mask contributes 0.
template <typename T>
LossBreakdown combined_on_logits(const Tensor<T>& logits_labeled, const Tensor<uint8_t>& target_labeled,
                                 const Tensor<T>* logits_unlabeled, const Tensor<uint8_t>* pseudo_mask,
                                 int64_t iteration, const AlphaSchedule& schedule,
                                 const MccConfig& mcc_cfg, double beta, uint64_t subsample_seed = 0);

// Same objective evaluated through a model callback, for callers holding
// batches rather than logits.
template <typename T>
LossBreakdown combined_loss(const std::function<Tensor<T>(const Tensor<T>&)>& forward,
                            const Tensor<T>& labeled_x, const Tensor<uint8_t>& labeled_y,
                            const Tensor<T>* unlabeled_x, const Tensor<uint8_t>* pseudo_mask,
                            int64_t iteration, const AlphaSchedule& schedule, const MccConfig& mcc_cfg,
                            double beta, uint64_t subsample_seed = 0) {
    Tensor<T> logits_l = forward(labeled_x);
    if (!unlabeled_x)
        return combined_on_logits<T>(logits_l, labeled_y, nullptr, nullptr, iteration, schedule,
                                     mcc_cfg, beta, subsample_seed);
    Tensor<T> logits_u = forward(*unlabeled_x);
    return combined_on_logits<T>(logits_l, labeled_y, &logits_u, pseudo_mask, iteration, schedule,
                                 mcc_cfg, beta, subsample_seed);
}

// ---- template implementations ----

template <typename T>
double ce_ignore(const Tensor<T>& logits, const Tensor<uint8_t>& target, Tensor<T>* grad) {
    if (logits.rank() != 4) throw ValidationError("ce_ignore: logits must be [n,c,h,w]");
    if (target.rank() != 3) throw ValidationError("ce_ignore: target must be [n,h,w]");
    const int n = static_cast<int>(logits.dim(0)), c = static_cast<int>(logits.dim(1));
    const int h = static_cast<int>(logits.dim(2)), w = static_cast<int>(logits.dim(3));
    if (target.dim(0) != n || target.dim(1) != h || target.dim(2) != w)
        throw ValidationError("ce_ignore: target shape " + target.shape_str() +
                              " does not match logits " + logits.shape_str());
    if (grad) {
        *grad = Tensor<T>(logits.shape());
    }
    const int hw = h * w;

    // first pass: count valid pixels, validate the alphabet
    int64_t m = 0;
    for (size_t i = 0; i < target.size(); ++i) {
        const uint8_t t = target[i];
        if (t == kIgnore) continue;
        if (t >= c)
            throw ValidationError("ce_ignore: mask value " + std::to_string(int(t)) +
                                  " outside {0.." + std::to_string(c - 1) + ",255}");
        ++m;
    }
    if (m == 0) return 0.0;

    double loss = 0.0;
    std::vector<double> z(c);
    for (int ni = 0; ni < n; ++ni) {
        const size_t lbase = static_cast<size_t>(ni) * c * hw;
        const size_t tbase = static_cast<size_t>(ni) * hw;
        for (int i = 0; i < hw; ++i) {
            const uint8_t t = target[tbase + i];
            if (t == kIgnore) continue;
            double mx = -1e300;
            for (int ci = 0; ci < c; ++ci) {
                z[ci] = static_cast<double>(logits[lbase + static_cast<size_t>(ci) * hw + i]);
                mx = std::max(mx, z[ci]);
            }
            double denom = 0.0;
            for (int ci = 0; ci < c; ++ci) denom += std::exp(z[ci] - mx);
            const double lse = mx + std::log(denom);
            loss += lse - z[t];
            if (grad) {
                for (int ci = 0; ci < c; ++ci) {
                    const double p = std::exp(z[ci] - lse);
                    (*grad)[lbase + static_cast<size_t>(ci) * hw + i] =
                        static_cast<T>((p - (ci == t ? 1.0 : 0.0)) / static_cast<double>(m));
                }
            }
        }
    }
    return loss / static_cast<double>(m);
}

template <typename T>
double mcc_loss(const Tensor<T>& logits, const MccConfig& cfg, uint64_t subsample_seed,
                Tensor<T>* grad) {
    if (logits.rank() != 4) throw ValidationError("mcc_loss: logits must be [n,c,h,w]");
    if (!logits.all_finite()) throw ValidationError("mcc_loss: logits must be finite");
    const int c = static_cast<int>(logits.dim(1));
    cfg.validate(c);
    const int hw = static_cast<int>(logits.dim(2) * logits.dim(3));
    const int64_t n_pix = logits.dim(0) * hw;
    const double temp = cfg.temperature;

    // pixel selection: identity, or a seeded without-replacement subsample
    std::vector<int64_t> sel;
    if (cfg.pixel_subsample && n_pix > *cfg.pixel_subsample) {
        sel.resize(static_cast<size_t>(n_pix));
        for (int64_t i = 0; i < n_pix; ++i) sel[static_cast<size_t>(i)] = i;
        Rng rng(subsample_seed);
        const int64_t k = *cfg.pixel_subsample;
        for (int64_t i = 0; i < k; ++i)
            std::swap(sel[static_cast<size_t>(i)],
                      sel[static_cast<size_t>(i + rng.uniform_int(n_pix - i))]);
        sel.resize(static_cast<size_t>(k));
    } else {
        sel.resize(static_cast<size_t>(n_pix));
        for (int64_t i = 0; i < n_pix; ++i) sel[static_cast<size_t>(i)] = i;
    }
    const int64_t np = static_cast<int64_t>(sel.size());
    if (np < c)
        throw ValidationError("mcc_loss: " + std::to_string(np) + " pixels after subsampling is fewer "
                              "than " + std::to_string(c) + " classes");

    // flat pixel index -> logit offset: pixel p of sample n sits at
    // base + ci*hw + p.
    auto logit_at = [&](int64_t flat, int ci) -> double {
        const int64_t ni = flat / hw, p = flat % hw;
        return static_cast<double>(
            logits[static_cast<size_t>((ni * c + ci) * hw + p)]);
    };

    // temperature softmax rows
    std::vector<double> prob(static_cast<size_t>(np) * c);
    for (int64_t i = 0; i < np; ++i) {
        double mx = -1e300;
        for (int ci = 0; ci < c; ++ci) mx = std::max(mx, logit_at(sel[static_cast<size_t>(i)], ci) / temp);
        double denom = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            const double e = std::exp(logit_at(sel[static_cast<size_t>(i)], ci) / temp - mx);
            prob[static_cast<size_t>(i) * c + ci] = e;
            denom += e;
        }
        for (int ci = 0; ci < c; ++ci) prob[static_cast<size_t>(i) * c + ci] /= denom;
    }

    // certainty weights
    std::vector<double> wgt(static_cast<size_t>(np), 1.0);
    std::vector<double> uval, entropy;
    double usum = 0.0;
    if (cfg.entropy_weighting) {
        uval.resize(static_cast<size_t>(np));
        entropy.resize(static_cast<size_t>(np));
        for (int64_t i = 0; i < np; ++i) {
            double hent = 0.0;
            for (int ci = 0; ci < c; ++ci) {
                const double p = prob[static_cast<size_t>(i) * c + ci];
                if (p > 0.0) hent -= p * std::log(p);
            }
            entropy[static_cast<size_t>(i)] = hent;
            uval[static_cast<size_t>(i)] = 1.0 + std::exp(-hent);
        }
        usum = stable_sum(uval);
        for (int64_t i = 0; i < np; ++i)
            wgt[static_cast<size_t>(i)] = static_cast<double>(np) * uval[static_cast<size_t>(i)] / usum;
    }

    // class correlation matrix (symmetric), order-invariant accumulation
    std::vector<double> corr(static_cast<size_t>(c) * c, 0.0);
    {
        std::vector<double> terms(static_cast<size_t>(np));
        for (int cj = 0; cj < c; ++cj) {
            for (int ck = cj; ck < c; ++ck) {
                for (int64_t i = 0; i < np; ++i)
                    terms[static_cast<size_t>(i)] = wgt[static_cast<size_t>(i)] *
                                                    prob[static_cast<size_t>(i) * c + cj] *
                                                    prob[static_cast<size_t>(i) * c + ck];
                const double v = stable_sum(terms);
                corr[static_cast<size_t>(cj) * c + ck] = v;
                corr[static_cast<size_t>(ck) * c + cj] = v;
            }
        }
    }

    constexpr double kTinyRow = 1e-30;
    std::vector<double> rowsum(static_cast<size_t>(c), 0.0);
    for (int cj = 0; cj < c; ++cj)
        for (int ck = 0; ck < c; ++ck) rowsum[static_cast<size_t>(cj)] += corr[static_cast<size_t>(cj) * c + ck];

    double loss = 0.0;
    for (int cj = 0; cj < c; ++cj) {
        const double r = std::max(rowsum[static_cast<size_t>(cj)], kTinyRow);
        loss += (rowsum[static_cast<size_t>(cj)] - corr[static_cast<size_t>(cj) * c + cj]) / r;
    }
    loss /= static_cast<double>(c);

    if (grad) {
        *grad = Tensor<T>(logits.shape());
        // dL/d diag and d rowsum
        std::vector<double> a(static_cast<size_t>(c), 0.0), b(static_cast<size_t>(c), 0.0);
        for (int cj = 0; cj < c; ++cj) {
            const double r = rowsum[static_cast<size_t>(cj)];
            if (r <= kTinyRow) continue;  // constant row, no gradient
            a[static_cast<size_t>(cj)] = -1.0 / (c * r);
            b[static_cast<size_t>(cj)] = corr[static_cast<size_t>(cj) * c + cj] / (c * r * r);
        }
        std::vector<double> gp(static_cast<size_t>(np) * c, 0.0);
        std::vector<double> aw;  // dL/dW per pixel
        if (cfg.entropy_weighting) aw.assign(static_cast<size_t>(np), 0.0);
        for (int64_t i = 0; i < np; ++i) {
            for (int cj = 0; cj < c; ++cj) {
                const double p = prob[static_cast<size_t>(i) * c + cj];
                gp[static_cast<size_t>(i) * c + cj] =
                    wgt[static_cast<size_t>(i)] * (2.0 * p * a[static_cast<size_t>(cj)] + b[static_cast<size_t>(cj)]);
                if (cfg.entropy_weighting)
                    aw[static_cast<size_t>(i)] += a[static_cast<size_t>(cj)] * p * p + b[static_cast<size_t>(cj)] * p;
            }
        }
        if (cfg.entropy_weighting) {
            double sau = 0.0;
            for (int64_t i = 0; i < np; ++i) sau += aw[static_cast<size_t>(i)] * uval[static_cast<size_t>(i)];
            for (int64_t i = 0; i < np; ++i) {
                const double gu = static_cast<double>(np) / usum *
                                  (aw[static_cast<size_t>(i)] - sau / usum);
                const double gh = gu * (-std::exp(-entropy[static_cast<size_t>(i)]));
                for (int cj = 0; cj < c; ++cj) {
                    const double p = std::max(prob[static_cast<size_t>(i) * c + cj], 1e-300);
                    gp[static_cast<size_t>(i) * c + cj] += gh * (-(std::log(p) + 1.0));
                }
            }
        }
        // project through the temperature softmax
        for (int64_t i = 0; i < np; ++i) {
            double dot = 0.0;
            for (int ck = 0; ck < c; ++ck)
                dot += gp[static_cast<size_t>(i) * c + ck] * prob[static_cast<size_t>(i) * c + ck];
            const int64_t flat = sel[static_cast<size_t>(i)];
            const int64_t ni = flat / hw, p = flat % hw;
            for (int cj = 0; cj < c; ++cj) {
                const double pij = prob[static_cast<size_t>(i) * c + cj];
                const double dz = pij * (gp[static_cast<size_t>(i) * c + cj] - dot) / temp;
                (*grad)[static_cast<size_t>((ni * c + cj) * hw + p)] = static_cast<T>(dz);
            }
        }
    }
    return loss;
}

template <typename T>
LossBreakdown combined_on_logits(const Tensor<T>& logits_labeled, const Tensor<uint8_t>& target_labeled,
                                 const Tensor<T>* logits_unlabeled, const Tensor<uint8_t>* pseudo_mask,
                                 int64_t iteration, const AlphaSchedule& schedule,
                                 const MccConfig& mcc_cfg, double beta, uint64_t subsample_seed) {
    LossBreakdown out;
    out.alpha = alpha_at(schedule, iteration);
    out.ce_labeled = ce_ignore(logits_labeled, target_labeled);
    if (logits_unlabeled) {
        if (pseudo_mask) out.ce_pseudo = ce_ignore(*logits_unlabeled, *pseudo_mask);
        out.mcc = mcc_loss(*logits_unlabeled, mcc_cfg, subsample_seed);
    }
    out.total = out.ce_labeled + beta * out.ce_pseudo + out.alpha * out.mcc;
    return out;
}

}  // namespace roadseg
