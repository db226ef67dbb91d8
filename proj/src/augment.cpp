// SPDX-License-Identifier: Apache-2.0

#include "roadseg/augment.hpp"

#include <algorithm>
#include <cmath>

namespace roadseg {

void AugmentConfig::validate() const {
    if (!(scale_lo > 0.0) || scale_lo > scale_hi)
        throw ValidationError("augment: require 0 < scale_lo <= scale_hi");
    if (crop_size < 1) throw ValidationError("augment: crop_size must be >= 1");
    if (hflip_prob < 0 || hflip_prob > 1 || vflip_prob < 0 || vflip_prob > 1)
        throw ValidationError("augment: flip probabilities must be in [0,1]");
    if (brightness < 0 || contrast < 0 || saturation < 0)
        throw ValidationError("augment: color jitter deltas must be >= 0");
    if (rotations.empty()) throw ValidationError("augment: rotations set must be non-empty");
    for (int r : rotations)
        if (r != 0 && r != 90 && r != 180 && r != 270)
            throw ValidationError("augment: rotations must be multiples of 90 in {0,90,180,270}");
}

namespace {

ImageU8 rotate90k(const ImageU8& img, int k) {
    k = ((k % 4) + 4) % 4;
    if (k == 0) return img;
    const int h = img.h, w = img.w, c = img.c;
    const int oh = (k % 2 == 0) ? h : w;
    const int ow = (k % 2 == 0) ? w : h;
    ImageU8 out(oh, ow, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int ny, nx;
            // counter-clockwise by k*90
            if (k == 1) { ny = w - 1 - x; nx = y; }
            else if (k == 2) { ny = h - 1 - y; nx = w - 1 - x; }
            else { ny = x; nx = h - 1 - y; }
            for (int ch = 0; ch < c; ++ch) out.at(ny, nx, ch) = img.at(y, x, ch);
        }
    return out;
}

ImageU8 flip_h(const ImageU8& img) {
    ImageU8 out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) out.at(y, img.w - 1 - x, ch) = img.at(y, x, ch);
    return out;
}

ImageU8 flip_v(const ImageU8& img) {
    ImageU8 out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) out.at(img.h - 1 - y, x, ch) = img.at(y, x, ch);
    return out;
}

// Reflect-101 pad on the bottom/right edges up to (oh, ow).
ImageU8 pad_reflect(const ImageU8& img, int oh, int ow) {
    ImageU8 out(oh, ow, img.c);
    for (int y = 0; y < oh; ++y) {
        int sy = y;
        if (sy >= img.h) {
            sy = img.h > 1 ? 2 * img.h - 2 - sy : 0;
            sy = std::clamp(sy, 0, img.h - 1);
        }
        for (int x = 0; x < ow; ++x) {
            int sx = x;
            if (sx >= img.w) {
                sx = img.w > 1 ? 2 * img.w - 2 - sx : 0;
                sx = std::clamp(sx, 0, img.w - 1);
            }
            for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
        }
    }
    return out;
}

MaskU8 pad_ignore(const MaskU8& mask, int oh, int ow) {
    MaskU8 out(oh, ow, 1, kIgnore);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) out.at(y, x) = mask.at(y, x);
    return out;
}

}  // namespace

TileSample augment(const TileSample& sample, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();

    // Fixed draw sequence keeps replay stable no matter which transforms are
    // active for a particular sample.
    const double s = rng.uniform(cfg.scale_lo, cfg.scale_hi);
    const int rot_deg = cfg.rotations[static_cast<size_t>(rng.uniform_int(cfg.rotations.size()))];
    const bool do_h = rng.uniform() < cfg.hflip_prob;
    const bool do_v = rng.uniform() < cfg.vflip_prob;
    const double fb = rng.uniform(1.0 - cfg.brightness, 1.0 + cfg.brightness);
    const double fc = rng.uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast);
    const double fsat = rng.uniform(1.0 - cfg.saturation, 1.0 + cfg.saturation);

    ImageU8 img = sample.image;
    MaskU8 mask = sample.mask;

    // rescale
    const int nh = std::max<int>(1, static_cast<int>(std::lround(img.h * s)));
    const int nw = std::max<int>(1, static_cast<int>(std::lround(img.w * s)));
    if (nh != img.h || nw != img.w) {
        img = resize_bilinear(img, nh, nw);
        mask = resize_nearest(mask, nh, nw);
    }

    // rotate / flip (exact pixel permutations)
    const int k = rot_deg / 90;
    if (k) {
        img = rotate90k(img, k);
        mask = rotate90k(mask, k);
    }
    if (do_h) {
        img = flip_h(img);
        mask = flip_h(mask);
    }
    if (do_v) {
        img = flip_v(img);
        mask = flip_v(mask);
    }

    // color jitter, image only; single quantization at the end of the stage
    if (cfg.brightness > 0 || cfg.contrast > 0 || cfg.saturation > 0) {
        std::vector<double> buf(img.px.size());
        for (size_t i = 0; i < img.px.size(); ++i) buf[i] = img.px[i] * fb;
        double mean = 0.0;
        for (double v : buf) mean += v;
        mean /= buf.size();
        for (double& v : buf) v = (v - mean) * fc + mean;
        const size_t npx = buf.size() / 3;
        for (size_t p = 0; p < npx; ++p) {
            const double r = buf[p * 3], g = buf[p * 3 + 1], b = buf[p * 3 + 2];
            const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
            buf[p * 3] = luma + fsat * (r - luma);
            buf[p * 3 + 1] = luma + fsat * (g - luma);
            buf[p * 3 + 2] = luma + fsat * (b - luma);
        }
        for (size_t i = 0; i < img.px.size(); ++i)
            img.px[i] = static_cast<uint8_t>(std::clamp(std::lround(buf[i]), 0L, 255L));
    }

    // pad if needed, then random crop
    if (img.h < cfg.crop_size || img.w < cfg.crop_size) {
        const int oh = std::max(img.h, cfg.crop_size);
        const int ow = std::max(img.w, cfg.crop_size);
        img = pad_reflect(img, oh, ow);
        mask = pad_ignore(mask, oh, ow);
    }
    const int r0 = static_cast<int>(rng.uniform_int(img.h - cfg.crop_size + 1));
    const int c0 = static_cast<int>(rng.uniform_int(img.w - cfg.crop_size + 1));

    TileSample out;
    out.image = ImageU8(cfg.crop_size, cfg.crop_size, img.c);
    out.mask = MaskU8(cfg.crop_size, cfg.crop_size, 1);
    for (int y = 0; y < cfg.crop_size; ++y)
        for (int x = 0; x < cfg.crop_size; ++x) {
            for (int ch = 0; ch < img.c; ++ch)
                out.image.at(y, x, ch) = img.at(r0 + y, c0 + x, ch);
            out.mask.at(y, x) = mask.at(r0 + y, c0 + x);
        }
    out.origin = sample.origin;
    out.resolution_m_per_px = sample.resolution_m_per_px;
    return out;
}

}  // namespace roadseg
