// SPDX-License-Identifier: Apache-2.0
//
// Layer primitives for the segmentation nets: conv (im2col + GEMM), group
// norm, relu, 2x2 max pool, nearest upsample, channel concat. All are
// templated on the scalar so the test suite can run the exact same code in
// double precision for finite-difference checks.
#pragma once

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "roadseg/tensor.hpp"

namespace roadseg::nn {

inline void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, float alpha,
                 const float* a, int lda, const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, double alpha,
                 const double* a, int lda, const double* b, int ldb, double beta, double* c,
                 int ldc) {
    cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// Unrolls (C,H,W) into a (C*kh*kw) x (H*W) matrix for stride-1 convolution
// with symmetric zero padding.
template <typename T>
void im2col(const T* x, int c, int h, int w, int kh, int kw, int pad, T* cols) {
    const int hw = h * w;
    for (int ci = 0; ci < c; ++ci) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                T* row = cols + (static_cast<size_t>(ci) * kh * kw + ky * kw + kx) * hw;
                for (int oy = 0; oy < h; ++oy) {
                    const int sy = oy + ky - pad;
                    T* dst = row + static_cast<size_t>(oy) * w;
                    if (sy < 0 || sy >= h) {
                        std::memset(dst, 0, sizeof(T) * w);
                        continue;
                    }
                    const T* src = x + (static_cast<size_t>(ci) * h + sy) * w;
                    const int shift = kx - pad;  // sx = ox + shift
                    const int ox_lo = std::max(0, -shift);
                    const int ox_hi = std::min(w, w - shift);
                    if (ox_lo > 0) std::memset(dst, 0, sizeof(T) * ox_lo);
                    if (ox_hi > ox_lo)
                        std::memcpy(dst + ox_lo, src + ox_lo + shift, sizeof(T) * (ox_hi - ox_lo));
                    if (ox_hi < w) std::memset(dst + ox_hi, 0, sizeof(T) * (w - ox_hi));
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* cols, int c, int h, int w, int kh, int kw, int pad, T* gx) {
    const int hw = h * w;
    for (int ci = 0; ci < c; ++ci) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const T* row = cols + (static_cast<size_t>(ci) * kh * kw + ky * kw + kx) * hw;
                for (int oy = 0; oy < h; ++oy) {
                    const int sy = oy + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    T* dst = gx + (static_cast<size_t>(ci) * h + sy) * w;
                    const T* src = row + static_cast<size_t>(oy) * w;
                    const int shift = kx - pad;
                    const int ox_lo = std::max(0, -shift);
                    const int ox_hi = std::min(w, w - shift);
                    for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox + shift] += src[ox];
                }
            }
        }
    }
}

// y = w * x + b, stride 1, pad = kh/2. Weights are [cout, cin, kh, kw].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::vector<T>& scratch) {
    const int n = static_cast<int>(x.dim(0)), cin = static_cast<int>(x.dim(1));
    const int h = static_cast<int>(x.dim(2)), wd = static_cast<int>(x.dim(3));
    const int cout = static_cast<int>(w.dim(0)), kh = static_cast<int>(w.dim(2)),
              kw = static_cast<int>(w.dim(3));
    const int pad = kh / 2;
    const int k = cin * kh * kw, hw = h * wd;

    Tensor<T> y({n, cout, h, wd});
    scratch.resize(static_cast<size_t>(k) * hw);
    for (int ni = 0; ni < n; ++ni) {
        const T* xn = x.data() + static_cast<size_t>(ni) * cin * hw;
        T* yn = y.data() + static_cast<size_t>(ni) * cout * hw;
        im2col(xn, cin, h, wd, kh, kw, pad, scratch.data());
        gemm(CblasNoTrans, CblasNoTrans, cout, hw, k, T(1), w.data(), k, scratch.data(), hw, T(0),
             yn, hw);
        for (int co = 0; co < cout; ++co) {
            const T bc = b[static_cast<size_t>(co)];
            T* row = yn + static_cast<size_t>(co) * hw;
            for (int i = 0; i < hw; ++i) row[i] += bc;
        }
    }
    return y;
}

// Accumulates gw/gb and returns gx.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                          Tensor<T>& gw, Tensor<T>& gb, std::vector<T>& scratch,
                          std::vector<T>& scratch2) {
    const int n = static_cast<int>(x.dim(0)), cin = static_cast<int>(x.dim(1));
    const int h = static_cast<int>(x.dim(2)), wd = static_cast<int>(x.dim(3));
    const int cout = static_cast<int>(w.dim(0)), kh = static_cast<int>(w.dim(2)),
              kw = static_cast<int>(w.dim(3));
    const int pad = kh / 2;
    const int k = cin * kh * kw, hw = h * wd;

    Tensor<T> gx({n, cin, h, wd});
    scratch.resize(static_cast<size_t>(k) * hw);
    scratch2.resize(static_cast<size_t>(k) * hw);
    for (int ni = 0; ni < n; ++ni) {
        const T* xn = x.data() + static_cast<size_t>(ni) * cin * hw;
        const T* gyn = gy.data() + static_cast<size_t>(ni) * cout * hw;
        T* gxn = gx.data() + static_cast<size_t>(ni) * cin * hw;

        im2col(xn, cin, h, wd, kh, kw, pad, scratch.data());
        // gw += gy . cols^T
        gemm(CblasNoTrans, CblasTrans, cout, k, hw, T(1), gyn, hw, scratch.data(), hw, T(1),
             gw.data(), k);
        for (int co = 0; co < cout; ++co) {
            const T* row = gyn + static_cast<size_t>(co) * hw;
            T acc(0);
            for (int i = 0; i < hw; ++i) acc += row[i];
            gb[static_cast<size_t>(co)] += acc;
        }
        // gcols = w^T . gy ; gx = col2im(gcols)
        gemm(CblasTrans, CblasNoTrans, k, hw, cout, T(1), w.data(), k, gyn, hw, T(0),
             scratch2.data(), hw);
        col2im_add(scratch2.data(), cin, h, wd, kh, kw, pad, gxn);
    }
    return gx;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& gy) {
    Tensor<T> gx(y.shape());
    for (size_t i = 0; i < y.size(); ++i) gx[i] = y[i] > T(0) ? gy[i] : T(0);
    return gx;
}

// Group normalization with per-channel affine. mean/rstd caches are [n*groups].
template <typename T>
Tensor<T> groupnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            int groups, Tensor<T>& mean, Tensor<T>& rstd, T eps = T(1e-5)) {
    const int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
    const int hw = static_cast<int>(x.dim(2) * x.dim(3));
    const int cg = c / groups;
    const size_t m = static_cast<size_t>(cg) * hw;

    Tensor<T> y(x.shape());
    mean = Tensor<T>({static_cast<int64_t>(n) * groups});
    rstd = Tensor<T>({static_cast<int64_t>(n) * groups});
    for (int ni = 0; ni < n; ++ni) {
        for (int g = 0; g < groups; ++g) {
            const T* xg = x.data() + (static_cast<size_t>(ni) * c + static_cast<size_t>(g) * cg) * hw;
            double mu = 0.0;
            for (size_t i = 0; i < m; ++i) mu += static_cast<double>(xg[i]);
            mu /= static_cast<double>(m);
            double var = 0.0;
            for (size_t i = 0; i < m; ++i) {
                const double d = static_cast<double>(xg[i]) - mu;
                var += d * d;
            }
            var /= static_cast<double>(m);
            const T rs = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
            mean[static_cast<size_t>(ni) * groups + g] = static_cast<T>(mu);
            rstd[static_cast<size_t>(ni) * groups + g] = rs;
            T* yg = y.data() + (static_cast<size_t>(ni) * c + static_cast<size_t>(g) * cg) * hw;
            for (int cc = 0; cc < cg; ++cc) {
                const T ga = gamma[static_cast<size_t>(g) * cg + cc];
                const T be = beta[static_cast<size_t>(g) * cg + cc];
                const T* xc = xg + static_cast<size_t>(cc) * hw;
                T* yc = yg + static_cast<size_t>(cc) * hw;
                for (int i = 0; i < hw; ++i)
                    yc[i] = ga * (xc[i] - static_cast<T>(mu)) * rs + be;
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> groupnorm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& mean,
                             const Tensor<T>& rstd, const Tensor<T>& gy, int groups,
                             Tensor<T>& ggamma, Tensor<T>& gbeta) {
    const int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
    const int hw = static_cast<int>(x.dim(2) * x.dim(3));
    const int cg = c / groups;
    const size_t m = static_cast<size_t>(cg) * hw;

    Tensor<T> gx(x.shape());
    for (int ni = 0; ni < n; ++ni) {
        for (int g = 0; g < groups; ++g) {
            const size_t base = (static_cast<size_t>(ni) * c + static_cast<size_t>(g) * cg) * hw;
            const T mu = mean[static_cast<size_t>(ni) * groups + g];
            const T rs = rstd[static_cast<size_t>(ni) * groups + g];

            // group-level sums of dxhat and dxhat*xhat
            double sum_dxh = 0.0, sum_dxh_xh = 0.0;
            for (int cc = 0; cc < cg; ++cc) {
                const T ga = gamma[static_cast<size_t>(g) * cg + cc];
                const T* xc = x.data() + base + static_cast<size_t>(cc) * hw;
                const T* gc = gy.data() + base + static_cast<size_t>(cc) * hw;
                double dga = 0.0, dbe = 0.0;
                for (int i = 0; i < hw; ++i) {
                    const double xh = static_cast<double>(xc[i] - mu) * static_cast<double>(rs);
                    const double dxh = static_cast<double>(gc[i]) * static_cast<double>(ga);
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh;
                    dga += static_cast<double>(gc[i]) * xh;
                    dbe += static_cast<double>(gc[i]);
                }
                ggamma[static_cast<size_t>(g) * cg + cc] += static_cast<T>(dga);
                gbeta[static_cast<size_t>(g) * cg + cc] += static_cast<T>(dbe);
            }
            const double mean_dxh = sum_dxh / static_cast<double>(m);
            const double mean_dxh_xh = sum_dxh_xh / static_cast<double>(m);
            for (int cc = 0; cc < cg; ++cc) {
                const T ga = gamma[static_cast<size_t>(g) * cg + cc];
                const T* xc = x.data() + base + static_cast<size_t>(cc) * hw;
                const T* gc = gy.data() + base + static_cast<size_t>(cc) * hw;
                T* gxc = gx.data() + base + static_cast<size_t>(cc) * hw;
                for (int i = 0; i < hw; ++i) {
                    const double xh = static_cast<double>(xc[i] - mu) * static_cast<double>(rs);
                    const double dxh = static_cast<double>(gc[i]) * static_cast<double>(ga);
                    gxc[i] = static_cast<T>((dxh - mean_dxh - xh * mean_dxh_xh) *
                                            static_cast<double>(rs));
                }
            }
        }
    }
    return gx;
}

template <typename T>
Tensor<T> maxpool2_forward(const Tensor<T>& x, Tensor<uint8_t>& argmax) {
    const int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
    const int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
    const int oh = h / 2, ow = w / 2;
    Tensor<T> y({n, c, oh, ow});
    argmax = Tensor<uint8_t>({n, c, oh, ow});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T best = x.at4(ni, ci, 2 * oy, 2 * ox);
                    uint8_t idx = 0;
                    for (int d = 1; d < 4; ++d) {
                        const T v = x.at4(ni, ci, 2 * oy + (d >> 1), 2 * ox + (d & 1));
                        if (v > best) {
                            best = v;
                            idx = static_cast<uint8_t>(d);
                        }
                    }
                    y.at4(ni, ci, oy, ox) = best;
                    argmax.at4(ni, ci, oy, ox) = idx;
                }
    return y;
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<uint8_t>& argmax, const Tensor<T>& gy, int in_h, int in_w) {
    const int n = static_cast<int>(gy.dim(0)), c = static_cast<int>(gy.dim(1));
    const int oh = static_cast<int>(gy.dim(2)), ow = static_cast<int>(gy.dim(3));
    Tensor<T> gx({n, c, in_h, in_w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const uint8_t d = argmax.at4(ni, ci, oy, ox);
                    gx.at4(ni, ci, 2 * oy + (d >> 1), 2 * ox + (d & 1)) += gy.at4(ni, ci, oy, ox);
                }
    return gx;
}

template <typename T>
Tensor<T> upsample2_forward(const Tensor<T>& x) {
    const int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
    const int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
    Tensor<T> y({n, c, 2 * h, 2 * w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int yy = 0; yy < 2 * h; ++yy)
                for (int xx = 0; xx < 2 * w; ++xx)
                    y.at4(ni, ci, yy, xx) = x.at4(ni, ci, yy / 2, xx / 2);
    return y;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& gy) {
    const int n = static_cast<int>(gy.dim(0)), c = static_cast<int>(gy.dim(1));
    const int oh = static_cast<int>(gy.dim(2)), ow = static_cast<int>(gy.dim(3));
    Tensor<T> gx({n, c, oh / 2, ow / 2});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int yy = 0; yy < oh; ++yy)
                for (int xx = 0; xx < ow; ++xx)
                    gx.at4(ni, ci, yy / 2, xx / 2) += gy.at4(ni, ci, yy, xx);
    return gx;
}

// Concatenates b after a along channels.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    const int n = static_cast<int>(a.dim(0));
    const int ca = static_cast<int>(a.dim(1)), cb = static_cast<int>(b.dim(1));
    const int hw = static_cast<int>(a.dim(2) * a.dim(3));
    Tensor<T> y({n, ca + cb, a.dim(2), a.dim(3)});
    for (int ni = 0; ni < n; ++ni) {
        std::memcpy(y.data() + static_cast<size_t>(ni) * (ca + cb) * hw,
                    a.data() + static_cast<size_t>(ni) * ca * hw, sizeof(T) * ca * hw);
        std::memcpy(y.data() + (static_cast<size_t>(ni) * (ca + cb) + ca) * hw,
                    b.data() + static_cast<size_t>(ni) * cb * hw, sizeof(T) * cb * hw);
    }
    return y;
}

template <typename T>
void split_channels(const Tensor<T>& g, int ca, Tensor<T>& ga, Tensor<T>& gb) {
    const int n = static_cast<int>(g.dim(0));
    const int c = static_cast<int>(g.dim(1));
    const int cb = c - ca;
    const int hw = static_cast<int>(g.dim(2) * g.dim(3));
    ga = Tensor<T>({n, ca, g.dim(2), g.dim(3)});
    gb = Tensor<T>({n, cb, g.dim(2), g.dim(3)});
    for (int ni = 0; ni < n; ++ni) {
        std::memcpy(ga.data() + static_cast<size_t>(ni) * ca * hw,
                    g.data() + static_cast<size_t>(ni) * c * hw, sizeof(T) * ca * hw);
        std::memcpy(gb.data() + static_cast<size_t>(ni) * cb * hw,
                    g.data() + (static_cast<size_t>(ni) * c + ca) * hw, sizeof(T) * cb * hw);
    }
}

}  // namespace roadseg::nn
