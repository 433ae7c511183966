#pragma once

// Data-parallel kernels behind the graph ops. Every parallel loop assigns each
// output element to exactly one thread and accumulates in a fixed serial
// order, so results are bit-identical for any thread count. A plain serial
// reference of each kernel lives in kern::ref and is used by the equivalence
// tests and the benchmark tool.

#include <omp.h>

#include <cstddef>
#include <vector>

#include "eegad/nn/tensor.hpp"

namespace eegad::nn::kern {

struct ConvDims {
    std::size_t B, C, H, W;       // input
    std::size_t OC, KH, KW;       // kernel
    std::size_t SH, SW, PH, PW;   // stride / zero padding
    std::size_t OH, OW;           // output
    std::size_t HP, WP;           // padded input

    static ConvDims make(std::size_t B, std::size_t C, std::size_t H, std::size_t W,
                         std::size_t OC, std::size_t KH, std::size_t KW, std::size_t SH,
                         std::size_t SW, std::size_t PH, std::size_t PW) {
        ConvDims d{B, C, H, W, OC, KH, KW, SH, SW, PH, PW, 0, 0, 0, 0};
        d.HP = H + 2 * PH;
        d.WP = W + 2 * PW;
        if (d.HP < KH || d.WP < KW) {
            throw ConfigError("conv: kernel larger than (padded) input");
        }
        d.OH = (d.HP - KH) / SH + 1;
        d.OW = (d.WP - KW) / SW + 1;
        return d;
    }
};

template <typename T>
std::vector<T> pad_input(const T* in, const ConvDims& d) {
    std::vector<T> p(d.B * d.C * d.HP * d.WP, T(0));
    const auto planes = static_cast<std::int64_t>(d.B * d.C);
#pragma omp parallel for schedule(static)
    for (std::int64_t bc = 0; bc < planes; ++bc) {
        const T* src = in + static_cast<std::size_t>(bc) * d.H * d.W;
        T* dst = p.data() + static_cast<std::size_t>(bc) * d.HP * d.WP;
        for (std::size_t h = 0; h < d.H; ++h) {
            T* row = dst + (h + d.PH) * d.WP + d.PW;
            const T* srow = src + h * d.W;
            for (std::size_t w = 0; w < d.W; ++w) row[w] = srow[w];
        }
    }
    return p;
}

// out[b,oc,oh,ow] = bias[oc] + sum_{ic,kh,kw} w[oc,ic,kh,kw] * inp[b,ic,oh*SH+kh,ow*SW+kw]
template <typename T>
void conv2d_forward(const T* inp, const T* w, const T* bias, T* out, const ConvDims& d) {
    const auto work = static_cast<std::int64_t>(d.B * d.OC);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < work; ++t) {
        const std::size_t b = static_cast<std::size_t>(t) / d.OC;
        const std::size_t oc = static_cast<std::size_t>(t) % d.OC;
        for (std::size_t oh = 0; oh < d.OH; ++oh) {
            T* __restrict orow = out + ((b * d.OC + oc) * d.OH + oh) * d.OW;
            const T bv = bias ? bias[oc] : T(0);
            for (std::size_t ow = 0; ow < d.OW; ++ow) orow[ow] = bv;
            for (std::size_t ic = 0; ic < d.C; ++ic) {
                for (std::size_t kh = 0; kh < d.KH; ++kh) {
                    const T* __restrict irow =
                        inp + ((b * d.C + ic) * d.HP + oh * d.SH + kh) * d.WP;
                    const T* __restrict wrow = w + ((oc * d.C + ic) * d.KH + kh) * d.KW;
                    if (d.SW == 1) {
                        for (std::size_t kw = 0; kw < d.KW; ++kw) {
                            const T wv = wrow[kw];
                            const T* __restrict src = irow + kw;
                            for (std::size_t ow = 0; ow < d.OW; ++ow) {
                                orow[ow] += wv * src[ow];
                            }
                        }
                    } else {
                        for (std::size_t kw = 0; kw < d.KW; ++kw) {
                            const T wv = wrow[kw];
                            const T* __restrict src = irow + kw;
                            for (std::size_t ow = 0; ow < d.OW; ++ow) {
                                orow[ow] += wv * src[ow * d.SW];
                            }
                        }
                    }
                }
            }
        }
    }
}

// din_padded[b,ic,oh*SH+kh,ow*SW+kw] += w[oc,ic,kh,kw] * dout[b,oc,oh,ow]
template <typename T>
void conv2d_backward_data(const T* dout, const T* w, T* din_padded, const ConvDims& d) {
    const auto work = static_cast<std::int64_t>(d.B * d.C);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < work; ++t) {
        const std::size_t b = static_cast<std::size_t>(t) / d.C;
        const std::size_t ic = static_cast<std::size_t>(t) % d.C;
        for (std::size_t oc = 0; oc < d.OC; ++oc) {
            for (std::size_t oh = 0; oh < d.OH; ++oh) {
                const T* __restrict grow = dout + ((b * d.OC + oc) * d.OH + oh) * d.OW;
                for (std::size_t kh = 0; kh < d.KH; ++kh) {
                    T* __restrict drow =
                        din_padded + ((b * d.C + ic) * d.HP + oh * d.SH + kh) * d.WP;
                    const T* __restrict wrow = w + ((oc * d.C + ic) * d.KH + kh) * d.KW;
                    for (std::size_t kw = 0; kw < d.KW; ++kw) {
                        const T wv = wrow[kw];
                        T* __restrict dst = drow + kw;
                        if (d.SW == 1) {
                            for (std::size_t ow = 0; ow < d.OW; ++ow) dst[ow] += wv * grow[ow];
                        } else {
                            for (std::size_t ow = 0; ow < d.OW; ++ow) {
                                dst[ow * d.SW] += wv * grow[ow];
                            }
                        }
                    }
                }
            }
        }
    }
}

// dw[oc,ic,kh,kw] = sum_{b,oh,ow} inp[b,ic,oh*SH+kh,ow*SW+kw] * dout[b,oc,oh,ow]
// db[oc]          = sum_{b,oh,ow} dout[b,oc,oh,ow]
template <typename T>
void conv2d_backward_weights(const T* inp, const T* dout, T* dw, T* db, const ConvDims& d) {
    const auto work = static_cast<std::int64_t>(d.OC);
#pragma omp parallel for schedule(static)
    for (std::int64_t toc = 0; toc < work; ++toc) {
        const auto oc = static_cast<std::size_t>(toc);
        T bsum = T(0);
        for (std::size_t b = 0; b < d.B; ++b) {
            for (std::size_t oh = 0; oh < d.OH; ++oh) {
                const T* __restrict grow = dout + ((b * d.OC + oc) * d.OH + oh) * d.OW;
                for (std::size_t ow = 0; ow < d.OW; ++ow) bsum += grow[ow];
                for (std::size_t ic = 0; ic < d.C; ++ic) {
                    for (std::size_t kh = 0; kh < d.KH; ++kh) {
                        const T* __restrict irow =
                            inp + ((b * d.C + ic) * d.HP + oh * d.SH + kh) * d.WP;
                        T* __restrict wrow = dw + ((oc * d.C + ic) * d.KH + kh) * d.KW;
                        for (std::size_t kw = 0; kw < d.KW; ++kw) {
                            const T* __restrict src = irow + kw;
                            T acc = T(0);
                            if (d.SW == 1) {
                                for (std::size_t ow = 0; ow < d.OW; ++ow) {
                                    acc += src[ow] * grow[ow];
                                }
                            } else {
                                for (std::size_t ow = 0; ow < d.OW; ++ow) {
                                    acc += src[ow * d.SW] * grow[ow];
                                }
                            }
                            wrow[kw] += acc;
                        }
                    }
                }
            }
        }
        if (db) db[oc] += bsum;
    }
}

// Crops the padded gradient back to B x C x H x W and adds into din.
template <typename T>
void unpad_accum(const T* din_padded, T* din, const ConvDims& d) {
    const auto planes = static_cast<std::int64_t>(d.B * d.C);
#pragma omp parallel for schedule(static)
    for (std::int64_t bc = 0; bc < planes; ++bc) {
        const T* src = din_padded + static_cast<std::size_t>(bc) * d.HP * d.WP;
        T* dst = din + static_cast<std::size_t>(bc) * d.H * d.W;
        for (std::size_t h = 0; h < d.H; ++h) {
            const T* row = src + (h + d.PH) * d.WP + d.PW;
            T* drow = dst + h * d.W;
            for (std::size_t w = 0; w < d.W; ++w) drow[w] += row[w];
        }
    }
}

// Per-channel batch statistics over (B, H, W); biased variance.
template <typename T>
void bn_stats(const T* in, std::size_t B, std::size_t C, std::size_t HW, T* mean, T* var) {
    const auto work = static_cast<std::int64_t>(C);
#pragma omp parallel for schedule(static)
    for (std::int64_t tc = 0; tc < work; ++tc) {
        const auto c = static_cast<std::size_t>(tc);
        T sum = T(0), sq = T(0);
        for (std::size_t b = 0; b < B; ++b) {
            const T* __restrict row = in + (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
                sum += row[i];
                sq += row[i] * row[i];
            }
        }
        const T n = static_cast<T>(B * HW);
        const T m = sum / n;
        mean[c] = m;
        var[c] = sq / n - m * m;
    }
}

template <typename T>
void bn_apply(const T* in, const T* mean, const T* invstd, const T* gamma, const T* beta, T* out,
              std::size_t B, std::size_t C, std::size_t HW) {
    const auto work = static_cast<std::int64_t>(B * C);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < work; ++t) {
        const std::size_t c = static_cast<std::size_t>(t) % C;
        const T* __restrict src = in + static_cast<std::size_t>(t) * HW;
        T* __restrict dst = out + static_cast<std::size_t>(t) * HW;
        const T m = mean[c], is = invstd[c], g = gamma[c], bt = beta[c];
        for (std::size_t i = 0; i < HW; ++i) dst[i] = (src[i] - m) * is * g + bt;
    }
}

// Training-mode backward through the batch statistics.
template <typename T>
void bn_backward(const T* in, const T* dout, const T* mean, const T* invstd, const T* gamma,
                 T* din, T* dgamma, T* dbeta, std::size_t B, std::size_t C, std::size_t HW) {
    const auto work = static_cast<std::int64_t>(C);
#pragma omp parallel for schedule(static)
    for (std::int64_t tc = 0; tc < work; ++tc) {
        const auto c = static_cast<std::size_t>(tc);
        const T m = mean[c], is = invstd[c];
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (std::size_t b = 0; b < B; ++b) {
            const T* __restrict x = in + (b * C + c) * HW;
            const T* __restrict dy = dout + (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * (x[i] - m) * is;
            }
        }
        dgamma[c] += sum_dy_xhat;
        dbeta[c] += sum_dy;
        const T n = static_cast<T>(B * HW);
        const T g = gamma[c];
        for (std::size_t b = 0; b < B; ++b) {
            const T* __restrict x = in + (b * C + c) * HW;
            const T* __restrict dy = dout + (b * C + c) * HW;
            T* __restrict dx = din + (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
                const T xhat = (x[i] - m) * is;
                dx[i] += g * is * (dy[i] - sum_dy / n - xhat * sum_dy_xhat / n);
            }
        }
    }
}

template <typename T>
void relu_forward(const T* in, T* out, std::size_t n) {
    const auto work = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < work; ++i) {
        out[i] = in[i] > T(0) ? in[i] : T(0);
    }
}

template <typename T>
void relu_backward(const T* in, const T* dout, T* din, std::size_t n) {
    const auto work = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < work; ++i) {
        if (in[i] > T(0)) din[i] += dout[i];
    }
}

// out[b, d] = bias[d ? no: o] ... out[b,o] = bias[o] + sum_d in[b,d] * w[o,d]
template <typename T>
void linear_forward(const T* in, const T* w, const T* bias, T* out, std::size_t B, std::size_t D,
                    std::size_t O) {
    const auto work = static_cast<std::int64_t>(B);
#pragma omp parallel for schedule(static)
    for (std::int64_t tb = 0; tb < work; ++tb) {
        const auto b = static_cast<std::size_t>(tb);
        const T* __restrict x = in + b * D;
        T* __restrict y = out + b * O;
        for (std::size_t o = 0; o < O; ++o) {
            const T* __restrict wr = w + o * D;
            T acc = bias ? bias[o] : T(0);
            for (std::size_t d = 0; d < D; ++d) acc += x[d] * wr[d];
            y[o] = acc;
        }
    }
}

template <typename T>
void linear_backward_data(const T* dout, const T* w, T* din, std::size_t B, std::size_t D,
                          std::size_t O) {
    const auto work = static_cast<std::int64_t>(B);
#pragma omp parallel for schedule(static)
    for (std::int64_t tb = 0; tb < work; ++tb) {
        const auto b = static_cast<std::size_t>(tb);
        const T* __restrict dy = dout + b * O;
        T* __restrict dx = din + b * D;
        for (std::size_t o = 0; o < O; ++o) {
            const T g = dy[o];
            const T* __restrict wr = w + o * D;
            for (std::size_t d = 0; d < D; ++d) dx[d] += g * wr[d];
        }
    }
}

template <typename T>
void linear_backward_weights(const T* in, const T* dout, T* dw, T* db, std::size_t B,
                             std::size_t D, std::size_t O) {
    const auto work = static_cast<std::int64_t>(O);
#pragma omp parallel for schedule(static)
    for (std::int64_t to = 0; to < work; ++to) {
        const auto o = static_cast<std::size_t>(to);
        T* __restrict wr = dw + o * D;
        T bsum = T(0);
        for (std::size_t b = 0; b < B; ++b) {
            const T g = dout[b * O + o];
            bsum += g;
            const T* __restrict x = in + b * D;
            for (std::size_t d = 0; d < D; ++d) wr[d] += g * x[d];
        }
        if (db) db[o] += bsum;
    }
}

// ---------------------------------------------------------------------------
// Plain serial reference implementations, used by the equivalence tests and
// the kernel benchmark.
// ---------------------------------------------------------------------------
namespace ref {

template <typename T>
void conv2d_forward(const T* inp, const T* w, const T* bias, T* out, const ConvDims& d) {
    for (std::size_t b = 0; b < d.B; ++b)
        for (std::size_t oc = 0; oc < d.OC; ++oc)
            for (std::size_t oh = 0; oh < d.OH; ++oh)
                for (std::size_t ow = 0; ow < d.OW; ++ow) {
                    T acc = bias ? bias[oc] : T(0);
                    for (std::size_t ic = 0; ic < d.C; ++ic)
                        for (std::size_t kh = 0; kh < d.KH; ++kh)
                            for (std::size_t kw = 0; kw < d.KW; ++kw)
                                acc += w[((oc * d.C + ic) * d.KH + kh) * d.KW + kw] *
                                       inp[((b * d.C + ic) * d.HP + oh * d.SH + kh) * d.WP +
                                           ow * d.SW + kw];
                    out[((b * d.OC + oc) * d.OH + oh) * d.OW + ow] = acc;
                }
}

template <typename T>
void conv2d_backward_data(const T* dout, const T* w, T* din_padded, const ConvDims& d) {
    for (std::size_t b = 0; b < d.B; ++b)
        for (std::size_t oc = 0; oc < d.OC; ++oc)
            for (std::size_t oh = 0; oh < d.OH; ++oh)
                for (std::size_t ow = 0; ow < d.OW; ++ow) {
                    const T g = dout[((b * d.OC + oc) * d.OH + oh) * d.OW + ow];
                    for (std::size_t ic = 0; ic < d.C; ++ic)
                        for (std::size_t kh = 0; kh < d.KH; ++kh)
                            for (std::size_t kw = 0; kw < d.KW; ++kw)
                                din_padded[((b * d.C + ic) * d.HP + oh * d.SH + kh) * d.WP +
                                           ow * d.SW + kw] +=
                                    g * w[((oc * d.C + ic) * d.KH + kh) * d.KW + kw];
                }
}

template <typename T>
void conv2d_backward_weights(const T* inp, const T* dout, T* dw, T* db, const ConvDims& d) {
    for (std::size_t b = 0; b < d.B; ++b)
        for (std::size_t oc = 0; oc < d.OC; ++oc)
            for (std::size_t oh = 0; oh < d.OH; ++oh)
                for (std::size_t ow = 0; ow < d.OW; ++ow) {
                    const T g = dout[((b * d.OC + oc) * d.OH + oh) * d.OW + ow];
                    if (db) db[oc] += g;
                    for (std::size_t ic = 0; ic < d.C; ++ic)
                        for (std::size_t kh = 0; kh < d.KH; ++kh)
                            for (std::size_t kw = 0; kw < d.KW; ++kw)
                                dw[((oc * d.C + ic) * d.KH + kh) * d.KW + kw] +=
                                    g * inp[((b * d.C + ic) * d.HP + oh * d.SH + kh) * d.WP +
                                            ow * d.SW + kw];
                }
}

template <typename T>
void linear_forward(const T* in, const T* w, const T* bias, T* out, std::size_t B, std::size_t D,
                    std::size_t O) {
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < O; ++o) {
            T acc = bias ? bias[o] : T(0);
            for (std::size_t d = 0; d < D; ++d) acc += in[b * D + d] * w[o * D + d];
            out[b * O + o] = acc;
        }
}

template <typename T>
void bn_stats(const T* in, std::size_t B, std::size_t C, std::size_t HW, T* mean, T* var) {
    for (std::size_t c = 0; c < C; ++c) {
        T sum = T(0), sq = T(0);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < HW; ++i) {
                const T x = in[(b * C + c) * HW + i];
                sum += x;
                sq += x * x;
            }
        const T n = static_cast<T>(B * HW);
        mean[c] = sum / n;
        var[c] = sq / n - mean[c] * mean[c];
    }
}

}  // namespace ref

}  // namespace eegad::nn::kern
