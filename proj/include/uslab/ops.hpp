#pragma once
// Neural-net primitives: forward and backward passes as free functions.
// Templated on the scalar type: float runs through the dispatched SIMD
// kernels, double uses plain loops and exists for finite-difference tests
// and metric internals.
//
// Backward functions ACCUMULATE into the destination gradient buffers.

#include <algorithm>
#include <cmath>
#include <vector>

#include "uslab/kernels.hpp"
#include "uslab/tensor.hpp"

namespace uslab::ops {

template <class T>
inline void gemm(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
                 T* c, int ldc, bool acc) {
    if constexpr (std::is_same_v<T, float>)
        kern::ops().sgemm(m, n, k, a, lda, b, ldb, c, ldc, acc);
    else
        kern::dgemm(m, n, k, a, lda, b, ldb, c, ldc, acc);
}

// Scratch buffers reused across calls (im2col etc). Slots avoid aliasing when
// a single op needs several temporaries. Not reentrant across threads by
// design: the training loop is single threaded, parallelism lives inside the
// kernels.
template <class T>
inline T* scratch(int slot, int64_t n) {
    thread_local std::vector<T, AlignedAlloc<T>> bufs[6];
    auto& b = bufs[slot];
    if (static_cast<int64_t>(b.size()) < n) b.resize(static_cast<size_t>(n));
    return b.data();
}

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// ---------------------------------------------------------------------------
// im2col family: col is [C*kh*kw, OH*OW]; col_t is the transpose.

template <class T>
void im2col(const T* in, int C, int H, int W, int kh, int kw, int stride,
            int pad, T* col) {
    const int oh = conv_out_dim(H, kh, stride, pad);
    const int ow = conv_out_dim(W, kw, stride, pad);
    const int64_t on = static_cast<int64_t>(oh) * ow;
    int64_t r = 0;
    for (int c = 0; c < C; ++c) {
        const T* plane = in + static_cast<int64_t>(c) * H * W;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++r) {
                T* dst = col + r * on;
                for (int y = 0; y < oh; ++y) {
                    const int sy = y * stride - pad + ky;
                    if (sy < 0 || sy >= H) {
                        std::fill(dst, dst + ow, T(0));
                        dst += ow;
                        continue;
                    }
                    const T* src = plane + static_cast<int64_t>(sy) * W;
                    for (int x = 0; x < ow; ++x) {
                        const int sx = x * stride - pad + kx;
                        *dst++ = (sx >= 0 && sx < W) ? src[sx] : T(0);
                    }
                }
            }
        }
    }
}

template <class T>
void im2col_t(const T* in, int C, int H, int W, int kh, int kw, int stride,
              int pad, T* col_t) {
    const int oh = conv_out_dim(H, kh, stride, pad);
    const int ow = conv_out_dim(W, kw, stride, pad);
    const int64_t K = static_cast<int64_t>(C) * kh * kw;
    int64_t r = 0;
    for (int c = 0; c < C; ++c) {
        const T* plane = in + static_cast<int64_t>(c) * H * W;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++r) {
                T* dst = col_t + r;  // stride K between consecutive locations
                for (int y = 0; y < oh; ++y) {
                    const int sy = y * stride - pad + ky;
                    for (int x = 0; x < ow; ++x, dst += K) {
                        const int sx = x * stride - pad + kx;
                        *dst = (sy >= 0 && sy < H && sx >= 0 && sx < W)
                                   ? plane[static_cast<int64_t>(sy) * W + sx]
                                   : T(0);
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_acc(const T* col, int C, int H, int W, int kh, int kw, int stride,
                int pad, T* in_grad) {
    const int oh = conv_out_dim(H, kh, stride, pad);
    const int ow = conv_out_dim(W, kw, stride, pad);
    int64_t r = 0;
    for (int c = 0; c < C; ++c) {
        T* plane = in_grad + static_cast<int64_t>(c) * H * W;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++r) {
                const T* src = col + r * static_cast<int64_t>(oh) * ow;
                for (int y = 0; y < oh; ++y) {
                    const int sy = y * stride - pad + ky;
                    if (sy < 0 || sy >= H) {
                        src += ow;
                        continue;
                    }
                    T* dst = plane + static_cast<int64_t>(sy) * W;
                    for (int x = 0; x < ow; ++x) {
                        const int sx = x * stride - pad + kx;
                        if (sx >= 0 && sx < W) dst[sx] += src[x];
                    }
                    src += ow;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Convolution. Weights are [OC, C, kh, kw]; bias may be null.

template <class T>
void conv2d_fwd(const Tensor<T>& in, const Tensor<T>& w, const T* bias,
                int stride, int pad, Tensor<T>& out) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int OC = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = conv_out_dim(H, kh, stride, pad);
    const int ow = conv_out_dim(W, kw, stride, pad);
    const int64_t K = static_cast<int64_t>(C) * kh * kw;
    const int64_t N = static_cast<int64_t>(oh) * ow;
    T* col = scratch<T>(0, K * N);
    im2col(in.data(), C, H, W, kh, kw, stride, pad, col);
    gemm<T>(OC, static_cast<int>(N), static_cast<int>(K), w.data(),
            static_cast<int>(K), col, static_cast<int>(N), out.data(),
            static_cast<int>(N), false);
    if (bias) {
        for (int oc = 0; oc < OC; ++oc) {
            T* row = out.data() + static_cast<int64_t>(oc) * N;
            const T b = bias[oc];
            for (int64_t i = 0; i < N; ++i) row[i] += b;
        }
    }
}

template <class T>
void conv2d_bwd(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& dout,
                int stride, int pad, Tensor<T>* din, Tensor<T>* dw, T* dbias) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int OC = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = conv_out_dim(H, kh, stride, pad);
    const int ow = conv_out_dim(W, kw, stride, pad);
    const int64_t K = static_cast<int64_t>(C) * kh * kw;
    const int64_t N = static_cast<int64_t>(oh) * ow;
    if (dw) {
        T* col_t = scratch<T>(1, N * K);
        im2col_t(in.data(), C, H, W, kh, kw, stride, pad, col_t);
        gemm<T>(OC, static_cast<int>(K), static_cast<int>(N), dout.data(),
                static_cast<int>(N), col_t, static_cast<int>(K), dw->data(),
                static_cast<int>(K), true);
    }
    if (dbias) {
        for (int oc = 0; oc < OC; ++oc) {
            const T* row = dout.data() + static_cast<int64_t>(oc) * N;
            T s = 0;
            for (int64_t i = 0; i < N; ++i) s += row[i];
            dbias[oc] += s;
        }
    }
    if (din) {
        T* wt = scratch<T>(2, K * OC);
        for (int oc = 0; oc < OC; ++oc)
            for (int64_t k = 0; k < K; ++k)
                wt[k * OC + oc] = w.data()[static_cast<int64_t>(oc) * K + k];
        T* dcol = scratch<T>(3, K * N);
        gemm<T>(static_cast<int>(K), static_cast<int>(N), OC, wt, OC,
                dout.data(), static_cast<int>(N), dcol, static_cast<int>(N),
                false);
        col2im_acc(dcol, C, H, W, kh, kw, stride, pad, din->data());
    }
}

// ---------------------------------------------------------------------------
// Instance normalization (no affine parameters).

template <class T>
void instnorm_fwd(const Tensor<T>& in, T eps, Tensor<T>& out,
                  std::vector<T>& mean, std::vector<T>& invstd) {
    const int C = in.dim(0);
    const int64_t n = static_cast<int64_t>(in.dim(1)) * in.dim(2);
    mean.resize(C);
    invstd.resize(C);
    for (int c = 0; c < C; ++c) {
        const T* x = in.data() + c * n;
        double s, q;
        if constexpr (std::is_same_v<T, float>) {
            kern::ops().sum_sumsq(x, n, &s, &q);
        } else {
            s = q = 0;
            for (int64_t i = 0; i < n; ++i) {
                s += x[i];
                q += x[i] * x[i];
            }
        }
        const double m = s / static_cast<double>(n);
        const double var =
            std::max(q / static_cast<double>(n) - m * m, 0.0);
        const T is = static_cast<T>(1.0 / std::sqrt(var + eps));
        mean[c] = static_cast<T>(m);
        invstd[c] = is;
        T* y = out.data() + c * n;
        const T mc = mean[c];
        for (int64_t i = 0; i < n; ++i) y[i] = (x[i] - mc) * is;
    }
}

template <class T>
void instnorm_bwd(const Tensor<T>& in, const std::vector<T>& mean,
                  const std::vector<T>& invstd, const Tensor<T>& dout,
                  Tensor<T>& din) {
    const int C = in.dim(0);
    const int64_t n = static_cast<int64_t>(in.dim(1)) * in.dim(2);
    for (int c = 0; c < C; ++c) {
        const T* x = in.data() + c * n;
        const T* dy = dout.data() + c * n;
        T* dx = din.data() + c * n;
        const T mc = mean[c], is = invstd[c];
        double sum_dy = 0, sum_dy_xhat = 0;
        for (int64_t i = 0; i < n; ++i) {
            const double xh = (x[i] - mc) * is;
            sum_dy += dy[i];
            sum_dy_xhat += dy[i] * xh;
        }
        const T m_dy = static_cast<T>(sum_dy / static_cast<double>(n));
        const T m_dy_xhat =
            static_cast<T>(sum_dy_xhat / static_cast<double>(n));
        for (int64_t i = 0; i < n; ++i) {
            const T xh = (x[i] - mc) * is;
            dx[i] += is * (dy[i] - m_dy - xh * m_dy_xhat);
        }
    }
}

// ---------------------------------------------------------------------------
// Activations.

template <class T>
void lrelu_fwd(const Tensor<T>& in, T alpha, Tensor<T>& out) {
    if constexpr (std::is_same_v<T, float>) {
        kern::ops().lrelu_fwd(in.numel(), alpha, in.data(), out.data());
    } else {
        for (int64_t i = 0; i < in.numel(); ++i)
            out[i] = in[i] > 0 ? in[i] : alpha * in[i];
    }
}

template <class T>
void lrelu_bwd(const Tensor<T>& in, T alpha, const Tensor<T>& dout,
               Tensor<T>& din) {
    if constexpr (std::is_same_v<T, float>) {
        kern::ops().lrelu_bwd_acc(in.numel(), alpha, in.data(), dout.data(),
                                  din.data());
    } else {
        for (int64_t i = 0; i < in.numel(); ++i)
            din[i] += dout[i] * (in[i] > 0 ? T(1) : alpha);
    }
}

template <class T>
void tanh_fwd(const Tensor<T>& in, Tensor<T>& out) {
    for (int64_t i = 0; i < in.numel(); ++i) out[i] = std::tanh(in[i]);
}

template <class T>
void tanh_bwd(const Tensor<T>& out, const Tensor<T>& dout, Tensor<T>& din) {
    for (int64_t i = 0; i < out.numel(); ++i)
        din[i] += dout[i] * (T(1) - out[i] * out[i]);
}

// ---------------------------------------------------------------------------
// Bilinear x2 upsampling (align_corners = false).

template <class T>
void upsample2x_fwd(const Tensor<T>& in, Tensor<T>& out) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int OH = 2 * H, OW = 2 * W;
    for (int c = 0; c < C; ++c) {
        const T* src = in.data() + static_cast<int64_t>(c) * H * W;
        T* dst = out.data() + static_cast<int64_t>(c) * OH * OW;
        for (int y = 0; y < OH; ++y) {
            const T sy = (y + T(0.5)) / 2 - T(0.5);
            const int y0r = static_cast<int>(std::floor(sy));
            const T wy = sy - y0r;
            const int y0 = std::clamp(y0r, 0, H - 1);
            const int y1 = std::clamp(y0r + 1, 0, H - 1);
            for (int x = 0; x < OW; ++x) {
                const T sx = (x + T(0.5)) / 2 - T(0.5);
                const int x0r = static_cast<int>(std::floor(sx));
                const T wx = sx - x0r;
                const int x0 = std::clamp(x0r, 0, W - 1);
                const int x1 = std::clamp(x0r + 1, 0, W - 1);
                dst[static_cast<int64_t>(y) * OW + x] =
                    (1 - wy) * ((1 - wx) * src[static_cast<int64_t>(y0) * W +
                                               x0] +
                                wx * src[static_cast<int64_t>(y0) * W + x1]) +
                    wy * ((1 - wx) * src[static_cast<int64_t>(y1) * W + x0] +
                          wx * src[static_cast<int64_t>(y1) * W + x1]);
            }
        }
    }
}

template <class T>
void upsample2x_bwd(const Tensor<T>& dout, int H, int W, Tensor<T>& din) {
    const int C = din.dim(0);
    const int OH = 2 * H, OW = 2 * W;
    for (int c = 0; c < C; ++c) {
        const T* dy = dout.data() + static_cast<int64_t>(c) * OH * OW;
        T* dx = din.data() + static_cast<int64_t>(c) * H * W;
        for (int y = 0; y < OH; ++y) {
            const T sy = (y + T(0.5)) / 2 - T(0.5);
            const int y0r = static_cast<int>(std::floor(sy));
            const T wy = sy - y0r;
            const int y0 = std::clamp(y0r, 0, H - 1);
            const int y1 = std::clamp(y0r + 1, 0, H - 1);
            for (int x = 0; x < OW; ++x) {
                const T sx = (x + T(0.5)) / 2 - T(0.5);
                const int x0r = static_cast<int>(std::floor(sx));
                const T wx = sx - x0r;
                const int x0 = std::clamp(x0r, 0, W - 1);
                const int x1 = std::clamp(x0r + 1, 0, W - 1);
                const T g = dy[static_cast<int64_t>(y) * OW + x];
                dx[static_cast<int64_t>(y0) * W + x0] += (1 - wy) * (1 - wx) * g;
                dx[static_cast<int64_t>(y0) * W + x1] += (1 - wy) * wx * g;
                dx[static_cast<int64_t>(y1) * W + x0] += wy * (1 - wx) * g;
                dx[static_cast<int64_t>(y1) * W + x1] += wy * wx * g;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Reflection padding (no edge repeat) and cropping.

struct PadSpec {
    int left = 0, right = 0, top = 0, bottom = 0;
};

inline int reflect_index(int i, int n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
    return i;
}

template <class T>
void reflect_pad_fwd(const Tensor<T>& in, const PadSpec& p, Tensor<T>& out) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int OH = H + p.top + p.bottom, OW = W + p.left + p.right;
    for (int c = 0; c < C; ++c) {
        const T* src = in.data() + static_cast<int64_t>(c) * H * W;
        T* dst = out.data() + static_cast<int64_t>(c) * OH * OW;
        for (int y = 0; y < OH; ++y) {
            const int sy = reflect_index(y - p.top, H);
            for (int x = 0; x < OW; ++x) {
                const int sx = reflect_index(x - p.left, W);
                dst[static_cast<int64_t>(y) * OW + x] =
                    src[static_cast<int64_t>(sy) * W + sx];
            }
        }
    }
}

template <class T>
void reflect_pad_bwd(const Tensor<T>& dout, const PadSpec& p, Tensor<T>& din) {
    const int C = din.dim(0), H = din.dim(1), W = din.dim(2);
    const int OH = H + p.top + p.bottom, OW = W + p.left + p.right;
    for (int c = 0; c < C; ++c) {
        const T* dy = dout.data() + static_cast<int64_t>(c) * OH * OW;
        T* dx = din.data() + static_cast<int64_t>(c) * H * W;
        for (int y = 0; y < OH; ++y) {
            const int sy = reflect_index(y - p.top, H);
            for (int x = 0; x < OW; ++x) {
                const int sx = reflect_index(x - p.left, W);
                dx[static_cast<int64_t>(sy) * W + sx] +=
                    dy[static_cast<int64_t>(y) * OW + x];
            }
        }
    }
}

template <class T>
void crop_fwd(const Tensor<T>& in, int top, int left, int h, int w,
              Tensor<T>& out) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    (void)H;
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < h; ++y)
            std::copy_n(in.data() + (static_cast<int64_t>(c) * H + top + y) *
                                        W +
                            left,
                        w,
                        out.data() + (static_cast<int64_t>(c) * h + y) * w);
}

template <class T>
void crop_bwd(const Tensor<T>& dout, int top, int left, Tensor<T>& din) {
    const int C = din.dim(0), H = din.dim(1), W = din.dim(2);
    const int h = dout.dim(1), w = dout.dim(2);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < h; ++y) {
            const T* src = dout.data() + (static_cast<int64_t>(c) * h + y) * w;
            T* dst =
                din.data() + (static_cast<int64_t>(c) * H + top + y) * W + left;
            for (int x = 0; x < w; ++x) dst[x] += src[x];
        }
}

// ---------------------------------------------------------------------------
// Linear layer on row-stacked features: in [S, Cin], w [Cout, Cin].

template <class T>
void linear_fwd(const Tensor<T>& in, const Tensor<T>& w, const T* bias,
                Tensor<T>& out) {
    const int S = in.dim(0), Cin = in.dim(1), Cout = w.dim(0);
    T* wt = scratch<T>(4, static_cast<int64_t>(Cin) * Cout);
    for (int o = 0; o < Cout; ++o)
        for (int i = 0; i < Cin; ++i)
            wt[static_cast<int64_t>(i) * Cout + o] =
                w.data()[static_cast<int64_t>(o) * Cin + i];
    gemm<T>(S, Cout, Cin, in.data(), Cin, wt, Cout, out.data(), Cout, false);
    if (bias)
        for (int s = 0; s < S; ++s)
            for (int o = 0; o < Cout; ++o)
                out.data()[static_cast<int64_t>(s) * Cout + o] += bias[o];
}

template <class T>
void linear_bwd(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& dout,
                Tensor<T>* din, Tensor<T>* dw, T* dbias) {
    const int S = in.dim(0), Cin = in.dim(1), Cout = w.dim(0);
    if (din)
        gemm<T>(S, Cin, Cout, dout.data(), Cout, w.data(), Cin, din->data(),
                Cin, true);
    if (dw) {
        T* dyt = scratch<T>(4, static_cast<int64_t>(Cout) * S);
        for (int s = 0; s < S; ++s)
            for (int o = 0; o < Cout; ++o)
                dyt[static_cast<int64_t>(o) * S + s] =
                    dout.data()[static_cast<int64_t>(s) * Cout + o];
        gemm<T>(Cout, Cin, S, dyt, S, in.data(), Cin, dw->data(), Cin, true);
    }
    if (dbias)
        for (int s = 0; s < S; ++s)
            for (int o = 0; o < Cout; ++o)
                dbias[o] += dout.data()[static_cast<int64_t>(s) * Cout + o];
}

// ---------------------------------------------------------------------------
// Row-wise L2 normalization: in [S, C].

template <class T>
void l2norm_rows_fwd(const Tensor<T>& in, Tensor<T>& out,
                     std::vector<T>& norms) {
    const int S = in.dim(0), C = in.dim(1);
    norms.resize(S);
    for (int s = 0; s < S; ++s) {
        const T* v = in.data() + static_cast<int64_t>(s) * C;
        double q = 0;
        for (int i = 0; i < C; ++i) q += static_cast<double>(v[i]) * v[i];
        const T nrm = static_cast<T>(std::sqrt(std::max(q, 1e-24)));
        norms[s] = nrm;
        T* o = out.data() + static_cast<int64_t>(s) * C;
        for (int i = 0; i < C; ++i) o[i] = v[i] / nrm;
    }
}

template <class T>
void l2norm_rows_bwd(const Tensor<T>& out, const std::vector<T>& norms,
                     const Tensor<T>& dout, Tensor<T>& din) {
    const int S = out.dim(0), C = out.dim(1);
    for (int s = 0; s < S; ++s) {
        const T* z = out.data() + static_cast<int64_t>(s) * C;
        const T* dz = dout.data() + static_cast<int64_t>(s) * C;
        T* dv = din.data() + static_cast<int64_t>(s) * C;
        double zd = 0;
        for (int i = 0; i < C; ++i) zd += static_cast<double>(z[i]) * dz[i];
        const T proj = static_cast<T>(zd);
        for (int i = 0; i < C; ++i) dv[i] += (dz[i] - z[i] * proj) / norms[s];
    }
}

// ---------------------------------------------------------------------------
// Gather feature vectors at spatial locations: in [C,H,W] -> out [S,C].

template <class T>
void gather_rows_fwd(const Tensor<T>& in, const std::vector<int>& locs,
                     Tensor<T>& out) {
    const int C = in.dim(0);
    const int64_t hw = static_cast<int64_t>(in.dim(1)) * in.dim(2);
    const int S = static_cast<int>(locs.size());
    for (int s = 0; s < S; ++s)
        for (int c = 0; c < C; ++c)
            out.data()[static_cast<int64_t>(s) * C + c] =
                in.data()[c * hw + locs[s]];
}

template <class T>
void gather_rows_bwd(const Tensor<T>& dout, const std::vector<int>& locs,
                     Tensor<T>& din) {
    const int C = din.dim(0);
    const int64_t hw = static_cast<int64_t>(din.dim(1)) * din.dim(2);
    const int S = static_cast<int>(locs.size());
    for (int s = 0; s < S; ++s)
        for (int c = 0; c < C; ++c)
            din.data()[c * hw + locs[s]] +=
                dout.data()[static_cast<int64_t>(s) * C + c];
}

}  // namespace uslab::ops
