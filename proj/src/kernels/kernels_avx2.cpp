// AVX2+FMA kernel variants. Compiled with per-function target attributes so
// the TU builds on any x86-64 host; dispatch guards execution.

#include <immintrin.h>

#include <cmath>

#include "gemm_driver.hpp"
#include "uslab/kernels.hpp"

namespace uslab::kern {
namespace {

#define USLAB_AVX2 __attribute__((target("avx2,fma")))

// 6x16 microkernel: tile = A_panel(kc x 6) * B_panel(kc x 16).
USLAB_AVX2 void mk_6x16(int kc, const float* a, const float* b, float* tile) {
    __m256 acc[6][2];
    for (int m = 0; m < 6; ++m) {
        acc[m][0] = _mm256_setzero_ps();
        acc[m][1] = _mm256_setzero_ps();
    }
    for (int k = 0; k < kc; ++k) {
        const __m256 b0 = _mm256_loadu_ps(b);
        const __m256 b1 = _mm256_loadu_ps(b + 8);
        b += 16;
        for (int m = 0; m < 6; ++m) {
            const __m256 am = _mm256_broadcast_ss(a + m);
            acc[m][0] = _mm256_fmadd_ps(am, b0, acc[m][0]);
            acc[m][1] = _mm256_fmadd_ps(am, b1, acc[m][1]);
        }
        a += 6;
    }
    for (int m = 0; m < 6; ++m) {
        _mm256_store_ps(tile + m * 16, acc[m][0]);
        _mm256_store_ps(tile + m * 16 + 8, acc[m][1]);
    }
}

USLAB_AVX2 void sgemm_avx2(int M, int N, int K, const float* A, int lda,
                           const float* B, int ldb, float* C, int ldc,
                           bool accumulate) {
    detail::gemm_blocked<6, 16, mk_6x16>(M, N, K, A, lda, B, ldb, C, ldc,
                                         accumulate);
}

USLAB_AVX2 inline double fold16(double* p) {
    for (int s = 8; s >= 1; s >>= 1)
        for (int j = 0; j < s; ++j) p[j] += p[j + s];
    return p[0];
}

// Reductions keep 16 double partials (index mod 16) like the scalar path.
USLAB_AVX2 double sum_avx2(const float* x, int64_t n) {
    __m256d acc[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(),
                      _mm256_setzero_pd(), _mm256_setzero_pd()};
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256 f0 = _mm256_loadu_ps(x + i);
        const __m256 f1 = _mm256_loadu_ps(x + i + 8);
        acc[0] = _mm256_add_pd(acc[0],
                               _mm256_cvtps_pd(_mm256_castps256_ps128(f0)));
        acc[1] = _mm256_add_pd(acc[1],
                               _mm256_cvtps_pd(_mm256_extractf128_ps(f0, 1)));
        acc[2] = _mm256_add_pd(acc[2],
                               _mm256_cvtps_pd(_mm256_castps256_ps128(f1)));
        acc[3] = _mm256_add_pd(acc[3],
                               _mm256_cvtps_pd(_mm256_extractf128_ps(f1, 1)));
    }
    alignas(32) double p[16];
    for (int q = 0; q < 4; ++q) _mm256_store_pd(p + 4 * q, acc[q]);
    for (; i < n; ++i) p[i & 15] += static_cast<double>(x[i]);
    return fold16(p);
}

USLAB_AVX2 double sumsq_avx2(const float* x, int64_t n) {
    __m256d acc[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(),
                      _mm256_setzero_pd(), _mm256_setzero_pd()};
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256 f0 = _mm256_loadu_ps(x + i);
        const __m256 f1 = _mm256_loadu_ps(x + i + 8);
        const __m256d d0 = _mm256_cvtps_pd(_mm256_castps256_ps128(f0));
        const __m256d d1 = _mm256_cvtps_pd(_mm256_extractf128_ps(f0, 1));
        const __m256d d2 = _mm256_cvtps_pd(_mm256_castps256_ps128(f1));
        const __m256d d3 = _mm256_cvtps_pd(_mm256_extractf128_ps(f1, 1));
        acc[0] = _mm256_add_pd(acc[0], _mm256_mul_pd(d0, d0));
        acc[1] = _mm256_add_pd(acc[1], _mm256_mul_pd(d1, d1));
        acc[2] = _mm256_add_pd(acc[2], _mm256_mul_pd(d2, d2));
        acc[3] = _mm256_add_pd(acc[3], _mm256_mul_pd(d3, d3));
    }
    alignas(32) double p[16];
    for (int q = 0; q < 4; ++q) _mm256_store_pd(p + 4 * q, acc[q]);
    for (; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        p[i & 15] += v * v;
    }
    return fold16(p);
}

USLAB_AVX2 double dot_avx2(const float* x, const float* y, int64_t n) {
    __m256d acc[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(),
                      _mm256_setzero_pd(), _mm256_setzero_pd()};
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256 fx0 = _mm256_loadu_ps(x + i);
        const __m256 fx1 = _mm256_loadu_ps(x + i + 8);
        const __m256 fy0 = _mm256_loadu_ps(y + i);
        const __m256 fy1 = _mm256_loadu_ps(y + i + 8);
        acc[0] = _mm256_add_pd(
            acc[0],
            _mm256_mul_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(fx0)),
                          _mm256_cvtps_pd(_mm256_castps256_ps128(fy0))));
        acc[1] = _mm256_add_pd(
            acc[1],
            _mm256_mul_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(fx0, 1)),
                          _mm256_cvtps_pd(_mm256_extractf128_ps(fy0, 1))));
        acc[2] = _mm256_add_pd(
            acc[2],
            _mm256_mul_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(fx1)),
                          _mm256_cvtps_pd(_mm256_castps256_ps128(fy1))));
        acc[3] = _mm256_add_pd(
            acc[3],
            _mm256_mul_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(fx1, 1)),
                          _mm256_cvtps_pd(_mm256_extractf128_ps(fy1, 1))));
    }
    alignas(32) double p[16];
    for (int q = 0; q < 4; ++q) _mm256_store_pd(p + 4 * q, acc[q]);
    for (; i < n; ++i)
        p[i & 15] += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return fold16(p);
}

USLAB_AVX2 void sum_sumsq_avx2(const float* x, int64_t n, double* sum,
                               double* sumsq) {
    __m256d sa[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(),
                     _mm256_setzero_pd(), _mm256_setzero_pd()};
    __m256d qa[4] = {_mm256_setzero_pd(), _mm256_setzero_pd(),
                     _mm256_setzero_pd(), _mm256_setzero_pd()};
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256 f0 = _mm256_loadu_ps(x + i);
        const __m256 f1 = _mm256_loadu_ps(x + i + 8);
        const __m256d d[4] = {
            _mm256_cvtps_pd(_mm256_castps256_ps128(f0)),
            _mm256_cvtps_pd(_mm256_extractf128_ps(f0, 1)),
            _mm256_cvtps_pd(_mm256_castps256_ps128(f1)),
            _mm256_cvtps_pd(_mm256_extractf128_ps(f1, 1))};
        for (int q = 0; q < 4; ++q) {
            sa[q] = _mm256_add_pd(sa[q], d[q]);
            qa[q] = _mm256_add_pd(qa[q], _mm256_mul_pd(d[q], d[q]));
        }
    }
    alignas(32) double p[16], r[16];
    for (int q = 0; q < 4; ++q) {
        _mm256_store_pd(p + 4 * q, sa[q]);
        _mm256_store_pd(r + 4 * q, qa[q]);
    }
    for (; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        p[i & 15] += v;
        r[i & 15] += v * v;
    }
    *sum = fold16(p);
    *sumsq = fold16(r);
}

USLAB_AVX2 void axpy_avx2(int64_t n, float a, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(a);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(
            y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i),
                                   _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] = std::fmaf(a, x[i], y[i]);
}

USLAB_AVX2 void scale_avx2(int64_t n, float a, float* x) {
    const __m256 va = _mm256_set1_ps(a);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

USLAB_AVX2 void vadd_avx2(int64_t n, const float* x, const float* y,
                          float* z) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(z + i, _mm256_add_ps(_mm256_loadu_ps(x + i),
                                              _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) z[i] = x[i] + y[i];
}

USLAB_AVX2 void lrelu_fwd_avx2(int64_t n, float alpha, const float* x,
                               float* y) {
    const __m256 va = _mm256_set1_ps(alpha);
    const __m256 zero = _mm256_setzero_ps();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(
            y + i, _mm256_blendv_ps(_mm256_mul_ps(va, v), v, mask));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : alpha * x[i];
}

USLAB_AVX2 void lrelu_bwd_acc_avx2(int64_t n, float alpha, const float* x,
                                   const float* dy, float* dx) {
    const __m256 va = _mm256_set1_ps(alpha);
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 zero = _mm256_setzero_ps();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
        const __m256 slope = _mm256_blendv_ps(va, one, mask);
        _mm256_storeu_ps(dx + i,
                         _mm256_fmadd_ps(_mm256_loadu_ps(dy + i), slope,
                                         _mm256_loadu_ps(dx + i)));
    }
    for (; i < n; ++i)
        dx[i] = std::fmaf(dy[i], x[i] > 0.0f ? 1.0f : alpha, dx[i]);
}

#undef USLAB_AVX2

}  // namespace

const Ops kAvx2Ops = {
    "avx2",     sgemm_avx2, sum_avx2,       sumsq_avx2,
    dot_avx2,   sum_sumsq_avx2, axpy_avx2,  scale_avx2,
    vadd_avx2,  lrelu_fwd_avx2, lrelu_bwd_acc_avx2,
};

}  // namespace uslab::kern
