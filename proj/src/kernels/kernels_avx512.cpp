// AVX-512F kernel variants.

#include <immintrin.h>

#include <cmath>

#include "gemm_driver.hpp"
#include "uslab/kernels.hpp"

namespace uslab::kern {
namespace {

#define USLAB_AVX512 __attribute__((target("avx512f")))

// 12x32 microkernel: 24 zmm accumulators + 2 B vectors + broadcast.
USLAB_AVX512 void mk_12x32(int kc, const float* a, const float* b,
                           float* tile) {
    __m512 acc[12][2];
    for (int m = 0; m < 12; ++m) {
        acc[m][0] = _mm512_setzero_ps();
        acc[m][1] = _mm512_setzero_ps();
    }
    for (int k = 0; k < kc; ++k) {
        const __m512 b0 = _mm512_loadu_ps(b);
        const __m512 b1 = _mm512_loadu_ps(b + 16);
        b += 32;
        for (int m = 0; m < 12; ++m) {
            const __m512 am = _mm512_set1_ps(a[m]);
            acc[m][0] = _mm512_fmadd_ps(am, b0, acc[m][0]);
            acc[m][1] = _mm512_fmadd_ps(am, b1, acc[m][1]);
        }
        a += 12;
    }
    for (int m = 0; m < 12; ++m) {
        _mm512_store_ps(tile + m * 32, acc[m][0]);
        _mm512_store_ps(tile + m * 32 + 16, acc[m][1]);
    }
}

USLAB_AVX512 void sgemm_avx512(int M, int N, int K, const float* A, int lda,
                               const float* B, int ldb, float* C, int ldc,
                               bool accumulate) {
    detail::gemm_blocked<12, 32, mk_12x32>(M, N, K, A, lda, B, ldb, C, ldc,
                                           accumulate);
}

USLAB_AVX512 inline double fold16(double* p) {
    for (int s = 8; s >= 1; s >>= 1)
        for (int j = 0; j < s; ++j) p[j] += p[j + s];
    return p[0];
}

USLAB_AVX512 double sum_avx512(const float* x, int64_t n) {
    __m512d a0 = _mm512_setzero_pd(), a1 = _mm512_setzero_pd();
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m512 f = _mm512_loadu_ps(x + i);
        a0 = _mm512_add_pd(a0, _mm512_cvtps_pd(_mm512_castps512_ps256(f)));
        a1 = _mm512_add_pd(
            a1, _mm512_cvtps_pd(_mm256_castpd_ps(
                    _mm512_extractf64x4_pd(_mm512_castps_pd(f), 1))));
    }
    alignas(64) double p[16];
    _mm512_store_pd(p, a0);
    _mm512_store_pd(p + 8, a1);
    for (; i < n; ++i) p[i & 15] += static_cast<double>(x[i]);
    return fold16(p);
}

USLAB_AVX512 double sumsq_avx512(const float* x, int64_t n) {
    __m512d a0 = _mm512_setzero_pd(), a1 = _mm512_setzero_pd();
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m512 f = _mm512_loadu_ps(x + i);
        const __m512d d0 = _mm512_cvtps_pd(_mm512_castps512_ps256(f));
        const __m512d d1 = _mm512_cvtps_pd(_mm256_castpd_ps(
            _mm512_extractf64x4_pd(_mm512_castps_pd(f), 1)));
        a0 = _mm512_add_pd(a0, _mm512_mul_pd(d0, d0));
        a1 = _mm512_add_pd(a1, _mm512_mul_pd(d1, d1));
    }
    alignas(64) double p[16];
    _mm512_store_pd(p, a0);
    _mm512_store_pd(p + 8, a1);
    for (; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        p[i & 15] += v * v;
    }
    return fold16(p);
}

USLAB_AVX512 double dot_avx512(const float* x, const float* y, int64_t n) {
    __m512d a0 = _mm512_setzero_pd(), a1 = _mm512_setzero_pd();
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m512 fx = _mm512_loadu_ps(x + i);
        const __m512 fy = _mm512_loadu_ps(y + i);
        const __m512d x0 = _mm512_cvtps_pd(_mm512_castps512_ps256(fx));
        const __m512d x1 = _mm512_cvtps_pd(_mm256_castpd_ps(
            _mm512_extractf64x4_pd(_mm512_castps_pd(fx), 1)));
        const __m512d y0 = _mm512_cvtps_pd(_mm512_castps512_ps256(fy));
        const __m512d y1 = _mm512_cvtps_pd(_mm256_castpd_ps(
            _mm512_extractf64x4_pd(_mm512_castps_pd(fy), 1)));
        a0 = _mm512_add_pd(a0, _mm512_mul_pd(x0, y0));
        a1 = _mm512_add_pd(a1, _mm512_mul_pd(x1, y1));
    }
    alignas(64) double p[16];
    _mm512_store_pd(p, a0);
    _mm512_store_pd(p + 8, a1);
    for (; i < n; ++i)
        p[i & 15] += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return fold16(p);
}

USLAB_AVX512 void sum_sumsq_avx512(const float* x, int64_t n, double* sum,
                                   double* sumsq) {
    __m512d s0 = _mm512_setzero_pd(), s1 = _mm512_setzero_pd();
    __m512d q0 = _mm512_setzero_pd(), q1 = _mm512_setzero_pd();
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m512 f = _mm512_loadu_ps(x + i);
        const __m512d d0 = _mm512_cvtps_pd(_mm512_castps512_ps256(f));
        const __m512d d1 = _mm512_cvtps_pd(_mm256_castpd_ps(
            _mm512_extractf64x4_pd(_mm512_castps_pd(f), 1)));
        s0 = _mm512_add_pd(s0, d0);
        s1 = _mm512_add_pd(s1, d1);
        q0 = _mm512_add_pd(q0, _mm512_mul_pd(d0, d0));
        q1 = _mm512_add_pd(q1, _mm512_mul_pd(d1, d1));
    }
    alignas(64) double p[16], r[16];
    _mm512_store_pd(p, s0);
    _mm512_store_pd(p + 8, s1);
    _mm512_store_pd(r, q0);
    _mm512_store_pd(r + 8, q1);
    for (; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        p[i & 15] += v;
        r[i & 15] += v * v;
    }
    *sum = fold16(p);
    *sumsq = fold16(r);
}

USLAB_AVX512 void axpy_avx512(int64_t n, float a, const float* x, float* y) {
    const __m512 va = _mm512_set1_ps(a);
    int64_t i = 0;
    for (; i + 16 <= n; i += 16)
        _mm512_storeu_ps(
            y + i, _mm512_fmadd_ps(va, _mm512_loadu_ps(x + i),
                                   _mm512_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] = std::fmaf(a, x[i], y[i]);
}

USLAB_AVX512 void scale_avx512(int64_t n, float a, float* x) {
    const __m512 va = _mm512_set1_ps(a);
    int64_t i = 0;
    for (; i + 16 <= n; i += 16)
        _mm512_storeu_ps(x + i, _mm512_mul_ps(va, _mm512_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

USLAB_AVX512 void vadd_avx512(int64_t n, const float* x, const float* y,
                              float* z) {
    int64_t i = 0;
    for (; i + 16 <= n; i += 16)
        _mm512_storeu_ps(z + i, _mm512_add_ps(_mm512_loadu_ps(x + i),
                                              _mm512_loadu_ps(y + i)));
    for (; i < n; ++i) z[i] = x[i] + y[i];
}

USLAB_AVX512 void lrelu_fwd_avx512(int64_t n, float alpha, const float* x,
                                   float* y) {
    const __m512 va = _mm512_set1_ps(alpha);
    const __m512 zero = _mm512_setzero_ps();
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m512 v = _mm512_loadu_ps(x + i);
        const __mmask16 pos = _mm512_cmp_ps_mask(v, zero, _CMP_GT_OQ);
        _mm512_storeu_ps(y + i,
                         _mm512_mask_blend_ps(pos, _mm512_mul_ps(va, v), v));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : alpha * x[i];
}

USLAB_AVX512 void lrelu_bwd_acc_avx512(int64_t n, float alpha, const float* x,
                                       const float* dy, float* dx) {
    const __m512 va = _mm512_set1_ps(alpha);
    const __m512 one = _mm512_set1_ps(1.0f);
    const __m512 zero = _mm512_setzero_ps();
    int64_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m512 v = _mm512_loadu_ps(x + i);
        const __mmask16 pos = _mm512_cmp_ps_mask(v, zero, _CMP_GT_OQ);
        const __m512 slope = _mm512_mask_blend_ps(pos, va, one);
        _mm512_storeu_ps(dx + i,
                         _mm512_fmadd_ps(_mm512_loadu_ps(dy + i), slope,
                                         _mm512_loadu_ps(dx + i)));
    }
    for (; i < n; ++i)
        dx[i] = std::fmaf(dy[i], x[i] > 0.0f ? 1.0f : alpha, dx[i]);
}

#undef USLAB_AVX512

}  // namespace

const Ops kAvx512Ops = {
    "avx512",     sgemm_avx512, sum_avx512,       sumsq_avx512,
    dot_avx512,   sum_sumsq_avx512, axpy_avx512,  scale_avx512,
    vadd_avx512,  lrelu_fwd_avx512, lrelu_bwd_acc_avx512,
};

}  // namespace uslab::kern
