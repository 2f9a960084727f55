// Scalar reference kernels. These define the numerical contract the SIMD
// variants must reproduce bit-for-bit (see kernels.hpp).

#include <cmath>
#include <cstring>

#include "uslab/kernels.hpp"

namespace uslab::kern {
namespace {

void sgemm_scalar(int M, int N, int K, const float* A, int lda, const float* B,
                  int ldb, float* C, int ldc, bool accumulate) {
    if (M <= 0 || N <= 0) return;
    if (K <= 0) {
        if (!accumulate)
            for (int i = 0; i < M; ++i)
                std::memset(C + static_cast<int64_t>(i) * ldc, 0,
                            sizeof(float) * N);
        return;
    }
    for (int pc = 0; pc < K; pc += kGemmKC) {
        const int kend = pc + std::min(kGemmKC, K - pc);
        const bool first = (pc == 0) && !accumulate;
        for (int i = 0; i < M; ++i) {
            const float* arow = A + static_cast<int64_t>(i) * lda;
            float* crow = C + static_cast<int64_t>(i) * ldc;
            for (int j = 0; j < N; ++j) {
                float acc = 0.0f;
                for (int k = pc; k < kend; ++k)
                    acc = std::fmaf(arow[k],
                                    B[static_cast<int64_t>(k) * ldb + j], acc);
                if (first)
                    crow[j] = acc;
                else
                    crow[j] += acc;
            }
        }
    }
}

// 16 double partials indexed by absolute index mod 16, pairwise fold.
inline double fold16(double* p) {
    for (int s = 8; s >= 1; s >>= 1)
        for (int j = 0; j < s; ++j) p[j] += p[j + s];
    return p[0];
}

double sum_scalar(const float* x, int64_t n) {
    double p[16] = {};
    for (int64_t i = 0; i < n; ++i) p[i & 15] += static_cast<double>(x[i]);
    return fold16(p);
}

double sumsq_scalar(const float* x, int64_t n) {
    double p[16] = {};
    for (int64_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        p[i & 15] += v * v;
    }
    return fold16(p);
}

double dot_scalar(const float* x, const float* y, int64_t n) {
    double p[16] = {};
    for (int64_t i = 0; i < n; ++i)
        p[i & 15] += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return fold16(p);
}

void sum_sumsq_scalar(const float* x, int64_t n, double* sum, double* sumsq) {
    double p[16] = {}, q[16] = {};
    for (int64_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(x[i]);
        p[i & 15] += v;
        q[i & 15] += v * v;
    }
    *sum = fold16(p);
    *sumsq = fold16(q);
}

void axpy_scalar(int64_t n, float a, const float* x, float* y) {
    for (int64_t i = 0; i < n; ++i) y[i] = std::fmaf(a, x[i], y[i]);
}

void scale_scalar(int64_t n, float a, float* x) {
    for (int64_t i = 0; i < n; ++i) x[i] *= a;
}

void vadd_scalar(int64_t n, const float* x, const float* y, float* z) {
    for (int64_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void lrelu_fwd_scalar(int64_t n, float alpha, const float* x, float* y) {
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : alpha * x[i];
}

void lrelu_bwd_acc_scalar(int64_t n, float alpha, const float* x,
                          const float* dy, float* dx) {
    for (int64_t i = 0; i < n; ++i)
        dx[i] = std::fmaf(dy[i], x[i] > 0.0f ? 1.0f : alpha, dx[i]);
}

}  // namespace

const Ops kScalarOps = {
    "scalar",      sgemm_scalar, sum_scalar,       sumsq_scalar,
    dot_scalar,    sum_sumsq_scalar, axpy_scalar,  scale_scalar,
    vadd_scalar,   lrelu_fwd_scalar, lrelu_bwd_acc_scalar,
};

void dgemm(int M, int N, int K, const double* A, int lda, const double* B,
           int ldb, double* C, int ldc, bool accumulate) {
    if (M <= 0 || N <= 0) return;
    if (K <= 0) {
        if (!accumulate)
            for (int i = 0; i < M; ++i)
                std::memset(C + static_cast<int64_t>(i) * ldc, 0,
                            sizeof(double) * N);
        return;
    }
    for (int pc = 0; pc < K; pc += kGemmKC) {
        const int kend = pc + std::min(kGemmKC, K - pc);
        const bool first = (pc == 0) && !accumulate;
        for (int i = 0; i < M; ++i) {
            const double* arow = A + static_cast<int64_t>(i) * lda;
            double* crow = C + static_cast<int64_t>(i) * ldc;
            for (int j = 0; j < N; ++j) {
                double acc = 0.0;
                for (int k = pc; k < kend; ++k)
                    acc = std::fma(arow[k],
                                   B[static_cast<int64_t>(k) * ldb + j], acc);
                if (first)
                    crow[j] = acc;
                else
                    crow[j] += acc;
            }
        }
    }
}

}  // namespace uslab::kern
