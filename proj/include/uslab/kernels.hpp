#pragma once
// Runtime-dispatched compute kernels: scalar reference implementations plus
// AVX2 and AVX-512F variants selected by CPU feature detection.
//
// All variants obey one accumulation contract so results are bit-identical
// across backends:
//   * sgemm accumulates each C element over k in ascending order with fused
//     multiply-add, folded into C once per KC-sized k panel (KC below).
//   * reductions keep 16 double-precision partial sums indexed by i mod 16,
//     folded pairwise (stride 8, 4, 2, 1).
//   * elementwise ops use std::fma / hardware FMA with identical per-element
//     expressions.
// The environment variable USLAB_KERNELS=scalar|avx2|avx512 overrides the
// detected backend (unsupported requests fall back to the best available).

#include <cstdint>

namespace uslab::kern {

// k-panel size shared by every sgemm backend; part of the accumulation
// contract, do not change without updating the scalar reference.
inline constexpr int kGemmKC = 256;

enum class Backend { scalar = 0, avx2 = 1, avx512 = 2 };

struct Ops {
    const char* name;

    // C[M x N] (row-major, leading dim ldc) = A[M x K] * B[K x N], or += when
    // accumulate is true.
    void (*sgemm)(int m, int n, int k, const float* a, int lda, const float* b,
                  int ldb, float* c, int ldc, bool accumulate);

    double (*sum)(const float* x, int64_t n);
    double (*sumsq)(const float* x, int64_t n);
    double (*dot)(const float* x, const float* y, int64_t n);
    void (*sum_sumsq)(const float* x, int64_t n, double* sum, double* sumsq);

    // y[i] = a*x[i] + y[i]
    void (*axpy)(int64_t n, float a, const float* x, float* y);
    // x[i] *= a
    void (*scale)(int64_t n, float a, float* x);
    // z[i] = x[i] + y[i]
    void (*vadd)(int64_t n, const float* x, const float* y, float* z);

    // y[i] = x[i] > 0 ? x[i] : alpha*x[i]
    void (*lrelu_fwd)(int64_t n, float alpha, const float* x, float* y);
    // dx[i] += dy[i] * (x[i] > 0 ? 1 : alpha)
    void (*lrelu_bwd_acc)(int64_t n, float alpha, const float* x,
                          const float* dy, float* dx);
};

// Active table (detected once, env override honored).
const Ops& ops();
Backend active_backend();
const char* backend_name();

// Table for a specific backend, or nullptr when the CPU lacks it. Used by the
// equivalence tests to compare paths on the same machine.
const Ops* ops_for(Backend b);

// Double-precision GEMM, scalar only (test oracles, metrics). Same KC-panel
// accumulation contract as sgemm.
void dgemm(int m, int n, int k, const double* a, int lda, const double* b,
           int ldb, double* c, int ldc, bool accumulate);

}  // namespace uslab::kern
