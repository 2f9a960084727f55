#pragma once
// Shared blocked GEMM driver used by the SIMD backends. The scalar backend
// has its own straight-line implementation so the equivalence tests compare
// genuinely independent code paths.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#include "uslab/kernels.hpp"

namespace uslab::kern::detail {

// Column-panel width: packed B block (KC x NC floats) should sit in L2.
inline constexpr int kGemmNC = 1024;

// Packs a KC x NR slice of B (zero-padded past nr_valid) as [k][NR].
inline void pack_b_panel(int kc, int nr_valid, int NR, const float* b, int ldb,
                         float* dst) {
    for (int k = 0; k < kc; ++k) {
        const float* src = b + static_cast<int64_t>(k) * ldb;
        int j = 0;
        for (; j < nr_valid; ++j) dst[j] = src[j];
        for (; j < NR; ++j) dst[j] = 0.0f;
        dst += NR;
    }
}

// Packs a MR x KC slice of A (zero-padded past mr_valid) as [k][MR].
inline void pack_a_panel(int kc, int mr_valid, int MR, const float* a, int lda,
                         float* dst) {
    for (int k = 0; k < kc; ++k) {
        int i = 0;
        for (; i < mr_valid; ++i) dst[i] = a[static_cast<int64_t>(i) * lda + k];
        for (; i < MR; ++i) dst[i] = 0.0f;
        dst += MR;
    }
}

inline void zero_c(int M, int N, float* C, int ldc) {
    for (int i = 0; i < M; ++i)
        std::memset(C + static_cast<int64_t>(i) * ldc, 0, sizeof(float) * N);
}

// Microkernel contract: tile[MR*NR] = sum over kc of a[k*MR+m] * b[k*NR+n],
// overwriting tile, ascending k, single-rounded FMA.
template <int MR, int NR, void (*MK)(int, const float*, const float*, float*)>
void gemm_blocked(int M, int N, int K, const float* A, int lda, const float* B,
                  int ldb, float* C, int ldc, bool accumulate) {
    if (M <= 0 || N <= 0) return;
    if (K <= 0) {
        if (!accumulate) zero_c(M, N, C, ldc);
        return;
    }
    const int n_mpanel = (M + MR - 1) / MR;
    std::vector<float> b_pack;

    for (int jc = 0; jc < N; jc += kGemmNC) {
        const int nc = std::min(kGemmNC, N - jc);
        const int n_jpanel = (nc + NR - 1) / NR;
        for (int pc = 0; pc < K; pc += kGemmKC) {
            const int kc = std::min(kGemmKC, K - pc);
            const bool first_panel = (pc == 0) && !accumulate;
            b_pack.resize(static_cast<size_t>(n_jpanel) * kc * NR);

#pragma omp parallel
            {
#pragma omp for schedule(static)
                for (int jp = 0; jp < n_jpanel; ++jp) {
                    const int j0 = jc + jp * NR;
                    pack_b_panel(kc, std::min(NR, N - j0), NR,
                                 B + static_cast<int64_t>(pc) * ldb + j0, ldb,
                                 b_pack.data() +
                                     static_cast<size_t>(jp) * kc * NR);
                }
                // implicit barrier: packed B visible to all threads

                std::vector<float> a_pack(static_cast<size_t>(kc) * MR);
                alignas(64) float tile[MR * NR];
#pragma omp for schedule(static)
                for (int ip = 0; ip < n_mpanel; ++ip) {
                    const int i0 = ip * MR;
                    const int mr_valid = std::min(MR, M - i0);
                    pack_a_panel(kc, mr_valid, MR,
                                 A + static_cast<int64_t>(i0) * lda + pc, lda,
                                 a_pack.data());
                    for (int jp = 0; jp < n_jpanel; ++jp) {
                        const int j0 = jc + jp * NR;
                        const int nr_valid = std::min(NR, N - j0);
                        MK(kc, a_pack.data(),
                           b_pack.data() + static_cast<size_t>(jp) * kc * NR,
                           tile);
                        float* c = C + static_cast<int64_t>(i0) * ldc + j0;
                        if (first_panel) {
                            for (int i = 0; i < mr_valid; ++i)
                                std::memcpy(c + static_cast<int64_t>(i) * ldc,
                                            tile + i * NR,
                                            sizeof(float) * nr_valid);
                        } else {
                            for (int i = 0; i < mr_valid; ++i) {
                                float* crow = c + static_cast<int64_t>(i) * ldc;
                                const float* trow = tile + i * NR;
                                for (int j = 0; j < nr_valid; ++j)
                                    crow[j] += trow[j];
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace uslab::kern::detail
