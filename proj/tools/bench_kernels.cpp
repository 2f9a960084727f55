// Quick GEMM throughput check per backend (not a test).

#include <chrono>
#include <cstdio>
#include <vector>

#include "uslab/kernels.hpp"
#include "uslab/rng.hpp"

using Clock = std::chrono::steady_clock;

int main() {
    using namespace uslab;
    const int shapes[][3] = {
        {256, 384, 2304},  // residual conv at 16x24
        {128, 1536, 1024}, // stride-2 conv
        {259, 384, 2331},  // decoder residual conv
        {64, 6144, 49},    // 7x7 stem
    };
    for (auto b : {kern::Backend::scalar, kern::Backend::avx2,
                   kern::Backend::avx512}) {
        const kern::Ops* o = kern::ops_for(b);
        if (!o) {
            std::printf("%-7s unavailable\n",
                        b == kern::Backend::avx2 ? "avx2" : "avx512");
            continue;
        }
        for (const auto& s : shapes) {
            const int M = s[0], N = s[1], K = s[2];
            std::vector<float> A(static_cast<size_t>(M) * K),
                B(static_cast<size_t>(K) * N), C(static_cast<size_t>(M) * N);
            Pcg32 rng(1, 2);
            for (auto& v : A) v = rng.uniform();
            for (auto& v : B) v = rng.uniform();
            // warmup
            o->sgemm(M, N, K, A.data(), K, B.data(), N, C.data(), N, false);
            const double flops = 2.0 * M * N * K;
            int reps = static_cast<int>(2e10 / flops) + 1;
            if (b == kern::Backend::scalar) reps = std::max(1, reps / 50);
            const auto t0 = Clock::now();
            for (int r = 0; r < reps; ++r)
                o->sgemm(M, N, K, A.data(), K, B.data(), N, C.data(), N,
                         false);
            const double dt =
                std::chrono::duration<double>(Clock::now() - t0).count();
            std::printf("%-7s M=%4d N=%5d K=%5d  %7.2f GFLOP/s\n", o->name, M,
                        N, K, flops * reps / dt / 1e9);
        }
    }
    return 0;
}
