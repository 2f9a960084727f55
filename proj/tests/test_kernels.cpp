// Backend equivalence and numeric correctness for the dispatched kernels.
// Equivalence is exact: every backend implements the same accumulation
// contract (see kernels.hpp), so results must match bit for bit.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "uslab/kernels.hpp"
#include "uslab/rng.hpp"

using uslab::Pcg32;
using uslab::kern::Backend;
using uslab::kern::Ops;
using uslab::kern::ops_for;

namespace {

std::vector<const Ops*> available_backends() {
    std::vector<const Ops*> v;
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::avx512})
        if (const Ops* o = ops_for(b)) v.push_back(o);
    return v;
}

std::vector<float> random_vec(size_t n, uint64_t seed, float scale = 1.0f) {
    Pcg32 rng(seed, 7);
    std::vector<float> v(n);
    for (auto& x : v) x = scale * (2.0f * rng.uniform() - 1.0f);
    return v;
}

// Naive double-precision GEMM oracle (plain ascending sum, no blocking).
void gemm_oracle(int M, int N, int K, const std::vector<float>& a, int lda,
                 const std::vector<float>& b, int ldb, std::vector<double>& c,
                 int ldc) {
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) {
            double acc = 0;
            for (int k = 0; k < K; ++k)
                acc += static_cast<double>(a[i * lda + k]) * b[k * ldb + j];
            c[i * ldc + j] = acc;
        }
}

}  // namespace

TEST_CASE("at least one backend is available and dispatch works") {
    CHECK(ops_for(Backend::scalar) != nullptr);
    CHECK(uslab::kern::backend_name() != nullptr);
}

TEST_CASE("sgemm: backends agree bitwise and match the double oracle") {
    const auto backends = available_backends();
    REQUIRE(backends.size() >= 1);

    const int shapes[][3] = {{1, 1, 1},    {3, 5, 7},    {6, 16, 9},
                             {12, 32, 64}, {13, 33, 257}, {37, 41, 300},
                             {64, 384, 576}, {259, 100, 2331}, {5, 1000, 2}};
    int case_id = 0;
    for (const auto& s : shapes) {
        const int M = s[0], N = s[1], K = s[2];
        const int lda = K + (case_id % 3);      // exercise padded strides
        const int ldb = N + (case_id % 2) * 3;
        const int ldc = N + (case_id % 4);
        ++case_id;
        const auto a = random_vec(static_cast<size_t>(M) * lda, 11u + case_id);
        const auto b = random_vec(static_cast<size_t>(K) * ldb, 23u + case_id);
        const auto c0 = random_vec(static_cast<size_t>(M) * ldc, 31u + case_id);

        for (bool acc : {false, true}) {
            std::vector<std::vector<float>> results;
            for (const Ops* o : backends) {
                std::vector<float> c = c0;
                o->sgemm(M, N, K, a.data(), lda, b.data(), ldb, c.data(), ldc,
                         acc);
                results.push_back(std::move(c));
            }
            for (size_t i = 1; i < results.size(); ++i) {
                REQUIRE(std::memcmp(results[0].data(), results[i].data(),
                                    results[0].size() * sizeof(float)) == 0);
            }
            // numeric correctness vs double oracle
            std::vector<double> ref(static_cast<size_t>(M) * ldc, 0.0);
            gemm_oracle(M, N, K, a, lda, b, ldb, ref, ldc);
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < N; ++j) {
                    double want = ref[static_cast<size_t>(i) * ldc + j];
                    if (acc) want += c0[static_cast<size_t>(i) * ldc + j];
                    const double got =
                        results[0][static_cast<size_t>(i) * ldc + j];
                    const double tol =
                        1e-5 * (1.0 + std::abs(want)) * std::sqrt(1.0 + K);
                    CHECK(std::abs(got - want) <= tol);
                }
        }
    }
}

TEST_CASE("reductions: bitwise equivalence across backends, double oracle") {
    const auto backends = available_backends();
    for (size_t n : {0u, 1u, 7u, 16u, 17u, 255u, 1000u, 65537u}) {
        const auto x = random_vec(n, 101 + n);
        const auto y = random_vec(n, 202 + n);
        double oracle_sum = 0, oracle_sq = 0, oracle_dot = 0;
        for (size_t i = 0; i < n; ++i) {
            oracle_sum += x[i];
            oracle_sq += static_cast<double>(x[i]) * x[i];
            oracle_dot += static_cast<double>(x[i]) * y[i];
        }
        std::vector<double> sums, sqs, dots;
        for (const Ops* o : backends) {
            sums.push_back(o->sum(x.data(), static_cast<int64_t>(n)));
            sqs.push_back(o->sumsq(x.data(), static_cast<int64_t>(n)));
            dots.push_back(
                o->dot(x.data(), y.data(), static_cast<int64_t>(n)));
            double s = 0, q = 0;
            o->sum_sumsq(x.data(), static_cast<int64_t>(n), &s, &q);
            CHECK(s == sums.back());
            CHECK(q == sqs.back());
        }
        for (size_t i = 1; i < sums.size(); ++i) {
            CHECK(sums[i] == sums[0]);
            CHECK(sqs[i] == sqs[0]);
            CHECK(dots[i] == dots[0]);
        }
        const double tol = 1e-9 * (1.0 + std::abs(oracle_sum) + n);
        CHECK(std::abs(sums[0] - oracle_sum) <= tol);
        CHECK(std::abs(sqs[0] - oracle_sq) <= 1e-9 * (1.0 + oracle_sq + n));
        CHECK(std::abs(dots[0] - oracle_dot) <=
              1e-9 * (1.0 + std::abs(oracle_dot) + n));
    }
}

TEST_CASE("elementwise kernels: bitwise equivalence and semantics") {
    const auto backends = available_backends();
    for (size_t n : {0u, 1u, 5u, 8u, 9u, 16u, 100u, 4097u}) {
        const auto x = random_vec(n, 301 + n);
        const auto y0 = random_vec(n, 401 + n);
        const float a = 0.37f, alpha = 0.2f;

        std::vector<std::vector<float>> axpys, scales, adds, lrf, lrb;
        for (const Ops* o : backends) {
            std::vector<float> y = y0;
            o->axpy(static_cast<int64_t>(n), a, x.data(), y.data());
            axpys.push_back(y);

            std::vector<float> s = x;
            o->scale(static_cast<int64_t>(n), a, s.data());
            scales.push_back(s);

            std::vector<float> z(n);
            o->vadd(static_cast<int64_t>(n), x.data(), y0.data(), z.data());
            adds.push_back(z);

            std::vector<float> f(n);
            o->lrelu_fwd(static_cast<int64_t>(n), alpha, x.data(), f.data());
            lrf.push_back(f);

            std::vector<float> dx = y0;
            o->lrelu_bwd_acc(static_cast<int64_t>(n), alpha, x.data(),
                             x.data(), dx.data());
            lrb.push_back(dx);
        }
        for (size_t i = 1; i < backends.size(); ++i) {
            CHECK(axpys[i] == axpys[0]);
            CHECK(scales[i] == scales[0]);
            CHECK(adds[i] == adds[0]);
            CHECK(lrf[i] == lrf[0]);
            CHECK(lrb[i] == lrb[0]);
        }
        for (size_t i = 0; i < n; ++i) {
            CHECK(axpys[0][i] == doctest::Approx(a * x[i] + y0[i]).epsilon(1e-6));
            CHECK(lrf[0][i] ==
                  (x[i] > 0 ? x[i] : alpha * x[i]));
        }
    }
}

TEST_CASE("dgemm matches naive double loops") {
    Pcg32 rng(5, 5);
    const int M = 17, N = 23, K = 300;
    std::vector<double> a(static_cast<size_t>(M) * K),
        b(static_cast<size_t>(K) * N), c(static_cast<size_t>(M) * N, 1.0),
        ref(static_cast<size_t>(M) * N, 1.0);
    for (auto& v : a) v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : b) v = 2.0 * rng.uniform() - 1.0;
    uslab::kern::dgemm(M, N, K, a.data(), K, b.data(), N, c.data(), N, true);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < K; ++k)
                ref[static_cast<size_t>(i) * N + j] += a[static_cast<size_t>(i) * K + k] * b[static_cast<size_t>(k) * N + j];
    for (size_t i = 0; i < c.size(); ++i)
        CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}
