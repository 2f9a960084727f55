// Backend detection and dispatch.

#include "uslab/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace uslab::kern {

extern const Ops kScalarOps;
extern const Ops kAvx2Ops;
extern const Ops kAvx512Ops;

namespace {

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

bool cpu_has_avx512() { return __builtin_cpu_supports("avx512f"); }

const Ops* select() {
    Backend best = Backend::scalar;
    if (cpu_has_avx2()) best = Backend::avx2;
    if (cpu_has_avx512()) best = Backend::avx512;

    if (const char* env = std::getenv("USLAB_KERNELS")) {
        if (!std::strcmp(env, "scalar")) best = Backend::scalar;
        else if (!std::strcmp(env, "avx2") && cpu_has_avx2())
            best = Backend::avx2;
        else if (!std::strcmp(env, "avx512") && cpu_has_avx512())
            best = Backend::avx512;
    }
    switch (best) {
        case Backend::avx512: return &kAvx512Ops;
        case Backend::avx2: return &kAvx2Ops;
        default: return &kScalarOps;
    }
}

const Ops* g_active = nullptr;

}  // namespace

const Ops& ops() {
    if (!g_active) g_active = select();
    return *g_active;
}

Backend active_backend() {
    const char* n = ops().name;
    if (!std::strcmp(n, "avx512")) return Backend::avx512;
    if (!std::strcmp(n, "avx2")) return Backend::avx2;
    return Backend::scalar;
}

const char* backend_name() { return ops().name; }

const Ops* ops_for(Backend b) {
    switch (b) {
        case Backend::scalar: return &kScalarOps;
        case Backend::avx2: return cpu_has_avx2() ? &kAvx2Ops : nullptr;
        case Backend::avx512: return cpu_has_avx512() ? &kAvx512Ops : nullptr;
    }
    return nullptr;
}

}  // namespace uslab::kern
