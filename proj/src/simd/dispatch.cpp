#include <cstdlib>
#include <string_view>

#include "explab/simd/cpu_features.hpp"
#include "explab/simd/kernels.hpp"

namespace explab::simd {

#ifdef EXPLAB_HAVE_AVX2
const KernelTable& avx2_table() noexcept;
#endif
#ifdef EXPLAB_HAVE_AVX512
const KernelTable& avx512_table() noexcept;
#endif

namespace {

const CpuFeatures& features() noexcept {
    static const CpuFeatures f = CpuFeatures::detect();
    return f;
}

} // namespace

const KernelTable* avx2_kernels() noexcept {
#ifdef EXPLAB_HAVE_AVX2
    return features().avx2 && features().fma ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* avx512_kernels() noexcept {
#ifdef EXPLAB_HAVE_AVX512
    return features().avx512f && features().fma ? &avx512_table() : nullptr;
#else
    return nullptr;
#endif
}

std::vector<const KernelTable*> available_kernels() {
    std::vector<const KernelTable*> out{&scalar_kernels()};
    for (const auto* t : {avx2_kernels(), avx512_kernels()}) {
        if (t != nullptr) {
            out.push_back(t);
        }
    }
    return out;
}

const KernelTable& active_kernels() noexcept {
    static const KernelTable& table = []() -> const KernelTable& {
        const char* env = std::getenv("EXPLAB_SIMD");
        const std::string_view cap = env != nullptr ? env : "";
        if (cap == "scalar") {
            return scalar_kernels();
        }
        if (cap != "avx2") {
            if (const auto* t = avx512_kernels()) {
                return *t;
            }
        }
        if (const auto* t = avx2_kernels()) {
            return *t;
        }
        return scalar_kernels();
    }();
    return table;
}

} // namespace explab::simd
