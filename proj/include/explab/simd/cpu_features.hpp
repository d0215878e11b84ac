#pragma once

namespace explab::simd {

struct CpuFeatures {
    bool avx2 = false;
    bool fma = false;
    bool avx512f = false;

    static CpuFeatures detect() noexcept;
};

} // namespace explab::simd
