#pragma once

// Inner loops of the critic network. Every kernel has a scalar reference
// implementation; wider variants are compiled separately and selected once
// at runtime. Variants may differ in summation order only, so results agree
// to rounding, not bit for bit.
//
// All matrices are row-major and densely packed.

#include <cstddef>
#include <string_view>
#include <vector>

namespace explab::simd {

struct KernelTable {
    std::string_view name;

    /// z[rows x out] = x[rows x in] * w[in x out] (+ bias[out] when non-null).
    void (*affine)(const double* x, std::size_t rows, std::size_t in, const double* w,
                   std::size_t out, const double* bias, double* z);

    /// dw[in x out] += x^T[in x rows] * dz[rows x out].
    void (*gemm_tn_acc)(const double* x, std::size_t rows, std::size_t in, const double* dz,
                        std::size_t out, double* dw);

    /// dx[rows x in] = dz[rows x out] * w^T[out x in].
    void (*gemm_nt)(const double* dz, std::size_t rows, std::size_t out, const double* w,
                    std::size_t in, double* dx);

    /// db[out] += column sums of dz[rows x out].
    void (*col_sum_acc)(const double* dz, std::size_t rows, std::size_t out, double* db);

    /// h = z for z > 0, exp(z) - 1 otherwise.
    void (*elu)(const double* z, double* h, std::size_t n);

    /// g *= 1 for z > 0, h + 1 (= exp(z)) otherwise.
    void (*elu_grad)(const double* z, const double* h, double* g, std::size_t n);

    /// Bias-corrected Adam update; bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
    void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n,
                 double lr, double beta1, double beta2, double eps, double bc1, double bc2);

    /// sum_i exp(x[i] - shift).
    double (*sum_exp_shifted)(const double* x, std::size_t n, double shift);
};

const KernelTable& scalar_kernels() noexcept;

/// AVX2/FMA table, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels() noexcept;

/// AVX-512F table, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx512_kernels() noexcept;

/// Every table usable on this machine, scalar first.
std::vector<const KernelTable*> available_kernels();

/// Table used by the library. Chosen on first use: the widest supported
/// variant, unless EXPLAB_SIMD names a narrower one (scalar, avx2, avx512).
const KernelTable& active_kernels() noexcept;

} // namespace explab::simd
