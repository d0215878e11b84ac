// AVX-512F variants. Compiled with -mavx512f -mfma; entered only after a
// runtime feature check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "explab/simd/kernels.hpp"

namespace explab::simd {
namespace {

constexpr std::size_t kLanes = 8;

// Same reduction and polynomial as the AVX2 variant; scalef rebuilds 2^n.
inline __m512d exp512(__m512d x) {
    const __m512d hi = _mm512_set1_pd(709.0);
    const __m512d lo = _mm512_set1_pd(-708.39);
    const __mmask8 nan_mask = _mm512_cmp_pd_mask(x, x, _CMP_UNORD_Q);
    const __mmask8 underflow = _mm512_cmp_pd_mask(x, lo, _CMP_LT_OQ);
    const __m512d xc = _mm512_min_pd(_mm512_max_pd(x, lo), hi);

    const __m512d n = _mm512_roundscale_pd(_mm512_mul_pd(xc, _mm512_set1_pd(1.4426950408889634073599)),
                                           _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m512d r = _mm512_fnmadd_pd(n, _mm512_set1_pd(6.93145751953125e-1), xc);
    r = _mm512_fnmadd_pd(n, _mm512_set1_pd(1.42860682030941723212e-6), r);

    __m512d e = _mm512_set1_pd(1.0 / 479001600.0);
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 39916800.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 3628800.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 362880.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 40320.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 5040.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 720.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 120.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 24.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0 / 6.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(0.5));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0));
    e = _mm512_fmadd_pd(e, r, _mm512_set1_pd(1.0));

    __m512d result = _mm512_scalef_pd(e, n);
    result = _mm512_mask_blend_pd(underflow, result, _mm512_setzero_pd());
    return _mm512_mask_blend_pd(nan_mask, result, x);
}

inline __mmask8 tail_mask(std::size_t count) { return static_cast<__mmask8>((1u << count) - 1u); }

inline double dot(const double* a, const double* b, std::size_t n) {
    __m512d acc0 = _mm512_setzero_pd();
    __m512d acc1 = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), acc0);
        acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i + 8), _mm512_loadu_pd(b + i + 8), acc1);
    }
    for (; i + kLanes <= n; i += kLanes) {
        acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), acc0);
    }
    if (i < n) {
        const __mmask8 m = tail_mask(n - i);
        acc1 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(m, a + i), _mm512_maskz_loadu_pd(m, b + i), acc1);
    }
    return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

// R rows of z, columns [j, j+16).
template <int R>
inline void affine_block16(const double* x, std::size_t in, const double* w, std::size_t out,
                           const double* bias, double* z, std::size_t j) {
    __m512d acc[R][2];
    const __m512d b0 = bias != nullptr ? _mm512_loadu_pd(bias + j) : _mm512_setzero_pd();
    const __m512d b1 = bias != nullptr ? _mm512_loadu_pd(bias + j + 8) : _mm512_setzero_pd();
    for (int i = 0; i < R; ++i) {
        acc[i][0] = b0;
        acc[i][1] = b1;
    }
    for (std::size_t p = 0; p < in; ++p) {
        const __m512d w0 = _mm512_loadu_pd(w + p * out + j);
        const __m512d w1 = _mm512_loadu_pd(w + p * out + j + 8);
        for (int i = 0; i < R; ++i) {
            const __m512d xb = _mm512_set1_pd(x[i * in + p]);
            acc[i][0] = _mm512_fmadd_pd(xb, w0, acc[i][0]);
            acc[i][1] = _mm512_fmadd_pd(xb, w1, acc[i][1]);
        }
    }
    for (int i = 0; i < R; ++i) {
        _mm512_storeu_pd(z + i * out + j, acc[i][0]);
        _mm512_storeu_pd(z + i * out + j + 8, acc[i][1]);
    }
}

// R rows of z, up to 8 columns starting at j (masked).
template <int R>
inline void affine_tail(const double* x, std::size_t in, const double* w, std::size_t out,
                        const double* bias, double* z, std::size_t j, std::size_t count) {
    const __mmask8 m = tail_mask(count);
    __m512d acc[R];
    const __m512d b = bias != nullptr ? _mm512_maskz_loadu_pd(m, bias + j) : _mm512_setzero_pd();
    for (int i = 0; i < R; ++i) {
        acc[i] = b;
    }
    for (std::size_t p = 0; p < in; ++p) {
        const __m512d wv = _mm512_maskz_loadu_pd(m, w + p * out + j);
        for (int i = 0; i < R; ++i) {
            acc[i] = _mm512_fmadd_pd(_mm512_set1_pd(x[i * in + p]), wv, acc[i]);
        }
    }
    for (int i = 0; i < R; ++i) {
        _mm512_mask_storeu_pd(z + i * out + j, m, acc[i]);
    }
}

template <int R>
inline void affine_rows(const double* x, std::size_t in, const double* w, std::size_t out,
                        const double* bias, double* z) {
    std::size_t j = 0;
    for (; j + 16 <= out; j += 16) {
        affine_block16<R>(x, in, w, out, bias, z, j);
    }
    for (; j < out; j += kLanes) {
        affine_tail<R>(x, in, w, out, bias, z, j, std::min(kLanes, out - j));
    }
}

void affine(const double* x, std::size_t rows, std::size_t in, const double* w, std::size_t out,
            const double* bias, double* z) {
    if (out == 1) {
        const double b = bias != nullptr ? bias[0] : 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            z[r] = b + dot(x + r * in, w, in);
        }
        return;
    }
    std::size_t r = 0;
    for (; r + 8 <= rows; r += 8) {
        affine_rows<8>(x + r * in, in, w, out, bias, z + r * out);
    }
    for (; r + 2 <= rows; r += 2) {
        affine_rows<2>(x + r * in, in, w, out, bias, z + r * out);
    }
    for (; r < rows; ++r) {
        affine_rows<1>(x + r * in, in, w, out, bias, z + r * out);
    }
}

// P rows of dw, columns [j, j+16), accumulated over all batch rows.
template <int P>
inline void tn_block16(const double* x, std::size_t rows, std::size_t in, const double* dz,
                       std::size_t out, double* dw, std::size_t p0, std::size_t j) {
    __m512d acc[P][2];
    for (int i = 0; i < P; ++i) {
        acc[i][0] = _mm512_loadu_pd(dw + (p0 + i) * out + j);
        acc[i][1] = _mm512_loadu_pd(dw + (p0 + i) * out + j + 8);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const __m512d d0 = _mm512_loadu_pd(dz + r * out + j);
        const __m512d d1 = _mm512_loadu_pd(dz + r * out + j + 8);
        for (int i = 0; i < P; ++i) {
            const __m512d xb = _mm512_set1_pd(x[r * in + p0 + i]);
            acc[i][0] = _mm512_fmadd_pd(xb, d0, acc[i][0]);
            acc[i][1] = _mm512_fmadd_pd(xb, d1, acc[i][1]);
        }
    }
    for (int i = 0; i < P; ++i) {
        _mm512_storeu_pd(dw + (p0 + i) * out + j, acc[i][0]);
        _mm512_storeu_pd(dw + (p0 + i) * out + j + 8, acc[i][1]);
    }
}

void gemm_tn_acc(const double* x, std::size_t rows, std::size_t in, const double* dz,
                 std::size_t out, double* dw) {
    const std::size_t vec_cols = out - out % 16;
    std::size_t p = 0;
    for (; p + 8 <= in; p += 8) {
        for (std::size_t j = 0; j < vec_cols; j += 16) {
            tn_block16<8>(x, rows, in, dz, out, dw, p, j);
        }
    }
    for (; p < in; ++p) {
        for (std::size_t j = 0; j < vec_cols; j += 16) {
            tn_block16<1>(x, rows, in, dz, out, dw, p, j);
        }
    }
    if (vec_cols == out) {
        return;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t q = 0; q < in; ++q) {
            const double xv = x[r * in + q];
            for (std::size_t j = vec_cols; j < out; ++j) {
                dw[q * out + j] += xv * dz[r * out + j];
            }
        }
    }
}

void gemm_nt(const double* dz, std::size_t rows, std::size_t out, const double* w, std::size_t in,
             double* dx) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* dzr = dz + r * out;
        for (std::size_t p = 0; p < in; ++p) {
            dx[r * in + p] = dot(dzr, w + p * out, out);
        }
    }
}

void col_sum_acc(const double* dz, std::size_t rows, std::size_t out, double* db) {
    for (std::size_t j = 0; j < out; j += kLanes) {
        const __mmask8 m = tail_mask(std::min(kLanes, out - j));
        __m512d acc = _mm512_maskz_loadu_pd(m, db + j);
        for (std::size_t r = 0; r < rows; ++r) {
            acc = _mm512_add_pd(acc, _mm512_maskz_loadu_pd(m, dz + r * out + j));
        }
        _mm512_mask_storeu_pd(db + j, m, acc);
    }
}

inline __m512d elu512(__m512d z) {
    const __mmask8 positive = _mm512_cmp_pd_mask(z, _mm512_setzero_pd(), _CMP_GT_OQ);
    const __m512d neg = _mm512_sub_pd(exp512(z), _mm512_set1_pd(1.0));
    return _mm512_mask_blend_pd(positive, neg, z);
}

void elu(const double* z, double* h, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm512_storeu_pd(h + i, elu512(_mm512_loadu_pd(z + i)));
    }
    if (i < n) {
        const __mmask8 m = tail_mask(n - i);
        _mm512_mask_storeu_pd(h + i, m, elu512(_mm512_maskz_loadu_pd(m, z + i)));
    }
}

void elu_grad(const double* z, const double* h, double* g, std::size_t n) {
    const __m512d one = _mm512_set1_pd(1.0);
    for (std::size_t i = 0; i < n; i += kLanes) {
        const __mmask8 m = tail_mask(std::min(kLanes, n - i));
        const __mmask8 positive = _mm512_cmp_pd_mask(_mm512_maskz_loadu_pd(m, z + i), _mm512_setzero_pd(), _CMP_GT_OQ);
        const __m512d slope = _mm512_mask_blend_pd(positive, _mm512_add_pd(_mm512_maskz_loadu_pd(m, h + i), one), one);
        _mm512_mask_storeu_pd(g + i, m, _mm512_mul_pd(_mm512_maskz_loadu_pd(m, g + i), slope));
    }
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
          double beta1, double beta2, double eps, double bc1, double bc2) {
    const __m512d vb1 = _mm512_set1_pd(beta1);
    const __m512d vb2 = _mm512_set1_pd(beta2);
    const __m512d vc1 = _mm512_set1_pd(1.0 - beta1);
    const __m512d vc2 = _mm512_set1_pd(1.0 - beta2);
    const __m512d vbc1 = _mm512_set1_pd(bc1);
    const __m512d vbc2 = _mm512_set1_pd(bc2);
    const __m512d vlr = _mm512_set1_pd(lr);
    const __m512d veps = _mm512_set1_pd(eps);
    for (std::size_t i = 0; i < n; i += kLanes) {
        const __mmask8 k = tail_mask(std::min(kLanes, n - i));
        const __m512d g = _mm512_maskz_loadu_pd(k, grad + i);
        const __m512d mi = _mm512_add_pd(_mm512_mul_pd(vb1, _mm512_maskz_loadu_pd(k, m + i)), _mm512_mul_pd(vc1, g));
        const __m512d vi = _mm512_add_pd(_mm512_mul_pd(vb2, _mm512_maskz_loadu_pd(k, v + i)),
                                         _mm512_mul_pd(_mm512_mul_pd(vc2, g), g));
        _mm512_mask_storeu_pd(m + i, k, mi);
        _mm512_mask_storeu_pd(v + i, k, vi);
        const __m512d m_hat = _mm512_div_pd(mi, vbc1);
        const __m512d v_hat = _mm512_div_pd(vi, vbc2);
        const __m512d step = _mm512_div_pd(_mm512_mul_pd(vlr, m_hat), _mm512_add_pd(_mm512_sqrt_pd(v_hat), veps));
        _mm512_mask_storeu_pd(param + i, k, _mm512_sub_pd(_mm512_maskz_loadu_pd(k, param + i), step));
    }
}

double sum_exp_shifted(const double* x, std::size_t n, double shift) {
    const __m512d vs = _mm512_set1_pd(shift);
    __m512d acc = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        acc = _mm512_add_pd(acc, exp512(_mm512_sub_pd(_mm512_loadu_pd(x + i), vs)));
    }
    if (i < n) {
        const __mmask8 m = tail_mask(n - i);
        const __m512d e = exp512(_mm512_sub_pd(_mm512_maskz_loadu_pd(m, x + i), vs));
        acc = _mm512_mask_add_pd(acc, m, acc, e);
    }
    return _mm512_reduce_add_pd(acc);
}

} // namespace

const KernelTable& avx512_table() noexcept {
    static const KernelTable table{
        "avx512", affine, gemm_tn_acc, gemm_nt, col_sum_acc, elu, elu_grad, adam, sum_exp_shifted,
    };
    return table;
}

} // namespace explab::simd
