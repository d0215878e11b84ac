// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime feature check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "explab/simd/kernels.hpp"

namespace explab::simd {
namespace {

constexpr std::size_t kLanes = 4;

// exp via range reduction by ln2 and a degree-12 Taylor polynomial on
// [-ln2/2, ln2/2] (truncation < 2e-16 relative), exponent rebuilt from the
// integer part.
inline __m256d exp256(__m256d x) {
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d lo = _mm256_set1_pd(-708.39);
    const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), xc);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

    __m256d e = _mm256_set1_pd(1.0 / 479001600.0);
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 39916800.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 3628800.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 362880.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 40320.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 5040.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 720.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 120.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 24.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0 / 6.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(0.5));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0));
    e = _mm256_fmadd_pd(e, r, _mm256_set1_pd(1.0));

    // 2^n: n is integral, so adding 1.5*2^52 leaves it in the low mantissa bits.
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);
    const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                        _mm256_castpd_si256(magic));
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    __m256d result = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));

    result = _mm256_andnot_pd(underflow, result);
    return _mm256_blendv_pd(result, x, nan_mask);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + kLanes <= n; i += kLanes) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// R rows of z, columns [j, j+8).
template <int R>
inline void affine_block8(const double* x, std::size_t in, const double* w, std::size_t out,
                          const double* bias, double* z, std::size_t j) {
    __m256d acc[R][2];
    const __m256d b0 = bias != nullptr ? _mm256_loadu_pd(bias + j) : _mm256_setzero_pd();
    const __m256d b1 = bias != nullptr ? _mm256_loadu_pd(bias + j + 4) : _mm256_setzero_pd();
    for (int i = 0; i < R; ++i) {
        acc[i][0] = b0;
        acc[i][1] = b1;
    }
    for (std::size_t p = 0; p < in; ++p) {
        const __m256d w0 = _mm256_loadu_pd(w + p * out + j);
        const __m256d w1 = _mm256_loadu_pd(w + p * out + j + 4);
        for (int i = 0; i < R; ++i) {
            const __m256d xb = _mm256_broadcast_sd(x + i * in + p);
            acc[i][0] = _mm256_fmadd_pd(xb, w0, acc[i][0]);
            acc[i][1] = _mm256_fmadd_pd(xb, w1, acc[i][1]);
        }
    }
    for (int i = 0; i < R; ++i) {
        _mm256_storeu_pd(z + i * out + j, acc[i][0]);
        _mm256_storeu_pd(z + i * out + j + 4, acc[i][1]);
    }
}

template <int R>
inline void affine_rows(const double* x, std::size_t in, const double* w, std::size_t out,
                        const double* bias, double* z) {
    std::size_t j = 0;
    for (; j + 8 <= out; j += 8) {
        affine_block8<R>(x, in, w, out, bias, z, j);
    }
    for (; j < out; ++j) {
        for (int i = 0; i < R; ++i) {
            double acc = bias != nullptr ? bias[j] : 0.0;
            for (std::size_t p = 0; p < in; ++p) {
                acc += x[i * in + p] * w[p * out + j];
            }
            z[i * out + j] = acc;
        }
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
    for (; r + 6 <= rows; r += 6) {
        affine_rows<6>(x + r * in, in, w, out, bias, z + r * out);
    }
    for (; r + 2 <= rows; r += 2) {
        affine_rows<2>(x + r * in, in, w, out, bias, z + r * out);
    }
    for (; r < rows; ++r) {
        affine_rows<1>(x + r * in, in, w, out, bias, z + r * out);
    }
}

// P rows of dw, columns [j, j+8), accumulated over all batch rows.
template <int P>
inline void tn_block8(const double* x, std::size_t rows, std::size_t in, const double* dz,
                      std::size_t out, double* dw, std::size_t p0, std::size_t j) {
    __m256d acc[P][2];
    for (int i = 0; i < P; ++i) {
        acc[i][0] = _mm256_loadu_pd(dw + (p0 + i) * out + j);
        acc[i][1] = _mm256_loadu_pd(dw + (p0 + i) * out + j + 4);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const __m256d d0 = _mm256_loadu_pd(dz + r * out + j);
        const __m256d d1 = _mm256_loadu_pd(dz + r * out + j + 4);
        for (int i = 0; i < P; ++i) {
            const __m256d xb = _mm256_broadcast_sd(x + r * in + p0 + i);
            acc[i][0] = _mm256_fmadd_pd(xb, d0, acc[i][0]);
            acc[i][1] = _mm256_fmadd_pd(xb, d1, acc[i][1]);
        }
    }
    for (int i = 0; i < P; ++i) {
        _mm256_storeu_pd(dw + (p0 + i) * out + j, acc[i][0]);
        _mm256_storeu_pd(dw + (p0 + i) * out + j + 4, acc[i][1]);
    }
}

void gemm_tn_acc(const double* x, std::size_t rows, std::size_t in, const double* dz,
                 std::size_t out, double* dw) {
    const std::size_t vec_cols = out - out % 8;
    std::size_t p = 0;
    for (; p + 4 <= in; p += 4) {
        for (std::size_t j = 0; j < vec_cols; j += 8) {
            tn_block8<4>(x, rows, in, dz, out, dw, p, j);
        }
    }
    for (; p < in; ++p) {
        for (std::size_t j = 0; j < vec_cols; j += 8) {
            tn_block8<1>(x, rows, in, dz, out, dw, p, j);
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
    std::size_t j = 0;
    for (; j + kLanes <= out; j += kLanes) {
        __m256d acc = _mm256_loadu_pd(db + j);
        for (std::size_t r = 0; r < rows; ++r) {
            acc = _mm256_add_pd(acc, _mm256_loadu_pd(dz + r * out + j));
        }
        _mm256_storeu_pd(db + j, acc);
    }
    for (; j < out; ++j) {
        double acc = db[j];
        for (std::size_t r = 0; r < rows; ++r) {
            acc += dz[r * out + j];
        }
        db[j] = acc;
    }
}

inline __m256d elu256(__m256d z) {
    const __m256d positive = _mm256_cmp_pd(z, _mm256_setzero_pd(), _CMP_GT_OQ);
    const __m256d neg = _mm256_sub_pd(exp256(z), _mm256_set1_pd(1.0));
    return _mm256_blendv_pd(neg, z, positive);
}

void elu(const double* z, double* h, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(h + i, elu256(_mm256_loadu_pd(z + i)));
    }
    if (i < n) {
        alignas(32) double buf[kLanes] = {0.0, 0.0, 0.0, 0.0};
        std::copy(z + i, z + n, buf);
        _mm256_store_pd(buf, elu256(_mm256_load_pd(buf)));
        std::copy_n(buf, n - i, h + i);
    }
}

void elu_grad(const double* z, const double* h, double* g, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d positive = _mm256_cmp_pd(_mm256_loadu_pd(z + i), _mm256_setzero_pd(), _CMP_GT_OQ);
        const __m256d slope = _mm256_blendv_pd(_mm256_add_pd(_mm256_loadu_pd(h + i), one), one, positive);
        _mm256_storeu_pd(g + i, _mm256_mul_pd(_mm256_loadu_pd(g + i), slope));
    }
    for (; i < n; ++i) {
        if (!(z[i] > 0.0)) {
            g[i] *= h[i] + 1.0;
        }
    }
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
          double beta1, double beta2, double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vc1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vc2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(vc1, g));
        const __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(_mm256_mul_pd(vc2, g), g));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d m_hat = _mm256_div_pd(mi, vbc1);
        const __m256d v_hat = _mm256_div_pd(vi, vbc2);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps));
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
    }
    for (; i < n; ++i) {
        const double g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

double sum_exp_shifted(const double* x, std::size_t n, double shift) {
    const __m256d vs = _mm256_set1_pd(shift);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        acc = _mm256_add_pd(acc, exp256(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs)));
    }
    if (i < n) {
        alignas(32) double buf[kLanes];
        std::fill_n(buf, kLanes, -std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; i + k < n; ++k) {
            buf[k] = x[i + k] - shift;
        }
        acc = _mm256_add_pd(acc, exp256(_mm256_load_pd(buf)));
    }
    return hsum(acc);
}

} // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable table{
        "avx2", affine, gemm_tn_acc, gemm_nt, col_sum_acc, elu, elu_grad, adam, sum_exp_shifted,
    };
    return table;
}

} // namespace explab::simd
