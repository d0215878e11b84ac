#include <algorithm>
#include <cmath>

#include "explab/simd/kernels.hpp"

namespace explab::simd {
namespace {

void affine(const double* x, std::size_t rows, std::size_t in, const double* w, std::size_t out,
            const double* bias, double* z) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* zr = z + r * out;
        if (bias != nullptr) {
            std::copy_n(bias, out, zr);
        } else {
            std::fill_n(zr, out, 0.0);
        }
        const double* xr = x + r * in;
        for (std::size_t p = 0; p < in; ++p) {
            const double xv = xr[p];
            const double* wp = w + p * out;
            for (std::size_t j = 0; j < out; ++j) {
                zr[j] += xv * wp[j];
            }
        }
    }
}

void gemm_tn_acc(const double* x, std::size_t rows, std::size_t in, const double* dz,
                 std::size_t out, double* dw) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * in;
        const double* dzr = dz + r * out;
        for (std::size_t p = 0; p < in; ++p) {
            const double xv = xr[p];
            double* dwp = dw + p * out;
            for (std::size_t j = 0; j < out; ++j) {
                dwp[j] += xv * dzr[j];
            }
        }
    }
}

void gemm_nt(const double* dz, std::size_t rows, std::size_t out, const double* w, std::size_t in,
             double* dx) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* dzr = dz + r * out;
        for (std::size_t p = 0; p < in; ++p) {
            const double* wp = w + p * out;
            double acc = 0.0;
            for (std::size_t j = 0; j < out; ++j) {
                acc += dzr[j] * wp[j];
            }
            dx[r * in + p] = acc;
        }
    }
}

void col_sum_acc(const double* dz, std::size_t rows, std::size_t out, double* db) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* dzr = dz + r * out;
        for (std::size_t j = 0; j < out; ++j) {
            db[j] += dzr[j];
        }
    }
}

void elu(const double* z, double* h, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = z[i] > 0.0 ? z[i] : std::expm1(z[i]);
    }
}

void elu_grad(const double* z, const double* h, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!(z[i] > 0.0)) {
            g[i] *= h[i] + 1.0;
        }
    }
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
          double beta1, double beta2, double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

double sum_exp_shifted(const double* x, std::size_t n, double shift) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += std::exp(x[i] - shift);
    }
    return acc;
}

} // namespace

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{
        "scalar", affine, gemm_tn_acc, gemm_nt, col_sum_acc, elu, elu_grad, adam, sum_exp_shifted,
    };
    return table;
}

} // namespace explab::simd
