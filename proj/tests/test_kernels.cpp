#include <stdexcept>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <doctest.h>

#include "explab/simd/cpu_features.hpp"
#include "explab/simd/kernels.hpp"

using namespace explab::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max(1.0, std::abs(b[i]));
        REQUIRE_MESSAGE(std::abs(a[i] - b[i]) <= tol * scale, "index " << i << ": " << a[i] << " vs " << b[i]);
    }
}

// Shapes that hit every microkernel block size and every tail.
const std::size_t kRows[] = {1, 2, 3, 5, 7, 8, 9, 13, 17, 33};
const std::size_t kIn[] = {1, 2, 3, 7, 8, 9, 17, 65};
const std::size_t kOut[] = {1, 2, 3, 7, 8, 9, 15, 16, 17, 33, 64};

} // namespace

TEST_CASE("scalar table is always first and the active table is one of the available ones") {
    const auto tables = available_kernels();
    REQUIRE(!tables.empty());
    CHECK(tables.front() == &scalar_kernels());
    bool found = false;
    for (const auto* t : tables) found = found || t == &active_kernels();
    CHECK(found);
    const auto cpu = CpuFeatures::detect();
    if (avx2_kernels() != nullptr) CHECK((cpu.avx2 && cpu.fma));
    if (avx512_kernels() != nullptr) CHECK(cpu.avx512f);
    MESSAGE("active kernels: " << active_kernels().name);
}

TEST_CASE("affine, gemm_tn_acc, gemm_nt and col_sum_acc match the scalar reference") {
    const auto& ref = scalar_kernels();
    std::mt19937_64 rng(11);
    for (const auto* table : available_kernels()) {
        CAPTURE(table->name);
        for (std::size_t rows : kRows) {
            for (std::size_t in : kIn) {
                for (std::size_t out : kOut) {
                    CAPTURE(rows);
                    CAPTURE(in);
                    CAPTURE(out);
                    const auto x = random_vector(rng, rows * in);
                    const auto w = random_vector(rng, in * out);
                    const auto bias = random_vector(rng, out);
                    const auto dz = random_vector(rng, rows * out);

                    std::vector<double> z_ref(rows * out), z(rows * out);
                    ref.affine(x.data(), rows, in, w.data(), out, bias.data(), z_ref.data());
                    table->affine(x.data(), rows, in, w.data(), out, bias.data(), z.data());
                    check_close(z, z_ref, 1e-12);
                    ref.affine(x.data(), rows, in, w.data(), out, nullptr, z_ref.data());
                    table->affine(x.data(), rows, in, w.data(), out, nullptr, z.data());
                    check_close(z, z_ref, 1e-12);

                    auto dw_ref = random_vector(rng, in * out);
                    auto dw = dw_ref;
                    ref.gemm_tn_acc(x.data(), rows, in, dz.data(), out, dw_ref.data());
                    table->gemm_tn_acc(x.data(), rows, in, dz.data(), out, dw.data());
                    check_close(dw, dw_ref, 1e-12);

                    std::vector<double> dx_ref(rows * in), dx(rows * in);
                    ref.gemm_nt(dz.data(), rows, out, w.data(), in, dx_ref.data());
                    table->gemm_nt(dz.data(), rows, out, w.data(), in, dx.data());
                    check_close(dx, dx_ref, 1e-12);

                    auto db_ref = random_vector(rng, out);
                    auto db = db_ref;
                    ref.col_sum_acc(dz.data(), rows, out, db_ref.data());
                    table->col_sum_acc(dz.data(), rows, out, db.data());
                    check_close(db, db_ref, 1e-12);
                }
            }
        }
    }
}

TEST_CASE("elementwise kernels match the scalar reference on every length") {
    const auto& ref = scalar_kernels();
    std::mt19937_64 rng(12);
    for (const auto* table : available_kernels()) {
        CAPTURE(table->name);
        for (std::size_t n = 0; n <= 70; ++n) {
            CAPTURE(n);
            const auto z = random_vector(rng, n, 3.0);
            std::vector<double> h_ref(n), h(n);
            ref.elu(z.data(), h_ref.data(), n);
            table->elu(z.data(), h.data(), n);
            check_close(h, h_ref, 1e-14);

            const auto g0 = random_vector(rng, n);
            auto g_ref = g0;
            auto g = g0;
            ref.elu_grad(z.data(), h_ref.data(), g_ref.data(), n);
            table->elu_grad(z.data(), h_ref.data(), g.data(), n);
            check_close(g, g_ref, 1e-14);

            auto p_ref = random_vector(rng, n);
            auto m_ref = random_vector(rng, n, 0.1);
            auto v_ref = random_vector(rng, n, 0.1);
            for (auto& v : v_ref) v = std::abs(v);
            auto p = p_ref, m = m_ref, v = v_ref;
            const auto grad = random_vector(rng, n);
            ref.adam(p_ref.data(), grad.data(), m_ref.data(), v_ref.data(), n, 1e-3, 0.9, 0.999, 1e-8, 0.19, 0.003);
            table->adam(p.data(), grad.data(), m.data(), v.data(), n, 1e-3, 0.9, 0.999, 1e-8, 0.19, 0.003);
            check_close(p, p_ref, 1e-14);
            check_close(m, m_ref, 1e-14);
            check_close(v, v_ref, 1e-14);

            const double s_ref = ref.sum_exp_shifted(z.data(), n, 2.0);
            const double s = table->sum_exp_shifted(z.data(), n, 2.0);
            CHECK(std::abs(s - s_ref) <= 1e-13 * std::max(1.0, s_ref));
        }
    }
}

TEST_CASE("vector exp is accurate across the whole double range") {
    const auto& ref = scalar_kernels();
    std::vector<double> xs;
    for (double x = -745.0; x <= 709.0; x += 0.37) xs.push_back(x);
    for (double x = -1.0; x <= 1.0; x += 1.0 / 1024) xs.push_back(x);
    xs.push_back(0.0);
    xs.push_back(-0.0);
    xs.push_back(-800.0);
    xs.push_back(-std::numeric_limits<double>::infinity());
    for (const auto* table : available_kernels()) {
        CAPTURE(table->name);
        for (double x : xs) {
            CAPTURE(x);
            const double a = table->sum_exp_shifted(&x, 1, 0.0);
            const double b = ref.sum_exp_shifted(&x, 1, 0.0);
            if (b < std::numeric_limits<double>::min()) {
                // Subnormal results may flush to zero in the vector path.
                CHECK(a <= std::numeric_limits<double>::min());
            } else {
                CHECK(std::abs(a - b) <= 4e-16 * b);
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK(std::isnan(table->sum_exp_shifted(&nan, 1, 0.0)));
    }
}
