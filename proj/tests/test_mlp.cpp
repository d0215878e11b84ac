#include <stdexcept>
#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "explab/error.hpp"
#include "explab/mlp.hpp"
#include "oracles.hpp"

using namespace explab;

TEST_CASE("xavier_init draws inside the Glorot bound with the Glorot variance") {
    const Matrix one = xavier_init(3, 1, 1);
    CHECK(std::abs(one(0, 0)) <= std::sqrt(3.0));

    const Matrix w = xavier_init(7, 100, 100);
    const double bound = std::sqrt(6.0 / 200.0);
    double sum_sq = 0.0;
    for (double v : w.values()) {
        CHECK(std::abs(v) <= bound);
        sum_sq += v * v;
    }
    const double var = sum_sq / static_cast<double>(w.size());
    CHECK(var == doctest::Approx(0.01).epsilon(0.2));

    CHECK(xavier_init(7, 100, 100) == w);
    CHECK_FALSE(xavier_init(8, 100, 100) == w);
    CHECK_THROWS_AS(xavier_init(1, 0, 4), std::invalid_argument);
}

TEST_CASE("elu closed-form values and 1-Lipschitz") {
    CHECK(elu(0.0) == 0.0);
    CHECK(elu(1.0) == 1.0);
    CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-15));
    CHECK(elu(-1.0) == doctest::Approx(-0.6321).epsilon(1e-4));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 10000; ++i) {
        const double x = u(rng), y = u(rng);
        CHECK(std::abs(elu(x) - elu(y)) <= std::abs(x - y));
    }
}

TEST_CASE("forward pass on zero and identity networks") {
    const HiddenDims one{1, 1};
    auto zero = MlpParams::zeros(3, {4, 2});
    const Matrix batch = Matrix::from_rows({{1, -2, 3}, {0.5, 0.5, 9}});
    for (double v : mlp_forward(zero, batch).outputs) CHECK(v == 0.0);

    auto id = MlpParams::zeros(1, one);
    for (auto& layer : id.layers) layer.weight(0, 0) = 1.0;
    const auto out = mlp_forward(id, Matrix::from_rows({{2.0}})).outputs;
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 2.0);

    CHECK_THROWS_AS(mlp_forward(zero, Matrix(2, 4)), ShapeError);
}

TEST_CASE("forward pass stays finite and mlp_scores matches mlp_forward") {
    const auto params = MlpParams::xavier(5, {32, 8}, 9);
    Matrix x(600, 5);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 30.0);
    for (auto& v : x.values()) v = normal(rng);
    const auto fwd = mlp_forward(params, x);
    const auto scores = mlp_scores(params, x);
    REQUIRE(scores.size() == 600);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(std::isfinite(fwd.outputs[i]));
        CHECK(scores[i] == doctest::Approx(fwd.outputs[i]).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto inst = oracle::random_grad_instance(1000 + seed);
        const auto check = oracle::check_gradients(inst.params, inst.x, inst.g);
        CHECK(check.entries > 0);
        worst = std::max(worst, check.max_rel_error);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("backward linearity and error cases") {
    const auto inst = oracle::random_grad_instance(77);
    const auto fwd = mlp_forward(inst.params, inst.x);

    const std::vector<double> zeros(inst.x.rows(), 0.0);
    const auto g0 = mlp_backward(inst.params, fwd.cache, zeros);
    for (const auto& layer : g0.layers) {
        for (double v : layer.weight.values()) CHECK(v == 0.0);
        for (double v : layer.bias) CHECK(v == 0.0);
    }

    const Matrix single = inst.x.gather_rows(std::vector<std::size_t>{0});
    const Matrix doubled = inst.x.gather_rows(std::vector<std::size_t>{0, 0});
    const auto one = mlp_backward(inst.params, mlp_forward(inst.params, single).cache, std::vector<double>{1.0});
    const auto two = mlp_backward(inst.params, mlp_forward(inst.params, doubled).cache, std::vector<double>{1.0, 1.0});
    for (std::size_t k = 0; k < kMlpLayers; ++k) {
        for (std::size_t i = 0; i < one.layers[k].weight.size(); ++i)
            CHECK(two.layers[k].weight.data()[i] == doctest::Approx(2.0 * one.layers[k].weight.data()[i]).epsilon(1e-12));
        for (std::size_t i = 0; i < one.layers[k].bias.size(); ++i)
            CHECK(two.layers[k].bias[i] == doctest::Approx(2.0 * one.layers[k].bias[i]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(mlp_backward(inst.params, fwd.cache, std::vector<double>(inst.x.rows() + 1, 1.0)), ShapeError);
    auto moved = inst.params;
    auto state = AdamState::for_params(moved);
    adam_step(moved, MlpGradients::zeros_like(moved), state);
    CHECK_THROWS_AS(mlp_backward(moved, fwd.cache, inst.g), ShapeError);
}

TEST_CASE("adam: zero gradient, first-step magnitude, symmetry") {
    auto params = MlpParams::xavier(3, {4, 2}, 1);
    const auto before = params;
    auto state = AdamState::for_params(params);
    adam_step(params, MlpGradients::zeros_like(params), state);
    CHECK(state.step == 1);
    for (std::size_t k = 0; k < kMlpLayers; ++k) CHECK(params.layers[k].weight == before.layers[k].weight);

    for (double g : {1e-3, 0.5, 42.0, -7.0}) {
        CAPTURE(g);
        auto p = MlpParams::xavier(3, {4, 2}, 2);
        const auto p0 = p;
        auto grads = MlpGradients::zeros_like(p);
        for (auto& layer : grads.layers) {
            layer.weight.fill(g);
            std::fill(layer.bias.begin(), layer.bias.end(), g);
        }
        auto s = AdamState::for_params(p);
        adam_step(p, grads, s);
        const double expected = 1e-3 * std::abs(g) / (std::abs(g) + 1e-8);
        for (std::size_t k = 0; k < kMlpLayers; ++k) {
            for (std::size_t i = 0; i < p.layers[k].weight.size(); ++i) {
                const double step = p0.layers[k].weight.data()[i] - p.layers[k].weight.data()[i];
                CHECK(std::abs(step) == doctest::Approx(expected).epsilon(1e-9));
                CHECK((step > 0) == (g > 0));
            }
        }
    }

    auto p = MlpParams::zeros(2, {2, 2});
    auto grads = MlpGradients::zeros_like(p);
    grads.layers[0].weight(0, 0) = 0.3;
    grads.layers[1].weight(1, 1) = 0.3;
    auto s = AdamState::for_params(p);
    for (int i = 0; i < 5; ++i) adam_step(p, grads, s);
    CHECK(p.layers[0].weight(0, 0) == p.layers[1].weight(1, 1));
}

TEST_CASE("adam rejects non-finite gradients and names the tensor") {
    auto p = MlpParams::xavier(2, {3, 3}, 4);
    auto grads = MlpGradients::zeros_like(p);
    grads.layers[1].weight(0, 2) = std::numeric_limits<double>::quiet_NaN();
    auto s = AdamState::for_params(p);
    const auto before = p;
    try {
        adam_step(p, grads, s);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("W2") != std::string::npos);
    }
    CHECK(p.layers[0].weight == before.layers[0].weight);

    grads.layers[1].weight(0, 2) = 0.0;
    grads.layers[2].bias[0] = std::numeric_limits<double>::infinity();
    try {
        adam_step(p, grads, s);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("b3") != std::string::npos);
    }
}

TEST_CASE("training steps are bit-identical for identical seeds") {
    auto run = [] {
        auto p = MlpParams::xavier(4, {16, 8}, 123);
        auto s = AdamState::for_params(p);
        Matrix x(8, 4);
        std::mt19937_64 rng(3);
        std::normal_distribution<double> normal;
        for (auto& v : x.values()) v = normal(rng);
        std::vector<double> g(8, 0.125);
        for (int k = 0; k < 20; ++k) {
            const auto fwd = mlp_forward(p, x);
            adam_step(p, mlp_backward(p, fwd.cache, g), s);
        }
        return p;
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t k = 0; k < kMlpLayers; ++k) {
        CHECK(a.layers[k].weight == b.layers[k].weight);
        CHECK(a.layers[k].bias == b.layers[k].bias);
    }
}
