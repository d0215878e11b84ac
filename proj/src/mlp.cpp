#include "explab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "explab/error.hpp"
#include "explab/rng.hpp"
#include "explab/simd/kernels.hpp"

namespace explab {
namespace {

constexpr std::size_t kScoreChunk = 256;

void check_dims(std::size_t input_dim, HiddenDims hidden) {
    if (input_dim == 0 || hidden.first == 0 || hidden.second == 0) {
        throw std::invalid_argument("MLP dimensions must be positive");
    }
}

DenseLayer zero_layer(std::size_t in, std::size_t out) {
    return {Matrix(in, out), std::vector<double>(out, 0.0)};
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

std::string weight_name(std::size_t layer) { return "W" + std::to_string(layer + 1); }
std::string bias_name(std::size_t layer) { return "b" + std::to_string(layer + 1); }

Matrix xavier_init(std::uint64_t rng_seed, std::size_t in_dim, std::size_t out_dim) {
    if (in_dim == 0 || out_dim == 0) {
        throw std::invalid_argument("xavier_init: dimensions must be >= 1");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    Rng rng(rng_seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(in_dim, out_dim);
    for (double& v : w.values()) {
        v = dist(rng);
    }
    return w;
}

MlpParams MlpParams::xavier(std::size_t input_dim, HiddenDims hidden, std::uint64_t seed) {
    check_dims(input_dim, hidden);
    const std::array<std::size_t, 4> dims{input_dim, hidden.first, hidden.second, 1};
    MlpParams p;
    for (std::size_t k = 0; k < kMlpLayers; ++k) {
        p.layers[k].weight = xavier_init(derive_seed(seed, k), dims[k], dims[k + 1]);
        p.layers[k].bias.assign(dims[k + 1], 0.0);
    }
    return p;
}

MlpParams MlpParams::zeros(std::size_t input_dim, HiddenDims hidden) {
    check_dims(input_dim, hidden);
    MlpParams p;
    p.layers = {zero_layer(input_dim, hidden.first), zero_layer(hidden.first, hidden.second),
                zero_layer(hidden.second, 1)};
    return p;
}

MlpGradients MlpGradients::zeros_like(const MlpParams& params) {
    MlpGradients g;
    for (std::size_t k = 0; k < kMlpLayers; ++k) {
        g.layers[k] = zero_layer(params.layers[k].in(), params.layers[k].out());
    }
    return g;
}

void MlpGradients::set_zero() {
    for (auto& layer : layers) {
        layer.weight.fill(0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
}

double elu(double x) noexcept { return x > 0.0 ? x : std::expm1(x); }

void mlp_forward(const MlpParams& params, const Matrix& batch, ActivationCache& cache) {
    const auto& l = params.layers;
    if (batch.cols() != params.input_dim()) {
        throw ShapeError("mlp_forward: batch has " + std::to_string(batch.cols()) +
                         " columns, network expects " + std::to_string(params.input_dim()));
    }
    const auto& k = simd::active_kernels();
    const std::size_t n = batch.rows();
    const std::size_t h1 = l[0].out();
    const std::size_t h2 = l[1].out();

    cache.input = batch;
    cache.pre1.reshape(n, h1);
    cache.act1.reshape(n, h1);
    cache.pre2.reshape(n, h2);
    cache.act2.reshape(n, h2);
    cache.outputs.resize(n);

    k.affine(batch.data(), n, batch.cols(), l[0].weight.data(), h1, l[0].bias.data(), cache.pre1.data());
    k.elu(cache.pre1.data(), cache.act1.data(), n * h1);
    k.affine(cache.act1.data(), n, h1, l[1].weight.data(), h2, l[1].bias.data(), cache.pre2.data());
    k.elu(cache.pre2.data(), cache.act2.data(), n * h2);
    k.affine(cache.act2.data(), n, h2, l[2].weight.data(), 1, l[2].bias.data(), cache.outputs.data());
    cache.params_version = params.version;
}

MlpForward mlp_forward(const MlpParams& params, const Matrix& batch) {
    MlpForward result;
    mlp_forward(params, batch, result.cache);
    result.outputs = result.cache.outputs;
    return result;
}

std::vector<double> mlp_scores(const MlpParams& params, const Matrix& batch) {
    const auto& l = params.layers;
    if (batch.cols() != params.input_dim()) {
        throw ShapeError("mlp_scores: batch has " + std::to_string(batch.cols()) +
                         " columns, network expects " + std::to_string(params.input_dim()));
    }
    const auto& k = simd::active_kernels();
    const std::size_t h1 = l[0].out();
    const std::size_t h2 = l[1].out();
    std::vector<double> a1(kScoreChunk * h1), a2(kScoreChunk * h2);
    std::vector<double> out(batch.rows());
    for (std::size_t r = 0; r < batch.rows(); r += kScoreChunk) {
        const std::size_t rows = std::min(kScoreChunk, batch.rows() - r);
        k.affine(batch.data() + r * batch.cols(), rows, batch.cols(), l[0].weight.data(), h1,
                 l[0].bias.data(), a1.data());
        k.elu(a1.data(), a1.data(), rows * h1);
        k.affine(a1.data(), rows, h1, l[1].weight.data(), h2, l[1].bias.data(), a2.data());
        k.elu(a2.data(), a2.data(), rows * h2);
        k.affine(a2.data(), rows, h2, l[2].weight.data(), 1, l[2].bias.data(), out.data() + r);
    }
    return out;
}

void mlp_backward(const MlpParams& params, const ActivationCache& cache,
                  std::span<const double> output_grads, MlpGradients& grads) {
    const auto& l = params.layers;
    const std::size_t n = cache.input.rows();
    const std::size_t h1 = l[0].out();
    const std::size_t h2 = l[1].out();
    if (cache.params_version != params.version) {
        throw ShapeError("mlp_backward: activation cache is stale (parameters changed since forward)");
    }
    if (cache.input.cols() != params.input_dim() || cache.pre1.cols() != h1 || cache.pre2.cols() != h2 ||
        cache.pre1.rows() != n || cache.pre2.rows() != n || cache.outputs.size() != n) {
        throw ShapeError("mlp_backward: activation cache does not match network shape");
    }
    if (output_grads.size() != n) {
        throw ShapeError("mlp_backward: " + std::to_string(output_grads.size()) +
                         " output gradients for a batch of " + std::to_string(n));
    }
    const auto& k = simd::active_kernels();
    if (grads.layers[0].weight.rows() != params.input_dim() || grads.layers[0].out() != h1 ||
        grads.layers[1].out() != h2) {
        grads = MlpGradients::zeros_like(params);
    } else {
        grads.set_zero();
    }

    // Output layer: d/dW3 = act2^T g, d/db3 = sum g.
    k.gemm_tn_acc(cache.act2.data(), n, h2, output_grads.data(), 1, grads.layers[2].weight.data());
    k.col_sum_acc(output_grads.data(), n, 1, grads.layers[2].bias.data());

    Matrix d2(n, h2);
    k.gemm_nt(output_grads.data(), n, 1, l[2].weight.data(), h2, d2.data());
    k.elu_grad(cache.pre2.data(), cache.act2.data(), d2.data(), n * h2);
    k.gemm_tn_acc(cache.act1.data(), n, h1, d2.data(), h2, grads.layers[1].weight.data());
    k.col_sum_acc(d2.data(), n, h2, grads.layers[1].bias.data());

    Matrix d1(n, h1);
    k.gemm_nt(d2.data(), n, h2, l[1].weight.data(), h1, d1.data());
    k.elu_grad(cache.pre1.data(), cache.act1.data(), d1.data(), n * h1);
    k.gemm_tn_acc(cache.input.data(), n, cache.input.cols(), d1.data(), h1, grads.layers[0].weight.data());
    k.col_sum_acc(d1.data(), n, h1, grads.layers[0].bias.data());
}

MlpGradients mlp_backward(const MlpParams& params, const ActivationCache& cache,
                          std::span<const double> output_grads) {
    MlpGradients grads = MlpGradients::zeros_like(params);
    mlp_backward(params, cache, output_grads, grads);
    return grads;
}

AdamState AdamState::for_params(const MlpParams& params, AdamConfig config) {
    return {config, MlpGradients::zeros_like(params), MlpGradients::zeros_like(params), 0};
}

void adam_step(MlpParams& params, const MlpGradients& grads, AdamState& state) {
    for (std::size_t i = 0; i < kMlpLayers; ++i) {
        const auto& p = params.layers[i];
        const auto& g = grads.layers[i];
        const auto& m = state.first_moment.layers[i];
        if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() ||
            g.bias.size() != p.bias.size() || m.weight.rows() != p.weight.rows() ||
            m.weight.cols() != p.weight.cols()) {
            throw ShapeError("adam_step: gradient/state shape mismatch at layer " + std::to_string(i + 1));
        }
        if (!g.weight.all_finite()) {
            throw NumericError("adam_step: non-finite gradient in " + weight_name(i));
        }
        if (!all_finite(g.bias)) {
            throw NumericError("adam_step: non-finite gradient in " + bias_name(i));
        }
    }

    const auto& k = simd::active_kernels();
    const auto& c = state.config;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < kMlpLayers; ++i) {
        auto& p = params.layers[i];
        const auto& g = grads.layers[i];
        auto& m = state.first_moment.layers[i];
        auto& v = state.second_moment.layers[i];
        k.adam(p.weight.data(), g.weight.data(), m.weight.data(), v.weight.data(), p.weight.size(), c.lr,
               c.beta1, c.beta2, c.eps, bc1, bc2);
        k.adam(p.bias.data(), g.bias.data(), m.bias.data(), v.bias.data(), p.bias.size(), c.lr, c.beta1,
               c.beta2, c.eps, bc1, bc2);
    }
    params.version += 1;
}

} // namespace explab
