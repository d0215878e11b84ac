#pragma once

// Scalar-output multilayer perceptron used as the MINE critic:
//   input -> dense(h1) -> ELU -> dense(h2) -> ELU -> dense(1)
// with hand-written backpropagation and an Adam optimizer.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "explab/matrix.hpp"

namespace explab {

struct HiddenDims {
    std::size_t first = 256;
    std::size_t second = 64;

    friend bool operator==(const HiddenDims&, const HiddenDims&) = default;
};

/// Weight is in x out; bias has `out` entries.
struct DenseLayer {
    Matrix weight;
    std::vector<double> bias;

    std::size_t in() const noexcept { return weight.rows(); }
    std::size_t out() const noexcept { return weight.cols(); }
};

inline constexpr std::size_t kMlpLayers = 3;

/// "W1", "b1", ... for layer index 0..2.
std::string weight_name(std::size_t layer);
std::string bias_name(std::size_t layer);

struct MlpParams {
    std::array<DenseLayer, kMlpLayers> layers;
    /// Bumped by every optimizer step; lets backward reject caches from older parameters.
    std::uint64_t version = 0;

    std::size_t input_dim() const noexcept { return layers[0].in(); }
    HiddenDims hidden() const noexcept { return {layers[0].out(), layers[1].out()}; }

    /// Xavier-uniform weights and zero biases. Layer k draws from seed mixed with k.
    static MlpParams xavier(std::size_t input_dim, HiddenDims hidden, std::uint64_t seed);
    static MlpParams zeros(std::size_t input_dim, HiddenDims hidden);
};

/// Same layout as MlpParams, holding d(loss)/d(parameter).
struct MlpGradients {
    std::array<DenseLayer, kMlpLayers> layers;

    static MlpGradients zeros_like(const MlpParams& params);
    void set_zero();
};

/// Everything backward needs from the matching forward call.
struct ActivationCache {
    Matrix input;
    Matrix pre1, act1;  // batch x h1
    Matrix pre2, act2;  // batch x h2
    std::vector<double> outputs;
    std::uint64_t params_version = 0;
};

/// Entries i.i.d. uniform on [-a, a], a = sqrt(6 / (in_dim + out_dim)).
Matrix xavier_init(std::uint64_t rng_seed, std::size_t in_dim, std::size_t out_dim);

/// ELU with alpha = 1.
double elu(double x) noexcept;

/// Runs the network on every row of `batch`; fills `cache` (reusing its storage).
void mlp_forward(const MlpParams& params, const Matrix& batch, ActivationCache& cache);

struct MlpForward {
    std::vector<double> outputs;
    ActivationCache cache;
};
MlpForward mlp_forward(const MlpParams& params, const Matrix& batch);

/// Scores only, processed in row chunks; no cache retained.
std::vector<double> mlp_scores(const MlpParams& params, const Matrix& batch);

/// Gradient of sum_i outputs[i] * output_grads[i] with respect to every parameter.
void mlp_backward(const MlpParams& params, const ActivationCache& cache,
                  std::span<const double> output_grads, MlpGradients& grads);
MlpGradients mlp_backward(const MlpParams& params, const ActivationCache& cache,
                          std::span<const double> output_grads);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    MlpGradients first_moment;
    MlpGradients second_moment;
    std::uint64_t step = 0;

    static AdamState for_params(const MlpParams& params, AdamConfig config = {});
};

/// One bias-corrected Adam update (descends `grads`). Throws NumericError naming
/// the first parameter tensor whose gradient is not finite; parameters are left
/// untouched in that case.
void adam_step(MlpParams& params, const MlpGradients& grads, AdamState& state);

} // namespace explab
