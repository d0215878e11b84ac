#pragma once

// Mutual Information Neural Estimation with the Donsker-Varadhan bound
//   I(F; A) >= E_joint[T(f, a)] - log E_marginal[exp T(f, a)]
// where T is the critic network from mlp.hpp and the marginal sample is the
// joint sample with its attribute column permuted.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "explab/matrix.hpp"
#include "explab/mlp.hpp"
#include "explab/rng.hpp"

namespace explab {

struct MineConfig {
    HiddenDims hidden_dims{};
    double lr = 1e-3;
    std::size_t batch_size = 100;
    /// Upper bound on optimizer steps.
    std::size_t train_steps = 2000;
    /// Passes over the data allowed before training stops early; 0 disables the
    /// cap. Repeated passes let the critic memorize individual pairs, which
    /// inflates the estimate on the data it was trained on.
    double max_epochs = 10.0;
    /// Fraction of final steps whose full-data bound is averaged into the estimate.
    double estimate_window = 0.1;
    double ema_rate = 0.01;
    bool use_ema_correction = true;
    std::uint64_t rng_seed = 0;
    bool standardize_inputs = true;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
    /// Steps actually run on n samples: train_steps, capped by max_epochs.
    std::size_t effective_steps(std::size_t n) const;
    /// Number of trailing steps (of `steps`) evaluated on the full dataset, >= 1.
    std::size_t window_steps(std::size_t steps) const;
};

struct MiEstimate {
    double mi_nats = 0.0;
    /// Minibatch bound at every training step.
    std::vector<double> trace;
    /// Full-data bound at each step of the estimate window; mi_nats is their mean.
    std::vector<double> window;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    std::size_t batch_size = 0;
    std::vector<std::string> warnings;
};

/// log(mean(exp(x))), shifted by max(x) so any magnitude is safe.
double log_mean_exp(std::span<const double> x);

/// mean(joint) - log_mean_exp(marginal).
double dv_bound(std::span<const double> joint_scores, std::span<const double> marginal_scores);

/// [features | permuted attributes] for a uniformly random permutation drawn from `rng`.
Matrix shuffle_marginal(const Matrix& batch_features, std::span<const double> batch_attributes, Rng& rng);

/// Z-scores a column in place (population std). Constant columns become zeros.
void standardize(std::span<double> values);
/// Z-scores every column of `m` in place.
void standardize_columns(Matrix& m);

/// Trains a fresh critic on (features, attributes) and returns the MI estimate in nats.
MiEstimate train_mine(const Matrix& features, std::span<const double> attributes, const MineConfig& config);

} // namespace explab
