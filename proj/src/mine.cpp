#include "explab/mine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "explab/error.hpp"
#include "explab/simd/kernels.hpp"

namespace explab {
namespace {

constexpr std::size_t kEvalChunk = 256;

// RNG streams derived from the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kEvalStream = 3;

double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double log_add_exp(double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::vector<std::size_t> identity_permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return p;
}

// Full-data bound for the current critic. The first-layer feature product is
// shared between the joint and marginal passes; only the attribute term differs.
class FullDataEvaluator {
public:
    FullDataEvaluator(const Matrix& features, std::span<const double> attributes)
        : features_(features), attributes_(attributes), joint_(features.rows()), marginal_(features.rows()) {}

    double evaluate(const MlpParams& params, std::span<const std::size_t> perm) {
        const auto& k = simd::active_kernels();
        const auto& l = params.layers;
        const std::size_t n = features_.rows();
        const std::size_t m = features_.cols();
        const std::size_t h1 = l[0].out();
        const std::size_t h2 = l[1].out();
        const double* w_attr = l[0].weight.data() + m * h1;
        const double* b1 = l[0].bias.data();

        shared_.resize(kEvalChunk * h1);
        act1_.resize(2 * kEvalChunk * h1);
        act2_.resize(2 * kEvalChunk * h2);
        out_.resize(2 * kEvalChunk);

        for (std::size_t r0 = 0; r0 < n; r0 += kEvalChunk) {
            const std::size_t rows = std::min(kEvalChunk, n - r0);
            k.affine(features_.data() + r0 * m, rows, m, l[0].weight.data(), h1, b1, shared_.data());
            for (std::size_t i = 0; i < rows; ++i) {
                const double a_joint = attributes_[r0 + i];
                const double a_marg = attributes_[perm[r0 + i]];
                const double* s = shared_.data() + i * h1;
                double* zj = act1_.data() + i * h1;
                double* zm = act1_.data() + (rows + i) * h1;
                for (std::size_t j = 0; j < h1; ++j) {
                    zj[j] = s[j] + a_joint * w_attr[j];
                    zm[j] = s[j] + a_marg * w_attr[j];
                }
            }
            const std::size_t stacked = 2 * rows;
            k.elu(act1_.data(), act1_.data(), stacked * h1);
            k.affine(act1_.data(), stacked, h1, l[1].weight.data(), h2, l[1].bias.data(), act2_.data());
            k.elu(act2_.data(), act2_.data(), stacked * h2);
            k.affine(act2_.data(), stacked, h2, l[2].weight.data(), 1, l[2].bias.data(), out_.data());
            std::copy_n(out_.data(), rows, joint_.data() + r0);
            std::copy_n(out_.data() + rows, rows, marginal_.data() + r0);
        }
        return dv_bound(joint_, marginal_);
    }

private:
    const Matrix& features_;
    std::span<const double> attributes_;
    std::vector<double> joint_, marginal_;
    std::vector<double> shared_, act1_, act2_, out_;
};

} // namespace

void MineConfig::validate() const {
    if (hidden_dims.first == 0 || hidden_dims.second == 0) {
        throw std::invalid_argument("MineConfig: hidden widths must be positive");
    }
    if (batch_size < 2) {
        throw std::invalid_argument("MineConfig: batch_size must be >= 2");
    }
    if (train_steps == 0) {
        throw std::invalid_argument("MineConfig: train_steps must be >= 1");
    }
    if (!(estimate_window > 0.0 && estimate_window <= 1.0)) {
        throw std::invalid_argument("MineConfig: estimate_window must lie in (0, 1]");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw std::invalid_argument("MineConfig: lr must be positive");
    }
    if (!(max_epochs >= 0.0) || !std::isfinite(max_epochs)) {
        throw std::invalid_argument("MineConfig: max_epochs must be >= 0");
    }
    if (!(ema_rate > 0.0 && ema_rate <= 1.0)) {
        throw std::invalid_argument("MineConfig: ema_rate must lie in (0, 1]");
    }
}

std::size_t MineConfig::effective_steps(std::size_t n) const {
    if (max_epochs == 0.0 || n == 0) {
        return train_steps;
    }
    const std::size_t batch = std::min(n, std::max(batch_size, std::size_t{2}));
    const double raw = max_epochs * static_cast<double>(n) / static_cast<double>(batch);
    const auto cap = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(cap, 1, train_steps);
}

std::size_t MineConfig::window_steps(std::size_t steps) const {
    const double raw = estimate_window * static_cast<double>(steps);
    const auto w = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(w, 1, steps);
}

double log_mean_exp(std::span<const double> x) {
    if (x.empty()) {
        throw std::invalid_argument("log_mean_exp: empty input");
    }
    const double hi = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(hi)) {
        return hi;
    }
    const double s = simd::active_kernels().sum_exp_shifted(x.data(), x.size(), hi);
    return hi + std::log(s / static_cast<double>(x.size()));
}

double dv_bound(std::span<const double> joint_scores, std::span<const double> marginal_scores) {
    if (joint_scores.empty() || marginal_scores.empty()) {
        throw std::invalid_argument("dv_bound: score vectors must be non-empty");
    }
    return mean(joint_scores) - log_mean_exp(marginal_scores);
}

Matrix shuffle_marginal(const Matrix& batch_features, std::span<const double> batch_attributes, Rng& rng) {
    if (batch_features.rows() != batch_attributes.size()) {
        throw ShapeError("shuffle_marginal: " + std::to_string(batch_features.rows()) + " feature rows but " +
                         std::to_string(batch_attributes.size()) + " attributes");
    }
    auto perm = identity_permutation(batch_attributes.size());
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        shuffled[i] = batch_attributes[perm[i]];
    }
    return append_column(batch_features, shuffled);
}

void standardize(std::span<double> values) {
    if (values.empty()) {
        return;
    }
    const double mu = mean(values);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mu) * (v - mu);
    }
    const double sd = std::sqrt(ss / static_cast<double>(values.size()));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
        std::fill(values.begin(), values.end(), 0.0);
        return;
    }
    for (double& v : values) {
        v = (v - mu) / sd;
    }
}

void standardize_columns(Matrix& m) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
        auto col = m.column(c);
        standardize(col);
        for (std::size_t r = 0; r < m.rows(); ++r) {
            m(r, c) = col[r];
        }
    }
}

MiEstimate train_mine(const Matrix& features, std::span<const double> attributes, const MineConfig& config) {
    config.validate();
    const std::size_t n = features.rows();
    const std::size_t m = features.cols();
    if (n != attributes.size()) {
        throw ShapeError("train_mine: " + std::to_string(n) + " feature rows but " +
                         std::to_string(attributes.size()) + " attribute values");
    }
    if (n < 2) {
        throw std::invalid_argument("train_mine: need at least 2 samples, got " + std::to_string(n));
    }
    if (!features.all_finite()) {
        throw NumericError("train_mine: features contain NaN or Inf");
    }
    if (!std::all_of(attributes.begin(), attributes.end(), [](double v) { return std::isfinite(v); })) {
        throw NumericError("train_mine: attribute contains NaN or Inf");
    }

    MiEstimate result;
    result.seed = config.rng_seed;

    std::size_t batch = config.batch_size;
    if (n < 2 * batch) {
        batch = std::min(n, std::max<std::size_t>(2, n / 2));
        result.warnings.push_back("n = " + std::to_string(n) + " is below 2 x batch_size; batch clamped to " +
                                  std::to_string(batch));
    }
    result.batch_size = batch;
    MineConfig run = config;
    run.batch_size = batch;
    const std::size_t steps = run.effective_steps(n);
    result.steps = steps;

    Matrix feats = features;
    std::vector<double> attrs(attributes.begin(), attributes.end());
    if (config.standardize_inputs) {
        standardize_columns(feats);
        standardize(attrs);
    }

    MlpParams params = MlpParams::xavier(m + 1, config.hidden_dims, derive_seed(config.rng_seed, kInitStream));
    AdamState adam = AdamState::for_params(params, AdamConfig{.lr = config.lr});
    MlpGradients grads = MlpGradients::zeros_like(params);
    ActivationCache cache;

    Rng batch_rng(derive_seed(config.rng_seed, kBatchStream));
    Rng eval_rng(derive_seed(config.rng_seed, kEvalStream));

    auto order = identity_permutation(n);
    std::size_t cursor = n;
    std::vector<std::size_t> batch_perm = identity_permutation(batch);
    auto full_perm = identity_permutation(n);

    // Rows [0, batch) are joint pairs, rows [batch, 2 batch) the same features
    // with the attribute column permuted within the batch.
    Matrix stacked(2 * batch, m + 1);
    std::vector<double> out_grads(2 * batch);
    FullDataEvaluator evaluator(feats, attrs);

    const double inv_b = 1.0 / static_cast<double>(batch);
    const double log_keep = std::log1p(-config.ema_rate);
    const double log_rate = std::log(config.ema_rate);
    double log_ema = 0.0;
    const std::size_t window = run.window_steps(steps);
    const std::size_t window_start = steps - window;

    result.trace.reserve(steps);
    result.window.reserve(window);

    for (std::size_t step = 0; step < steps; ++step) {
        if (cursor + batch > n) {
            std::shuffle(order.begin(), order.end(), batch_rng);
            cursor = 0;
        }
        const std::size_t* rows = order.data() + cursor;
        cursor += batch;
        std::shuffle(batch_perm.begin(), batch_perm.end(), batch_rng);
        for (std::size_t i = 0; i < batch; ++i) {
            const auto f = feats.row(rows[i]);
            auto joint = stacked.row(i);
            auto marg = stacked.row(batch + i);
            std::copy(f.begin(), f.end(), joint.begin());
            std::copy(f.begin(), f.end(), marg.begin());
            joint[m] = attrs[rows[i]];
            marg[m] = attrs[rows[batch_perm[i]]];
        }

        mlp_forward(params, stacked, cache);
        const std::span<const double> scores(cache.outputs);
        const auto joint_scores = scores.first(batch);
        const auto marg_scores = scores.subspan(batch, batch);
        const double lme = log_mean_exp(marg_scores);
        const double bound = mean(joint_scores) - lme;
        if (!std::isfinite(bound)) {
            throw NumericError("train_mine: bound became non-finite at step " + std::to_string(step));
        }
        result.trace.push_back(bound);

        log_ema = step == 0 ? lme : log_add_exp(log_keep + log_ema, log_rate + lme);
        const double denom = config.use_ema_correction ? log_ema : lme;

        // Minimizing -bound.
        for (std::size_t i = 0; i < batch; ++i) {
            out_grads[i] = -inv_b;
            out_grads[batch + i] = std::exp(marg_scores[i] - denom) * inv_b;
        }
        mlp_backward(params, cache, out_grads, grads);
        adam_step(params, grads, adam);

        if (step >= window_start) {
            std::shuffle(full_perm.begin(), full_perm.end(), eval_rng);
            const double full = evaluator.evaluate(params, full_perm);
            if (!std::isfinite(full)) {
                throw NumericError("train_mine: full-data bound became non-finite at step " + std::to_string(step));
            }
            result.window.push_back(full);
        }
    }

    result.mi_nats = mean(result.window);
    return result;
}

} // namespace explab
