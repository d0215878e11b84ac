#pragma once

// Multi-seed expressivity: the MI estimate between a layer's features and an
// attribute, averaged over M independently initialised critics, and sweeps of
// that quantity over a grid of layers x attributes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "explab/matrix.hpp"
#include "explab/mine.hpp"

namespace explab {

struct ExpressivityResult {
    std::string layer_name;
    std::string attribute_name;
    /// mi_nats for seeds base_seed + 0 .. base_seed + m_repeats - 1, in seed order.
    std::vector<double> per_seed;
    double mean = 0.0;
    /// Population standard deviation of per_seed.
    double std = 0.0;
    std::size_t m_repeats = 0;
    std::uint64_t base_seed = 0;
    std::string config_digest;
    std::vector<std::string> warnings;
};

struct ExpressivityOptions {
    std::size_t m_repeats = 10;
    /// rng_seed is the base seed of the repeat schedule.
    MineConfig config{};
    /// 0 means worker_count().
    std::size_t threads = 0;
};

/// Mean and population std of `values` (std 0 for a single value).
std::pair<double, double> mean_and_std(std::span<const double> values);

/// Hex FNV-1a digest of every MineConfig field, stable across runs and builds.
std::string config_digest(const MineConfig& config);

ExpressivityResult compute_expressivity(const Matrix& features, std::span<const double> attribute,
                                        const ExpressivityOptions& options, std::string layer_name = {},
                                        std::string attribute_name = {});

struct NamedFeatures {
    std::string name;
    Matrix features;
};

struct NamedAttribute {
    std::string name;
    std::vector<double> values;
};

struct LayerSweepResult {
    std::vector<std::string> layers;
    std::vector<std::string> attributes;
    /// Row-major: cells[layer * attributes.size() + attribute].
    std::vector<ExpressivityResult> cells;

    const ExpressivityResult& at(std::size_t layer, std::size_t attribute) const;
};

/// Expressivity for every (layer, attribute) pair. Layer order is kept as given.
/// All cells x seeds are scheduled as one pool; results do not depend on the
/// thread count.
LayerSweepResult sweep(std::span<const NamedFeatures> layers, std::span<const NamedAttribute> attributes,
                       const ExpressivityOptions& options);

} // namespace explab
