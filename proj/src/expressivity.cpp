#include "explab/expressivity.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>

#include "explab/error.hpp"
#include "explab/parallel.hpp"

namespace explab {
namespace {

std::string shortest(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[noreturn]] void rethrow_annotated(const std::string& context) {
    try {
        throw;
    } catch (const NumericError& e) {
        throw NumericError(context + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(context + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(context + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(context + e.what());
    }
}

std::size_t resolve_threads(std::size_t requested) { return requested == 0 ? worker_count() : requested; }

void finish(ExpressivityResult& r) {
    const auto [mean, sd] = mean_and_std(r.per_seed);
    r.mean = mean;
    r.std = sd;
}

} // namespace

std::pair<double, double> mean_and_std(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("mean_and_std: empty input");
    }
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / n)};
}

std::string config_digest(const MineConfig& c) {
    const std::string canonical = "hidden=" + std::to_string(c.hidden_dims.first) + "," +
                                  std::to_string(c.hidden_dims.second) + ";lr=" + shortest(c.lr) +
                                  ";batch=" + std::to_string(c.batch_size) + ";steps=" + std::to_string(c.train_steps) +
                                  ";max_epochs=" + shortest(c.max_epochs) + ";window=" + shortest(c.estimate_window) +
                                  ";ema_rate=" + shortest(c.ema_rate) + ";ema=" + (c.use_ema_correction ? "1" : "0") +
                                  ";seed=" + std::to_string(c.rng_seed) +
                                  ";standardize=" + (c.standardize_inputs ? "1" : "0");
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
    return hex;
}

ExpressivityResult compute_expressivity(const Matrix& features, std::span<const double> attribute,
                                        const ExpressivityOptions& options, std::string layer_name,
                                        std::string attribute_name) {
    NamedFeatures layer{std::move(layer_name), Matrix()};
    NamedAttribute attr{std::move(attribute_name), {}};
    if (features.rows() != attribute.size()) {
        throw ShapeError("compute_expressivity: " + std::to_string(features.rows()) + " feature rows but " +
                         std::to_string(attribute.size()) + " attribute values");
    }
    layer.features = features;
    attr.values.assign(attribute.begin(), attribute.end());
    auto grid = sweep(std::span(&layer, 1), std::span(&attr, 1), options);
    return std::move(grid.cells.front());
}

const ExpressivityResult& LayerSweepResult::at(std::size_t layer, std::size_t attribute) const {
    if (layer >= layers.size() || attribute >= attributes.size()) {
        throw std::out_of_range("LayerSweepResult::at: index out of range");
    }
    return cells[layer * attributes.size() + attribute];
}

LayerSweepResult sweep(std::span<const NamedFeatures> layers, std::span<const NamedAttribute> attributes,
                       const ExpressivityOptions& options) {
    if (options.m_repeats == 0) {
        throw std::invalid_argument("expressivity: m_repeats must be >= 1");
    }
    if (layers.empty() || attributes.empty()) {
        throw std::invalid_argument("sweep: need at least one layer and one attribute");
    }
    options.config.validate();
    const std::size_t n = layers.front().features.rows();
    for (const auto& l : layers) {
        if (l.features.rows() != n) {
            throw ShapeError("sweep: layer '" + l.name + "' has " + std::to_string(l.features.rows()) +
                             " rows, expected " + std::to_string(n));
        }
    }
    for (const auto& a : attributes) {
        if (a.values.size() != n) {
            throw ShapeError("sweep: attribute '" + a.name + "' has " + std::to_string(a.values.size()) +
                             " values, expected " + std::to_string(n));
        }
    }

    const std::size_t n_attr = attributes.size();
    const std::size_t n_cells = layers.size() * n_attr;
    const std::size_t m = options.m_repeats;
    const std::string digest = config_digest(options.config);

    LayerSweepResult out;
    for (const auto& l : layers) {
        out.layers.push_back(l.name);
    }
    for (const auto& a : attributes) {
        out.attributes.push_back(a.name);
    }
    out.cells.resize(n_cells);
    std::vector<MiEstimate> runs(n_cells * m);

    parallel_for(n_cells * m, resolve_threads(options.threads), [&](std::size_t task) {
        const std::size_t cell = task / m;
        const std::size_t repeat = task % m;
        const auto& layer = layers[cell / n_attr];
        const auto& attr = attributes[cell % n_attr];
        MineConfig config = options.config;
        config.rng_seed = options.config.rng_seed + repeat;
        try {
            runs[task] = train_mine(layer.features, attr.values, config);
        } catch (...) {
            rethrow_annotated("layer '" + layer.name + "', attribute '" + attr.name + "', seed index " +
                              std::to_string(repeat) + " (seed " + std::to_string(config.rng_seed) + "): ");
        }
    });

    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        auto& r = out.cells[cell];
        r.layer_name = out.layers[cell / n_attr];
        r.attribute_name = out.attributes[cell % n_attr];
        r.m_repeats = m;
        r.base_seed = options.config.rng_seed;
        r.config_digest = digest;
        for (std::size_t repeat = 0; repeat < m; ++repeat) {
            auto& run = runs[cell * m + repeat];
            r.per_seed.push_back(run.mi_nats);
            for (auto& w : run.warnings) {
                if (repeat == 0) {
                    r.warnings.push_back(std::move(w));
                }
            }
        }
        finish(r);
    }
    return out;
}

} // namespace explab
