#include "explab/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "explab/io.hpp"

namespace explab {

using nlohmann::json;

std::string file_digest(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + hex;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json to_json(const RunManifest& m) {
    json inputs = json::array();
    for (const auto& in : m.inputs) {
        inputs.push_back({{"path", in.path}, {"digest", in.digest}});
    }
    return {
        {"subcommand", m.subcommand},
        {"tool_version", std::string(kToolVersion)},
        {"config", m.config},
        {"inputs", inputs},
        {"base_seed", m.base_seed},
        {"timestamp", m.timestamp},
    };
}

json to_json(const MineConfig& c) {
    return {
        {"hidden_dims", {c.hidden_dims.first, c.hidden_dims.second}},
        {"lr", c.lr},
        {"batch_size", c.batch_size},
        {"train_steps", c.train_steps},
        {"max_epochs", c.max_epochs},
        {"estimate_window", c.estimate_window},
        {"ema_rate", c.ema_rate},
        {"use_ema_correction", c.use_ema_correction},
        {"rng_seed", c.rng_seed},
        {"standardize_inputs", c.standardize_inputs},
    };
}

json to_json(const ExpressivityResult& r) {
    return {
        {"layer", r.layer_name},
        {"attribute", r.attribute_name},
        {"per_seed", r.per_seed},
        {"mean", r.mean},
        {"std", r.std},
        {"m_repeats", r.m_repeats},
        {"base_seed", r.base_seed},
        {"config_digest", r.config_digest},
    };
}

json to_json(const LayerSweepResult& r) {
    json cells = json::array();
    for (const auto& c : r.cells) {
        cells.push_back(to_json(c));
    }
    return {{"layers", r.layers}, {"attributes", r.attributes}, {"cells", cells}};
}

json to_json(const MetricWithCi& m) {
    return {
        {"metric", std::string(to_string(m.metric))},
        {"point", m.point},
        {"ci_low", m.ci_low},
        {"ci_high", m.ci_high},
        {"n_boot", m.n_boot},
        {"ci_level", m.ci_level},
        {"seed", m.seed},
        {"redrawn_resamples", m.redrawn},
    };
}

json to_json(const SyntheticSpec& s) {
    return {
        {"kind", std::string(to_string(s.kind))},
        {"n", s.n},
        {"dim", s.dim},
        {"rho", s.rho},
        {"snr", s.snr},
        {"attribute_type", std::string(to_string(s.attribute_type))},
        {"seed", s.seed},
    };
}

json to_json(const ClassCounts& c) { return {{"positive", c.positive}, {"negative", c.negative}}; }

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

} // namespace explab
