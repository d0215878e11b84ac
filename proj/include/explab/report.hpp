#pragma once

// JSON result documents and run manifests shared by the CLI subcommands.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "explab/balance.hpp"
#include "explab/expressivity.hpp"
#include "explab/metrics.hpp"
#include "explab/mine.hpp"
#include "explab/synthetic.hpp"

namespace explab {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct InputDigest {
    std::string path;
    std::string digest;
};

struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();
    std::vector<InputDigest> inputs;
    std::uint64_t base_seed = 0;
    /// ISO-8601 UTC; the only field allowed to differ between identical runs.
    std::string timestamp;
};

/// "fnv1a64:<16 hex digits>" of the file contents.
std::string file_digest(const std::filesystem::path& path);

std::string utc_timestamp();

nlohmann::json to_json(const RunManifest& manifest);
nlohmann::json to_json(const MineConfig& config);
nlohmann::json to_json(const ExpressivityResult& result);
nlohmann::json to_json(const LayerSweepResult& result);
nlohmann::json to_json(const MetricWithCi& metric);
nlohmann::json to_json(const SyntheticSpec& spec);
nlohmann::json to_json(const ClassCounts& counts);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

} // namespace explab
