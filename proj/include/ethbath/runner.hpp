// runner.hpp: end-to-end experiment execution and configuration checks.

#pragma once

#include "ethbath/config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ethbath {

struct RunOptions {
    std::filesystem::path out_dir{"."};
    std::filesystem::path cache_dir; // empty disables the cache
};

struct ProducedFile {
    std::string name;
    std::string sha256;
};

struct RunManifest {
    std::string kind;
    std::string config_hash;
    nlohmann::json versions;
    std::string started_at;
    double wall_clock_seconds{0.0};
    std::vector<ProducedFile> files;

    nlohmann::json to_json() const;
};

// Runs the pipeline for cfg.kind and writes its CSV files, summary.json and
// manifest.json into out_dir. Stage failures are rethrown as ConfigError or
// NumericalError with the stage named; files written so far are removed.
RunManifest run(const ExperimentConfig& cfg, const RunOptions& opts);

struct Diagnostics {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;

    bool ok() const { return errors.empty(); }
    nlohmann::json to_json() const;
};

// Schema check plus physics lints. Reads the cache when it holds the bath
// eigensystem but never writes to it.
Diagnostics validate(const nlohmann::json& config, std::optional<ExperimentKind> kind,
                     const std::filesystem::path& cache_dir = {});

// Physical memory in bytes, 0 when unknown.
std::size_t available_memory();

} // namespace ethbath
