// config.hpp: experiment configuration parsed from JSON.

#pragma once

#include "ethbath/hamiltonian.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ethbath {

enum class ExperimentKind { eth_stats, thermo, rates, bcf, dynamics, scaling, levelstats, typicality, multi_op_rates };

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind k);

enum class StateKind { eigenstate, typical_mc, product };

struct StateSpec {
    StateKind kind{StateKind::eigenstate};
    std::optional<double> beta; // microcanonical target; beta = 0 when neither is set
    std::optional<double> E;
    double deltaE{0.3};
    std::uint64_t seed{0};
    bool complex_amplitudes{false};
    std::string system{"polarized"};
};

struct GridSpec {
    double t_max{325.0};
    double dt{0.25};
    std::optional<double> t_final; // trace-distance horizon, defaults to t_max
};

struct OperatorSpec {
    int site{1};
    Axis axis{Axis::x};
};

struct EthSpec {
    double window{0.3};
    std::optional<double> freq_bin; // 0.05 chaotic, 0.4 integrable
    std::size_t min_states{100};
    int entropy_degree{2};
    std::optional<double> dos_bin_width;
    bool include_zero_frequency{false};
};

struct ExperimentConfig {
    ExperimentKind kind{ExperimentKind::thermo};
    SystemParams system;
    SpinChainParams bath{SpinChainParams::chaotic(8)};
    std::string preset; // empty when couplings are explicit
    CouplingSpec coupling;
    StateSpec state;
    GridSpec grid;
    EthSpec eth;
    std::vector<int> sizes{6, 8, 10, 12};                  // scaling
    std::vector<std::string> presets;                       // scaling, levelstats
    int samples{50};                                        // typicality
    std::vector<OperatorSpec> operators{{1, Axis::x}, {1, Axis::z}}; // multi-op-rates
    int max_sites{kDefaultMaxSites};
    std::uint64_t seed{0};

    double freq_bin() const;
    double freq_bin_for(const std::string& preset_name) const;
};

// Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& j, std::optional<ExperimentKind> kind = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind = std::nullopt);

// Canonical JSON of the parsed config, the input to the config hash.
nlohmann::json canonical_json(const ExperimentConfig& cfg);

// Cache key text for a bath or total Hamiltonian.
std::string bath_spec_text(const SpinChainParams& bath);
std::string total_spec_text(const SystemParams& sys, const SpinChainParams& bath, const CouplingSpec& coupling);

} // namespace ethbath
