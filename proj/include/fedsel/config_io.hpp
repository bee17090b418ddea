// Experiment description file: the ExperimentConfig plus the data source,
// strategy list, and optional sweep grid and drift blocks, all in one JSON
// document. Overrides are applied as key=value pairs against the same keys.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedsel/data.hpp"
#include "fedsel/sim.hpp"

namespace fedsel {

struct DataSource {
    // Exactly one of csv_path or synth is set.
    std::string csv_path;
    std::optional<CsvSchema> schema;
    std::optional<SynthSpec> synth;
};

struct ExperimentSpec {
    ExperimentConfig config;
    DataSource data;
    std::vector<Strategy> strategies;  // defaults to all eight
    std::optional<SweepGrid> grid;
    std::optional<DriftSpec> drift;
};

// Throws ConfigError on unknown keys, bad types, or invalid values.
ExperimentSpec parse_experiment_spec(const std::string& json_text);
ExperimentSpec load_experiment_spec(const std::string& path);

// Apply "key=value" overrides (config scalars, "grid.<list>"=comma values,
// "drift.<field>") onto the raw JSON before parsing.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides);

std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace fedsel
