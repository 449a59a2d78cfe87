#pragma once

// Versioned JSON run configuration: {"version": 1, "synth": {...}, "train": {...}}.
// Every section and key is optional; missing keys keep their defaults and
// unknown keys are rejected by name.

#include <filesystem>
#include <string>

#include "phoenix/data.hpp"
#include "phoenix/trainer.hpp"

namespace phoenix {

inline constexpr int kRunConfigVersion = 1;

struct RunConfig {
    SynthConfig synth;
    TrainConfig train;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& file);

/// Canonical serialization (all keys, fixed order).
std::string to_json(const RunConfig& config);
std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& json_text);

}  // namespace phoenix
