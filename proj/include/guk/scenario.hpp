#pragma once

// Scenario files (JSON), the built-in "paper-sec5" preset, and key=value overrides.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "guk/sim.hpp"

namespace guk::scenario {

inline constexpr const char* kPaperPreset = "paper-sec5";

/// Schema or parse failure; the message names the offending key.
class ScenarioError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// The leader-follower experiment with four followers, region bounds and gains α=4, β=0.5.
sim::ScenarioConfig paper_preset();

bool is_preset(const std::string& name);
sim::ScenarioConfig preset(const std::string& name);

/// Parses a scenario document. Relative table paths resolve against base_dir.
sim::ScenarioConfig from_json(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const sim::ScenarioConfig& config);

/// A preset name or a path to a JSON scenario file.
sim::ScenarioConfig load_scenario(const std::string& path_or_preset);

/// Applies one "key=value" override (alpha, beta, gamma1, gamma2, hysteresis, dt, horizon,
/// angular_rate, seed, region, leader_mode, force_mode).
void apply_override(sim::ScenarioConfig& config, const std::string& assignment);

SampledFormation<double> read_formation_table(const std::filesystem::path& path,
                                                   Eigen::Index followers);

}  // namespace guk::scenario
