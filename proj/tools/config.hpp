// Experiment configuration: JSON file to typed settings, with errors that name the field.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coisac/detection.hpp"
#include "coisac/runtime.hpp"
#include "coisac/scene.hpp"

namespace coisac::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Algorithm { Distributed, Centralized };
enum class SweepVariable { Gamma, GammaNotch, NTx, NRf };
enum class SinrSource { Design, Random };

struct SweepConfig {
  SweepVariable variable = SweepVariable::Gamma;
  std::vector<double> values;
  int trials = 10;
};

struct DetectionConfig {
  std::vector<double> pr_fa{1e-4, 1e-3, 1e-2, 1e-1};
  SinrSource sinr_source = SinrSource::Design;
  long trials = 100000;
  int target = 0;
  RadarParams radar;
};

struct ExperimentConfig {
  NetworkScene scene;
  BeampatternParams beampattern;  // budgets per unit transmit power
  RVec weights;                   // empty means all ones
  SolverOptions solver;
  Algorithm algorithm = Algorithm::Distributed;
  std::uint64_t seed = 1;
  std::optional<SweepConfig> sweep;
  DetectionConfig detection;
  /// Canonical form of the parsed file, used for the config hash.
  nlohmann::json source;
};

/// Throws ConfigError on malformed input, unknown keys or invalid values.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::string to_string(SweepVariable v);

}  // namespace coisac::cli
