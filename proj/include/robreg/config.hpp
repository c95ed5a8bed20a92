#pragma once

#include "robreg/harness.hpp"

#include <json.hpp>

#include <string>
#include <variant>

namespace robreg {

/// Invalid experiment file; `field()` is the dotted path of the offending
/// entry ("contamination.n2"), empty for syntax errors.
class ConfigError : public DomainError {
 public:
  ConfigError(std::string field, const std::string& what)
      : DomainError(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

using ExperimentConfig = std::variant<LambdaExperimentConfig, PointGridConfig, SizeExperimentConfig>;

/// Parses an experiment document. The "experiment" key selects the kind:
/// "lambda", "point-grid" or "size". Unknown keys are rejected.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Reads and parses a file; syntax errors report line and column.
ExperimentConfig load_experiment(const std::string& path);

/// Echo of the effective configuration; parses back to the same config.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// "100..1000" (step 100), "100..1000:50" or "100,200,500".
std::vector<Index> parse_n_grid(const std::string& text);

}  // namespace robreg
