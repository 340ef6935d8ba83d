#pragma once

#include "asyncnet/sim.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace asyncnet {

// Malformed or schema-violating configuration. `field()` is a JSON pointer.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ParsedConfig {
  ExperimentSpec spec;
  std::map<std::string, double> tolerance;
  nlohmann::json canonical;  // after overrides, without run-only settings
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

ParsedConfig parse_config(const nlohmann::json& j, const ConfigOverrides& ov = {});
ParsedConfig parse_config_text(const std::string& text, const ConfigOverrides& ov = {});
ParsedConfig load_config(const std::string& path, const ConfigOverrides& ov = {});

// 64-bit FNV-1a of the canonical dump, as 16 hex digits.
std::string config_digest(const nlohmann::json& canonical);

nlohmann::json step_size_to_json(const StepSizeProcess& p);
StepSizeProcess step_size_from_json(const nlohmann::json& j, const std::string& where = "/step");

nlohmann::json matrix_to_json(const Matrix& A);
nlohmann::json vector_to_json(const Vector& v);

nlohmann::json to_json(const SteadyStateReport& r);
nlohmann::json to_json(const TheoryRecord& t);
nlohmann::json to_json(const Comparison& c);
std::string curve_csv(const LearningCurve& c);
// Log-scale line plot of the per-estimate curves.
std::string curve_svg(const LearningCurve& c, const std::string& title);

// Write via a temporary sibling and rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace asyncnet
