#pragma once

#include <map>
#include <string>
#include <vector>

#include "latmpc/mpc.hpp"
#include "latmpc/sim.hpp"

namespace latmpc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sectioned key-value text: `[section]` headers, `key = value` lines and
/// `#` comments. Values are scalars, space-separated number lists, or
/// `;`-separated pairs for checkpoint lists. Keys mirror the vehicle-
/// parameter symbols one to one.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key, double fallback) const;
  std::vector<double> numbers(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  /// Applies a `section.key=value` override; the key must already exist.
  void apply_override(const std::string& assignment);

  std::string to_text() const;
  bool operator==(const Config& other) const { return values_ == other.values_; }

 private:
  // section -> key -> value, with insertion order preserved for writing
  std::map<std::string, std::map<std::string, std::string>> values_;
  std::vector<std::pair<std::string, std::string>> order_;
};

/// Vehicle files carry [vehicle] and [tire]; `kind` selects the model.
VehicleParams load_vehicle_params(const Config& cfg);

/// Scenario files carry [scenario] and [mpc].
Scenario load_scenario(const Config& cfg);
MpcConfig load_mpc_config(const Config& cfg, ModelKind kind);
ActuatorConfig load_actuators(const Config& cfg, ModelKind kind);

}  // namespace latmpc
