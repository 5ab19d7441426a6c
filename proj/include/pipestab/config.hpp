#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pipestab/analysis.hpp"
#include "pipestab/sim.hpp"

namespace pipestab {

// Resolved settings of one run. Every field starts from the reference rig,
// the reference dynamic controller and the simulator defaults.
struct RunConfig {
  PlantParams plant;
  std::string controller_type = "dynamic";  // feedforward | dynamic | custom
  std::optional<int> controller_order;      // required for custom
  std::map<std::string, std::vector<double>> controller_matrices;

  DecayOptions decay;
  unsigned threads = 0;

  SimConfig sim;
  std::optional<double> fit_start;  // default 0.2 T
  std::optional<double> fit_end;    // default 0.9 T

  std::string output_dir = "pipestab-out";
  std::uint64_t seed = 1;

  // "section.key=value" in the order they were applied on top of the file.
  std::vector<std::string> overrides;

  // Throws ConfigError for an unknown section or key or a malformed value.
  void set(const std::string& section, const std::string& key,
           const std::string& value);
  // "section.key=value".
  void apply_override(const std::string& assignment);

  // Controller selected by controller_type with the matrix entries applied.
  ControllerParams controller() const;
  ControllerParams controller(const std::string& type) const;

  double window_start() const { return fit_start ? *fit_start : 0.2 * sim.T; }
  double window_end() const { return fit_end ? *fit_end : 0.9 * sim.T; }

  // Resolved configuration in the file grammar; parse_config of the result
  // reproduces this object up to the override log.
  std::string dump() const;
};

// Sectioned key = value text; '#' starts a comment. origin names the source
// in error messages.
RunConfig parse_config(const std::string& text,
                       const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

}  // namespace pipestab
