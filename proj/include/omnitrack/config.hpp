#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "omnitrack/simlab.hpp"

namespace omnitrack
{

/// One experiment as read from an INI-style file:
///
///   [scenario]   name, map, start_col, start_row, goal_col, goal_row,
///                total_time, ts, noise, seed, controllers, out
///   [geometry]   body_radius, wheel_radius
///   [fpid-t1]    distance_kp ... heading_de_scale, k_max, i_max, threshold,
///   [fpid-it2]   v_max, omega_max, frame, engine, height_scale, lag,
///                type_reduction
///   [nmpc]       horizon, q_x, q_y, q_theta, r_v, r_omega, v_max,
///                omega_max, kkt_tol, defect_tol, max_iterations
///   [horizon]    values (comma separated)
///   [step]       duration
///
/// Paths are relative to the config file. A missing map means the built-in
/// standard map.
struct ExperimentConfig
{
  std::string name = "standard";
  std::string map_path;
  Cell start = kStandardStart;
  Cell goal = kStandardGoal;
  double total_time = 30.0;
  double ts = 0.1;
  bool noise = false;
  NoiseModel noise_model{};
  std::uint64_t seed = 1;
  OmniGeometry geometry{};
  std::vector<ControllerSpec> controllers;
  std::string out_dir = "out";
  std::vector<int> horizons{5, 10, 15, 20};
  double step_duration = 10.0;

  void validate() const;

  /// Settings of the given controller, or nullptr when not configured.
  const ControllerSpec * find(ControllerKind kind) const;
};

/// `base_dir` resolves relative paths inside the file.
ExperimentConfig parse_experiment_config(std::istream & in, const std::string & base_dir);
ExperimentConfig load_experiment_config(const std::string & path);

/// Writes the effective configuration back in the same format.
void write_experiment_config(std::ostream & out, const ExperimentConfig & cfg);

/// The built-in defaults with all three controllers enabled.
ExperimentConfig default_experiment_config();

/// Comma-separated integers, e.g. "5,10,15".
std::vector<int> parse_int_list(const std::string & text);

}  // namespace omnitrack
