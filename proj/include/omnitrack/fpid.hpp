#pragma once

#include <memory>
#include <string_view>

#include "omnitrack/fuzzy.hpp"
#include "omnitrack/kinematics.hpp"

namespace omnitrack
{

/// Distance / direction / heading errors of the robot w.r.t. a target pose.
struct TrackError
{
  double dr = 0.0;       // sqrt(e_x^2 + e_y^2)
  double d_alpha = 0.0;  // bearing to target minus heading, wrapped
  double e_theta = 0.0;  // theta_ref - theta, wrapped
  double e_x = 0.0;
  double e_y = 0.0;
};

/// d_alpha is forced to 0 when dr < threshold (bearing undefined).
TrackError compute_errors(const RobotPose & robot, const RobotPose & target, double threshold);

struct PidGains
{
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

struct FpidLoopConfig
{
  PidGains initial{};
  double k_max = 10.0;
  double i_max = 1.0;
  double norm_scale = 1.0;  // error -> [-1, 1]
  double de_scale = 10.0;   // extra divisor on the error rate

  void validate() const;
};

/// Mutable state of one self-tuning PID loop.
struct PidState
{
  PidGains gains{};
  double integral = 0.0;
  double prev_error = 0.0;
  bool primed = false;  // false until the first error is seen

  static PidState from(const FpidLoopConfig & cfg) {return PidState{cfg.initial};}
};

/// One step of a fuzzy-tuned PID: the engine maps the normalized error and
/// error rate to gain increments, gains are clamped to [0, k_max], the
/// integral to [-i_max, i_max]. Returns the raw (unclamped) PID output.
double fpid_step(
  PidState & state, const FuzzyEngine & engine, const FpidLoopConfig & cfg, double error,
  double dt);

enum class CommandFrame
{
  body,    // [v cos(d_alpha), v sin(d_alpha)] is rotated by the heading
  global,  // the same vector is used as-is in the global frame
};

std::string_view to_string(CommandFrame f);
CommandFrame parse_command_frame(std::string_view name);

struct FpidConfig
{
  FpidLoopConfig distance{{1.0, 0.0, 0.1}, 10.0, 1.0, 1.0, 10.0};
  FpidLoopConfig heading{{2.0, 0.0, 0.1}, 10.0, 1.0, 3.141592653589793, 10.0};
  double threshold = 0.01;
  double v_max = 1.5;
  double omega_max = 3.14;
  CommandFrame frame = CommandFrame::body;

  void validate() const;
};

/// Trajectory tracker built from two fuzzy PID loops: linear speed from the
/// distance error and yaw rate from the heading error. Not thread-safe; use
/// one instance per robot.
class FpidController
{
public:
  FpidController(FpidConfig cfg, std::shared_ptr<const FuzzyEngine> engine);

  /// Global-frame velocity command toward `target`.
  BodyVelocity command(const RobotPose & robot, const RobotPose & target, double dt);

  void reset();

  const PidState & distance_state() const {return distance_;}
  const PidState & heading_state() const {return heading_;}
  const FpidConfig & config() const {return cfg_;}

private:
  FpidConfig cfg_;
  std::shared_ptr<const FuzzyEngine> engine_;
  PidState distance_;
  PidState heading_;
};

}  // namespace omnitrack
