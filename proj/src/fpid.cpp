#include "omnitrack/fpid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace omnitrack
{

TrackError compute_errors(const RobotPose & robot, const RobotPose & target, double threshold)
{
  TrackError e;
  e.e_x = target.x - robot.x;
  e.e_y = target.y - robot.y;
  e.dr = std::hypot(e.e_x, e.e_y);
  e.d_alpha = e.dr < threshold ? 0.0 : wrap_angle(std::atan2(e.e_y, e.e_x) - robot.theta);
  e.e_theta = wrap_angle(target.theta - robot.theta);
  return e;
}

void FpidLoopConfig::validate() const
{
  if (!(k_max > 0.0)) {
    throw ConfigError("k_max must be > 0");
  }
  if (!(i_max >= 0.0)) {
    throw ConfigError("i_max must be >= 0");
  }
  if (!(norm_scale > 0.0) || !(de_scale > 0.0)) {
    throw ConfigError("norm_scale and de_scale must be > 0");
  }
  for (const double k : {initial.kp, initial.ki, initial.kd}) {
    if (!(k >= 0.0 && k <= k_max)) {
      throw ConfigError("initial gains must lie in [0, k_max]");
    }
  }
}

double fpid_step(
  PidState & state, const FuzzyEngine & engine, const FpidLoopConfig & cfg, double error,
  double dt)
{
  if (!(dt > 0.0)) {
    throw ConfigError("fpid_step requires dt > 0");
  }
  if (!state.primed) {
    state.prev_error = error;
    state.primed = true;
  }
  const double rate = (error - state.prev_error) / dt;
  const double e_n = std::clamp(error / cfg.norm_scale, -1.0, 1.0);
  const double de_n = std::clamp(rate / (cfg.norm_scale * cfg.de_scale), -1.0, 1.0);

  const InferenceResult inc = engine.infer(e_n, de_n);
  state.gains.kp = std::clamp(state.gains.kp + inc.d_kp, 0.0, cfg.k_max);
  state.gains.ki = std::clamp(state.gains.ki + inc.d_ki, 0.0, cfg.k_max);
  state.gains.kd = std::clamp(state.gains.kd + inc.d_kd, 0.0, cfg.k_max);

  state.integral = std::clamp(state.integral + error * dt, -cfg.i_max, cfg.i_max);
  const double out = state.gains.kp * error + state.gains.ki * state.integral +
    state.gains.kd * rate;
  state.prev_error = error;
  return out;
}

std::string_view to_string(CommandFrame f)
{
  return f == CommandFrame::body ? "body" : "global";
}

CommandFrame parse_command_frame(std::string_view name)
{
  if (name == "body") {
    return CommandFrame::body;
  }
  if (name == "global") {
    return CommandFrame::global;
  }
  throw ConfigError("unknown command frame '" + std::string(name) + "'");
}

void FpidConfig::validate() const
{
  distance.validate();
  heading.validate();
  if (!(threshold >= 0.0)) {
    throw ConfigError("threshold must be >= 0");
  }
  if (!(v_max > 0.0) || !(omega_max > 0.0)) {
    throw ConfigError("v_max and omega_max must be > 0");
  }
}

FpidController::FpidController(FpidConfig cfg, std::shared_ptr<const FuzzyEngine> engine)
: cfg_(cfg), engine_(std::move(engine))
{
  cfg_.validate();
  if (!engine_) {
    throw ConfigError("fuzzy PID controller needs an engine");
  }
  reset();
}

void FpidController::reset()
{
  distance_ = PidState::from(cfg_.distance);
  heading_ = PidState::from(cfg_.heading);
}

BodyVelocity FpidController::command(
  const RobotPose & robot, const RobotPose & target, double dt)
{
  const TrackError err = compute_errors(robot, target, cfg_.threshold);
  double v = fpid_step(distance_, *engine_, cfg_.distance, err.dr, dt);
  double omega = fpid_step(heading_, *engine_, cfg_.heading, err.e_theta, dt);
  if (err.dr < cfg_.threshold) {
    v = 0.0;
  }
  v = std::clamp(v, 0.0, cfg_.v_max);
  omega = std::clamp(omega, -cfg_.omega_max, cfg_.omega_max);

  const double dir = cfg_.frame == CommandFrame::body ? err.d_alpha + robot.theta : err.d_alpha;
  return BodyVelocity{v * std::cos(dir), v * std::sin(dir), omega};
}

}  // namespace omnitrack
