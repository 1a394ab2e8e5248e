#pragma once

#include <array>
#include <numbers>

#include <Eigen/Core>

#include "omnitrack/common.hpp"

namespace omnitrack
{

/// Four-wheel omni base. Wheel i sits at offset angle theta + alpha_i from the
/// body x axis; the defaults are pi/4, 3pi/4, 5pi/4, 7pi/4.
struct OmniGeometry
{
  double body_radius = 0.2;   // R (m)
  double wheel_radius = 0.05; // r (m)
  std::array<double, 4> wheel_offset_angles{
    std::numbers::pi / 4.0, 3.0 * std::numbers::pi / 4.0,
    5.0 * std::numbers::pi / 4.0, 7.0 * std::numbers::pi / 4.0};

  /// Throws ConfigError when a radius is non-positive or the offsets are not
  /// strictly increasing inside [0, 2pi).
  void validate() const;
};

struct RobotPose
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]
};

/// Planar twist expressed in the global frame.
struct BodyVelocity
{
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
};

struct WheelSpeeds
{
  std::array<double, 4> phi_dot{};
};

using WheelMatrix = Eigen::Matrix<double, 4, 3>;

/// Row i is (1/r) * [-sin(theta+alpha_i), cos(theta+alpha_i), R].
WheelMatrix wheel_matrix(const OmniGeometry & geom);

WheelSpeeds inverse_kinematics(const OmniGeometry & geom, const BodyVelocity & v);

/// Least-squares body velocity for the overdetermined 4x3 system. Exact when
/// the wheel speeds are consistent.
BodyVelocity forward_kinematics(const OmniGeometry & geom, const WheelSpeeds & w);

/// Forward-Euler pose update; heading is wrapped into (-pi, pi].
RobotPose integrate_pose(const RobotPose & p, const BodyVelocity & v, double dt);

}  // namespace omnitrack
