#include "omnitrack/kinematics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace omnitrack
{

void OmniGeometry::validate() const
{
  if (!(body_radius > 0.0)) {
    throw ConfigError("body_radius must be > 0");
  }
  if (!(wheel_radius > 0.0)) {
    throw ConfigError("wheel_radius must be > 0");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < wheel_offset_angles.size(); ++i) {
    const double a = wheel_offset_angles[i];
    if (!(a >= 0.0 && a < kTwoPi)) {
      throw ConfigError("wheel offset angle " + std::to_string(i) + " outside [0, 2pi)");
    }
    if (i > 0 && !(a > wheel_offset_angles[i - 1])) {
      throw ConfigError("wheel offset angles must be strictly increasing");
    }
  }
}

WheelMatrix wheel_matrix(const OmniGeometry & geom)
{
  WheelMatrix m;
  const double inv_r = 1.0 / geom.wheel_radius;
  for (int i = 0; i < 4; ++i) {
    const double a = geom.wheel_offset_angles[static_cast<std::size_t>(i)];
    m(i, 0) = -std::sin(a) * inv_r;
    m(i, 1) = std::cos(a) * inv_r;
    m(i, 2) = geom.body_radius * inv_r;
  }
  return m;
}

WheelSpeeds inverse_kinematics(const OmniGeometry & geom, const BodyVelocity & v)
{
  WheelSpeeds out;
  for (std::size_t i = 0; i < 4; ++i) {
    const double a = geom.wheel_offset_angles[i];
    out.phi_dot[i] =
      (-std::sin(a) * v.vx + std::cos(a) * v.vy + geom.body_radius * v.omega) / geom.wheel_radius;
  }
  return out;
}

BodyVelocity forward_kinematics(const OmniGeometry & geom, const WheelSpeeds & w)
{
  const WheelMatrix m = wheel_matrix(geom);
  const Eigen::Vector4d rhs(w.phi_dot[0], w.phi_dot[1], w.phi_dot[2], w.phi_dot[3]);
  // M has full column rank, so QR gives the Moore-Penrose solution.
  const Eigen::Vector3d v = m.colPivHouseholderQr().solve(rhs);
  return BodyVelocity{v(0), v(1), v(2)};
}

RobotPose integrate_pose(const RobotPose & p, const BodyVelocity & v, double dt)
{
  return RobotPose{p.x + v.vx * dt, p.y + v.vy * dt, wrap_angle(p.theta + v.omega * dt)};
}

}  // namespace omnitrack
