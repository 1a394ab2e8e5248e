#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace omnitrack
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or precondition violation.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Maps an angle into (-pi, pi].
inline double wrap_angle(double a)
{
  constexpr double kPi = std::numbers::pi;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (a > -kPi && a <= kPi) {
    return a;
  }
  double w = std::fmod(a + kPi, kTwoPi);
  if (w <= 0.0) {
    w += kTwoPi;
  }
  return w - kPi;
}

}  // namespace omnitrack
