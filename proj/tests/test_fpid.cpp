#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "omnitrack/fpid.hpp"
#include "omnitrack/simlab.hpp"

using namespace omnitrack;

namespace
{

constexpr double kPi = std::numbers::pi;

// Engine returning a fixed increment, for clamp checks.
class ConstantEngine final : public FuzzyEngine
{
public:
  explicit ConstantEngine(double d) : d_(d) {}
  InferenceResult infer(double, double) const override {return {d_, d_, d_};}

private:
  double d_;
};

// Records the normalized inputs it receives.
class ProbeEngine final : public FuzzyEngine
{
public:
  InferenceResult infer(double e, double de) const override
  {
    last_e = e;
    last_de = de;
    return {};
  }
  mutable double last_e = 0.0;
  mutable double last_de = 0.0;
};

std::vector<BodyVelocity> closed_loop(std::shared_ptr<const FuzzyEngine> engine, int steps)
{
  const ReferenceTrajectory ref = standard_reference(30.0, 0.1);
  FpidController c(FpidConfig{}, std::move(engine));
  RobotPose p = ref.poses.front();
  p.x += 0.05;
  std::vector<BodyVelocity> cmds;
  for (int n = 0; n < steps; ++n) {
    const BodyVelocity v = c.command(p, ref.poses[static_cast<std::size_t>(n)], ref.ts);
    cmds.push_back(v);
    p = integrate_pose(p, v, ref.ts);
  }
  return cmds;
}

}  // namespace

TEST(TrackErrors, DiagonalTarget)
{
  const TrackError e = compute_errors({0, 0, 0}, {1, 1, kPi / 4}, 0.01);
  EXPECT_NEAR(e.dr, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(e.d_alpha, kPi / 4, 1e-15);
  EXPECT_NEAR(e.e_theta, kPi / 4, 1e-15);
}

TEST(TrackErrors, AtTarget)
{
  const TrackError e = compute_errors({0.4, -0.2, 1.0}, {0.4, -0.2, 1.0}, 0.01);
  EXPECT_EQ(e.dr, 0.0);
  EXPECT_EQ(e.d_alpha, 0.0);
  EXPECT_EQ(e.e_theta, 0.0);
}

TEST(TrackErrors, HeadingWraps)
{
  const TrackError e = compute_errors({0, 0, 3}, {-1, 0, -3}, 0.01);
  EXPECT_NEAR(e.e_theta, 2 * kPi - 6, 1e-12);
}

TEST(FpidStep, ZeroErrorMovesGainsByCentreRuleOnly)
{
  FpidLoopConfig cfg;
  cfg.initial = {0.0, 0.0, 0.0};
  PidState s = PidState::from(cfg);
  const auto eng = Type1Engine::make_default();
  const InferenceResult centre = eng->infer(0.0, 0.0);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(fpid_step(s, *eng, cfg, 0.0, 0.1), 0.0);
  }
  EXPECT_NEAR(s.gains.kp, std::clamp(5 * centre.d_kp, 0.0, cfg.k_max), 1e-15);
  EXPECT_NEAR(s.gains.ki, 0.0, 1e-15);
  EXPECT_EQ(s.gains.kd, 0.0);
  EXPECT_EQ(s.integral, 0.0);
}

TEST(FpidStep, ConstantErrorHasZeroRateOnSecondStep)
{
  FpidLoopConfig cfg;
  PidState s = PidState::from(cfg);
  ProbeEngine probe;
  fpid_step(s, probe, cfg, 0.4, 0.1);
  EXPECT_EQ(probe.last_de, 0.0);
  fpid_step(s, probe, cfg, 0.4, 0.1);
  EXPECT_EQ(probe.last_de, 0.0);
  EXPECT_EQ(probe.last_e, 0.4);
  fpid_step(s, probe, cfg, 0.5, 0.1);
  EXPECT_NEAR(probe.last_de, (0.1 / 0.1) / 10.0, 1e-12);
}

TEST(FpidStep, InputsNormalizedAndClamped)
{
  FpidLoopConfig cfg;
  cfg.norm_scale = 2.0;
  PidState s = PidState::from(cfg);
  ProbeEngine probe;
  fpid_step(s, probe, cfg, 5.0, 0.1);
  EXPECT_EQ(probe.last_e, 1.0);
  fpid_step(s, probe, cfg, -5.0, 0.1);
  EXPECT_EQ(probe.last_e, -1.0);
  EXPECT_EQ(probe.last_de, -1.0);
}

TEST(FpidStep, GainsSaturateAtKmax)
{
  FpidLoopConfig cfg;
  cfg.initial = {10.0, 10.0, 10.0};
  PidState s = PidState::from(cfg);
  ConstantEngine up(0.1);
  fpid_step(s, up, cfg, 0.3, 0.1);
  EXPECT_EQ(s.gains.kp, cfg.k_max);
  EXPECT_EQ(s.gains.ki, cfg.k_max);
  EXPECT_EQ(s.gains.kd, cfg.k_max);
  ConstantEngine down(-20.0);
  fpid_step(s, down, cfg, 0.3, 0.1);
  EXPECT_EQ(s.gains.kp, 0.0);
}

TEST(FpidStep, IntegralClamped)
{
  FpidLoopConfig cfg;
  cfg.i_max = 0.25;
  PidState s = PidState::from(cfg);
  ZeroEngine z;
  for (int i = 0; i < 100; ++i) {
    fpid_step(s, z, cfg, 1.0, 0.1);
  }
  EXPECT_EQ(s.integral, 0.25);
}

TEST(FpidProperty, ZeroEngineIsFixedGainPid)
{
  FpidLoopConfig cfg;
  cfg.initial = {1.3, 0.4, 0.2};
  cfg.i_max = 0.5;
  PidState s = PidState::from(cfg);
  ZeroEngine z;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double integral = 0.0;
  double prev = 0.0;
  const double dt = 0.1;
  for (int k = 0; k < 500; ++k) {
    const double e = u(rng);
    integral = std::clamp(integral + e * dt, -0.5, 0.5);
    const double d = k == 0 ? 0.0 : (e - prev) / dt;
    const double expected = 1.3 * e + 0.4 * integral + 0.2 * d;
    ASSERT_NEAR(fpid_step(s, z, cfg, e, dt), expected, 1e-12);
    prev = e;
  }
}

TEST(FpidProperty, GainsStayInRange)
{
  const auto eng = IntervalType2Engine::make_default();
  FpidLoopConfig cfg;
  cfg.k_max = 2.0;
  cfg.initial = {1.0, 0.5, 0.5};
  PidState s = PidState::from(cfg);
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 2000; ++k) {
    fpid_step(s, *eng, cfg, u(rng), 0.1);
    for (const double g : {s.gains.kp, s.gains.ki, s.gains.kd}) {
      ASSERT_GE(g, 0.0);
      ASSERT_LE(g, cfg.k_max);
    }
  }
}

TEST(FpidController, AtTargetCommandsZero)
{
  FpidController c(FpidConfig{}, Type1Engine::make_default());
  const BodyVelocity v = c.command({1, 1, 0.5}, {1, 1, 0.5}, 0.1);
  EXPECT_EQ(v.vx, 0.0);
  EXPECT_EQ(v.vy, 0.0);
  EXPECT_EQ(v.omega, 0.0);
}

TEST(FpidController, TargetAheadHasNoLateralComponent)
{
  FpidController c(FpidConfig{}, Type1Engine::make_default());
  const BodyVelocity v = c.command({0, 0, 0}, {0.5, 0, 0}, 0.1);
  EXPECT_GT(v.vx, 0.0);
  EXPECT_EQ(v.vy, 0.0);
}

TEST(FpidController, BodyAndGlobalFrames)
{
  FpidConfig cfg;
  cfg.frame = CommandFrame::global;
  FpidController g(cfg, std::make_shared<ZeroEngine>());
  FpidController b(FpidConfig{}, std::make_shared<ZeroEngine>());
  const RobotPose robot{0, 0, 0.7};
  const RobotPose target{0, 0.3, 0.7};
  const BodyVelocity vb = b.command(robot, target, 0.1);
  const BodyVelocity vg = g.command(robot, target, 0.1);
  // Body frame heads straight at the target; global frame uses the relative
  // bearing as an absolute direction.
  EXPECT_NEAR(std::atan2(vb.vy, vb.vx), kPi / 2, 1e-12);
  EXPECT_NEAR(std::atan2(vg.vy, vg.vx), kPi / 2 - 0.7, 1e-12);
  EXPECT_NEAR(std::hypot(vb.vx, vb.vy), std::hypot(vg.vx, vg.vy), 1e-15);
}

TEST(FpidController, DeadbandStopsTranslation)
{
  FpidController c(FpidConfig{}, Type1Engine::make_default());
  const BodyVelocity v = c.command({0, 0, 0}, {0.005, 0, 0.3}, 0.1);
  EXPECT_EQ(v.vx, 0.0);
  EXPECT_EQ(v.vy, 0.0);
  EXPECT_GT(v.omega, 0.0);
}

TEST(FpidProperty, CommandsRespectBounds)
{
  FpidController c(FpidConfig{}, IntervalType2Engine::make_default());
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const BodyVelocity v = c.command({u(rng), u(rng), wrap_angle(u(rng))},
        {u(rng), u(rng), wrap_angle(u(rng))}, 0.1);
    ASSERT_LE(std::hypot(v.vx, v.vy), 1.5 + 1e-12);
    ASSERT_LE(std::abs(v.omega), 3.14);
  }
}

TEST(FpidProperty, DegenerateIt2ReproducesType1Commands)
{
  const auto a = closed_loop(Type1Engine::make_default(), 300);
  const auto b = closed_loop(IntervalType2Engine::make_default(1.0, 0.0), 300);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_NEAR(a[k].vx, b[k].vx, 1e-7) << k;
    ASSERT_NEAR(a[k].vy, b[k].vy, 1e-7) << k;
    ASSERT_NEAR(a[k].omega, b[k].omega, 1e-7) << k;
  }
}

TEST(FpidConfig, Validation)
{
  FpidConfig c;
  EXPECT_NO_THROW(c.validate());
  c.distance.initial.kp = 11.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = FpidConfig{};
  c.v_max = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(FpidController(FpidConfig{}, nullptr), ConfigError);
  EXPECT_THROW(parse_command_frame("local"), ConfigError);
}
