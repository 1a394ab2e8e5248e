#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "omnitrack/fpid.hpp"
#include "omnitrack/fuzzy.hpp"
#include "omnitrack/kinematics.hpp"
#include "omnitrack/nmpc.hpp"
#include "omnitrack/planning.hpp"

namespace omnitrack
{

class NotSettledError : public Error
{
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Controllers

enum class ControllerKind
{
  fpid_t1,
  fpid_it2,
  nmpc,
};

/// "fpid-t1", "fpid-it2" or "nmpc".
std::string_view to_string(ControllerKind k);
ControllerKind parse_controller_kind(std::string_view id);

struct Fou
{
  double height_scale = 1.0;
  double lag = 0.3;
  TypeReduction reduction = TypeReduction::centroid;
};

/// Everything needed to instantiate one tracking controller.
struct ControllerSpec
{
  ControllerKind kind = ControllerKind::nmpc;
  FpidConfig fpid{};
  Fou fou{};
  OcpConfig nmpc{};

  static ControllerSpec defaults(ControllerKind kind);
};

/// Solver diagnostics attached to a log record (NMPC only).
struct SolverDiagnostics
{
  double cost = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  double defect_norm = 0.0;
  bool converged = true;
};

/// Common interface of the three trackers used by the episode runner.
class Tracker
{
public:
  virtual ~Tracker() = default;
  virtual BodyVelocity command(
    const RobotPose & measured, const ReferenceTrajectory & traj, std::size_t k) = 0;
  virtual std::optional<SolverDiagnostics> diagnostics() const {return std::nullopt;}
};

std::unique_ptr<Tracker> make_tracker(const ControllerSpec & spec);

// ---------------------------------------------------------------------------
// Noise

/// Additive measurement noise rand() / divisor * sin(n * ts / time_scale) with
/// an independent uniform [0, 1) draw per channel.
struct NoiseModel
{
  double amplitude_divisor = 6.0;
  double time_scale = 5.0;
};

std::array<double, 3> noise_sample(
  const NoiseModel & model, std::size_t n, double ts, std::mt19937_64 & rng);

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeRecord
{
  double t = 0.0;
  RobotPose reference{};
  RobotPose truth{};
  RobotPose measured{};
  BodyVelocity command{};
  WheelSpeeds wheels{};
  std::optional<SolverDiagnostics> solver;
};

struct Episode
{
  ReferenceTrajectory trajectory;
  ControllerSpec controller{};
  OmniGeometry geometry{};
  std::optional<NoiseModel> noise;
  std::uint64_t seed = 1;
  /// Defaults to the first reference pose.
  std::optional<RobotPose> initial_pose;

  std::vector<EpisodeRecord> log;
  /// Largest |FK(IK(cmd)) - cmd| component seen in the loop.
  double max_wheel_roundtrip_error = 0.0;
};

/// Closed loop: measure (true pose + noise), command, map through the wheel
/// kinematics, integrate. One record per reference sample, holding the state
/// before that step's command is applied.
void run_episode(Episode & episode);

/// Runs independent episodes, optionally on separate threads.
void run_episodes(std::vector<Episode> & episodes, bool parallel);

// ---------------------------------------------------------------------------
// Metrics

struct TrackingMetrics
{
  double me_xy = 0.0;
  double mae_theta = 0.0;
};

/// Mean Euclidean XY error and mean absolute wrapped heading error of the
/// true pose against the reference.
TrackingMetrics tracking_metrics(const std::vector<EpisodeRecord> & log);

struct StepMetrics
{
  double overshoot_pct = 0.0;
  std::optional<double> rise_time;      // 10% -> 90%
  std::optional<double> settling_time;  // stays within +-10% of the step
};

/// Step-response characteristics of samples (t, y) for a step from y[0] to
/// `target`. Times are relative to t[0].
StepMetrics step_metrics(
  const std::vector<double> & t, const std::vector<double> & y, double target);

enum class StepAxis : int {x = 0, y = 1, theta = 2};
std::string_view to_string(StepAxis a);

struct StepResponse
{
  StepAxis axis = StepAxis::x;
  std::vector<double> t;
  std::vector<double> y;
  StepMetrics metrics;
};

/// Unit steps in x, y and theta from rest at the origin, each held for
/// `duration` seconds.
std::array<StepResponse, 3> run_step_response(
  const ControllerSpec & spec, const OmniGeometry & geometry = {}, double duration = 10.0,
  double ts = 0.1, bool parallel = false);

struct HorizonRow
{
  int horizon = 0;
  TrackingMetrics metrics;
};

/// One NMPC episode per horizon on the same reference.
std::vector<HorizonRow> horizon_sweep(
  const ReferenceTrajectory & traj, const ControllerSpec & nmpc_spec,
  const std::vector<int> & horizons, const OmniGeometry & geometry = {},
  std::optional<NoiseModel> noise = std::nullopt, std::uint64_t seed = 1,
  bool parallel = false);

// ---------------------------------------------------------------------------
// Standard scenario

/// 20x20 map with three rectangular obstacles; start and goal in opposite
/// corners.
OccupancyGrid standard_grid();
inline constexpr Cell kStandardStart{1, 18};
inline constexpr Cell kStandardGoal{18, 1};

/// A* + B-spline + arc-length sampling on the standard map.
ReferenceTrajectory standard_reference(double total_time, double ts = 0.1);

/// Plans a reference on an arbitrary map.
ReferenceTrajectory plan_reference(
  const OccupancyGrid & grid, Cell start, Cell goal, double total_time, double ts);

// ---------------------------------------------------------------------------
// CSV

/// "n,t,x_ref,y_ref,theta_ref,x,y,theta,x_meas,y_meas,theta_meas,vx_cmd,vy_cmd,
/// omega_cmd,phi1,phi2,phi3,phi4" plus ",cost,iters,kkt" when diagnostics exist.
void write_run_csv(std::ostream & out, const Episode & episode);

/// Reads the reference and true poses back from a run CSV.
std::vector<EpisodeRecord> read_run_csv(std::istream & in);

}  // namespace omnitrack
