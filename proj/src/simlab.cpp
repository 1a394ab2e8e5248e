#include "omnitrack/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace omnitrack
{

// ---------------------------------------------------------------------------
// Controllers

std::string_view to_string(ControllerKind k)
{
  switch (k) {
    case ControllerKind::fpid_t1: return "fpid-t1";
    case ControllerKind::fpid_it2: return "fpid-it2";
    case ControllerKind::nmpc: return "nmpc";
  }
  return "unknown";
}

ControllerKind parse_controller_kind(std::string_view id)
{
  for (const auto k : {ControllerKind::fpid_t1, ControllerKind::fpid_it2, ControllerKind::nmpc}) {
    if (to_string(k) == id) {
      return k;
    }
  }
  throw ConfigError("unknown controller id '" + std::string(id) + "'");
}

ControllerSpec ControllerSpec::defaults(ControllerKind kind)
{
  ControllerSpec s;
  s.kind = kind;
  return s;
}

namespace
{

class FpidTracker final : public Tracker
{
public:
  FpidTracker(const FpidConfig & cfg, std::shared_ptr<const FuzzyEngine> engine)
  : ctrl_(cfg, std::move(engine))
  {
  }

  BodyVelocity command(
    const RobotPose & measured, const ReferenceTrajectory & traj, std::size_t k) override
  {
    const std::size_t idx = std::min(k, traj.size() - 1);
    return ctrl_.command(measured, traj.poses[idx], traj.ts);
  }

private:
  FpidController ctrl_;
};

class NmpcTracker final : public Tracker
{
public:
  explicit NmpcTracker(const OcpConfig & cfg)
  : ctrl_(cfg)
  {
  }

  BodyVelocity command(
    const RobotPose & measured, const ReferenceTrajectory & traj, std::size_t k) override
  {
    return ctrl_.command(measured, traj, k);
  }

  std::optional<SolverDiagnostics> diagnostics() const override
  {
    if (!ctrl_.has_solution()) {
      return std::nullopt;
    }
    const OcpSolution & s = ctrl_.last_solution();
    return SolverDiagnostics{
      s.cost, s.iterations, s.kkt_residual, s.defect_norm, s.status == SolveStatus::converged};
  }

private:
  NmpcController ctrl_;
};

}  // namespace

std::unique_ptr<Tracker> make_tracker(const ControllerSpec & spec)
{
  switch (spec.kind) {
    case ControllerKind::fpid_t1:
      return std::make_unique<FpidTracker>(spec.fpid, Type1Engine::make_default());
    case ControllerKind::fpid_it2:
      return std::make_unique<FpidTracker>(
        spec.fpid, IntervalType2Engine::make_default(
          spec.fou.height_scale, spec.fou.lag, spec.fou.reduction));
    case ControllerKind::nmpc:
      return std::make_unique<NmpcTracker>(spec.nmpc);
  }
  throw ConfigError("unknown controller kind");
}

// ---------------------------------------------------------------------------
// Noise

std::array<double, 3> noise_sample(
  const NoiseModel & model, std::size_t n, double ts, std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double envelope = std::sin(static_cast<double>(n) * ts / model.time_scale);
  std::array<double, 3> out{};
  for (double & v : out) {
    v = uniform(rng) / model.amplitude_divisor * envelope;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Episodes

void run_episode(Episode & ep)
{
  const ReferenceTrajectory & traj = ep.trajectory;
  if (traj.size() < 1 || !(traj.ts > 0.0)) {
    throw ConfigError("episode needs a non-empty trajectory with ts > 0");
  }
  ep.geometry.validate();
  auto tracker = make_tracker(ep.controller);
  std::mt19937_64 rng(ep.seed);

  RobotPose truth = ep.initial_pose.value_or(traj.poses.front());
  truth.theta = wrap_angle(truth.theta);
  ep.log.clear();
  ep.log.reserve(traj.size());
  ep.max_wheel_roundtrip_error = 0.0;

  for (std::size_t n = 0; n < traj.size(); ++n) {
    EpisodeRecord rec;
    rec.t = static_cast<double>(n) * traj.ts;
    rec.reference = traj.poses[n];
    rec.truth = truth;
    rec.measured = truth;
    if (ep.noise) {
      const auto w = noise_sample(*ep.noise, n, traj.ts, rng);
      rec.measured = RobotPose{truth.x + w[0], truth.y + w[1], wrap_angle(truth.theta + w[2])};
    }
    rec.command = tracker->command(rec.measured, traj, n);
    rec.solver = tracker->diagnostics();
    rec.wheels = inverse_kinematics(ep.geometry, rec.command);
    const BodyVelocity applied = forward_kinematics(ep.geometry, rec.wheels);
    ep.max_wheel_roundtrip_error = std::max({ep.max_wheel_roundtrip_error,
        std::abs(applied.vx - rec.command.vx), std::abs(applied.vy - rec.command.vy),
        std::abs(applied.omega - rec.command.omega)});
    truth = integrate_pose(truth, applied, traj.ts);
    ep.log.push_back(rec);
  }
}

void run_episodes(std::vector<Episode> & episodes, bool parallel)
{
  if (!parallel) {
    for (Episode & ep : episodes) {
      run_episode(ep);
    }
    return;
  }
  std::vector<std::future<void>> jobs;
  jobs.reserve(episodes.size());
  for (Episode & ep : episodes) {
    jobs.push_back(std::async(std::launch::async, [&ep] {run_episode(ep);}));
  }
  for (auto & j : jobs) {
    j.get();
  }
}

// ---------------------------------------------------------------------------
// Metrics

TrackingMetrics tracking_metrics(const std::vector<EpisodeRecord> & log)
{
  if (log.empty()) {
    throw ConfigError("tracking metrics need a non-empty log");
  }
  double dist = 0.0;
  double head = 0.0;
  for (const EpisodeRecord & r : log) {
    dist += std::hypot(r.reference.x - r.truth.x, r.reference.y - r.truth.y);
    head += std::abs(wrap_angle(r.reference.theta - r.truth.theta));
  }
  const auto n = static_cast<double>(log.size());
  return TrackingMetrics{dist / n, head / n};
}

StepMetrics step_metrics(
  const std::vector<double> & t, const std::vector<double> & y, double target)
{
  if (t.size() != y.size() || t.size() < 2) {
    throw ConfigError("step metrics need at least 2 (t, y) samples");
  }
  const double y0 = y.front();
  const double step = target - y0;
  if (step == 0.0) {
    throw ConfigError("step metrics need a target different from the initial value");
  }
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    z[i] = (y[i] - y0) / step;
  }

  StepMetrics m;
  const double peak = *std::max_element(z.begin(), z.end());
  m.overshoot_pct = std::max(0.0, peak - 1.0) * 100.0;

  auto first_crossing = [&](double level) -> std::optional<double> {
      if (z.front() >= level) {
        return t.front();
      }
      for (std::size_t i = 1; i < z.size(); ++i) {
        if (z[i] >= level) {
          const double f = (level - z[i - 1]) / (z[i] - z[i - 1]);
          return t[i - 1] + f * (t[i] - t[i - 1]);
        }
      }
      return std::nullopt;
    };
  const auto t10 = first_crossing(0.1);
  const auto t90 = first_crossing(0.9);
  if (t10 && t90) {
    m.rise_time = *t90 - *t10;
  }

  constexpr double kBand = 0.1;
  std::ptrdiff_t last_out = -1;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::abs(z[i] - 1.0) > kBand) {
      last_out = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (last_out < 0) {
    m.settling_time = 0.0;
  } else if (static_cast<std::size_t>(last_out) + 1 < z.size()) {
    const auto i = static_cast<std::size_t>(last_out);
    // Interpolate where |z - 1| re-enters the band between samples i and i+1.
    const double edge = z[i] > 1.0 ? 1.0 + kBand : 1.0 - kBand;
    const double f = (edge - z[i]) / (z[i + 1] - z[i]);
    m.settling_time = t[i] + std::clamp(f, 0.0, 1.0) * (t[i + 1] - t[i]) - t.front();
  }
  if (m.rise_time && m.settling_time && *m.rise_time > *m.settling_time) {
    // Settling inside the rise window happens only for coarse sampling; the
    // response is inside the band once it has risen.
    m.settling_time = std::max(*m.settling_time, *t90 - t.front());
  }
  return m;
}

std::string_view to_string(StepAxis a)
{
  switch (a) {
    case StepAxis::x: return "x";
    case StepAxis::y: return "y";
    case StepAxis::theta: return "theta";
  }
  return "unknown";
}

std::array<StepResponse, 3> run_step_response(
  const ControllerSpec & spec, const OmniGeometry & geometry, double duration, double ts,
  bool parallel)
{
  const std::size_t n = sample_count(duration, ts);
  const std::array<RobotPose, 3> targets{
    RobotPose{1.0, 0.0, 0.0}, RobotPose{0.0, 1.0, 0.0}, RobotPose{0.0, 0.0, 1.0}};

  std::vector<Episode> eps(3);
  for (std::size_t a = 0; a < 3; ++a) {
    eps[a].trajectory = constant_reference(targets[a], n, ts);
    eps[a].controller = spec;
    eps[a].geometry = geometry;
    eps[a].initial_pose = RobotPose{};
  }
  run_episodes(eps, parallel);

  std::array<StepResponse, 3> out;
  for (std::size_t a = 0; a < 3; ++a) {
    StepResponse & r = out[a];
    r.axis = static_cast<StepAxis>(a);
    for (const EpisodeRecord & rec : eps[a].log) {
      r.t.push_back(rec.t);
      const double v = a == 0 ? rec.truth.x : (a == 1 ? rec.truth.y : rec.truth.theta);
      r.y.push_back(v);
    }
    r.metrics = step_metrics(r.t, r.y, 1.0);
  }
  return out;
}

std::vector<HorizonRow> horizon_sweep(
  const ReferenceTrajectory & traj, const ControllerSpec & nmpc_spec,
  const std::vector<int> & horizons, const OmniGeometry & geometry,
  std::optional<NoiseModel> noise, std::uint64_t seed, bool parallel)
{
  std::vector<Episode> eps(horizons.size());
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) {
      throw ConfigError("prediction horizon must be >= 1");
    }
    eps[i].trajectory = traj;
    eps[i].controller = nmpc_spec;
    eps[i].controller.kind = ControllerKind::nmpc;
    eps[i].controller.nmpc.horizon = horizons[i];
    eps[i].geometry = geometry;
    eps[i].noise = noise;
    eps[i].seed = seed;
  }
  run_episodes(eps, parallel);
  std::vector<HorizonRow> rows;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    rows.push_back(HorizonRow{horizons[i], tracking_metrics(eps[i].log)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Standard scenario

OccupancyGrid standard_grid()
{
  OccupancyGrid g(20, 20, 0.2);
  g.fill_rect({5, 11}, {7, 19});
  g.fill_rect({10, 6}, {14, 8});
  g.fill_rect({13, 12}, {16, 15});
  return g;
}

ReferenceTrajectory plan_reference(
  const OccupancyGrid & grid, Cell start, Cell goal, double total_time, double ts)
{
  const GridPath path = astar(grid, start, goal);
  return sample_reference(smooth(path, grid), total_time, ts);
}

ReferenceTrajectory standard_reference(double total_time, double ts)
{
  return plan_reference(standard_grid(), kStandardStart, kStandardGoal, total_time, ts);
}

// ---------------------------------------------------------------------------
// CSV

void write_run_csv(std::ostream & out, const Episode & ep)
{
  const bool diag = std::any_of(ep.log.begin(), ep.log.end(),
      [](const EpisodeRecord & r) {return r.solver.has_value();});
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "n,t,x_ref,y_ref,theta_ref,x,y,theta,x_meas,y_meas,theta_meas,vx_cmd,vy_cmd,"
    "omega_cmd,phi1,phi2,phi3,phi4";
  if (diag) {
    out << ",cost,iters,kkt";
  }
  out << '\n';
  for (std::size_t n = 0; n < ep.log.size(); ++n) {
    const EpisodeRecord & r = ep.log[n];
    out << n << ',' << r.t << ',' << r.reference.x << ',' << r.reference.y << ','
        << r.reference.theta << ',' << r.truth.x << ',' << r.truth.y << ',' << r.truth.theta
        << ',' << r.measured.x << ',' << r.measured.y << ',' << r.measured.theta << ','
        << r.command.vx << ',' << r.command.vy << ',' << r.command.omega;
    for (const double w : r.wheels.phi_dot) {
      out << ',' << w;
    }
    if (diag) {
      if (r.solver) {
        out << ',' << r.solver->cost << ',' << r.solver->iterations << ','
            << r.solver->kkt_residual;
      } else {
        out << ",,,";
      }
    }
    out << '\n';
  }
  out.precision(old);
}

std::vector<EpisodeRecord> read_run_csv(std::istream & in)
{
  std::string line;
  if (!std::getline(in, line) || line.rfind("n,t,x_ref,y_ref,theta_ref,x,y,theta", 0) != 0) {
    throw FormatError("not a run CSV");
  }
  std::vector<EpisodeRecord> log;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<double> v;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',') && v.size() < 8) {
      v.push_back(std::stod(f));
    }
    if (v.size() < 8) {
      throw FormatError("short run CSV row");
    }
    EpisodeRecord r;
    r.t = v[1];
    r.reference = RobotPose{v[2], v[3], v[4]};
    r.truth = RobotPose{v[5], v[6], v[7]};
    log.push_back(r);
  }
  return log;
}

}  // namespace omnitrack
