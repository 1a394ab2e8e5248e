// omnitrack: plan references and run tracking experiments from config files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omnitrack/config.hpp"
#include "omnitrack/simlab.hpp"
#include "omnitrack/svg.hpp"

namespace fs = std::filesystem;
using namespace omnitrack;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoPath = 2;

struct CommonOptions
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool parallel = false;
};

Cell parse_cell(const std::string & text)
{
  const std::vector<int> v = parse_int_list(text);
  if (v.size() != 2) {
    throw ConfigError("expected COL,ROW but got '" + text + "'");
  }
  return Cell{v[0], v[1]};
}

OccupancyGrid load_map(const std::string & path)
{
  return path.empty() ? standard_grid() : load_grid_map(path);
}

ExperimentConfig load_config(const CommonOptions & o)
{
  ExperimentConfig cfg = o.config.empty() ? default_experiment_config() :
    load_experiment_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (!o.out.empty()) {
    cfg.out_dir = o.out;
  }
  return cfg;
}

fs::path prepare_out(const ExperimentConfig & cfg)
{
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  std::ostringstream s;
  write_experiment_config(s, cfg);
  svg::save((dir / "config.ini").string(), s.str());
  return dir;
}

template<typename F>
void write_file(const fs::path & path, F && body)
{
  std::ofstream f(path);
  if (!f) {
    throw Error("cannot write " + path.string());
  }
  body(f);
  if (!f) {
    throw Error("write failed: " + path.string());
  }
}

std::string render_chart(const svg::Chart & c)
{
  std::ostringstream s;
  svg::write_line_chart(s, c);
  return s.str();
}

// --- plan -----------------------------------------------------------------

struct PlanOptions
{
  std::string map;
  std::string start;
  std::string goal;
  double total_time = 30.0;
  double ts = 0.1;
  std::string out = "out";
};

int cmd_plan(const PlanOptions & o)
{
  const OccupancyGrid grid = load_map(o.map);
  const Cell start = o.start.empty() ? kStandardStart : parse_cell(o.start);
  const Cell goal = o.goal.empty() ? kStandardGoal : parse_cell(o.goal);
  if (!(o.ts > 0.0) || !(o.total_time > o.ts)) {
    throw ConfigError("need --time > --ts > 0");
  }
  AStarStats stats;
  const GridPath path = astar(grid, start, goal, &stats);
  const SmoothPath curve = smooth(path, grid);
  const ReferenceTrajectory traj = sample_reference(curve, o.total_time, o.ts);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_file(dir / "reference.csv", [&](std::ostream & f) {write_reference_csv(f, traj);});
  write_file(dir / "path.csv", [&](std::ostream & f) {
      f << "col,row,x,y\n";
      f.precision(std::numeric_limits<double>::max_digits10);
      for (const Cell & c : path.cells) {
        const Point2 p = grid.cell_center(c);
        f << c.col << ',' << c.row << ',' << p.x << ',' << p.y << '\n';
      }
    });
  std::vector<Point2> dense;
  for (int i = 0; i <= 400; ++i) {
    dense.push_back(curve.evaluate(curve.u_max() * i / 400.0));
  }
  std::ostringstream s;
  svg::write_plan_overlay(s, grid, path, dense);
  svg::save((dir / "plan.svg").string(), s.str());
  std::cout << "path cost " << path.cost() << ", " << stats.expansions << " expansions, length "
            << curve.total_length() << " m, " << traj.size() << " samples -> "
            << (dir / "reference.csv").string() << '\n';
  return kExitOk;
}

// --- track ----------------------------------------------------------------

TrackingMetrics safe_metrics(const Episode & ep)
{
  if (ep.log.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  return tracking_metrics(ep.log);
}

ReferenceTrajectory config_reference(const ExperimentConfig & cfg)
{
  return plan_reference(load_map(cfg.map_path), cfg.start, cfg.goal, cfg.total_time, cfg.ts);
}

int cmd_track(const CommonOptions & o)
{
  const ExperimentConfig cfg = load_config(o);
  const ReferenceTrajectory traj = config_reference(cfg);
  const fs::path dir = prepare_out(cfg);

  std::vector<Episode> eps(cfg.controllers.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i].trajectory = traj;
    eps[i].controller = cfg.controllers[i];
    eps[i].geometry = cfg.geometry;
    eps[i].seed = cfg.seed;
    if (cfg.noise) {
      eps[i].noise = cfg.noise_model;
    }
  }
  std::vector<std::string> status(eps.size(), "ok");
  const auto run_one = [&](std::size_t i) {
      try {
        run_episode(eps[i]);
      } catch (const Error & e) {
        status[i] = std::string("failed: ") + e.what();
      }
    };
  if (o.parallel) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, run_one, i));
    }
    for (auto & j : jobs) {
      j.get();
    }
  } else {
    for (std::size_t i = 0; i < eps.size(); ++i) {
      run_one(i);
    }
  }
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const bool unconverged = std::any_of(eps[i].log.begin(), eps[i].log.end(),
        [](const EpisodeRecord & r) {return r.solver && !r.solver->converged;});
    if (status[i] == "ok" && unconverged) {
      status[i] = "unconverged";
    }
  }

  write_file(dir / "metrics.csv", [&](std::ostream & f) {
      f.precision(std::numeric_limits<double>::max_digits10);
      f << "controller,scenario,tracking_time,me_xy,mae_theta,status"
        << (cfg.noise ? ",noise" : "") << '\n';
      for (std::size_t i = 0; i < eps.size(); ++i) {
        const TrackingMetrics m = safe_metrics(eps[i]);
        f << to_string(eps[i].controller.kind) << ',' << cfg.name << ',' << cfg.total_time << ','
          << m.me_xy << ',' << m.mae_theta << ',' << status[i] << (cfg.noise ? ",true" : "")
          << '\n';
      }
    });
  svg::Chart xy{"XY tracking", "x [m]", "y [m]", {}, true};
  svg::Chart th{"Heading tracking", "t [s]", "theta [rad]", {}, false};
  svg::Series ref_xy{"reference", {}, {}, true};
  svg::Series ref_th{"reference", {}, {}, true};
  for (std::size_t n = 0; n < traj.size(); ++n) {
    ref_xy.x.push_back(traj.poses[n].x);
    ref_xy.y.push_back(traj.poses[n].y);
    ref_th.x.push_back(traj.ts * static_cast<double>(n));
    ref_th.y.push_back(traj.poses[n].theta);
  }
  xy.series.push_back(ref_xy);
  th.series.push_back(ref_th);
  for (const Episode & ep : eps) {
    const std::string id(to_string(ep.controller.kind));
    write_file(dir / ("run_" + id + ".csv"), [&](std::ostream & f) {write_run_csv(f, ep);});
    svg::Series a{id, {}, {}, false};
    svg::Series b{id, {}, {}, false};
    for (const EpisodeRecord & r : ep.log) {
      a.x.push_back(r.truth.x);
      a.y.push_back(r.truth.y);
      b.x.push_back(r.t);
      b.y.push_back(r.truth.theta);
    }
    xy.series.push_back(std::move(a));
    th.series.push_back(std::move(b));
  }
  svg::save((dir / "xy.svg").string(), render_chart(xy));
  svg::save((dir / "theta.svg").string(), render_chart(th));

  for (std::size_t i = 0; i < eps.size(); ++i) {
    const TrackingMetrics m = safe_metrics(eps[i]);
    std::printf("%-9s me_xy %.4f m  mae_theta %.4f rad  %s\n",
      std::string(to_string(eps[i].controller.kind)).c_str(), m.me_xy, m.mae_theta,
      status[i].c_str());
  }
  return kExitOk;
}

// --- step -----------------------------------------------------------------

int cmd_step(const CommonOptions & o)
{
  const ExperimentConfig cfg = load_config(o);
  const fs::path dir = prepare_out(cfg);
  std::vector<std::array<StepResponse, 3>> responses;
  for (const ControllerSpec & spec : cfg.controllers) {
    responses.push_back(
      run_step_response(spec, cfg.geometry, cfg.step_duration, cfg.ts, o.parallel));
  }
  write_file(dir / "step.csv", [&](std::ostream & f) {
      f.precision(std::numeric_limits<double>::max_digits10);
      f << "controller,axis,overshoot_pct,rise_time,settling_time\n";
      for (std::size_t c = 0; c < responses.size(); ++c) {
        for (const StepResponse & r : responses[c]) {
          f << to_string(cfg.controllers[c].kind) << ',' << to_string(r.axis) << ','
            << r.metrics.overshoot_pct << ',';
          if (r.metrics.rise_time) {
            f << *r.metrics.rise_time;
          }
          f << ',';
          if (r.metrics.settling_time) {
            f << *r.metrics.settling_time;
          }
          f << '\n';
        }
      }
    });
  write_file(dir / "step_series.csv", [&](std::ostream & f) {
      f.precision(std::numeric_limits<double>::max_digits10);
      f << "controller,axis,t,y\n";
      for (std::size_t c = 0; c < responses.size(); ++c) {
        for (const StepResponse & r : responses[c]) {
          for (std::size_t k = 0; k < r.t.size(); ++k) {
            f << to_string(cfg.controllers[c].kind) << ',' << to_string(r.axis) << ','
              << r.t[k] << ',' << r.y[k] << '\n';
          }
        }
      }
    });
  for (std::size_t a = 0; a < 3; ++a) {
    const std::string axis(to_string(static_cast<StepAxis>(a)));
    svg::Chart chart{"Step response (" + axis + ")", "t [s]", axis, {}, false};
    for (std::size_t c = 0; c < responses.size(); ++c) {
      chart.series.push_back(svg::Series{std::string(to_string(cfg.controllers[c].kind)),
          responses[c][a].t, responses[c][a].y, false});
    }
    svg::save((dir / ("step_" + axis + ".svg")).string(), render_chart(chart));
  }
  for (std::size_t c = 0; c < responses.size(); ++c) {
    for (const StepResponse & r : responses[c]) {
      std::printf("%-9s %-5s overshoot %6.2f%%  rise %s  settling %s\n",
        std::string(to_string(cfg.controllers[c].kind)).c_str(),
        std::string(to_string(r.axis)).c_str(), r.metrics.overshoot_pct,
        r.metrics.rise_time ? std::to_string(*r.metrics.rise_time).c_str() : "-",
        r.metrics.settling_time ? std::to_string(*r.metrics.settling_time).c_str() : "-");
    }
  }
  return kExitOk;
}

// --- horizon --------------------------------------------------------------

int cmd_horizon(const CommonOptions & o, const std::string & np)
{
  ExperimentConfig cfg = load_config(o);
  if (!np.empty()) {
    cfg.horizons = parse_int_list(np);
  }
  if (cfg.horizons.empty()) {
    throw ConfigError("no prediction horizon given");
  }
  for (const int h : cfg.horizons) {
    if (h < 1) {
      throw ConfigError("prediction horizon must be >= 1, got " + std::to_string(h));
    }
  }
  const ControllerSpec * spec = cfg.find(ControllerKind::nmpc);
  if (spec == nullptr) {
    throw ConfigError("missing controller section [nmpc]");
  }
  const ReferenceTrajectory traj = config_reference(cfg);
  const fs::path dir = prepare_out(cfg);
  std::optional<NoiseModel> noise;
  if (cfg.noise) {
    noise = cfg.noise_model;
  }
  const std::vector<HorizonRow> rows =
    horizon_sweep(traj, *spec, cfg.horizons, cfg.geometry, noise, cfg.seed, o.parallel);
  write_file(dir / "horizon.csv", [&](std::ostream & f) {
      f.precision(std::numeric_limits<double>::max_digits10);
      f << "horizon,me_xy,mae_theta\n";
      for (const HorizonRow & r : rows) {
        f << r.horizon << ',' << r.metrics.me_xy << ',' << r.metrics.mae_theta << '\n';
      }
    });
  std::vector<svg::BarGroup> groups;
  for (const HorizonRow & r : rows) {
    groups.push_back({"Np=" + std::to_string(r.horizon), {r.metrics.me_xy, r.metrics.mae_theta}});
  }
  std::ostringstream s;
  svg::write_bar_chart(s, "Prediction horizon sweep", {"me_xy [m]", "mae_theta [rad]"}, groups);
  svg::save((dir / "horizon.svg").string(), s.str());
  for (const HorizonRow & r : rows) {
    std::printf("Np=%-3d me_xy %.4f m  mae_theta %.4f rad\n", r.horizon, r.metrics.me_xy,
      r.metrics.mae_theta);
  }
  return kExitOk;
}

void add_common(CLI::App * sub, CommonOptions & o)
{
  sub->add_option("--config", o.config, "experiment config (INI)")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "override the noise seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_flag("--parallel", o.parallel, "run independent episodes concurrently");
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Trajectory tracking lab for a four-wheel omni robot"};
  app.require_subcommand(1);

  PlanOptions plan;
  plan.map = std::string(OMNITRACK_DATA_DIR) + "/standard_map.txt";
  CLI::App * plan_cmd = app.add_subcommand("plan", "A* + B-spline reference on a grid map");
  plan_cmd->add_option("--map", plan.map, "map file")->capture_default_str();
  plan_cmd->add_option("--start", plan.start, "start cell COL,ROW");
  plan_cmd->add_option("--goal", plan.goal, "goal cell COL,ROW");
  plan_cmd->add_option("--time", plan.total_time, "trajectory duration [s]")
    ->capture_default_str();
  plan_cmd->add_option("--ts", plan.ts, "sample time [s]")->capture_default_str();
  plan_cmd->add_option("--out", plan.out, "output directory")->capture_default_str();

  CommonOptions track;
  add_common(app.add_subcommand("track", "run the configured controllers on one reference"),
    track);
  CommonOptions step;
  add_common(app.add_subcommand("step", "unit step responses in x, y and theta"), step);
  CommonOptions horizon;
  std::string np;
  CLI::App * hz_cmd = app.add_subcommand("horizon", "NMPC prediction horizon sweep");
  add_common(hz_cmd, horizon);
  hz_cmd->add_option("--np", np, "comma separated horizons, e.g. 5,10,15,20");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (app.got_subcommand("plan")) {
      return cmd_plan(plan);
    }
    if (app.got_subcommand("track")) {
      return cmd_track(track);
    }
    if (app.got_subcommand("step")) {
      return cmd_step(step);
    }
    return cmd_horizon(horizon, np);
  } catch (const NoPathError & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoPath;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
