#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "omnitrack/fuzzy.hpp"
#include "omnitrack/kinematics.hpp"
#include "omnitrack/nmpc.hpp"
#include "omnitrack/planning.hpp"
#include "omnitrack/simlab.hpp"
#include "oracles.hpp"

using namespace omnitrack;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string & what)
  {
    if (!cond) {
      ok = false;
      if (!detail.empty()) {
        detail += "; ";
      }
      detail += what;
    }
  }
};

std::string fmt(double v)
{
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Outcome kinematics_roundtrip()
{
  Outcome o;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  const OmniGeometry g;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BodyVelocity v{d(rng), d(rng), d(rng)};
    const BodyVelocity b = forward_kinematics(g, inverse_kinematics(g, v));
    worst = std::max({worst, std::abs(b.vx - v.vx), std::abs(b.vy - v.vy),
        std::abs(b.omega - v.omega)});
  }
  o.require(worst <= 1e-9, "round trip error " + fmt(worst));
  for (int i = 0; i < 100; ++i) {
    const double w = d(rng);
    for (const double p : inverse_kinematics(g, {0.0, 0.0, w}).phi_dot) {
      o.require(p == g.body_radius * w / g.wheel_radius, "pure rotation not exact");
    }
  }
  if (o.ok) {
    o.detail = "max error " + fmt(worst);
  }
  return o;
}

Outcome astar_dijkstra()
{
  Outcome o;
  std::mt19937_64 rng(202);
  int solvable = 0;
  for (int i = 0; i < 50; ++i) {
    const OccupancyGrid g = oracle::random_grid(rng, 20, 20, 0.2);
    const auto ref = oracle::dijkstra(g, {0, 0}, {19, 19});
    if (!ref) {
      continue;
    }
    ++solvable;
    const GridPath p = astar(g, {0, 0}, {19, 19});
    o.require(p.cost() == ref->cost, "cost mismatch on grid " + std::to_string(i));
  }
  o.require(solvable > 0, "no solvable grid");
  if (o.ok) {
    o.detail = std::to_string(solvable) + "/50 solvable, all equal";
  }
  return o;
}

Outcome fuzzy_engine()
{
  Outcome o;
  const auto rows = oracle::read_rule_rows(std::string(OMNITRACK_TEST_DATA_DIR) + "/rule_table.txt");
  const RuleBase rb = RuleBase::standard();
  int cells = 0;
  for (const auto & r : rows) {
    for (int k = 0; k < 3; ++k) {
      const Label c = rb.consequent(parse_label(r[0]), parse_label(r[1]), static_cast<GainOutput>(k));
      cells += to_string(c) == r[2 + static_cast<std::size_t>(k)] ? 1 : 0;
    }
  }
  o.require(cells == 147, "rule cells matching " + std::to_string(cells));

  const auto t1 = Type1Engine::make_default();
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const InferenceResult r = t1->infer(-1.0 + i / 50.0, -1.0 + j / 50.0);
      for (const double v : {r.d_kp, r.d_ki, r.d_kd}) {
        if (v < -0.1 || v > 0.1) {
          o.require(false, "T1 output out of range");
        }
      }
    }
  }

  const auto it2 = IntervalType2Engine::make_default(1.0, 0.0);
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double e = u(rng);
    const double de = u(rng);
    const InferenceResult a = t1->infer(e, de);
    const InferenceResult b = it2->infer(e, de);
    worst = std::max({worst, std::abs(a.d_kp - b.d_kp), std::abs(a.d_ki - b.d_ki),
        std::abs(a.d_kd - b.d_kd)});
  }
  o.require(worst <= 1e-9, "degenerate IT2 differs by " + fmt(worst));

  std::uniform_real_distribution<double> w01(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 10);
  double km = 0.0;
  for (int t = 0; t < 500; ++t) {
    const auto n = static_cast<std::size_t>(count(rng));
    std::vector<double> x(n);
    std::vector<Interval> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = u(rng);
      const double a = w01(rng);
      const double b = w01(rng);
      w[i] = {std::min(a, b), std::max(a, b)};
    }
    const Interval ref = oracle::enumerate_km(x, w);
    km = std::max({km, std::abs(km_left(x, w) - ref.lo), std::abs(km_right(x, w) - ref.hi)});
  }
  o.require(km <= 1e-6, "KM differs by " + fmt(km));
  if (o.ok) {
    o.detail = "147 cells, IT2/T1 " + fmt(worst) + ", KM " + fmt(km);
  }
  return o;
}

Outcome nmpc_solver()
{
  Outcome o;
  const ReferenceTrajectory r = standard_reference(30.0, 0.1);
  NmpcController c(OcpConfig{});
  const OcpConfig & cfg = c.config();
  RobotPose x = r.poses.front();
  double defect = 0.0;
  bool bounds = true;
  for (std::size_t k = 0; k < 300; ++k) {
    const BodyVelocity v = c.command(x, r, k);
    defect = std::max(defect, c.last_solution().defect_norm);
    for (const Input & u : c.last_solution().inputs) {
      bounds = bounds && std::abs(u.v) <= cfg.v_max && std::abs(u.omega) <= cfg.omega_max;
    }
    x = integrate_pose(x, v, r.ts);
  }
  o.require(defect <= 1e-6, "defect " + fmt(defect));
  o.require(bounds, "input bound violated");

  // Reference produced by the model from in-bound inputs.
  ReferenceTrajectory cr;
  cr.ts = 0.1;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> vv(0.2, 1.0);
  std::uniform_real_distribution<double> ww(-1.0, 1.0);
  cr.poses.push_back({0.5, 0.5, 0.3});
  for (int k = 0; k < 40; ++k) {
    const Input u{vv(rng), ww(rng)};
    cr.v_ref.push_back(u.v);
    cr.omega_ref.push_back(u.omega);
    if (k + 1 < 40) {
      cr.poses.push_back(predict(cr.poses.back(), u, cr.ts));
    }
  }
  const OcpSolution fixed = solve_ocp(
    OcpProblem::from_trajectory(cr, 5, cr.poses[5], cfg.horizon), cfg);
  o.require(fixed.cost <= 1e-8, "fixed point cost " + fmt(fixed.cost));

  OcpConfig two = cfg;
  two.horizon = 2;
  two.kkt_tol = 1e-9;
  std::uniform_real_distribution<double> pos(-0.3, 0.3);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> in(-1.0, 1.0);
  double gap = 0.0;
  for (int t = 0; t < 10; ++t) {
    OcpProblem p;
    p.initial_state = {pos(rng), pos(rng), ang(rng)};
    for (int k = 0; k <= 2; ++k) {
      p.x_ref.push_back({pos(rng), pos(rng), ang(rng)});
    }
    for (int k = 0; k < 2; ++k) {
      p.u_ref.push_back({in(rng), in(rng)});
    }
    const double best = oracle::grid_search_np2(p, two).first;
    gap = std::max(gap, std::abs(solve_ocp(p, two).cost - best));
  }
  o.require(gap <= 1e-6, "N_p=2 gap " + fmt(gap));
  if (o.ok) {
    o.detail = "defect " + fmt(defect) + ", fixed point " + fmt(fixed.cost) + ", N_p=2 gap " +
      fmt(gap);
  }
  return o;
}

std::vector<Episode> controller_episodes(double total_time, std::optional<NoiseModel> noise,
  std::uint64_t seed)
{
  const ReferenceTrajectory r = standard_reference(total_time, 0.1);
  std::vector<Episode> eps;
  for (const ControllerKind k :
    {ControllerKind::fpid_t1, ControllerKind::fpid_it2, ControllerKind::nmpc})
  {
    Episode e;
    e.trajectory = r;
    e.controller = ControllerSpec::defaults(k);
    e.noise = noise;
    e.seed = seed;
    eps.push_back(std::move(e));
  }
  return eps;
}

Outcome comparative_trend()
{
  Outcome o;
  std::array<std::array<double, 3>, 2> me{};
  const std::array<double, 2> times{20.0, 30.0};
  for (std::size_t t = 0; t < 2; ++t) {
    auto eps = controller_episodes(times[t], std::nullopt, 1);
    run_episodes(eps, true);
    for (std::size_t c = 0; c < 3; ++c) {
      me[t][c] = tracking_metrics(eps[c].log).me_xy;
    }
    o.require(me[t][2] < me[t][1], "NMPC not below IT2 at " + fmt(times[t]) + " s");
    o.require(me[t][2] < me[t][0], "NMPC not below T1 at " + fmt(times[t]) + " s");
    for (std::size_t c = 0; c < 3; ++c) {
      o.require(me[t][c] < 0.15, "me_xy above 0.15 m");
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    o.require(me[1][c] < me[0][c], "30 s not below 20 s for controller " + std::to_string(c));
  }
  std::string d = "me_xy 20 s (T1, IT2, NMPC) = " + fmt(me[0][0]) + ", " + fmt(me[0][1]) + ", " +
    fmt(me[0][2]) + "; 30 s = " + fmt(me[1][0]) + ", " + fmt(me[1][1]) + ", " + fmt(me[1][2]);
  o.detail = o.ok ? d : o.detail + " | " + d;
  return o;
}

Outcome noise_trend()
{
  Outcome o;
  constexpr int kSeeds = 20;
  std::array<double, 3> mean{};
  int nmpc_best = 0;
  std::vector<Episode> all;
  for (int s = 0; s < kSeeds; ++s) {
    auto eps = controller_episodes(30.0, NoiseModel{}, static_cast<std::uint64_t>(s + 1));
    for (auto & e : eps) {
      all.push_back(std::move(e));
    }
  }
  run_episodes(all, true);
  for (int s = 0; s < kSeeds; ++s) {
    std::array<double, 3> me{};
    for (std::size_t c = 0; c < 3; ++c) {
      me[c] = tracking_metrics(all[static_cast<std::size_t>(3 * s) + c].log).me_xy;
      mean[c] += me[c] / kSeeds;
    }
    nmpc_best += (me[2] < me[1] && me[2] < me[0]) ? 1 : 0;
  }
  o.require(mean[2] <= mean[1] && mean[1] <= mean[0], "mean ordering NMPC <= IT2 <= T1 broken");
  o.require(nmpc_best >= static_cast<int>(std::ceil(0.95 * kSeeds)),
    "NMPC strictly best on " + std::to_string(nmpc_best) + "/" + std::to_string(kSeeds));
  const std::string d = "mean me_xy (T1, IT2, NMPC) = " + fmt(mean[0]) + ", " + fmt(mean[1]) +
    ", " + fmt(mean[2]) + "; NMPC best on " + std::to_string(nmpc_best) + "/" +
    std::to_string(kSeeds);
  o.detail = o.ok ? d : o.detail + " | " + d;
  return o;
}

Outcome horizon_trend()
{
  Outcome o;
  const auto rows = horizon_sweep(standard_reference(20.0, 0.1),
      ControllerSpec::defaults(ControllerKind::nmpc), {1, 15}, {}, std::nullopt, 1, true);
  o.require(rows[0].metrics.me_xy > rows[1].metrics.me_xy, "N_p=1 not above N_p=15");
  const std::string d = "me_xy N_p=1 " + fmt(rows[0].metrics.me_xy) + ", N_p=15 " +
    fmt(rows[1].metrics.me_xy);
  o.detail = o.ok ? d : o.detail + " | " + d;
  return o;
}

Outcome step_metric_correctness()
{
  Outcome o;
  std::vector<double> t;
  std::vector<double> y;
  oracle::first_order(0.001, 10.0, t, y);
  const StepMetrics f = step_metrics(t, y, 1.0);
  const double ln9 = std::log(9.0);
  o.require(f.overshoot_pct == 0.0, "first-order overshoot " + fmt(f.overshoot_pct));
  o.require(f.rise_time && std::abs(*f.rise_time - ln9) <= 0.01 * ln9, "first-order rise");

  const oracle::DampedSeries s;
  const StepMetrics m = step_metrics(s.t, s.y, 1.0);
  o.require(std::abs(m.overshoot_pct - 20.0) <= 0.2, "damped overshoot " + fmt(m.overshoot_pct));
  o.require(m.rise_time && std::abs(*m.rise_time - s.rise_time) <= 0.01 * s.rise_time,
    "damped rise");
  o.require(m.settling_time &&
    std::abs(*m.settling_time - s.settling_time) <= 0.01 * s.settling_time, "damped settling");
  if (o.ok) {
    o.detail = "rise " + fmt(*f.rise_time) + ", damped overshoot " + fmt(m.overshoot_pct) + "%";
  }
  return o;
}

int cli(const std::string & args)
{
  const std::string cmd = std::string(OMNITRACK_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism()
{
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "omnitrack_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "exp.ini";
  std::ofstream(cfg) << "[scenario]\ntotal_time = 20\nnoise = true\nseed = 17\n"
                        "[fpid-t1]\n[fpid-it2]\n[nmpc]\n[step]\nduration = 5\n"
                        "[horizon]\nvalues = 1,15\n";
  int files = 0;
  for (const std::string cmd : {"track", "step", "horizon"}) {
    for (const std::string rep : {"a", "b"}) {
      const fs::path out = root / (cmd + "_" + rep);
      const std::string extra = rep == "b" ? " --parallel" : "";
      o.require(cli(cmd + extra + " --config " + cfg.string() + " --out " + out.string()) == 0,
        cmd + " failed");
    }
    for (const auto & e : fs::directory_iterator(root / (cmd + "_a"))) {
      if (e.path().extension() != ".csv") {
        continue;
      }
      ++files;
      const fs::path other = root / (cmd + "_b") / e.path().filename();
      o.require(slurp(e.path()) == slurp(other), e.path().filename().string() + " differs");
    }
  }
  o.require(files > 0, "no CSV written");
  if (o.ok) {
    o.detail = std::to_string(files) + " CSVs identical across sequential and parallel reruns";
  }
  return o;
}

}  // namespace

int main()
{
  struct Criterion
  {
    const char * name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
    {"1 kinematics round trip", 1.0, kinematics_roundtrip},
    {"2 A* equals Dijkstra", 5.0, astar_dijkstra},
    {"3 fuzzy engine", 10.0, fuzzy_engine},
    {"4 NMPC solver", 60.0, nmpc_solver},
    {"5 comparative trend", 120.0, comparative_trend},
    {"6 noise trend", 600.0, noise_trend},
    {"7 horizon trend", 120.0, horizon_trend},
    {"8 step metrics", 1.0, step_metric_correctness},
    {"9 determinism", 600.0, determinism},
  };
  int failed = 0;
  for (const Criterion & c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception & e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) {
      o.require(false, "runtime " + fmt(secs) + " s over " + fmt(c.limit_s) + " s");
    }
    failed += o.ok ? 0 : 1;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << c.name << "  (" << fmt(secs) << " s)  "
              << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
