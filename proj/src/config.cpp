#include "omnitrack/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace omnitrack
{

namespace pt = boost::property_tree;

namespace
{

template<typename T>
T get_or(const pt::ptree & tree, const std::string & key, T fallback)
{
  try {
    const auto child = tree.get_child_optional(pt::ptree::path_type(key, '/'));
    return child ? child->get_value<T>() : fallback;
  } catch (const pt::ptree_error & e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

bool parse_bool(const std::string & s)
{
  if (s == "true" || s == "1" || s == "yes" || s == "on") {
    return true;
  }
  if (s == "false" || s == "0" || s == "no" || s == "off") {
    return false;
  }
  throw ConfigError("expected a boolean, got '" + s + "'");
}

std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

void read_loop(const pt::ptree & sec, const std::string & prefix, FpidLoopConfig & loop)
{
  loop.initial.kp = get_or(sec, prefix + "_kp", loop.initial.kp);
  loop.initial.ki = get_or(sec, prefix + "_ki", loop.initial.ki);
  loop.initial.kd = get_or(sec, prefix + "_kd", loop.initial.kd);
  loop.norm_scale = get_or(sec, prefix + "_norm_scale", loop.norm_scale);
  loop.de_scale = get_or(sec, prefix + "_de_scale", loop.de_scale);
}

ControllerSpec read_controller(const pt::ptree & sec, ControllerKind kind)
{
  ControllerSpec s = ControllerSpec::defaults(kind);
  if (kind == ControllerKind::nmpc) {
    OcpConfig & c = s.nmpc;
    c.horizon = get_or(sec, "horizon", c.horizon);
    c.q[0] = get_or(sec, "q_x", c.q[0]);
    c.q[1] = get_or(sec, "q_y", c.q[1]);
    c.q[2] = get_or(sec, "q_theta", c.q[2]);
    c.r[0] = get_or(sec, "r_v", c.r[0]);
    c.r[1] = get_or(sec, "r_omega", c.r[1]);
    c.v_max = get_or(sec, "v_max", c.v_max);
    c.omega_max = get_or(sec, "omega_max", c.omega_max);
    c.kkt_tol = get_or(sec, "kkt_tol", c.kkt_tol);
    c.defect_tol = get_or(sec, "defect_tol", c.defect_tol);
    c.max_iterations = get_or(sec, "max_iterations", c.max_iterations);
    return s;
  }
  FpidConfig & f = s.fpid;
  read_loop(sec, "distance", f.distance);
  read_loop(sec, "heading", f.heading);
  const double k_max = get_or(sec, "k_max", f.distance.k_max);
  const double i_max = get_or(sec, "i_max", f.distance.i_max);
  f.distance.k_max = f.heading.k_max = k_max;
  f.distance.i_max = f.heading.i_max = i_max;
  f.threshold = get_or(sec, "threshold", f.threshold);
  f.v_max = get_or(sec, "v_max", f.v_max);
  f.omega_max = get_or(sec, "omega_max", f.omega_max);
  f.frame = parse_command_frame(get_or<std::string>(sec, "frame", "body"));
  const std::string engine = get_or<std::string>(
    sec, "engine", kind == ControllerKind::fpid_t1 ? "t1" : "it2");
  if (engine == "t1") {
    s.kind = ControllerKind::fpid_t1;
  } else if (engine == "it2") {
    s.kind = ControllerKind::fpid_it2;
  } else {
    throw ConfigError("engine must be t1 or it2, got '" + engine + "'");
  }
  if (s.kind != kind) {
    throw ConfigError("section [" + std::string(to_string(kind)) + "] sets engine=" + engine);
  }
  s.fou.height_scale = get_or(sec, "height_scale", s.fou.height_scale);
  s.fou.lag = get_or(sec, "lag", s.fou.lag);
  s.fou.reduction = parse_type_reduction(
    get_or<std::string>(sec, "type_reduction", std::string(to_string(s.fou.reduction))));
  return s;
}

}  // namespace

std::vector<int> parse_int_list(const std::string & text)
{
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      continue;
    }
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception &) {
      throw ConfigError("not an integer: '" + item + "'");
    }
    if (used != item.size()) {
      throw ConfigError("not an integer: '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

void ExperimentConfig::validate() const
{
  if (!(ts > 0.0) || !(total_time > ts)) {
    throw ConfigError("need total_time > ts > 0");
  }
  if (controllers.empty()) {
    throw ConfigError("no controller configured");
  }
  geometry.validate();
  for (const ControllerSpec & c : controllers) {
    if (c.kind == ControllerKind::nmpc) {
      c.nmpc.validate();
    } else {
      c.fpid.validate();
    }
  }
  for (const int h : horizons) {
    if (h < 1) {
      throw ConfigError("prediction horizon values must be >= 1");
    }
  }
  if (!(step_duration > 0.0)) {
    throw ConfigError("step duration must be > 0");
  }
}

const ControllerSpec * ExperimentConfig::find(ControllerKind kind) const
{
  for (const ControllerSpec & c : controllers) {
    if (c.kind == kind) {
      return &c;
    }
  }
  return nullptr;
}

ExperimentConfig parse_experiment_config(std::istream & in, const std::string & base_dir)
{
  const std::string text(std::istreambuf_iterator<char>(in), {});
  pt::ptree tree;
  try {
    std::istringstream src(text);
    pt::read_ini(src, tree);
  } catch (const pt::ptree_error & e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  // read_ini drops sections without keys; a bare header still enables a controller.
  {
    std::istringstream src(text);
    std::string line;
    while (std::getline(src, line)) {
      line = trim(line);
      if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
        const std::string name = trim(line.substr(1, line.size() - 2));
        if (tree.count(name) == 0) {
          tree.add_child(pt::ptree::path_type(name, '/'), pt::ptree{});
        }
      }
    }
  }
  ExperimentConfig cfg;
  const pt::ptree empty;
  const pt::ptree & sc = tree.get_child("scenario", empty);
  cfg.name = get_or<std::string>(sc, "name", cfg.name);
  const std::string map = get_or<std::string>(sc, "map", "");
  if (!map.empty()) {
    const std::filesystem::path p(map);
    cfg.map_path = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
    if (!std::filesystem::exists(cfg.map_path)) {
      throw ConfigError("map file does not exist: " + cfg.map_path);
    }
  }
  cfg.start.col = get_or(sc, "start_col", cfg.start.col);
  cfg.start.row = get_or(sc, "start_row", cfg.start.row);
  cfg.goal.col = get_or(sc, "goal_col", cfg.goal.col);
  cfg.goal.row = get_or(sc, "goal_row", cfg.goal.row);
  cfg.total_time = get_or(sc, "total_time", cfg.total_time);
  cfg.ts = get_or(sc, "ts", cfg.ts);
  cfg.noise = parse_bool(get_or<std::string>(sc, "noise", "false"));
  cfg.seed = get_or<std::uint64_t>(sc, "seed", cfg.seed);
  cfg.out_dir = get_or<std::string>(sc, "out", cfg.out_dir);

  const pt::ptree & geo = tree.get_child("geometry", empty);
  cfg.geometry.body_radius = get_or(geo, "body_radius", cfg.geometry.body_radius);
  cfg.geometry.wheel_radius = get_or(geo, "wheel_radius", cfg.geometry.wheel_radius);

  const pt::ptree & nz = tree.get_child("noise", empty);
  cfg.noise_model.amplitude_divisor =
    get_or(nz, "amplitude_divisor", cfg.noise_model.amplitude_divisor);
  cfg.noise_model.time_scale = get_or(nz, "time_scale", cfg.noise_model.time_scale);

  std::vector<ControllerKind> wanted;
  const std::string listed = trim(get_or<std::string>(sc, "controllers", ""));
  if (listed.empty()) {
    for (const auto k : {ControllerKind::fpid_t1, ControllerKind::fpid_it2,
        ControllerKind::nmpc})
    {
      if (tree.count(std::string(to_string(k))) > 0) {
        wanted.push_back(k);
      }
    }
  } else {
    std::stringstream ss(listed);
    std::string id;
    while (std::getline(ss, id, ',')) {
      if (!trim(id).empty()) {
        wanted.push_back(parse_controller_kind(trim(id)));
      }
    }
  }
  for (const ControllerKind k : wanted) {
    const auto sec = tree.get_child_optional(std::string(to_string(k)));
    if (!sec) {
      throw ConfigError("missing controller section [" + std::string(to_string(k)) + "]");
    }
    cfg.controllers.push_back(read_controller(*sec, k));
  }

  const pt::ptree & hz = tree.get_child("horizon", empty);
  if (const auto v = hz.get_optional<std::string>("values")) {
    cfg.horizons = parse_int_list(*v);
  }
  const pt::ptree & st = tree.get_child("step", empty);
  cfg.step_duration = get_or(st, "duration", cfg.step_duration);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path);
  }
  return parse_experiment_config(in, std::filesystem::path(path).parent_path().string());
}

void write_experiment_config(std::ostream & out, const ExperimentConfig & cfg)
{
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "[scenario]\n"
      << "name = " << cfg.name << '\n';
  if (!cfg.map_path.empty()) {
    out << "map = " << std::filesystem::absolute(cfg.map_path).string() << '\n';
  }
  out << "start_col = " << cfg.start.col << "\nstart_row = " << cfg.start.row << '\n'
      << "goal_col = " << cfg.goal.col << "\ngoal_row = " << cfg.goal.row << '\n'
      << "total_time = " << cfg.total_time << "\nts = " << cfg.ts << '\n'
      << "noise = " << (cfg.noise ? "true" : "false") << "\nseed = " << cfg.seed << '\n'
      << "out = " << cfg.out_dir << '\n'
      << "controllers = ";
  for (std::size_t i = 0; i < cfg.controllers.size(); ++i) {
    out << (i ? "," : "") << to_string(cfg.controllers[i].kind);
  }
  out << "\n\n[geometry]\nbody_radius = " << cfg.geometry.body_radius
      << "\nwheel_radius = " << cfg.geometry.wheel_radius << "\n\n"
      << "[noise]\namplitude_divisor = " << cfg.noise_model.amplitude_divisor
      << "\ntime_scale = " << cfg.noise_model.time_scale << "\n";

  for (const ControllerSpec & c : cfg.controllers) {
    out << "\n[" << to_string(c.kind) << "]\n";
    if (c.kind == ControllerKind::nmpc) {
      const OcpConfig & n = c.nmpc;
      out << "horizon = " << n.horizon << "\nq_x = " << n.q[0] << "\nq_y = " << n.q[1]
          << "\nq_theta = " << n.q[2] << "\nr_v = " << n.r[0] << "\nr_omega = " << n.r[1]
          << "\nv_max = " << n.v_max << "\nomega_max = " << n.omega_max
          << "\nkkt_tol = " << n.kkt_tol << "\ndefect_tol = " << n.defect_tol
          << "\nmax_iterations = " << n.max_iterations << '\n';
      continue;
    }
    const FpidConfig & f = c.fpid;
    out << "engine = " << (c.kind == ControllerKind::fpid_t1 ? "t1" : "it2") << '\n';
    for (const auto & [name, loop] :
      {std::pair<const char *, const FpidLoopConfig &>{"distance", f.distance},
        std::pair<const char *, const FpidLoopConfig &>{"heading", f.heading}})
    {
      out << name << "_kp = " << loop.initial.kp << '\n' << name << "_ki = " << loop.initial.ki
          << '\n' << name << "_kd = " << loop.initial.kd << '\n' << name << "_norm_scale = "
          << loop.norm_scale << '\n' << name << "_de_scale = " << loop.de_scale << '\n';
    }
    out << "k_max = " << f.distance.k_max << "\ni_max = " << f.distance.i_max
        << "\nthreshold = " << f.threshold << "\nv_max = " << f.v_max
        << "\nomega_max = " << f.omega_max << "\nframe = " << to_string(f.frame) << '\n';
    if (c.kind == ControllerKind::fpid_it2) {
      out << "height_scale = " << c.fou.height_scale << "\nlag = " << c.fou.lag
          << "\ntype_reduction = " << to_string(c.fou.reduction) << '\n';
    }
  }
  out << "\n[horizon]\nvalues = ";
  for (std::size_t i = 0; i < cfg.horizons.size(); ++i) {
    out << (i ? "," : "") << cfg.horizons[i];
  }
  out << "\n\n[step]\nduration = " << cfg.step_duration << '\n';
  out.precision(old);
}

ExperimentConfig default_experiment_config()
{
  ExperimentConfig cfg;
  for (const auto k : {ControllerKind::fpid_t1, ControllerKind::fpid_it2,
      ControllerKind::nmpc})
  {
    cfg.controllers.push_back(ControllerSpec::defaults(k));
  }
  return cfg;
}

}  // namespace omnitrack
