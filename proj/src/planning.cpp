#include "omnitrack/planning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>

namespace omnitrack
{

OccupancyGrid::OccupancyGrid(int width, int height, double resolution)
: OccupancyGrid(width, height, resolution,
    Point2{0.0, static_cast<double>(height - 1) * resolution})
{
}

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Point2 origin)
: width_(width), height_(height), resolution_(resolution), origin_(origin)
{
  if (width < 1 || height < 1) {
    throw ConfigError("grid dimensions must be >= 1");
  }
  if (!(resolution > 0.0)) {
    throw ConfigError("grid resolution must be > 0");
  }
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

void OccupancyGrid::fill_rect(Cell c0, Cell c1)
{
  for (int r = std::min(c0.row, c1.row); r <= std::max(c0.row, c1.row); ++r) {
    for (int c = std::min(c0.col, c1.col); c <= std::max(c0.col, c1.col); ++c) {
      if (in_bounds({c, r})) {
        set_occupied({c, r}, true);
      }
    }
  }
}

Point2 OccupancyGrid::cell_center(Cell c) const
{
  return Point2{origin_.x + c.col * resolution_, origin_.y - c.row * resolution_};
}

OccupancyGrid OccupancyGrid::inflate(double radius) const
{
  OccupancyGrid out = *this;
  const int k = static_cast<int>(std::ceil(radius / resolution_));
  if (k <= 0) {
    return out;
  }
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (!occupied({c, r})) {
        continue;
      }
      for (int dr = -k; dr <= k; ++dr) {
        for (int dc = -k; dc <= k; ++dc) {
          const Cell n{c + dc, r + dr};
          if (dr * dr + dc * dc <= k * k && in_bounds(n)) {
            out.set_occupied(n, true);
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// A*

GridPath astar(const OccupancyGrid & grid, Cell start, Cell goal, AStarStats * stats)
{
  for (const Cell c : {start, goal}) {
    if (!grid.in_bounds(c)) {
      throw InvalidCellError(
              "cell (" + std::to_string(c.col) + "," + std::to_string(c.row) + ") out of bounds");
    }
    if (grid.occupied(c)) {
      throw InvalidCellError(
              "cell (" + std::to_string(c.col) + "," + std::to_string(c.row) + ") is occupied");
    }
  }

  const auto w = static_cast<std::size_t>(grid.width());
  const std::size_t n = w * static_cast<std::size_t>(grid.height());
  auto idx = [w](Cell c) {
      return static_cast<std::size_t>(c.row) * w + static_cast<std::size_t>(c.col);
    };
  auto heuristic = [goal](Cell c) {
      return std::abs(c.col - goal.col) + std::abs(c.row - goal.row);
    };

  constexpr int kUnvisited = std::numeric_limits<int>::max();
  std::vector<int> g(n, kUnvisited);
  std::vector<std::size_t> parent(n, n);
  std::vector<bool> closed(n, false);

  // (f, h, sequence, cell index); lexicographic min-heap.
  using Entry = std::tuple<int, int, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t seq = 0;

  g[idx(start)] = 0;
  open.emplace(heuristic(start), heuristic(start), seq++, idx(start));

  constexpr std::array<std::array<int, 2>, 4> kMoves{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  std::size_t expansions = 0;
  bool found = false;

  while (!open.empty()) {
    const auto [f, h, s, ci] = open.top();
    open.pop();
    if (closed[ci]) {
      continue;
    }
    closed[ci] = true;
    ++expansions;
    if (ci == idx(goal)) {
      found = true;
      break;
    }
    const Cell c{static_cast<int>(ci % w), static_cast<int>(ci / w)};
    for (const auto & m : kMoves) {
      const Cell nb{c.col + m[0], c.row + m[1]};
      if (!grid.in_bounds(nb) || grid.occupied(nb)) {
        continue;
      }
      const std::size_t ni = idx(nb);
      const int ng = g[ci] + 1;
      if (closed[ni] || ng >= g[ni]) {
        continue;
      }
      g[ni] = ng;
      parent[ni] = ci;
      const int nh = heuristic(nb);
      open.emplace(ng + nh, nh, seq++, ni);
    }
  }

  if (stats != nullptr) {
    stats->expansions = expansions;
  }
  if (!found) {
    throw NoPathError("no path found");
  }

  GridPath path;
  for (std::size_t ci = idx(goal); ci != n; ci = parent[ci]) {
    path.cells.push_back(Cell{static_cast<int>(ci % w), static_cast<int>(ci / w)});
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

// ---------------------------------------------------------------------------
// B-spline

namespace
{

int find_span(const std::vector<double> & knots, std::size_t n_ctrl, int degree, double u)
{
  const auto p = static_cast<std::size_t>(degree);
  if (u >= knots[n_ctrl]) {
    return static_cast<int>(n_ctrl) - 1;
  }
  if (u <= knots[p]) {
    return degree;
  }
  const auto it = std::upper_bound(
    knots.begin() + static_cast<std::ptrdiff_t>(p),
    knots.begin() + static_cast<std::ptrdiff_t>(n_ctrl) + 1, u);
  return static_cast<int>(it - knots.begin()) - 1;
}

Point2 de_boor(
  const std::vector<Point2> & ctrl, const std::vector<double> & knots, int degree, double u)
{
  const int k = find_span(knots, ctrl.size(), degree, u);
  std::array<Point2, 4> d{};
  for (int j = 0; j <= degree; ++j) {
    d[static_cast<std::size_t>(j)] = ctrl[static_cast<std::size_t>(j + k - degree)];
  }
  for (int r = 1; r <= degree; ++r) {
    for (int j = degree; j >= r; --j) {
      const double t0 = knots[static_cast<std::size_t>(j + k - degree)];
      const double t1 = knots[static_cast<std::size_t>(j + 1 + k - r)];
      const double alpha = (u - t0) / (t1 - t0);
      auto & dj = d[static_cast<std::size_t>(j)];
      const auto & dp = d[static_cast<std::size_t>(j - 1)];
      dj.x = (1.0 - alpha) * dp.x + alpha * dj.x;
      dj.y = (1.0 - alpha) * dp.y + alpha * dj.y;
    }
  }
  return d[static_cast<std::size_t>(degree)];
}

// Control points and knots of the derivative curve (degree - 1).
void differentiate(
  const std::vector<Point2> & ctrl, const std::vector<double> & knots, int degree,
  std::vector<Point2> & d_ctrl, std::vector<double> & d_knots)
{
  d_ctrl.clear();
  for (std::size_t i = 0; i + 1 < ctrl.size(); ++i) {
    const double span = knots[i + static_cast<std::size_t>(degree) + 1] - knots[i + 1];
    const double s = span > 0.0 ? degree / span : 0.0;
    d_ctrl.push_back({s * (ctrl[i + 1].x - ctrl[i].x), s * (ctrl[i + 1].y - ctrl[i].y)});
  }
  d_knots.assign(knots.begin() + 1, knots.end() - 1);
}

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGlNodes{
  -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{
  0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
  0.2369268850561891};

constexpr double kQuadTol = 1e-10;

}  // namespace

SmoothPath::SmoothPath(std::vector<Point2> control_points)
: control_points_(std::move(control_points))
{
  if (control_points_.size() < 4) {
    throw TooFewPointsError("a cubic B-spline needs at least 4 control points");
  }
  const std::size_t n = control_points_.size();
  const auto spans = static_cast<double>(n - 3);
  knots_.reserve(n + 4);
  for (int i = 0; i < 4; ++i) {
    knots_.push_back(0.0);
  }
  for (std::size_t i = 1; i + 3 < n; ++i) {
    knots_.push_back(static_cast<double>(i));
  }
  for (int i = 0; i < 4; ++i) {
    knots_.push_back(spans);
  }

  const std::vector<Point2> * ctrl = &control_points_;
  const std::vector<double> * knots = &knots_;
  for (int k = 0; k < kDegree; ++k) {
    const auto ki = static_cast<std::size_t>(k);
    differentiate(*ctrl, *knots, kDegree - k, deriv_ctrl_[ki], deriv_knots_[ki]);
    ctrl = &deriv_ctrl_[ki];
    knots = &deriv_knots_[ki];
  }

  span_lengths_.assign(1, 0.0);
  for (std::size_t j = 0; j + 3 < n; ++j) {
    const auto a = static_cast<double>(j);
    span_lengths_.push_back(span_lengths_.back() + arc_length(a, a + 1.0));
  }
}

int SmoothPath::find_span(double u) const
{
  return omnitrack::find_span(knots_, control_points_.size(), kDegree, u);
}

Point2 SmoothPath::evaluate(double u) const
{
  return de_boor(control_points_, knots_, kDegree, std::clamp(u, 0.0, u_max()));
}

Point2 SmoothPath::derivative(double u, int order) const
{
  if (order < 0 || order > kDegree) {
    throw ConfigError("derivative order must be in [0, 3]");
  }
  const double uc = std::clamp(u, 0.0, u_max());
  if (order == 0) {
    return de_boor(control_points_, knots_, kDegree, uc);
  }
  const auto k = static_cast<std::size_t>(order - 1);
  return de_boor(deriv_ctrl_[k], deriv_knots_[k], kDegree - order, uc);
}

double SmoothPath::arc_length(double u0, double u1) const
{
  auto speed = [this](double u) {
      const Point2 d = derivative(u, 1);
      return std::hypot(d.x, d.y);
    };
  auto panel = [&speed](double a, double b) {
      const double half = 0.5 * (b - a);
      const double mid = 0.5 * (a + b);
      double sum = 0.0;
      for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
        sum += kGlWeights[i] * speed(mid + half * kGlNodes[i]);
      }
      return half * sum;
    };
  auto adapt = [&panel](auto & self, double a, double b, double whole, double tol, int depth)
    -> double {
      const double m = 0.5 * (a + b);
      const double left = panel(a, m);
      const double right = panel(m, b);
      if (depth >= 30 || std::abs(left + right - whole) <= tol) {
        return left + right;
      }
      return self(self, a, m, left, 0.5 * tol, depth + 1) +
             self(self, m, b, right, 0.5 * tol, depth + 1);
    };

  if (u1 < u0) {
    return -arc_length(u1, u0);
  }
  double total = 0.0;
  // Integrate span by span: the speed is only smooth inside a knot span.
  double a = u0;
  while (a < u1) {
    const double b = std::min(u1, std::floor(a) + 1.0);
    total += adapt(adapt, a, b, panel(a, b), kQuadTol, 0);
    a = b;
  }
  return total;
}

double SmoothPath::total_length() const
{
  return span_lengths_.back();
}

double SmoothPath::parameter_at_length(double s) const
{
  const double total = total_length();
  if (s <= 0.0) {
    return 0.0;
  }
  if (s >= total) {
    return u_max();
  }
  const auto it = std::upper_bound(span_lengths_.begin(), span_lengths_.end(), s);
  const auto j = static_cast<std::size_t>(it - span_lengths_.begin()) - 1;
  double lo = static_cast<double>(j);
  double hi = std::min(lo + 1.0, u_max());
  const double base = span_lengths_[j];
  const double start = lo;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (base + arc_length(start, mid) < s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SmoothPath smooth(const GridPath & path, const OccupancyGrid & grid)
{
  if (path.cells.empty()) {
    throw TooFewPointsError("cannot smooth an empty path");
  }
  std::vector<Point2> pts;
  pts.reserve(std::max<std::size_t>(path.cells.size(), 4));
  for (const Cell c : path.cells) {
    pts.push_back(grid.cell_center(c));
  }
  bool front = false;
  while (pts.size() < 4) {
    if (front) {
      pts.insert(pts.begin(), pts.front());
    } else {
      pts.push_back(pts.back());
    }
    front = !front;
  }
  return SmoothPath(std::move(pts));
}

// ---------------------------------------------------------------------------
// Reference trajectory

std::size_t sample_count(double total_time, double ts)
{
  return static_cast<std::size_t>(std::floor(total_time / ts + 1e-9)) + 1;
}

void derive_reference_rates(ReferenceTrajectory & traj)
{
  const std::size_t n = traj.poses.size();
  if (n < 2) {
    throw ConfigError("a reference trajectory needs at least 2 samples");
  }
  traj.v_ref.assign(n, 0.0);
  traj.omega_ref.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double dx = traj.poses[i].x - traj.poses[i - 1].x;
    const double dy = traj.poses[i].y - traj.poses[i - 1].y;
    traj.poses[i].theta = wrap_angle(std::atan2(dy, dx));
    traj.v_ref[i] = std::hypot(dx, dy) / traj.ts;
  }
  traj.poses[0].theta = traj.poses[1].theta;
  traj.v_ref[0] = traj.v_ref[1];
  for (std::size_t i = 1; i < n; ++i) {
    traj.omega_ref[i] = wrap_angle(traj.poses[i].theta - traj.poses[i - 1].theta) / traj.ts;
  }
}

ReferenceTrajectory sample_reference(const SmoothPath & curve, double total_time, double ts)
{
  if (!(ts > 0.0) || !(total_time > ts)) {
    throw ConfigError("sample_reference requires T > ts > 0");
  }
  const double length = curve.total_length();
  if (length < 1e-9) {
    throw DegenerateCurveError("curve has zero arc length");
  }
  const std::size_t n = sample_count(total_time, ts);
  ReferenceTrajectory traj;
  traj.ts = ts;
  traj.poses.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = length * static_cast<double>(i) / static_cast<double>(n - 1);
    const Point2 p = curve.evaluate(curve.parameter_at_length(s));
    traj.poses[i] = RobotPose{p.x, p.y, 0.0};
  }
  derive_reference_rates(traj);
  return traj;
}

ReferenceTrajectory constant_reference(const RobotPose & target, std::size_t count, double ts)
{
  ReferenceTrajectory traj;
  traj.ts = ts;
  traj.poses.assign(count, RobotPose{target.x, target.y, wrap_angle(target.theta)});
  traj.v_ref.assign(count, 0.0);
  traj.omega_ref.assign(count, 0.0);
  return traj;
}

// ---------------------------------------------------------------------------
// File formats

OccupancyGrid read_grid_map(std::istream & in)
{
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("map file is empty");
  }
  std::istringstream header(line);
  int width = 0;
  int height = 0;
  double resolution = 0.0;
  if (!(header >> width >> height >> resolution)) {
    throw FormatError("map header must be 'width height resolution'");
  }
  if (width < 1 || height < 1 || !(resolution > 0.0)) {
    throw FormatError("map header has invalid dimensions or resolution");
  }
  OccupancyGrid grid(width, height, resolution);
  for (int r = 0; r < height; ++r) {
    if (!std::getline(in, line)) {
      throw FormatError("map has fewer than " + std::to_string(height) + " rows");
    }
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (static_cast<int>(line.size()) != width) {
      throw FormatError("map row " + std::to_string(r) + " has wrong width");
    }
    for (int c = 0; c < width; ++c) {
      const char ch = line[static_cast<std::size_t>(c)];
      if (ch != '0' && ch != '1') {
        throw FormatError("map row " + std::to_string(r) + " has a character other than 0/1");
      }
      grid.set_occupied({c, r}, ch == '1');
    }
  }
  return grid;
}

OccupancyGrid load_grid_map(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open map file " + path);
  }
  return read_grid_map(in);
}

void write_grid_map(std::ostream & out, const OccupancyGrid & grid)
{
  out << grid.width() << ' ' << grid.height() << ' ' << grid.resolution() << '\n';
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      out << (grid.occupied({c, r}) ? '1' : '0');
    }
    out << '\n';
  }
}

void write_reference_csv(std::ostream & out, const ReferenceTrajectory & traj)
{
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "n,t,x_ref,y_ref,theta_ref,v_ref,omega_ref\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const RobotPose & p = traj.poses[i];
    out << i << ',' << static_cast<double>(i) * traj.ts << ',' << p.x << ',' << p.y << ','
        << p.theta << ',' << traj.v_ref[i] << ',' << traj.omega_ref[i] << '\n';
  }
  out.precision(old);
}

}  // namespace omnitrack
