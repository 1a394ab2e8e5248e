#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "omnitrack/common.hpp"
#include "omnitrack/kinematics.hpp"

namespace omnitrack
{

class NoPathError : public Error
{
public:
  using Error::Error;
};

class InvalidCellError : public Error
{
public:
  using Error::Error;
};

class TooFewPointsError : public Error
{
public:
  using Error::Error;
};

class DegenerateCurveError : public Error
{
public:
  using Error::Error;
};

/// Parse failure in a map or trajectory file.
class FormatError : public Error
{
public:
  using Error::Error;
};

struct Point2
{
  double x = 0.0;
  double y = 0.0;
};

struct Cell
{
  int col = 0;
  int row = 0;

  friend bool operator==(const Cell &, const Cell &) = default;
};

/// Binary occupancy map. Row 0 is the top row; world y decreases with row so
/// that cell (col, row) sits at origin + (col * resolution, -row * resolution).
class OccupancyGrid
{
public:
  OccupancyGrid(int width, int height, double resolution);
  OccupancyGrid(int width, int height, double resolution, Point2 origin);

  int width() const {return width_;}
  int height() const {return height_;}
  double resolution() const {return resolution_;}
  Point2 origin() const {return origin_;}

  bool in_bounds(Cell c) const
  {
    return c.col >= 0 && c.col < width_ && c.row >= 0 && c.row < height_;
  }
  bool occupied(Cell c) const {return cells_[index(c)] != 0;}
  void set_occupied(Cell c, bool value) {cells_[index(c)] = value ? 1 : 0;}

  /// Fills the inclusive rectangle [c0, c1] with obstacles.
  void fill_rect(Cell c0, Cell c1);

  Point2 cell_center(Cell c) const;

  /// Dilates obstacles by ceil(radius / resolution) cells (Euclidean disk).
  OccupancyGrid inflate(double radius) const;

private:
  std::size_t index(Cell c) const
  {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }

  int width_;
  int height_;
  double resolution_;
  Point2 origin_;
  std::vector<std::uint8_t> cells_;
};

/// 4-connected cell sequence from start to goal.
struct GridPath
{
  std::vector<Cell> cells;

  /// Number of unit moves.
  std::size_t cost() const {return cells.empty() ? 0 : cells.size() - 1;}
};

struct AStarStats
{
  std::size_t expansions = 0;
};

/// A* on a 4-connected unit-cost grid with the Manhattan heuristic. Ties on f
/// are broken by lower h, then insertion order.
GridPath astar(
  const OccupancyGrid & grid, Cell start, Cell goal, AStarStats * stats = nullptr);

/// Clamped uniform cubic B-spline. The parameter runs over [0, control_points - 3].
class SmoothPath
{
public:
  static constexpr int kDegree = 3;

  explicit SmoothPath(std::vector<Point2> control_points);

  const std::vector<Point2> & control_points() const {return control_points_;}
  const std::vector<double> & knots() const {return knots_;}
  int degree() const {return kDegree;}
  double u_max() const {return knots_.back();}

  Point2 evaluate(double u) const;
  /// order in {0, 1, 2, 3}.
  Point2 derivative(double u, int order) const;

  /// Arc length over [u0, u1] by adaptive Gauss-Legendre quadrature.
  double arc_length(double u0, double u1) const;
  double total_length() const;
  /// Parameter at arc length s from the start (bisection inversion).
  double parameter_at_length(double s) const;

private:
  int find_span(double u) const;

  std::vector<Point2> control_points_;
  std::vector<double> knots_;
  // Derivative curves of order 1..3.
  std::array<std::vector<Point2>, 3> deriv_ctrl_;
  std::array<std::vector<double>, 3> deriv_knots_;
  std::vector<double> span_lengths_;  // cumulative length at each integer knot
};

/// Builds a clamped cubic B-spline through the world coordinates of the path
/// cells. Short paths are padded by repeating endpoints up to four points.
SmoothPath smooth(const GridPath & path, const OccupancyGrid & grid);

struct ReferenceTrajectory
{
  double ts = 0.1;
  std::vector<RobotPose> poses;
  std::vector<double> v_ref;
  std::vector<double> omega_ref;

  std::size_t size() const {return poses.size();}
};

/// Number of samples floor(T / ts) + 1, tolerant to floating round-off.
std::size_t sample_count(double total_time, double ts);

/// Samples the curve uniformly in arc length and derives heading, speed and
/// yaw-rate references from consecutive waypoints.
ReferenceTrajectory sample_reference(const SmoothPath & curve, double total_time, double ts);

/// Fills heading/speed/yaw-rate references from the x/y of `poses`.
void derive_reference_rates(ReferenceTrajectory & traj);

/// A constant set-point reference of `count` samples.
ReferenceTrajectory constant_reference(const RobotPose & target, std::size_t count, double ts);

/// "width height resolution" followed by `height` rows of '0'/'1'.
OccupancyGrid read_grid_map(std::istream & in);
OccupancyGrid load_grid_map(const std::string & path);
void write_grid_map(std::ostream & out, const OccupancyGrid & grid);

/// Header "n,t,x_ref,y_ref,theta_ref,v_ref,omega_ref".
void write_reference_csv(std::ostream & out, const ReferenceTrajectory & traj);

}  // namespace omnitrack
