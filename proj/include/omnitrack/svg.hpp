#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "omnitrack/planning.hpp"

namespace omnitrack::svg
{

struct Series
{
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Chart
{
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Same scale on both axes (XY trajectory plots).
  bool equal_aspect = false;
};

void write_line_chart(std::ostream & out, const Chart & chart);

struct BarGroup
{
  std::string label;
  std::vector<double> values;
};

/// Grouped bars; `series_names` labels the entries of each group's values.
void write_bar_chart(
  std::ostream & out, const std::string & title, const std::vector<std::string> & series_names,
  const std::vector<BarGroup> & groups);

/// Occupancy grid with the raw cell path and the smoothed curve on top.
void write_plan_overlay(
  std::ostream & out, const OccupancyGrid & grid, const GridPath & raw,
  const std::vector<Point2> & smooth);

/// Writes to a file; throws Error on I/O failure.
void save(const std::string & path, const std::string & content);

}  // namespace omnitrack::svg
