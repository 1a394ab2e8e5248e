#include "omnitrack/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace omnitrack::svg
{

namespace
{

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 150.0;
constexpr double kMarginT = 40.0;
constexpr double kMarginB = 50.0;

constexpr const char * kPalette[] = {
  "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

const char * color(std::size_t i)
{
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

std::string escape(const std::string & s)
{
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v)
  {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }

  void finish()
  {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

double nice_step(double span)
{
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

void header(std::ostream & out, const std::string & title)
{
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
}

void axes(
  std::ostream & out, const Range & xr, const Range & yr, double pw, double ph,
  const std::string & xl, const std::string & yl)
{
  const auto px = [&](double x) {return kMarginL + (x - xr.lo) / (xr.hi - xr.lo) * pw;};
  const auto py = [&](double y) {return kMarginT + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph;};
  out << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double xs = nice_step(xr.hi - xr.lo);
  for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi; v += xs) {
    out << "<line x1=\"" << px(v) << "\" y1=\"" << kMarginT << "\" x2=\"" << px(v)
        << "\" y2=\"" << kMarginT + ph << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << px(v) << "\" y=\"" << kMarginT + ph + 16
        << "\" text-anchor=\"middle\">" << (std::abs(v) < 1e-12 ? 0.0 : v) << "</text>\n";
  }
  const double ys = nice_step(yr.hi - yr.lo);
  for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi; v += ys) {
    out << "<line x1=\"" << kMarginL << "\" y1=\"" << py(v) << "\" x2=\"" << kMarginL + pw
        << "\" y2=\"" << py(v) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << kMarginL - 6 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\">" << (std::abs(v) < 1e-12 ? 0.0 : v) << "</text>\n";
  }
  out << "<text x=\"" << kMarginL + pw / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n"
      << "<text transform=\"translate(18," << kMarginT + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(yl) << "</text>\n";
}

void legend(std::ostream & out, const std::vector<std::string> & names, double x0)
{
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kMarginT + 10 + 18.0 * static_cast<double>(i);
    out << "<rect x=\"" << x0 << "\" y=\"" << y - 8 << "\" width=\"14\" height=\"10\" fill=\""
        << color(i) << "\"/>\n<text x=\"" << x0 + 20 << "\" y=\"" << y + 1 << "\">"
        << escape(names[i]) << "</text>\n";
  }
}

}  // namespace

void write_line_chart(std::ostream & out, const Chart & chart)
{
  Range xr;
  Range yr;
  for (const Series & s : chart.series) {
    for (const double v : s.x) {
      xr.add(v);
    }
    for (const double v : s.y) {
      yr.add(v);
    }
  }
  xr.finish();
  yr.finish();
  double pw = kWidth - kMarginL - kMarginR;
  double ph = kHeight - kMarginT - kMarginB;
  if (chart.equal_aspect) {
    const double scale = std::min(pw / (xr.hi - xr.lo), ph / (yr.hi - yr.lo));
    pw = scale * (xr.hi - xr.lo);
    ph = scale * (yr.hi - yr.lo);
  }
  const auto old = out.precision(6);
  header(out, chart.title);
  axes(out, xr, yr, pw, ph, chart.x_label, chart.y_label);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const Series & s = chart.series[i];
    names.push_back(s.name);
    out << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) {
        continue;
      }
      out << kMarginL + (s.x[k] - xr.lo) / (xr.hi - xr.lo) * pw << ','
          << kMarginT + ph - (s.y[k] - yr.lo) / (yr.hi - yr.lo) * ph << ' ';
    }
    out << "\"/>\n";
  }
  legend(out, names, kMarginL + pw + 16);
  out << "</svg>\n";
  out.precision(old);
}

void write_bar_chart(
  std::ostream & out, const std::string & title, const std::vector<std::string> & series_names,
  const std::vector<BarGroup> & groups)
{
  Range yr;
  yr.add(0.0);
  for (const BarGroup & g : groups) {
    for (const double v : g.values) {
      yr.add(v);
    }
  }
  yr.finish();
  yr.lo = std::min(0.0, yr.lo);
  const double pw = kWidth - kMarginL - kMarginR;
  const double ph = kHeight - kMarginT - kMarginB;
  const auto py = [&](double y) {return kMarginT + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph;};
  const auto old = out.precision(6);
  header(out, title);
  out << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double ys = nice_step(yr.hi - yr.lo);
  for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi; v += ys) {
    out << "<line x1=\"" << kMarginL << "\" y1=\"" << py(v) << "\" x2=\"" << kMarginL + pw
        << "\" y2=\"" << py(v) << "\" stroke=\"#ddd\"/>\n<text x=\"" << kMarginL - 6
        << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
  }
  const double gw = groups.empty() ? pw : pw / static_cast<double>(groups.size());
  const double bw = 0.8 * gw / static_cast<double>(std::max<std::size_t>(1, series_names.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double x0 = kMarginL + gw * static_cast<double>(g) + 0.1 * gw;
    for (std::size_t i = 0; i < groups[g].values.size(); ++i) {
      const double v = groups[g].values[i];
      const double top = py(std::max(v, 0.0));
      const double bottom = py(std::min(v, 0.0));
      out << "<rect x=\"" << x0 + bw * static_cast<double>(i) << "\" y=\"" << top
          << "\" width=\"" << bw << "\" height=\"" << bottom - top << "\" fill=\"" << color(i)
          << "\"/>\n";
    }
    out << "<text x=\"" << x0 + 0.4 * gw << "\" y=\"" << kMarginT + ph + 16
        << "\" text-anchor=\"middle\">" << escape(groups[g].label) << "</text>\n";
  }
  legend(out, series_names, kMarginL + pw + 16);
  out << "</svg>\n";
  out.precision(old);
}

void write_plan_overlay(
  std::ostream & out, const OccupancyGrid & grid, const GridPath & raw,
  const std::vector<Point2> & smooth)
{
  const double cell = std::min(
    (kWidth - 40.0) / grid.width(), (kHeight - 60.0) / grid.height());
  const double ox = 20.0;
  const double oy = 40.0;
  const double res = grid.resolution();
  const Point2 o = grid.cell_center({0, 0});
  const auto px = [&](const Point2 & p) {return ox + ((p.x - o.x) / res + 0.5) * cell;};
  const auto py = [&](const Point2 & p) {return oy + ((o.y - p.y) / res + 0.5) * cell;};
  const auto old = out.precision(6);
  header(out, "A* path and smoothed reference");
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      out << "<rect x=\"" << ox + c * cell << "\" y=\"" << oy + r * cell << "\" width=\""
          << cell << "\" height=\"" << cell << "\" fill=\""
          << (grid.occupied({c, r}) ? "#444" : "white") << "\" stroke=\"#ccc\"/>\n";
    }
  }
  out << "<polyline fill=\"none\" stroke=\"" << color(0)
      << "\" stroke-width=\"2\" stroke-dasharray=\"5,3\" points=\"";
  for (const Cell & c : raw.cells) {
    const Point2 p = grid.cell_center(c);
    out << px(p) << ',' << py(p) << ' ';
  }
  out << "\"/>\n<polyline fill=\"none\" stroke=\"" << color(1)
      << "\" stroke-width=\"2\" points=\"";
  for (const Point2 & p : smooth) {
    out << px(p) << ',' << py(p) << ' ';
  }
  out << "\"/>\n</svg>\n";
  out.precision(old);
}

void save(const std::string & path, const std::string & content)
{
  std::ofstream f(path);
  if (!f) {
    throw Error("cannot write " + path);
  }
  f << content;
  if (!f) {
    throw Error("write failed: " + path);
  }
}

}  // namespace omnitrack::svg
