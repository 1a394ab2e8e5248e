#include "omnitrack/fuzzy.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace omnitrack
{

namespace
{

constexpr std::array<std::string_view, kLabelCount> kLabelNames{
  "NB", "NM", "NS", "ZO", "PS", "PM", "PB"};

// Uniform grid over [lo, hi] and its trapezoidal weights (spacing dropped; it
// cancels in every centroid ratio).
void make_grid(double lo, double hi, std::size_t n, std::vector<double> & xs,
  std::vector<double> & w)
{
  xs.resize(n);
  w.assign(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    xs[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
  }
  w.front() = 0.5;
  w.back() = 0.5;
}

double weighted_mean(
  std::span<const double> x, std::span<const Interval> w, std::span<const std::size_t> order,
  std::ptrdiff_t k, bool left)
{
  double num = 0.0;
  double den = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    const bool before = static_cast<std::ptrdiff_t>(r) <= k;
    const double theta = (before == left) ? w[i].hi : w[i].lo;
    num += x[i] * theta;
    den += theta;
  }
  return num / den;
}

// Largest rank r with x[order[r]] <= y, or -1.
std::ptrdiff_t switch_rank(
  std::span<const double> x, std::span<const std::size_t> order, double y)
{
  std::ptrdiff_t k = -1;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (x[order[r]] <= y) {
      k = static_cast<std::ptrdiff_t>(r);
    } else {
      break;
    }
  }
  return k;
}

double karnik_mendel(std::span<const double> x, std::span<const Interval> w, bool left)
{
  if (x.size() != w.size()) {
    throw ConfigError("KM: points and weights differ in length");
  }
  double total_hi = 0.0;
  for (const Interval & iv : w) {
    if (iv.lo < 0.0 || iv.hi < iv.lo) {
      throw ConfigError("KM: weights must satisfy 0 <= lo <= hi");
    }
    total_hi += iv.hi;
  }
  if (!(total_hi > 0.0)) {
    throw EmptyAggregateError("KM: all upper weights are zero");
  }

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!std::is_sorted(x.begin(), x.end())) {
    std::stable_sort(order.begin(), order.end(),
      [&x](std::size_t a, std::size_t b) {return x[a] < x[b];});
  }

  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double theta = 0.5 * (w[i].lo + w[i].hi);
    num += x[i] * theta;
    den += theta;
  }
  double y = num / den;
  if (x.size() == 1) {
    return x[0];
  }
  const auto last = static_cast<std::ptrdiff_t>(x.size()) - 2;
  auto rank = [&](double v) {return std::clamp(switch_rank(x, order, v), std::ptrdiff_t{0}, last);};
  std::ptrdiff_t k = rank(y);
  constexpr int kMaxIterations = 100;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double y_new = weighted_mean(x, w, order, k, left);
    const std::ptrdiff_t k_new = rank(y_new);
    if (k_new == k || std::abs(y_new - y) <= 1e-14 * std::max(1.0, std::abs(y))) {
      return y_new;
    }
    k = k_new;
    y = y_new;
  }
  throw KmNonconvergenceError("KM switch point not found in 100 iterations");
}

}  // namespace

std::string_view to_string(Label l)
{
  return kLabelNames[static_cast<std::size_t>(l)];
}

Label parse_label(std::string_view name)
{
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (kLabelNames[i] == name) {
      return static_cast<Label>(i);
    }
  }
  throw ConfigError("unknown fuzzy label '" + std::string(name) + "'");
}

double TriMf::operator()(double x) const
{
  if (x < apex) {
    if (left_shoulder) {
      return 1.0;
    }
    if (x <= left_foot) {
      return 0.0;
    }
    return (x - left_foot) / (apex - left_foot);
  }
  if (x > apex) {
    if (right_shoulder) {
      return 1.0;
    }
    if (x >= right_foot) {
      return 0.0;
    }
    return (right_foot - x) / (right_foot - apex);
  }
  return 1.0;
}

FuzzyPartition FuzzyPartition::uniform(double lo, double hi)
{
  if (!(hi > lo)) {
    throw ConfigError("partition universe must satisfy lo < hi");
  }
  FuzzyPartition p;
  p.lo = lo;
  p.hi = hi;
  const double step = (hi - lo) / static_cast<double>(kLabelCount - 1);
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    const double apex = lo + step * static_cast<double>(i);
    p.mfs[i] = TriMf{apex - step, apex, apex + step, i == 0, i + 1 == kLabelCount};
  }
  // Pin the end apexes exactly on the universe bounds.
  p.mfs.front().apex = lo;
  p.mfs.back().apex = hi;
  return p;
}

std::array<double, kLabelCount> FuzzyPartition::fuzzify(double x) const
{
  const double xc = std::clamp(x, lo, hi);
  std::array<double, kLabelCount> mu{};
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    mu[i] = mfs[i](xc);
  }
  return mu;
}

FouMf FouMf::from_umf(const TriMf & umf, double height_scale, double lag)
{
  if (!(height_scale > 0.0 && height_scale <= 1.0)) {
    throw ConfigError("FOU height_scale must be in (0, 1]");
  }
  if (!(lag >= 0.0 && lag < 1.0)) {
    throw ConfigError("FOU lag must be in [0, 1)");
  }
  FouMf f;
  f.umf = umf;
  f.height_scale = height_scale;
  f.lmf = umf;
  f.lmf.left_foot = umf.left_foot + lag * (umf.apex - umf.left_foot);
  f.lmf.right_foot = umf.right_foot - lag * (umf.right_foot - umf.apex);
  return f;
}

Interval FouMf::operator()(double x) const
{
  const double hi = umf(x);
  return Interval{std::min(height_scale * lmf(x), hi), hi};
}

FouPartition FouPartition::from_partition(
  const FuzzyPartition & p, double height_scale, double lag)
{
  FouPartition f;
  f.lo = p.lo;
  f.hi = p.hi;
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    f.sets[i] = FouMf::from_umf(p.mfs[i], height_scale, lag);
  }
  return f;
}

std::array<Interval, kLabelCount> FouPartition::fuzzify(double x) const
{
  const double xc = std::clamp(x, lo, hi);
  std::array<Interval, kLabelCount> mu{};
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    mu[i] = sets[i](xc);
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Rule base

RuleBase RuleBase::standard()
{
  // Rows: error NB..PB; columns: error change NB..PB; cells "kp ki kd".
  static constexpr std::array<std::array<std::string_view, kLabelCount>, kLabelCount> kTable{{
    {"PB NB PS", "PB NB NS", "PM NM NB", "PM NM NB", "PS NS NB", "ZO ZO NM", "ZO ZO PS"},
    {"PB NB PS", "PB NB NS", "PM NM NB", "PS NS NM", "PS NS NM", "ZO ZO NS", "NS ZO ZO"},
    {"PM NB ZO", "PM NM NM", "PM NS NM", "PS NS NM", "ZO ZO NS", "NS PS NS", "NS PS ZO"},
    {"PM NM ZO", "PM NM NS", "PS NS NS", "ZO ZO NS", "NS PS NS", "NM PM NS", "NM PM ZO"},
    {"PS NM ZO", "PS NS ZO", "ZO ZO ZO", "NS PS ZO", "NS PS ZO", "NM PM ZO", "NM PB ZO"},
    {"PS ZO PB", "ZO ZO NS", "NS PS PS", "NM PS PS", "NM PM PS", "NM PB PS", "NB PB PB"},
    {"ZO ZO PB", "ZO ZO PM", "NM PS PM", "NM PM PM", "NM PM PS", "NB PB PS", "NB PB PB"},
  }};
  RuleBase rb;
  for (std::size_t e = 0; e < kLabelCount; ++e) {
    for (std::size_t de = 0; de < kLabelCount; ++de) {
      const std::string_view cell = kTable[e][de];
      auto & c = rb.table_[e][de];
      c[0] = parse_label(cell.substr(0, 2));
      c[1] = parse_label(cell.substr(3, 2));
      c[2] = parse_label(cell.substr(6, 2));
    }
  }
  return rb;
}

RuleBase read_rule_base(std::istream & in)
{
  auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
  std::string line;
  if (!std::getline(in, line) || trim(line) != "e,de,kp,ki,kd") {
    throw ConfigError("rule file must start with header 'e,de,kp,ki,kd'");
  }
  RuleBase rb;
  std::array<std::array<bool, kLabelCount>, kLabelCount> seen{};
  int rows = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      fields.push_back(trim(f));
    }
    if (fields.size() != 5) {
      throw ConfigError("rule row must have 5 fields: '" + line + "'");
    }
    const Label e = parse_label(fields[0]);
    const Label de = parse_label(fields[1]);
    auto & s = seen[static_cast<std::size_t>(e)][static_cast<std::size_t>(de)];
    if (s) {
      throw ConfigError("duplicate rule for (" + fields[0] + "," + fields[1] + ")");
    }
    s = true;
    rb.at(e, de) = {parse_label(fields[2]), parse_label(fields[3]), parse_label(fields[4])};
    ++rows;
  }
  if (rows != static_cast<int>(kLabelCount * kLabelCount)) {
    throw ConfigError("rule file must contain 49 rules, found " + std::to_string(rows));
  }
  return rb;
}

RuleBase load_rule_base(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open rule file " + path);
  }
  return read_rule_base(in);
}

void write_rule_base(std::ostream & out, const RuleBase & rules)
{
  out << "e,de,kp,ki,kd\n";
  for (const Label e : kAllLabels) {
    for (const Label de : kAllLabels) {
      const auto & c = rules.at(e, de);
      out << to_string(e) << ',' << to_string(de) << ',' << to_string(c[0]) << ','
          << to_string(c[1]) << ',' << to_string(c[2]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// KM and centroids

double km_left(std::span<const double> points, std::span<const Interval> weights)
{
  return karnik_mendel(points, weights, true);
}

double km_right(std::span<const double> points, std::span<const Interval> weights)
{
  return karnik_mendel(points, weights, false);
}

Interval center_of_sets(
  std::span<const Interval> firing, std::span<const Interval> consequent_centroids)
{
  if (firing.size() != consequent_centroids.size()) {
    throw ConfigError("center_of_sets: size mismatch");
  }
  std::vector<double> cl;
  std::vector<double> cr;
  cl.reserve(firing.size());
  cr.reserve(firing.size());
  for (const Interval & c : consequent_centroids) {
    cl.push_back(c.lo);
    cr.push_back(c.hi);
  }
  return Interval{km_left(cl, firing), km_right(cr, firing)};
}

Interval centroid_of_fou(const FouMf & set, double lo, double hi, std::size_t points)
{
  if (points < 2 || !(hi > lo)) {
    throw ConfigError("centroid_of_fou: need at least 2 points on a non-empty universe");
  }
  std::vector<double> xs;
  std::vector<double> tw;
  make_grid(lo, hi, points, xs, tw);
  std::vector<Interval> w(points);
  for (std::size_t j = 0; j < points; ++j) {
    const Interval mu = set(xs[j]);
    w[j] = Interval{tw[j] * mu.lo, tw[j] * mu.hi};
  }
  return Interval{km_left(xs, w), km_right(xs, w)};
}

double centroid(std::span<const double> xs, std::span<const double> mu)
{
  if (xs.size() != mu.size() || xs.size() < 2) {
    throw ConfigError("centroid: need matching samples (>= 2)");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
    const double h = xs[j + 1] - xs[j];
    num += 0.5 * h * (xs[j] * mu[j] + xs[j + 1] * mu[j + 1]);
    den += 0.5 * h * (mu[j] + mu[j + 1]);
  }
  if (!(den > 0.0)) {
    throw EmptyAggregateError("centroid of an empty membership function");
  }
  return num / den;
}

// ---------------------------------------------------------------------------
// Type-1 engine

Type1Engine::Type1Engine(
  RuleBase rules, FuzzyPartition e_part, FuzzyPartition de_part, FuzzyPartition out_part)
: rules_(rules), e_part_(e_part), de_part_(de_part), out_part_(out_part)
{
  std::vector<double> unused;
  make_grid(out_part_.lo, out_part_.hi, kDefuzzPoints, xs_, unused);
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    out_mu_[l].resize(xs_.size());
    for (std::size_t j = 0; j < xs_.size(); ++j) {
      out_mu_[l][j] = out_part_.mfs[l](xs_[j]);
    }
  }
}

std::shared_ptr<const Type1Engine> Type1Engine::make_default(RuleBase rules)
{
  return std::make_shared<const Type1Engine>(
    rules, FuzzyPartition::uniform(-1.0, 1.0), FuzzyPartition::uniform(-1.0, 1.0),
    FuzzyPartition::uniform(-0.1, 0.1));
}

std::array<std::array<double, kLabelCount>, kLabelCount> Type1Engine::firing(
  double e, double de) const
{
  const auto mu_e = e_part_.fuzzify(e);
  const auto mu_de = de_part_.fuzzify(de);
  std::array<std::array<double, kLabelCount>, kLabelCount> f{};
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    for (std::size_t j = 0; j < kLabelCount; ++j) {
      f[i][j] = std::min(mu_e[i], mu_de[j]);
    }
  }
  return f;
}

double Type1Engine::defuzzify(const std::array<double, kLabelCount> & strength) const
{
  // Max of min-clipped consequents, then trapezoidal COG on the grid.
  const std::size_t n = xs_.size();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double mu = 0.0;
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      mu = std::max(mu, std::min(strength[l], out_mu_[l][j]));
    }
    const double tw = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
    num += tw * mu * xs_[j];
    den += tw * mu;
  }
  if (!(den > 0.0)) {
    throw EmptyAggregateError("no rule fired");
  }
  return num / den;
}

InferenceResult Type1Engine::infer(double e, double de) const
{
  const auto f = firing(e, de);
  std::array<double, 3> crisp{};
  for (std::size_t o = 0; o < 3; ++o) {
    // A label's clipped set is the max over all rules that conclude it.
    std::array<double, kLabelCount> strength{};
    for (std::size_t i = 0; i < kLabelCount; ++i) {
      for (std::size_t j = 0; j < kLabelCount; ++j) {
        const auto l = static_cast<std::size_t>(
          rules_.consequent(kAllLabels[i], kAllLabels[j], static_cast<GainOutput>(o)));
        strength[l] = std::max(strength[l], f[i][j]);
      }
    }
    crisp[o] = defuzzify(strength);
  }
  return InferenceResult{crisp[0], crisp[1], crisp[2]};
}

// ---------------------------------------------------------------------------
// Interval type-2 engine

std::string_view to_string(TypeReduction t)
{
  return t == TypeReduction::centroid ? "centroid" : "center_of_sets";
}

TypeReduction parse_type_reduction(std::string_view name)
{
  if (name == "centroid") {
    return TypeReduction::centroid;
  }
  if (name == "center_of_sets" || name == "cos") {
    return TypeReduction::center_of_sets;
  }
  throw ConfigError("unknown type reduction '" + std::string(name) + "'");
}

IntervalType2Engine::IntervalType2Engine(
  RuleBase rules, FouPartition e_part, FouPartition de_part, FouPartition out_part,
  TypeReduction reduction)
: rules_(rules), e_part_(e_part), de_part_(de_part), out_part_(out_part),
  reduction_(reduction)
{
  make_grid(out_part_.lo, out_part_.hi, kDefuzzPoints, xs_, trap_w_);
  for (std::size_t l = 0; l < kLabelCount; ++l) {
    out_lower_[l].resize(xs_.size());
    out_upper_[l].resize(xs_.size());
    for (std::size_t j = 0; j < xs_.size(); ++j) {
      const Interval mu = out_part_.sets[l](xs_[j]);
      out_lower_[l][j] = mu.lo;
      out_upper_[l][j] = mu.hi;
    }
    centroids_[l] = centroid_of_fou(out_part_.sets[l], out_part_.lo, out_part_.hi);
  }
}

std::shared_ptr<const IntervalType2Engine> IntervalType2Engine::make_default(
  double height_scale, double lag, TypeReduction reduction, RuleBase rules)
{
  const auto in = FouPartition::from_partition(
    FuzzyPartition::uniform(-1.0, 1.0), height_scale, lag);
  const auto out = FouPartition::from_partition(
    FuzzyPartition::uniform(-0.1, 0.1), height_scale, lag);
  return std::make_shared<const IntervalType2Engine>(rules, in, in, out, reduction);
}

std::array<std::array<Interval, kLabelCount>, kLabelCount> IntervalType2Engine::firing(
  double e, double de) const
{
  const auto mu_e = e_part_.fuzzify(e);
  const auto mu_de = de_part_.fuzzify(de);
  std::array<std::array<Interval, kLabelCount>, kLabelCount> f{};
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    for (std::size_t j = 0; j < kLabelCount; ++j) {
      f[i][j] = Interval{std::min(mu_e[i].lo, mu_de[j].lo), std::min(mu_e[i].hi, mu_de[j].hi)};
    }
  }
  return f;
}

Interval IntervalType2Engine::reduce_centroid(
  const std::array<std::array<Interval, kLabelCount>, kLabelCount> & f, GainOutput out) const
{
  std::array<Interval, kLabelCount> strength{};
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    for (std::size_t j = 0; j < kLabelCount; ++j) {
      const auto l = static_cast<std::size_t>(
        rules_.consequent(kAllLabels[i], kAllLabels[j], out));
      strength[l].lo = std::max(strength[l].lo, f[i][j].lo);
      strength[l].hi = std::max(strength[l].hi, f[i][j].hi);
    }
  }
  const std::size_t n = xs_.size();
  std::vector<Interval> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      lower = std::max(lower, std::min(strength[l].lo, out_lower_[l][j]));
      upper = std::max(upper, std::min(strength[l].hi, out_upper_[l][j]));
    }
    w[j] = Interval{trap_w_[j] * lower, trap_w_[j] * upper};
  }
  return Interval{km_left(xs_, w), km_right(xs_, w)};
}

Interval IntervalType2Engine::reduce_cos(
  const std::array<std::array<Interval, kLabelCount>, kLabelCount> & f, GainOutput out) const
{
  std::vector<Interval> firing;
  std::vector<Interval> cents;
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    for (std::size_t j = 0; j < kLabelCount; ++j) {
      if (f[i][j].hi <= 0.0) {
        continue;
      }
      firing.push_back(f[i][j]);
      cents.push_back(centroids_[static_cast<std::size_t>(
          rules_.consequent(kAllLabels[i], kAllLabels[j], out))]);
    }
  }
  if (firing.empty()) {
    throw EmptyAggregateError("no rule fired");
  }
  return center_of_sets(firing, cents);
}

Interval IntervalType2Engine::type_reduce(double e, double de, GainOutput out) const
{
  const auto f = firing(e, de);
  return reduction_ == TypeReduction::centroid ? reduce_centroid(f, out) : reduce_cos(f, out);
}

InferenceResult IntervalType2Engine::infer(double e, double de) const
{
  const auto f = firing(e, de);
  std::array<double, 3> crisp{};
  for (std::size_t o = 0; o < 3; ++o) {
    const auto out = static_cast<GainOutput>(o);
    const Interval y = reduction_ == TypeReduction::centroid ?
      reduce_centroid(f, out) : reduce_cos(f, out);
    crisp[o] = 0.5 * (y.lo + y.hi);
  }
  return InferenceResult{crisp[0], crisp[1], crisp[2]};
}

void write_control_surface(std::ostream & out, const FuzzyEngine & engine, int steps)
{
  if (steps < 2) {
    throw ConfigError("control surface needs at least 2 steps per axis");
  }
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "e,de,d_kp,d_ki,d_kd\n";
  for (int i = 0; i < steps; ++i) {
    const double e = -1.0 + 2.0 * i / (steps - 1);
    for (int j = 0; j < steps; ++j) {
      const double de = -1.0 + 2.0 * j / (steps - 1);
      const InferenceResult r = engine.infer(e, de);
      out << e << ',' << de << ',' << r.d_kp << ',' << r.d_ki << ',' << r.d_kd << '\n';
    }
  }
  out.precision(old);
}

}  // namespace omnitrack
