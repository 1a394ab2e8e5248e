#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omnitrack/common.hpp"

namespace omnitrack
{

class EmptyAggregateError : public Error
{
public:
  using Error::Error;
};

class KmNonconvergenceError : public Error
{
public:
  using Error::Error;
};

/// Linguistic terms, ordered from negative big to positive big.
enum class Label : int {NB = 0, NM, NS, ZO, PS, PM, PB};

inline constexpr std::size_t kLabelCount = 7;
inline constexpr std::array<Label, kLabelCount> kAllLabels{
  Label::NB, Label::NM, Label::NS, Label::ZO, Label::PS, Label::PM, Label::PB};

std::string_view to_string(Label l);
/// Throws FormatError-like ConfigError on an unknown name.
Label parse_label(std::string_view name);

/// Triangle with optional shoulders: a shouldered side stays at full height
/// beyond the apex instead of falling to zero.
struct TriMf
{
  double left_foot = 0.0;
  double apex = 0.0;
  double right_foot = 0.0;
  bool left_shoulder = false;
  bool right_shoulder = false;

  double operator()(double x) const;
};

/// Seven overlapping triangles over [lo, hi].
struct FuzzyPartition
{
  double lo = -1.0;
  double hi = 1.0;
  std::array<TriMf, kLabelCount> mfs{};

  /// Apexes evenly spaced from lo to hi, each foot on the neighbouring apex,
  /// shoulders on the outermost sets.
  static FuzzyPartition uniform(double lo, double hi);

  /// Degrees of the seven sets at x (clamped into the universe first).
  std::array<double, kLabelCount> fuzzify(double x) const;
};

struct Interval
{
  double lo = 0.0;
  double hi = 0.0;
};

/// Interval type-2 triangle: upper MF plus a lower MF whose feet are pulled
/// toward the apex by `lag` times each half-support and whose peak is
/// `height_scale`.
struct FouMf
{
  TriMf umf{};
  TriMf lmf{};
  double height_scale = 1.0;

  static FouMf from_umf(const TriMf & umf, double height_scale, double lag);

  Interval operator()(double x) const;
};

struct FouPartition
{
  double lo = -1.0;
  double hi = 1.0;
  std::array<FouMf, kLabelCount> sets{};

  static FouPartition from_partition(const FuzzyPartition & p, double height_scale, double lag);

  std::array<Interval, kLabelCount> fuzzify(double x) const;
};

enum class GainOutput : int {kp = 0, ki = 1, kd = 2};

/// 7x7 rule table (error label x error-change label) for each gain output.
class RuleBase
{
public:
  using Consequents = std::array<Label, 3>;

  Consequents & at(Label e, Label de)
  {
    return table_[static_cast<std::size_t>(e)][static_cast<std::size_t>(de)];
  }
  const Consequents & at(Label e, Label de) const
  {
    return table_[static_cast<std::size_t>(e)][static_cast<std::size_t>(de)];
  }
  Label consequent(Label e, Label de, GainOutput out) const
  {
    return at(e, de)[static_cast<std::size_t>(out)];
  }

  /// The 49-rule gain-tuning table shipped with the controller.
  static RuleBase standard();

  friend bool operator==(const RuleBase &, const RuleBase &) = default;

private:
  std::array<std::array<Consequents, kLabelCount>, kLabelCount> table_{};
};

/// CSV with header "e,de,kp,ki,kd" and exactly 49 rows.
RuleBase read_rule_base(std::istream & in);
RuleBase load_rule_base(const std::string & path);
void write_rule_base(std::ostream & out, const RuleBase & rules);

/// Crisp gain increments produced by one inference.
struct InferenceResult
{
  double d_kp = 0.0;
  double d_ki = 0.0;
  double d_kd = 0.0;

  double operator[](GainOutput o) const
  {
    switch (o) {
      case GainOutput::kp: return d_kp;
      case GainOutput::ki: return d_ki;
      case GainOutput::kd: return d_kd;
    }
    return 0.0;
  }
};

inline constexpr std::size_t kDefuzzPoints = 1001;

// ---------------------------------------------------------------------------
// Karnik-Mendel

/// Minimum over switch points of the interval-weighted mean of `points`,
/// i.e. the left end of the type-reduced interval. Points need not be sorted.
double km_left(std::span<const double> points, std::span<const Interval> weights);
/// Maximum counterpart of km_left.
double km_right(std::span<const double> points, std::span<const Interval> weights);

/// Center-of-sets type reduction: rule firing intervals plus each rule's
/// consequent centroid interval give [y_l, y_r].
Interval center_of_sets(
  std::span<const Interval> firing, std::span<const Interval> consequent_centroids);

/// Centroid interval of an IT2 set, discretised over [lo, hi].
Interval centroid_of_fou(
  const FouMf & set, double lo, double hi, std::size_t points = kDefuzzPoints);

/// Centroid of a sampled type-1 membership function (trapezoidal rule).
double centroid(std::span<const double> xs, std::span<const double> mu);

// ---------------------------------------------------------------------------
// Engines

/// Maps normalized (error, error change) to gain increments. Engines are
/// immutable and safe to share across threads.
class FuzzyEngine
{
public:
  virtual ~FuzzyEngine() = default;
  virtual InferenceResult infer(double e, double de) const = 0;
};

/// Always returns zero increments; reduces the fuzzy PID to a fixed-gain PID.
class ZeroEngine final : public FuzzyEngine
{
public:
  InferenceResult infer(double, double) const override {return {};}
};

/// Mamdani max-min inference with centre-of-gravity defuzzification.
class Type1Engine final : public FuzzyEngine
{
public:
  Type1Engine(
    RuleBase rules, FuzzyPartition e_part, FuzzyPartition de_part, FuzzyPartition out_part);

  /// Standard layout: inputs on [-1, 1], outputs on [-0.1, 0.1].
  static std::shared_ptr<const Type1Engine> make_default(RuleBase rules = RuleBase::standard());

  InferenceResult infer(double e, double de) const override;

  /// Rule firing strengths min(mu_e, mu_de), indexed [e][de].
  std::array<std::array<double, kLabelCount>, kLabelCount> firing(double e, double de) const;

  const std::vector<double> & grid() const {return xs_;}

private:
  double defuzzify(const std::array<double, kLabelCount> & strength_per_label) const;

  RuleBase rules_;
  FuzzyPartition e_part_;
  FuzzyPartition de_part_;
  FuzzyPartition out_part_;
  std::vector<double> xs_;
  std::array<std::vector<double>, kLabelCount> out_mu_;
};

enum class TypeReduction
{
  centroid,        // KM centroid of the aggregated output FOU
  center_of_sets,  // KM over rule firing intervals and consequent centroids
};

std::string_view to_string(TypeReduction t);
TypeReduction parse_type_reduction(std::string_view name);

/// Interval type-2 Mamdani engine. Firing intervals use the minimum t-norm
/// on lower and upper memberships; the type-reduced interval comes from KM
/// and the crisp output is its midpoint.
class IntervalType2Engine final : public FuzzyEngine
{
public:
  IntervalType2Engine(
    RuleBase rules, FouPartition e_part, FouPartition de_part, FouPartition out_part,
    TypeReduction reduction = TypeReduction::centroid);

  static std::shared_ptr<const IntervalType2Engine> make_default(
    double height_scale = 1.0, double lag = 0.3,
    TypeReduction reduction = TypeReduction::centroid,
    RuleBase rules = RuleBase::standard());

  InferenceResult infer(double e, double de) const override;

  /// Type-reduced interval for one output.
  Interval type_reduce(double e, double de, GainOutput out) const;

  std::array<std::array<Interval, kLabelCount>, kLabelCount> firing(double e, double de) const;

  /// Centroid interval of each output set (used by centre-of-sets reduction).
  const std::array<Interval, kLabelCount> & consequent_centroids() const {return centroids_;}

private:
  Interval reduce_centroid(
    const std::array<std::array<Interval, kLabelCount>, kLabelCount> & f, GainOutput out) const;
  Interval reduce_cos(
    const std::array<std::array<Interval, kLabelCount>, kLabelCount> & f, GainOutput out) const;

  RuleBase rules_;
  FouPartition e_part_;
  FouPartition de_part_;
  FouPartition out_part_;
  TypeReduction reduction_;
  std::vector<double> xs_;
  std::vector<double> trap_w_;
  std::array<std::vector<double>, kLabelCount> out_lower_;
  std::array<std::vector<double>, kLabelCount> out_upper_;
  std::array<Interval, kLabelCount> centroids_{};
};

/// Dumps (e, de, d_kp, d_ki, d_kd) over a steps x steps grid of [-1, 1]^2.
void write_control_surface(std::ostream & out, const FuzzyEngine & engine, int steps);

}  // namespace omnitrack
