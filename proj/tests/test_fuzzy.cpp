#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "omnitrack/fuzzy.hpp"
#include "oracles.hpp"

using namespace omnitrack;

namespace
{

// Straight Mamdani max-min + trapezoid COG over `points` samples of the
// output universe, built from the public partition and firing helpers.
double t1_reference(const Type1Engine & engine, double e, double de, GainOutput out,
  std::size_t points)
{
  const RuleBase rules = RuleBase::standard();
  const FuzzyPartition part = FuzzyPartition::uniform(-0.1, 0.1);
  const auto f = engine.firing(e, de);
  std::vector<double> xs(points);
  std::vector<double> mu(points, 0.0);
  for (std::size_t j = 0; j < points; ++j) {
    xs[j] = -0.1 + 0.2 * static_cast<double>(j) / static_cast<double>(points - 1);
    for (const Label a : kAllLabels) {
      for (const Label b : kAllLabels) {
        const double s = f[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        const Label c = rules.consequent(a, b, out);
        mu[j] = std::max(mu[j], std::min(s, part.mfs[static_cast<std::size_t>(c)](xs[j])));
      }
    }
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j + 1 < points; ++j) {
    num += xs[j] * mu[j] + xs[j + 1] * mu[j + 1];
    den += mu[j] + mu[j + 1];
  }
  return num / den;
}

// Centroid of the NB output set (right triangle from -0.1 falling to -0.1 + 1/30).
constexpr double kNbCentroid = -0.1 + (1.0 / 30.0) / 3.0;

}  // namespace

TEST(Partition, ApexAndCrossing)
{
  const FuzzyPartition p = FuzzyPartition::uniform(-1.0, 1.0);
  const auto at_zero = p.fuzzify(0.0);
  EXPECT_EQ(at_zero[static_cast<std::size_t>(Label::ZO)], 1.0);
  const auto mid = p.fuzzify(1.0 / 6.0);
  EXPECT_NEAR(mid[static_cast<std::size_t>(Label::ZO)], 0.5, 1e-12);
  EXPECT_NEAR(mid[static_cast<std::size_t>(Label::PS)], 0.5, 1e-12);
}

TEST(Partition, ClampsOutsideUniverse)
{
  const FuzzyPartition p = FuzzyPartition::uniform(-1.0, 1.0);
  EXPECT_EQ(p.fuzzify(1.7), p.fuzzify(1.0));
  EXPECT_EQ(p.fuzzify(-4.0), p.fuzzify(-1.0));
}

TEST(PartitionProperty, DegreesSumToOne)
{
  const FuzzyPartition p = FuzzyPartition::uniform(-1.0, 1.0);
  for (int i = 0; i <= 1000; ++i) {
    const auto mu = p.fuzzify(-1.0 + 2.0 * i / 1000.0);
    double s = 0.0;
    for (const double m : mu) {
      s += m;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Partition, ApexesUniformlySpaced)
{
  const FuzzyPartition p = FuzzyPartition::uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    EXPECT_NEAR(p.mfs[i].apex, -1.0 + static_cast<double>(i) / 3.0, 1e-12);
  }
  EXPECT_TRUE(p.mfs[0].left_shoulder);
  EXPECT_TRUE(p.mfs[6].right_shoulder);
}

TEST(RuleTable, MatchesReferenceTranscription)
{
  const auto rows = oracle::read_rule_rows(std::string(OMNITRACK_TEST_DATA_DIR) + "/rule_table.txt");
  ASSERT_EQ(rows.size(), 49u);
  const RuleBase rb = RuleBase::standard();
  int cells = 0;
  for (const auto & r : rows) {
    const Label e = parse_label(r[0]);
    const Label de = parse_label(r[1]);
    for (int o = 0; o < 3; ++o) {
      EXPECT_EQ(to_string(rb.consequent(e, de, static_cast<GainOutput>(o))), r[2 + o])
        << r[0] << "/" << r[1] << " output " << o;
      ++cells;
    }
  }
  EXPECT_EQ(cells, 147);
}

TEST(RuleTable, CsvRoundTripAndBundledFile)
{
  std::stringstream ss;
  write_rule_base(ss, RuleBase::standard());
  EXPECT_EQ(read_rule_base(ss), RuleBase::standard());
  EXPECT_EQ(load_rule_base(std::string(OMNITRACK_DATA_DIR) + "/fuzzy_rules.csv"),
    RuleBase::standard());
}

TEST(RuleTable, RejectsBadFiles)
{
  for (const char * text : {"", "e,de,kp\n", "e,de,kp,ki,kd\nNB,NB,PB,NB\n",
      "e,de,kp,ki,kd\nNB,NB,PB,NB,XX\n", "e,de,kp,ki,kd\nNB,NB,PB,NB,PS\n"})
  {
    std::istringstream in(text);
    EXPECT_THROW(read_rule_base(in), ConfigError) << text;
  }
}

TEST(Type1, CornerRuleGivesConsequentCentroids)
{
  const auto eng = Type1Engine::make_default();
  const auto f = eng->firing(1.0, 1.0);
  for (const Label a : kAllLabels) {
    for (const Label b : kAllLabels) {
      const double s = f[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      EXPECT_EQ(s, (a == Label::PB && b == Label::PB) ? 1.0 : 0.0);
    }
  }
  const InferenceResult r = eng->infer(1.0, 1.0);
  EXPECT_NEAR(r.d_kp, kNbCentroid, 1e-5);
  EXPECT_NEAR(r.d_ki, -kNbCentroid, 1e-5);
  EXPECT_NEAR(r.d_kd, -kNbCentroid, 1e-5);
}

TEST(Type1, CentreRule)
{
  const InferenceResult r = Type1Engine::make_default()->infer(0.0, 0.0);
  EXPECT_NEAR(r.d_kp, 0.0, 1e-15);
  EXPECT_NEAR(r.d_ki, 0.0, 1e-15);
  // Feet of the consequent fall between COG samples.
  EXPECT_NEAR(r.d_kd, -0.1 / 3.0, 1e-6);
}

TEST(Type1, SymmetricAggregateHasZeroCentroid)
{
  std::vector<double> xs;
  std::vector<double> mu;
  for (int i = 0; i <= 200; ++i) {
    xs.push_back(-1.0 + i / 100.0);
    mu.push_back(std::exp(-xs.back() * xs.back() * 4.0));
  }
  EXPECT_NEAR(centroid(xs, mu), 0.0, 1e-15);
}

TEST(Type1Property, CentroidScaleInvariant)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs;
  std::vector<double> mu;
  for (int i = 0; i < 101; ++i) {
    xs.push_back(i * 0.01);
    mu.push_back(u(rng));
  }
  const double c = centroid(xs, mu);
  for (const double k : {0.001, 0.3, 7.0}) {
    std::vector<double> scaled = mu;
    for (double & m : scaled) {
      m *= k;
    }
    EXPECT_NEAR(centroid(xs, scaled), c, 1e-14);
  }
}

TEST(Type1Property, OutputsStayInUniverse)
{
  const auto eng = Type1Engine::make_default();
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const InferenceResult r = eng->infer(-1.0 + i / 50.0, -1.0 + j / 50.0);
      for (int o = 0; o < 3; ++o) {
        ASSERT_GE(r[static_cast<GainOutput>(o)], -0.1);
        ASSERT_LE(r[static_cast<GainOutput>(o)], 0.1);
      }
    }
  }
}

TEST(Type1Property, MatchesDirectMaxMinEvaluation)
{
  const auto eng = Type1Engine::make_default();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 200; ++i) {
    const double e = u(rng);
    const double de = u(rng);
    const InferenceResult r = eng->infer(e, de);
    for (int o = 0; o < 3; ++o) {
      const auto out = static_cast<GainOutput>(o);
      ASSERT_NEAR(r[out], t1_reference(*eng, e, de, out, kDefuzzPoints), 1e-12);
      // Finer discretization moves the answer by less than 1e-4 of the
      // universe width.
      ASSERT_NEAR(r[out], t1_reference(*eng, e, de, out, 10001), 1e-4 * 0.2);
    }
  }
}

TEST(KarnikMendel, MatchesEnumeration)
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 10);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = count(rng);
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<Interval> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = u(rng) * 2.0 - 1.0;
      const double a = u(rng);
      const double b = u(rng);
      w[static_cast<std::size_t>(i)] = {std::min(a, b), std::max(a, b)};
    }
    const Interval ref = oracle::enumerate_km(x, w);
    ASSERT_NEAR(km_left(x, w), ref.lo, 1e-9);
    ASSERT_NEAR(km_right(x, w), ref.hi, 1e-9);
  }
}

TEST(KarnikMendel, ZeroLowerWeightsAllowed)
{
  const std::vector<double> x{-1.0, 0.0, 2.0};
  const std::vector<Interval> w{{0.0, 1.0}, {0.0, 0.5}, {0.0, 1.0}};
  const Interval ref = oracle::enumerate_km(x, w);
  EXPECT_NEAR(km_left(x, w), ref.lo, 1e-12);
  EXPECT_NEAR(km_right(x, w), ref.hi, 1e-12);
}

TEST(KarnikMendel, RejectsInvalidWeights)
{
  const std::vector<double> x{0.0, 1.0};
  EXPECT_THROW(km_left(x, std::vector<Interval>{{0.5, 0.2}, {0.0, 1.0}}), ConfigError);
  EXPECT_THROW(km_left(x, std::vector<Interval>{{0.0, 0.0}, {0.0, 0.0}}), EmptyAggregateError);
}

TEST(CenterOfSets, MatchesEnumerationForFiveRules)
{
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Interval> f(5);
    std::vector<Interval> c(5);
    for (int i = 0; i < 5; ++i) {
      const double a = u(rng);
      const double b = u(rng);
      f[static_cast<std::size_t>(i)] = {std::min(a, b), std::max(a, b)};
      const double m = u(rng) - 0.5;
      const double h = 0.1 * u(rng);
      c[static_cast<std::size_t>(i)] = {m - h, m + h};
    }
    const Interval ref = oracle::enumerate_cos(f, c);
    const Interval got = center_of_sets(f, c);
    ASSERT_NEAR(got.lo, ref.lo, 1e-9);
    ASSERT_NEAR(got.hi, ref.hi, 1e-9);
  }
}

TEST(CenterOfSets, CollapsedFiringGivesWeightedMean)
{
  const std::vector<Interval> f(3, Interval{0.4, 0.4});
  const std::vector<Interval> c{{-0.5, -0.5}, {0.1, 0.1}, {0.7, 0.7}};
  const Interval y = center_of_sets(f, c);
  EXPECT_NEAR(y.lo, 0.1, 1e-12);
  EXPECT_NEAR(y.hi, 0.1, 1e-12);
}

TEST(FouCentroid, DegenerateSymmetricSet)
{
  const TriMf tri{0.2, 0.5, 0.8};
  const Interval c = centroid_of_fou(FouMf::from_umf(tri, 1.0, 0.0), 0.0, 1.0);
  EXPECT_NEAR(c.lo, 0.5, 1e-12);
  EXPECT_NEAR(c.hi, 0.5, 1e-12);
}

TEST(FouCentroid, ContainsUpperCentroidAndWidensWithLag)
{
  const TriMf tri{0.1, 0.3, 0.9};
  std::vector<double> xs;
  std::vector<double> mu;
  for (std::size_t j = 0; j < kDefuzzPoints; ++j) {
    xs.push_back(static_cast<double>(j) / (kDefuzzPoints - 1));
    mu.push_back(tri(xs.back()));
  }
  const double c_umf = centroid(xs, mu);
  double prev_width = -1.0;
  for (const double lag : {0.0, 0.1, 0.2, 0.3}) {
    const Interval c = centroid_of_fou(FouMf::from_umf(tri, 1.0, lag), 0.0, 1.0);
    EXPECT_LE(c.lo, c_umf + 1e-12);
    EXPECT_GE(c.hi, c_umf - 1e-12);
    EXPECT_GE(c.hi - c.lo, prev_width - 1e-12);
    prev_width = c.hi - c.lo;
  }
}

TEST(Fou, LowerNeverExceedsUpper)
{
  const FouPartition p = FouPartition::from_partition(FuzzyPartition::uniform(-1, 1), 0.8, 0.3);
  for (int i = 0; i <= 20000; ++i) {
    for (const Interval & m : p.fuzzify(-1.0 + i / 10000.0)) {
      ASSERT_LE(m.lo, m.hi);
      ASSERT_GE(m.lo, 0.0);
    }
  }
}

TEST(IntervalType2, DegenerateFouEqualsType1)
{
  const auto t1 = Type1Engine::make_default();
  const auto it2 = IntervalType2Engine::make_default(1.0, 0.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double e = u(rng);
    const double de = u(rng);
    const InferenceResult a = t1->infer(e, de);
    const InferenceResult b = it2->infer(e, de);
    ASSERT_NEAR(a.d_kp, b.d_kp, 1e-9);
    ASSERT_NEAR(a.d_ki, b.d_ki, 1e-9);
    ASSERT_NEAR(a.d_kd, b.d_kd, 1e-9);
  }
}

TEST(IntervalType2, CrispIsMidpointOfTypeReducedInterval)
{
  const auto eng = IntervalType2Engine::make_default();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double e = u(rng);
    const double de = u(rng);
    const InferenceResult r = eng->infer(e, de);
    for (int o = 0; o < 3; ++o) {
      const auto out = static_cast<GainOutput>(o);
      const Interval y = eng->type_reduce(e, de, out);
      ASSERT_LE(y.lo, y.hi + 1e-15);
      ASSERT_NEAR(r[out], 0.5 * (y.lo + y.hi), 1e-15);
      ASSERT_GE(y.lo, -0.1 - 1e-12);
      ASSERT_LE(y.hi, 0.1 + 1e-12);
    }
  }
}

TEST(IntervalType2, FiringIntervalsUseMinOnBothBounds)
{
  const auto eng = IntervalType2Engine::make_default(0.9, 0.3);
  const FouPartition p = FouPartition::from_partition(FuzzyPartition::uniform(-1, 1), 0.9, 0.3);
  const double e = 0.27;
  const double de = -0.55;
  const auto me = p.fuzzify(e);
  const auto md = p.fuzzify(de);
  const auto f = eng->firing(e, de);
  for (std::size_t a = 0; a < kLabelCount; ++a) {
    for (std::size_t b = 0; b < kLabelCount; ++b) {
      EXPECT_EQ(f[a][b].lo, std::min(me[a].lo, md[b].lo));
      EXPECT_EQ(f[a][b].hi, std::min(me[a].hi, md[b].hi));
    }
  }
}

TEST(IntervalType2, CenterOfSetsOptionStaysBounded)
{
  const auto eng = IntervalType2Engine::make_default(1.0, 0.3, TypeReduction::center_of_sets);
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const InferenceResult r = eng->infer(-1.0 + i / 10.0, -1.0 + j / 10.0);
      for (int o = 0; o < 3; ++o) {
        ASSERT_GE(r[static_cast<GainOutput>(o)], -0.1);
        ASSERT_LE(r[static_cast<GainOutput>(o)], 0.1);
      }
    }
  }
  EXPECT_EQ(parse_type_reduction("center_of_sets"), TypeReduction::center_of_sets);
  EXPECT_THROW(parse_type_reduction("cos?"), ConfigError);
}

TEST(IntervalType2, InvalidFouParametersRejected)
{
  EXPECT_THROW(IntervalType2Engine::make_default(0.0, 0.3), ConfigError);
  EXPECT_THROW(IntervalType2Engine::make_default(1.0, 1.0), ConfigError);
}

TEST(ControlSurface, GridSize)
{
  std::stringstream ss;
  write_control_surface(ss, *Type1Engine::make_default(), 11);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "e,de,d_kp,d_ki,d_kd");
  int rows = 0;
  while (std::getline(ss, line)) {
    ++rows;
  }
  EXPECT_EQ(rows, 121);
}
