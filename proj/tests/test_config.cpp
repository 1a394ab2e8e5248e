#include <sstream>

#include <gtest/gtest.h>

#include "omnitrack/config.hpp"

using namespace omnitrack;

namespace
{

ExperimentConfig parse(const std::string & text)
{
  std::istringstream in(text);
  return parse_experiment_config(in, ".");
}

}  // namespace

TEST(Config, Defaults)
{
  const ExperimentConfig c = parse("[scenario]\n[nmpc]\n");
  EXPECT_EQ(c.total_time, 30.0);
  EXPECT_EQ(c.ts, 0.1);
  ASSERT_EQ(c.controllers.size(), 1u);
  EXPECT_EQ(c.controllers[0].kind, ControllerKind::nmpc);
  EXPECT_EQ(c.controllers[0].nmpc.horizon, 15);
  EXPECT_EQ(c.horizons, (std::vector<int>{5, 10, 15, 20}));
}

TEST(Config, ParsesValues)
{
  const ExperimentConfig c = parse(
    "[scenario]\nname = demo\ntotal_time = 20\nnoise = true\nseed = 9\n"
    "controllers = nmpc,fpid-t1\n"
    "[nmpc]\nhorizon = 7\nq_x = 2.5\n"
    "[fpid-t1]\nengine = t1\nk_max = 4\n"
    "[horizon]\nvalues = 1, 15\n");
  EXPECT_EQ(c.name, "demo");
  EXPECT_EQ(c.total_time, 20.0);
  EXPECT_TRUE(c.noise);
  EXPECT_EQ(c.seed, 9u);
  ASSERT_EQ(c.controllers.size(), 2u);
  EXPECT_EQ(c.controllers[0].kind, ControllerKind::nmpc);
  EXPECT_EQ(c.controllers[0].nmpc.horizon, 7);
  EXPECT_EQ(c.controllers[0].nmpc.q[0], 2.5);
  EXPECT_EQ(c.controllers[1].fpid.distance.k_max, 4.0);
  EXPECT_EQ(c.horizons, (std::vector<int>{1, 15}));
}

TEST(Config, MissingControllerSection)
{
  EXPECT_THROW(parse("[scenario]\ncontrollers = fpid-it2\n"), ConfigError);
}

TEST(Config, RejectsBadValues)
{
  EXPECT_THROW(parse("[scenario]\nts = -1\n[nmpc]\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\nts = abc\n[nmpc]\n"), ConfigError);
  EXPECT_THROW(parse("[nmpc]\nhorizon = 0\n"), ConfigError);
  EXPECT_THROW(parse("[fpid-t1]\nengine = it2\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\ncontrollers = pid\n"), ConfigError);
  EXPECT_THROW(parse("[nmpc]\n[horizon]\nvalues = 5, 0\n"), ConfigError);
  EXPECT_THROW(parse("[nmpc]\n[horizon]\nvalues = 5, x\n"), ConfigError);
}

TEST(Config, WriteParseRoundTrip)
{
  ExperimentConfig c = default_experiment_config();
  c.seed = 42;
  c.noise = true;
  c.total_time = 12.5;
  c.controllers[0].fpid.distance.k_max = 3.3;
  c.controllers[0].fpid.heading.k_max = 3.3;
  c.horizons = {1, 2, 3};
  std::ostringstream out;
  write_experiment_config(out, c);
  const ExperimentConfig d = parse(out.str());
  std::ostringstream again;
  write_experiment_config(again, d);
  EXPECT_EQ(out.str(), again.str());
  EXPECT_EQ(d.seed, 42u);
  EXPECT_EQ(d.controllers.size(), 3u);
}

TEST(Config, BundledFileLoads)
{
  const ExperimentConfig c = load_experiment_config(OMNITRACK_DATA_DIR "/config.ini");
  EXPECT_EQ(c.controllers.size(), 3u);
  EXPECT_THROW(load_experiment_config(OMNITRACK_DATA_DIR "/nope.ini"), Error);
}
