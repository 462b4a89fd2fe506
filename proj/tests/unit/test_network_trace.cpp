#include <gtest/gtest.h>

#include <random>

#include "shortvid/domain.hpp"
#include "shortvid/network_trace.hpp"

namespace shortvid {
namespace {

NetworkTrace two_step(double rtt = 0.0) { return NetworkTrace({{0.0, 1.0}, {1.0, 3.0}}, rtt); }

TEST(DownloadTime, ConstantRate) {
  EXPECT_DOUBLE_EQ(download_time(1'000'000, NetworkTrace::constant(8.0, 0.0), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(download_time(1'000'000, NetworkTrace::constant(8.0, 0.006), 0.0), 1.006);
}

TEST(DownloadTime, CrossesSegmentBoundary) {
  EXPECT_NEAR(download_time(250'000, two_step(), 0.0), 4.0 / 3.0, 1e-12);
}

TEST(DownloadTime, WrapsAroundPeriod) {
  const auto trace = two_step();
  EXPECT_DOUBLE_EQ(trace.period_s(), 2.0);
  // One period delivers 4 Mbit; 5 Mbit from t=0 ends one second into the second period.
  EXPECT_NEAR(download_time(625'000, trace, 0.0), 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(trace.rate_at(2.5), 1.0);
  EXPECT_DOUBLE_EQ(trace.rate_at(3.5), 3.0);
}

TEST(DownloadTime, RttDelaysTransfer) {
  EXPECT_NEAR(download_time(125'000, two_step(0.5), 0.0), 1.0 + 0.5 / 3.0, 1e-12);
}

TEST(DownloadTime, ZeroBytesTakesOnlyRtt) {
  EXPECT_DOUBLE_EQ(download_time(0, two_step(0.25), 7.0), 7.25);
}

TEST(NetworkTraceProperties, CumulativeAndInverseAgree) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 9.0);
  std::vector<NetworkTrace::Segment> segs;
  for (int k = 0; k < 12; ++k) segs.push_back({0.5 * k, u(rng)});
  const NetworkTrace trace(segs, 0.0);
  for (double t = 0.0; t < 40.0; t += 0.37) {
    EXPECT_NEAR(trace.time_at_megabits(trace.cumulative_megabits(t)), t, 1e-9);
  }
}

TEST(NetworkTraceProperties, DownloadTimeMonotoneInBytes) {
  const auto trace = two_step(0.006);
  double prev = 0.0;
  for (std::uint64_t b = 0; b < 3'000'000; b += 37'000) {
    const double t = download_time(b, trace, 0.4);
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(NetworkTraceProperties, ScaledMultipliesRates) {
  const auto s = two_step().scaled(2.0);
  EXPECT_DOUBLE_EQ(s.rate_at(0.5), 2.0);
  EXPECT_DOUBLE_EQ(s.rate_at(1.5), 6.0);
  EXPECT_DOUBLE_EQ(s.mean_mbps(), 4.0);
}

TEST(NetworkTraceValidation, RejectsBadRows) {
  EXPECT_THROW(NetworkTrace(std::vector<NetworkTrace::Segment>{}), ValidationError);
  EXPECT_THROW(NetworkTrace({{0.0, 1.0}, {1.0, 0.0}}), ValidationError);
  EXPECT_THROW(NetworkTrace({{0.5, 1.0}}), ValidationError);
  EXPECT_THROW(NetworkTrace({{0.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}}), ValidationError);
  try {
    NetworkTrace({{0.0, -1.0}, {1.0, 2.0}});
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.violations().size(), 1u);
    EXPECT_EQ(e.violations()[0], "trace: non-positive rate at row 1");
  }
}

TEST(NetworkTraceProperties, ConstantTraceHasNoPeriod) {
  const auto c = NetworkTrace::constant(3.0);
  EXPECT_TRUE(c.is_constant());
  EXPECT_DOUBLE_EQ(c.cumulative_megabits(10.0), 30.0);
  EXPECT_DOUBLE_EQ(c.rtt_s(), 0.006);
}

}  // namespace
}  // namespace shortvid
