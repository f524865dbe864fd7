#include "proglstm/perfmodel.hpp"
#include "proglstm/error.hpp"
#include "proglstm/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace proglstm;
using namespace proglstm::perf;

TEST(Workload, ClosedForms) {
  const LstmShape s{192, 64};
  EXPECT_EQ(gate_workload_ops(s, 32, 10, Mode::approx), 4u * 10 * (2 * 64 + 2 * 32 + 1));
  EXPECT_EQ(gate_workload_ops(s, 1, 1, Mode::baseline), 4u * 2 * 64 * 256);
  EXPECT_EQ(workload_ops(s, 32, 10, Mode::approx), 4u * 10 * 193 + 640);
}

TEST(Workload, CaseStudyDimensions) {
  // Case-study model: R = 64 hidden units and C = 8320 augmented inputs.
  const LstmShape s{8256, 64};
  EXPECT_EQ(s.augmented_dim(), 8320u);
  EXPECT_EQ(gate_workload_ops(s, 1, 1, Mode::baseline), 4u * 2 * 64 * 8320);
}

TEST(Traffic, PoliciesAddUp) {
  const LstmShape s{10, 6};
  PlatformModel p;
  EXPECT_EQ(weight_traffic_bytes(s, 5, 3, Mode::approx, p), 4u * 3 * 5 * 4);
  p.traffic_policy = TrafficPolicy::values_plus_indices;
  EXPECT_EQ(weight_traffic_bytes(s, 5, 3, Mode::approx, p), 4u * 3 * (5 * 4 + 5 * 4));
  p.traffic_policy = TrafficPolicy::values_indices_u_sigma;
  EXPECT_EQ(weight_traffic_bytes(s, 5, 3, Mode::approx, p), 4u * 3 * (5 * 4 + 5 * 4 + 7 * 4));
  EXPECT_EQ(weight_traffic_bytes(s, 5, 3, Mode::baseline, p), 4u * 6 * 16 * 4);
  EXPECT_EQ(io_traffic_bytes(s, p), 16u * 4);
}

TEST(Roofline, MemoryBoundPointAtHalfOpPerByte) {
  PlatformModel p;
  p.mem_bandwidth = 4e9;
  p.bytes_per_weight = 8;
  // 240 ops over 480 weight bytes.
  const auto dp = roofline_point({{1, 2}, Mode::approx, 3, 5, 2, 3}, p);
  EXPECT_EQ(dp.ops_per_inference, 240u);
  EXPECT_EQ(dp.weight_bytes_per_inference, 480u);
  EXPECT_EQ(dp.ctc, 0.5);
  EXPECT_EQ(dp.attainable_gops, 2.0);
  EXPECT_EQ(dp.bound, Bound::memory);
  EXPECT_DOUBLE_EQ(dp.modeled_latency, 240.0 / 2e9);
}

TEST(Roofline, AttainableIsTheMinimumOfBothArms) {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    PlatformModel p;
    p.mem_bandwidth = 1e8 + rng.uniform() * 2e10;
    p.clock = 5e7 + rng.uniform() * 5e8;
    p.mac_budget = 100000;
    p.traffic_policy = static_cast<TrafficPolicy>(rng.next() % 3);
    const LstmShape s{1 + rng.next() % 300, 1 + rng.next() % 80};
    const bool base = rng.next() % 4 == 0;
    const std::size_t nz = 1 + rng.next() % s.augmented_dim();
    const std::size_t n = 1 + rng.next() % 100;
    const std::size_t t_r = 1 + rng.next() % s.hidden_dim;
    const std::size_t t_c = 1 + rng.next() % (base ? s.augmented_dim() : nz);
    const auto dp = roofline_point({s, base ? Mode::baseline : Mode::approx, nz, n, t_r, t_c}, p);
    const double peak = peak_ops_per_second(t_r, t_c, p);
    const double mem = dp.ctc * p.mem_bandwidth;
    ASSERT_EQ(dp.attainable_gops, std::min(peak, mem) / 1e9);
    ASSERT_EQ(dp.bound, mem <= peak ? Bound::memory : Bound::compute);
    ASSERT_EQ(dp.ctc, static_cast<double>(dp.ops_per_inference) /
                          static_cast<double>(dp.weight_bytes_per_inference));
    ASSERT_EQ(dp.modeled_latency,
              static_cast<double>(dp.ops_per_inference) / std::min(peak, mem));
  }
}

TEST(Roofline, SparserConfigurationsHaveHigherCtc) {
  const PlatformModel p;
  for (const LstmShape s : {LstmShape{192, 64}, LstmShape{8256, 64}, LstmShape{3, 2}}) {
    for (std::size_t n : {1u, 16u, 64u}) {
      double prev = 1e300;
      for (std::size_t nz = 1; nz <= s.augmented_dim(); nz += 1 + nz / 8) {
        const double ctc = roofline_point({s, Mode::approx, nz, n, 1, 1}, p).ctc;
        ASSERT_LT(ctc, prev) << "nz " << nz;
        prev = ctc;
      }
    }
  }
}

TEST(Roofline, OperatorBudgetMarksInfeasible) {
  PlatformModel p;
  p.mac_budget = 40;
  const auto dp = roofline_point({{10, 8}, Mode::approx, 4, 2, 2, 4}, p);
  EXPECT_FALSE(dp.feasible);
  EXPECT_EQ(dp.resource_macs, 48u);
  EXPECT_FALSE(dp.infeasible_reason.empty());
}

TEST(Roofline, RejectsOutOfRangeTiles) {
  const PlatformModel p;
  EXPECT_THROW(roofline_point({{10, 8}, Mode::approx, 4, 2, 9, 1}, p), ArgumentError);
  EXPECT_THROW(roofline_point({{10, 8}, Mode::approx, 4, 2, 1, 5}, p), ArgumentError);
  EXPECT_THROW(roofline_point({{10, 8}, Mode::approx, 0, 2, 1, 1}, p), ArgumentError);
  EXPECT_NO_THROW(roofline_point({{10, 8}, Mode::baseline, 1, 1, 8, 18}, p));
}

TEST(Roofline, IoTrafficExtendsTheMemoryTerm) {
  PlatformModel p;
  p.include_io_traffic = true;
  const LstmShape s{20, 10};
  const auto dp = roofline_point({s, Mode::approx, 5, 3, 2, 2}, p);
  const double want =
      std::max(static_cast<double>(dp.ops_per_inference) / peak_ops_per_second(2, 2, p),
               static_cast<double>(dp.weight_bytes_per_inference + io_traffic_bytes(s, p)) /
                   p.mem_bandwidth);
  EXPECT_EQ(dp.modeled_latency, want);
}

TEST(BestTiling, MatchesExhaustiveSearch) {
  PlatformModel p;
  p.mac_budget = 200;
  for (std::size_t nz : {1u, 5u, 17u, 40u}) {
    const LstmShape s{30, 12};
    const auto best = best_tiling(s, Mode::approx, nz, 7, p);
    double top = -1.0;
    for (std::size_t t_r = 1; t_r <= 12; ++t_r) {
      for (std::size_t t_c = 1; t_c <= nz; ++t_c) {
        const auto dp = roofline_point({s, Mode::approx, nz, 7, t_r, t_c}, p);
        if (dp.feasible) {
          top = std::max(top, dp.attainable_gops);
        }
      }
    }
    EXPECT_EQ(best.attainable_gops, top);
    EXPECT_TRUE(best.feasible);
    // No feasible tiling with the same performance uses fewer operators.
    for (std::size_t t_r = 1; t_r <= 12; ++t_r) {
      for (std::size_t t_c = 1; t_c <= nz; ++t_c) {
        const auto dp = roofline_point({s, Mode::approx, nz, 7, t_r, t_c}, p);
        if (dp.feasible && dp.attainable_gops == top) {
          EXPECT_GE(dp.resource_macs, best.resource_macs);
        }
      }
    }
  }
  p.mac_budget = 10;
  EXPECT_THROW(best_tiling({30, 12}, Mode::approx, 5, 3, p), InfeasibleError);
}

TEST(Calibration, RoundTripsTheAnchorLatency) {
  const PlatformModel p;
  const DesignInputs in{{192, 64}, Mode::approx, 32, 64, 1, 8};
  for (double latency : {1e-4, 3.3e-5, 2e-3}) {
    PlatformModel q = p;
    q.mem_bandwidth = calibrate_bandwidth(latency, in, p);
    const double got = roofline_point(in, q).modeled_latency;
    EXPECT_NEAR(got / latency, 1.0, 1e-9);
  }
  // Faster than the compute roof: not identifiable.
  EXPECT_THROW(calibrate_bandwidth(1e-9, in, p), ArgumentError);
}

TEST(Schedule, ElapsedIsMonotoneAndEndsAtFullLatency) {
  const PlatformModel p;
  const LstmShape s{192, 64};
  const auto a = ProgressSchedule::approx(s, 32, 20, 1, 8, p);
  EXPECT_EQ(a.units(), 20u);
  EXPECT_EQ(a.elapsed(0), 0.0);
  EXPECT_EQ(a.full_latency(), roofline_point({s, Mode::approx, 32, 20, 1, 8}, p).modeled_latency);
  const auto b = ProgressSchedule::baseline(s, 5, 16, p);
  EXPECT_EQ(b.units(), 13u);
  EXPECT_EQ(b.full_latency(), roofline_point({s, Mode::baseline, 1, 1, 5, 16}, p).modeled_latency);
  for (const auto* sch : {&a, &b}) {
    for (std::size_t k = 1; k <= sch->units(); ++k) {
      EXPECT_GT(sch->elapsed(k), sch->elapsed(k - 1));
    }
    EXPECT_EQ(sch->units_within(0.0), 0u);
    EXPECT_EQ(sch->units_within(sch->full_latency()), sch->units());
    EXPECT_EQ(sch->units_within(sch->elapsed(3)), 3u);
    EXPECT_EQ(sch->units_within(std::nextafter(sch->elapsed(3), 0.0)), 2u);
  }
}

TEST(Platform, ParsesAndFormats) {
  const auto p = parse_platform("# board\nbandwidth = 2.5e9  # measured\nclock=2e8\n"
                                "mac_budget = 512\ntraffic_policy = values-plus-indices\n"
                                "include_io_traffic = true\n");
  EXPECT_EQ(p.mem_bandwidth, 2.5e9);
  EXPECT_EQ(p.clock, 2e8);
  EXPECT_EQ(p.mac_budget, 512u);
  EXPECT_EQ(p.traffic_policy, TrafficPolicy::values_plus_indices);
  EXPECT_TRUE(p.include_io_traffic);
  const auto q = parse_platform(format_platform(p));
  EXPECT_EQ(q.mem_bandwidth, p.mem_bandwidth);
  EXPECT_EQ(q.mac_budget, p.mac_budget);
  EXPECT_EQ(q.traffic_policy, p.traffic_policy);
  EXPECT_THROW(parse_platform("speed = 3\n"), ArgumentError);
  EXPECT_THROW(parse_platform("bandwidth = fast\n"), ArgumentError);
  EXPECT_THROW(parse_platform("bandwidth = -1\n"), ArgumentError);
  EXPECT_THROW(load_platform("/nonexistent/platform.cfg"), FormatError);
}
