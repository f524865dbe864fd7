#include "proglstm/qor.hpp"
#include "support.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace proglstm;
using namespace proglstm::qor;
using lstm::ActionDistribution;

namespace {

using Big = boost::multiprecision::cpp_dec_float_50;

double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  Big s = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    const Big pa = std::max(p[a], kClamp);
    const Big qa = std::max(q[a], kClamp);
    s += pa * boost::multiprecision::log(pa / qa);
  }
  return s.convert_to<double>();
}

ActionDistribution random_distribution(SplitMix64& rng, std::size_t n) {
  ActionDistribution d;
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double u = rng.uniform();
    d.probs.push_back(u * u * u);
    sum += d.probs.back();
  }
  for (double& p : d.probs) {
    p /= sum;
  }
  return d;
}

} // namespace

TEST(Kl, ClosedFormExample) {
  // 0.5 ln 2 + 0.5 ln(2/3) = 0.5 ln(4/3)
  const double got = kl_divergence({{0.5, 0.5}}, {{0.25, 0.75}});
  EXPECT_NEAR(got, 0.14384103622589046, 1e-15);
  EXPECT_NEAR(got, kl_oracle({0.5, 0.5}, {0.25, 0.75}), 1e-15);
}

TEST(Kl, IdenticalDistributionsGiveZero) {
  SplitMix64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_distribution(rng, 2 + i % 7);
    EXPECT_EQ(kl_divergence(p, p), 0.0);
  }
}

TEST(Kl, MatchesHighPrecisionOracle) {
  SplitMix64 rng(99);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.next() % 10;
    const auto p = random_distribution(rng, n);
    const auto q = random_distribution(rng, n);
    const double got = kl_divergence(p, q);
    EXPECT_NEAR(got, kl_oracle(p.probs, q.probs), 1e-12);
    EXPECT_GE(got, -1e-9);
  }
}

TEST(Kl, ClampingKeepsZerosFinite) {
  const double got = kl_divergence({{0.5, 0.5}}, {{1.0, 0.0}});
  EXPECT_TRUE(std::isfinite(got));
  EXPECT_GT(got, 10.0);
  EXPECT_THROW(kl_divergence({{1.0}}, {{0.5, 0.5}}), ArgumentError);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), ArgumentError);
}

TEST(Profile, ExactConfigurationReachesZeroOnEverySequence) {
  const auto m = io::gen_synthetic(1, 24, 8, 4);
  const auto a = approx::decompose(m, 32, 8);
  const auto pilot = testsupport::pilot(2, 24, 15, 3);
  const auto rec = profile(m, a, pilot, {false, true});
  ASSERT_EQ(rec.per_step.size(), 8u);
  EXPECT_EQ(rec.frames_evaluated, 45u);
  EXPECT_LT(rec.per_step.back().median, 1e-9);
  for (double kl : rec.raw_kl.back()) {
    EXPECT_LT(kl, 1e-9);
  }
  for (const auto& s : rec.per_step) {
    EXPECT_TRUE(std::isfinite(s.median) && std::isfinite(s.mean) && std::isfinite(s.max));
    EXPECT_GE(s.median, -1e-9);
    EXPECT_LE(s.median, s.max);
  }
  EXPECT_EQ(steps_to_reach(rec, 1e-9).value_or(0) <= 8, true);
}

TEST(Profile, IsDeterministicAndHashesThePilot) {
  const auto m = io::gen_synthetic(3, 10, 6, 3);
  const auto a = approx::decompose(m, 5, 6);
  const auto pilot = testsupport::pilot(4, 10, 10, 2);
  const auto r1 = profile(m, a, pilot);
  const auto r2 = profile(m, a, pilot);
  EXPECT_EQ(r1, r2);
  io::Dataset d{10, pilot};
  EXPECT_EQ(r1.dataset_hash, io::dataset_hash(d));
}

TEST(Profile, SelfConsistentAndTeacherForcedDiffer) {
  const auto m = io::gen_synthetic(5, 10, 6, 3);
  const auto a = approx::decompose(m, 4, 4);
  const auto pilot = testsupport::pilot(6, 10, 12, 1);
  const auto own = profile(m, a, pilot);
  const auto forced = profile(m, a, pilot, {true, false});
  EXPECT_TRUE(forced.teacher_forced);
  EXPECT_NE(own.per_step.front().mean, forced.per_step.front().mean);
}

TEST(Profile, RejectsEmptyOrMismatchedPilot) {
  const auto m = io::gen_synthetic(5, 10, 6, 3);
  const auto a = approx::decompose(m, 4, 2);
  std::vector<lstm::Sequence> empty;
  EXPECT_THROW(profile(m, a, empty), ArgumentError);
  EXPECT_THROW(profile(m, a, testsupport::pilot(1, 9, 3, 1)), ArgumentError);
}

TEST(StepsToReach, FirstBudgetUnderThreshold) {
  QoRRecord r;
  for (double v : {0.5, 0.2, 0.05, 0.07, 0.01}) {
    r.per_step.push_back({v, v, v, v});
  }
  EXPECT_EQ(steps_to_reach(r, 0.1), 3u);
  EXPECT_EQ(steps_to_reach(r, 0.01), 5u);
  EXPECT_FALSE(steps_to_reach(r, 0.001).has_value());
}

TEST(CompareBaseline, EndpointsBehaveByConstruction) {
  const auto m = io::gen_synthetic(7, 20, 8, 4);
  const auto a = approx::decompose(m, 7, 8);
  const auto pilot = testsupport::pilot(8, 20, 10, 2);
  const perf::PlatformModel p;
  const auto t = default_tilings(a, p);
  const double full = perf::ProgressSchedule::baseline(a.shape(), t.baseline_t_r,
                                                       t.baseline_t_c, p)
                          .full_latency();
  const double first_step = perf::ProgressSchedule::approx(a.shape(), 7, 8, t.approx_t_r,
                                                           t.approx_t_c, p)
                                .elapsed(1);
  const std::vector<double> budgets{0.5 * std::min(first_step, full / 1000), full, 2 * full};
  const auto rows = compare_baseline(m, a, pilot, p, budgets);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].approx_steps, 0u);
  EXPECT_TRUE(rows[0].approx_fallback);
  EXPECT_EQ(rows[0].baseline_tiles, 0u);
  EXPECT_EQ(rows[0].approx_median_kl, rows[0].baseline_median_kl);
  EXPECT_EQ(rows[0].approx_mean_kl, rows[0].baseline_mean_kl);
  EXPECT_EQ(rows[1].baseline_median_kl, 0.0);
  EXPECT_EQ(rows[1].baseline_mean_kl, 0.0);
  EXPECT_EQ(rows[2].baseline_mean_kl, 0.0);
  EXPECT_EQ(rows[2].approx_steps, 8u);
}

TEST(CompareBaseline, BudgetsMustBePositiveAscending) {
  const auto m = io::gen_synthetic(7, 20, 8, 4);
  const auto a = approx::decompose(m, 7, 2);
  const auto pilot = testsupport::pilot(8, 20, 2, 1);
  const perf::PlatformModel p;
  EXPECT_THROW(compare_baseline(m, a, pilot, p, std::vector<double>{2e-6, 1e-6}), ArgumentError);
  EXPECT_THROW(compare_baseline(m, a, pilot, p, std::vector<double>{0.0}), ArgumentError);
}
