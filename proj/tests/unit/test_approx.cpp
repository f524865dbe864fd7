#include "proglstm/approx.hpp"
#include "support.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>

using namespace proglstm;
using namespace proglstm::approx;

namespace {

DenseMatrix reconstruct(const GateDecomposition& d, std::size_t rows, std::size_t cols) {
  DenseMatrix out(rows, cols);
  for (const auto& s : d.steps) {
    const auto idx = s.v_pruned.indices();
    const auto val = s.v_pruned.values();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t r = 0; r < rows; ++r) {
        out(r, idx[k]) += s.sigma * s.u[r] * val[k];
      }
    }
  }
  return out;
}

double fro_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

} // namespace

TEST(Decompose, DeflationIdentityHoldsEveryStep) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto w = testsupport::random_matrix(seed, 16, 32);
    for (std::size_t nz : {4u, 8u, 16u, 32u}) {
      const auto d = decompose_gate(w, Gate::forget, nz, 12);
      for (std::size_t n = 1; n <= 12; ++n) {
        const auto& s = d.steps[n - 1];
        const double before = d.residual_fro_norms[n - 1] * d.residual_fro_norms[n - 1];
        const double after = d.residual_fro_norms[n] * d.residual_fro_norms[n];
        const double predicted = before - s.sigma * s.sigma * s.v_pruned.norm_sq();
        EXPECT_NEAR(after, predicted, 1e-6 * before) << "seed " << seed << " nz " << nz;
        EXPECT_LE(d.residual_fro_norms[n], d.residual_fro_norms[n - 1]);
      }
    }
  }
}

TEST(Decompose, ResidualNormsMatchExplicitReconstruction) {
  const auto w = testsupport::random_matrix(21, 16, 32);
  const auto d = decompose_gate(w, Gate::cell, 8, 10);
  EXPECT_NEAR(fro_diff(w, reconstruct(d, 16, 32)), d.residual_fro_norms.back(), 1e-12);
  EXPECT_DOUBLE_EQ(d.residual_fro_norms.front(), std::sqrt(linalg::frobenius_norm_sq(w)));
}

TEST(Decompose, FullWidthRecoversTheMatrixInMinRCSteps) {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const auto w = testsupport::random_matrix(seed, 16, 32);
    const auto d = decompose_gate(w, Gate::output, 32, 16);
    EXPECT_LT(d.residual_fro_norms.back(), 1e-8 * d.residual_fro_norms.front());
    EXPECT_LT(fro_diff(w, reconstruct(d, 16, 32)), 1e-8 * d.residual_fro_norms.front());
  }
}

TEST(Decompose, FullWidthStepsAreTheSvdTriplets) {
  const auto w = testsupport::random_matrix(40, 16, 32);
  const auto d = decompose_gate(w, Gate::forget, 32, 16);
  Eigen::MatrixXd e(16, 32);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 32; ++c) {
      e(r, c) = w(r, c);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  for (std::size_t n = 0; n < 16; ++n) {
    EXPECT_NEAR(d.steps[n].sigma / svd.singularValues()(n), 1.0, 1e-6) << n;
  }
}

TEST(Decompose, RankOneGateIsExhaustedAfterOneStep) {
  DenseMatrix w(3, 4);
  const double a[3] = {1.0, -2.0, 0.5};
  const double b[4] = {0.3, 0.0, 1.0, -1.0};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      w(r, c) = a[r] * b[c];
    }
  }
  const auto d = decompose_gate(w, Gate::input, 4, 3);
  EXPECT_LT(d.residual_fro_norms[1], 1e-14 * d.residual_fro_norms[0]);
  EXPECT_EQ(d.steps[0].v_pruned.nnz(), 3u);
  for (std::size_t n = 1; n < 3; ++n) {
    EXPECT_EQ(d.steps[n].sigma, 0.0);
    EXPECT_EQ(d.steps[n].v_pruned.nnz(), 0u);
  }
}

TEST(Decompose, RejectsBadArguments) {
  const auto m = io::gen_synthetic(1, 4, 3, 2);
  EXPECT_THROW(decompose(m, 0, 2), ArgumentError);
  EXPECT_THROW(decompose(m, 8, 2), ArgumentError);
  EXPECT_THROW(decompose(m, 2, 0), ArgumentError);
}

TEST(Decompose, TruncationEqualsShorterDecomposition) {
  const auto m = io::gen_synthetic(2, 6, 5, 3);
  const auto long_run = decompose(m, 4, 9);
  const auto short_run = decompose(m, 4, 5);
  EXPECT_EQ(long_run.truncated(5), short_run);
  EXPECT_THROW(long_run.truncated(10), ArgumentError);
}

TEST(Decompose, IsDeterministic) {
  const auto m = io::gen_synthetic(3, 6, 5, 3);
  EXPECT_EQ(decompose(m, 3, 7), decompose(m, 3, 7));
}

TEST(Workload, OpCounterMatchesFormula) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SplitMix64 rng(seed);
    const std::size_t d = 2 + rng.next() % 20;
    const std::size_t r = 2 + rng.next() % 12;
    const std::size_t c = d + r;
    const std::size_t nz = 1 + rng.next() % c;
    const std::size_t n = 1 + rng.next() % std::min(r, c);
    const auto m = io::gen_synthetic(seed, d, r, 3);
    const auto a = decompose(m, nz, n);
    ProgressiveSession s(a);
    s.advance(testsupport::random_vector(seed, d), n);
    EXPECT_EQ(s.gate_ops(), 4 * n * (2 * r + 2 * nz + 1));
    EXPECT_EQ(s.gate_ops(), perf::gate_workload_ops(a.shape(), nz, n, perf::Mode::approx));
    EXPECT_EQ(s.epilogue_ops(), 10 * r);
  }
}

TEST(Session, ExactConfigurationReproducesDenseOutputs) {
  const auto m = io::gen_synthetic(4, 12, 6, 4);
  const auto a = decompose(m, 18, 6);
  const auto frames = testsupport::pilot(5, 12, 20, 1).front();
  const auto ref = lstm::forward_sequence(m, frames);
  ProgressiveSession s(a);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto q = s.advance(frames[f], 6);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(q.probs[k], ref[f].probs[k], 1e-10);
    }
  }
}

TEST(Session, ZeroRefinementsGiveTheDefaultOutput) {
  const auto m = io::gen_synthetic(6, 5, 4, 3);
  const auto a = decompose(m, 3, 2);
  ProgressiveSession s(a);
  s.begin_frame(testsupport::random_vector(1, 5));
  const auto p = s.finish_frame();
  const auto want = lstm::readout(m.head, DenseVector(4, 0.5 * std::tanh(0.0)));
  EXPECT_EQ(p, want);
  EXPECT_EQ(s.gate_ops(), 0u);
}

TEST(Session, AdvanceChecksTheBudget) {
  const auto m = io::gen_synthetic(6, 5, 4, 3);
  const auto a = decompose(m, 3, 2);
  ProgressiveSession s(a);
  EXPECT_THROW(s.advance(testsupport::random_vector(1, 5), 0), ArgumentError);
  EXPECT_THROW(s.advance(testsupport::random_vector(1, 5), 3), ArgumentError);
  EXPECT_THROW(s.advance(testsupport::random_vector(1, 4), 1), ArgumentError);
  EXPECT_THROW(s.refine(), ArgumentError);
}

TEST(Session, MoreStepsRefineTheAccumulator) {
  // After k steps the accumulator equals the k-term reconstruction applied
  // to the augmented input.
  const auto m = io::gen_synthetic(8, 6, 5, 3);
  const auto a = decompose(m, 4, 5);
  ProgressiveSession s(a);
  const auto x = testsupport::random_vector(3, 6);
  s.begin_frame(x);
  for (std::size_t k = 1; k <= 5; ++k) {
    s.refine();
    const auto partial = a.truncated(k);
    const auto w = reconstruct(partial.gate(Gate::forget), 5, 11);
    const auto want = linalg::matvec(w, s.augmented_input());
    for (std::size_t r = 0; r < 5; ++r) {
      EXPECT_NEAR(s.accumulator(Gate::forget)[r], want[r], 1e-12);
    }
  }
}

TEST(Infer, StepBudgetMatchesManualSession) {
  const auto m = io::gen_synthetic(9, 6, 5, 3);
  const auto a = decompose(m, 4, 6);
  const auto seqs = testsupport::pilot(2, 6, 5, 2);
  const auto trace = infer_progressive(a, seqs, StepBudget{3});
  ASSERT_EQ(trace.entries.size(), 10u);
  ProgressiveSession s(a);
  std::size_t e = 0;
  for (const auto& seq : seqs) {
    s.reset();
    for (const auto& x : seq) {
      EXPECT_EQ(trace.entries[e].distribution, s.advance(x, 3));
      EXPECT_EQ(trace.entries[e].steps_used, 3u);
      ++e;
    }
  }
  EXPECT_EQ(trace.gate_ops, 10u * 4 * 3 * (2 * 5 + 2 * 4 + 1));
  EXPECT_THROW(infer_progressive(a, seqs, StepBudget{0}), ArgumentError);
}

TEST(Infer, ModeledBudgetUsesTheSchedule) {
  const auto m = io::gen_synthetic(10, 6, 5, 3);
  const auto a = decompose(m, 4, 8);
  const auto seqs = testsupport::pilot(3, 6, 4, 1);
  const perf::PlatformModel p;
  const auto sched = perf::ProgressSchedule::approx(a.shape(), 4, 8, 2, 2, p);
  const double budget = 0.5 * (sched.elapsed(5) + sched.elapsed(6));
  const auto trace = infer_progressive(a, seqs, ModeledTimeBudget{budget}, &sched);
  for (const auto& e : trace.entries) {
    EXPECT_EQ(e.steps_used, 5u);
    EXPECT_FALSE(e.fallback);
  }
  const auto tiny = infer_progressive(a, seqs, ModeledTimeBudget{0.5 * sched.elapsed(1)}, &sched);
  for (const auto& e : tiny.entries) {
    EXPECT_EQ(e.steps_used, 0u);
    EXPECT_TRUE(e.fallback);
  }
  const auto all = infer_progressive(a, seqs, ModeledTimeBudget{1.0}, &sched);
  EXPECT_EQ(all.entries.front().steps_used, 8u);
  EXPECT_THROW(infer_progressive(a, seqs, ModeledTimeBudget{budget}), ArgumentError);
}

TEST(Infer, WallClockBudgetRunsAllStepsWhenGenerous) {
  const auto m = io::gen_synthetic(11, 4, 3, 2);
  const auto a = decompose(m, 2, 3);
  const auto seqs = testsupport::pilot(1, 4, 3, 1);
  const auto trace = infer_progressive(a, seqs, WallClockBudget{10.0});
  for (const auto& e : trace.entries) {
    EXPECT_EQ(e.steps_used, 3u);
  }
}
