#pragma once

#include "proglstm/linalg.hpp"
#include "proglstm/lstm.hpp"
#include "proglstm/perfmodel.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace proglstm::approx {

using linalg::DenseMatrix;
using linalg::DenseVector;
using linalg::OpCounter;
using linalg::SparseVector;
using lstm::Gate;

/// One rank-1 correction sigma * u * p^T of a gate matrix, with p the
/// magnitude-pruned right singular vector of the current residual.
struct RefinementStep {
  double sigma = 0.0;
  DenseVector u;
  SparseVector v_pruned;
  /// Residual had a (nearly) repeated top singular value at this step.
  bool near_degenerate = false;

  bool operator==(const RefinementStep& o) const {
    return sigma == o.sigma && u == o.u && v_pruned == o.v_pruned;
  }
};

struct GateDecomposition {
  Gate gate = Gate::forget;
  std::size_t nz = 0;
  std::vector<RefinementStep> steps;
  /// ||R^(n)||_F for n = 0..steps.size(); entry 0 is ||W||_F.
  std::vector<double> residual_fro_norms;

  bool operator==(const GateDecomposition&) const = default;
};

struct ApproxConfig {
  std::size_t nz = 0;
  std::size_t n_steps = 0;
  bool operator==(const ApproxConfig&) const = default;
};

/// Progressive LSTM: every gate replaced by the same number of ordered
/// refinement steps; the head is kept dense.
struct ApproxLstm {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<GateDecomposition, lstm::kGateCount> gates;
  DenseMatrix head;
  ApproxConfig config;
  /// lstm::fingerprint of the source model.
  std::string source_fingerprint;

  std::size_t augmented_dim() const noexcept { return input_dim + hidden_dim; }
  std::size_t actions() const noexcept { return head.rows(); }
  perf::LstmShape shape() const noexcept { return {input_dim, hidden_dim}; }
  const GateDecomposition& gate(Gate g) const noexcept {
    return gates[static_cast<std::size_t>(g)];
  }

  /// The first n_steps refinement steps of every gate. Decomposition is
  /// sequential, so this equals decomposing with n_steps directly.
  ApproxLstm truncated(std::size_t n_steps) const;

  /// Throws ArgumentError when shapes or step counts are inconsistent.
  void validate() const;

  bool operator==(const ApproxLstm&) const = default;
};

struct DecomposeOptions {
  linalg::TripletOptions triplet;
  /// A residual whose Frobenius norm falls to this fraction of ||W||_F or
  /// below is treated as exhausted: later steps are stored as sigma = 0
  /// with an empty pruned vector.
  double exhausted_rel = 1e-13;
};

/// Hybrid rank-1-plus-pruning decomposition of every gate:
///   R^(0) = W; (sigma, u, v) = leading_triplet(R^(n-1)); p = prune(v, nz);
///   R^(n) = R^(n-1) - sigma u p^T.
/// The residual is kept as an explicit dense matrix.
ApproxLstm decompose(const lstm::LstmModel& model, std::size_t nz, std::size_t n_steps,
                     const DecomposeOptions& options = {});

GateDecomposition decompose_gate(const DenseMatrix& w, Gate gate, std::size_t nz,
                                 std::size_t n_steps, const DecomposeOptions& options = {});

/// Per-step gate cost 2 * nnz(p) + 1 + 2R (dot, scalar multiply, scaled
/// accumulate).
std::uint64_t step_ops(const RefinementStep& step) noexcept;

/// accumulator += sigma * (p . x_aug) * u, charging step_ops(step).
void gate_step_apply(const RefinementStep& step, const DenseVector& x_aug,
                     DenseVector& accumulator, OpCounter* counter = nullptr);

/// Anytime inference state over one ApproxLstm. The model must outlive the
/// session. A frame is processed as begin_frame, any number of refine calls
/// (all four gates advance together), then finish_frame.
class ProgressiveSession {
public:
  explicit ProgressiveSession(const ApproxLstm& model);

  /// Zero recurrent state; counters are kept.
  void reset();

  void begin_frame(const DenseVector& frame);
  /// Applies the next refinement step of every gate.
  void refine();
  /// Elementwise stage on the accumulated pre-activations, commits the new
  /// state and returns the readout. Valid with zero refinements, which gives
  /// the sigma(0)/tanh(0) default output.
  lstm::ActionDistribution finish_frame();

  /// begin_frame, steps_budget refinements, finish_frame.
  /// steps_budget must lie in [1, N_steps].
  lstm::ActionDistribution advance(const DenseVector& frame, std::size_t steps_budget);

  const lstm::LstmState& state() const noexcept { return state_; }
  void set_state(lstm::LstmState state);
  std::size_t steps_done() const noexcept { return steps_done_; }
  const DenseVector& accumulator(Gate g) const noexcept {
    return acc_[static_cast<std::size_t>(g)];
  }
  const DenseVector& augmented_input() const noexcept { return x_aug_; }

  std::uint64_t gate_ops() const noexcept { return gate_ops_.ops; }
  std::uint64_t epilogue_ops() const noexcept { return epilogue_ops_.ops; }
  void reset_counters() noexcept {
    gate_ops_ = {};
    epilogue_ops_ = {};
  }

private:
  const ApproxLstm* model_;
  lstm::LstmState state_;
  lstm::PreActivations acc_;
  DenseVector x_aug_;
  std::size_t steps_done_ = 0;
  bool in_frame_ = false;
  OpCounter gate_ops_;
  OpCounter epilogue_ops_;
};

/// Same number of refinement steps for every frame.
struct StepBudget {
  std::size_t steps = 0;
};
/// Modeled time per frame; the number of steps comes from a ProgressSchedule.
struct ModeledTimeBudget {
  double seconds = 0.0;
};
/// Host wall-clock time per frame. Not reproducible; for demos only.
struct WallClockBudget {
  double seconds = 0.0;
};
using Budget = std::variant<StepBudget, ModeledTimeBudget, WallClockBudget>;

struct TraceEntry {
  std::size_t sequence = 0;
  std::size_t frame = 0;
  std::size_t steps_used = 0;
  /// The budget did not cover a single step: zero-step default output.
  bool fallback = false;
  lstm::ActionDistribution distribution;

  bool operator==(const TraceEntry&) const = default;
};

struct InferenceTrace {
  std::vector<TraceEntry> entries;
  std::uint64_t gate_ops = 0;
  std::uint64_t epilogue_ops = 0;

  bool operator==(const InferenceTrace&) const = default;
};

/// Runs every sequence from a zero state. Time budgets are cut at whole
/// steps; partially executed steps are discarded. A ModeledTimeBudget needs
/// a schedule whose unit count covers the model's N_steps.
InferenceTrace infer_progressive(const ApproxLstm& model, std::span<const lstm::Sequence> sequences,
                                 const Budget& budget,
                                 const perf::ProgressSchedule* schedule = nullptr);

} // namespace proglstm::approx
