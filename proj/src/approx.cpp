#include "proglstm/approx.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace proglstm::approx {

namespace {

RefinementStep exhausted_step(std::size_t rows, std::size_t cols) {
  RefinementStep s;
  s.u = DenseVector(rows);
  s.u[0] = 1.0;
  s.v_pruned = SparseVector(cols, {}, {});
  return s;
}

} // namespace

ApproxLstm ApproxLstm::truncated(std::size_t n_steps) const {
  if (n_steps < 1 || n_steps > config.n_steps) {
    throw ArgumentError("ApproxLstm::truncated: n_steps must lie in [1, " +
                        std::to_string(config.n_steps) + "]");
  }
  ApproxLstm out = *this;
  out.config.n_steps = n_steps;
  for (auto& g : out.gates) {
    g.steps.resize(n_steps);
    g.residual_fro_norms.resize(n_steps + 1);
  }
  return out;
}

void ApproxLstm::validate() const {
  if (input_dim < 1 || hidden_dim < 1) {
    throw ArgumentError("ApproxLstm: dimensions must be >= 1");
  }
  if (head.cols() != hidden_dim || head.rows() < 2) {
    throw ArgumentError("ApproxLstm: head must be A x R with A >= 2");
  }
  if (config.nz < 1 || config.nz > augmented_dim() || config.n_steps < 1) {
    throw ArgumentError("ApproxLstm: invalid (nz, n_steps)");
  }
  for (Gate g : lstm::kGateOrder) {
    const auto& d = gate(g);
    if (d.gate != g || d.nz != config.nz || d.steps.size() != config.n_steps ||
        d.residual_fro_norms.size() != config.n_steps + 1) {
      throw ArgumentError(std::string("ApproxLstm: gate ") + lstm::gate_tag(g) +
                          " disagrees with the shared configuration");
    }
    for (const auto& s : d.steps) {
      if (s.u.size() != hidden_dim || s.v_pruned.size() != augmented_dim() ||
          s.v_pruned.nnz() > config.nz || !(s.sigma >= 0.0)) {
        throw ArgumentError(std::string("ApproxLstm: malformed step in gate ") +
                            lstm::gate_tag(g));
      }
    }
  }
}

GateDecomposition decompose_gate(const DenseMatrix& w, Gate gate, std::size_t nz,
                                 std::size_t n_steps, const DecomposeOptions& options) {
  if (nz < 1 || nz > w.cols()) {
    throw ArgumentError("decompose: nz must lie in [1, C] (C = " + std::to_string(w.cols()) +
                        ")");
  }
  if (n_steps < 1) {
    throw ArgumentError("decompose: n_steps must be >= 1");
  }
  GateDecomposition out;
  out.gate = gate;
  out.nz = nz;
  out.steps.reserve(n_steps);
  out.residual_fro_norms.reserve(n_steps + 1);

  DenseMatrix residual = w;
  const double w_norm = std::sqrt(linalg::frobenius_norm_sq(w));
  double norm = w_norm;
  out.residual_fro_norms.push_back(norm);
  bool exhausted = false;

  for (std::size_t n = 1; n <= n_steps; ++n) {
    exhausted = exhausted || norm <= options.exhausted_rel * w_norm;
    if (exhausted) {
      out.steps.push_back(exhausted_step(w.rows(), w.cols()));
      out.residual_fro_norms.push_back(norm);
      continue;
    }
    linalg::SingularTriplet t;
    try {
      t = linalg::leading_triplet(residual, options.triplet);
    } catch (const linalg::ConvergenceError& e) {
      throw linalg::ConvergenceError(std::string("decompose: gate ") + lstm::gate_tag(gate) +
                                         ", step " + std::to_string(n) + ": " + e.what(),
                                     e.last_iterate());
    }
    RefinementStep step;
    step.sigma = t.sigma;
    step.near_degenerate = t.near_degenerate;
    step.v_pruned = linalg::prune_vector(t.v, nz);
    step.u = std::move(t.u);

    const auto idx = step.v_pruned.indices();
    const auto val = step.v_pruned.values();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double coef = step.sigma * val[k];
      const std::size_t col = idx[k];
      for (std::size_t r = 0; r < residual.rows(); ++r) {
        residual(r, col) -= coef * step.u[r];
      }
    }
    norm = std::sqrt(linalg::frobenius_norm_sq(residual));
    out.residual_fro_norms.push_back(norm);
    out.steps.push_back(std::move(step));
  }
  return out;
}

ApproxLstm decompose(const lstm::LstmModel& model, std::size_t nz, std::size_t n_steps,
                     const DecomposeOptions& options) {
  model.validate();
  if (nz < 1 || nz > model.augmented_dim()) {
    throw ArgumentError("decompose: nz must lie in [1, C] (C = " +
                        std::to_string(model.augmented_dim()) + ")");
  }
  ApproxLstm out;
  out.input_dim = model.input_dim;
  out.hidden_dim = model.hidden_dim;
  out.head = model.head;
  out.config = {nz, n_steps};
  out.source_fingerprint = lstm::fingerprint(model);
  for (Gate g : lstm::kGateOrder) {
    out.gates[static_cast<std::size_t>(g)] = decompose_gate(model.gate(g), g, nz, n_steps, options);
  }
  return out;
}

std::uint64_t step_ops(const RefinementStep& step) noexcept {
  return 2 * step.v_pruned.nnz() + 1 + 2 * step.u.size();
}

void gate_step_apply(const RefinementStep& step, const DenseVector& x_aug,
                     DenseVector& accumulator, OpCounter* counter) {
  if (accumulator.size() != step.u.size()) {
    throw ArgumentError("gate_step_apply: accumulator length " +
                        std::to_string(accumulator.size()) + " != R " +
                        std::to_string(step.u.size()));
  }
  const double d = linalg::sparse_dot(step.v_pruned, x_aug, counter);
  const double coef = step.sigma * d;
  linalg::charge(counter, 1);
  double* acc = accumulator.data();
  const double* u = step.u.data();
  for (std::size_t r = 0; r < accumulator.size(); ++r) {
    acc[r] += coef * u[r];
  }
  linalg::charge(counter, 2 * accumulator.size());
}

ProgressiveSession::ProgressiveSession(const ApproxLstm& model)
    : model_(&model), state_(lstm::LstmState::zeros(model.hidden_dim)) {
  model.validate();
}

void ProgressiveSession::reset() {
  state_ = lstm::LstmState::zeros(model_->hidden_dim);
  in_frame_ = false;
  steps_done_ = 0;
}

void ProgressiveSession::set_state(lstm::LstmState state) {
  if (state.c.size() != model_->hidden_dim || state.h.size() != model_->hidden_dim) {
    throw ArgumentError("ProgressiveSession::set_state: length must equal hidden_dim");
  }
  state_ = std::move(state);
}

void ProgressiveSession::begin_frame(const DenseVector& frame) {
  if (frame.size() != model_->input_dim) {
    throw ArgumentError("ProgressiveSession: frame length " + std::to_string(frame.size()) +
                        " != D " + std::to_string(model_->input_dim));
  }
  x_aug_ = lstm::augmented_input(frame, state_.h);
  for (auto& a : acc_) {
    a = DenseVector(model_->hidden_dim);
  }
  steps_done_ = 0;
  in_frame_ = true;
}

void ProgressiveSession::refine() {
  if (!in_frame_) {
    throw ArgumentError("ProgressiveSession::refine: no frame in progress");
  }
  if (steps_done_ >= model_->config.n_steps) {
    throw ArgumentError("ProgressiveSession::refine: all refinement steps already applied");
  }
  for (Gate g : lstm::kGateOrder) {
    const std::size_t gi = static_cast<std::size_t>(g);
    gate_step_apply(model_->gates[gi].steps[steps_done_], x_aug_, acc_[gi], &gate_ops_);
  }
  ++steps_done_;
}

lstm::ActionDistribution ProgressiveSession::finish_frame() {
  if (!in_frame_) {
    throw ArgumentError("ProgressiveSession::finish_frame: no frame in progress");
  }
  state_ = lstm::apply_epilogue(acc_, state_, &epilogue_ops_);
  in_frame_ = false;
  return lstm::readout(model_->head, state_.h);
}

lstm::ActionDistribution ProgressiveSession::advance(const DenseVector& frame,
                                                     std::size_t steps_budget) {
  if (steps_budget < 1 || steps_budget > model_->config.n_steps) {
    throw ArgumentError("session_advance: steps_budget must lie in [1, " +
                        std::to_string(model_->config.n_steps) + "], got " +
                        std::to_string(steps_budget));
  }
  begin_frame(frame);
  for (std::size_t k = 0; k < steps_budget; ++k) {
    refine();
  }
  return finish_frame();
}

InferenceTrace infer_progressive(const ApproxLstm& model, std::span<const lstm::Sequence> sequences,
                                 const Budget& budget, const perf::ProgressSchedule* schedule) {
  const std::size_t n_steps = model.config.n_steps;
  std::size_t fixed_steps = 0;
  bool wall_clock = false;
  double wall_seconds = 0.0;

  if (const auto* sb = std::get_if<StepBudget>(&budget)) {
    if (sb->steps < 1 || sb->steps > n_steps) {
      throw ArgumentError("infer_progressive: step budget must lie in [1, " +
                          std::to_string(n_steps) + "]");
    }
    fixed_steps = sb->steps;
  } else if (const auto* tb = std::get_if<ModeledTimeBudget>(&budget)) {
    if (schedule == nullptr) {
      throw ArgumentError("infer_progressive: a modeled time budget needs a platform schedule");
    }
    if (schedule->units() < n_steps) {
      throw ArgumentError("infer_progressive: schedule covers fewer steps than the model has");
    }
    if (!(tb->seconds >= 0.0)) {
      throw ArgumentError("infer_progressive: time budget must be non-negative");
    }
    fixed_steps = std::min(schedule->units_within(tb->seconds), n_steps);
  } else {
    wall_clock = true;
    wall_seconds = std::get<WallClockBudget>(budget).seconds;
  }

  InferenceTrace trace;
  ProgressiveSession session(model);
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    session.reset();
    for (std::size_t f = 0; f < sequences[s].size(); ++f) {
      session.begin_frame(sequences[s][f]);
      if (wall_clock) {
        const auto start = std::chrono::steady_clock::now();
        while (session.steps_done() < n_steps &&
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() <
                   wall_seconds) {
          session.refine();
        }
      } else {
        for (std::size_t k = 0; k < fixed_steps; ++k) {
          session.refine();
        }
      }
      TraceEntry e;
      e.sequence = s;
      e.frame = f;
      e.steps_used = session.steps_done();
      e.fallback = e.steps_used == 0;
      e.distribution = session.finish_frame();
      trace.entries.push_back(std::move(e));
    }
  }
  trace.gate_ops = session.gate_ops();
  trace.epilogue_ops = session.epilogue_ops();
  return trace;
}

} // namespace proglstm::approx
