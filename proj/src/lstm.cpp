#include "proglstm/lstm.hpp"

#include "proglstm/bytes.hpp"
#include "proglstm/hash.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace proglstm::lstm {

const char* gate_tag(Gate g) noexcept {
  switch (g) {
  case Gate::forget:
    return "f";
  case Gate::input:
    return "i";
  case Gate::cell:
    return "c";
  case Gate::output:
    return "o";
  }
  return "?";
}

void LstmModel::validate() const {
  if (input_dim < 1 || hidden_dim < 1) {
    throw ArgumentError("LstmModel: input_dim and hidden_dim must be >= 1");
  }
  const std::size_t c = augmented_dim();
  for (Gate g : kGateOrder) {
    const auto& w = gate(g);
    if (w.rows() != hidden_dim || w.cols() != c) {
      throw ArgumentError(std::string("LstmModel: gate ") + gate_tag(g) + " is " +
                          std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                          ", expected " + std::to_string(hidden_dim) + "x" +
                          std::to_string(c));
    }
  }
  if (head.cols() != hidden_dim) {
    throw ArgumentError("LstmModel: head must have hidden_dim columns");
  }
  if (head.rows() < 2) {
    throw ArgumentError("LstmModel: at least two actions required");
  }
  if (bias) {
    for (const auto& b : *bias) {
      if (b.size() != hidden_dim) {
        throw ArgumentError("LstmModel: bias length must equal hidden_dim");
      }
    }
  }
}

DenseVector augmented_input(const DenseVector& x, const DenseVector& h_prev) {
  if (x.empty()) {
    throw ArgumentError("augmented_input: input dimension must be >= 1");
  }
  if (h_prev.empty()) {
    throw ArgumentError("augmented_input: hidden dimension must be >= 1");
  }
  std::vector<double> out;
  out.reserve(x.size() + h_prev.size());
  out.insert(out.end(), x.values().begin(), x.values().end());
  out.insert(out.end(), h_prev.values().begin(), h_prev.values().end());
  return DenseVector(std::move(out));
}

DenseVector augmented_input(const LstmModel& model, const DenseVector& x,
                            const DenseVector& h_prev) {
  if (x.size() != model.input_dim || h_prev.size() != model.hidden_dim) {
    throw ArgumentError("augmented_input: expected x of length " +
                        std::to_string(model.input_dim) + " and h of length " +
                        std::to_string(model.hidden_dim) + ", got " +
                        std::to_string(x.size()) + " and " + std::to_string(h_prev.size()));
  }
  return augmented_input(x, h_prev);
}

double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

LstmState apply_epilogue(const PreActivations& pre, const LstmState& prev, OpCounter* counter) {
  const std::size_t r = prev.c.size();
  for (Gate g : kGateOrder) {
    const auto& p = pre[static_cast<std::size_t>(g)];
    if (p.size() != r) {
      throw ArgumentError("apply_epilogue: pre-activation length mismatch");
    }
    if (!p.all_finite()) {
      throw NumericError(std::string("non-finite pre-activation in gate ") + gate_tag(g));
    }
  }
  const auto& pf = pre[0];
  const auto& pi = pre[1];
  const auto& pc = pre[2];
  const auto& po = pre[3];
  LstmState next{DenseVector(r), DenseVector(r)};
  for (std::size_t j = 0; j < r; ++j) {
    const double f = sigmoid(pf[j]);
    const double i = sigmoid(pi[j]);
    const double g = std::tanh(pc[j]);
    const double o = sigmoid(po[j]);
    const double c = f * prev.c[j] + i * g;
    next.c[j] = c;
    next.h[j] = o * std::tanh(c);
  }
  if (!next.c.all_finite() || !next.h.all_finite()) {
    throw NumericError("non-finite cell state in elementwise stage");
  }
  linalg::charge(counter, kEpilogueOpsPerUnit * r);
  return next;
}

LstmState step_dense(const LstmModel& model, const DenseVector& x, const LstmState& state,
                     OpCounter* counter) {
  if (state.c.size() != model.hidden_dim || state.h.size() != model.hidden_dim) {
    throw ArgumentError("step_dense: state length must equal hidden_dim");
  }
  const DenseVector xa = augmented_input(model, x, state.h);
  PreActivations pre;
  for (Gate g : kGateOrder) {
    pre[static_cast<std::size_t>(g)] = linalg::matvec(model.gate(g), xa, counter);
  }
  return apply_epilogue(pre, state, counter);
}

ActionDistribution softmax(std::span<const double> logits) {
  ActionDistribution out;
  out.probs.resize(logits.size());
  if (logits.empty()) {
    return out;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    out.probs[a] = std::exp(logits[a] - mx);
    sum += out.probs[a];
  }
  for (double& p : out.probs) {
    p /= sum;
  }
  return out;
}

ActionDistribution readout(const DenseMatrix& head, const DenseVector& h) {
  const DenseVector logits = linalg::matvec(head, h);
  return softmax(logits.values());
}

ActionDistribution readout(const LstmModel& model, const DenseVector& h) {
  return readout(model.head, h);
}

std::vector<ActionDistribution> forward_sequence(const LstmModel& model,
                                                 std::span<const DenseVector> frames) {
  std::vector<ActionDistribution> out;
  out.reserve(frames.size());
  LstmState state = LstmState::zeros(model.hidden_dim);
  for (const auto& x : frames) {
    state = step_dense(model, x, state);
    out.push_back(readout(model, state.h));
  }
  return out;
}

std::size_t tile_count(std::size_t extent, std::size_t tile) noexcept {
  return tile == 0 ? 0 : (extent + tile - 1) / tile;
}

LstmState step_baseline_tiled(const LstmModel& model, const DenseVector& x,
                              const LstmState& state, std::size_t tiles_completed,
                              std::size_t t_r, std::size_t t_c, OpCounter* counter) {
  const std::size_t r = model.hidden_dim;
  const std::size_t c = model.augmented_dim();
  if (t_r < 1 || t_r > r || t_c < 1 || t_c > c) {
    throw ArgumentError("step_baseline_tiled: tile sizes must satisfy 1 <= t_r <= R, "
                        "1 <= t_c <= C");
  }
  if (tiles_completed > tile_count(r, t_r)) {
    throw ArgumentError("step_baseline_tiled: tiles_completed " +
                        std::to_string(tiles_completed) + " exceeds " +
                        std::to_string(tile_count(r, t_r)));
  }
  if (state.c.size() != r || state.h.size() != r) {
    throw ArgumentError("step_baseline_tiled: state length must equal hidden_dim");
  }
  const DenseVector xa = augmented_input(model, x, state.h);
  const std::size_t rows_done = std::min(tiles_completed * t_r, r);
  PreActivations pre;
  for (Gate g : kGateOrder) {
    const auto& w = model.gate(g);
    DenseVector acc(r);
    for (std::size_t r0 = 0; r0 < rows_done; r0 += t_r) {
      const std::size_t r1 = std::min(r0 + t_r, rows_done);
      for (std::size_t c0 = 0; c0 < c; c0 += t_c) {
        const std::size_t c1 = std::min(c0 + t_c, c);
        for (std::size_t row = r0; row < r1; ++row) {
          const auto wr = w.row(row);
          double a = acc[row];
          for (std::size_t col = c0; col < c1; ++col) {
            a += wr[col] * xa[col];
          }
          acc[row] = a;
        }
      }
    }
    linalg::charge(counter, 2 * rows_done * c);
    pre[static_cast<std::size_t>(g)] = std::move(acc);
  }
  return apply_epilogue(pre, state, counter);
}

std::string fingerprint(const LstmModel& model) {
  std::vector<std::byte> buf;
  bytes::put_u64(buf, model.input_dim);
  bytes::put_u64(buf, model.hidden_dim);
  bytes::put_u64(buf, model.actions());
  for (const auto& w : model.gates) {
    for (double v : w.values()) {
      bytes::put_f32(buf, v);
    }
  }
  for (double v : model.head.values()) {
    bytes::put_f32(buf, v);
  }
  if (model.bias) {
    for (const auto& b : *model.bias) {
      for (double v : b.values()) {
        bytes::put_f32(buf, v);
      }
    }
  }
  return sha256_hex(buf);
}

} // namespace proglstm::lstm
