#pragma once

#include "proglstm/linalg.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace proglstm::lstm {

using linalg::DenseMatrix;
using linalg::DenseVector;
using linalg::OpCounter;

/// Gate order is fixed everywhere: forget, input, cell candidate, output.
enum class Gate : std::uint8_t { forget = 0, input = 1, cell = 2, output = 3 };

inline constexpr std::size_t kGateCount = 4;
inline constexpr std::array<Gate, kGateCount> kGateOrder = {Gate::forget, Gate::input,
                                                            Gate::cell, Gate::output};

/// Short tag used in files and messages: "f", "i", "c", "o".
const char* gate_tag(Gate g) noexcept;

/// Counted ops of the elementwise stage per hidden unit: five array
/// operations (f*c, i*g, the cell sum, tanh(c), o*tanh(c)), each charged as
/// a multiply-add pair.
inline constexpr std::uint64_t kEpilogueOpsPerUnit = 10;

/// Dense LSTM with augmented gate matrices W = [W_x W_h] (R x C, C = D + R)
/// and a linear softmax readout head (A x R).
struct LstmModel {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<DenseMatrix, kGateCount> gates;
  DenseMatrix head;
  /// Reserved by the container format; carried through save/load but not
  /// used by any inference path.
  std::optional<std::array<DenseVector, kGateCount>> bias;
  std::string name;
  std::uint64_t seed = 0;

  std::size_t augmented_dim() const noexcept { return input_dim + hidden_dim; }
  std::size_t actions() const noexcept { return head.rows(); }
  const DenseMatrix& gate(Gate g) const noexcept { return gates[static_cast<std::size_t>(g)]; }

  /// Throws ArgumentError if shapes are inconsistent or A < 2.
  void validate() const;
};

struct LstmState {
  DenseVector c;
  DenseVector h;

  static LstmState zeros(std::size_t hidden_dim) {
    return {DenseVector(hidden_dim), DenseVector(hidden_dim)};
  }
  bool operator==(const LstmState&) const = default;
};

struct ActionDistribution {
  std::vector<double> probs;
  bool operator==(const ActionDistribution&) const = default;
};

using Sequence = std::vector<DenseVector>;
using PreActivations = std::array<DenseVector, kGateCount>;

/// [x; h_prev], x first.
DenseVector augmented_input(const DenseVector& x, const DenseVector& h_prev);
DenseVector augmented_input(const LstmModel& model, const DenseVector& x,
                            const DenseVector& h_prev);

double sigmoid(double z) noexcept;

/// f, i, o = sigmoid; g = tanh; c' = f*c + i*g; h' = o*tanh(c').
/// Throws NumericError naming the gate if a pre-activation is not finite.
LstmState apply_epilogue(const PreActivations& pre, const LstmState& prev,
                         OpCounter* counter = nullptr);

LstmState step_dense(const LstmModel& model, const DenseVector& x, const LstmState& state,
                     OpCounter* counter = nullptr);

ActionDistribution softmax(std::span<const double> logits);
ActionDistribution readout(const LstmModel& model, const DenseVector& h);
ActionDistribution readout(const DenseMatrix& head, const DenseVector& h);

/// Reference trace: zero initial state, one distribution per frame.
std::vector<ActionDistribution> forward_sequence(const LstmModel& model,
                                                 std::span<const DenseVector> frames);

std::size_t tile_count(std::size_t extent, std::size_t tile) noexcept;

/// Blocked baseline: the first tiles_completed * t_r rows of every gate are
/// computed exactly (row tiles outer, column tiles inner), the rest keep a
/// zero pre-activation. All tiles completed reproduces step_dense bit for bit.
LstmState step_baseline_tiled(const LstmModel& model, const DenseVector& x,
                              const LstmState& state, std::size_t tiles_completed,
                              std::size_t t_r, std::size_t t_c, OpCounter* counter = nullptr);

/// SHA-256 over the model's dimensions and its weights rounded to 32-bit
/// floats, in gate order then head (then biases, when present). Equal
/// fingerprints mean equal models at storage precision.
std::string fingerprint(const LstmModel& model);

} // namespace proglstm::lstm
