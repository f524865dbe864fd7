#pragma once

#include "proglstm/approx.hpp"
#include "proglstm/lstm.hpp"
#include "proglstm/perfmodel.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace proglstm::qor {

/// Probabilities are clamped to this floor before the log.
inline constexpr double kClamp = 1e-12;

/// KL(reference || approx) in nats, both arguments clamped to >= kClamp.
/// Length mismatch throws ArgumentError.
double kl_divergence(const lstm::ActionDistribution& reference,
                     const lstm::ActionDistribution& approx);

/// Median of a non-empty sample (mean of the two middle values for even n).
double median(std::vector<double> values);

struct StepStats {
  double median = 0.0;
  double mean = 0.0;
  double max = 0.0;
  /// Median over sequences of the per-sequence mean KL.
  double sequence_mean_median = 0.0;

  bool operator==(const StepStats&) const = default;
};

struct QoRRecord {
  approx::ApproxConfig config;
  /// Entry k - 1 holds the statistics with a budget of k steps per frame.
  std::vector<StepStats> per_step;
  std::size_t frames_evaluated = 0;
  std::string dataset_hash;
  bool teacher_forced = false;
  /// raw_kl[k - 1][frame] in sequence-major frame order; empty unless
  /// requested.
  std::vector<std::vector<double>> raw_kl;

  bool operator==(const QoRRecord&) const = default;
};

struct ProfileOptions {
  /// Seed every approximate frame with the reference state instead of the
  /// approximate run's own state.
  bool teacher_forced = false;
  bool keep_raw = false;
};

/// Runs the reference model and, for every budget k in 1..n_steps, the
/// approximate model with k steps per frame (its own recurrent state carried
/// between frames), and aggregates the per-frame KL. Throws ArgumentError on
/// an empty pilot or mismatched frame length.
QoRRecord profile(const lstm::LstmModel& model, const approx::ApproxLstm& approx,
                  std::span<const lstm::Sequence> pilot, const ProfileOptions& options = {});

/// Smallest k whose median KL is <= threshold.
std::optional<std::size_t> steps_to_reach(const QoRRecord& record, double threshold);

struct CompareRow {
  double budget = 0.0;
  std::size_t approx_steps = 0;
  std::size_t baseline_tiles = 0;
  double approx_median_kl = 0.0;
  double approx_mean_kl = 0.0;
  double baseline_median_kl = 0.0;
  double baseline_mean_kl = 0.0;
  /// Budget below one refinement step: zero-computation output.
  bool approx_fallback = false;

  bool operator==(const CompareRow&) const = default;
};

struct CompareTilings {
  std::size_t approx_t_r = 0;
  std::size_t approx_t_c = 0;
  std::size_t baseline_t_r = 0;
  std::size_t baseline_t_c = 0;
};

/// Fastest feasible tilings for both engines on the platform.
CompareTilings default_tilings(const approx::ApproxLstm& approx, const perf::PlatformModel& platform);

/// Both engines cut at whatever their modeled schedule affords within each
/// budget (row tiles for the baseline, refinement steps for the
/// approximation), each carrying its own state between frames. Budgets must
/// be positive and ascending.
std::vector<CompareRow> compare_baseline(const lstm::LstmModel& model,
                                         const approx::ApproxLstm& approx,
                                         std::span<const lstm::Sequence> pilot,
                                         const perf::PlatformModel& platform,
                                         std::span<const double> budgets,
                                         const std::optional<CompareTilings>& tilings = {});

} // namespace proglstm::qor
