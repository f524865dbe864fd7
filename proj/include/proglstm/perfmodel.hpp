#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace proglstm::perf {

enum class TrafficPolicy { values_only, values_plus_indices, values_indices_u_sigma };
enum class Mode { approx, baseline };
enum class Bound { memory, compute };

const char* to_string(TrafficPolicy p) noexcept;
const char* to_string(Mode m) noexcept;
const char* to_string(Bound b) noexcept;
TrafficPolicy parse_traffic_policy(std::string_view text);

/// Target platform. Defaults follow the ZC706 board: ~4 GB/s measured
/// external bandwidth, 100 MHz fabric clock, 900 DSP slices as the
/// arithmetic-operator budget, single-precision weights.
struct PlatformModel {
  double mem_bandwidth = 4.0e9; ///< bytes / second
  double clock = 100.0e6;       ///< Hz
  std::uint64_t mac_budget = 900;
  std::uint64_t bytes_per_weight = 4;
  TrafficPolicy traffic_policy = TrafficPolicy::values_only;
  /// Adds input-frame and output-vector bytes to the latency memory term.
  bool include_io_traffic = false;

  void validate() const;
};

/// Parses the key/value platform file:
///
///     # comment
///     bandwidth = 4e9            # bytes/s
///     clock = 100e6              # Hz
///     mac_budget = 900
///     bytes_per_weight = 4
///     traffic_policy = values-only | values-plus-indices | values-indices-u-sigma
///     include_io_traffic = false
///
/// Unknown keys and malformed values throw ArgumentError.
PlatformModel parse_platform(std::string_view text);
PlatformModel load_platform(const std::filesystem::path& path);
std::string format_platform(const PlatformModel& platform);

struct LstmShape {
  std::size_t input_dim = 0;  ///< D
  std::size_t hidden_dim = 0; ///< R

  std::size_t augmented_dim() const noexcept { return input_dim + hidden_dim; }
};

std::uint64_t epilogue_ops(std::size_t hidden_dim) noexcept;

/// Gate kernels only: approx 4 * n_steps * (2R + 2nz + 1), baseline 4 * 2RC.
std::uint64_t gate_workload_ops(const LstmShape& shape, std::size_t nz, std::size_t n_steps,
                                Mode mode);

/// Gate kernels plus the elementwise stage.
std::uint64_t workload_ops(const LstmShape& shape, std::size_t nz, std::size_t n_steps,
                           Mode mode);

/// Weight bytes fetched from external memory per inference.
///   values-only            4 * n_steps * nz * bpw
///   values-plus-indices    + 4 * n_steps * nz * 4
///   values-indices-u-sigma + 4 * n_steps * (R + 1) * bpw
///   baseline               4 * R * C * bpw
std::uint64_t weight_traffic_bytes(const LstmShape& shape, std::size_t nz, std::size_t n_steps,
                                   Mode mode, const PlatformModel& platform);

/// Input frame in plus output vector out.
std::uint64_t io_traffic_bytes(const LstmShape& shape, const PlatformModel& platform) noexcept;

struct DesignInputs {
  LstmShape shape;
  Mode mode = Mode::approx;
  std::size_t nz = 1;
  std::size_t n_steps = 1;
  std::size_t t_r = 1;
  std::size_t t_c = 1;
};

struct DesignPoint {
  Mode mode = Mode::approx;
  std::size_t nz = 0;
  std::size_t n_steps = 0;
  std::size_t t_r = 0;
  std::size_t t_c = 0;
  std::uint64_t ops_per_inference = 0;
  std::uint64_t weight_bytes_per_inference = 0;
  double ctc = 0.0;             ///< ops / weight byte
  double peak_gops = 0.0;
  double attainable_gops = 0.0; ///< min(peak, ctc * bandwidth) in GOp/s
  double modeled_latency = 0.0; ///< seconds
  Bound bound = Bound::memory;
  std::uint64_t resource_macs = 0;
  bool feasible = true;
  std::string infeasible_reason;
};

/// Peak throughput of four gate units with t_c operators in the dot-product
/// stage and t_r in the scale/accumulate stage, each a multiply-add pair
/// per cycle: 2 * 4 * (t_r + t_c) * clock ops/s.
double peak_ops_per_second(std::size_t t_r, std::size_t t_c, const PlatformModel& platform);

/// Arithmetic operators instantiated: 2 * 4 * (t_r + t_c).
std::uint64_t resource_operators(std::size_t t_r, std::size_t t_c) noexcept;

/// Roofline evaluation. Out-of-range parameters throw ArgumentError; a
/// design exceeding the operator budget comes back with feasible == false.
/// The ridge point (ctc * bandwidth == peak) counts as memory-bound.
DesignPoint roofline_point(const DesignInputs& inputs, const PlatformModel& platform);

/// Highest-attainable feasible tiling for the given configuration; ties go
/// to fewer operators, then smaller t_r, then smaller t_c. Throws
/// InfeasibleError if no tiling fits the operator budget.
DesignPoint best_tiling(const LstmShape& shape, Mode mode, std::size_t nz, std::size_t n_steps,
                        const PlatformModel& platform);

/// Effective bandwidth that makes the model reproduce a measured latency.
/// The configuration must be memory-bound under the calibrated bandwidth,
/// otherwise bandwidth is not identifiable and ArgumentError is thrown.
double calibrate_bandwidth(double measured_latency, const DesignInputs& inputs,
                           const PlatformModel& platform);

/// Modeled elapsed time after k work units of a progressive run: refinement
/// steps for the approximate engine, row-tile steps for the blocked
/// baseline. elapsed(0) == 0 and elapsed(units()) equals the full design's
/// modeled_latency.
class ProgressSchedule {
public:
  static ProgressSchedule approx(const LstmShape& shape, std::size_t nz, std::size_t n_steps,
                                 std::size_t t_r, std::size_t t_c,
                                 const PlatformModel& platform);
  static ProgressSchedule baseline(const LstmShape& shape, std::size_t t_r, std::size_t t_c,
                                   const PlatformModel& platform);

  std::size_t units() const noexcept { return elapsed_.size() - 1; }
  double elapsed(std::size_t k) const { return elapsed_.at(k); }
  double full_latency() const noexcept { return elapsed_.back(); }

  /// Number of units completed in order before the modeled clock passes
  /// the budget.
  std::size_t units_within(double budget) const noexcept;

private:
  explicit ProgressSchedule(std::vector<double> elapsed) : elapsed_(std::move(elapsed)) {}
  std::vector<double> elapsed_;
};

} // namespace proglstm::perf
