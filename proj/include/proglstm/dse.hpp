#pragma once

#include "proglstm/approx.hpp"
#include "proglstm/lstm.hpp"
#include "proglstm/perfmodel.hpp"
#include "proglstm/qor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace proglstm::dse {

struct SweepGrid {
  std::vector<std::size_t> nz_values;
  std::vector<std::size_t> n_steps_values;
  /// Only read when explicit_tiling is set; otherwise every (nz, n_steps)
  /// gets its fastest feasible tiling.
  std::vector<std::size_t> t_r_values;
  std::vector<std::size_t> t_c_values;
  bool explicit_tiling = false;
};

struct EvaluatedDesign {
  perf::DesignPoint point;
  /// Per-step statistics for k = 1..n_steps.
  qor::QoRRecord qor;
  /// Median KL at the full n_steps.
  double median_kl = 0.0;
};

struct InfeasibleDesign {
  std::size_t nz = 0;
  std::size_t n_steps = 0;
  std::size_t t_r = 0; ///< 0 when no tiling fits at all
  std::size_t t_c = 0;
  std::string reason;
};

struct SweepResult {
  /// Ordered by (nz, n_steps, t_r, t_c).
  std::vector<EvaluatedDesign> designs;
  std::vector<InfeasibleDesign> infeasible;
};

struct SweepOptions {
  approx::DecomposeOptions decompose;
  qor::ProfileOptions profile;
};

using ConfigKey = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;
ConfigKey config_key(const perf::DesignPoint& p) noexcept;

/// Exhaustive sweep. Grid values are deduplicated and sorted. Each nz is
/// decomposed and profiled once at the largest n_steps; smaller n_steps reuse
/// the leading steps, which is exact because decomposition is sequential and
/// every budget is profiled independently. Throws ArgumentError for an
/// illegal grid or empty pilot, InfeasibleError when no point fits.
SweepResult sweep(const lstm::LstmModel& model, const SweepGrid& grid,
                  const perf::PlatformModel& platform, std::span<const lstm::Sequence> pilot,
                  const SweepOptions& options = {});

/// Design with its QoR sliced from a profile taken at n_steps or more.
EvaluatedDesign evaluate(const perf::DesignPoint& point, const qor::QoRRecord& full);

struct Selection {
  EvaluatedDesign design;
  /// No design within the latency budget met the KL target; design is the
  /// lowest-KL one that fits the budget.
  bool target_missed = false;
};

/// Lowest median KL among designs with modeled_latency <= latency_budget,
/// ties to lower latency then smaller (nz, n_steps, t_r, t_c). Throws
/// ArgumentError on an empty set and InfeasibleError, naming the fastest
/// design, when nothing fits the budget.
Selection select_best(std::span<const EvaluatedDesign> designs, double latency_budget,
                      double kl_target);

/// Designs not dominated in (modeled_latency, median KL), sorted by latency.
/// Designs with identical objectives are represented once, by the smallest
/// configuration.
std::vector<EvaluatedDesign> pareto_front(std::span<const EvaluatedDesign> designs);

} // namespace proglstm::dse
