#include "proglstm/dse.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>

namespace proglstm::dse {

namespace {

std::vector<std::size_t> sorted_unique(const std::vector<std::size_t>& v) {
  std::set<std::size_t> s(v.begin(), v.end());
  return {s.begin(), s.end()};
}

void check_grid(const SweepGrid& g, const perf::LstmShape& shape) {
  if (g.nz_values.empty() || g.n_steps_values.empty()) {
    throw ArgumentError("sweep: nz and n_steps value lists must be nonempty");
  }
  for (std::size_t nz : g.nz_values) {
    if (nz < 1 || nz > shape.augmented_dim()) {
      throw ArgumentError("sweep: nz " + std::to_string(nz) + " outside [1, C] (C = " +
                          std::to_string(shape.augmented_dim()) + ")");
    }
  }
  for (std::size_t n : g.n_steps_values) {
    if (n < 1) {
      throw ArgumentError("sweep: n_steps must be >= 1");
    }
  }
  if (!g.explicit_tiling) {
    return;
  }
  if (g.t_r_values.empty() || g.t_c_values.empty()) {
    throw ArgumentError("sweep: explicit tiling needs nonempty t_r and t_c lists");
  }
  for (std::size_t t : g.t_r_values) {
    if (t < 1 || t > shape.hidden_dim) {
      throw ArgumentError("sweep: t_r " + std::to_string(t) + " outside [1, R]");
    }
  }
  for (std::size_t t : g.t_c_values) {
    if (t < 1) {
      throw ArgumentError("sweep: t_c must be >= 1");
    }
  }
}

// Strict "a before b" for selection: KL, then latency, then configuration.
bool better(const EvaluatedDesign& a, const EvaluatedDesign& b) {
  if (a.median_kl != b.median_kl) {
    return a.median_kl < b.median_kl;
  }
  if (a.point.modeled_latency != b.point.modeled_latency) {
    return a.point.modeled_latency < b.point.modeled_latency;
  }
  return config_key(a.point) < config_key(b.point);
}

} // namespace

ConfigKey config_key(const perf::DesignPoint& p) noexcept {
  return {p.nz, p.n_steps, p.t_r, p.t_c};
}

EvaluatedDesign evaluate(const perf::DesignPoint& point, const qor::QoRRecord& full) {
  if (point.n_steps < 1 || point.n_steps > full.per_step.size()) {
    throw ArgumentError("evaluate: profile does not cover n_steps");
  }
  EvaluatedDesign d;
  d.point = point;
  d.qor = full;
  d.qor.config = {point.nz, point.n_steps};
  d.qor.per_step.resize(point.n_steps);
  if (!d.qor.raw_kl.empty()) {
    d.qor.raw_kl.resize(point.n_steps);
  }
  d.median_kl = d.qor.per_step.back().median;
  return d;
}

SweepResult sweep(const lstm::LstmModel& model, const SweepGrid& grid,
                  const perf::PlatformModel& platform, std::span<const lstm::Sequence> pilot,
                  const SweepOptions& options) {
  model.validate();
  platform.validate();
  const perf::LstmShape shape{model.input_dim, model.hidden_dim};
  check_grid(grid, shape);
  const auto nzs = sorted_unique(grid.nz_values);
  const auto steps = sorted_unique(grid.n_steps_values);
  const auto trs = sorted_unique(grid.t_r_values);
  const auto tcs = sorted_unique(grid.t_c_values);

  SweepResult out;
  for (std::size_t nz : nzs) {
    // Points first, so nz values with nothing feasible skip the decomposition.
    std::vector<perf::DesignPoint> points;
    for (std::size_t n : steps) {
      if (!grid.explicit_tiling) {
        try {
          points.push_back(perf::best_tiling(shape, perf::Mode::approx, nz, n, platform));
        } catch (const InfeasibleError& e) {
          out.infeasible.push_back({nz, n, 0, 0, e.what()});
        }
        continue;
      }
      for (std::size_t t_r : trs) {
        for (std::size_t t_c : tcs) {
          if (t_c > nz) {
            out.infeasible.push_back({nz, n, t_r, t_c, "t_c exceeds nz"});
            continue;
          }
          auto p = perf::roofline_point({shape, perf::Mode::approx, nz, n, t_r, t_c}, platform);
          if (!p.feasible) {
            out.infeasible.push_back({nz, n, t_r, t_c, p.infeasible_reason});
            continue;
          }
          points.push_back(std::move(p));
        }
      }
    }
    if (points.empty()) {
      continue;
    }
    std::size_t need = 0;
    for (const auto& p : points) {
      need = std::max(need, p.n_steps);
    }
    const auto approx = approx::decompose(model, nz, need, options.decompose);
    const auto full = qor::profile(model, approx, pilot, options.profile);
    for (const auto& p : points) {
      out.designs.push_back(evaluate(p, full));
    }
  }
  if (out.designs.empty()) {
    throw InfeasibleError("sweep: no grid point fits the platform (" +
                          std::to_string(out.infeasible.size()) + " infeasible points)");
  }
  return out;
}

Selection select_best(std::span<const EvaluatedDesign> designs, double latency_budget,
                      double kl_target) {
  if (designs.empty()) {
    throw ArgumentError("select_best: no designs");
  }
  const EvaluatedDesign* best = nullptr;
  const EvaluatedDesign* fastest = &designs.front();
  for (const auto& d : designs) {
    if (d.point.modeled_latency < fastest->point.modeled_latency) {
      fastest = &d;
    }
    if (d.point.modeled_latency <= latency_budget && (best == nullptr || better(d, *best))) {
      best = &d;
    }
  }
  if (best == nullptr) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g s", fastest->point.modeled_latency);
    throw InfeasibleError("select_best: no design fits the latency budget; fastest is nz=" +
                          std::to_string(fastest->point.nz) + " n_steps=" +
                          std::to_string(fastest->point.n_steps) + " t_r=" +
                          std::to_string(fastest->point.t_r) + " t_c=" +
                          std::to_string(fastest->point.t_c) + " at " + buf);
  }
  return {*best, !(best->median_kl <= kl_target)};
}

std::vector<EvaluatedDesign> pareto_front(std::span<const EvaluatedDesign> designs) {
  std::vector<const EvaluatedDesign*> order;
  for (const auto& d : designs) {
    order.push_back(&d);
  }
  std::sort(order.begin(), order.end(), [](const EvaluatedDesign* a, const EvaluatedDesign* b) {
    if (a->point.modeled_latency != b->point.modeled_latency) {
      return a->point.modeled_latency < b->point.modeled_latency;
    }
    if (a->median_kl != b->median_kl) {
      return a->median_kl < b->median_kl;
    }
    return config_key(a->point) < config_key(b->point);
  });
  std::vector<EvaluatedDesign> front;
  double best_kl = std::numeric_limits<double>::infinity();
  for (const auto* d : order) {
    if (d->median_kl < best_kl) {
      best_kl = d->median_kl;
      front.push_back(*d);
    }
  }
  return front;
}

} // namespace proglstm::dse
