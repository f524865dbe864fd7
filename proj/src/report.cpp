#include "proglstm/report.hpp"

#include "json.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <utility>

namespace proglstm::report {

using nlohmann::json;

namespace {

json stats_json(const qor::StepStats& s) {
  return json{{"median", s.median},
              {"mean", s.mean},
              {"max", s.max},
              {"sequence_mean_median", s.sequence_mean_median}};
}

json point_json(const perf::DesignPoint& p) {
  return json{{"mode", perf::to_string(p.mode)},
              {"nz", p.nz},
              {"n_steps", p.n_steps},
              {"t_r", p.t_r},
              {"t_c", p.t_c},
              {"ops_per_inference", p.ops_per_inference},
              {"weight_bytes_per_inference", p.weight_bytes_per_inference},
              {"ctc", p.ctc},
              {"peak_gops", p.peak_gops},
              {"attainable_gops", p.attainable_gops},
              {"modeled_latency", p.modeled_latency},
              {"bound", perf::to_string(p.bound)},
              {"resource_operators", p.resource_macs},
              {"feasible", p.feasible}};
}

json record_json(const qor::QoRRecord& r) {
  json steps = json::array();
  for (const auto& s : r.per_step) {
    steps.push_back(stats_json(s));
  }
  return json{{"nz", r.config.nz},
              {"n_steps", r.config.n_steps},
              {"frames_evaluated", r.frames_evaluated},
              {"dataset_hash", r.dataset_hash},
              {"teacher_forced", r.teacher_forced},
              {"per_step", steps}};
}

json design_json(const dse::EvaluatedDesign& d) {
  json j = point_json(d.point);
  j["median_kl"] = d.median_kl;
  j["qor"] = record_json(d.qor);
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

const char* flag(bool b) { return b ? "1" : "0"; }

void point_row(std::ostringstream& out, const perf::DesignPoint& p) {
  out << perf::to_string(p.mode) << ',' << p.nz << ',' << p.n_steps << ',' << p.t_r << ','
      << p.t_c << ',' << p.ops_per_inference << ',' << p.weight_bytes_per_inference << ','
      << format_real(p.ctc) << ',' << format_real(p.peak_gops) << ','
      << format_real(p.attainable_gops) << ',' << format_real(p.modeled_latency) << ','
      << perf::to_string(p.bound) << ',' << p.resource_macs << ',' << flag(p.feasible);
}

constexpr char kPointHeader[] = "mode,nz,n_steps,t_r,t_c,ops,weight_bytes,ctc,peak_gops,"
                                "attainable_gops,latency_s,bound,operators,feasible";

} // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const approx::InferenceTrace& trace) {
  std::ostringstream out;
  out << "sequence,frame,steps_used,fallback";
  const std::size_t a = trace.entries.empty() ? 0 : trace.entries.front().distribution.probs.size();
  for (std::size_t k = 0; k < a; ++k) {
    out << ",p" << k;
  }
  out << '\n';
  for (const auto& e : trace.entries) {
    out << e.sequence << ',' << e.frame << ',' << e.steps_used << ',' << flag(e.fallback);
    for (double p : e.distribution.probs) {
      out << ',' << format_real(p);
    }
    out << '\n';
  }
  return out.str();
}

std::string residual_norms_csv(const approx::ApproxLstm& model) {
  std::ostringstream out;
  out << "step,f,i,c,o\n";
  for (std::size_t n = 0; n <= model.config.n_steps; ++n) {
    out << n;
    for (lstm::Gate g : lstm::kGateOrder) {
      out << ',' << format_real(model.gate(g).residual_fro_norms[n]);
    }
    out << '\n';
  }
  return out.str();
}

std::string qor_csv(const qor::QoRRecord& record) {
  std::ostringstream out;
  out << "k,median_kl,mean_kl,max_kl,sequence_mean_median_kl\n";
  for (std::size_t k = 0; k < record.per_step.size(); ++k) {
    const auto& s = record.per_step[k];
    out << k + 1 << ',' << format_real(s.median) << ',' << format_real(s.mean) << ','
        << format_real(s.max) << ',' << format_real(s.sequence_mean_median) << '\n';
  }
  return out.str();
}

std::string qor_json(const qor::QoRRecord& record) { return dump(record_json(record)); }

std::string raw_kl_csv(const qor::QoRRecord& record) {
  std::ostringstream out;
  out << "k,frame,kl\n";
  for (std::size_t k = 0; k < record.raw_kl.size(); ++k) {
    for (std::size_t f = 0; f < record.raw_kl[k].size(); ++f) {
      out << k + 1 << ',' << f << ',' << format_real(record.raw_kl[k][f]) << '\n';
    }
  }
  return out.str();
}

std::string compare_csv(std::span<const qor::CompareRow> rows) {
  std::ostringstream out;
  out << "budget_s,approx_steps,baseline_tiles,approx_median_kl,approx_mean_kl,"
         "baseline_median_kl,baseline_mean_kl,approx_fallback\n";
  for (const auto& r : rows) {
    out << format_real(r.budget) << ',' << r.approx_steps << ',' << r.baseline_tiles << ','
        << format_real(r.approx_median_kl) << ',' << format_real(r.approx_mean_kl) << ','
        << format_real(r.baseline_median_kl) << ',' << format_real(r.baseline_mean_kl) << ','
        << flag(r.approx_fallback) << '\n';
  }
  return out.str();
}

std::string sweep_csv(std::span<const dse::EvaluatedDesign> designs) {
  std::ostringstream out;
  out << kPointHeader << ",median_kl,mean_kl,max_kl,frames,dataset_hash\n";
  for (const auto& d : designs) {
    point_row(out, d.point);
    const auto& last = d.qor.per_step.back();
    out << ',' << format_real(d.median_kl) << ',' << format_real(last.mean) << ','
        << format_real(last.max) << ',' << d.qor.frames_evaluated << ',' << d.qor.dataset_hash
        << '\n';
  }
  return out.str();
}

std::string sweep_json(const dse::SweepResult& result) {
  json designs = json::array();
  for (const auto& d : result.designs) {
    designs.push_back(design_json(d));
  }
  json infeasible = json::array();
  for (const auto& d : result.infeasible) {
    infeasible.push_back(json{{"nz", d.nz},
                              {"n_steps", d.n_steps},
                              {"t_r", d.t_r},
                              {"t_c", d.t_c},
                              {"reason", d.reason}});
  }
  return dump(json{{"designs", designs}, {"infeasible", infeasible}});
}

std::string infeasible_csv(std::span<const dse::InfeasibleDesign> designs) {
  std::ostringstream out;
  out << "nz,n_steps,t_r,t_c,reason\n";
  for (const auto& d : designs) {
    out << d.nz << ',' << d.n_steps << ',' << d.t_r << ',' << d.t_c << ",\"" << d.reason
        << "\"\n";
  }
  return out.str();
}

std::string selection_json(const dse::Selection& selection, double latency_budget,
                           double kl_target) {
  return dump(json{{"latency_budget", latency_budget},
                   {"kl_target", kl_target},
                   {"target_missed", selection.target_missed},
                   {"design", design_json(selection.design)}});
}

std::string roofline_csv(std::span<const perf::DesignPoint> points) {
  std::ostringstream out;
  out << kPointHeader << '\n';
  for (const auto& p : points) {
    point_row(out, p);
    out << '\n';
  }
  return out.str();
}

std::string ceilings_csv(std::span<const perf::DesignPoint> points,
                         const perf::PlatformModel& platform) {
  std::ostringstream out;
  out << "kind,t_r,t_c,peak_gops,bandwidth_gbps,ridge_ctc\n";
  const double bw = platform.mem_bandwidth / 1e9;
  out << "bandwidth,,," << ',' << format_real(bw) << ",\n";
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : points) {
    if (!seen.insert({p.t_r, p.t_c}).second) {
      continue;
    }
    const double peak = perf::peak_ops_per_second(p.t_r, p.t_c, platform) / 1e9;
    out << "compute," << p.t_r << ',' << p.t_c << ',' << format_real(peak) << ','
        << format_real(bw) << ',' << format_real(peak / bw) << '\n';
  }
  return out.str();
}

} // namespace proglstm::report
