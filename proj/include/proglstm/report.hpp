#pragma once

#include "proglstm/approx.hpp"
#include "proglstm/dse.hpp"
#include "proglstm/perfmodel.hpp"
#include "proglstm/qor.hpp"

#include <span>
#include <string>
#include <vector>

// CSV and JSON emitters for result tables. CSV has a header row, JSON is
// pretty-printed with sorted keys; reals are printed with 17 significant
// digits so values survive a text round-trip.
namespace proglstm::report {

std::string format_real(double v);

/// sequence,frame,steps_used,fallback,p0..p{A-1}
std::string trace_csv(const approx::InferenceTrace& trace);

/// step,f,i,c,o  (residual Frobenius norm per gate, step 0 is ||W||_F)
std::string residual_norms_csv(const approx::ApproxLstm& model);

/// k,median_kl,mean_kl,max_kl,sequence_mean_median_kl
std::string qor_csv(const qor::QoRRecord& record);
std::string qor_json(const qor::QoRRecord& record);
/// k,frame,kl  (needs a record profiled with keep_raw)
std::string raw_kl_csv(const qor::QoRRecord& record);

std::string compare_csv(std::span<const qor::CompareRow> rows);

std::string sweep_csv(std::span<const dse::EvaluatedDesign> designs);
std::string sweep_json(const dse::SweepResult& result);
std::string infeasible_csv(std::span<const dse::InfeasibleDesign> designs);
std::string selection_json(const dse::Selection& selection, double latency_budget,
                           double kl_target);

/// mode,nz,n_steps,t_r,t_c,ops,weight_bytes,ctc,peak_gops,attainable_gops,
/// latency_s,bound,operators,feasible
std::string roofline_csv(std::span<const perf::DesignPoint> points);

/// Ceiling lines for redrawing the roofline plot: the bandwidth slope and
/// one flat compute roof per distinct tiling, with its ridge point.
std::string ceilings_csv(std::span<const perf::DesignPoint> points,
                         const perf::PlatformModel& platform);

} // namespace proglstm::report
