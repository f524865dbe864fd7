#include "proglstm/qor.hpp"

#include "proglstm/io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace proglstm::qor {

namespace {

using lstm::ActionDistribution;
using lstm::LstmState;
using lstm::Sequence;

void check_pilot(const lstm::LstmModel& model, std::span<const Sequence> pilot) {
  std::size_t frames = 0;
  for (const auto& s : pilot) {
    for (const auto& x : s) {
      if (x.size() != model.input_dim) {
        throw ArgumentError("pilot frame length " + std::to_string(x.size()) +
                            " != model input_dim " + std::to_string(model.input_dim));
      }
    }
    frames += s.size();
  }
  if (frames == 0) {
    throw ArgumentError("pilot dataset holds no frames");
  }
}

void check_pair(const lstm::LstmModel& model, const approx::ApproxLstm& approx) {
  if (model.input_dim != approx.input_dim || model.hidden_dim != approx.hidden_dim ||
      model.actions() != approx.actions()) {
    throw ArgumentError("reference and approximate models disagree on dimensions");
  }
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

struct ReferenceRun {
  std::vector<std::vector<ActionDistribution>> outputs;
  /// states[s][f] is the state entering frame f of sequence s.
  std::vector<std::vector<LstmState>> states;
};

ReferenceRun run_reference(const lstm::LstmModel& model, std::span<const Sequence> pilot) {
  ReferenceRun run;
  for (const auto& seq : pilot) {
    std::vector<ActionDistribution> out;
    std::vector<LstmState> states;
    LstmState state = LstmState::zeros(model.hidden_dim);
    for (const auto& x : seq) {
      states.push_back(state);
      state = lstm::step_dense(model, x, state);
      out.push_back(lstm::readout(model, state.h));
    }
    run.outputs.push_back(std::move(out));
    run.states.push_back(std::move(states));
  }
  return run;
}

StepStats summarize(const std::vector<std::vector<double>>& per_sequence) {
  std::vector<double> all;
  std::vector<double> seq_means;
  for (const auto& s : per_sequence) {
    all.insert(all.end(), s.begin(), s.end());
    if (!s.empty()) {
      seq_means.push_back(mean(s));
    }
  }
  StepStats st;
  st.mean = mean(all);
  st.max = *std::max_element(all.begin(), all.end());
  st.median = median(all);
  st.sequence_mean_median = median(seq_means);
  return st;
}

std::string pilot_hash(std::size_t frame_dim, std::span<const Sequence> pilot) {
  io::Dataset d;
  d.frame_dim = frame_dim;
  d.sequences.assign(pilot.begin(), pilot.end());
  return io::dataset_hash(d);
}

} // namespace

double kl_divergence(const ActionDistribution& reference, const ActionDistribution& approx) {
  if (reference.probs.size() != approx.probs.size()) {
    throw ArgumentError("kl_divergence: distributions have " +
                        std::to_string(reference.probs.size()) + " and " +
                        std::to_string(approx.probs.size()) + " entries");
  }
  double kl = 0.0;
  for (std::size_t a = 0; a < reference.probs.size(); ++a) {
    const double p = std::max(reference.probs[a], kClamp);
    const double q = std::max(approx.probs[a], kClamp);
    kl += p * std::log(p / q);
  }
  return kl;
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw ArgumentError("median of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) {
    return values[n / 2];
  }
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

QoRRecord profile(const lstm::LstmModel& model, const approx::ApproxLstm& approx,
                  std::span<const Sequence> pilot, const ProfileOptions& options) {
  check_pair(model, approx);
  check_pilot(model, pilot);
  const ReferenceRun ref = run_reference(model, pilot);

  QoRRecord rec;
  rec.config = approx.config;
  rec.teacher_forced = options.teacher_forced;
  rec.dataset_hash = pilot_hash(model.input_dim, pilot);
  for (const auto& s : pilot) {
    rec.frames_evaluated += s.size();
  }

  approx::ProgressiveSession session(approx);
  for (std::size_t k = 1; k <= approx.config.n_steps; ++k) {
    std::vector<std::vector<double>> kl(pilot.size());
    for (std::size_t s = 0; s < pilot.size(); ++s) {
      session.reset();
      for (std::size_t f = 0; f < pilot[s].size(); ++f) {
        if (options.teacher_forced) {
          session.set_state(ref.states[s][f]);
        }
        const ActionDistribution q = session.advance(pilot[s][f], k);
        kl[s].push_back(kl_divergence(ref.outputs[s][f], q));
      }
    }
    rec.per_step.push_back(summarize(kl));
    if (options.keep_raw) {
      std::vector<double> flat;
      for (const auto& v : kl) {
        flat.insert(flat.end(), v.begin(), v.end());
      }
      rec.raw_kl.push_back(std::move(flat));
    }
  }
  return rec;
}

std::optional<std::size_t> steps_to_reach(const QoRRecord& record, double threshold) {
  for (std::size_t k = 0; k < record.per_step.size(); ++k) {
    if (record.per_step[k].median <= threshold) {
      return k + 1;
    }
  }
  return std::nullopt;
}

CompareTilings default_tilings(const approx::ApproxLstm& approx,
                               const perf::PlatformModel& platform) {
  const auto shape = approx.shape();
  const auto a = perf::best_tiling(shape, perf::Mode::approx, approx.config.nz,
                                   approx.config.n_steps, platform);
  const auto b = perf::best_tiling(shape, perf::Mode::baseline, shape.augmented_dim(), 1, platform);
  return {a.t_r, a.t_c, b.t_r, b.t_c};
}

std::vector<CompareRow> compare_baseline(const lstm::LstmModel& model,
                                         const approx::ApproxLstm& approx,
                                         std::span<const Sequence> pilot,
                                         const perf::PlatformModel& platform,
                                         std::span<const double> budgets,
                                         const std::optional<CompareTilings>& tilings) {
  check_pair(model, approx);
  check_pilot(model, pilot);
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (!(budgets[i] > 0.0) || !std::isfinite(budgets[i])) {
      throw ArgumentError("compare_baseline: budgets must be positive and finite");
    }
    if (i > 0 && !(budgets[i] > budgets[i - 1])) {
      throw ArgumentError("compare_baseline: budgets must be strictly ascending");
    }
  }
  const CompareTilings t = tilings ? *tilings : default_tilings(approx, platform);
  const auto shape = approx.shape();
  const auto approx_sched = perf::ProgressSchedule::approx(
      shape, approx.config.nz, approx.config.n_steps, t.approx_t_r, t.approx_t_c, platform);
  const auto base_sched =
      perf::ProgressSchedule::baseline(shape, t.baseline_t_r, t.baseline_t_c, platform);
  const ReferenceRun ref = run_reference(model, pilot);

  std::vector<CompareRow> rows;
  for (double budget : budgets) {
    CompareRow row;
    row.budget = budget;
    row.baseline_tiles = base_sched.units_within(budget);

    const auto trace = approx::infer_progressive(approx, pilot, approx::ModeledTimeBudget{budget},
                                                 &approx_sched);
    std::vector<double> akl;
    std::vector<double> bkl;
    std::size_t e = 0;
    for (std::size_t s = 0; s < pilot.size(); ++s) {
      LstmState state = LstmState::zeros(model.hidden_dim);
      for (std::size_t f = 0; f < pilot[s].size(); ++f, ++e) {
        state = lstm::step_baseline_tiled(model, pilot[s][f], state, row.baseline_tiles,
                                          t.baseline_t_r, t.baseline_t_c);
        bkl.push_back(kl_divergence(ref.outputs[s][f], lstm::readout(model, state.h)));
        akl.push_back(kl_divergence(ref.outputs[s][f], trace.entries[e].distribution));
      }
    }
    row.approx_steps = trace.entries.front().steps_used;
    row.approx_fallback = trace.entries.front().fallback;
    row.approx_median_kl = median(akl);
    row.approx_mean_kl = mean(akl);
    row.baseline_median_kl = median(bkl);
    row.baseline_mean_kl = mean(bkl);
    rows.push_back(row);
  }
  return rows;
}

} // namespace proglstm::qor
