// proglstm: command-line driver for progressive LSTM inference experiments.
//
// Exit codes:
//   0  success
//   1  unexpected internal error
//   2  usage error or invalid argument
//   3  data or format error (missing file, bad container, hash mismatch)
//   4  infeasible design space or numeric failure

#include "proglstm/approx.hpp"
#include "proglstm/dse.hpp"
#include "proglstm/io.hpp"
#include "proglstm/perfmodel.hpp"
#include "proglstm/qor.hpp"
#include "proglstm/report.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace proglstm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitInfeasible = 4;

// Platform resolution: --platform, then $PROGLSTM_PLATFORM, then built-in
// defaults. --bandwidth overrides whatever was loaded.
struct PlatformArgs {
  std::string path;
  double bandwidth = 0.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--platform", path, "Platform description file (key = value)");
    cmd->add_option("--bandwidth", bandwidth, "Override memory bandwidth in bytes/s");
  }

  perf::PlatformModel resolve() const {
    perf::PlatformModel p;
    if (!path.empty()) {
      p = perf::load_platform(path);
    } else if (const char* env = std::getenv("PROGLSTM_PLATFORM"); env != nullptr && *env) {
      p = perf::load_platform(env);
    }
    if (bandwidth != 0.0) {
      p.mem_bandwidth = bandwidth;
    }
    p.validate();
    return p;
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  io::write_text(path, text);
}

struct GenModel {
  std::uint64_t seed = 1;
  std::size_t input_dim = 192;
  std::size_t hidden_dim = 64;
  std::size_t actions = 4;
  std::string out;

  int run() const {
    const auto model = io::gen_synthetic(seed, input_dim, hidden_dim, actions);
    io::save_model(model, out);
    std::cout << lstm::fingerprint(model) << '\n';
    return 0;
  }
};

struct GenData {
  std::uint64_t seed = 1;
  std::size_t input_dim = 192;
  std::size_t frames = 100;
  std::size_t sequences = 1;
  double rho = 0.9;
  std::string out;

  int run() const {
    const auto data = io::gen_pilot(seed, input_dim, frames, sequences, rho);
    io::save_dataset(data, out);
    std::cout << io::dataset_hash(data) << '\n';
    return 0;
  }
};

struct Decompose {
  std::string model_dir;
  std::size_t nz = 0;
  std::size_t steps = 0;
  std::string out;
  std::string norms_out;

  int run() const {
    const auto model = io::load_model(model_dir);
    if (model.augmented_dim() > 2048) {
      std::cerr << "warning: C = " << model.augmented_dim()
                << "; decomposition at this size takes a while\n";
    }
    const auto approx = approx::decompose(model, nz, steps);
    io::save_approx(approx, out);
    const std::string norms = norms_out.empty() ? (fs::path(out) / "residual_norms.csv").string()
                                                : norms_out;
    io::write_text(norms, report::residual_norms_csv(approx));
    std::cout << "decomposed " << model.name << " nz=" << nz << " steps=" << steps << '\n';
    return 0;
  }
};

struct Infer {
  std::string approx_dir;
  std::string data_path;
  std::size_t steps = 0;
  double time_budget = -1.0;
  bool wall_clock = false;
  std::size_t t_r = 0;
  std::size_t t_c = 0;
  PlatformArgs platform;
  std::string out;

  int run() const {
    const auto model = io::load_approx(approx_dir);
    const auto data = io::load_dataset(data_path);
    approx::InferenceTrace trace;
    if (steps > 0) {
      trace = approx::infer_progressive(model, data.sequences, approx::StepBudget{steps});
    } else if (wall_clock) {
      trace = approx::infer_progressive(model, data.sequences,
                                        approx::WallClockBudget{time_budget});
    } else {
      const auto p = platform.resolve();
      std::size_t tr = t_r;
      std::size_t tc = t_c;
      if (tr == 0 || tc == 0) {
        const auto best = perf::best_tiling(model.shape(), perf::Mode::approx, model.config.nz,
                                            model.config.n_steps, p);
        tr = best.t_r;
        tc = best.t_c;
      }
      const auto sched = perf::ProgressSchedule::approx(model.shape(), model.config.nz,
                                                        model.config.n_steps, tr, tc, p);
      trace = approx::infer_progressive(model, data.sequences,
                                        approx::ModeledTimeBudget{time_budget}, &sched);
    }
    write_output(out, report::trace_csv(trace));
    std::cout << "frames=" << trace.entries.size() << " gate_ops=" << trace.gate_ops
              << " epilogue_ops=" << trace.epilogue_ops << '\n';
    return 0;
  }
};

struct ProfileQor {
  std::string model_dir;
  std::string approx_dir;
  std::string data_path;
  bool teacher_forced = false;
  std::string out;
  std::string csv_out;
  std::string raw_out;

  int run() const {
    const auto model = io::load_model(model_dir);
    const auto approx = io::load_approx(approx_dir);
    const auto data = io::load_dataset(data_path);
    const auto rec = qor::profile(model, approx, data.sequences,
                                  {teacher_forced, !raw_out.empty()});
    write_output(out, report::qor_json(rec));
    if (!csv_out.empty()) {
      io::write_text(csv_out, report::qor_csv(rec));
    }
    if (!raw_out.empty()) {
      io::write_text(raw_out, report::raw_kl_csv(rec));
    }
    std::cout << "median_kl_at_full_steps=" << report::format_real(rec.per_step.back().median)
              << '\n';
    return 0;
  }
};

struct CompareBaseline {
  std::string model_dir;
  std::string approx_dir;
  std::string data_path;
  std::vector<double> budgets;
  std::vector<double> fractions;
  std::size_t count = 20;
  PlatformArgs platform;
  std::string out;

  int run() const {
    const auto model = io::load_model(model_dir);
    const auto approx = io::load_approx(approx_dir);
    const auto data = io::load_dataset(data_path);
    const auto p = platform.resolve();
    const auto tilings = qor::default_tilings(approx, p);
    std::vector<double> b = budgets;
    if (b.empty()) {
      // Linear span of fractions of the baseline latency.
      if (fractions.size() != 2 || count < 2) {
        throw ArgumentError("compare-baseline needs --budgets or --fractions LO,HI with --count >= 2");
      }
      const double full = perf::ProgressSchedule::baseline(approx.shape(), tilings.baseline_t_r,
                                                           tilings.baseline_t_c, p)
                              .full_latency();
      for (std::size_t i = 0; i < count; ++i) {
        const double f = fractions[0] + (fractions[1] - fractions[0]) * static_cast<double>(i) /
                                            static_cast<double>(count - 1);
        b.push_back(f * full);
      }
    }
    const auto rows = qor::compare_baseline(model, approx, data.sequences, p, b, tilings);
    write_output(out, report::compare_csv(rows));
    std::size_t wins = 0;
    for (const auto& r : rows) {
      wins += r.approx_median_kl <= r.baseline_median_kl ? 1 : 0;
    }
    std::cout << "approx_at_or_below_baseline=" << wins << '/' << rows.size() << '\n';
    return 0;
  }
};

struct Dse {
  std::string model_dir;
  std::string data_path;
  std::vector<std::size_t> nz;
  std::vector<std::size_t> steps;
  std::vector<std::size_t> t_r;
  std::vector<std::size_t> t_c;
  PlatformArgs platform;
  std::string out;
  std::string json_out;
  std::string pareto_out;
  std::string infeasible_out;
  double latency_budget = -1.0;
  double kl_target = 1e-6;
  std::string select_out;

  int run() const {
    const auto model = io::load_model(model_dir);
    const auto data = io::load_dataset(data_path);
    const auto p = platform.resolve();
    dse::SweepGrid grid{nz, steps, t_r, t_c, !t_r.empty() || !t_c.empty()};
    const auto result = dse::sweep(model, grid, p, data.sequences);
    write_output(out, report::sweep_csv(result.designs));
    if (!json_out.empty()) {
      io::write_text(json_out, report::sweep_json(result));
    }
    if (!infeasible_out.empty()) {
      io::write_text(infeasible_out, report::infeasible_csv(result.infeasible));
    }
    if (!pareto_out.empty()) {
      io::write_text(pareto_out, report::sweep_csv(dse::pareto_front(result.designs)));
    }
    std::cout << "designs=" << result.designs.size() << " infeasible=" << result.infeasible.size()
              << '\n';
    if (latency_budget >= 0.0) {
      const auto sel = dse::select_best(result.designs, latency_budget, kl_target);
      const std::string text = report::selection_json(sel, latency_budget, kl_target);
      if (!select_out.empty()) {
        io::write_text(select_out, text);
      }
      const auto& d = sel.design.point;
      std::cout << "selected nz=" << d.nz << " n_steps=" << d.n_steps << " t_r=" << d.t_r
                << " t_c=" << d.t_c << " median_kl=" << report::format_real(sel.design.median_kl)
                << (sel.target_missed ? " target_missed" : "") << '\n';
    }
    return 0;
  }
};

struct Roofline {
  std::string model_dir;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<std::size_t> nz;
  std::vector<std::size_t> steps;
  std::vector<std::size_t> t_r;
  std::vector<std::size_t> t_c;
  bool baseline = false;
  double calibrate_latency = 0.0;
  PlatformArgs platform;
  std::string out;
  std::string ceilings_out;

  int run() const {
    perf::LstmShape shape{input_dim, hidden_dim};
    if (!model_dir.empty()) {
      const auto model = io::load_model(model_dir);
      shape = {model.input_dim, model.hidden_dim};
    }
    if (shape.input_dim < 1 || shape.hidden_dim < 1) {
      throw ArgumentError("roofline needs --model or both --input-dim and --hidden-dim");
    }
    auto p = platform.resolve();
    const bool explicit_tiling = !t_r.empty() || !t_c.empty();
    if (explicit_tiling && (t_r.empty() || t_c.empty())) {
      throw ArgumentError("--t-r and --t-c must be given together");
    }

    std::vector<perf::DesignInputs> inputs;
    if (baseline) {
      for (std::size_t tr : explicit_tiling ? t_r : std::vector<std::size_t>{0}) {
        for (std::size_t tc : explicit_tiling ? t_c : std::vector<std::size_t>{0}) {
          inputs.push_back({shape, perf::Mode::baseline, shape.augmented_dim(), 1, tr, tc});
        }
      }
    }
    for (std::size_t z : nz) {
      for (std::size_t n : steps) {
        for (std::size_t tr : explicit_tiling ? t_r : std::vector<std::size_t>{0}) {
          for (std::size_t tc : explicit_tiling ? t_c : std::vector<std::size_t>{0}) {
            inputs.push_back({shape, perf::Mode::approx, z, n, tr, tc});
          }
        }
      }
    }
    if (inputs.empty()) {
      throw ArgumentError("roofline needs --nz and --steps, or --baseline");
    }

    auto fill_tiling = [&](perf::DesignInputs in) {
      if (in.t_r == 0) {
        const auto best = perf::best_tiling(in.shape, in.mode, in.nz, in.n_steps, p);
        in.t_r = best.t_r;
        in.t_c = best.t_c;
      }
      return in;
    };
    if (calibrate_latency > 0.0) {
      p.mem_bandwidth = perf::calibrate_bandwidth(calibrate_latency, fill_tiling(inputs.front()), p);
      std::cout << "calibrated_bandwidth=" << report::format_real(p.mem_bandwidth) << '\n';
    }
    std::vector<perf::DesignPoint> points;
    for (const auto& in : inputs) {
      points.push_back(perf::roofline_point(fill_tiling(in), p));
    }
    write_output(out, report::roofline_csv(points));
    if (!ceilings_out.empty()) {
      io::write_text(ceilings_out, report::ceilings_csv(points, p));
    }
    std::cout << "points=" << points.size() << '\n';
    return 0;
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive LSTM inference: decomposition, anytime inference, roofline and DSE"};
  app.require_subcommand(1);

  GenModel gm;
  auto* c_gm = app.add_subcommand("gen-model", "Generate a seeded synthetic LSTM model");
  c_gm->add_option("--seed", gm.seed);
  c_gm->add_option("--input-dim", gm.input_dim);
  c_gm->add_option("--hidden-dim", gm.hidden_dim);
  c_gm->add_option("--actions", gm.actions);
  c_gm->add_option("--out", gm.out, "Output model directory")->required();

  GenData gd;
  auto* c_gd = app.add_subcommand("gen-data", "Generate a seeded pilot dataset");
  c_gd->add_option("--seed", gd.seed);
  c_gd->add_option("--input-dim", gd.input_dim);
  c_gd->add_option("--frames", gd.frames, "Frames per sequence");
  c_gd->add_option("--sequences", gd.sequences);
  c_gd->add_option("--rho", gd.rho, "Frame-to-frame correlation");
  c_gd->add_option("--out", gd.out, "Output dataset file")->required();

  Decompose dc;
  auto* c_dc = app.add_subcommand("decompose", "Decompose every gate into refinement steps");
  c_dc->add_option("--model", dc.model_dir)->required();
  c_dc->add_option("--nz", dc.nz, "Nonzeros kept per right vector")->required();
  c_dc->add_option("--steps", dc.steps, "Refinement steps per gate")->required();
  c_dc->add_option("--out", dc.out, "Output container directory")->required();
  c_dc->add_option("--norms-out", dc.norms_out, "Residual norm CSV (default <out>/residual_norms.csv)");

  Infer in;
  auto* c_in = app.add_subcommand("infer", "Budgeted progressive inference over a dataset");
  c_in->add_option("--approx", in.approx_dir)->required();
  c_in->add_option("--data", in.data_path)->required();
  auto* o_steps = c_in->add_option("--steps", in.steps, "Refinement steps per frame");
  auto* o_time = c_in->add_option("--time-budget", in.time_budget, "Seconds per frame");
  o_steps->excludes(o_time);
  c_in->add_flag("--wall-clock", in.wall_clock, "Measure the time budget on the host clock");
  c_in->add_option("--t-r", in.t_r);
  c_in->add_option("--t-c", in.t_c);
  in.platform.add(c_in);
  c_in->add_option("--out", in.out, "Trace CSV ('-' for stdout)")->required();

  ProfileQor pq;
  auto* c_pq = app.add_subcommand("profile-qor", "KL of the approximation per step budget");
  c_pq->add_option("--model", pq.model_dir)->required();
  c_pq->add_option("--approx", pq.approx_dir)->required();
  c_pq->add_option("--data", pq.data_path)->required();
  c_pq->add_flag("--teacher-forced", pq.teacher_forced);
  c_pq->add_option("--out", pq.out, "QoR JSON")->required();
  c_pq->add_option("--csv", pq.csv_out, "Per-step statistics CSV");
  c_pq->add_option("--raw-csv", pq.raw_out, "Per-frame KL CSV");

  CompareBaseline cb;
  auto* c_cb = app.add_subcommand("compare-baseline",
                                  "Approximation vs tiled dense baseline under time budgets");
  c_cb->add_option("--model", cb.model_dir)->required();
  c_cb->add_option("--approx", cb.approx_dir)->required();
  c_cb->add_option("--data", cb.data_path)->required();
  auto* o_budgets = c_cb->add_option("--budgets", cb.budgets, "Budgets in seconds")->delimiter(',');
  auto* o_frac = c_cb->add_option("--fractions", cb.fractions,
                                  "LO,HI fractions of the baseline latency")
                     ->delimiter(',');
  o_budgets->excludes(o_frac);
  c_cb->add_option("--count", cb.count, "Budgets in the fraction span");
  cb.platform.add(c_cb);
  c_cb->add_option("--out", cb.out, "Comparison CSV")->required();

  Dse ds;
  auto* c_ds = app.add_subcommand("dse", "Exhaustive design-space sweep");
  c_ds->add_option("--model", ds.model_dir)->required();
  c_ds->add_option("--data", ds.data_path)->required();
  c_ds->add_option("--nz", ds.nz)->delimiter(',')->required();
  c_ds->add_option("--steps", ds.steps)->delimiter(',')->required();
  c_ds->add_option("--t-r", ds.t_r, "Explicit t_r values")->delimiter(',');
  c_ds->add_option("--t-c", ds.t_c, "Explicit t_c values")->delimiter(',');
  ds.platform.add(c_ds);
  c_ds->add_option("--out", ds.out, "Sweep CSV")->required();
  c_ds->add_option("--json", ds.json_out, "Sweep JSON");
  c_ds->add_option("--pareto-out", ds.pareto_out, "Pareto front CSV");
  c_ds->add_option("--infeasible-out", ds.infeasible_out, "Infeasible points CSV");
  c_ds->add_option("--latency-budget", ds.latency_budget, "Seconds; enables selection");
  c_ds->add_option("--kl-target", ds.kl_target);
  c_ds->add_option("--select-out", ds.select_out, "Selection JSON");

  Roofline rf;
  auto* c_rf = app.add_subcommand("roofline", "Roofline points and ceilings");
  c_rf->add_option("--model", rf.model_dir);
  c_rf->add_option("--input-dim", rf.input_dim);
  c_rf->add_option("--hidden-dim", rf.hidden_dim);
  c_rf->add_option("--nz", rf.nz)->delimiter(',');
  c_rf->add_option("--steps", rf.steps)->delimiter(',');
  c_rf->add_option("--t-r", rf.t_r)->delimiter(',');
  c_rf->add_option("--t-c", rf.t_c)->delimiter(',');
  c_rf->add_flag("--baseline", rf.baseline, "Include the dense baseline");
  c_rf->add_option("--calibrate-latency", rf.calibrate_latency,
                   "Fit bandwidth so the first point has this latency (s)");
  rf.platform.add(c_rf);
  c_rf->add_option("--out", rf.out, "Points CSV")->required();
  c_rf->add_option("--ceilings-out", rf.ceilings_out, "Ceilings CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_gm->parsed()) return gm.run();
    if (c_gd->parsed()) return gd.run();
    if (c_dc->parsed()) return dc.run();
    if (c_in->parsed()) {
      if (in.steps == 0 && in.time_budget < 0.0) {
        std::cerr << "infer: one of --steps or --time-budget is required\n";
        return kExitUsage;
      }
      return in.run();
    }
    if (c_pq->parsed()) return pq.run();
    if (c_cb->parsed()) return cb.run();
    if (c_ds->parsed()) return ds.run();
    if (c_rf->parsed()) return rf.run();
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
