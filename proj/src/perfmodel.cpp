#include "proglstm/perfmodel.hpp"

#include "proglstm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace proglstm::perf {

namespace {

constexpr std::uint64_t kGates = 4;
constexpr std::uint64_t kIndexBytes = 4;

struct Roof {
  double ctc = 0.0;
  double peak = 0.0;
  double attainable = 0.0;
  double latency = 0.0;
  Bound bound = Bound::memory;
};

Roof evaluate(std::uint64_t ops, std::uint64_t weight_bytes, std::uint64_t io_bytes, double peak,
              const PlatformModel& platform) {
  Roof r;
  r.peak = peak;
  r.ctc = static_cast<double>(ops) / static_cast<double>(weight_bytes);
  const double memory_arm = r.ctc * platform.mem_bandwidth;
  r.bound = memory_arm <= peak ? Bound::memory : Bound::compute;
  r.attainable = r.bound == Bound::memory ? memory_arm : peak;
  r.latency = static_cast<double>(ops) / r.attainable;
  if (platform.include_io_traffic) {
    r.latency = std::max(static_cast<double>(ops) / peak,
                         static_cast<double>(weight_bytes + io_bytes) / platform.mem_bandwidth);
  }
  return r;
}

void check_shape(const LstmShape& shape) {
  if (shape.input_dim < 1 || shape.hidden_dim < 1) {
    throw ArgumentError("perfmodel: input_dim and hidden_dim must be >= 1");
  }
}

void check_config(const LstmShape& shape, std::size_t nz, std::size_t n_steps, Mode mode) {
  check_shape(shape);
  if (mode == Mode::approx) {
    if (nz < 1 || nz > shape.augmented_dim()) {
      throw ArgumentError("perfmodel: nz must lie in [1, C]");
    }
    if (n_steps < 1) {
      throw ArgumentError("perfmodel: n_steps must be >= 1");
    }
  }
}

std::size_t max_t_c(const LstmShape& shape, Mode mode, std::size_t nz) {
  return mode == Mode::approx ? nz : shape.augmented_dim();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ArgumentError("platform: bad numeric value for '" + key + "': " + value);
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  const double d = parse_double(key, value);
  if (!(d >= 1.0) || d != std::floor(d) || d > 9.0e15) {
    throw ArgumentError("platform: '" + key + "' must be a positive integer");
  }
  return static_cast<std::uint64_t>(d);
}

} // namespace

const char* to_string(TrafficPolicy p) noexcept {
  switch (p) {
  case TrafficPolicy::values_only:
    return "values-only";
  case TrafficPolicy::values_plus_indices:
    return "values-plus-indices";
  case TrafficPolicy::values_indices_u_sigma:
    return "values-indices-u-sigma";
  }
  return "?";
}

const char* to_string(Mode m) noexcept { return m == Mode::approx ? "approx" : "baseline"; }
const char* to_string(Bound b) noexcept { return b == Bound::memory ? "memory" : "compute"; }

TrafficPolicy parse_traffic_policy(std::string_view text) {
  for (auto p : {TrafficPolicy::values_only, TrafficPolicy::values_plus_indices,
                 TrafficPolicy::values_indices_u_sigma}) {
    if (text == to_string(p)) {
      return p;
    }
  }
  throw ArgumentError("unknown traffic policy: " + std::string(text));
}

void PlatformModel::validate() const {
  if (!(mem_bandwidth > 0.0) || !std::isfinite(mem_bandwidth)) {
    throw ArgumentError("platform: bandwidth must be positive");
  }
  if (!(clock > 0.0) || !std::isfinite(clock)) {
    throw ArgumentError("platform: clock must be positive");
  }
  if (mac_budget < 1 || bytes_per_weight < 1) {
    throw ArgumentError("platform: mac_budget and bytes_per_weight must be positive");
  }
}

PlatformModel parse_platform(std::string_view text) {
  PlatformModel p;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string body = trim(line);
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("platform: line " + std::to_string(lineno) + " is not key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "bandwidth" || key == "mem_bandwidth") {
      p.mem_bandwidth = parse_double(key, value);
    } else if (key == "clock") {
      p.clock = parse_double(key, value);
    } else if (key == "mac_budget") {
      p.mac_budget = parse_count(key, value);
    } else if (key == "bytes_per_weight") {
      p.bytes_per_weight = parse_count(key, value);
    } else if (key == "traffic_policy") {
      p.traffic_policy = parse_traffic_policy(value);
    } else if (key == "include_io_traffic") {
      if (value != "true" && value != "false") {
        throw ArgumentError("platform: include_io_traffic must be true or false");
      }
      p.include_io_traffic = value == "true";
    } else {
      throw ArgumentError("platform: unknown key '" + key + "'");
    }
  }
  p.validate();
  return p;
}

PlatformModel load_platform(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError(FormatError::Kind::io, "cannot open platform file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_platform(ss.str());
}

std::string format_platform(const PlatformModel& platform) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "bandwidth = %.17g\nclock = %.17g\nmac_budget = %llu\nbytes_per_weight = "
                "%llu\ntraffic_policy = %s\ninclude_io_traffic = %s\n",
                platform.mem_bandwidth, platform.clock,
                static_cast<unsigned long long>(platform.mac_budget),
                static_cast<unsigned long long>(platform.bytes_per_weight),
                to_string(platform.traffic_policy),
                platform.include_io_traffic ? "true" : "false");
  return buf;
}

std::uint64_t epilogue_ops(std::size_t hidden_dim) noexcept { return 10 * hidden_dim; }

std::uint64_t gate_workload_ops(const LstmShape& shape, std::size_t nz, std::size_t n_steps,
                                Mode mode) {
  check_config(shape, nz, n_steps, mode);
  const std::uint64_t r = shape.hidden_dim;
  if (mode == Mode::baseline) {
    return kGates * 2 * r * shape.augmented_dim();
  }
  return kGates * n_steps * (2 * r + 2 * nz + 1);
}

std::uint64_t workload_ops(const LstmShape& shape, std::size_t nz, std::size_t n_steps,
                           Mode mode) {
  return gate_workload_ops(shape, nz, n_steps, mode) + epilogue_ops(shape.hidden_dim);
}

std::uint64_t weight_traffic_bytes(const LstmShape& shape, std::size_t nz, std::size_t n_steps,
                                   Mode mode, const PlatformModel& platform) {
  check_config(shape, nz, n_steps, mode);
  const std::uint64_t bpw = platform.bytes_per_weight;
  if (mode == Mode::baseline) {
    return kGates * shape.hidden_dim * shape.augmented_dim() * bpw;
  }
  std::uint64_t per_step = nz * bpw;
  if (platform.traffic_policy != TrafficPolicy::values_only) {
    per_step += nz * kIndexBytes;
  }
  if (platform.traffic_policy == TrafficPolicy::values_indices_u_sigma) {
    per_step += (shape.hidden_dim + 1) * bpw;
  }
  return kGates * n_steps * per_step;
}

std::uint64_t io_traffic_bytes(const LstmShape& shape, const PlatformModel& platform) noexcept {
  return (shape.input_dim + shape.hidden_dim) * platform.bytes_per_weight;
}

double peak_ops_per_second(std::size_t t_r, std::size_t t_c, const PlatformModel& platform) {
  return static_cast<double>(2 * kGates * (t_r + t_c)) * platform.clock;
}

std::uint64_t resource_operators(std::size_t t_r, std::size_t t_c) noexcept {
  return 2 * kGates * (t_r + t_c);
}

DesignPoint roofline_point(const DesignInputs& in, const PlatformModel& platform) {
  platform.validate();
  check_config(in.shape, in.nz, in.n_steps, in.mode);
  if (in.t_r < 1 || in.t_r > in.shape.hidden_dim) {
    throw ArgumentError("roofline_point: t_r must lie in [1, R]");
  }
  const std::size_t tc_max = max_t_c(in.shape, in.mode, in.nz);
  if (in.t_c < 1 || in.t_c > tc_max) {
    throw ArgumentError(in.mode == Mode::approx ? "roofline_point: t_c must lie in [1, nz]"
                                                : "roofline_point: t_c must lie in [1, C]");
  }

  DesignPoint dp;
  dp.mode = in.mode;
  dp.nz = in.mode == Mode::approx ? in.nz : in.shape.augmented_dim();
  dp.n_steps = in.mode == Mode::approx ? in.n_steps : 1;
  dp.t_r = in.t_r;
  dp.t_c = in.t_c;
  dp.ops_per_inference = workload_ops(in.shape, in.nz, in.n_steps, in.mode);
  dp.weight_bytes_per_inference = weight_traffic_bytes(in.shape, in.nz, in.n_steps, in.mode,
                                                       platform);
  dp.resource_macs = resource_operators(in.t_r, in.t_c);

  const Roof roof = evaluate(dp.ops_per_inference, dp.weight_bytes_per_inference,
                             io_traffic_bytes(in.shape, platform),
                             peak_ops_per_second(in.t_r, in.t_c, platform), platform);
  dp.ctc = roof.ctc;
  dp.peak_gops = roof.peak / 1e9;
  dp.attainable_gops = roof.attainable / 1e9;
  dp.modeled_latency = roof.latency;
  dp.bound = roof.bound;

  if (dp.resource_macs > platform.mac_budget) {
    dp.feasible = false;
    dp.infeasible_reason = "needs " + std::to_string(dp.resource_macs) +
                           " arithmetic operators, budget is " +
                           std::to_string(platform.mac_budget);
  }
  return dp;
}

DesignPoint best_tiling(const LstmShape& shape, Mode mode, std::size_t nz, std::size_t n_steps,
                        const PlatformModel& platform) {
  check_config(shape, nz, n_steps, mode);
  const std::size_t tc_max = max_t_c(shape, mode, nz);
  DesignPoint best;
  bool found = false;
  for (std::size_t t_r = 1; t_r <= shape.hidden_dim; ++t_r) {
    if (resource_operators(t_r, 1) > platform.mac_budget) {
      break;
    }
    for (std::size_t t_c = 1; t_c <= tc_max; ++t_c) {
      if (resource_operators(t_r, t_c) > platform.mac_budget) {
        break;
      }
      DesignPoint dp = roofline_point({shape, mode, nz, n_steps, t_r, t_c}, platform);
      const bool better =
          !found || dp.attainable_gops > best.attainable_gops ||
          (dp.attainable_gops == best.attainable_gops && dp.resource_macs < best.resource_macs);
      if (better) {
        best = std::move(dp);
        found = true;
      }
    }
  }
  if (!found) {
    throw InfeasibleError("best_tiling: no tiling fits an operator budget of " +
                          std::to_string(platform.mac_budget));
  }
  return best;
}

double calibrate_bandwidth(double measured_latency, const DesignInputs& inputs,
                           const PlatformModel& platform) {
  if (!(measured_latency > 0.0) || !std::isfinite(measured_latency)) {
    throw ArgumentError("calibrate_bandwidth: latency must be positive");
  }
  const DesignPoint probe = roofline_point(inputs, platform);
  std::uint64_t bytes = probe.weight_bytes_per_inference;
  if (platform.include_io_traffic) {
    bytes += io_traffic_bytes(inputs.shape, platform);
  }
  const double bandwidth = static_cast<double>(bytes) / measured_latency;
  PlatformModel calibrated = platform;
  calibrated.mem_bandwidth = bandwidth;
  const DesignPoint check = roofline_point(inputs, calibrated);
  const double compute_time = static_cast<double>(check.ops_per_inference) /
                              peak_ops_per_second(inputs.t_r, inputs.t_c, platform);
  if (check.bound != Bound::memory || compute_time > measured_latency) {
    throw ArgumentError("calibrate_bandwidth: configuration is compute-bound at the measured "
                        "latency; bandwidth is not identifiable");
  }
  return bandwidth;
}

ProgressSchedule ProgressSchedule::approx(const LstmShape& shape, std::size_t nz,
                                          std::size_t n_steps, std::size_t t_r, std::size_t t_c,
                                          const PlatformModel& platform) {
  std::vector<double> elapsed(n_steps + 1, 0.0);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    elapsed[k] = roofline_point({shape, Mode::approx, nz, k, t_r, t_c}, platform).modeled_latency;
  }
  return ProgressSchedule(std::move(elapsed));
}

ProgressSchedule ProgressSchedule::baseline(const LstmShape& shape, std::size_t t_r,
                                            std::size_t t_c, const PlatformModel& platform) {
  // Validates tiling against the full design.
  const DesignPoint full = roofline_point({shape, Mode::baseline, 1, 1, t_r, t_c}, platform);
  const std::size_t r = shape.hidden_dim;
  const std::size_t c = shape.augmented_dim();
  const std::size_t tiles = (r + t_r - 1) / t_r;
  const double peak = peak_ops_per_second(t_r, t_c, platform);
  std::vector<double> elapsed(tiles + 1, 0.0);
  for (std::size_t k = 1; k < tiles; ++k) {
    const std::uint64_t rows = k * t_r;
    const std::uint64_t ops = kGates * 2 * rows * c + epilogue_ops(r);
    const std::uint64_t bytes = kGates * rows * c * platform.bytes_per_weight;
    elapsed[k] = evaluate(ops, bytes, io_traffic_bytes(shape, platform), peak, platform).latency;
  }
  elapsed[tiles] = full.modeled_latency;
  return ProgressSchedule(std::move(elapsed));
}

std::size_t ProgressSchedule::units_within(double budget) const noexcept {
  std::size_t k = 0;
  while (k < units() && elapsed_[k + 1] <= budget) {
    ++k;
  }
  return k;
}

} // namespace proglstm::perf
