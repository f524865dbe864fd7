#include "proglstm/io.hpp"

#include "proglstm/bytes.hpp"
#include "proglstm/hash.hpp"
#include "proglstm/rng.hpp"

#include "json.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace proglstm::io {

using nlohmann::json;
using Kind = FormatError::Kind;
using linalg::DenseMatrix;
using linalg::DenseVector;
using linalg::SparseVector;

namespace {

constexpr char kModelFormat[] = "proglstm-model";
constexpr char kApproxFormat[] = "proglstm-approx";
constexpr std::array<char, 4> kDatasetMagic = {'P', 'L', 'D', 'S'};
constexpr std::array<char, 4> kLittleTag = {'L', 'E', '\0', '\0'};

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<std::byte> encode_f32(std::span<const double> values) {
  std::vector<std::byte> out;
  out.reserve(values.size() * 4);
  for (double v : values) {
    bytes::put_f32(out, v);
  }
  return out;
}

std::vector<std::byte> encode_f64(std::span<const double> values) {
  std::vector<std::byte> out;
  out.reserve(values.size() * 8);
  for (double v : values) {
    bytes::put_f64(out, v);
  }
  return out;
}

struct Blob {
  std::string name;
  std::string file;
  std::vector<std::byte> data;
};

json blob_entry(const Blob& b) {
  return json{{"name", b.name}, {"file", b.file}, {"bytes", b.data.size()},
              {"sha256", sha256_hex(b.data)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::string text;
  try {
    text = read_text(path);
  } catch (const FormatError&) {
    throw FormatError(Kind::io, "missing manifest " + path.string());
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(Kind::structural, "manifest " + path.string() + " is not valid JSON: " +
                                            e.what());
  }
}

void check_header(const json& m, const char* format, int version) {
  try {
    if (m.at("format").get<std::string>() != format) {
      throw FormatError(Kind::structural, std::string("manifest format is not ") + format);
    }
    if (m.at("version").get<int>() != version) {
      throw FormatError(Kind::unknown_version,
                        "unsupported container version " + m.at("version").dump());
    }
    if (m.at("endianness").get<std::string>() != "little") {
      throw FormatError(Kind::endianness,
                        "container endianness tag is " + m.at("endianness").dump() +
                            ", expected \"little\"");
    }
  } catch (const json::exception& e) {
    throw FormatError(Kind::structural, std::string("manifest header: ") + e.what());
  }
}

// Reads a blob named in the manifest and checks it against its hash and the
// byte length implied by the declared dimensions.
std::vector<std::byte> read_blob(const fs::path& dir, const json& blobs, const std::string& name,
                                 std::size_t expected_bytes) {
  const json* entry = nullptr;
  for (const auto& b : blobs) {
    if (b.value("name", "") == name) {
      entry = &b;
    }
  }
  if (entry == nullptr) {
    throw FormatError(Kind::structural, "manifest lists no blob '" + name + "'");
  }
  std::string file;
  std::string hash;
  try {
    file = entry->at("file").get<std::string>();
    hash = entry->at("sha256").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(Kind::structural, "blob '" + name + "': " + e.what());
  }
  if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
    throw FormatError(Kind::structural, "blob '" + name + "' has an invalid file name");
  }
  std::vector<std::byte> data = read_file(dir / file);
  if (sha256_hex(data) != hash) {
    if (data.size() < expected_bytes) {
      throw FormatError(Kind::truncated, "blob '" + name + "' is truncated (" +
                                             std::to_string(data.size()) + " of " +
                                             std::to_string(expected_bytes) + " bytes)");
    }
    throw FormatError(Kind::hash_mismatch, "blob '" + name + "' does not match its hash");
  }
  if (data.size() != expected_bytes) {
    throw FormatError(Kind::structural, "blob '" + name + "' holds " +
                                            std::to_string(data.size()) +
                                            " bytes but the manifest dims imply " +
                                            std::to_string(expected_bytes));
  }
  return data;
}

std::size_t get_dim(const json& m, const char* key) {
  try {
    const auto v = m.at(key).get<std::int64_t>();
    if (v < 1) {
      throw FormatError(Kind::structural, std::string("manifest ") + key + " must be >= 1");
    }
    return static_cast<std::size_t>(v);
  } catch (const json::exception& e) {
    throw FormatError(Kind::structural, std::string("manifest ") + key + ": " + e.what());
  }
}

void check_gate_order(const json& m) {
  const json expected = json::array({"f", "i", "c", "o"});
  if (!m.contains("gate_order") || m.at("gate_order") != expected) {
    throw FormatError(Kind::structural, "manifest gate_order must be [f, i, c, o]");
  }
}

DenseMatrix decode_matrix_f32(std::span<const std::byte> data, std::size_t rows,
                              std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = bytes::get_f32(data, 4 * k);
  }
  return DenseMatrix(rows, cols, std::move(v));
}

std::vector<std::byte> encode_gate(const approx::GateDecomposition& g) {
  std::vector<std::byte> out;
  for (const auto& s : g.steps) {
    bytes::put_f64(out, s.sigma);
    for (double v : s.u.values()) {
      bytes::put_f64(out, v);
    }
    bytes::put_u32(out, static_cast<std::uint32_t>(s.v_pruned.nnz()));
    for (std::uint32_t i : s.v_pruned.indices()) {
      bytes::put_u32(out, i);
    }
    for (double v : s.v_pruned.values()) {
      bytes::put_f64(out, v);
    }
  }
  for (double r : g.residual_fro_norms) {
    bytes::put_f64(out, r);
  }
  return out;
}

approx::GateDecomposition decode_gate(std::span<const std::byte> data, lstm::Gate gate,
                                      std::size_t rows, std::size_t cols, std::size_t nz,
                                      std::size_t n_steps, const std::string& blob) {
  approx::GateDecomposition g;
  g.gate = gate;
  g.nz = nz;
  std::size_t off = 0;
  auto need = [&](std::size_t n) {
    if (off + n > data.size()) {
      throw FormatError(Kind::structural, "blob '" + blob + "' ends inside step data");
    }
  };
  for (std::size_t n = 0; n < n_steps; ++n) {
    approx::RefinementStep s;
    need(8 * (1 + rows) + 4);
    s.sigma = bytes::get_f64(data, off);
    off += 8;
    s.u = DenseVector(rows);
    for (std::size_t r = 0; r < rows; ++r, off += 8) {
      s.u[r] = bytes::get_f64(data, off);
    }
    const std::uint32_t nnz = bytes::get_u32(data, off);
    off += 4;
    if (nnz > nz) {
      throw FormatError(Kind::structural, "blob '" + blob + "' step holds more than nz entries");
    }
    need(12 * static_cast<std::size_t>(nnz));
    std::vector<std::uint32_t> idx(nnz);
    std::vector<double> val(nnz);
    for (auto& i : idx) {
      i = bytes::get_u32(data, off);
      off += 4;
    }
    for (auto& v : val) {
      v = bytes::get_f64(data, off);
      off += 8;
    }
    try {
      s.v_pruned = SparseVector(cols, std::move(idx), std::move(val));
    } catch (const ArgumentError& e) {
      throw FormatError(Kind::structural, "blob '" + blob + "': " + e.what());
    }
    g.steps.push_back(std::move(s));
  }
  need(8 * (n_steps + 1));
  for (std::size_t n = 0; n <= n_steps; ++n, off += 8) {
    g.residual_fro_norms.push_back(bytes::get_f64(data, off));
  }
  if (off != data.size()) {
    throw FormatError(Kind::structural, "blob '" + blob + "' has trailing bytes");
  }
  return g;
}

void write_blobs(const fs::path& dir, const std::vector<Blob>& blobs, const std::string& manifest) {
  fs::create_directories(dir);
  for (const auto& b : blobs) {
    write_file(dir / b.file, b.data);
  }
  write_text(dir / "manifest.json", manifest);
}

std::vector<Blob> model_blobs(const lstm::LstmModel& model) {
  std::vector<Blob> blobs;
  for (lstm::Gate g : lstm::kGateOrder) {
    const std::string tag = lstm::gate_tag(g);
    blobs.push_back({"gate_" + tag, "gate_" + tag + ".f32", encode_f32(model.gate(g).values())});
  }
  blobs.push_back({"head", "head.f32", encode_f32(model.head.values())});
  if (model.bias) {
    for (lstm::Gate g : lstm::kGateOrder) {
      const std::string tag = lstm::gate_tag(g);
      blobs.push_back({"bias_" + tag, "bias_" + tag + ".f32",
                       encode_f32((*model.bias)[static_cast<std::size_t>(g)].values())});
    }
  }
  return blobs;
}

std::string model_manifest_from(const lstm::LstmModel& model, const std::vector<Blob>& blobs) {
  json m;
  m["format"] = kModelFormat;
  m["version"] = kModelFormatVersion;
  m["endianness"] = "little";
  m["dtype"] = "float32";
  m["input_dim"] = model.input_dim;
  m["hidden_dim"] = model.hidden_dim;
  m["actions"] = model.actions();
  m["gate_order"] = json::array({"f", "i", "c", "o"});
  m["name"] = model.name;
  m["seed"] = model.seed;
  m["has_bias"] = model.bias.has_value();
  m["fingerprint"] = lstm::fingerprint(model);
  json list = json::array();
  for (const auto& b : blobs) {
    list.push_back(blob_entry(b));
  }
  m["blobs"] = list;
  return dump(m);
}

std::vector<Blob> approx_blobs(const approx::ApproxLstm& model) {
  std::vector<Blob> blobs;
  for (lstm::Gate g : lstm::kGateOrder) {
    const std::string tag = lstm::gate_tag(g);
    blobs.push_back({"gate_" + tag, "gate_" + tag + ".bin", encode_gate(model.gate(g))});
  }
  blobs.push_back({"head", "head.f64", encode_f64(model.head.values())});
  return blobs;
}

std::string approx_manifest_from(const approx::ApproxLstm& model, const std::vector<Blob>& blobs) {
  json m;
  m["format"] = kApproxFormat;
  m["version"] = kApproxFormatVersion;
  m["endianness"] = "little";
  m["dtype"] = "float64";
  m["input_dim"] = model.input_dim;
  m["hidden_dim"] = model.hidden_dim;
  m["actions"] = model.actions();
  m["gate_order"] = json::array({"f", "i", "c", "o"});
  m["nz"] = model.config.nz;
  m["n_steps"] = model.config.n_steps;
  m["source_fingerprint"] = model.source_fingerprint;
  json list = json::array();
  for (const auto& b : blobs) {
    list.push_back(blob_entry(b));
  }
  m["blobs"] = list;
  return dump(m);
}

} // namespace

std::size_t Dataset::frame_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sequences) {
    n += s.size();
  }
  return n;
}

std::string model_manifest(const lstm::LstmModel& model) {
  return model_manifest_from(model, model_blobs(model));
}

void save_model(const lstm::LstmModel& model, const fs::path& dir) {
  model.validate();
  const auto blobs = model_blobs(model);
  write_blobs(dir, blobs, model_manifest_from(model, blobs));
}

lstm::LstmModel load_model(const fs::path& dir) {
  const json m = parse_manifest(dir);
  check_header(m, kModelFormat, kModelFormatVersion);
  check_gate_order(m);
  if (m.value("dtype", "") != "float32") {
    throw FormatError(Kind::structural, "model dtype must be float32");
  }
  lstm::LstmModel model;
  model.input_dim = get_dim(m, "input_dim");
  model.hidden_dim = get_dim(m, "hidden_dim");
  const std::size_t actions = get_dim(m, "actions");
  const std::size_t r = model.hidden_dim;
  const std::size_t c = model.augmented_dim();
  const json& blobs = m.contains("blobs") ? m.at("blobs") : json::array();
  for (lstm::Gate g : lstm::kGateOrder) {
    const std::string name = std::string("gate_") + lstm::gate_tag(g);
    model.gates[static_cast<std::size_t>(g)] =
        decode_matrix_f32(read_blob(dir, blobs, name, 4 * r * c), r, c);
  }
  model.head = decode_matrix_f32(read_blob(dir, blobs, "head", 4 * actions * r), actions, r);
  if (m.value("has_bias", false)) {
    std::array<DenseVector, lstm::kGateCount> bias;
    for (lstm::Gate g : lstm::kGateOrder) {
      const std::string name = std::string("bias_") + lstm::gate_tag(g);
      const auto data = read_blob(dir, blobs, name, 4 * r);
      DenseVector b(r);
      for (std::size_t k = 0; k < r; ++k) {
        b[k] = bytes::get_f32(data, 4 * k);
      }
      bias[static_cast<std::size_t>(g)] = std::move(b);
    }
    model.bias = std::move(bias);
  }
  model.name = m.value("name", "");
  model.seed = m.value("seed", std::uint64_t{0});
  try {
    model.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(Kind::structural, e.what());
  }
  for (const auto& w : model.gates) {
    if (!w.all_finite()) {
      throw FormatError(Kind::structural, "model contains non-finite weights");
    }
  }
  if (m.value("fingerprint", "") != lstm::fingerprint(model)) {
    throw FormatError(Kind::hash_mismatch, "model fingerprint does not match its weights");
  }
  return model;
}

std::string approx_manifest(const approx::ApproxLstm& model) {
  return approx_manifest_from(model, approx_blobs(model));
}

void save_approx(const approx::ApproxLstm& model, const fs::path& dir) {
  model.validate();
  const auto blobs = approx_blobs(model);
  write_blobs(dir, blobs, approx_manifest_from(model, blobs));
}

approx::ApproxLstm load_approx(const fs::path& dir) {
  const json m = parse_manifest(dir);
  check_header(m, kApproxFormat, kApproxFormatVersion);
  check_gate_order(m);
  approx::ApproxLstm model;
  model.input_dim = get_dim(m, "input_dim");
  model.hidden_dim = get_dim(m, "hidden_dim");
  const std::size_t actions = get_dim(m, "actions");
  model.config.nz = get_dim(m, "nz");
  model.config.n_steps = get_dim(m, "n_steps");
  model.source_fingerprint = m.value("source_fingerprint", "");
  const std::size_t r = model.hidden_dim;
  const std::size_t c = model.augmented_dim();
  const json& blobs = m.contains("blobs") ? m.at("blobs") : json::array();
  for (lstm::Gate g : lstm::kGateOrder) {
    const std::string name = std::string("gate_") + lstm::gate_tag(g);
    const json* entry = nullptr;
    for (const auto& b : blobs) {
      if (b.value("name", "") == name) {
        entry = &b;
      }
    }
    const std::size_t declared = entry != nullptr ? entry->value("bytes", std::size_t{0}) : 0;
    const auto data = read_blob(dir, blobs, name, declared);
    model.gates[static_cast<std::size_t>(g)] =
        decode_gate(data, g, r, c, model.config.nz, model.config.n_steps, name);
  }
  const auto head = read_blob(dir, blobs, "head", 8 * actions * r);
  std::vector<double> hv(actions * r);
  for (std::size_t k = 0; k < hv.size(); ++k) {
    hv[k] = bytes::get_f64(head, 8 * k);
  }
  model.head = DenseMatrix(actions, r, std::move(hv));
  try {
    model.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(Kind::structural, e.what());
  }
  return model;
}

std::vector<std::byte> encode_dataset(const Dataset& data) {
  std::vector<std::byte> out;
  for (char ch : kDatasetMagic) {
    out.push_back(static_cast<std::byte>(ch));
  }
  bytes::put_u32(out, kDatasetFormatVersion);
  for (char ch : kLittleTag) {
    out.push_back(static_cast<std::byte>(ch));
  }
  bytes::put_u32(out, static_cast<std::uint32_t>(data.frame_dim));
  bytes::put_u64(out, data.frame_count());
  bytes::put_u32(out, static_cast<std::uint32_t>(data.sequences.size()));
  for (const auto& s : data.sequences) {
    bytes::put_u64(out, s.size());
  }
  for (const auto& s : data.sequences) {
    for (const auto& frame : s) {
      if (frame.size() != data.frame_dim) {
        throw ArgumentError("encode_dataset: frame length differs from frame_dim");
      }
      for (double v : frame.values()) {
        bytes::put_f32(out, v);
      }
    }
  }
  return out;
}

Dataset decode_dataset(std::span<const std::byte> in) {
  constexpr std::size_t kFixed = 4 + 4 + 4 + 4 + 8 + 4;
  if (in.size() < kFixed) {
    throw FormatError(Kind::truncated, "dataset header is truncated");
  }
  if (std::memcmp(in.data(), kDatasetMagic.data(), 4) != 0) {
    throw FormatError(Kind::structural, "dataset magic bytes are not PLDS");
  }
  const std::uint32_t version = bytes::get_u32(in, 4);
  if (version != kDatasetFormatVersion) {
    throw FormatError(Kind::unknown_version,
                      "unsupported dataset version " + std::to_string(version));
  }
  if (std::memcmp(in.data() + 8, kLittleTag.data(), 4) != 0) {
    throw FormatError(Kind::endianness, "dataset endianness tag is not LE");
  }
  Dataset data;
  data.frame_dim = bytes::get_u32(in, 12);
  const std::uint64_t frames = bytes::get_u64(in, 16);
  const std::uint32_t seqs = bytes::get_u32(in, 24);
  if (data.frame_dim < 1) {
    throw FormatError(Kind::structural, "dataset frame_dim must be >= 1");
  }
  const std::size_t header = kFixed + 8 * static_cast<std::size_t>(seqs);
  if (in.size() < header) {
    throw FormatError(Kind::truncated, "dataset sequence table is truncated");
  }
  std::vector<std::uint64_t> lengths(seqs);
  std::uint64_t total = 0;
  for (std::uint32_t s = 0; s < seqs; ++s) {
    lengths[s] = bytes::get_u64(in, kFixed + 8 * s);
    total += lengths[s];
  }
  if (total != frames) {
    throw FormatError(Kind::structural, "dataset sequence lengths do not sum to frame_count");
  }
  const std::size_t payload = static_cast<std::size_t>(frames) * data.frame_dim * 4;
  if (in.size() - header < payload) {
    throw FormatError(Kind::truncated, "dataset payload is truncated");
  }
  if (in.size() - header > payload) {
    throw FormatError(Kind::structural, "dataset payload is longer than frames x frame_dim");
  }
  std::size_t off = header;
  for (std::uint64_t len : lengths) {
    lstm::Sequence seq;
    seq.reserve(len);
    for (std::uint64_t f = 0; f < len; ++f) {
      DenseVector x(data.frame_dim);
      for (std::size_t k = 0; k < data.frame_dim; ++k, off += 4) {
        x[k] = bytes::get_f32(in, off);
      }
      if (!x.all_finite()) {
        throw FormatError(Kind::structural, "dataset contains non-finite values");
      }
      seq.push_back(std::move(x));
    }
    data.sequences.push_back(std::move(seq));
  }
  return data;
}

void save_dataset(const Dataset& data, const fs::path& path) {
  write_file(path, encode_dataset(data));
}

Dataset load_dataset(const fs::path& path) { return decode_dataset(read_file(path)); }

std::string dataset_hash(const Dataset& data) { return sha256_hex(encode_dataset(data)); }

lstm::LstmModel gen_synthetic(std::uint64_t seed, std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t actions) {
  if (input_dim < 1 || hidden_dim < 1 || actions < 2) {
    throw ArgumentError("gen_synthetic: need input_dim, hidden_dim >= 1 and actions >= 2");
  }
  lstm::LstmModel model;
  model.input_dim = input_dim;
  model.hidden_dim = hidden_dim;
  model.seed = seed;
  model.name = "synthetic-" + std::to_string(seed);
  const std::size_t c = model.augmented_dim();
  SplitMix64 rng(seed);
  const double gate_scale = 1.0 / std::sqrt(static_cast<double>(c));
  for (auto& w : model.gates) {
    w = DenseMatrix(hidden_dim, c);
    for (double& v : w.values()) {
      v = round_f32(gate_scale * rng.normal());
    }
  }
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  model.head = DenseMatrix(actions, hidden_dim);
  for (double& v : model.head.values()) {
    v = round_f32(head_scale * rng.normal());
  }
  return model;
}

Dataset gen_pilot(std::uint64_t seed, std::size_t frame_dim, std::size_t frames_per_sequence,
                  std::size_t sequences, double rho) {
  if (frame_dim < 1) {
    throw ArgumentError("gen_pilot: frame_dim must be >= 1");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ArgumentError("gen_pilot: rho must lie in [0, 1)");
  }
  Dataset data;
  data.frame_dim = frame_dim;
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (std::size_t s = 0; s < sequences; ++s) {
    SplitMix64 rng(derive_seed(seed, s));
    lstm::Sequence seq;
    std::vector<double> x(frame_dim);
    for (double& v : x) {
      v = rng.normal();
    }
    for (std::size_t f = 0; f < frames_per_sequence; ++f) {
      if (f > 0) {
        for (double& v : x) {
          v = rho * v + innovation * rng.normal();
        }
      }
      DenseVector frame(frame_dim);
      for (std::size_t k = 0; k < frame_dim; ++k) {
        frame[k] = round_f32(x[k]);
      }
      seq.push_back(std::move(frame));
    }
    data.sequences.push_back(std::move(seq));
  }
  return data;
}

std::vector<std::byte> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(Kind::io, "cannot open " + path.string());
  }
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

void write_file(const fs::path& path, std::span<const std::byte> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError(Kind::io, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw FormatError(Kind::io, "write failed for " + path.string());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::string read_text(const fs::path& path) {
  const auto data = read_file(path);
  return std::string(reinterpret_cast<const char*>(data.data()), data.size());
}

} // namespace proglstm::io
