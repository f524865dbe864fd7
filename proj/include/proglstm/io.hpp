#pragma once

#include "proglstm/approx.hpp"
#include "proglstm/lstm.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace proglstm::io {

namespace fs = std::filesystem;

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kApproxFormatVersion = 1;
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// Pilot frames grouped into independent sequences (state resets between
/// sequences).
struct Dataset {
  std::size_t frame_dim = 0;
  std::vector<lstm::Sequence> sequences;

  std::size_t frame_count() const noexcept;
  bool operator==(const Dataset&) const = default;
};

// Model container: a directory holding manifest.json and one raw
// little-endian float32 blob per matrix (gate_f.f32, gate_i.f32, gate_c.f32,
// gate_o.f32, head.f32, and bias_<g>.f32 when biases are present).
// The manifest records dims, gate order, endianness and a SHA-256 per blob.

/// Manifest text for a model (deterministic; keys sorted).
std::string model_manifest(const lstm::LstmModel& model);
void save_model(const lstm::LstmModel& model, const fs::path& dir);
/// Throws FormatError with kind hash_mismatch, truncated, unknown_version,
/// structural, endianness or io. Never returns a partial model.
lstm::LstmModel load_model(const fs::path& dir);

// Decomposition container: manifest.json plus one float64 blob per gate
// (gate_<g>.bin) and head.f64. Gate blob layout, repeated per step:
//   sigma f64 | u: R x f64 | nnz u32 | indices: nnz x u32 | values: nnz x f64
// followed by the residual norms, (n_steps + 1) x f64.

std::string approx_manifest(const approx::ApproxLstm& model);
void save_approx(const approx::ApproxLstm& model, const fs::path& dir);
approx::ApproxLstm load_approx(const fs::path& dir);

// Dataset container, a single little-endian file:
//   magic "PLDS" | version u32 | endianness tag "LE\0\0" | frame_dim u32 |
//   frame_count u64 | sequence_count u32 | sequence lengths u64[...] |
//   payload frame_count x frame_dim x f32

std::vector<std::byte> encode_dataset(const Dataset& data);
Dataset decode_dataset(std::span<const std::byte> bytes);
void save_dataset(const Dataset& data, const fs::path& path);
Dataset load_dataset(const fs::path& path);
std::string dataset_hash(const Dataset& data);

/// Seeded synthetic model. Gate weights are N(0, 1/C), head weights
/// N(0, 1/R); all values are rounded to float32 so the model survives the
/// container unchanged. Uses SplitMix64 normals, so output is identical on
/// every IEEE-754 platform.
lstm::LstmModel gen_synthetic(std::uint64_t seed, std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t actions);

/// Seeded pilot set: each sequence is a float32-rounded AR(1) process
/// x_t = rho x_{t-1} + sqrt(1 - rho^2) e_t with standard normal marginals,
/// standing in for features of consecutive video frames.
Dataset gen_pilot(std::uint64_t seed, std::size_t frame_dim, std::size_t frames_per_sequence,
                  std::size_t sequences, double rho = 0.9);

std::vector<std::byte> read_file(const fs::path& path);
void write_file(const fs::path& path, std::span<const std::byte> bytes);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

} // namespace proglstm::io
