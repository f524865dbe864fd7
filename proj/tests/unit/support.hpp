#pragma once

#include "proglstm/io.hpp"
#include "proglstm/linalg.hpp"
#include "proglstm/lstm.hpp"
#include "proglstm/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace testsupport {

using proglstm::linalg::DenseMatrix;
using proglstm::linalg::DenseVector;

inline DenseMatrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  proglstm::SplitMix64 rng(seed);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) {
    v = rng.normal();
  }
  return m;
}

inline DenseVector random_vector(std::uint64_t seed, std::size_t n) {
  proglstm::SplitMix64 rng(seed);
  DenseVector v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = rng.normal();
  }
  return v;
}

inline std::vector<proglstm::lstm::Sequence> pilot(std::uint64_t seed, std::size_t dim,
                                                   std::size_t frames, std::size_t sequences) {
  return proglstm::io::gen_pilot(seed, dim, frames, sequences).sequences;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("proglstm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace testsupport
