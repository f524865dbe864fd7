#pragma once

#include "proglstm/error.hpp"

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace proglstm::linalg {

/// Tally of counted arithmetic operations (one multiply or one add each).
struct OpCounter {
  std::uint64_t ops = 0;
  void add(std::uint64_t n) noexcept { ops += n; }
};

inline void charge(OpCounter* counter, std::uint64_t n) noexcept {
  if (counter != nullptr) {
    counter->add(n);
  }
}

class DenseVector {
public:
  DenseVector() = default;
  explicit DenseVector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  DenseVector(std::initializer_list<double> values) : data_(values) {}
  explicit DenseVector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }

  bool all_finite() const noexcept;

  bool operator==(const DenseVector&) const = default;

private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  bool all_finite() const noexcept;

  bool operator==(const DenseMatrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Sparse vector with strictly increasing indices and nonzero values.
class SparseVector {
public:
  SparseVector() = default;
  /// Validates the invariants; throws ArgumentError when violated.
  SparseVector(std::size_t len, std::vector<std::uint32_t> indices, std::vector<double> values);

  std::size_t size() const noexcept { return len_; }
  std::size_t nnz() const noexcept { return indices_.size(); }
  std::span<const std::uint32_t> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }

  DenseVector to_dense() const;
  double norm_sq() const noexcept;

  bool operator==(const SparseVector&) const = default;

private:
  std::size_t len_ = 0;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

struct SingularTriplet {
  double sigma = 0.0;
  DenseVector u;
  DenseVector v;
  unsigned iterations = 0;
  /// The input was identically zero; u and v are the first unit vectors.
  bool zero_matrix = false;
  /// The top singular value looks (nearly) repeated, so u/v are one valid
  /// choice from a multi-dimensional dominant subspace.
  bool near_degenerate = false;
};

inline constexpr std::uint64_t kDefaultTripletSeed = 0x5EED'0F'5EEDULL;

struct TripletOptions {
  double tol = 1e-10;
  unsigned max_iters = 10000;
  std::uint64_t seed = kDefaultTripletSeed;
  bool check_degeneracy = true;
};

/// Power iteration did not meet the tolerance within max_iters.
class ConvergenceError : public NumericError {
public:
  ConvergenceError(const std::string& what, SingularTriplet last)
      : NumericError(what), last_(std::move(last)) {}
  const SingularTriplet& last_iterate() const noexcept { return last_; }

private:
  SingularTriplet last_;
};

/// Dominant singular triplet by power iteration on the Gram operator of the
/// smaller side. The returned factors satisfy M^T u = sigma v exactly up to
/// roundoff, so ||M - sigma u v^T||_F^2 = ||M||_F^2 - sigma^2 holds even when
/// the dominant subspace is only approximately resolved. The first nonzero
/// entry of u is positive. Running out of iterations while the estimate is
/// still contracting steadily (a near tie at the top) returns the current
/// iterate flagged near_degenerate; any other failure throws
/// ConvergenceError.
SingularTriplet leading_triplet(const DenseMatrix& m, const TripletOptions& options = {});

/// Keeps the nz largest-magnitude entries (lowest index wins ties). Zeros are
/// never stored, so the result may hold fewer than nz entries.
SparseVector prune_vector(const DenseVector& v, std::size_t nz);

/// Charges 2 * nnz(s) ops.
double sparse_dot(const SparseVector& s, const DenseVector& d, OpCounter* counter = nullptr);

/// Row-by-row product with a single sequential accumulator per row. Charges
/// 2 * rows * cols ops.
DenseVector matvec(const DenseMatrix& m, const DenseVector& x, OpCounter* counter = nullptr);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double frobenius_norm_sq(const DenseMatrix& m);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

} // namespace proglstm::linalg
