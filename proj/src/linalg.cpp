#include "proglstm/linalg.hpp"

#include "proglstm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace proglstm::linalg {

namespace {

double dot_raw(const double* a, const double* b, std::size_t n) noexcept {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) {
    s0 += a[i] * b[i];
  }
  return (s0 + s1) + (s2 + s3);
}

// y = G x for a symmetric n x n G, in column-axpy form.
void gram_apply(const std::vector<double>& g, std::size_t n, const std::vector<double>& x,
                std::vector<double>& y) noexcept {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    const double* col = g.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += xj * col[i];
    }
  }
}

void normalize(std::vector<double>& x) noexcept {
  const double nrm = std::sqrt(dot_raw(x.data(), x.data(), x.size()));
  for (double& e : x) {
    e /= nrm;
  }
}

std::vector<double> start_vector(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> x(n);
  do {
    for (double& e : x) {
      e = rng.symmetric();
    }
  } while (std::all_of(x.begin(), x.end(), [](double e) { return e == 0.0; }));
  normalize(x);
  return x;
}

// Gram matrix of the smaller side: M M^T when rows <= cols, else M^T M.
std::vector<double> gram_of(const DenseMatrix& m, bool row_side) {
  const std::size_t n = row_side ? m.rows() : m.cols();
  std::vector<double> g(n * n, 0.0);
  if (row_side) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ri = m.row(i);
      for (std::size_t j = 0; j <= i; ++j) {
        const double s = dot_raw(ri.data(), m.row(j).data(), m.cols());
        g[i * n + j] = s;
        g[j * n + i] = s;
      }
    }
  } else {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      for (std::size_t i = 0; i < n; ++i) {
        const double a = row[i];
        if (a == 0.0) {
          continue;
        }
        double* gi = g.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
          gi[j] += a * row[j];
        }
      }
    }
  }
  return g;
}

// Turns the converged Gram-side vector into a full triplet with
// M^T u = sigma v and the sign convention applied.
SingularTriplet finalize(const DenseMatrix& m, bool row_side, const std::vector<double>& x) {
  SingularTriplet t;
  if (row_side) {
    t.u = DenseVector(std::vector<double>(x));
  } else {
    std::vector<double> mu(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      mu[r] = dot_raw(m.row(r).data(), x.data(), m.cols());
    }
    normalize(mu);
    t.u = DenseVector(std::move(mu));
  }
  std::vector<double> w(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double ur = t.u[r];
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      w[c] += ur * row[c];
    }
  }
  t.sigma = std::sqrt(dot_raw(w.data(), w.data(), w.size()));
  for (double& e : w) {
    e /= t.sigma;
  }
  t.v = DenseVector(std::move(w));

  const auto first = std::find_if(t.u.values().begin(), t.u.values().end(),
                                  [](double e) { return e != 0.0; });
  if (first != t.u.values().end() && *first < 0.0) {
    for (double& e : t.u.values()) {
      e = -e;
    }
    for (double& e : t.v.values()) {
      e = -e;
    }
  }
  return t;
}

// Rayleigh-quotient estimate of the second Gram eigenvalue from a short
// power iteration restricted to the complement of x.
double second_eigenvalue_estimate(const std::vector<double>& g, std::size_t n,
                                  const std::vector<double>& x, std::uint64_t seed) {
  constexpr int kIters = 32;
  std::vector<double> z = start_vector(n, derive_seed(seed, 2));
  std::vector<double> y(n);
  auto project_out = [&](std::vector<double>& a) {
    const double c = dot_raw(a.data(), x.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] -= c * x[i];
    }
  };
  project_out(z);
  double lambda = 0.0;
  for (int it = 0; it < kIters; ++it) {
    const double nz = std::sqrt(dot_raw(z.data(), z.data(), n));
    if (nz == 0.0) {
      return 0.0;
    }
    for (double& e : z) {
      e /= nz;
    }
    gram_apply(g, n, z, y);
    project_out(y);
    lambda = dot_raw(z.data(), y.data(), n);
    z.swap(y);
  }
  return lambda;
}

} // namespace

bool DenseVector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double e) { return std::isfinite(e); });
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ArgumentError("DenseMatrix: data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(rows_) + "x" +
                        std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw ArgumentError("DenseMatrix::from_rows: ragged rows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double e) { return std::isfinite(e); });
}

SparseVector::SparseVector(std::size_t len, std::vector<std::uint32_t> indices,
                           std::vector<double> values)
    : len_(len), indices_(std::move(indices)), values_(std::move(values)) {
  if (indices_.size() != values_.size()) {
    throw ArgumentError("SparseVector: indices/values length mismatch");
  }
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] >= len_) {
      throw ArgumentError("SparseVector: index out of range");
    }
    if (k > 0 && indices_[k] <= indices_[k - 1]) {
      throw ArgumentError("SparseVector: indices not strictly increasing");
    }
    if (values_[k] == 0.0) {
      throw ArgumentError("SparseVector: stored value is zero");
    }
  }
}

DenseVector SparseVector::to_dense() const {
  DenseVector d(len_);
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    d[indices_[k]] = values_[k];
  }
  return d;
}

double SparseVector::norm_sq() const noexcept {
  double s = 0.0;
  for (double v : values_) {
    s += v * v;
  }
  return s;
}

SingularTriplet leading_triplet(const DenseMatrix& m, const TripletOptions& options) {
  if (!(options.tol > 0.0) || options.max_iters < 1) {
    throw ArgumentError("leading_triplet: tol must be > 0 and max_iters >= 1");
  }
  if (m.rows() == 0 || m.cols() == 0) {
    throw ArgumentError("leading_triplet: empty matrix");
  }
  const auto vals = m.values();
  if (std::all_of(vals.begin(), vals.end(), [](double e) { return e == 0.0; })) {
    SingularTriplet t;
    t.zero_matrix = true;
    t.u = DenseVector(m.rows());
    t.v = DenseVector(m.cols());
    t.u[0] = 1.0;
    t.v[0] = 1.0;
    return t;
  }

  const bool row_side = m.rows() <= m.cols();
  const std::size_t n = row_side ? m.rows() : m.cols();
  const std::vector<double> g = gram_of(m, row_side);

  std::vector<double> x = start_vector(n, options.seed);
  std::vector<double> y(n);
  double sigma_prev = 0.0;
  double prev_delta = 0.0;
  double contraction = 0.0;
  bool converged = false;
  unsigned it = 1;
  for (; it <= options.max_iters; ++it) {
    gram_apply(g, n, x, y);
    const double lambda = dot_raw(x.data(), y.data(), n);
    const double ny = std::sqrt(dot_raw(y.data(), y.data(), n));
    if (ny == 0.0) {
      // x fell into the null space; restart on the heaviest coordinate.
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (g[i * n + i] > g[best * n + best]) {
          best = i;
        }
      }
      std::fill(x.begin(), x.end(), 0.0);
      x[best] = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = y[i] / ny;
    }
    const double sigma = std::sqrt(std::max(lambda, 0.0));
    const double delta = std::fabs(sigma - sigma_prev);
    if (it > 1 && delta <= options.tol * sigma) {
      converged = true;
      break;
    }
    if (prev_delta > 0.0) {
      contraction = delta / prev_delta;
    }
    prev_delta = delta;
    sigma_prev = sigma;
  }

  SingularTriplet t = finalize(m, row_side, x);
  t.iterations = std::min(it, options.max_iters);
  // A steady but slow contraction means the top two singular values nearly
  // tie; any vector in that subspace is an acceptable answer.
  const bool slow_tie = contraction > 0.99 && contraction < 1.0;
  if (!converged && slow_tie) {
    t.near_degenerate = true;
    return t;
  }
  if (!converged) {
    char detail[96];
    std::snprintf(detail, sizeof detail, " (last relative change %.3g, contraction %.6f)",
                  prev_delta / sigma_prev, contraction);
    throw ConvergenceError("leading_triplet: no convergence within " +
                               std::to_string(options.max_iters) + " iterations" + detail,
                           std::move(t));
  }
  if (options.check_degeneracy && n >= 2) {
    std::vector<double> gx(n);
    gram_apply(g, n, x, gx);
    const double lambda1 = dot_raw(x.data(), gx.data(), n);
    const double lambda2 = second_eigenvalue_estimate(g, n, x, options.seed);
    t.near_degenerate = contraction > 0.999 || lambda2 >= (1.0 - 1e-6) * lambda1;
  }
  return t;
}

SparseVector prune_vector(const DenseVector& v, std::size_t nz) {
  if (nz == 0) {
    throw ArgumentError("prune_vector: nz must be >= 1");
  }
  if (nz > v.size()) {
    throw ArgumentError("prune_vector: nz exceeds vector length");
  }
  std::vector<std::uint32_t> order;
  order.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) {
      order.push_back(static_cast<std::uint32_t>(i));
    }
  }
  const auto before = [&v](std::uint32_t a, std::uint32_t b) {
    const double ma = std::fabs(v[a]);
    const double mb = std::fabs(v[b]);
    return ma > mb || (ma == mb && a < b);
  };
  const std::size_t keep = std::min(nz, order.size());
  if (keep < order.size()) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                     order.end(), before);
    order.resize(keep);
  }
  std::sort(order.begin(), order.end());
  std::vector<double> values;
  values.reserve(keep);
  for (std::uint32_t i : order) {
    values.push_back(v[i]);
  }
  return SparseVector(v.size(), std::move(order), std::move(values));
}

double sparse_dot(const SparseVector& s, const DenseVector& d, OpCounter* counter) {
  if (s.size() != d.size()) {
    throw ArgumentError("sparse_dot: length mismatch (" + std::to_string(s.size()) + " vs " +
                        std::to_string(d.size()) + ")");
  }
  const auto idx = s.indices();
  const auto val = s.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    acc += val[k] * d[idx[k]];
  }
  charge(counter, 2 * idx.size());
  return acc;
}

DenseVector matvec(const DenseMatrix& m, const DenseVector& x, OpCounter* counter) {
  if (m.cols() != x.size()) {
    throw ArgumentError("matvec: matrix has " + std::to_string(m.cols()) +
                        " columns but vector has length " + std::to_string(x.size()));
  }
  DenseVector y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      acc += row[c] * x[c];
    }
    y[r] = acc;
  }
  charge(counter, 2 * m.rows() * m.cols());
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ArgumentError("dot: length mismatch");
  }
  return dot_raw(a.data(), b.data(), a.size());
}

double norm2(std::span<const double> a) { return std::sqrt(dot_raw(a.data(), a.data(), a.size())); }

double frobenius_norm_sq(const DenseMatrix& m) {
  const auto v = m.values();
  return dot_raw(v.data(), v.data(), v.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw ArgumentError("axpy: length mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += alpha * x[i];
  }
}

} // namespace proglstm::linalg
