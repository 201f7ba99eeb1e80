#pragma once

#include <pnkrylov/types.hpp>

#include <Eigen/SparseCore>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pnk {

/// Forward and adjoint application counts of one operator.
struct ApplyCounts {
  std::uint64_t forward = 0;
  std::uint64_t adjoint = 0;
};

/// A linear map R^cols -> R^rows given by its action and the action of its transpose.
///
/// Every call to apply() / apply_adjoint() bumps a counter. The counters are the
/// only mutable state and are atomic, so one operator may be shared by several
/// solver runs on different threads. materialize() bypasses the counters.
class LinearOperator {
 public:
  LinearOperator(Index rows, Index cols) : rows_(rows), cols_(cols) {
    detail::require_dim(rows > 0 && cols > 0, "operator dimensions must be positive");
  }
  LinearOperator(const LinearOperator&) = delete;
  LinearOperator& operator=(const LinearOperator&) = delete;
  virtual ~LinearOperator() = default;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Vector apply(const Eigen::Ref<const Vector>& x) const {
    detail::require_dim(x.size() == cols_, name() + ": apply input has wrong length");
    Vector y(rows_);
    forward(x, y);
    forward_count_.fetch_add(1, std::memory_order_relaxed);
    return y;
  }

  Vector apply_adjoint(const Eigen::Ref<const Vector>& y) const {
    detail::require_dim(y.size() == rows_, name() + ": adjoint input has wrong length");
    Vector x(cols_);
    adjoint(y, x);
    adjoint_count_.fetch_add(1, std::memory_order_relaxed);
    return x;
  }

  std::uint64_t forward_count() const { return forward_count_.load(std::memory_order_relaxed); }
  std::uint64_t adjoint_count() const { return adjoint_count_.load(std::memory_order_relaxed); }
  ApplyCounts counts() const { return {forward_count(), adjoint_count()}; }
  void reset_counters() const {
    forward_count_.store(0, std::memory_order_relaxed);
    adjoint_count_.store(0, std::memory_order_relaxed);
  }

  /// Dense copy of the operator, built column by column. Not counted.
  virtual Matrix materialize() const {
    Matrix out(rows_, cols_);
    Vector e = Vector::Zero(cols_);
    Vector col(rows_);
    for (Index j = 0; j < cols_; ++j) {
      e[j] = 1.0;
      forward(e, col);
      out.col(j) = col;
      e[j] = 0.0;
    }
    return out;
  }

  virtual std::string name() const = 0;

 protected:
  // y and x arrive sized to rows() and cols() respectively.
  virtual void forward(const Eigen::Ref<const Vector>& x, Vector& y) const = 0;
  virtual void adjoint(const Eigen::Ref<const Vector>& y, Vector& x) const = 0;

 private:
  Index rows_;
  Index cols_;
  mutable std::atomic<std::uint64_t> forward_count_{0};
  mutable std::atomic<std::uint64_t> adjoint_count_{0};
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Explicitly stored dense matrix.
class DenseMatrixOperator final : public LinearOperator {
 public:
  explicit DenseMatrixOperator(RowMajorMatrix entries)
      : LinearOperator(entries.rows(), entries.cols()), entries_(std::move(entries)) {
    if (!entries_.allFinite()) throw InvalidParameter("dense matrix has non-finite entries");
  }

  const RowMajorMatrix& entries() const { return entries_; }
  Matrix materialize() const override { return entries_; }
  std::string name() const override { return "dense"; }

 protected:
  void forward(const Eigen::Ref<const Vector>& x, Vector& y) const override { y.noalias() = entries_ * x; }
  void adjoint(const Eigen::Ref<const Vector>& y, Vector& x) const override {
    x.noalias() = entries_.transpose() * y;
  }

 private:
  RowMajorMatrix entries_;
};

/// Compressed sparse row storage.
struct SparseCSR {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_offsets;  // rows + 1 entries
  std::vector<Index> col_indices;
  std::vector<double> values;

  /// Throws InvalidParameter unless offsets are monotone and columns sorted, unique and in range.
  void validate() const {
    detail::require_dim(rows > 0 && cols > 0, "CSR dimensions must be positive");
    detail::require_param(static_cast<Index>(row_offsets.size()) == rows + 1, "CSR row_offsets size");
    detail::require_param(row_offsets.front() == 0, "CSR row_offsets must start at 0");
    detail::require_param(col_indices.size() == values.size(), "CSR index/value size mismatch");
    detail::require_param(static_cast<std::size_t>(row_offsets.back()) == values.size(), "CSR nnz mismatch");
    for (Index i = 0; i < rows; ++i) {
      const Index lo = row_offsets[i];
      const Index hi = row_offsets[i + 1];
      detail::require_param(lo <= hi, "CSR row_offsets must be non-decreasing");
      for (Index p = lo; p < hi; ++p) {
        detail::require_param(col_indices[p] >= 0 && col_indices[p] < cols, "CSR column index out of range");
        detail::require_param(p == lo || col_indices[p - 1] < col_indices[p], "CSR columns must be sorted per row");
        detail::require_param(std::isfinite(values[p]), "CSR value is not finite");
      }
    }
  }

  /// Builds a CSR matrix from (row, col, value) triplets; duplicates are summed.
  static SparseCSR from_triplets(Index rows, Index cols, std::vector<Eigen::Triplet<double>> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
      return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
    });
    SparseCSR out;
    out.rows = rows;
    out.cols = cols;
    out.row_offsets.assign(rows + 1, 0);
    Index last_row = -1;
    Index last_col = -1;
    for (const auto& t : triplets) {
      detail::require_param(t.row() >= 0 && t.row() < rows && t.col() >= 0 && t.col() < cols,
                            "triplet index out of range");
      if (t.row() == last_row && t.col() == last_col) {
        out.values.back() += t.value();
        continue;
      }
      out.col_indices.push_back(t.col());
      out.values.push_back(t.value());
      ++out.row_offsets[t.row() + 1];
      last_row = t.row();
      last_col = t.col();
    }
    for (Index i = 0; i < rows; ++i) out.row_offsets[i + 1] += out.row_offsets[i];
    out.validate();
    return out;
  }
};

class SparseCSROperator final : public LinearOperator {
 public:
  explicit SparseCSROperator(SparseCSR csr) : LinearOperator(csr.rows, csr.cols), csr_(std::move(csr)) {
    csr_.validate();
  }

  const SparseCSR& csr() const { return csr_; }
  std::string name() const override { return "csr"; }

 protected:
  void forward(const Eigen::Ref<const Vector>& x, Vector& y) const override {
    for (Index i = 0; i < csr_.rows; ++i) {
      double acc = 0.0;
      for (Index p = csr_.row_offsets[i]; p < csr_.row_offsets[i + 1]; ++p) acc += csr_.values[p] * x[csr_.col_indices[p]];
      y[i] = acc;
    }
  }
  void adjoint(const Eigen::Ref<const Vector>& y, Vector& x) const override {
    x.setZero();
    for (Index i = 0; i < csr_.rows; ++i)
      for (Index p = csr_.row_offsets[i]; p < csr_.row_offsets[i + 1]; ++p) x[csr_.col_indices[p]] += csr_.values[p] * y[i];
  }

 private:
  SparseCSR csr_;
};

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(Index n) : LinearOperator(n, n) {}
  std::string name() const override { return "identity"; }

 protected:
  void forward(const Eigen::Ref<const Vector>& x, Vector& y) const override { y = x; }
  void adjoint(const Eigen::Ref<const Vector>& y, Vector& x) const override { x = y; }
};

/// Forward differences (Dx)_i = x_i - x_{i+1}, shape (n-1) x n.
class FiniteDifference1D final : public LinearOperator {
 public:
  explicit FiniteDifference1D(Index n) : LinearOperator(n - 1 > 0 ? n - 1 : 1, n) {
    detail::require_dim(n >= 2, "fd1d requires n >= 2");
  }
  std::string name() const override { return "fd1d"; }

 protected:
  void forward(const Eigen::Ref<const Vector>& x, Vector& y) const override {
    const Index m = rows();
    y = x.head(m) - x.segment(1, m);
  }
  void adjoint(const Eigen::Ref<const Vector>& y, Vector& x) const override {
    const Index m = rows();
    x.setZero();
    x.head(m) += y;
    x.segment(1, m) -= y;
  }
};

/// Anisotropic TV stack [D ⊗ I_N; I_N ⊗ D] acting on column-stacked N x N images.
///
/// The first N(N-1) rows difference neighbouring columns of the image, the
/// remaining N(N-1) rows difference neighbouring rows. No boundary rows.
class TotalVariation2D final : public LinearOperator {
 public:
  explicit TotalVariation2D(Index side)
      : LinearOperator(side >= 2 ? 2 * side * side - 2 * side : 1, side >= 2 ? side * side : 1), side_(side) {
    detail::require_dim(side >= 2, "tv2d requires N >= 2");
  }

  Index side() const { return side_; }
  std::string name() const override { return "tv2d"; }

 protected:
  void forward(const Eigen::Ref<const Vector>& x, Vector& y) const override {
    const Index n = side_;
    const Index half = n * (n - 1);
    Eigen::Map<const Matrix> img(x.data(), n, n);
    Eigen::Map<Matrix> dh(y.data(), n, n - 1);
    Eigen::Map<Matrix> dv(y.data() + half, n - 1, n);
    dh = img.leftCols(n - 1) - img.rightCols(n - 1);
    dv = img.topRows(n - 1) - img.bottomRows(n - 1);
  }
  void adjoint(const Eigen::Ref<const Vector>& y, Vector& x) const override {
    const Index n = side_;
    const Index half = n * (n - 1);
    Eigen::Map<const Matrix> dh(y.data(), n, n - 1);
    Eigen::Map<const Matrix> dv(y.data() + half, n - 1, n);
    Eigen::Map<Matrix> img(x.data(), n, n);
    img.setZero();
    img.leftCols(n - 1) += dh;
    img.rightCols(n - 1) -= dh;
    img.topRows(n - 1) += dv;
    img.bottomRows(n - 1) -= dv;
  }

 private:
  Index side_;
};

/// (P ⊗ Q) acting on column-stacked images: vec(X) -> vec(Q X Pᵀ).
class KroneckerOperator final : public LinearOperator {
 public:
  KroneckerOperator(Matrix outer, Matrix inner)
      : LinearOperator(outer.rows() * inner.rows(), outer.cols() * inner.cols()),
        outer_(std::move(outer)),
        inner_(std::move(inner)) {}

  const Matrix& outer() const { return outer_; }
  const Matrix& inner() const { return inner_; }
  std::string name() const override { return "kronecker"; }

 protected:
  void forward(const Eigen::Ref<const Vector>& x, Vector& y) const override {
    Eigen::Map<const Matrix> img(x.data(), inner_.cols(), outer_.cols());
    Eigen::Map<Matrix> out(y.data(), inner_.rows(), outer_.rows());
    out.noalias() = inner_ * img * outer_.transpose();
  }
  void adjoint(const Eigen::Ref<const Vector>& y, Vector& x) const override {
    Eigen::Map<const Matrix> img(y.data(), inner_.rows(), outer_.rows());
    Eigen::Map<Matrix> out(x.data(), inner_.cols(), outer_.cols());
    out.noalias() = inner_.transpose() * img * outer_;
  }

 private:
  Matrix outer_;
  Matrix inner_;
};

inline OperatorPtr identity_operator(Index n) { return std::make_shared<IdentityOperator>(n); }

inline OperatorPtr fd1d(Index n) { return std::make_shared<FiniteDifference1D>(n); }

inline OperatorPtr tv2d_operator(Index side) { return std::make_shared<TotalVariation2D>(side); }

/// Symmetric Gaussian kernel exp(-((i-j)/(bandwidth*n))^2), scaled as D K D so
/// that it stays symmetric and every row sums to one.
inline Matrix gaussian_blur_matrix(Index n, double bandwidth) {
  detail::require_dim(n >= 2, "gaussian blur requires n >= 2");
  detail::require_param(std::isfinite(bandwidth) && bandwidth > 0.0, "blur bandwidth must be positive");
  const double width = bandwidth * static_cast<double>(n);
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const double r = static_cast<double>(i - j) / width;
      k(i, j) = std::exp(-r * r);
    }

  // Symmetric Sinkhorn balancing: d <- sqrt(d / (K d)).
  Vector d = Vector::Ones(n);
  for (int it = 0; it < 20000; ++it) {
    const Vector kd = k * d;
    const double err = (d.cwiseProduct(kd).array() - 1.0).abs().maxCoeff();
    if (err <= 2e-16) break;
    d = (d.array() / kd.array()).sqrt().matrix();
  }
  return d.asDiagonal() * k * d.asDiagonal();
}

inline OperatorPtr gaussian_blur_1d(Index n, double bandwidth) {
  return std::make_shared<DenseMatrixOperator>(RowMajorMatrix(gaussian_blur_matrix(n, bandwidth)));
}

inline OperatorPtr gaussian_blur_2d(Index side, double bandwidth) {
  Matrix b = gaussian_blur_matrix(side, bandwidth);
  return std::make_shared<KroneckerOperator>(b, b);
}

}  // namespace pnk
