#pragma once

#include <pnkrylov/rng.hpp>

#include <algorithm>
#include <cstdint>

namespace pnk {

/// Reduced QR factorization M = Q R of a tall-skinny matrix that grows one column at a time.
///
/// Each appended column c contributes r = Qᵀc, q̃ = c − Q r (done twice, classical
/// Gram–Schmidt with one reorthogonalization), r_kk = ‖q̃‖. When r_kk falls below
/// 1e-14‖c‖ the column lies in span(Q); q̃ is then replaced by a seeded random
/// unit vector orthogonal to Q and r_kk is set to 0, so Q stays orthonormal and
/// M = Q R still holds. The Gram matrix RᵀR is kept up to date block-wise.
class IncrementalQR {
 public:
  static constexpr double kDependenceTol = 1e-14;

  IncrementalQR() = default;
  IncrementalQR(Index rows, Index capacity) : q_(rows, std::max<Index>(capacity, 1)) {
    const Index cap = q_.cols();
    r_.setZero(cap, cap);
    gram_.setZero(cap, cap);
  }

  Index rows() const { return q_.rows(); }
  Index size() const { return k_; }

  auto Q() const { return q_.leftCols(k_); }
  auto R() const { return r_.topLeftCorner(k_, k_); }
  /// RᵀR, which equals MᵀM.
  auto gram() const { return gram_.topLeftCorner(k_, k_); }

  /// Appends a column; returns r_kk (0 for a dependent column).
  double append(const Eigen::Ref<const Vector>& col) {
    detail::require_dim(col.size() == rows(), "IncrementalQR::append: column has wrong length");
    if (k_ == q_.cols()) grow();
    const Index k = k_;
    const auto qk = q_.leftCols(k);

    Vector r = qk.transpose() * col;
    Vector q = col - qk * r;
    const Vector r2 = qk.transpose() * q;
    q.noalias() -= qk * r2;
    r += r2;

    double rkk = q.norm();
    if (!(rkk > kDependenceTol * col.norm())) {
      q = orthogonal_filler();
      rkk = 0.0;
    } else {
      q /= rkk;
    }

    q_.col(k) = q;
    r_.col(k).head(k) = r;
    r_(k, k) = rkk;

    // [R₋ᵀR₋, R₋ᵀr; rᵀR₋, rᵀr + r_kk²]
    const Vector cross = r_.topLeftCorner(k, k).triangularView<Eigen::Upper>().transpose() * r;
    gram_.col(k).head(k) = cross;
    gram_.row(k).head(k) = cross.transpose();
    gram_(k, k) = r.squaredNorm() + rkk * rkk;
    ++k_;
    return rkk;
  }

 private:
  void grow() {
    const Index cap = 2 * q_.cols();
    q_.conservativeResize(Eigen::NoChange, cap);
    r_.conservativeResizeLike(Matrix::Zero(cap, cap));
    gram_.conservativeResizeLike(Matrix::Zero(cap, cap));
  }

  // Unit vector orthogonal to the current Q, or zero when Q already spans R^rows.
  Vector orthogonal_filler() const {
    const auto qk = q_.leftCols(k_);
    CounterRng rng(0x51ab1eULL + static_cast<std::uint64_t>(k_), 7);
    Vector q = rng.gaussian(rows());
    for (int pass = 0; pass < 2; ++pass) q.noalias() -= qk * (qk.transpose() * q);
    const double nq = q.norm();
    if (k_ >= rows() || !(nq > 1e-8)) return Vector::Zero(rows());
    return q / nq;
  }

  Matrix q_;
  Matrix r_;
  Matrix gram_;
  Index k_ = 0;
};

}  // namespace pnk
