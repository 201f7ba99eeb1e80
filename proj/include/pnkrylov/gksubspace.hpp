#pragma once

#include <pnkrylov/incremental_qr.hpp>
#include <pnkrylov/linop.hpp>

#include <algorithm>
#include <cmath>

namespace pnk {

/// Which products of the basis are cached. Each cached product costs one
/// operator application per new basis vector.
struct SubspaceCaches {
  bool normal = true;       // AᵀA V (one Aᵀ per column)
  bool reg_normal = false;  // LᵀL V (one Lᵀ per column)
  bool reg_qr = false;      // incremental QR of L V
};

enum class ExpandOutcome { expanded, converged_subspace };

/// Orthonormal basis V of a generalized Krylov subspace together with the
/// tall-skinny products A V, AᵀA V, L V, LᵀL V and the QR factors of A V (and L V).
///
/// The basis starts at Aᵀb/‖Aᵀb‖. Products of new columns are formed lazily by
/// sync(), which expand() calls, so the cost of a basis vector is exactly one
/// A, one L, and one Aᵀ / Lᵀ per cached normal product.
class GKSubspace {
 public:
  static constexpr double kReorthTrigger = 0.7;
  static constexpr double kBreakdownTol = 1e-14;

  GKSubspace(OperatorPtr a, OperatorPtr l, const Eigen::Ref<const Vector>& b, SubspaceCaches caches = {},
             Index capacity = 64)
      : a_(std::move(a)), l_(std::move(l)), caches_(caches), b_(b) {
    detail::require_dim(b_.size() == a_->rows(), "GKSubspace: b does not match A");
    detail::require_dim(l_->cols() == a_->cols(), "GKSubspace: L and A have different column counts");
    const Index n = a_->cols();
    capacity = std::clamp<Index>(capacity, 1, n);
    atb_ = a_->apply_adjoint(b_);
    atb_norm_ = atb_.norm();
    if (!(atb_norm_ > 0.0) || !std::isfinite(atb_norm_))
      throw DegenerateProblem("Aᵀb vanishes: the data is orthogonal to the range of A");

    v_.resize(n, capacity);
    av_.resize(a_->rows(), capacity);
    lv_.resize(l_->rows(), capacity);
    if (caches_.normal) atav_.resize(n, capacity);
    if (caches_.reg_normal) ltlv_.resize(n, capacity);
    qr_a_ = IncrementalQR(a_->rows(), capacity);
    if (caches_.reg_qr) qr_l_ = IncrementalQR(l_->rows(), capacity);
    qtb_.resize(capacity);

    v_.col(0) = atb_ / atb_norm_;
    k_ = 1;
  }

  const LinearOperator& A() const { return *a_; }
  const LinearOperator& L() const { return *l_; }
  const Vector& b() const { return b_; }
  const SubspaceCaches& caches() const { return caches_; }

  /// Aᵀb, the first (unnormalized) basis direction.
  const Vector& atb() const { return atb_; }
  double atb_norm() const { return atb_norm_; }

  Index dim() const { return k_; }
  Index ambient_dim() const { return v_.rows(); }
  bool full() const { return k_ >= ambient_dim(); }

  auto V() const { return v_.leftCols(k_); }
  auto AV() const { return av_.leftCols(synced_); }
  auto AtAV() const { return atav_.leftCols(synced_); }
  auto LV() const { return lv_.leftCols(synced_); }
  auto LtLV() const { return ltlv_.leftCols(synced_); }
  const IncrementalQR& qr_A() const { return qr_a_; }
  const IncrementalQR& qr_L() const { return qr_l_; }

  /// VᵀAᵀb = ‖Aᵀb‖ e₁.
  Vector d() const {
    Vector d = Vector::Zero(k_);
    d[0] = atb_norm_;
    return d;
  }

  /// Q_Aᵀ b for the synced columns.
  auto qtb() const { return qtb_.head(synced_); }

  bool synced() const { return synced_ == k_; }

  /// Forms the cached products for basis columns that do not have them yet.
  void sync() {
    for (; synced_ < k_; ++synced_) {
      const Index j = synced_;
      const Vector av = a_->apply(v_.col(j));
      av_.col(j) = av;
      if (caches_.normal) atav_.col(j) = a_->apply_adjoint(av);
      const Vector lv = l_->apply(v_.col(j));
      lv_.col(j) = lv;
      if (caches_.reg_normal) ltlv_.col(j) = l_->apply_adjoint(lv);
      qr_a_.append(av);
      qtb_[j] = qr_a_.Q().col(j).dot(b_);
      if (caches_.reg_qr) qr_l_.append(lv);
    }
  }

  /// Orthogonalizes v_tilde against V (modified Gram–Schmidt, a second pass when
  /// the norm dropped below 0.7‖v_tilde‖), appends it and syncs the caches.
  ExpandOutcome expand(const Eigen::Ref<const Vector>& v_tilde) {
    detail::require_dim(v_tilde.size() == ambient_dim(), "GKSubspace::expand: vector has wrong length");
    if (!v_tilde.allFinite()) throw InvalidParameter("GKSubspace::expand: non-finite expansion vector");
    const double original = v_tilde.norm();
    if (full() || !(original > 0.0)) return ExpandOutcome::converged_subspace;

    Vector v = v_tilde;
    mgs_pass(v);
    if (v.norm() < kReorthTrigger * original) mgs_pass(v);
    const double remaining = v.norm();
    if (!(remaining > kBreakdownTol * original)) return ExpandOutcome::converged_subspace;

    if (k_ == v_.cols()) grow();
    v_.col(k_) = v / remaining;
    ++k_;
    sync();
    return ExpandOutcome::expanded;
  }

  /// x = V y for a coefficient vector of length dim().
  Vector reconstruct(const Eigen::Ref<const Vector>& y) const {
    detail::require_dim(y.size() == k_, "GKSubspace::reconstruct: coefficient vector has wrong length");
    return V() * y;
  }

 private:
  void mgs_pass(Vector& v) const {
    for (Index j = 0; j < k_; ++j) v.noalias() -= v_.col(j).dot(v) * v_.col(j);
  }

  void grow() {
    const Index cap = std::min<Index>(2 * v_.cols(), ambient_dim());
    v_.conservativeResize(Eigen::NoChange, cap);
    av_.conservativeResize(Eigen::NoChange, cap);
    lv_.conservativeResize(Eigen::NoChange, cap);
    if (caches_.normal) atav_.conservativeResize(Eigen::NoChange, cap);
    if (caches_.reg_normal) ltlv_.conservativeResize(Eigen::NoChange, cap);
    qtb_.conservativeResize(cap);
  }

  OperatorPtr a_;
  OperatorPtr l_;
  SubspaceCaches caches_;
  Vector b_;
  Vector atb_;
  double atb_norm_ = 0.0;

  Matrix v_;
  Matrix av_;
  Matrix atav_;
  Matrix lv_;
  Matrix ltlv_;
  IncrementalQR qr_a_;
  IncrementalQR qr_l_;
  Vector qtb_;
  Index k_ = 0;
  Index synced_ = 0;
};

}  // namespace pnk
