#pragma once

#include <pnkrylov/linop.hpp>

#include <cmath>

namespace pnk {

enum class PenaltyKind { lp_smooth, quadratic };

/// Smooth surrogate Ψ̃ of the regularization term, evaluated at z = Lx.
///
/// lp_smooth:  Ψ̃(z) = (1/p) Σ (z_i² + β)^{p/2},  1 ≤ p ≤ 2, β > 0
/// quadratic:  Ψ̃(z) = ½‖z‖²  (β and p unused)
struct SmoothPenalty {
  PenaltyKind kind = PenaltyKind::lp_smooth;
  double p = 1.0;
  double beta = 1e-5;

  static SmoothPenalty lp(double p, double beta = 1e-5) {
    detail::require_param(p >= 1.0 && p <= 2.0, "penalty exponent p must lie in [1, 2]");
    detail::require_param(std::isfinite(beta) && beta > 0.0, "smoothing parameter beta must be positive");
    return {PenaltyKind::lp_smooth, p, beta};
  }
  static SmoothPenalty quadratic() { return {PenaltyKind::quadratic, 2.0, 0.0}; }

  bool is_quadratic() const { return kind == PenaltyKind::quadratic; }
};

inline double psi_value(const SmoothPenalty& pen, const Eigen::Ref<const Vector>& z) {
  if (pen.is_quadratic()) return 0.5 * z.squaredNorm();
  const double half_p = 0.5 * pen.p;
  return (z.array().square() + pen.beta).pow(half_p).sum() / pen.p;
}

/// z_i (z_i² + β)^{p/2 - 1}
inline Vector psi_gradient(const SmoothPenalty& pen, const Eigen::Ref<const Vector>& z) {
  if (pen.is_quadratic()) return z;
  const double e = 0.5 * pen.p - 1.0;
  return (z.array() * (z.array().square() + pen.beta).pow(e)).matrix();
}

/// Diagonal of ∇²Ψ̃: (z_i²+β)^{p/2-1} + 2(p/2-1) z_i² (z_i²+β)^{p/2-2}.
inline Vector psi_hessian_diag(const SmoothPenalty& pen, const Eigen::Ref<const Vector>& z) {
  if (pen.is_quadratic()) return Vector::Ones(z.size());
  const double e = 0.5 * pen.p - 1.0;
  const auto s = (z.array().square() + pen.beta).eval();
  // Factored form (z²+β)^{e-1} ((1+2e) z² + β) avoids cancellation for p < 2.
  return (s.pow(e - 1.0) * ((1.0 + 2.0 * e) * z.array().square() + pen.beta)).matrix();
}

/// ∇(Ψ̃∘L)(x) = Lᵀ ∇Ψ̃(Lx). One forward and one adjoint application of L.
inline Vector composed_gradient(const SmoothPenalty& pen, const LinearOperator& l, const Eigen::Ref<const Vector>& x) {
  detail::require_dim(x.size() == l.cols(), "composed_gradient: x does not match L");
  return l.apply_adjoint(psi_gradient(pen, l.apply(x)));
}

}  // namespace pnk
