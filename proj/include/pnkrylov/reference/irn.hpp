#pragma once

#include <pnkrylov/types.hpp>

#include <cmath>

namespace pnk {

/// Diagonal reweighting W(Lx) with W_ii = 1/√max(|[Lx]_i|, τ̃), one entry per row of L.
struct IRNWeights {
  Vector diag;
  double tau_tilde = 1e-4;

  /// ‖W z‖².
  double weighted_square_norm(const Eigen::Ref<const Vector>& z) const { return diag.cwiseProduct(z).squaredNorm(); }
};

inline IRNWeights irn_weights(const Eigen::Ref<const Vector>& lx, double tau_tilde) {
  detail::require_param(std::isfinite(tau_tilde) && tau_tilde > 0.0, "tau_tilde must be positive");
  IRNWeights w;
  w.tau_tilde = tau_tilde;
  w.diag = lx.array().abs().max(tau_tilde).rsqrt().matrix();
  return w;
}

}  // namespace pnk
