#pragma once

#include <pnkrylov/gksubspace.hpp>
#include <pnkrylov/pnewton.hpp>
#include <pnkrylov/problems.hpp>
#include <pnkrylov/reference/irn.hpp>
#include <pnkrylov/result.hpp>

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <functional>

namespace pnk {

inline constexpr double kSparsityTauTilde = 1e-4;
inline constexpr double kTotalVariationTauTilde = 1e-3;

struct GKSpqConfig {
  double alpha = 1e-2;
  double tau_tilde = kSparsityTauTilde;
  Index max_iterations = 100;
  std::uint64_t max_matvecs = 0;
  std::function<bool(const TraceRow&)> extra_stop;
};

/// GKSpq for min ½‖Ax − b‖² + α‖Lx‖₁ at fixed α: iteratively reweighted norms on a
/// generalized Krylov subspace, starting from x₀ = 0. The QR factors of W_k L V_k are
/// recomputed every iteration because the weights change.
inline SolveResult solve_gkspq(const OperatorPtr& a, const OperatorPtr& l, const Eigen::Ref<const Vector>& b,
                               double sigma, const GKSpqConfig& cfg, const Vector& x_exact = Vector()) {
  detail::require_dim(b.size() == a->rows(), "b does not match A");
  detail::require_dim(l->cols() == a->cols(), "L does not match A");
  detail::require_param(std::isfinite(cfg.alpha) && cfg.alpha > 0.0, "alpha must be positive");
  detail::require_param(std::isfinite(cfg.tau_tilde) && cfg.tau_tilde > 0.0, "tau_tilde must be positive");
  detail::require_param(cfg.max_iterations >= 1, "max_iterations must be at least 1");

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const Index n = a->cols();
  const Index s = l->rows();
  const double x_exact_norm = x_exact.size() > 0 ? x_exact.norm() : 0.0;
  MatvecMeter meter(*a, *l);
  GKSubspace sub(a, l, b, SubspaceCaches{false, false, false}, std::min<Index>(n, cfg.max_iterations) + 1);
  sub.sync();

  SolveResult res;
  res.method = "gkspq";
  res.lambda = 1.0 / cfg.alpha;
  IRNWeights weights = irn_weights(Vector::Zero(s), cfg.tau_tilde);
  Vector y;
  bool stopped = false;
  for (Index it = 1; it <= cfg.max_iterations; ++it) {
    const Index kd = sub.dim();
    const Matrix wlv = weights.diag.asDiagonal() * sub.LV();
    const Eigen::HouseholderQR<Matrix> wqr(wlv);
    const Index rr = std::min(s, kd);
    const Matrix r_bar = wqr.matrixQR().topRows(rr).triangularView<Eigen::Upper>();

    // (RᵀR + α R̄ᵀR̄) y = RᵀQᵀb, solved as the stacked least-squares problem.
    Matrix stacked(kd + rr, kd);
    stacked << Matrix(sub.qr_A().R().triangularView<Eigen::Upper>()), std::sqrt(cfg.alpha) * r_bar;
    Vector rhs = Vector::Zero(kd + rr);
    rhs.head(kd) = sub.qtb();
    const Eigen::HouseholderQR<Matrix> sqr(stacked);
    const auto diag = sqr.matrixQR().diagonal().cwiseAbs();
    if (!(diag.minCoeff() > 1e-14 * diag.maxCoeff())) {
      res.status = SolveStatus::singular_system;
      res.message = "projected reweighted system is singular";
      stopped = true;
      break;
    }
    Vector y_new = sqr.solve(rhs);

    const Vector lvy = sub.LV() * y_new;
    const Vector avy = sub.AV() * y_new;
    const Vector resid = avy - b;
    const Vector v_tilde =
        a->apply_adjoint(resid) + cfg.alpha * l->apply_adjoint(weights.diag.array().square().matrix().cwiseProduct(lvy));
    weights = irn_weights(lvy, cfg.tau_tilde);

    TraceRow row;
    row.k = it;
    row.F_norm = v_tilde.norm();
    row.lambda = 1.0 / cfg.alpha;
    row.gamma = 1.0;
    row.discrepancy_mismatch = resid.norm() - sigma;
    row.min_trial_mismatch = row.discrepancy_mismatch;
    row.rel_dlambda = it == 1 ? kNotAvailable : 0.0;
    if (y.size() > 0) {
      Vector padded = Vector::Zero(kd);
      padded.head(y.size()) = y;
      row.rel_dx = (y_new - padded).norm() / padded.norm();
    }
    y = std::move(y_new);
    if (x_exact_norm > 0.0) row.rel_error = (sub.V() * y - x_exact).norm() / x_exact_norm;
    meter.fill(row);
    row.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    row.subspace_dim = kd;
    row.reduced_flops = 2.0 * static_cast<double>(s) * static_cast<double>(kd) * static_cast<double>(kd);
    res.trace.push_back(row);
    res.iterations = it;

    if (cfg.extra_stop && cfg.extra_stop(row)) {
      res.status = SolveStatus::stopped_by_callback;
      stopped = true;
      break;
    }
    if (cfg.max_matvecs > 0 && row.matvec_total() >= cfg.max_matvecs) {
      res.status = SolveStatus::budget_exhausted;
      stopped = true;
      break;
    }
    if (it < cfg.max_iterations && !res.subspace_converged &&
        sub.expand(v_tilde) == ExpandOutcome::converged_subspace)
      res.subspace_converged = true;
  }
  // A fixed iteration count is the intended termination of this method.
  if (!stopped) res.status = SolveStatus::converged;
  res.y = y;
  res.x = y.size() > 0 ? Vector(sub.V().leftCols(y.size()) * y) : Vector(Vector::Zero(n));
  return res;
}

inline SolveResult solve_gkspq(const ProblemInstance& problem, const GKSpqConfig& cfg) {
  return solve_gkspq(problem.A, problem.L, problem.b, problem.sigma, cfg, problem.x_ex);
}

}  // namespace pnk
