#pragma once

#include <pnkrylov/gksubspace.hpp>
#include <pnkrylov/pnewton.hpp>
#include <pnkrylov/problems.hpp>
#include <pnkrylov/result.hpp>

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>

namespace pnk {

/// Projected Tikhonov problem min ‖R y − c‖² + α‖R̃ y‖² arising from A V = Q R,
/// L V = Q̃ R̃ and c = Qᵀb; `b_perp_sq` = ‖b − Q c‖² completes the full residual.
struct ProjectedTikhonov {
  Matrix R;
  Matrix R_reg;
  Vector c;
  double b_perp_sq = 0.0;
  double sigma = 0.0;

  Index dim() const { return R.cols(); }

  Vector solve(double alpha) const {
    const Index k = dim();
    Matrix stacked(R.rows() + R_reg.rows(), k);
    stacked << R, std::sqrt(alpha) * R_reg;
    Vector rhs = Vector::Zero(stacked.rows());
    rhs.head(c.size()) = c;
    return Eigen::HouseholderQR<Matrix>(stacked).solve(rhs);
  }

  /// ‖A V y − b‖².
  double residual_sq(const Eigen::Ref<const Vector>& y) const { return (R * y - c).squaredNorm() + b_perp_sq; }

  /// φ(α) = ‖A V y(α) − b‖² − σ², non-decreasing in α.
  double phi(double alpha) const { return residual_sq(solve(alpha)) - sigma * sigma; }

  /// Smallest residual over the subspace (the α → 0 limit).
  double min_residual_sq() const {
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(R);
    const Vector y = cod.solve(c);
    return residual_sq(y);
  }
};

struct DiscrepancyRoot {
  double alpha = 0.0;
  Vector y;
  int evaluations = 0;
};

inline constexpr double kLogAlphaMin = -16.0;
inline constexpr double kLogAlphaMax = 16.0;

/// Finds α with ‖A V y(α) − b‖ = σ: bisection on log₁₀α over [−16, 16] with
/// Illinois-type secant steps once bracketed, until |φ|/σ² ≤ tol.
/// `log_alpha_guess` narrows the initial bracket (it is widened as needed).
inline DiscrepancyRoot find_discrepancy_root(const ProjectedTikhonov& prob, double tol = 1e-10,
                                             std::optional<double> log_alpha_guess = std::nullopt) {
  const double scale = prob.sigma * prob.sigma;
  detail::require_param(scale > 0.0, "discrepancy root-finding requires sigma > 0");
  DiscrepancyRoot out;
  auto eval = [&](double u) {
    ++out.evaluations;
    return prob.phi(std::pow(10.0, u)) / scale;
  };

  double lo = kLogAlphaMin, hi = kLogAlphaMax;
  double f_lo, f_hi;
  if (log_alpha_guess && std::isfinite(*log_alpha_guess)) {
    double width = 0.5;
    lo = std::clamp(*log_alpha_guess - width, kLogAlphaMin, kLogAlphaMax);
    hi = std::clamp(*log_alpha_guess + width, kLogAlphaMin, kLogAlphaMax);
    f_lo = eval(lo);
    f_hi = eval(hi);
    while (f_lo > 0.0 && lo > kLogAlphaMin) {
      hi = lo;
      f_hi = f_lo;
      width *= 2.0;
      lo = std::max(kLogAlphaMin, lo - width);
      f_lo = eval(lo);
    }
    while (f_hi < 0.0 && hi < kLogAlphaMax) {
      lo = hi;
      f_lo = f_hi;
      width *= 2.0;
      hi = std::min(kLogAlphaMax, hi + width);
      f_hi = eval(hi);
    }
  } else {
    f_lo = eval(lo);
    f_hi = eval(hi);
  }
  if (f_lo > 0.0) throw DiscrepancyUnreachable("residual exceeds sigma even for the smallest alpha");
  if (f_hi < 0.0) throw DiscrepancyUnreachable("residual stays below sigma even for the largest alpha");

  auto finish = [&](double u) {
    out.alpha = std::pow(10.0, u);
    out.y = prob.solve(out.alpha);
    return out;
  };
  if (std::abs(f_lo) <= tol) return finish(lo);
  if (std::abs(f_hi) <= tol) return finish(hi);

  int side = 0;  // which end was retained last (Illinois modification)
  for (int it = 0; it < 300; ++it) {
    double u = (it % 4 == 3) ? 0.5 * (lo + hi) : (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(u > lo && u < hi)) u = 0.5 * (lo + hi);
    const double f = eval(u);
    if (std::abs(f) <= tol || hi - lo <= 1e-14) return finish(u);
    if (f < 0.0) {
      lo = u;
      f_lo = f;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = u;
      f_hi = f;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  return finish(0.5 * (lo + hi));
}

struct GKSConfig {
  Index l_start = 2;
  Index max_iterations = 200;
  double tol = 1e-6;       // relative change of x between iterations
  double root_tol = 1e-10;  // |φ|/σ²
  std::uint64_t max_matvecs = 0;
  std::function<bool(const TraceRow&)> extra_stop;
};

namespace detail {

inline ProjectedTikhonov projected_tikhonov(const GKSubspace& sub, double sigma) {
  ProjectedTikhonov p;
  p.R = sub.qr_A().R().triangularView<Eigen::Upper>();
  p.R_reg = sub.qr_L().R().triangularView<Eigen::Upper>();
  p.c = sub.qtb();
  p.b_perp_sq = (sub.b() - sub.qr_A().Q() * p.c).squaredNorm();
  p.sigma = sigma;
  return p;
}

}  // namespace detail

/// Builds an orthonormal basis of K_l(AᵀA, Aᵀb), doubling l from l_start until
/// the projected least-squares residual drops below σ.
inline void gks_initial_basis(GKSubspace& sub, double sigma, Index l_start) {
  detail::require_param(l_start >= 1, "l_start must be positive");
  detail::require_param(sub.caches().normal && sub.caches().reg_qr, "GKS needs the AᵀAV cache and the LV QR");
  const Index limit = std::min(sub.A().rows(), sub.ambient_dim());
  sub.sync();
  Index l = std::min(l_start, limit);
  for (;;) {
    while (sub.dim() < l) {
      const Vector next = sub.AtAV().col(sub.dim() - 1);
      if (sub.expand(next) == ExpandOutcome::converged_subspace)
        throw DiscrepancyUnreachable("Krylov space became invariant before the discrepancy could be met");
    }
    if (detail::projected_tikhonov(sub, sigma).min_residual_sq() < sigma * sigma) return;
    if (l >= limit) throw DiscrepancyUnreachable("no subspace dimension brackets the discrepancy target");
    l = std::min(2 * l, limit);
  }
}

/// GKS for general-form Tikhonov: every iterate solves the projected problem with
/// α chosen so that ‖A x_k − b‖ = σ; the basis grows with the full-space residual
/// (AᵀA + αLᵀL) x_k − Aᵀb.
inline SolveResult solve_gks(const OperatorPtr& a, const OperatorPtr& l, const Eigen::Ref<const Vector>& b, double sigma,
                             const GKSConfig& cfg, const Vector& x_exact = Vector()) {
  detail::require_dim(b.size() == a->rows(), "b does not match A");
  detail::require_dim(l->cols() == a->cols(), "L does not match A");
  detail::require_param(cfg.max_iterations >= 1, "max_iterations must be at least 1");
  detail::require_param(std::isfinite(sigma) && sigma > 0.0, "GKS requires sigma > 0");
  if (!(b.norm() > sigma)) throw DegenerateProblem("the discrepancy target requires ‖b‖ > σ");

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const Index n = a->cols();
  const double x_exact_norm = x_exact.size() > 0 ? x_exact.norm() : 0.0;
  MatvecMeter meter(*a, *l);
  GKSubspace sub(a, l, b, SubspaceCaches{true, true, true},
                 std::min<Index>(n, cfg.l_start + cfg.max_iterations) + 1);
  gks_initial_basis(sub, sigma, cfg.l_start);

  SolveResult res;
  res.method = "gks";
  Vector y_prev;
  double lambda_prev = kNotAvailable;
  std::optional<double> log_alpha;
  bool stopped = false;
  for (Index it = 1; it <= cfg.max_iterations; ++it) {
    const Index kd = sub.dim();
    const ProjectedTikhonov prob = detail::projected_tikhonov(sub, sigma);
    const DiscrepancyRoot root = find_discrepancy_root(prob, cfg.root_tol, log_alpha);
    log_alpha = std::log10(root.alpha);
    const Vector& y = root.y;
    const double alpha = root.alpha;

    const double residual = (sub.AV() * y - b).norm();
    const Vector v_tilde = sub.AtAV() * y + alpha * (sub.LtLV() * y) - sub.atb();

    TraceRow row;
    row.k = it;
    row.lambda = 1.0 / alpha;
    row.F_norm = std::hypot(v_tilde.norm() / alpha, detail::discrepancy_half_gap(residual, sigma));
    row.gamma = 1.0;
    row.discrepancy_mismatch = residual - sigma;
    row.min_trial_mismatch = row.discrepancy_mismatch;
    if (y_prev.size() > 0) {
      Vector padded = Vector::Zero(kd);
      padded.head(y_prev.size()) = y_prev;
      row.rel_dx = (y - padded).norm() / padded.norm();
      row.rel_dlambda = std::abs(row.lambda - lambda_prev) / std::abs(lambda_prev);
    }
    if (x_exact_norm > 0.0) row.rel_error = (sub.V() * y - x_exact).norm() / x_exact_norm;
    meter.fill(row);
    row.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    row.subspace_dim = kd;
    row.reduced_flops = 4.0 * static_cast<double>(l->rows()) * static_cast<double>(kd);
    res.trace.push_back(row);
    res.iterations = it;
    y_prev = y;
    lambda_prev = row.lambda;

    if (row.rel_dx <= cfg.tol) {
      res.status = SolveStatus::converged;
      stopped = true;
      break;
    }
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
    if (it < cfg.max_iterations && sub.expand(v_tilde) == ExpandOutcome::converged_subspace) {
      res.subspace_converged = true;
      res.status = SolveStatus::converged;
      stopped = true;
      break;
    }
  }
  if (!stopped) res.status = SolveStatus::max_iterations;
  res.y = y_prev;
  res.x = sub.V().leftCols(y_prev.size()) * y_prev;
  res.lambda = lambda_prev;
  return res;
}

inline SolveResult solve_gks(const ProblemInstance& problem, const GKSConfig& cfg) {
  return solve_gks(problem.A, problem.L, problem.b, problem.sigma, cfg, problem.x_ex);
}

}  // namespace pnk
