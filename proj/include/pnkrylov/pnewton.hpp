#pragma once

#include <pnkrylov/gksubspace.hpp>
#include <pnkrylov/penalty.hpp>
#include <pnkrylov/problems.hpp>
#include <pnkrylov/result.hpp>

#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace pnk {

enum class StopRule { kkt, discrepancy, dlambda, dx, none };

inline std::string to_string(StopRule r) {
  switch (r) {
    case StopRule::kkt: return "kkt";
    case StopRule::discrepancy: return "discrepancy";
    case StopRule::dlambda: return "dlambda";
    case StopRule::dx: return "dx";
    case StopRule::none: return "none";
  }
  return "unknown";
}

inline StopRule parse_stop_rule(const std::string& s) {
  if (s == "kkt") return StopRule::kkt;
  if (s == "discrepancy") return StopRule::discrepancy;
  if (s == "dlambda") return StopRule::dlambda;
  if (s == "dx") return StopRule::dx;
  if (s == "none") return StopRule::none;
  throw InvalidParameter("unknown stopping rule '" + s + "'");
}

/// Default threshold of each stopping rule.
inline double default_tolerance(StopRule r) {
  switch (r) {
    case StopRule::kkt: return 1e-6;
    case StopRule::discrepancy: return 1e-6;
    case StopRule::dlambda: return 1e-4;
    case StopRule::dx: return 1e-4;
    case StopRule::none: return 0.0;
  }
  return 0.0;
}

/// True when the row satisfies the rule. kkt and discrepancy are absolute thresholds.
inline bool stop_rule_met(StopRule rule, double tol, const TraceRow& row) {
  switch (rule) {
    case StopRule::kkt: return row.F_norm <= tol;
    case StopRule::discrepancy: return row.discrepancy_mismatch <= tol;
    case StopRule::dlambda: return row.rel_dlambda <= tol;
    case StopRule::dx: return row.rel_dx <= tol;
    case StopRule::none: return false;
  }
  return false;
}

/// The four quantities a stopping rule can look at; relative changes are NaN at k = 1.
struct StoppingMetrics {
  double kkt_norm = kNotAvailable;
  double rel_dlambda = kNotAvailable;
  double rel_dx = kNotAvailable;
  double discrepancy_mismatch = kNotAvailable;
};

inline StoppingMetrics stopping_metrics(const TraceRow& row) {
  return {row.F_norm, row.rel_dlambda, row.rel_dx, row.discrepancy_mismatch};
}

/// general: any smooth penalty, one Lᵀ per line-search trial.
/// tikhonov: quadratic penalty only; caches LᵀLV and the QR factors of LV.
enum class PNVariant { automatic, general, tikhonov };

/// Everything a test or a caller may want to inspect about one accepted step.
struct PNIterationView {
  Index k = 0;
  const GKSubspace* subspace = nullptr;
  const Vector* y_prev = nullptr;  // previous coefficients, zero-padded to the current dimension
  double lambda_prev = 0.0;
  const Matrix* system = nullptr;  // projected Jacobian
  const Vector* rhs = nullptr;     // −F projected
  const Vector* dy = nullptr;
  double dlambda = 0.0;
  const Vector* y = nullptr;
  double lambda = 0.0;
  double gamma = 0.0;
  double F_prev_norm = 0.0;
  const TraceRow* row = nullptr;
};

struct PNConfig {
  SmoothPenalty penalty = SmoothPenalty::lp(1.0);
  double lambda0 = 1e5;
  double tau = 0.9;
  double c = 1e-4;
  Index max_iterations = 500;
  double gamma_min = 1e-12;
  StopRule stop_rule = StopRule::discrepancy;
  double tol = 1e-6;
  PNVariant variant = PNVariant::automatic;
  std::uint64_t max_matvecs = 0;  // 0 means no budget
  std::function<void(const PNIterationView&)> observer;
  std::function<bool(const TraceRow&)> extra_stop;

  void validate() const {
    detail::require_param(std::isfinite(lambda0) && lambda0 > 0.0, "lambda0 must be positive");
    detail::require_param(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
    detail::require_param(c > 0.0 && c < 1.0, "c must lie in (0, 1)");
    detail::require_param(max_iterations >= 1, "max_iterations must be at least 1");
    detail::require_param(gamma_min > 0.0 && gamma_min < 1.0, "gamma_min must lie in (0, 1)");
    detail::require_param(tol >= 0.0, "stopping tolerance must be non-negative");
    if (!penalty.is_quadratic()) {
      detail::require_param(penalty.p >= 1.0 && penalty.p <= 2.0, "penalty exponent p must lie in [1, 2]");
      detail::require_param(penalty.beta > 0.0, "smoothing parameter beta must be positive");
    }
    detail::require_param(variant != PNVariant::tikhonov || penalty.is_quadratic(),
                          "the Tikhonov variant requires the quadratic penalty");
  }

  bool uses_tikhonov_variant() const {
    return variant == PNVariant::tikhonov || (variant == PNVariant::automatic && penalty.is_quadratic());
  }
};

namespace detail {

/// ½‖r‖² − ½σ², written to keep its accuracy near the root.
inline double discrepancy_half_gap(double residual_norm, double sigma) {
  return 0.5 * (residual_norm - sigma) * (residual_norm + sigma);
}

}  // namespace detail

/// Projected Newton iteration on a generalized Krylov subspace for
///   min Ψ̃(Lx)  subject to  ½‖Ax − b‖² = ½σ²,
/// driving the KKT residual F(x, λ) to zero. Returns x = V y, the multiplier λ
/// (the regularization parameter is 1/λ) and the per-iteration trace.
///
/// When the expansion vector already lies in span(V) the basis stops growing and
/// the iteration continues on the fixed subspace; the result is flagged
/// subspace_converged.
inline SolveResult solve_projected_newton(const OperatorPtr& a, const OperatorPtr& l, const Eigen::Ref<const Vector>& b,
                                          double sigma, const PNConfig& cfg, const Vector& x_exact = Vector()) {
  cfg.validate();
  detail::require_dim(b.size() == a->rows(), "b does not match A");
  detail::require_dim(l->cols() == a->cols(), "L does not match A");
  detail::require_dim(x_exact.size() == 0 || x_exact.size() == a->cols(), "x_exact does not match A");
  detail::require_param(std::isfinite(sigma) && sigma >= 0.0, "sigma must be non-negative");
  const double b_norm = b.norm();
  if (!(b_norm > sigma)) throw DegenerateProblem("the discrepancy target requires ‖b‖ > σ");

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const bool tikhonov = cfg.uses_tikhonov_variant();
  const SmoothPenalty& pen = cfg.penalty;
  const Index n = a->cols();
  const Index s = l->rows();
  const double x_exact_norm = x_exact.size() > 0 ? x_exact.norm() : 0.0;

  MatvecMeter meter(*a, *l);
  SubspaceCaches caches;
  caches.normal = true;
  caches.reg_normal = tikhonov;
  caches.reg_qr = tikhonov;
  GKSubspace sub(a, l, b, caches, std::min<Index>(n, cfg.max_iterations) + 1);
  const Vector& atb = sub.atb();

  SolveResult res;
  res.method = tikhonov ? "pn-tik" : "pn";
  Vector y;  // coefficients of the current iterate; empty means x = 0
  double lambda = cfg.lambda0;
  Vector t = Vector::Zero(a->rows());
  Vector w = Vector::Zero(n);
  Vector z = Vector::Zero(tikhonov ? 0 : s);
  Vector u = Vector::Zero(tikhonov ? n : 0);
  Vector v_tilde = -lambda * atb;
  double f_last = detail::discrepancy_half_gap(b_norm, sigma);
  double F_norm = std::hypot(v_tilde.norm(), f_last);
  bool stopped = false;

  for (Index k = 1; k <= cfg.max_iterations; ++k) {
    if (k == 1) {
      sub.sync();
    } else if (!res.subspace_converged && sub.expand(v_tilde) == ExpandOutcome::converged_subspace) {
      res.subspace_converged = true;
    }
    const Index kd = sub.dim();
    Vector y_prev = Vector::Zero(kd);
    y_prev.head(y.size()) = y;

    // Projected Jacobian [H g; gᵀ 0] and right-hand side −F^(k).
    const auto gram = sub.qr_A().gram();
    Vector g = gram * y_prev;
    g[0] -= sub.atb_norm();
    Matrix system(kd + 1, kd + 1);
    Vector rhs(kd + 1);
    if (tikhonov) {
      const auto reg_gram = sub.qr_L().gram();
      system.topLeftCorner(kd, kd) = lambda * gram + reg_gram;
      rhs.head(kd) = -(lambda * g + reg_gram * y_prev);
    } else {
      const Vector h_sqrt = psi_hessian_diag(pen, z).cwiseSqrt();
      const Matrix scaled = h_sqrt.asDiagonal() * sub.LV();
      system.topLeftCorner(kd, kd) = lambda * gram;
      system.topLeftCorner(kd, kd).noalias() += scaled.transpose() * scaled;
      rhs.head(kd) = -(lambda * g + sub.LV().transpose() * psi_gradient(pen, z));
    }
    system.col(kd).head(kd) = g;
    system.row(kd).head(kd) = g.transpose();
    system(kd, kd) = 0.0;
    rhs[kd] = -f_last;

    if (!(g.norm() > 0.0) || !system.allFinite() || !rhs.allFinite()) {
      res.status = SolveStatus::singular_jacobian;
      res.message = "projected Jacobian is singular (VᵀAᵀ(Ax − b) = 0)";
      stopped = true;
      break;
    }
    const Eigen::PartialPivLU<Matrix> lu(system);
    Vector step = lu.solve(rhs);
    step += lu.solve(rhs - system * step);
    const double backward = (system * step - rhs).norm();
    if (!step.allFinite() || backward > 1e-10 * (system.norm() * step.norm() + rhs.norm())) {
      res.status = SolveStatus::singular_jacobian;
      res.message = "projected Newton system could not be solved accurately";
      stopped = true;
      break;
    }
    const Vector dy = step.head(kd);
    const double dlambda = step[kd];

    // Backtracking on ½‖F‖², keeping λ positive.
    double gamma = 1.0;
    if (!(lambda + dlambda > 0.0)) gamma = -cfg.tau * lambda / dlambda;
    const Vector dt = sub.AV() * dy;
    const Vector dw = sub.AtAV() * dy;
    const Vector dreg = tikhonov ? Vector(sub.LtLV() * dy) : Vector(sub.LV() * dy);

    Index reductions = 0;
    double min_trial = std::numeric_limits<double>::infinity();
    Vector t_new, w_new, reg_new, v_new;
    double lambda_new = lambda, f_new = 0.0, F_new = 0.0, residual_new = 0.0;
    bool accepted = false;
    for (;;) {
      lambda_new = lambda + gamma * dlambda;
      t_new = t + gamma * dt;
      w_new = w + gamma * dw;
      if (tikhonov) {
        reg_new = u + gamma * dreg;
        v_new = lambda_new * (w_new - atb) + reg_new;
      } else {
        reg_new = z + gamma * dreg;
        v_new = lambda_new * (w_new - atb) + l->apply_adjoint(psi_gradient(pen, reg_new));
      }
      residual_new = (t_new - b).norm();
      min_trial = std::min(min_trial, residual_new - sigma);
      f_new = detail::discrepancy_half_gap(residual_new, sigma);
      F_new = std::hypot(v_new.norm(), f_new);
      if (0.5 * F_new * F_new < (0.5 - cfg.c * gamma) * F_norm * F_norm) {
        accepted = true;
        break;
      }
      gamma *= cfg.tau;
      ++reductions;
      if (gamma < cfg.gamma_min) break;
    }
    if (!accepted) {
      res.status = SolveStatus::line_search_failure;
      res.message = "step length fell below gamma_min at ‖F‖ = " + detail::format_double(F_norm);
      stopped = true;
      break;
    }

    const double lambda_prev = lambda;
    const double F_prev = F_norm;
    y = y_prev + gamma * dy;
    lambda = lambda_new;
    t = std::move(t_new);
    w = std::move(w_new);
    (tikhonov ? u : z) = std::move(reg_new);
    v_tilde = std::move(v_new);
    f_last = f_new;
    F_norm = F_new;

    TraceRow row;
    row.k = k;
    row.F_norm = F_norm;
    row.lambda = lambda;
    row.gamma = gamma;
    row.n_backtracks = reductions;
    row.discrepancy_mismatch = residual_new - sigma;
    row.min_trial_mismatch = min_trial;
    row.rel_dlambda = std::abs(lambda - lambda_prev) / std::abs(lambda_prev);
    row.rel_dx = k == 1 ? kNotAvailable : gamma * dy.norm() / y_prev.norm();
    if (x_exact_norm > 0.0) row.rel_error = (sub.V() * y - x_exact).norm() / x_exact_norm;
    meter.fill(row);
    row.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    row.subspace_dim = kd;
    const double kdd = static_cast<double>(kd);
    row.reduced_flops = tikhonov ? 4.0 * static_cast<double>(s) * kdd : 2.0 * static_cast<double>(s) * kdd * kdd;
    res.trace.push_back(row);
    res.iterations = k;

    if (cfg.observer) {
      PNIterationView view;
      view.k = k;
      view.subspace = &sub;
      view.y_prev = &y_prev;
      view.lambda_prev = lambda_prev;
      view.system = &system;
      view.rhs = &rhs;
      view.dy = &dy;
      view.dlambda = dlambda;
      view.y = &y;
      view.lambda = lambda;
      view.gamma = gamma;
      view.F_prev_norm = F_prev;
      view.row = &res.trace.back();
      cfg.observer(view);
    }

    if (stop_rule_met(cfg.stop_rule, cfg.tol, row)) {
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
  }
  if (!stopped) res.status = SolveStatus::max_iterations;

  res.y = y;
  res.x = y.size() > 0 ? Vector(sub.V().leftCols(y.size()) * y) : Vector(Vector::Zero(n));
  res.lambda = lambda;
  return res;
}

inline SolveResult solve_projected_newton(const ProblemInstance& problem, const PNConfig& cfg) {
  return solve_projected_newton(problem.A, problem.L, problem.b, problem.sigma, cfg, problem.x_ex);
}

}  // namespace pnk
