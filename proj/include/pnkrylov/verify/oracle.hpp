#pragma once

// Brute-force reference computations for tests. Everything here works on dense
// copies of the operators and uses its own factorizations (full-pivoting LU,
// column-pivoting Householder QR, SVD), independent of the solver code paths.

#ifndef PNK_VERIFY
#error "pnkrylov/verify is for tests only: link pnkrylov_verify or define PNK_VERIFY"
#endif

#include <pnkrylov/penalty.hpp>
#include <pnkrylov/problems.hpp>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace pnk::verify {

class OracleFailure : public Error {
 public:
  using Error::Error;
};

inline constexpr Index kMaxDenseSize = 512;

struct DenseProblem {
  Matrix A;
  Matrix L;
  Vector b;
  double sigma = 0.0;
};

inline DenseProblem densify(const ProblemInstance& p) {
  detail::require_dim(p.A->cols() <= kMaxDenseSize && p.A->rows() <= kMaxDenseSize,
                      "dense oracle limited to n <= 512");
  return {p.A->materialize(), p.L->materialize(), p.b, p.sigma};
}

/// F(x, λ) and its Jacobian J, assembled densely.
struct DenseKKT {
  Vector F;
  Matrix J;
};

inline DenseKKT dense_kkt(const DenseProblem& d, const SmoothPenalty& pen, const Eigen::Ref<const Vector>& x,
                          double lambda) {
  const Index n = d.A.cols();
  const Vector r = d.A * x - d.b;
  const Vector z = d.L * x;
  DenseKKT out;
  out.F.resize(n + 1);
  out.F.head(n) = lambda * (d.A.transpose() * r) + d.L.transpose() * psi_gradient(pen, z);
  out.F[n] = 0.5 * (r.squaredNorm() - d.sigma * d.sigma);
  out.J.setZero(n + 1, n + 1);
  out.J.topLeftCorner(n, n) =
      lambda * (d.A.transpose() * d.A) + d.L.transpose() * psi_hessian_diag(pen, z).asDiagonal() * d.L;
  const Vector atr = d.A.transpose() * r;
  out.J.col(n).head(n) = atr;
  out.J.row(n).head(n) = atr.transpose();
  return out;
}

/// ∇f = JᵀF for the merit f = ½‖F‖².
inline Vector dense_merit_gradient(const DenseProblem& d, const SmoothPenalty& pen, const Eigen::Ref<const Vector>& x,
                                   double lambda) {
  const DenseKKT kkt = dense_kkt(d, pen, x, lambda);
  return kkt.J.transpose() * kkt.F;
}

struct OracleSolution {
  Vector x;
  double lambda = 0.0;
  double alpha = 0.0;
  int iterations = 0;
};

/// Damped Newton on F(x, λ) = 0 in the full space, with the same Armijo rule and
/// λ-positivity safeguard as the projected method, until ‖F‖ ≤ tol·‖F₀‖.
inline OracleSolution full_newton_solve(const DenseProblem& d, const SmoothPenalty& pen, double lambda0,
                                        double tol = 1e-13, int max_iterations = 500) {
  const Index n = d.A.cols();
  detail::require_dim(n <= kMaxDenseSize, "dense oracle limited to n <= 512");
  constexpr double tau = 0.9, c = 1e-4;
  OracleSolution sol;
  sol.x = Vector::Zero(n);
  sol.lambda = lambda0;
  DenseKKT kkt = dense_kkt(d, pen, sol.x, sol.lambda);
  const double f0 = kkt.F.norm();
  for (int it = 0; it < max_iterations; ++it) {
    const double fn = kkt.F.norm();
    if (fn <= tol * f0) {
      sol.iterations = it;
      sol.alpha = 1.0 / sol.lambda;
      return sol;
    }
    const Vector step = Eigen::FullPivLU<Matrix>(kkt.J).solve(-kkt.F);
    if (!step.allFinite()) throw OracleFailure("full Newton: singular Jacobian");
    const Vector dx = step.head(n);
    const double dl = step[n];
    double gamma = sol.lambda + dl > 0.0 ? 1.0 : -tau * sol.lambda / dl;
    for (;;) {
      const Vector x_try = sol.x + gamma * dx;
      const double l_try = sol.lambda + gamma * dl;
      DenseKKT trial = dense_kkt(d, pen, x_try, l_try);
      const double ft = trial.F.norm();
      if (0.5 * ft * ft < (0.5 - c * gamma) * fn * fn) {
        sol.x = x_try;
        sol.lambda = l_try;
        kkt = std::move(trial);
        break;
      }
      gamma *= tau;
      if (gamma < 1e-14)
        throw OracleFailure("full Newton: line search stalled at relative ‖F‖ = " + std::to_string(fn / f0));
    }
  }
  throw OracleFailure("full Newton: no convergence within the iteration limit");
}

/// x(α) = argmin ‖Ax − b‖² + α‖Lx‖², via column-pivoting QR of [A; √α L].
inline Vector tikhonov_solution(const DenseProblem& d, double alpha) {
  Matrix stacked(d.A.rows() + d.L.rows(), d.A.cols());
  stacked << d.A, std::sqrt(alpha) * d.L;
  Vector rhs = Vector::Zero(stacked.rows());
  rhs.head(d.b.size()) = d.b;
  return Eigen::ColPivHouseholderQR<Matrix>(stacked).solve(rhs);
}

inline double tikhonov_residual(const DenseProblem& d, double alpha) {
  return (d.A * tikhonov_solution(d, alpha) - d.b).norm();
}

/// Discrepancy-principle Tikhonov by plain bisection on log₁₀α ∈ [−16, 16] until
/// |‖Ax(α) − b‖ − σ| ≤ tol·σ.
inline OracleSolution tikhonov_discrepancy_bisect(const DenseProblem& d, double tol = 1e-10) {
  detail::require_dim(d.A.cols() <= kMaxDenseSize, "dense oracle limited to n <= 512");
  double lo = -16.0, hi = 16.0;
  auto gap = [&](double u) { return tikhonov_residual(d, std::pow(10.0, u)) - d.sigma; };
  if (gap(lo) > 0.0 || gap(hi) < 0.0) throw DiscrepancyUnreachable("bisection oracle: no bracket on [1e-16, 1e16]");
  OracleSolution sol;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = gap(mid);
    sol.iterations = it + 1;
    if (std::abs(g) <= tol * d.sigma || hi - lo < 1e-15) {
      sol.alpha = std::pow(10.0, mid);
      sol.lambda = 1.0 / sol.alpha;
      sol.x = tikhonov_solution(d, sol.alpha);
      return sol;
    }
    (g < 0.0 ? lo : hi) = mid;
  }
  throw OracleFailure("bisection oracle: tolerance not reached");
}

/// Orthonormal basis of K_k(AᵀA, Aᵀb) from the Lanczos recurrence with full reorthogonalization.
inline Matrix lanczos_krylov_basis(const Matrix& a, const Vector& b, Index k) {
  const Matrix ata = a.transpose() * a;
  Matrix v(a.cols(), k);
  Vector q = a.transpose() * b;
  v.col(0) = q / q.norm();
  double beta_prev = 0.0;
  for (Index j = 1; j < k; ++j) {
    Vector w = ata * v.col(j - 1);
    const double alpha = v.col(j - 1).dot(w);
    w -= alpha * v.col(j - 1);
    if (j >= 2) w -= beta_prev * v.col(j - 2);
    for (int pass = 0; pass < 2; ++pass) w -= v.leftCols(j) * (v.leftCols(j).transpose() * w);
    beta_prev = w.norm();
    if (!(beta_prev > 0.0)) throw OracleFailure("Lanczos breakdown");
    v.col(j) = w / beta_prev;
  }
  return v;
}

/// Largest principal angle between the ranges of two column-orthonormal matrices.
inline double max_principal_angle(const Matrix& u, const Matrix& v) {
  const Matrix resid = v - u * (u.transpose() * v);
  const double s = Eigen::JacobiSVD<Matrix>(resid).singularValues()(0);
  return std::asin(std::min(1.0, s));
}

/// [Vᵀ 0; 0 1] J [V 0; 0 1], the Jacobian restricted to span(V) × R.
inline Matrix project_jacobian(const Matrix& j, const Matrix& v) {
  const Index n = v.rows(), k = v.cols();
  Matrix p = Matrix::Zero(n + 1, k + 1);
  p.topLeftCorner(n, k) = v;
  p(n, k) = 1.0;
  return p.transpose() * j * p;
}

/// 2-norm condition number from the singular values.
inline double condition_number(const Matrix& m) {
  const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
  return s(0) / s(s.size() - 1);
}

}  // namespace pnk::verify
