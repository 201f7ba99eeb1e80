#pragma once

#include <pnkrylov/linop.hpp>
#include <pnkrylov/rng.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace pnk {

enum class ProblemKind { spike, spike2d, piecewise, smooth1d, external };

inline std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::spike: return "spike";
    case ProblemKind::spike2d: return "spike2d";
    case ProblemKind::piecewise: return "piecewise";
    case ProblemKind::smooth1d: return "smooth1d";
    case ProblemKind::external: return "external";
  }
  return "unknown";
}

inline ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "spike") return ProblemKind::spike;
  if (s == "spike2d") return ProblemKind::spike2d;
  if (s == "piecewise") return ProblemKind::piecewise;
  if (s == "smooth1d") return ProblemKind::smooth1d;
  if (s == "external") return ProblemKind::external;
  throw InvalidParameter("unknown problem kind '" + s + "'");
}

/// Generation parameters; enough to rebuild the operators of a generated instance.
struct ProblemParams {
  ProblemKind kind = ProblemKind::smooth1d;
  Index n = 0;          // unknowns
  Index side = 0;       // image side N for 2D kinds, 0 otherwise
  double level = 0.0;   // relative noise ‖e‖ / ‖b_ex‖
  std::uint64_t seed = 0;
  double eta = 1.0;
  double density = 0.0;    // spike kinds
  double bandwidth = 0.0;  // blur width relative to the signal length
};

/// Operators, data and discrepancy target of one inverse problem.
struct ProblemInstance {
  ProblemParams params;
  OperatorPtr A;
  OperatorPtr L;
  Vector b;
  Vector b_ex;
  Vector x_ex;  // empty when unknown
  double sigma = 0.0;

  Index image_side() const { return params.side; }
  bool has_exact_solution() const { return x_ex.size() > 0; }
};

inline constexpr double kSmoothBlurBandwidth = 0.05;
inline constexpr double kSpikeBlurBandwidth = 0.03;
inline constexpr double kImageBlurBandwidth = 0.05;

// Fixed stream ids of CounterRng, so noise and spike positions never share draws.
inline constexpr std::uint64_t kNoiseStream = 1;
inline constexpr std::uint64_t kSpikeStream = 2;

/// Gaussian noise rescaled so that ‖e‖ = level · ‖b_ex‖ exactly.
inline Vector make_noise(const Eigen::Ref<const Vector>& b_ex, double level, std::uint64_t seed) {
  detail::require_param(std::isfinite(level) && level >= 0.0, "noise level must be non-negative");
  if (level == 0.0) return Vector::Zero(b_ex.size());
  const double scale = b_ex.norm();
  if (!(scale > 0.0)) throw InvalidParameter("cannot scale noise relative to a zero right-hand side");
  CounterRng rng(seed, kNoiseStream);
  Vector e = rng.gaussian(b_ex.size());
  e *= level * scale / e.norm();
  return e;
}

namespace detail {

/// Fills b, b_ex and sigma from A and x_ex; enforces ‖b‖ > σ.
inline void finish_instance(ProblemInstance& inst) {
  inst.b_ex = inst.A->apply(inst.x_ex);
  inst.A->reset_counters();
  const Vector e = make_noise(inst.b_ex, inst.params.level, inst.params.seed);
  inst.b = inst.b_ex + e;
  inst.sigma = inst.params.eta * e.norm();
  if (!(inst.b.norm() > inst.sigma))
    throw DegenerateProblem("generated data violates ‖b‖ > σ (noise larger than data)");
}

inline Index exact_sqrt(Index n) {
  const auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : 0;
}

}  // namespace detail

/// Sparse spikes: ⌈density·n⌉ ones at seeded positions, blurred, L = I.
///
/// With two_d set, n must be a perfect square and the blur is separable 2D.
inline ProblemInstance spike_problem(Index n, double density, double bandwidth, double level, std::uint64_t seed,
                                     bool two_d = false, double eta = 1.0) {
  detail::require_param(density > 0.0 && density < 1.0, "spike density must lie in (0, 1)");
  detail::require_param(eta >= 1.0, "eta must be >= 1");
  detail::require_dim(n >= 2, "spike problem requires n >= 2");
  ProblemInstance inst;
  inst.params = {two_d ? ProblemKind::spike2d : ProblemKind::spike, n, 0, level, seed, eta, density, bandwidth};
  if (two_d) {
    const Index side = detail::exact_sqrt(n);
    detail::require_dim(side >= 2, "2D spike problem requires n to be a perfect square");
    inst.params.side = side;
    inst.A = gaussian_blur_2d(side, bandwidth);
  } else {
    inst.A = gaussian_blur_1d(n, bandwidth);
  }
  inst.L = identity_operator(n);

  const auto count = static_cast<Index>(std::ceil(density * static_cast<double>(n) - 1e-9));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  CounterRng rng(seed, kSpikeStream);
  inst.x_ex = Vector::Zero(n);
  for (Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(order[i], order[j]);
    inst.x_ex[order[i]] = 1.0;
  }
  detail::finish_instance(inst);
  return inst;
}

/// Nested-rectangle phantom (values 0, 0.5, 1) under separable Gaussian blur, L = TV stack.
inline Matrix rectangle_phantom(Index side) {
  Matrix img = Matrix::Zero(side, side);
  img.block(side / 8, side / 4, side - side / 4 - side / 8, side / 2).setConstant(0.5);
  img.block(side / 4, (3 * side) / 8, side / 4, side / 4).setConstant(1.0);
  return img;
}

inline ProblemInstance piecewise_problem(Index side, double level, std::uint64_t seed, double eta = 1.0,
                                         double bandwidth = kImageBlurBandwidth) {
  detail::require_param(side >= 8, "piecewise problem requires N >= 8");
  detail::require_param(eta >= 1.0, "eta must be >= 1");
  ProblemInstance inst;
  inst.params = {ProblemKind::piecewise, side * side, side, level, seed, eta, 0.0, bandwidth};
  inst.A = gaussian_blur_2d(side, bandwidth);
  inst.L = tv2d_operator(side);
  const Matrix img = rectangle_phantom(side);
  inst.x_ex = Eigen::Map<const Vector>(img.data(), side * side);
  detail::finish_instance(inst);
  return inst;
}

/// x_ex(t) = sin(πt)·exp(-t) on a uniform grid of [0, 2]; 1D blur; L = forward differences.
inline ProblemInstance smooth1d_problem(Index n, double level, std::uint64_t seed, double eta = 1.0) {
  detail::require_param(n >= 16, "smooth1d problem requires n >= 16");
  detail::require_param(eta >= 1.0, "eta must be >= 1");
  ProblemInstance inst;
  inst.params = {ProblemKind::smooth1d, n, 0, level, seed, eta, 0.0, kSmoothBlurBandwidth};
  inst.A = gaussian_blur_1d(n, kSmoothBlurBandwidth);
  inst.L = fd1d(n);
  inst.x_ex.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double t = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    inst.x_ex[i] = std::sin(std::numbers::pi * t) * std::exp(-t);
  }
  detail::finish_instance(inst);
  return inst;
}

/// Same data, different regularization operator (e.g. L = I for standard-form Tikhonov).
inline ProblemInstance with_regularizer(ProblemInstance inst, OperatorPtr l) {
  detail::require_dim(l->cols() == inst.A->cols(), "regularizer does not match the number of unknowns");
  inst.L = std::move(l);
  return inst;
}

}  // namespace pnk
