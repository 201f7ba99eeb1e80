#pragma once

// Command implementations behind the `pnk` executable. Argument parsing lives in
// pnk.cpp; everything here takes plain option structs so tests can drive it.

#include <pnkrylov/pnkrylov.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace pnk::cli {

namespace fs = std::filesystem;

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;  // I/O and other runtime errors
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNotConverged = 3;
inline constexpr int kExitSolverFailure = 4;

inline int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
    case SolveStatus::stopped_by_callback: return kExitOk;
    case SolveStatus::max_iterations:
    case SolveStatus::budget_exhausted: return kExitNotConverged;
    case SolveStatus::line_search_failure:
    case SolveStatus::singular_jacobian:
    case SolveStatus::singular_system: return kExitSolverFailure;
  }
  return kExitSolverFailure;
}

/// Either a problem directory or the parameters of a generated instance.
struct ProblemOptions {
  std::string dir;  // load from here when non-empty
  std::string kind = "spike";
  Index n = 200;
  Index side = 32;  // image side for piecewise and spike2d
  double noise = 0.1;
  double eta = 1.0;
  double density = 0.01;
  double bandwidth = 0.0;  // 0 selects the default of the kind
};

struct SolverOptions {
  std::string method = "pn";
  double p = 1.0;
  double beta = 1e-5;
  double lambda0 = 1e5;
  double tau_tilde = 0.0;  // 0: 1e-3 for TV problems, 1e-4 otherwise
  double alpha = 0.0;      // 0: taken from a pn run on the same data
  std::string stop = "discrepancy";
  double tol = -1.0;     // negative: the rule's default
  Index max_iter = 0;    // 0: method default
  std::uint64_t budget_matvecs = 0;
};

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"pn", "pn-tik", "gks", "gkspq"};
  return names;
}

inline const std::vector<std::string>& kind_names() {
  static const std::vector<std::string> names{"spike", "spike2d", "piecewise", "smooth1d"};
  return names;
}

inline ProblemInstance generate_problem(const ProblemOptions& o, std::uint64_t seed) {
  switch (parse_problem_kind(o.kind)) {
    case ProblemKind::spike:
      return spike_problem(o.n, o.density, o.bandwidth > 0.0 ? o.bandwidth : kSpikeBlurBandwidth, o.noise, seed,
                           false, o.eta);
    case ProblemKind::spike2d:
      return spike_problem(o.side * o.side, o.density, o.bandwidth > 0.0 ? o.bandwidth : kImageBlurBandwidth,
                           o.noise, seed, true, o.eta);
    case ProblemKind::piecewise:
      return piecewise_problem(o.side, o.noise, seed, o.eta, o.bandwidth > 0.0 ? o.bandwidth : kImageBlurBandwidth);
    case ProblemKind::smooth1d:
      return smooth1d_problem(o.n, o.noise, seed, o.eta);
    case ProblemKind::external: break;
  }
  throw InvalidParameter("kind 'external' can only be loaded from a problem directory");
}

/// Loads `o.dir` when set, otherwise generates. A loaded instance keeps its
/// stored σ unless `eta` differs from the stored factor.
inline ProblemInstance obtain_problem(const ProblemOptions& o, std::uint64_t seed) {
  if (o.dir.empty()) return generate_problem(o, seed);
  ProblemInstance inst = load_problem(o.dir);
  if (o.eta != inst.params.eta) {
    detail::require_param(o.eta >= 1.0, "eta must be >= 1");
    inst.sigma *= o.eta / inst.params.eta;
    inst.params.eta = o.eta;
  }
  return inst;
}

/// Same operators and x_ex, fresh noise drawn from `seed`.
inline ProblemInstance redraw_noise(ProblemInstance inst, std::uint64_t seed) {
  detail::require_dim(inst.b_ex.size() > 0, "redrawing noise needs the noise-free data b_ex");
  const Vector e = make_noise(inst.b_ex, inst.params.level, seed);
  inst.b = inst.b_ex + e;
  inst.sigma = inst.params.eta * e.norm();
  inst.params.seed = seed;
  if (!(inst.b.norm() > inst.sigma)) throw DegenerateProblem("noise larger than data");
  return inst;
}

using StopPredicate = std::function<bool(const TraceRow&)>;

/// Stops once |e_k − e_{k−1}| / e_{k−1} < tol for `consecutive` iterations in a row,
/// e_k being the relative error against x_ex.
inline StopPredicate relative_error_plateau(double tol = 1e-3, int consecutive = 3) {
  struct State {
    double last = kNotAvailable;
    int streak = 0;
  };
  auto st = std::make_shared<State>();
  return [st, tol, consecutive](const TraceRow& row) {
    const double e = row.rel_error;
    if (std::isfinite(st->last) && std::isfinite(e) && std::abs(e - st->last) < tol * st->last)
      ++st->streak;
    else
      st->streak = 0;
    st->last = e;
    return st->streak >= consecutive;
  };
}

inline double default_tau_tilde(const ProblemInstance& inst) {
  return inst.params.kind == ProblemKind::piecewise ? kTotalVariationTauTilde : kSparsityTauTilde;
}

inline PNConfig pn_config(const SolverOptions& o, bool tikhonov) {
  PNConfig cfg;
  cfg.penalty = tikhonov ? SmoothPenalty::quadratic() : SmoothPenalty::lp(o.p, o.beta);
  cfg.variant = tikhonov ? PNVariant::tikhonov : PNVariant::general;
  cfg.lambda0 = o.lambda0;
  cfg.stop_rule = parse_stop_rule(o.stop);
  cfg.tol = o.tol >= 0.0 ? o.tol : default_tolerance(cfg.stop_rule);
  if (o.max_iter > 0) cfg.max_iterations = o.max_iter;
  cfg.max_matvecs = o.budget_matvecs;
  return cfg;
}

/// Runs the selected method. GKS stops on its own relative x-change rule
/// (--tol overrides its threshold); GKSpq runs its fixed iteration count.
inline SolveResult run_solver(const ProblemInstance& inst, const SolverOptions& o, const StopPredicate& extra = {}) {
  if (o.method == "pn" || o.method == "pn-tik") {
    PNConfig cfg = pn_config(o, o.method == "pn-tik");
    cfg.extra_stop = extra;
    return solve_projected_newton(inst, cfg);
  }
  if (o.method == "gks") {
    GKSConfig cfg;
    if (o.max_iter > 0) cfg.max_iterations = o.max_iter;
    if (o.tol >= 0.0) cfg.tol = o.tol;
    cfg.max_matvecs = o.budget_matvecs;
    cfg.extra_stop = extra;
    return solve_gks(inst, cfg);
  }
  if (o.method == "gkspq") {
    GKSpqConfig cfg;
    if (o.alpha > 0.0) {
      cfg.alpha = o.alpha;
    } else {
      SolverOptions pilot = o;
      pilot.method = "pn";
      pilot.budget_matvecs = 0;
      pilot.max_iter = 0;
      const SolveResult r = run_solver(inst, pilot);
      if (r.failed()) throw SingularSystem("could not obtain alpha from a pn run: " + r.message);
      cfg.alpha = r.alpha();
    }
    cfg.tau_tilde = o.tau_tilde > 0.0 ? o.tau_tilde : default_tau_tilde(inst);
    if (o.max_iter > 0) cfg.max_iterations = o.max_iter;
    cfg.max_matvecs = o.budget_matvecs;
    cfg.extra_stop = extra;
    return solve_gkspq(inst, cfg);
  }
  throw InvalidParameter("unknown method '" + o.method + "'");
}

/// 8-bit binary PGM of a column-major side×side image, linearly scaled from [min, max].
inline void write_pgm(const fs::path& path, const Eigen::Ref<const Vector>& x, Index side) {
  detail::require_dim(side > 0 && x.size() == side * side, "image size does not match the vector");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << side << ' ' << side << "\n255\n";
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::string pixels(static_cast<std::size_t>(side * side), '\0');
  for (Index r = 0; r < side; ++r)
    for (Index c = 0; c < side; ++c) {
      const double v = std::round((x[c * side + r] - lo) * scale);
      pixels[static_cast<std::size_t>(r * side + c)] = static_cast<char>(static_cast<unsigned char>(v));
    }
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline void cmd_generate(const ProblemOptions& o, std::uint64_t seed, const fs::path& out) {
  save_problem(out, generate_problem(o, seed));
}

/// Writes trace.csv, x.bin, result.txt and, for images, x.pgm.
inline SolveResult cmd_solve(const ProblemOptions& po, const SolverOptions& so, std::uint64_t seed,
                             const fs::path& out) {
  const ProblemInstance inst = obtain_problem(po, seed);
  SolveResult r = run_solver(inst, so);
  ensure_directory(out);
  write_trace_csv(out / "trace.csv", r.method, r.trace);
  write_vector(out / "x.bin", r.x);
  if (inst.image_side() > 0) write_pgm(out / "x.pgm", r.x, inst.image_side());

  std::ofstream meta(out / "result.txt");
  if (!meta) throw IoError("cannot write " + (out / "result.txt").string());
  meta << "method = " << r.method << '\n';
  meta << "status = " << to_string(r.status) << '\n';
  meta << "subspace_converged = " << (r.subspace_converged ? "true" : "false") << '\n';
  meta << "iterations = " << r.iterations << '\n';
  meta << "lambda = " << detail::csv_number(r.lambda) << '\n';
  meta << "alpha = " << detail::csv_number(r.alpha()) << '\n';
  meta << "sigma = " << detail::format_double(inst.sigma) << '\n';
  if (!r.trace.empty()) {
    meta << "discrepancy_mismatch = " << detail::csv_number(r.trace.back().discrepancy_mismatch) << '\n';
    meta << "rel_error = " << detail::csv_number(r.trace.back().rel_error) << '\n';
  }
  if (!r.message.empty()) meta << "message = " << r.message << '\n';
  return r;
}

/// Runs every method on the same instance and budget; one merged CSV (compare.csv).
inline std::vector<SolveResult> cmd_compare(const ProblemOptions& po, const SolverOptions& so,
                                            const std::vector<std::string>& methods, std::uint64_t seed,
                                            const fs::path& out) {
  const ProblemInstance inst = obtain_problem(po, seed);
  detail::require_param(inst.has_exact_solution(), "compare needs x_ex in the instance");
  std::vector<SolveResult> results;
  for (const auto& m : methods) {
    SolverOptions o = so;
    o.method = m;
    results.push_back(run_solver(inst, o));
  }
  ensure_directory(out);
  std::ofstream csv(out / "compare.csv");
  if (!csv) throw IoError("cannot write " + (out / "compare.csv").string());
  csv << trace_csv_header() << '\n';
  for (const auto& r : results)
    for (const auto& row : r.trace) write_trace_row(csv, r.method, row);
  if (!csv) throw IoError("write failed: " + (out / "compare.csv").string());
  return results;
}

struct StudyRun {
  std::uint64_t seed = 0;
  SolveStatus status = SolveStatus::max_iterations;
  Index iterations = 0;
  StoppingMetrics metrics;
  double rel_error = kNotAvailable;
};

struct MeanStd {
  double mean = kNotAvailable;
  double std = kNotAvailable;  // sample standard deviation
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

struct StudySummary {
  std::vector<StudyRun> runs;
  MeanStd iterations, kkt_norm, rel_dlambda, rel_dx, discrepancy_mismatch, rel_error;
};

inline const char* study_columns() {
  return "iterations,F_norm,rel_dlambda,rel_dx,discrepancy_mismatch,rel_error";
}

/// Repeats the solve with `runs` noise draws (seeds seed, seed+1, ...) on one fixed
/// instance, each run ending when the relative error plateaus. Writes
/// study_runs.csv (one row per run) and study.csv (mean and standard deviation).
inline StudySummary cmd_study_stopping(const ProblemOptions& po, const SolverOptions& so, Index runs,
                                       std::uint64_t seed, const fs::path& out) {
  detail::require_param(runs >= 2, "study-stopping needs at least 2 runs");
  const ProblemInstance base = obtain_problem(po, seed);
  detail::require_param(base.has_exact_solution(), "study-stopping needs x_ex in the instance");
  SolverOptions o = so;
  o.stop = "none";

  StudySummary sum;
  for (Index i = 0; i < runs; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const ProblemInstance inst = redraw_noise(base, s);
    const SolveResult r = run_solver(inst, o, relative_error_plateau());
    StudyRun run;
    run.seed = s;
    run.status = r.status;
    run.iterations = r.iterations;
    if (!r.trace.empty()) {
      run.metrics = stopping_metrics(r.trace.back());
      run.rel_error = r.trace.back().rel_error;
    }
    sum.runs.push_back(run);
  }

  auto collect = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : sum.runs) v.push_back(field(r));
    return mean_std(v);
  };
  sum.iterations = collect([](const StudyRun& r) { return static_cast<double>(r.iterations); });
  sum.kkt_norm = collect([](const StudyRun& r) { return r.metrics.kkt_norm; });
  sum.rel_dlambda = collect([](const StudyRun& r) { return r.metrics.rel_dlambda; });
  sum.rel_dx = collect([](const StudyRun& r) { return r.metrics.rel_dx; });
  sum.discrepancy_mismatch = collect([](const StudyRun& r) { return r.metrics.discrepancy_mismatch; });
  sum.rel_error = collect([](const StudyRun& r) { return r.rel_error; });

  using detail::csv_number;
  ensure_directory(out);
  std::ofstream per(out / "study_runs.csv");
  if (!per) throw IoError("cannot write " + (out / "study_runs.csv").string());
  per << "seed,status," << study_columns() << '\n';
  for (const auto& r : sum.runs)
    per << r.seed << ',' << to_string(r.status) << ',' << r.iterations << ',' << csv_number(r.metrics.kkt_norm) << ','
        << csv_number(r.metrics.rel_dlambda) << ',' << csv_number(r.metrics.rel_dx) << ','
        << csv_number(r.metrics.discrepancy_mismatch) << ',' << csv_number(r.rel_error) << '\n';

  std::ofstream agg(out / "study.csv");
  if (!agg) throw IoError("cannot write " + (out / "study.csv").string());
  agg << "statistic," << study_columns() << '\n';
  agg << "mean," << csv_number(sum.iterations.mean) << ',' << csv_number(sum.kkt_norm.mean) << ','
      << csv_number(sum.rel_dlambda.mean) << ',' << csv_number(sum.rel_dx.mean) << ','
      << csv_number(sum.discrepancy_mismatch.mean) << ',' << csv_number(sum.rel_error.mean) << '\n';
  agg << "std," << csv_number(sum.iterations.std) << ',' << csv_number(sum.kkt_norm.std) << ','
      << csv_number(sum.rel_dlambda.std) << ',' << csv_number(sum.rel_dx.std) << ','
      << csv_number(sum.discrepancy_mismatch.std) << ',' << csv_number(sum.rel_error.std) << '\n';
  if (!per || !agg) throw IoError("write failed in " + out.string());
  return sum;
}

}  // namespace pnk::cli
