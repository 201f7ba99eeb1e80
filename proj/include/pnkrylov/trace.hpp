#pragma once

#include <pnkrylov/linop.hpp>
#include <pnkrylov/matrix_market.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace pnk {

inline constexpr double kNotAvailable = std::numeric_limits<double>::quiet_NaN();

/// One row per accepted iterate. Matvec counts are cumulative since the start of the run.
struct TraceRow {
  Index k = 0;
  double F_norm = kNotAvailable;
  double lambda = kNotAvailable;
  double gamma = kNotAvailable;
  Index n_backtracks = 0;
  double discrepancy_mismatch = kNotAvailable;  // ‖Ax_k − b‖ − σ
  double rel_dlambda = kNotAvailable;
  double rel_dx = kNotAvailable;
  double rel_error = kNotAvailable;  // vs x_ex when known
  std::uint64_t matvec_A = 0;
  std::uint64_t matvec_At = 0;
  std::uint64_t matvec_L = 0;
  std::uint64_t matvec_Lt = 0;
  double elapsed_seconds = 0.0;
  Index subspace_dim = 0;
  double reduced_flops = 0.0;  // estimated small-dimension work of the iteration
  double min_trial_mismatch = kNotAvailable;  // smallest ‖Ax − b‖ − σ over line-search trials

  std::uint64_t matvec_total() const { return matvec_A + matvec_At + matvec_L + matvec_Lt; }
};

/// Baseline of the four operator counters, so runs on shared operators can be measured.
class MatvecMeter {
 public:
  MatvecMeter(const LinearOperator& a, const LinearOperator& l) : a_(&a), l_(&l), a0_(a.counts()), l0_(l.counts()) {}

  void fill(TraceRow& row) const {
    row.matvec_A = a_->forward_count() - a0_.forward;
    row.matvec_At = a_->adjoint_count() - a0_.adjoint;
    row.matvec_L = l_->forward_count() - l0_.forward;
    row.matvec_Lt = l_->adjoint_count() - l0_.adjoint;
  }
  std::uint64_t total() const {
    TraceRow row;
    fill(row);
    return row.matvec_total();
  }

 private:
  const LinearOperator* a_;
  const LinearOperator* l_;
  ApplyCounts a0_;
  ApplyCounts l0_;
};

inline const char* trace_csv_header() {
  return "method,k,F_norm,lambda,gamma,n_backtracks,discrepancy_mismatch,rel_dlambda,rel_dx,rel_error_vs_xex,"
         "matvec_A,matvec_At,matvec_L,matvec_Lt,elapsed_seconds,subspace_dim,reduced_flops";
}

namespace detail {
inline std::string csv_number(double v) { return std::isnan(v) ? std::string("nan") : format_double(v); }
}  // namespace detail

inline void write_trace_row(std::ostream& out, const std::string& method, const TraceRow& r) {
  using detail::csv_number;
  out << method << ',' << r.k << ',' << csv_number(r.F_norm) << ',' << csv_number(r.lambda) << ','
      << csv_number(r.gamma) << ',' << r.n_backtracks << ',' << csv_number(r.discrepancy_mismatch) << ','
      << csv_number(r.rel_dlambda) << ',' << csv_number(r.rel_dx) << ',' << csv_number(r.rel_error) << ','
      << r.matvec_A << ',' << r.matvec_At << ',' << r.matvec_L << ',' << r.matvec_Lt << ','
      << csv_number(r.elapsed_seconds) << ',' << r.subspace_dim << ',' << csv_number(r.reduced_flops) << '\n';
}

inline void write_trace_csv(const std::filesystem::path& path, const std::string& method,
                            const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << trace_csv_header() << '\n';
  for (const auto& r : rows) write_trace_row(out, method, r);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace pnk
