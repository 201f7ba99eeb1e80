#pragma once

#include <pnkrylov/linop.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pnk {

/// Contents of a MatrixMarket file as a triplet list (1-based indices already converted).
struct MatrixMarketData {
  Index rows = 0;
  Index cols = 0;
  std::vector<Eigen::Triplet<double>> entries;

  RowMajorMatrix to_dense() const {
    RowMajorMatrix m = RowMajorMatrix::Zero(rows, cols);
    for (const auto& t : entries) m(t.row(), t.col()) += t.value();
    return m;
  }
  SparseCSR to_csr() const { return SparseCSR::from_triplets(rows, cols, entries); }
};

namespace detail {

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads `matrix coordinate|array real|integer general|symmetric` files.
inline MatrixMarketData read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || detail::lowercase(object) != "matrix")
    throw IoError(path.string() + ": not a MatrixMarket matrix file");
  format = detail::lowercase(format);
  field = detail::lowercase(field);
  symmetry = detail::lowercase(symmetry);
  if (format != "coordinate" && format != "array") throw IoError(path.string() + ": unsupported format " + format);
  if (field != "real" && field != "integer" && field != "double")
    throw IoError(path.string() + ": unsupported field " + field);
  if (symmetry != "general" && symmetry != "symmetric")
    throw IoError(path.string() + ": unsupported symmetry " + symmetry);
  const bool symmetric = symmetry == "symmetric";

  do {
    if (!std::getline(in, line)) throw IoError(path.string() + ": missing size line");
  } while (line.empty() || line[0] == '%');

  MatrixMarketData out;
  std::istringstream sizes(line);
  if (format == "coordinate") {
    long long nnz = 0;
    if (!(sizes >> out.rows >> out.cols >> nnz)) throw IoError(path.string() + ": bad size line");
    out.entries.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    for (long long e = 0; e < nnz; ++e) {
      Index i = 0, j = 0;
      double v = 0.0;
      if (!(in >> i >> j >> v)) throw IoError(path.string() + ": truncated entry list");
      if (i < 1 || i > out.rows || j < 1 || j > out.cols) throw IoError(path.string() + ": entry index out of range");
      out.entries.emplace_back(i - 1, j - 1, v);
      if (symmetric && i != j) out.entries.emplace_back(j - 1, i - 1, v);
    }
  } else {
    if (!(sizes >> out.rows >> out.cols)) throw IoError(path.string() + ": bad size line");
    for (Index j = 0; j < out.cols; ++j)
      for (Index i = symmetric ? j : 0; i < out.rows; ++i) {
        double v = 0.0;
        if (!(in >> v)) throw IoError(path.string() + ": truncated array data");
        if (v != 0.0) {
          out.entries.emplace_back(i, j, v);
          if (symmetric && i != j) out.entries.emplace_back(j, i, v);
        }
      }
  }
  if (out.rows <= 0 || out.cols <= 0) throw IoError(path.string() + ": non-positive dimensions");
  return out;
}

namespace detail {

inline void write_coordinate(const std::filesystem::path& path, Index rows, Index cols,
                             const std::vector<Eigen::Triplet<double>>& entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << rows << ' ' << cols << ' ' << entries.size() << '\n';
  for (const auto& t : entries)
    out << (t.row() + 1) << ' ' << (t.col() + 1) << ' ' << format_double(t.value()) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

/// Writes the nonzero entries of a dense matrix in coordinate format.
inline void write_matrix_market(const std::filesystem::path& path, const Eigen::Ref<const RowMajorMatrix>& m) {
  std::vector<Eigen::Triplet<double>> entries;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) entries.emplace_back(i, j, m(i, j));
  detail::write_coordinate(path, m.rows(), m.cols(), entries);
}

inline void write_matrix_market(const std::filesystem::path& path, const SparseCSR& m) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(m.values.size());
  for (Index i = 0; i < m.rows; ++i)
    for (Index p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) entries.emplace_back(i, m.col_indices[p], m.values[p]);
  detail::write_coordinate(path, m.rows, m.cols, entries);
}

}  // namespace pnk
