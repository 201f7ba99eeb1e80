#pragma once

#include <pnkrylov/matrix_market.hpp>
#include <pnkrylov/problems.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace pnk {

static_assert(std::endian::native == std::endian::little, "vector files are written in native little-endian order");

/// Raw little-endian float64 array, no header.
inline void write_vector(const std::filesystem::path& path, const Eigen::Ref<const Vector>& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path.string());
}

inline Vector read_vector(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(double) != 0) throw IoError(path.string() + ": size is not a multiple of 8 bytes");
  Vector v(static_cast<Index>(bytes / sizeof(double)));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("read failed: " + path.string());
  return v;
}

/// Flat `key = value` text; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  KeyValues kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path.string() + ": malformed line '" + line + "'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline constexpr const char* kMetadataFile = "problem.txt";

/// Writes problem.txt, b.bin, b_ex.bin, x_ex.bin and optionally A.mtx / L.mtx.
inline void save_problem(const std::filesystem::path& dir, const ProblemInstance& inst, bool write_matrices = false) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  const auto& p = inst.params;
  std::ofstream meta(dir / kMetadataFile);
  if (!meta) throw IoError("cannot write " + (dir / kMetadataFile).string());
  meta << "kind = " << to_string(p.kind) << '\n';
  meta << "n = " << p.n << '\n';
  if (p.side > 0) meta << "N = " << p.side << '\n';
  meta << "level = " << detail::format_double(p.level) << '\n';
  meta << "seed = " << p.seed << '\n';
  meta << "eta = " << detail::format_double(p.eta) << '\n';
  meta << "sigma = " << detail::format_double(inst.sigma) << '\n';
  if (p.density > 0.0) meta << "density = " << detail::format_double(p.density) << '\n';
  if (p.bandwidth > 0.0) meta << "bandwidth = " << detail::format_double(p.bandwidth) << '\n';
  meta << "m = " << inst.A->rows() << '\n';
  meta << "s = " << inst.L->rows() << '\n';
  if (!meta) throw IoError("write failed: " + (dir / kMetadataFile).string());

  write_vector(dir / "b.bin", inst.b);
  if (inst.b_ex.size() > 0) write_vector(dir / "b_ex.bin", inst.b_ex);
  if (inst.x_ex.size() > 0) write_vector(dir / "x_ex.bin", inst.x_ex);
  if (write_matrices || p.kind == ProblemKind::external) {
    write_matrix_market(dir / "A.mtx", RowMajorMatrix(inst.A->materialize()));
    write_matrix_market(dir / "L.mtx", RowMajorMatrix(inst.L->materialize()));
  }
}

/// Loads a problem directory. Generated kinds rebuild their operators from the
/// metadata; kind = external reads A.mtx and (optionally) L.mtx, defaulting L to I.
inline ProblemInstance load_problem(const std::filesystem::path& dir) {
  const KeyValues kv = read_key_values(dir / kMetadataFile);
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError(dir.string() + ": metadata key '" + key + "' missing");
    return it->second;
  };
  auto get_or = [&](const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };

  ProblemInstance inst;
  auto& p = inst.params;
  p.kind = parse_problem_kind(get("kind"));
  p.n = std::stoll(get("n"));
  p.side = std::stoll(get_or("N", "0"));
  p.level = std::stod(get_or("level", "0"));
  p.seed = std::stoull(get_or("seed", "0"));
  p.eta = std::stod(get_or("eta", "1"));
  p.density = std::stod(get_or("density", "0"));
  p.bandwidth = std::stod(get_or("bandwidth", "0"));
  inst.sigma = std::stod(get("sigma"));

  switch (p.kind) {
    case ProblemKind::spike:
      inst.A = gaussian_blur_1d(p.n, p.bandwidth);
      inst.L = identity_operator(p.n);
      break;
    case ProblemKind::spike2d:
      inst.A = gaussian_blur_2d(p.side, p.bandwidth);
      inst.L = identity_operator(p.n);
      break;
    case ProblemKind::piecewise:
      inst.A = gaussian_blur_2d(p.side, p.bandwidth);
      inst.L = tv2d_operator(p.side);
      break;
    case ProblemKind::smooth1d:
      inst.A = gaussian_blur_1d(p.n, p.bandwidth);
      inst.L = fd1d(p.n);
      break;
    case ProblemKind::external: {
      inst.A = std::make_shared<SparseCSROperator>(read_matrix_market(dir / "A.mtx").to_csr());
      if (std::filesystem::exists(dir / "L.mtx"))
        inst.L = std::make_shared<SparseCSROperator>(read_matrix_market(dir / "L.mtx").to_csr());
      else
        inst.L = identity_operator(inst.A->cols());
      break;
    }
  }

  inst.b = read_vector(dir / "b.bin");
  if (std::filesystem::exists(dir / "b_ex.bin")) inst.b_ex = read_vector(dir / "b_ex.bin");
  if (std::filesystem::exists(dir / "x_ex.bin")) inst.x_ex = read_vector(dir / "x_ex.bin");
  detail::require_dim(inst.b.size() == inst.A->rows(), "b does not match A");
  detail::require_dim(inst.L->cols() == inst.A->cols(), "L does not match A");
  detail::require_dim(inst.x_ex.size() == 0 || inst.x_ex.size() == inst.A->cols(), "x_ex does not match A");
  return inst;
}

}  // namespace pnk
