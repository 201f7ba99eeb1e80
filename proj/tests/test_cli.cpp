#include <gtest/gtest.h>

#include "test_support.hpp"

#include <pnk_cli.hpp>

#include <fstream>
#include <iterator>
#include <sstream>

using namespace pnk;
using namespace pnk::cli;
using pnk::testing::rel_diff;
using pnk::testing::scratch_dir;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

ProblemOptions spike200() {
  ProblemOptions po;
  po.kind = "spike";
  po.n = 200;
  return po;
}

}  // namespace

TEST(CliExitCode, MapsEveryStatus) {
  EXPECT_EQ(exit_code(SolveStatus::converged), kExitOk);
  EXPECT_EQ(exit_code(SolveStatus::stopped_by_callback), kExitOk);
  EXPECT_EQ(exit_code(SolveStatus::max_iterations), kExitNotConverged);
  EXPECT_EQ(exit_code(SolveStatus::budget_exhausted), kExitNotConverged);
  EXPECT_EQ(exit_code(SolveStatus::line_search_failure), kExitSolverFailure);
  EXPECT_EQ(exit_code(SolveStatus::singular_jacobian), kExitSolverFailure);
  EXPECT_EQ(exit_code(SolveStatus::singular_system), kExitSolverFailure);
}

TEST(CliGenerate, SameSeedGivesIdenticalFiles) {
  const auto d1 = scratch_dir("cli_gen1"), d2 = scratch_dir("cli_gen2");
  cmd_generate(spike200(), 5, d1);
  cmd_generate(spike200(), 5, d2);
  for (const char* f : {"b.bin", "x_ex.bin", "problem.txt"}) EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  ProblemOptions po;
  po.dir = d1.string();
  const auto inst = obtain_problem(po, 0);
  EXPECT_EQ(inst.params.kind, ProblemKind::spike);
  EXPECT_EQ(inst.b, generate_problem(spike200(), 5).b);
}

TEST(CliGenerate, UnknownKindIsRejected) {
  ProblemOptions po;
  po.kind = "blob";
  EXPECT_THROW(generate_problem(po, 1), InvalidParameter);
}

TEST(CliGenerate, LoadedProblemRescalesSigmaForNewEta) {
  const auto dir = scratch_dir("cli_eta");
  cmd_generate(spike200(), 5, dir);
  ProblemOptions po;
  po.dir = dir.string();
  const double s1 = obtain_problem(po, 0).sigma;
  po.eta = 1.2;
  EXPECT_NEAR(obtain_problem(po, 0).sigma, 1.2 * s1, 1e-14 * s1);
}

TEST(CliSolve, WritesOutputsAndMeetsTheDiscrepancy) {
  const auto dir = scratch_dir("cli_solve");
  const auto r = cmd_solve(spike200(), SolverOptions{}, 3, dir);
  EXPECT_EQ(r.status, SolveStatus::converged);
  EXPECT_LE(r.trace.back().discrepancy_mismatch, 1e-6);
  const auto csv = lines(dir / "trace.csv");
  EXPECT_EQ(csv.front(), trace_csv_header());
  EXPECT_EQ(csv.size(), r.trace.size() + 1);
  EXPECT_EQ(read_vector(dir / "x.bin"), r.x);
  const auto kv = read_key_values(dir / "result.txt");
  EXPECT_EQ(kv.at("status"), "converged");
  EXPECT_EQ(kv.at("method"), "pn");
  EXPECT_FALSE(fs::exists(dir / "x.pgm"));
}

TEST(CliSolve, GksIteratesMeetTheDiscrepancyTightly) {
  SolverOptions so;
  so.method = "gks";
  const auto inst = generate_problem(spike200(), 3);
  const auto r = run_solver(inst, so);
  EXPECT_EQ(r.status, SolveStatus::converged);
  EXPECT_LE(std::abs(r.trace.back().discrepancy_mismatch), 1e-8 * inst.sigma);
}

TEST(CliSolve, TikhonovNewtonAndGksAgree) {
  ProblemOptions po;
  po.kind = "smooth1d";
  po.n = 100;
  const auto inst = generate_problem(po, 2);
  SolverOptions so;
  so.method = "pn-tik";
  so.stop = "kkt";
  so.tol = 1e-10;
  const auto p = run_solver(inst, so);
  so.method = "gks";
  so.tol = -1.0;
  const auto g = run_solver(inst, so);
  EXPECT_LE(rel_diff(p.x, g.x), 1e-4);
}

TEST(CliSolve, ImageProblemsAlsoWritePgm) {
  const auto dir = scratch_dir("cli_pgm");
  ProblemOptions po;
  po.kind = "piecewise";
  po.side = 16;
  SolverOptions so;
  so.max_iter = 5;
  const auto r = cmd_solve(po, so, 1, dir);
  EXPECT_EQ(r.status, SolveStatus::max_iterations);
  const std::string pgm = slurp(dir / "x.pgm");
  const std::string header = "P5\n16 16\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 256);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
}

TEST(CliPgm, ScalesMinToZeroAndMaxTo255) {
  const auto dir = scratch_dir("cli_pgm_scale");
  // column-major 2×2: (0,0)=1 (1,0)=3 (0,1)=2 (1,1)=5
  write_pgm(dir / "a.pgm", Vector{{1.0, 3.0, 2.0, 5.0}}, 2);
  const std::string s = slurp(dir / "a.pgm");
  const std::string px = s.substr(s.size() - 4);
  EXPECT_EQ(static_cast<unsigned char>(px[0]), 0);
  EXPECT_EQ(static_cast<unsigned char>(px[1]), 64);
  EXPECT_EQ(static_cast<unsigned char>(px[2]), 128);
  EXPECT_EQ(static_cast<unsigned char>(px[3]), 255);
  EXPECT_THROW(write_pgm(dir / "b.pgm", Vector::Ones(5), 2), InvalidDimension);
}

TEST(CliSolve, UnknownMethodAndStopRuleAreRejected) {
  const auto inst = generate_problem(spike200(), 3);
  SolverOptions so;
  so.method = "cg";
  EXPECT_THROW(run_solver(inst, so), InvalidParameter);
  so.method = "pn";
  so.stop = "soon";
  EXPECT_THROW(run_solver(inst, so), InvalidParameter);
}

TEST(CliCompare, MergedCsvCarriesEveryMethodUnderTheBudget) {
  const auto dir = scratch_dir("cli_compare");
  SolverOptions so;
  so.budget_matvecs = 60;
  const auto results = cmd_compare(spike200(), so, {"pn", "gkspq"}, 3, dir);
  ASSERT_EQ(results.size(), 2u);
  const auto csv = lines(dir / "compare.csv");
  EXPECT_EQ(csv.front(), trace_csv_header());
  EXPECT_EQ(csv.size(), 1 + results[0].trace.size() + results[1].trace.size());
  for (const auto& r : results) {
    EXPECT_LE(r.trace[r.trace.size() - 2].matvec_total(), 60u) << r.method;
    EXPECT_EQ(r.status, SolveStatus::budget_exhausted) << r.method;
  }
  std::size_t pn_rows = 0;
  for (const auto& l : csv) pn_rows += l.rfind("pn,", 0) == 0;
  EXPECT_EQ(pn_rows, results[0].trace.size());
}

TEST(CliStudy, SummaryColumnsAndStatistics) {
  const auto dir = scratch_dir("cli_study");
  const auto sum = cmd_study_stopping(spike200(), SolverOptions{}, 4, 10, dir);
  ASSERT_EQ(sum.runs.size(), 4u);
  const auto agg = lines(dir / "study.csv");
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg[0], std::string("statistic,") + study_columns());
  EXPECT_EQ(agg[1].rfind("mean,", 0), 0u);
  EXPECT_EQ(agg[2].rfind("std,", 0), 0u);
  EXPECT_EQ(lines(dir / "study_runs.csv").size(), 5u);
  std::vector<double> its;
  for (const auto& r : sum.runs) its.push_back(static_cast<double>(r.iterations));
  EXPECT_DOUBLE_EQ(sum.iterations.mean, (its[0] + its[1] + its[2] + its[3]) / 4.0);
  for (const auto& r : sum.runs) EXPECT_GE(r.metrics.discrepancy_mismatch, -1e-12);
  EXPECT_THROW(cmd_study_stopping(spike200(), SolverOptions{}, 1, 10, dir), InvalidParameter);
}

TEST(CliStudy, MeanAndSampleStd) {
  const auto m = mean_std({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  EXPECT_DOUBLE_EQ(m.mean, 5.0);
  EXPECT_NEAR(m.std, std::sqrt(32.0 / 7.0), 1e-15);
  EXPECT_TRUE(std::isnan(mean_std({}).mean));
}

TEST(CliStudy, PlateauPredicateNeedsConsecutiveSmallChanges) {
  auto stop = relative_error_plateau(1e-3, 3);
  TraceRow row;
  auto feed = [&](double e) {
    row.rel_error = e;
    return stop(row);
  };
  EXPECT_FALSE(feed(1.0));
  EXPECT_FALSE(feed(0.5));
  EXPECT_FALSE(feed(0.5));
  EXPECT_FALSE(feed(0.5));
  EXPECT_FALSE(feed(0.4));
  EXPECT_FALSE(feed(0.4));
  EXPECT_FALSE(feed(0.4));
  EXPECT_TRUE(feed(0.4));
}

TEST(CliStudy, RedrawnNoiseKeepsTheTruth) {
  const auto base = generate_problem(spike200(), 3);
  const auto other = redraw_noise(base, 9);
  EXPECT_EQ(other.x_ex, base.x_ex);
  EXPECT_EQ(other.b_ex, base.b_ex);
  EXPECT_NE(other.b, base.b);
  EXPECT_NEAR((other.b - other.b_ex).norm() / other.b_ex.norm(), base.params.level, 1e-12);
}
