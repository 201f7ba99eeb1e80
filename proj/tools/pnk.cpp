// pnk: generate test problems, run the solvers and write traces.

#include "pnk_cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

namespace {

using namespace pnk;
using namespace pnk::cli;

void add_problem_flags(CLI::App* cmd, ProblemOptions& o, bool allow_dir) {
  if (allow_dir) cmd->add_option("--problem", o.dir, "problem directory written by `generate`");
  cmd->add_option("--kind", o.kind, "problem kind")->check(CLI::IsMember(kind_names()));
  cmd->add_option("--n", o.n, "unknowns (1D kinds)")->check(CLI::PositiveNumber);
  cmd->add_option("--side", o.side, "image side N (2D kinds)")->check(CLI::PositiveNumber);
  cmd->add_option("--noise", o.noise, "relative noise level")->check(CLI::NonNegativeNumber);
  cmd->add_option("--eta", o.eta, "discrepancy safety factor, sigma = eta*||e||")->check(CLI::Range(1.0, 1e6));
  cmd->add_option("--density", o.density, "spike density");
  cmd->add_option("--bandwidth", o.bandwidth, "blur width relative to the signal length");
}

void add_solver_flags(CLI::App* cmd, SolverOptions& o, bool with_method) {
  if (with_method) cmd->add_option("--method", o.method, "solver")->check(CLI::IsMember(method_names()));
  cmd->add_option("--p", o.p, "penalty exponent")->check(CLI::Range(1.0, 2.0));
  cmd->add_option("--beta", o.beta, "smoothing parameter")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda0", o.lambda0, "initial multiplier")->check(CLI::PositiveNumber);
  cmd->add_option("--tau-tilde", o.tau_tilde, "GKSpq weight clamp (default by problem kind)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", o.alpha, "GKSpq regularization parameter (default from a pn run)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--stop", o.stop, "stopping rule")
      ->check(CLI::IsMember({"kkt", "discrepancy", "dlambda", "dx", "none"}));
  cmd->add_option("--tol", o.tol, "stopping threshold (default by rule)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iter", o.max_iter, "iteration limit (default by method)")->check(CLI::PositiveNumber);
  cmd->add_option("--budget-matvecs", o.budget_matvecs, "stop after this many operator applications (0: none)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected Newton on generalized Krylov subspaces for noise-constrained regularization"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "configuration file (INI/TOML; flags override it)");
  std::string out = ".";
  std::uint64_t seed = 0;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed");

  ProblemOptions gen_problem;
  auto* gen = app.add_subcommand("generate", "write a test problem to --out");
  add_problem_flags(gen, gen_problem, false);

  ProblemOptions solve_problem;
  SolverOptions solve_solver;
  auto* solve = app.add_subcommand("solve", "run one solver and write trace.csv, x.bin, result.txt");
  add_problem_flags(solve, solve_problem, true);
  add_solver_flags(solve, solve_solver, true);

  ProblemOptions cmp_problem;
  SolverOptions cmp_solver;
  std::vector<std::string> cmp_methods{"pn", "gkspq"};
  auto* cmp = app.add_subcommand("compare", "run several solvers on one instance and write compare.csv");
  add_problem_flags(cmp, cmp_problem, true);
  add_solver_flags(cmp, cmp_solver, false);
  cmp->add_option("--methods", cmp_methods, "solvers to compare (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember(method_names()));

  ProblemOptions study_problem;
  SolverOptions study_solver;
  study_problem.n = 400;
  Index runs = 20;
  auto* study = app.add_subcommand("study-stopping", "repeat a solve over noise draws and summarize stopping metrics");
  add_problem_flags(study, study_problem, true);
  add_solver_flags(study, study_solver, true);
  study->add_option("--runs", runs, "number of noise draws")->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      cmd_generate(gen_problem, seed, out);
      std::cout << "wrote " << out << '\n';
      return kExitOk;
    }
    if (*solve) {
      const SolveResult r = cmd_solve(solve_problem, solve_solver, seed, out);
      std::cout << r.method << ": " << to_string(r.status) << " after " << r.iterations << " iterations, lambda "
                << r.lambda << '\n';
      if (!r.message.empty()) std::cerr << r.message << '\n';
      return exit_code(r.status);
    }
    if (*cmp) {
      const auto results = cmd_compare(cmp_problem, cmp_solver, cmp_methods, seed, out);
      int code = kExitOk;
      for (const auto& r : results) {
        std::cout << r.method << ": " << to_string(r.status) << " after " << r.iterations << " iterations\n";
        code = std::max(code, exit_code(r.status));
      }
      return code;
    }
    if (*study) {
      const StudySummary s = cmd_study_stopping(study_problem, study_solver, runs, seed, out);
      std::cout << "mean iterations " << s.iterations.mean << " (std " << s.iterations.std << "), mean mismatch "
                << s.discrepancy_mismatch.mean << ", mean relative error " << s.rel_error.mean << '\n';
      return kExitOk;
    }
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidDimension& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SingularSystem& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
