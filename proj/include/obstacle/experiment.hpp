#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "obstacle/assembly.hpp"
#include "obstacle/schwarz.hpp"

namespace obstacle {

enum class ProblemKind { plate, control };

/// Clamped plate: f = 1e3, psi = 1/2 - (x - 1/2)^2 - (y - 1/2)^2.
/// Optimal control: beta = 1e-4, f = sin(4 pi x y) + 1.5, psi = 1.
ProblemSpec model_problem(ProblemKind kind);

enum ExitCode : int {
  exit_converged = 0,
  exit_not_converged = 1,
  exit_usage = 2,
  exit_solver_failure = 3,
};

struct ReferencePolicy {
  enum class Kind { compute, load, none };
  Kind kind = Kind::compute;
  std::string path; ///< for load
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::plate;
  int n = 16;
  int ratio = 8;
  int overlap = 2;
  int levels = 2;
  double tau = 0.2;
  double tol = 1e-6;
  int max_outer = 1000;
  LocalSolver local_solver = LocalSolver::pdas;
  CoarseSolver coarse_solver = CoarseSolver::dual_active_set;
  int threads = 1;
  std::string out; ///< empty: standard output
  ReferencePolicy reference;
  std::string save_reference; ///< write the computed reference here
  unsigned seed = 0;
};

/// Sets one option from its textual form. Keys are the long flag names
/// without dashes (problem, n, ratio, overlap, levels, tau, tol, max-outer,
/// local-solver, coarse-solver, threads, out, reference, save-reference, seed).
/// Throws ConfigError on an unknown key or a malformed value.
void apply_option(ExperimentConfig &cfg, const std::string &key, const std::string &value);

/// Reads `key = value` lines ('#' starts a comment) into cfg.
void load_config_file(ExperimentConfig &cfg, const std::string &path);

/// Throws ConfigError for an inconsistent configuration.
void validate(const ExperimentConfig &cfg);

/// Text file: header `obstacle_reference v1 n=<n> form=<plate|control> beta=<b> dofs=<k>`,
/// then one free-DOF coefficient per line.
void save_reference(const std::string &path, const DiscreteProblem &p, const Vector &u);
/// Throws ConfigError if the file is unreadable or belongs to another problem.
Vector load_reference(const std::string &path, const DiscreteProblem &p);

inline constexpr const char *kCsvHeader = "iter,energy,rel_energy_error,max_violation,elapsed_ms";
void write_csv_row(std::ostream &os, const IterationRecord &r);

struct ExperimentResult {
  int exit_code = exit_converged;
  std::string message;
  ConvergenceRecord record;
  std::optional<double> reference_energy;
};

/// Builds the model problem, obtains the reference, runs the Schwarz solver
/// and streams CSV rows to cfg.out (or `fallback` when out is empty).
ExperimentResult run_experiment(const ExperimentConfig &cfg, std::ostream &fallback);

} // namespace obstacle
