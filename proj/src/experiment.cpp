#include "obstacle/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "obstacle/errors.hpp"

namespace obstacle {

ProblemSpec model_problem(ProblemKind kind) {
  ProblemSpec spec;
  if (kind == ProblemKind::plate) {
    spec.form = Form::plate;
    spec.load = [](double, double) { return 1e3; };
    spec.obstacle = [](double x, double y) {
      return FieldSample{0.5 - (x - 0.5) * (x - 0.5) - (y - 0.5) * (y - 0.5), -2.0 * (x - 0.5),
                         -2.0 * (y - 0.5), 0.0};
    };
  } else {
    spec.form = Form::control;
    spec.beta = 1e-4;
    spec.load = [](double x, double y) { return std::sin(4.0 * std::numbers::pi * x * y) + 1.5; };
    spec.obstacle = [](double, double) { return FieldSample{1.0, 0.0, 0.0, 0.0}; };
  }
  return spec;
}

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T> T parse_number(const std::string &key, const std::string &value) {
  T out{};
  const char *first = value.data();
  const char *last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

const char *form_name(Form f) { return f == Form::plate ? "plate" : "control"; }

} // namespace

void apply_option(ExperimentConfig &cfg, const std::string &key_in, const std::string &value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "problem") {
    if (value == "plate")
      cfg.problem = ProblemKind::plate;
    else if (value == "control")
      cfg.problem = ProblemKind::control;
    else
      throw ConfigError("problem must be plate or control, got '" + value + "'");
  } else if (key == "n") {
    cfg.n = parse_number<int>(key, value);
  } else if (key == "ratio") {
    cfg.ratio = parse_number<int>(key, value);
  } else if (key == "overlap") {
    cfg.overlap = parse_number<int>(key, value);
  } else if (key == "levels") {
    cfg.levels = parse_number<int>(key, value);
  } else if (key == "tau") {
    cfg.tau = parse_number<double>(key, value);
  } else if (key == "tol") {
    cfg.tol = parse_number<double>(key, value);
  } else if (key == "max-outer") {
    cfg.max_outer = parse_number<int>(key, value);
  } else if (key == "local-solver") {
    if (value == "pdas")
      cfg.local_solver = LocalSolver::pdas;
    else if (value == "fbs")
      cfg.local_solver = LocalSolver::fbs;
    else
      throw ConfigError("local-solver must be pdas or fbs, got '" + value + "'");
  } else if (key == "coarse-solver") {
    if (value == "dual-active-set")
      cfg.coarse_solver = CoarseSolver::dual_active_set;
    else if (value == "dual-fbs")
      cfg.coarse_solver = CoarseSolver::dual_fbs;
    else
      throw ConfigError("coarse-solver must be dual-active-set or dual-fbs, got '" + value + "'");
  } else if (key == "threads") {
    cfg.threads = parse_number<int>(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "reference") {
    if (value == "compute") {
      cfg.reference = {ReferencePolicy::Kind::compute, {}};
    } else if (value == "none") {
      cfg.reference = {ReferencePolicy::Kind::none, {}};
    } else if (value.rfind("load:", 0) == 0 && value.size() > 5) {
      cfg.reference = {ReferencePolicy::Kind::load, value.substr(5)};
    } else {
      throw ConfigError("reference must be compute, none or load:<path>, got '" + value + "'");
    }
  } else if (key == "save-reference") {
    cfg.save_reference = value;
  } else if (key == "seed") {
    cfg.seed = parse_number<unsigned>(key, value);
  } else {
    throw ConfigError("unknown option '" + key + "'");
  }
}

void load_config_file(ExperimentConfig &cfg, const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    if (trim(line).empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_option(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

void validate(const ExperimentConfig &cfg) {
  if (cfg.n < 2)
    throw ConfigError("n must be at least 2");
  if (cfg.ratio < 1 || cfg.n % cfg.ratio != 0)
    throw ConfigError("ratio must divide n");
  if (cfg.overlap < 1 || 2 * cfg.overlap >= cfg.ratio)
    throw ConfigError("overlap must satisfy 1 <= overlap < ratio / 2");
  if (cfg.levels != 1 && cfg.levels != 2)
    throw ConfigError("levels must be 1 or 2");
  if (cfg.levels == 2 && cfg.n / cfg.ratio < 2)
    throw ConfigError("a two-level run needs at least 2 x 2 subdomains");
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau))
    throw ConfigError("tau must be positive");
  if (!(cfg.tol > 0.0))
    throw ConfigError("tol must be positive");
  if (cfg.max_outer < 0)
    throw ConfigError("max-outer must be nonnegative");
  if (cfg.threads < 1)
    throw ConfigError("threads must be at least 1");
}

void save_reference(const std::string &path, const DiscreteProblem &p, const Vector &u) {
  if (u.size() != p.num_free())
    throw DimensionMismatch("save_reference: vector does not match the problem");
  std::FILE *f = std::fopen(path.c_str(), "w");
  if (!f)
    throw ConfigError("cannot write reference file " + path);
  std::fprintf(f, "obstacle_reference v1 n=%d form=%s beta=%.17g dofs=%d\n",
               p.grid.cells_per_side(), form_name(p.form), p.beta, p.num_free());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    std::fprintf(f, "%.17g\n", u[i]);
  const bool ok = std::fclose(f) == 0;
  if (!ok)
    throw ConfigError("error writing reference file " + path);
}

Vector load_reference(const std::string &path, const DiscreteProblem &p) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read reference file " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version, nfield, formfield, betafield, dofsfield;
  hs >> magic >> version >> nfield >> formfield >> betafield >> dofsfield;
  if (magic != "obstacle_reference" || version != "v1")
    throw ConfigError(path + " is not a reference file");
  auto field = [&](const std::string &f, const char *name) {
    const std::string prefix = std::string(name) + "=";
    if (f.rfind(prefix, 0) != 0)
      throw ConfigError(path + ": malformed header field '" + f + "'");
    return f.substr(prefix.size());
  };
  const int n = parse_number<int>("n", field(nfield, "n"));
  const std::string form = field(formfield, "form");
  const double beta = parse_number<double>("beta", field(betafield, "beta"));
  const int dofs = parse_number<int>("dofs", field(dofsfield, "dofs"));
  if (n != p.grid.cells_per_side() || form != form_name(p.form) || dofs != p.num_free() ||
      (p.form == Form::control && beta != p.beta))
    throw ConfigError(path + " was computed for a different problem");
  Vector u(dofs);
  for (int i = 0; i < dofs; ++i) {
    std::string tok;
    if (!(in >> tok))
      throw ConfigError(path + ": truncated reference");
    u[i] = parse_number<double>("reference value", tok);
  }
  return u;
}

void write_csv_row(std::ostream &os, const IterationRecord &r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.3f\n", r.iter, r.energy,
                r.rel_energy_error, r.max_violation, r.elapsed_ms);
  os << buf;
}

ExperimentResult run_experiment(const ExperimentConfig &cfg, std::ostream &fallback) {
  ExperimentResult res;
  try {
    validate(cfg);
    std::ofstream file;
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file)
        throw ConfigError("cannot write output file " + cfg.out);
    }
    std::ostream &os = cfg.out.empty() ? fallback : file;

    const DiscreteProblem p = assemble(model_problem(cfg.problem), build_fine_grid(cfg.n));
    const DomainDecomposition dd = build_decomposition(cfg.n, cfg.ratio, cfg.overlap);

    std::optional<Vector> ref;
    if (cfg.reference.kind == ReferencePolicy::Kind::compute)
      ref = solve_reference(p);
    else if (cfg.reference.kind == ReferencePolicy::Kind::load)
      ref = load_reference(cfg.reference.path, p);
    if (ref) {
      res.reference_energy = energy(p, *ref);
      if (!cfg.save_reference.empty())
        save_reference(cfg.save_reference, p, *ref);
    }

    const auto spaces = build_local_spaces(dd, p);
    std::optional<CoarseSpace> coarse;
    if (cfg.levels == 2)
      coarse = build_coarse_space(dd, p);

    SchwarzConfig sc;
    sc.levels = cfg.levels;
    sc.tau = cfg.tau;
    sc.max_outer = cfg.max_outer;
    sc.tol_rel_energy = cfg.tol;
    sc.local_solver = cfg.local_solver;
    sc.coarse_solver = cfg.coarse_solver;
    sc.threads = cfg.threads;
    sc.reference_energy = res.reference_energy;
    os << kCsvHeader << '\n';
    sc.on_iteration = [&os](const IterationRecord &r) { write_csv_row(os, r); };

    res.record = schwarz_solve(p, dd, spaces, coarse ? &*coarse : nullptr, sc);
    os.flush();
    if (!os)
      throw ConfigError("error writing CSV output");
    for (const auto &w : res.record.warnings)
      res.message += "warning: " + w + "\n";
    if (res.record.converged) {
      res.exit_code = exit_converged;
    } else {
      res.exit_code = exit_not_converged;
      res.message += "no convergence within " + std::to_string(cfg.max_outer) + " iterations\n";
    }
  } catch (const ConfigError &e) {
    res.exit_code = exit_usage;
    res.message = e.what();
  } catch (const InvalidSize &e) {
    res.exit_code = exit_usage;
    res.message = e.what();
  } catch (const InvalidParameter &e) {
    res.exit_code = exit_usage;
    res.message = e.what();
  } catch (const Error &e) {
    res.exit_code = exit_solver_failure;
    res.message = e.what();
  }
  return res;
}

} // namespace obstacle
