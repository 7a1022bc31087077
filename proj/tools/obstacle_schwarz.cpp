// Additive Schwarz experiments on the clamped plate and optimal control
// obstacle problems; writes per-iteration convergence data as CSV.
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "obstacle/errors.hpp"
#include "obstacle/experiment.hpp"

int main(int argc, char **argv) {
  using namespace obstacle;
  CLI::App app{"Additive Schwarz solver for fourth-order obstacle problems"};
  app.option_defaults()->always_capture_default();

  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option *> opts;
  auto add = [&](const std::string &key, const std::string &help) {
    raw[key] = "";
    opts[key] = app.add_option("--" + key, raw[key], help);
    return opts[key];
  };
  add("problem", "plate | control")->check(CLI::IsMember({"plate", "control"}));
  add("n", "fine cells per side");
  add("ratio", "H/h, fine cells per coarse cell side");
  add("overlap", "delta/h, overlap layers");
  add("levels", "1 (one-level) or 2 (with coarse space)")->check(CLI::IsMember({"1", "2"}));
  add("tau", "damping step, default 0.2");
  add("tol", "stopping tolerance on the relative energy error, default 1e-6");
  add("max-outer", "outer iteration cap, default 1000");
  add("local-solver", "pdas | fbs")->check(CLI::IsMember({"pdas", "fbs"}));
  add("coarse-solver", "dual-active-set | dual-fbs")
      ->check(CLI::IsMember({"dual-active-set", "dual-fbs"}));
  add("threads", "worker threads for the subdomain solves");
  add("out", "CSV output path (default: standard output)");
  add("reference", "compute | load:<path> | none");
  add("save-reference", "write the computed reference solution to this path");
  add("seed", "random seed (unused by the deterministic solvers)");
  std::string config_path;
  app.add_option("--config", config_path, "key = value file; command-line flags take precedence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty())
      load_config_file(cfg, config_path);
    for (const auto &[key, opt] : opts)
      if (opt->count() > 0)
        apply_option(cfg, key, raw[key]);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }

  const ExperimentResult res = run_experiment(cfg, std::cout);
  if (!res.message.empty())
    std::cerr << (res.exit_code == exit_usage ? "error: " : "") << res.message
              << (res.message.back() == '\n' ? "" : "\n");
  return res.exit_code;
}
