// presstopo: run, validate or gradient-check a configured problem.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "presstopo/presstopo.hpp"

using namespace presstopo;

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

int cmd_validate(const std::string& path) {
  const ProblemConfig cfg = load_config(path);
  const Problem problem(cfg);
  const Mesh& mesh = problem.mesh();
  std::cout << cfg.name << ": " << mesh.num_elements() << " elements, " << mesh.num_nodes()
            << " nodes, " << cfg.num_materials() << " materials\n";
  std::cout << "  filter radius " << cfg.filter_radius() << " m, drainage D_s " << problem.flow().ds
            << ", fixed dofs " << problem.fixed_dofs().size() << '\n';
  std::cout << "  volume bounds";
  for (int j = 0; j < problem.volume_bounds().size(); ++j) std::cout << ' ' << problem.volume_bounds()[j];
  std::cout << '\n';
  if (problem.filter().is_identity) {
    std::cout << "  warning: filter radius is below the element spacing; the filter is the identity\n";
  }
  std::cout << "ok\n";
  return 0;
}

int cmd_run(const std::string& path, const std::string& out_dir, int max_iters, bool vtk, bool svg,
            int log_every) {
  const ProblemConfig cfg = load_config(path);
  const Problem problem(cfg);
  RunOptions opt;
  if (max_iters >= 0) opt.max_iters = max_iters;
  opt.progress = &std::cout;
  opt.log_every = log_every >= 0 ? log_every : cfg.log_every;
  if (!cfg.initial_design.empty()) {
    opt.initial_raw = read_design_csv(cfg.initial_design, problem.mesh().num_elements(),
                                      problem.num_variables());
  }
  const RunResult run = run_optimization(problem, opt);
  OutputOptions oo;
  oo.vtk = vtk || cfg.write_vtk;
  oo.svg = svg || cfg.write_svg;
  oo.isolines = cfg.isolines;
  const auto files = write_outputs(out_dir.empty() ? cfg.output_dir : out_dir, problem, run, oo);
  std::cout << run.log.records.size() << " iterations in " << run.log.wall_seconds << " s\n";
  for (const auto& f : files) std::cout << "  wrote " << f.string() << '\n';
  return 0;
}

int cmd_gradient_check(const std::string& path, const std::string& elements, unsigned seed) {
  ProblemConfig cfg = load_config(path);
  int nx = 0, ny = 0;
  if (std::sscanf(elements.c_str(), "%dx%d", &nx, &ny) != 2 || nx < 1 || ny < 1) {
    throw ConfigError("--elements must look like 12x8");
  }
  cfg.nex = nx;
  cfg.ney = ny;
  const Problem problem(cfg);
  const MatrixXd raw = random_feasible_design(problem.mesh().num_elements(), problem.num_variables(), seed);
  const GradientCheck gc = gradient_check(problem, raw, {1e-5, 1e-6, 1e-7});
  std::cout << "components checked: " << gc.checked << '\n';
  for (std::size_t s = 0; s < gc.steps.size(); ++s) {
    std::cout << "  h = " << gc.steps[s] << ": max relative error " << gc.step_errors[s] << '\n';
  }
  std::cout << "best step per component: max relative error " << gc.max_rel_error << '\n';
  std::cout << "load term changes the gradient by " << gc.load_term_change << " (relative)\n";
  std::cout << "time " << gc.seconds << " s\n";
  const bool ok = gc.max_rel_error < 1e-4;
  std::cout << (ok ? "ok" : "FAILED") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pressure-loaded multi-material topology optimization on honeycomb meshes"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  int max_iters = -1;
  int log_every = -1;
  bool vtk = false, svg = false;
  auto* run = app.add_subcommand("run", "Run the optimization and write result files");
  run->add_option("--config", config, "Problem file")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", out_dir, "Output directory (default: from the config)");
  run->add_option("--max-iters", max_iters, "Override the iteration count")->check(CLI::NonNegativeNumber);
  run->add_flag("--write-vtk", vtk, "Write final.vtk");
  run->add_flag("--write-svg", svg, "Write final.svg");
  run->add_option("--log-every", log_every, "Progress line every K iterations (0: quiet)")
      ->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "Parse a config and build the model");
  validate->add_option("--config", config, "Problem file")->required()->check(CLI::ExistingFile);

  std::string elements = "12x8";
  unsigned seed = 1234;
  auto* gcheck = app.add_subcommand("gradient-check", "Compare adjoint and finite-difference gradients");
  gcheck->add_option("--config", config, "Problem file")->required()->check(CLI::ExistingFile);
  gcheck->add_option("--elements", elements, "Mesh size NXxNY");
  gcheck->add_option("--seed", seed, "Seed of the random design");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*run) return cmd_run(config, out_dir, max_iters, vtk, svg, log_every);
    if (*gcheck) return cmd_gradient_check(config, elements, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverError;
  }
  return 0;
}
