// Command-line driver: solve, study, homog and selftest.
//
// Exit codes: 0 success, 1 failed run or check, 2 configuration error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homog/homog.hpp"

namespace {

using namespace homog;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;

struct CommonOptions {
  std::string problem = "maxwell-mixed";
  std::vector<int> n_list;
  std::optional<int> p;
  std::optional<int> q;
  std::optional<double> rho;
  std::optional<double> t_final;
  std::string mesh_law = "K=4N,M=8N";
  std::string ref_factors = "4,4";
  std::string out = ".";
  unsigned seed = 20240611;
  int threads = 1;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--problem", o.problem, "builtin name (maxwell-mixed) or problem file path");
  app->add_option("--n-list", o.n_list, "oscillation parameters N")->delimiter(',');
  app->add_option("--p", o.p, "spatial degree p >= 1");
  app->add_option("--q", o.q, "temporal degree q >= 0");
  app->add_option("--rho", o.rho, "exponential weight rho > 0");
  app->add_option("--t-final", o.t_final, "time horizon T > 0");
  app->add_option("--mesh-law", o.mesh_law, "mesh law, e.g. K=4N,M=8N");
  app->add_option("--ref-factors", o.ref_factors, "reference mesh factors 'space,time'");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--seed", o.seed, "seed for randomized checks");
  app->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

/// The problem definition with command-line overrides applied.
ProblemDefinition resolve_problem(const CommonOptions& o) {
  ProblemDefinition def = o.problem == "maxwell-mixed" ? builtin_maxwell_mixed() : load_problem_file(o.problem);
  if (!o.n_list.empty()) def.n_list = o.n_list;
  if (o.p) def.p = *o.p;
  if (o.q) def.q = *o.q;
  if (o.rho) def.rho = *o.rho;
  if (o.t_final) def.horizon = *o.t_final;
  if (def.p < 1 || def.q < 0) throw ConfigError("need p >= 1 and q >= 0");
  if (!(def.rho > 0.0) || !(def.horizon > 0.0)) throw ConfigError("rho and T must be positive");
  for (int n : def.n_list) def.oscillation_count(n);
  return def;
}

std::filesystem::path output_dir(const CommonOptions& o) {
  std::filesystem::path dir(o.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + o.out + "': " + ec.message());
  return dir;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

int run_solve(const CommonOptions& o) {
  const auto def = resolve_problem(o);
  const auto law = MeshLaw::parse(o.mesh_law);
  const int n = def.n_list.front();
  const auto problem = def.rough(n);
  const auto partition = TimePartition::uniform(def.horizon, static_cast<std::size_t>(law.m_per_n * n));
  const PeriodicCgSpace space(SpacePartition::uniform(static_cast<std::size_t>(law.k_per_n * n)), def.p);
  SolveOptions so;
  so.check_residuals = true;
  const auto sol = solve(problem, partition, space, def.q, so);
  double worst = 0.0;
  for (double r : sol.residuals()) worst = std::max(worst, r);

  const auto dir = output_dir(o);
  {
    auto os = open_output(dir / "solution.csv");
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) xs.push_back(i / 100.0);
    const auto& pts = partition.points();
    write_snapshot_csv(os, sol, std::vector<double>(pts.begin() + 1, pts.end()), xs);
  }
  {
    auto os = open_output(dir / "coefficients.bin", std::ios::out | std::ios::binary);
    write_coefficients_binary(os, sol);
  }
  std::cout << "problem " << def.name << ", N = " << n << ", K = " << space.cells() << ", M = " << partition.slabs()
            << ", p = " << def.p << ", q = " << def.q << "\n"
            << "positivity constant c = " << problem.positivity() << "\n"
            << "max relative slab residual = " << worst << "\n"
            << "wrote " << (dir / "solution.csv").string() << " and " << (dir / "coefficients.bin").string() << "\n";
  return worst <= 1e-10 ? kOk : kFailure;
}

int run_study(const CommonOptions& o) {
  StudyConfig cfg;
  cfg.problem = resolve_problem(o);
  cfg.n_list = cfg.problem.n_list;
  cfg.p = cfg.problem.p;
  cfg.q = cfg.problem.q;
  cfg.mesh = MeshLaw::parse(o.mesh_law);
  cfg.reference = ReferencePolicy::parse(o.ref_factors);
  cfg.threads = o.threads;
  cfg.validate();
  const auto dir = output_dir(o);
  const auto report = run_convergence_study(cfg, &std::cerr);
  {
    auto os = open_output(dir / "table1.csv");
    write_study_csv(os, cfg, report);
  }
  {
    auto os = open_output(dir / "table1.dat");
    write_study_dat(os, report);
  }
  write_study_csv(std::cout, cfg, report);
  for (const auto& r : report.levels)
    if (!r.ok) return kFailure;
  return kOk;
}

int run_homog(const CommonOptions& o, const std::vector<double>& xi, int truncation) {
  const auto def = resolve_problem(o);
  HomogConfig cfg;
  cfg.field = def.field;
  cfg.rho = def.rho;
  cfg.xi = xi;
  cfg.truncation = truncation;
  cfg.threads = o.threads;
  cfg.n_list = o.n_list.empty() ? std::vector<int>{2, 4, 8, 16, 32, 64} : o.n_list;
  for (int n : cfg.n_list)
    if (n < 1) throw ConfigError("homog: N must be positive");
  if (truncation < 4) throw ConfigError("homog: truncation L must be >= 4");
  const auto rep = run_homog_sweep(cfg);
  const auto dir = output_dir(o);
  {
    auto os = open_output(dir / "homog.csv");
    write_homog_csv(os, cfg, rep);
  }
  bool ok = rep.bound_holds && rep.truncation_stable;
  for (std::size_t i = 0; i < cfg.xi.size(); ++i) {
    std::cout << "xi = " << cfg.xi[i] << ": slope " << rep.slopes[i] << ", empirical kappa " << rep.kappa[i] << "\n";
    if (!std::isnan(rep.slopes[i]) && cfg.n_list.size() >= 3 && rep.slopes[i] > -0.9) ok = false;
  }
  std::cout << "bound holds for every (xi, N, k): " << (rep.bound_holds ? "yes" : "no") << "\n"
            << "L vs 2L within 1%: " << (rep.truncation_stable ? "yes" : "no") << "\n"
            << "wrote " << (dir / "homog.csv").string() << "\n";
  return ok ? kOk : kFailure;
}

int run_selftest(const CommonOptions& o, bool inject_fault) {
  SelftestOptions opt;
  opt.seed = o.seed;
  opt.inject_quadrature_fault = inject_fault;
  bool ok = true;
  for (const auto& r : run_selftests(opt)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time Galerkin solver and homogenisation checks for 1D mixed-type evolutionary equations"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::vector<double> xi{0.0, 1.0, 10.0};
  int truncation = 16;
  bool inject_fault = false;

  auto* solve_cmd = app.add_subcommand("solve", "solve the rough problem for the first N and write snapshots");
  auto* study_cmd = app.add_subcommand("study", "convergence study: rough and homogenised errors with observed rates");
  auto* homog_cmd = app.add_subcommand("homog", "fiber-wise resolvent-difference bound sweep");
  auto* self_cmd = app.add_subcommand("selftest", "invariant self-test suites");
  for (auto* cmd : {solve_cmd, study_cmd, homog_cmd, self_cmd}) add_common(cmd, opts);
  homog_cmd->add_option("--xi", xi, "frequencies xi")->delimiter(',');
  homog_cmd->add_option("--truncation", truncation, "Fourier truncation L");
  self_cmd->add_flag("--inject-fault", inject_fault, "perturb a quadrature weight (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve_cmd) return run_solve(opts);
    if (*study_cmd) return run_study(opts);
    if (*homog_cmd) return run_homog(opts, xi, truncation);
    return run_selftest(opts, inject_fault);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvariantError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
