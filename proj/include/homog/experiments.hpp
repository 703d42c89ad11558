#pragma once

// Batch drivers: the convergence study, the homogenisation
// bound sweep and the self-test suites.

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "homog/coefficients.hpp"
#include "homog/dg_solver.hpp"
#include "homog/fem_space.hpp"
#include "homog/fiber_analysis.hpp"
#include "homog/gelfand.hpp"
#include "homog/metrics.hpp"
#include "homog/problem_file.hpp"
#include "homog/quadrature.hpp"

namespace homog {

/// Runs task(i) for i in [0, count) on up to `threads` workers. Each task
/// writes only its own result slot, so output order never depends on
/// scheduling. The first exception (by index) is rethrown.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  const auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// K = k_per_n N spatial cells and M = m_per_n N slabs.
struct MeshLaw {
  int k_per_n = 4;
  int m_per_n = 8;

  /// Parses "K=4N,M=8N".
  static MeshLaw parse(const std::string& text) {
    static const std::regex re(R"(\s*K\s*=\s*(\d+)\s*N\s*,\s*M\s*=\s*(\d+)\s*N\s*)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw ConfigError("mesh law '" + text + "' is not of the form K=aN,M=bN");
    MeshLaw law{std::stoi(m[1]), std::stoi(m[2])};
    if (law.k_per_n < 1 || law.m_per_n < 1) throw ConfigError("mesh law factors must be positive");
    return law;
  }

  std::string str() const {
    return "K=" + std::to_string(k_per_n) + "N,M=" + std::to_string(m_per_n) + "N";
  }
};

/// Reference solutions use K_ref = mesh_factor K, M_ref = time_factor M and
/// degrees p + degree_increment, q + degree_increment.
struct ReferencePolicy {
  int mesh_factor = 4;
  int time_factor = 4;
  int degree_increment = 1;

  /// Parses "4,4" (mesh, time) or "4" for both.
  static ReferencePolicy parse(const std::string& text) {
    static const std::regex re(R"(\s*(\d+)\s*(?:,\s*(\d+)\s*)?)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw ConfigError("reference factors '" + text + "' are not 'a' or 'a,b'");
    ReferencePolicy r;
    r.mesh_factor = std::stoi(m[1]);
    r.time_factor = m[2].matched ? std::stoi(m[2]) : r.mesh_factor;
    if (r.mesh_factor < 1 || r.time_factor < 1) throw ConfigError("reference factors must be positive");
    return r;
  }
};

struct StudyConfig {
  ProblemDefinition problem = builtin_maxwell_mixed();
  std::vector<int> n_list{4, 8, 16, 32, 64};
  int p = 2;
  int q = 1;
  MeshLaw mesh;
  ReferencePolicy reference;
  int threads = 1;

  void validate() const {
    if (p < 1) throw ConfigError("study: p must be >= 1");
    if (q < 0) throw ConfigError("study: q must be >= 0");
    if (n_list.empty()) throw ConfigError("study: empty N list");
    if (!(problem.rho > 0.0) || !(problem.horizon > 0.0)) throw ConfigError("study: rho and T must be positive");
    for (int n : n_list) problem.oscillation_count(n);
  }
};

/// Errors of one refinement level. `ok` is false when a solve failed.
struct LevelResult {
  int n = 0;
  int cells = 0;
  int slabs = 0;
  bool ok = false;
  std::string diagnostic;
  double esup_rough = 0.0;  // E_sup(U_N - U_N^h)
  double eq_rough = 0.0;    // E_Q(U_N - U_N^h)
  double esup_hom = 0.0;    // E_sup(U - U_N^h)
  double eq_hom = 0.0;      // E_Q(U - U_N^h)
  double seconds = 0.0;
};

struct ErrorReport {
  std::vector<LevelResult> levels;
  // rates[c][i] between levels i and i + 1 for column c; NaN if undefined
  std::vector<std::vector<double>> rates;
  double inverse_n_constant = std::numeric_limits<double>::quiet_NaN();  // C in E_Q(U - U_N^h) ~ C / N
  double inverse_n_slope = std::numeric_limits<double>::quiet_NaN();

  static constexpr int columns = 4;
  static double value(const LevelResult& r, int c) {
    switch (c) {
      case 0: return r.esup_rough;
      case 1: return r.eq_rough;
      case 2: return r.esup_hom;
      default: return r.eq_hom;
    }
  }
  static const char* column_name(int c) {
    static const char* names[] = {"E_sup(UN-UNh)", "E_Q(UN-UNh)", "E_sup(U-UNh)", "E_Q(U-UNh)"};
    return names[c];
  }
};

/// Solves the rough problem for one N and compares with the rough and the
/// homogenised reference solutions.
inline LevelResult run_level(const StudyConfig& cfg, int n) {
  const auto start = std::chrono::steady_clock::now();
  LevelResult out;
  out.n = n;
  out.cells = cfg.mesh.k_per_n * n;
  out.slabs = cfg.mesh.m_per_n * n;
  try {
    const auto& def = cfg.problem;
    const EvolutionaryProblem rough = def.rough(n);
    const EvolutionaryProblem hom = def.homogenised();
    const int dp = cfg.reference.degree_increment;
    const auto coarse_time = TimePartition::uniform(def.horizon, static_cast<std::size_t>(out.slabs));
    const auto ref_time =
        TimePartition::uniform(def.horizon, static_cast<std::size_t>(out.slabs) * cfg.reference.time_factor);
    const auto coarse_space = std::make_shared<const PeriodicCgSpace>(
        SpacePartition::uniform(static_cast<std::size_t>(out.cells)), cfg.p);
    const auto ref_space = std::make_shared<const PeriodicCgSpace>(
        SpacePartition::uniform(static_cast<std::size_t>(out.cells) * cfg.reference.mesh_factor), cfg.p + dp);

    const auto coarse = solve(rough, coarse_time, coarse_space, cfg.q);
    const auto ref_rough = solve(rough, ref_time, ref_space, cfg.q + dp);
    const auto ref_hom = solve(hom, ref_time, ref_space, cfg.q + dp);

    const auto times = merge_times(sample_times(coarse), sample_times(ref_rough));
    const auto breaks = merge_breaks(mesh_breaks(ref_rough), mesh_breaks(coarse));
    const auto rules = rule_family(coarse);

    const auto d_rough = difference(ref_rough, coarse);
    out.esup_rough = error_sup(d_rough, EnergyWeight::of(rough), times, breaks);
    out.eq_rough = error_q(d_rough, def.rho, coarse_time, rules, breaks);
    const auto d_hom = difference(ref_hom, coarse);
    out.esup_hom = error_sup(d_hom, EnergyWeight::of(hom), times, breaks);
    out.eq_hom = error_q(d_hom, def.rho, coarse_time, rules, breaks);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.diagnostic = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline void fill_rates(ErrorReport& report) {
  const auto& lv = report.levels;
  report.rates.assign(ErrorReport::columns, std::vector<double>(lv.size() > 0 ? lv.size() - 1 : 0,
                                                                std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t i = 0; i + 1 < lv.size(); ++i) {
    if (!lv[i].ok || !lv[i + 1].ok || lv[i + 1].n != 2 * lv[i].n) continue;
    for (int c = 0; c < ErrorReport::columns; ++c) {
      const double a = ErrorReport::value(lv[i], c), b = ErrorReport::value(lv[i + 1], c);
      if (a > 0.0 && b > 0.0) report.rates[c][i] = convergence_rates({a, b}).front();
    }
  }
  std::vector<double> ns, es;
  for (const auto& r : lv)
    if (r.ok && r.eq_hom > 0.0) {
      ns.push_back(r.n);
      es.push_back(r.eq_hom);
    }
  if (ns.size() >= 2) {
    report.inverse_n_slope = loglog_slope(ns, es);
    double s = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) s += std::log(es[i] * ns[i]);
    report.inverse_n_constant = std::exp(s / ns.size());
  } else if (ns.size() == 1) {
    report.inverse_n_constant = es[0] * ns[0];
  }
}

/// Levels run in a work pool; `log` receives one line per finished level.
inline ErrorReport run_convergence_study(const StudyConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  ErrorReport report;
  report.levels.resize(cfg.n_list.size());
  std::mutex log_mutex;
  parallel_for(cfg.n_list.size(), cfg.threads, [&](std::size_t i) {
    report.levels[i] = run_level(cfg, cfg.n_list[i]);
    if (log) {
      std::lock_guard<std::mutex> lock(log_mutex);
      const auto& r = report.levels[i];
      if (r.ok)
        *log << "level N=" << r.n << " done in " << std::fixed << std::setprecision(1) << r.seconds << " s\n"
             << std::defaultfloat;
      else
        *log << "level N=" << r.n << " FAILED: " << r.diagnostic << "\n";
    }
  });
  fill_rates(report);
  return report;
}

inline void write_study_header(std::ostream& os, const StudyConfig& cfg) {
  const auto& d = cfg.problem;
  os << "# problem: " << d.name << " (coefficient period " << d.period << "/N, source " << d.source_name << ")\n"
     << "# rho = " << d.rho << ", T = " << d.horizon << ", x0 = 0, p = " << cfg.p << ", q = " << cfg.q
     << ", mesh law " << cfg.mesh.str() << "\n"
     << "# reference: K_ref = " << cfg.reference.mesh_factor << "K, M_ref = " << cfg.reference.time_factor
     << "M, p_ref = p+" << cfg.reference.degree_increment << ", q_ref = q+" << cfg.reference.degree_increment
     << ", one rough and one homogenised reference per level\n"
     << "# E_sup weight: rough M0(N.) for U_N columns, averaged M0 for U columns; samples: union of node times\n"
     << "# E_Q: plain L2 pairing, coarse partition and rules\n";
}

namespace detail {

inline std::string fmt_value(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

inline std::string fmt_rate(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace detail

/// Convergence table: errors and rates per level; rate cells are empty where undefined.
inline void write_study_csv(std::ostream& os, const StudyConfig& cfg, const ErrorReport& report) {
  write_study_header(os, cfg);
  os << "n";
  for (int c = 0; c < ErrorReport::columns; ++c) os << ',' << ErrorReport::column_name(c) << ",rate";
  os << '\n';
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const auto& r = report.levels[i];
    os << r.n;
    for (int c = 0; c < ErrorReport::columns; ++c) {
      os << ',' << (r.ok ? detail::fmt_value(ErrorReport::value(r, c)) : std::string("failed")) << ',';
      if (i > 0) os << detail::fmt_rate(report.rates[c][i - 1]);
    }
    os << '\n';
  }
  os << "# first-order fit: E_Q(U-UNh) ~ C/N with C = " << detail::fmt_value(report.inverse_n_constant)
     << ", fitted log-log slope " << detail::fmt_rate(report.inverse_n_slope) << '\n';
  for (const auto& r : report.levels)
    if (!r.ok) os << "# level N=" << r.n << " failed: " << r.diagnostic << '\n';
}

/// Whitespace table for gnuplot: n and the four error columns.
inline void write_study_dat(std::ostream& os, const ErrorReport& report) {
  os << "# n";
  for (int c = 0; c < ErrorReport::columns; ++c) os << ' ' << ErrorReport::column_name(c);
  os << '\n';
  for (const auto& r : report.levels) {
    if (!r.ok) continue;
    os << r.n;
    for (int c = 0; c < ErrorReport::columns; ++c) os << ' ' << detail::fmt_value(ErrorReport::value(r, c));
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

struct HomogConfig {
  MaterialField field = builtin_maxwell_mixed().field;
  double rho = 1.0;
  std::vector<double> xi{0.0, 1.0, 10.0};
  std::vector<int> n_list{2, 4, 8, 16, 32, 64};
  int truncation = 16;
  int threads = 1;
};

struct HomogReport {
  std::vector<BoundReport> rows;  // ordered by xi, then N, then k
  std::vector<double> slopes;     // per xi; NaN if some norm vanishes
  std::vector<double> kappa;      // per xi: max over N and k of N * norm
  bool bound_holds = true;
  bool truncation_stable = true;
};

/// Composite fields (i xi + rho) M0 + M1 scaled by |i xi + rho|^{-2}; at each
/// (xi, N) all fibers k are checked against the static bound of the composite.
inline HomogReport run_homog_sweep(const HomogConfig& cfg) {
  if (cfg.n_list.empty() || cfg.xi.empty()) throw ConfigError("homog: empty N or xi list");
  const double c = verify_positivity(cfg.field, cfg.rho);
  if (!(c > 0.0)) throw CoercivityError("homog: positivity fails for this rho");
  struct Task {
    double xi;
    int n;
  };
  std::vector<Task> tasks;
  for (double xi : cfg.xi)
    for (int n : cfg.n_list) tasks.push_back({xi, n});
  std::vector<std::vector<BoundReport>> results(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
    const cplx z(cfg.rho, tasks[i].xi);
    const double scale = 1.0 / std::norm(z);
    auto rows = static_bound_sweep(cfg.field.composite(z), tasks[i].n, cfg.truncation);
    for (auto& r : rows) {
      r.xi = tasks[i].xi;
      r.computed_norm *= scale;
      r.computed_norm_refined *= scale;
      r.paper_bound *= scale;
    }
    results[i] = std::move(rows);
  });

  HomogReport rep;
  std::size_t t = 0;
  for (std::size_t ix = 0; ix < cfg.xi.size(); ++ix) {
    std::vector<double> ns, maxima;
    double kappa = 0.0;
    const std::size_t first_row = rep.rows.size();
    for (int n : cfg.n_list) {
      double mx = 0.0;
      for (const auto& r : results[t]) {
        mx = std::max(mx, r.computed_norm);
        if (r.computed_norm > r.paper_bound) rep.bound_holds = false;
        const ResolventDifference d{r.computed_norm, r.computed_norm_refined};
        if (!d.truncation_stable()) rep.truncation_stable = false;
        rep.rows.push_back(r);
      }
      ns.push_back(n);
      maxima.push_back(mx);
      kappa = std::max(kappa, n * mx);
      ++t;
    }
    bool positive = ns.size() >= 2;
    for (double m : maxima) positive = positive && m > 0.0;
    const double slope = positive ? loglog_slope(ns, maxima) : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = first_row; i < rep.rows.size(); ++i) {
      rep.rows[i].slope = slope;
      rep.rows[i].kappa = kappa;
    }
    rep.slopes.push_back(slope);
    rep.kappa.push_back(kappa);
  }
  return rep;
}

inline void write_homog_csv(std::ostream& os, const HomogConfig& cfg, const HomogReport& rep) {
  os << "# composite field (i xi + rho) M0 + M1 with rho = " << cfg.rho << ", norms scaled by |i xi + rho|^-2\n"
     << "# truncation L = " << cfg.truncation << " (norm_2L at 2L), all fibers k = 0..N-1\n";
  write_bound_csv_header(os);
  for (const auto& r : rep.rows) write_bound_csv_row(os, r);
}

// ---------------------------------------------------------------------------

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  unsigned seed = 20240611;
  bool inject_quadrature_fault = false;
  int gelfand_instances = 200;
};

namespace detail {

inline SelftestResult selftest_gelfand(const SelftestOptions& opt) {
  std::mt19937 gen(opt.seed);
  std::uniform_int_distribution<int> nd(1, 16), pd(1, 8);
  std::normal_distribution<double> val;
  double worst = 0.0;
  for (int i = 0; i < opt.gelfand_instances; ++i) {
    const int n = nd(gen), p = pd(gen);
    std::vector<cplx> v(static_cast<std::size_t>(n) * p);
    for (auto& x : v) x = cplx(val(gen), val(gen));
    const StepFunctionN f(n, p, v);
    const auto g = gelfand_transform(f);
    const auto back = inverse_gelfand(g);
    worst = std::max(worst, std::abs(g.norm() - f.norm()) / f.norm());
    for (std::size_t j = 0; j < v.size(); ++j) worst = std::max(worst, std::abs(back.values[j] - v[j]));
  }
  std::ostringstream os;
  os << "worst deviation " << worst;
  return {"gelfand-unitarity", worst <= 1e-12, os.str()};
}

inline SelftestResult selftest_roots_of_unity() {
  double worst = 0.0;
  try {
    for (int n = 2; n <= 64; ++n)
      for (int k = 1; k < n; ++k) worst = std::max(worst, std::abs(roots_of_unity_sum(n, k)));
  } catch (const std::exception& e) {
    return {"roots-of-unity", false, e.what()};
  }
  std::ostringstream os;
  os << "max |sum| " << worst;
  return {"roots-of-unity", worst < 1e-12, os.str()};
}

inline SelftestResult selftest_quadrature(const SelftestOptions& opt) {
  double worst = 0.0;
  for (int q = 0; q <= 4; ++q)
    for (double rt : {0.0, 0.1, 1.0, 10.0}) {
      const double tau = 0.5;
      const double rho = rt / tau;
      auto rule = gauss_radau_weighted(q, tau, rho);
      if (opt.inject_quadrature_fault) rule.weights[0] *= 1.0 + 1e-6;
      const auto mu = weighted_moments(2 * q, tau, rho);
      for (int j = 0; j <= 2 * q; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], j);
        worst = std::max(worst, std::abs(0.5 * tau * s - mu[j]) / mu[j]);
      }
    }
  std::ostringstream os;
  os << "worst relative moment error " << worst;
  return {"quadrature-exactness", worst <= 1e-12, os.str()};
}

inline SelftestResult selftest_skew() {
  double worst = 0.0;
  for (int p = 1; p <= 4; ++p) {
    const PeriodicCgSpace space(SpacePartition::uniform(7), p);
    const SpMat a = block_derivative_operator(assemble_derivative(space));
    const MatX dense(a);
    worst = std::max(worst, (dense + dense.transpose()).cwiseAbs().maxCoeff());
  }
  for (int n : {1, 3, 8})
    for (int k = 0; k < n; ++k) {
      const MatX a = fiber_derivative_block(n, k, 6);
      worst = std::max(worst, (a + a.adjoint()).cwiseAbs().maxCoeff());
    }
  std::ostringstream os;
  os << "max |A + A^*| " << worst;
  return {"skew-symmetry", worst <= 1e-12, os.str()};
}

/// U = (t phi(x), 0) with phi in the cG space; dG(q >= 1) reproduces it.
inline SelftestResult selftest_manufactured(const SelftestOptions& opt) {
  std::mt19937 gen(opt.seed + 1);
  std::normal_distribution<double> val;
  const auto space = std::make_shared<const PeriodicCgSpace>(SpacePartition::uniform(6), 2);
  const auto nd = static_cast<Eigen::Index>(space->dof_count());
  VecX state = VecX::Zero(2 * nd);
  for (Eigen::Index i = 0; i < nd; ++i) state(i) = val(gen);
  const auto phi = [space, state](double x) { return space->evaluate_state(state, x)(0); };
  const auto dphi = [space, state](double x) { return space->evaluate_state_derivative(state, x)(0); };
  EvolutionaryProblem prob;
  prob.field = MaterialField::constant(Mat2::Identity(), Mat2::Zero());
  prob.source = [phi, dphi](double t, double x) {
    Vec2 f;
    f << phi(x), t * dphi(x);
    return f;
  };
  const auto sol = solve(prob, TimePartition::uniform(1.0, 5), space, 1);
  double worst = 0.0;
  for (double t : {0.05, 0.37, 0.6, 1.0})
    for (double x : {0.0, 0.13, 0.5, 0.77})
      worst = std::max(worst, std::abs(sol.evaluate(t, x)(0) - t * phi(x)) + std::abs(sol.evaluate(t, x)(1)));
  std::ostringstream os;
  os << "max pointwise error " << worst;
  return {"manufactured-exactness", worst <= 1e-10, os.str()};
}

}  // namespace detail

inline std::vector<SelftestResult> run_selftests(const SelftestOptions& opt = {}) {
  return {detail::selftest_gelfand(opt), detail::selftest_roots_of_unity(), detail::selftest_quadrature(opt),
          detail::selftest_skew(), detail::selftest_manufactured(opt)};
}

}  // namespace homog
