#pragma once

// Problem definitions: the builtin mixed-type Maxwell example and a
// line-oriented key-value file format.
//
//   # comment
//   breakpoints = 0 0.5 1
//   M0 = 1 0 0 1        one line per piece, row-major, in piece order
//   M0 = 0 0 0 1
//   M1 = 0 0 0 0
//   M1 = 1 0 0 0
//   period = 2          coefficient period in units of 1/N (default 1)
//   rho = 1
//   T = 1
//   N = 4 8 16 32 64
//   source = ramped-sine | zero
//   p = 2
//   q = 1
//
// Matrix entries are read as std::complex, so "(0,1)" is the imaginary unit.

#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "homog/coefficients.hpp"
#include "homog/types.hpp"

namespace homog {

/// Malformed configuration or problem file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// J(t, x) = sin(2 pi x) min(1, 10 t), K = 0.
inline Vec2 ramped_sine(double t, double x) {
  Vec2 f;
  f << std::sin(2.0 * pi * x) * std::min(1.0, 10.0 * t), 0.0;
  return f;
}

inline SourceFunction make_source(const std::string& name) {
  if (name == "ramped-sine") return ramped_sine;
  if (name == "zero") return [](double, double) -> Vec2 { return Vec2::Zero(); };
  throw ConfigError("unknown source '" + name + "' (expected ramped-sine or zero)");
}

/// A coefficient field with its period convention, data and default
/// discretisation parameters.
struct ProblemDefinition {
  std::string name = "maxwell-mixed";
  MaterialField field;
  // The field's unit cell is stretched over `period` / N, so the rough
  // problem for N oscillates N / period times on (0, 1).
  int period = 1;
  std::string source_name = "ramped-sine";
  double rho = 1.0;
  double horizon = 1.0;
  std::vector<int> n_list{4, 8, 16, 32, 64};
  int p = 2;
  int q = 1;

  int oscillation_count(int n) const {
    if (n < 1 || n % period != 0) {
      std::ostringstream os;
      os << "problem '" << name << "': N = " << n << " must be a positive multiple of the period " << period;
      throw ConfigError(os.str());
    }
    return n / period;
  }

  EvolutionaryProblem rough(int n) const {
    return {field, Oscillation::rough(oscillation_count(n)), make_source(source_name), rho, horizon, {}};
  }

  EvolutionaryProblem homogenised() const {
    return {field, Oscillation::averaged(), make_source(source_name), rho, horizon, {}};
  }
};

/// eps_N = 1 on [2i/N, (2i+1)/N), sigma_N = 1 - eps_N; M0 = diag(eps, 1),
/// M1 = diag(sigma, 0). One coefficient period spans 2/N.
inline ProblemDefinition builtin_maxwell_mixed() {
  auto pair = [](double eps) {
    CoefficientPair c;
    c.m0 << eps, 0.0, 0.0, 1.0;
    c.m1 << 1.0 - eps, 0.0, 0.0, 0.0;
    return c;
  };
  ProblemDefinition def;
  def.name = "maxwell-mixed";
  def.field = MaterialField({0.0, 0.5, 1.0}, {pair(1.0), pair(0.0)});
  def.period = 2;
  return def;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value, int line) {
  std::istringstream is(value);
  std::vector<T> out;
  T v;
  while (is >> v) out.push_back(v);
  if (!is.eof() || out.empty()) {
    std::ostringstream os;
    os << "line " << line << ": cannot parse value of '" << key << "': '" << value << "'";
    throw ConfigError(os.str());
  }
  return out;
}

template <class T>
T parse_scalar(const std::string& key, const std::string& value, int line) {
  const auto v = parse_list<T>(key, value, line);
  if (v.size() != 1) {
    std::ostringstream os;
    os << "line " << line << ": '" << key << "' takes exactly one value";
    throw ConfigError(os.str());
  }
  return v.front();
}

inline Mat2 parse_matrix(const std::string& key, const std::string& value, int line) {
  const auto v = parse_list<cplx>(key, value, line);
  if (v.size() != 4) {
    std::ostringstream os;
    os << "line " << line << ": '" << key << "' needs 4 row-major entries, got " << v.size();
    throw ConfigError(os.str());
  }
  Mat2 m;
  m << v[0], v[1], v[2], v[3];
  return m;
}

}  // namespace detail

inline ProblemDefinition parse_problem(std::istream& in, const std::string& name = "file") {
  ProblemDefinition def;
  def.name = name;
  std::vector<double> breaks;
  std::vector<Mat2> m0, m1;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << "line " << line << ": expected 'key = value'";
      throw ConfigError(os.str());
    }
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key == "breakpoints") breaks = detail::parse_list<double>(key, value, line);
    else if (key == "M0") m0.push_back(detail::parse_matrix(key, value, line));
    else if (key == "M1") m1.push_back(detail::parse_matrix(key, value, line));
    else if (key == "period") def.period = detail::parse_scalar<int>(key, value, line);
    else if (key == "rho") def.rho = detail::parse_scalar<double>(key, value, line);
    else if (key == "T") def.horizon = detail::parse_scalar<double>(key, value, line);
    else if (key == "N") def.n_list = detail::parse_list<int>(key, value, line);
    else if (key == "source") def.source_name = value;
    else if (key == "p") def.p = detail::parse_scalar<int>(key, value, line);
    else if (key == "q") def.q = detail::parse_scalar<int>(key, value, line);
    else {
      std::ostringstream os;
      os << "line " << line << ": unknown key '" << key << "'";
      throw ConfigError(os.str());
    }
  }
  if (breaks.empty()) throw ConfigError("problem file: missing 'breakpoints'");
  if (m0.size() + 1 != breaks.size() || m1.size() + 1 != breaks.size()) {
    std::ostringstream os;
    os << "problem file: " << breaks.size() - 1 << " pieces need as many M0 and M1 lines (got " << m0.size()
       << " and " << m1.size() << ")";
    throw ConfigError(os.str());
  }
  if (def.period < 1) throw ConfigError("problem file: period must be >= 1");
  if (!(def.rho > 0.0) || !(def.horizon > 0.0)) throw ConfigError("problem file: rho and T must be positive");
  if (def.p < 1 || def.q < 0) throw ConfigError("problem file: need p >= 1 and q >= 0");
  make_source(def.source_name);
  std::vector<CoefficientPair> pieces;
  for (std::size_t j = 0; j < m0.size(); ++j) pieces.push_back({m0[j], m1[j]});
  try {
    def.field = MaterialField(breaks, pieces);
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("problem file: ") + e.what());
  }
  return def;
}

inline ProblemDefinition load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file '" + path + "'");
  return parse_problem(in, path);
}

}  // namespace homog
