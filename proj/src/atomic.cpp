#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rabigauge/atomic.hpp"
#include "rabigauge/numerics.hpp"

namespace rabigauge::atomic {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// p_ij = i m (e_i - e_j) x_ij, from [H, x] = -i p / m.
ComplexMatrix canonical_momentum(const std::vector<double>& e, const ComplexMatrix& x, double mass) {
  const std::size_t n = e.size();
  ComplexMatrix p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = cplx(0.0, mass * (e[i] - e[j])) * x(i, j);
  return p;
}

// Integral of x sin(k pi x) over (-1/2, 1/2) for odd k.
double odd_sine_moment(long k) {
  const long ak = std::labs(k);
  const double sign = ((ak - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
  const double v = 2.0 * sign / (static_cast<double>(ak * ak) * kPi * kPi);
  return k < 0 ? -v : v;
}

AtomicSpectrum square_well_closed_form(const SquareWell& well, double mass, std::size_t n_levels) {
  AtomicSpectrum s;
  s.mass = mass;
  s.symmetric = true;
  s.label = potential_id(Potential{well});
  const double L = well.width;
  s.energies.resize(n_levels);
  for (std::size_t k = 0; k < n_levels; ++k) {
    const double n = static_cast<double>(k + 1);
    s.energies[k] = n * n * kPi * kPi / (2.0 * mass * L * L);
  }
  s.x_mat = ComplexMatrix(n_levels, n_levels);
  for (std::size_t a = 0; a < n_levels; ++a)
    for (std::size_t b = 0; b < n_levels; ++b) {
      const long na = static_cast<long>(a + 1);
      const long nb = static_cast<long>(b + 1);
      if ((na + nb) % 2 == 0) continue;
      const long c = na % 2 == 1 ? na : nb;   // cosine state
      const long sn = na % 2 == 0 ? na : nb;  // sine state
      s.x_mat(a, b) = L * (odd_sine_moment(sn + c) + odd_sine_moment(sn - c));
    }
  s.p_mat = canonical_momentum(s.energies, s.x_mat, mass);
  return s;
}

AtomicSpectrum harmonic_closed_form(const Harmonic& osc, double mass, std::size_t n_levels) {
  AtomicSpectrum s;
  s.mass = mass;
  s.symmetric = true;
  s.label = potential_id(Potential{osc});
  const double w = std::sqrt(osc.stiffness / mass);
  s.energies.resize(n_levels);
  for (std::size_t k = 0; k < n_levels; ++k) s.energies[k] = w * (static_cast<double>(k) + 0.5);
  s.x_mat = ComplexMatrix(n_levels, n_levels);
  for (std::size_t k = 0; k + 1 < n_levels; ++k) {
    const double v = std::sqrt(static_cast<double>(k + 1) / (2.0 * mass * w));
    s.x_mat(k, k + 1) = v;
    s.x_mat(k + 1, k) = v;
  }
  s.p_mat = canonical_momentum(s.energies, s.x_mat, mass);
  return s;
}

bool tabulated_is_symmetric(const Tabulated& t) {
  const double lo = t.grid.front(), hi = t.grid.back();
  const double span = hi - lo;
  if (std::abs(lo + hi) > 1e-12 * span) return false;
  double scale = 0.0;
  for (double v : t.values) scale = std::max(scale, std::abs(v));
  const Potential p{t};
  for (double x : t.grid)
    if (std::abs(evaluate(p, x) - evaluate(p, -x)) > 1e-12 * std::max(scale, 1.0)) return false;
  return true;
}

}  // namespace

void validate(const Potential& potential) {
  std::visit(overloaded{
                 [](const SquareWell& w) {
                   if (!(w.width > 0.0)) throw std::invalid_argument("square well width must be > 0");
                 },
                 [](const Harmonic& h) {
                   if (!(h.stiffness > 0.0)) throw std::invalid_argument("harmonic stiffness must be > 0");
                 },
                 [](const Tabulated& t) {
                   if (t.grid.size() != t.values.size())
                     throw std::invalid_argument("tabulated potential: grid and values differ in length");
                   if (t.grid.size() < 16)
                     throw std::invalid_argument("tabulated potential needs at least 16 points");
                   for (std::size_t i = 1; i < t.grid.size(); ++i)
                     if (!(t.grid[i] > t.grid[i - 1]))
                       throw std::invalid_argument("tabulated potential grid must be strictly increasing");
                   for (double v : t.values)
                     if (!std::isfinite(v)) throw std::invalid_argument("tabulated potential values must be finite");
                 },
             },
             potential);
}

double evaluate(const Potential& potential, double x) {
  const double inf = std::numeric_limits<double>::infinity();
  return std::visit(overloaded{
                        [&](const SquareWell& w) { return std::abs(x) < 0.5 * w.width ? 0.0 : inf; },
                        [&](const Harmonic& h) { return 0.5 * h.stiffness * x * x; },
                        [&](const Tabulated& t) {
                          if (x < t.grid.front() || x > t.grid.back()) return inf;
                          auto it = std::upper_bound(t.grid.begin(), t.grid.end(), x);
                          if (it == t.grid.end()) return t.values.back();
                          const std::size_t i = static_cast<std::size_t>(it - t.grid.begin());
                          const double f = (x - t.grid[i - 1]) / (t.grid[i] - t.grid[i - 1]);
                          return (1.0 - f) * t.values[i - 1] + f * t.values[i];
                        },
                    },
                    potential);
}

std::string potential_id(const Potential& potential) {
  return std::visit(overloaded{
                        [](const SquareWell& w) { return "square_well(width=" + format_number(w.width) + ")"; },
                        [](const Harmonic& h) { return "harmonic(k=" + format_number(h.stiffness) + ")"; },
                        [](const Tabulated& t) {
                          return "tabulated(" + std::to_string(t.grid.size()) + " points)";
                        },
                    },
                    potential);
}

bool is_builtin(const Potential& potential) { return !std::holds_alternative<Tabulated>(potential); }

Tabulated parse_tabulated_csv(std::istream& in) {
  Tabulated t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (!header) {
      std::string compact;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
      if (compact != "x,V")
        throw std::invalid_argument("potential CSV line " + std::to_string(lineno) + ": expected header `x,V`");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw std::invalid_argument("potential CSV line " + std::to_string(lineno) + ": expected two columns");
    try {
      std::size_t used = 0;
      const std::string xs = trim(line.substr(0, comma));
      const std::string vs = trim(line.substr(comma + 1));
      const double x = std::stod(xs, &used);
      if (used != xs.size()) throw std::invalid_argument("x");
      const double v = std::stod(vs, &used);
      if (used != vs.size()) throw std::invalid_argument("V");
      t.grid.push_back(x);
      t.values.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("potential CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  if (!header) throw std::invalid_argument("potential CSV: missing header `x,V`");
  validate(Potential{t});
  return t;
}

Tabulated load_tabulated_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open potential file " + path.string());
  return parse_tabulated_csv(in);
}

double fix_mass_for_unit_gap(const Potential& potential) {
  validate(potential);
  return std::visit(overloaded{
                        [](const SquareWell& w) { return 3.0 * kPi * kPi / (2.0 * w.width * w.width); },
                        [](const Harmonic& h) { return h.stiffness; },
                        [](const Tabulated&) -> double {
                          throw std::invalid_argument("mass must be supplied explicitly");
                        },
                    },
                    potential);
}

AtomicSpectrum solve_atomic(const Potential& potential, double mass, std::size_t n_levels, const FdGrid& grid) {
  validate(potential);
  if (n_levels < 2) throw std::invalid_argument("solve_atomic: need at least 2 levels");
  if (!(mass > 0.0)) throw std::invalid_argument("solve_atomic: mass must be > 0");
  if (const auto* w = std::get_if<SquareWell>(&potential)) return square_well_closed_form(*w, mass, n_levels);
  if (const auto* h = std::get_if<Harmonic>(&potential)) return harmonic_closed_form(*h, mass, n_levels);
  return solve_atomic_fd(potential, mass, n_levels, grid);
}

AtomicSpectrum solve_atomic_fd(const Potential& potential, double mass, std::size_t n_levels, const FdGrid& grid) {
  validate(potential);
  if (n_levels < 2) throw std::invalid_argument("solve_atomic: need at least 2 levels");
  if (!(mass > 0.0)) throw std::invalid_argument("solve_atomic: mass must be > 0");
  const std::size_t P = grid.points;
  if (n_levels > P / 2) throw std::invalid_argument("insufficient grid: too few points for the requested levels");

  double lo = 0.0, hi = 0.0;
  if (const auto* w = std::get_if<SquareWell>(&potential)) {
    lo = -0.5 * w->width;
    hi = 0.5 * w->width;
  } else if (const auto* osc = std::get_if<Harmonic>(&potential)) {
    double half = 0.0;
    if (grid.half_width) {
      half = *grid.half_width;
    } else {
      const double w = std::sqrt(osc->stiffness / mass);
      const double top = w * (static_cast<double>(n_levels) - 0.5);
      half = std::sqrt(2.0 * top / osc->stiffness) + 5.0 / std::sqrt(mass * w);
    }
    lo = -half;
    hi = half;
  } else {
    const auto& t = std::get<Tabulated>(potential);
    lo = t.grid.front();
    hi = t.grid.back();
  }

  const double h = (hi - lo) / static_cast<double>(P + 1);
  std::vector<double> x(P), diag(P), off(P - 1, -1.0 / (2.0 * mass * h * h));
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < P; ++i) {
    x[i] = lo + static_cast<double>(i + 1) * h;
    const double v = std::get_if<SquareWell>(&potential) ? 0.0 : evaluate(potential, x[i]);
    diag[i] = 1.0 / (mass * h * h) + v;
    vmin = std::min(vmin, v);
  }

  auto pairs = numerics::tridiagonal_lowest(diag, off, n_levels);

  // Second-order stencil: relative error of the top level ~ (k h)^2 / 12.
  const double k2 = 2.0 * mass * std::max(pairs.eigenvalues.back() - vmin, 0.0);
  if (k2 * h * h / 12.0 > 0.05)
    throw std::invalid_argument("insufficient grid: top requested level is under-resolved (estimated error " +
                                format_number(k2 * h * h / 12.0) + ")");

  for (std::size_t k = 0; k < n_levels; ++k) {
    auto v = pairs.vectors.row(k);
    double vmax = 0.0;
    for (double c : v) vmax = std::max(vmax, std::abs(c));
    for (double c : v) {
      if (std::abs(c) > 1e-8 * vmax) {
        if (c < 0.0)
          for (double& cc : v) cc = -cc;
        break;
      }
    }
  }

  AtomicSpectrum s;
  s.mass = mass;
  s.label = potential_id(potential) + "[fd " + std::to_string(P) + "]";
  s.symmetric = std::holds_alternative<Tabulated>(potential)
                    ? tabulated_is_symmetric(std::get<Tabulated>(potential))
                    : true;
  s.energies = pairs.eigenvalues;
  s.x_mat = ComplexMatrix(n_levels, n_levels);
  for (std::size_t a = 0; a < n_levels; ++a) {
    auto va = pairs.vectors.row(a);
    for (std::size_t b = a; b < n_levels; ++b) {
      auto vb = pairs.vectors.row(b);
      double acc = 0.0;
      for (std::size_t i = 0; i < P; ++i) acc += va[i] * x[i] * vb[i];
      s.x_mat(a, b) = acc;
      s.x_mat(b, a) = acc;
    }
  }
  s.p_mat = canonical_momentum(s.energies, s.x_mat, mass);
  return s;
}

double trk_sum(const AtomicSpectrum& spectrum, std::size_t level) {
  double s = 0.0;
  for (std::size_t j = 0; j < spectrum.n_levels(); ++j)
    s += 2.0 * spectrum.mass * (spectrum.energies[j] - spectrum.energies[level]) * std::norm(spectrum.x_mat(level, j));
  return s;
}

}  // namespace rabigauge::atomic
