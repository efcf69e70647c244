#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "rabigauge/atomic.hpp"

using namespace rabigauge;
using namespace rabigauge::atomic;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double well_state(int n, double x) {  // n = 1, 2, ...
  return std::sqrt(2.0) * (n % 2 ? std::cos(n * kPi * x) : std::sin(n * kPi * x));
}

double well_state_derivative(int n, double x) {
  return std::sqrt(2.0) * n * kPi * (n % 2 ? -std::sin(n * kPi * x) : std::cos(n * kPi * x));
}

// Hermite functions for m = omega = 1 via the three-term recurrence.
std::vector<double> hermite_functions(int count, double x) {
  std::vector<double> psi(count);
  psi[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
  if (count > 1) psi[1] = std::sqrt(2.0) * x * psi[0];
  for (int n = 1; n + 1 < count; ++n)
    psi[n + 1] = std::sqrt(2.0 / (n + 1)) * x * psi[n] - std::sqrt(static_cast<double>(n) / (n + 1)) * psi[n - 1];
  return psi;
}

void check_invariants(const AtomicSpectrum& s, bool analytic) {
  for (std::size_t i = 1; i < s.n_levels(); ++i) CHECK(s.energies[i] >= s.energies[i - 1]);
  CHECK(hermiticity_defect(s.x_mat) <= 1e-10);
  CHECK(hermiticity_defect(s.p_mat) <= 1e-10);
  if (s.symmetric) {
    for (std::size_t i = 0; i < s.n_levels(); ++i)
      for (std::size_t j = 0; j < s.n_levels(); ++j)
        if ((i + j) % 2 == 0) CHECK(std::abs(s.x_mat(i, j)) <= 1e-8);
  }
  if (analytic) {
    for (std::size_t i = 0; i < s.n_levels(); ++i)
      for (std::size_t j = 0; j < s.n_levels(); ++j) {
        const cplx expected = cplx(0.0, s.mass * (s.energies[i] - s.energies[j])) * s.x_mat(i, j);
        CHECK(std::abs(s.p_mat(i, j) - expected) <= 1e-6 * std::max(std::abs(expected), 1e-12));
      }
  }
}

}  // namespace

TEST_CASE("mass for unit gap") {
  CHECK(fix_mass_for_unit_gap(SquareWell{1.0}) == doctest::Approx(1.5 * kPi * kPi).epsilon(1e-15));
  CHECK(fix_mass_for_unit_gap(SquareWell{1.0}) == doctest::Approx(14.8044).epsilon(1e-5));
  CHECK(fix_mass_for_unit_gap(Harmonic{1.0}) == 1.0);
  Tabulated t;
  for (int i = 0; i < 20; ++i) {
    t.grid.push_back(i);
    t.values.push_back(0.0);
  }
  CHECK_THROWS_WITH_AS(fix_mass_for_unit_gap(t), "mass must be supplied explicitly", std::invalid_argument);
  for (double width : {0.5, 1.0, 3.0}) {
    const SquareWell w{width};
    auto s = solve_atomic(w, fix_mass_for_unit_gap(w), 4);
    CHECK(s.gap() == doctest::Approx(1.0).epsilon(1e-14));
  }
  auto h = solve_atomic(Harmonic{2.5}, fix_mass_for_unit_gap(Harmonic{2.5}), 4);
  CHECK(h.gap() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("square well closed form") {
  const SquareWell w{1.0};
  const double m = fix_mass_for_unit_gap(w);
  auto s = solve_atomic(w, m, 12);
  CHECK(s.energies[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(s.energies[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(s.energies[2] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(s.energies[3] == doctest::Approx(16.0 / 3.0).epsilon(1e-14));

  // Quadrature oracle: 2 cos(pi x) x sin(2 pi x) over the well.
  const double x01 = simpson([](double x) { return 2.0 * std::cos(kPi * x) * x * std::sin(2.0 * kPi * x); }, -0.5, 0.5);
  CHECK(std::abs(x01 - 16.0 / (9.0 * kPi * kPi)) < 1e-10);
  CHECK(std::abs(std::abs(s.x_mat(0, 1)) - x01) < 1e-6);
  CHECK(std::abs(s.x_mat(0, 1)) == doctest::Approx(0.18014).epsilon(1e-4));

  for (int a = 1; a <= 7; ++a)
    for (int b = 1; b <= 7; ++b) {
      const double xq = simpson([&](double x) { return well_state(a, x) * x * well_state(b, x); }, -0.5, 0.5);
      CHECK(std::abs(s.x_mat(a - 1, b - 1).real() - xq) < 1e-9);
      // -i <a| d/dx |b>
      const double dq = simpson([&](double x) { return well_state(a, x) * well_state_derivative(b, x); }, -0.5, 0.5);
      CHECK(std::abs(s.p_mat(a - 1, b - 1) - cplx(0.0, -dq)) < 1e-7 * std::max(1.0, std::abs(dq)));
    }
  check_invariants(s, true);
}

TEST_CASE("harmonic closed form") {
  auto s = solve_atomic(Harmonic{1.0}, 1.0, 12);
  for (std::size_t n = 0; n < 12; ++n) CHECK(s.energies[n] == doctest::Approx(n + 0.5).epsilon(1e-15));
  CHECK(std::abs(std::abs(s.x_mat(0, 1)) - 1.0 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(std::abs(s.p_mat(0, 1)) - 1.0 / std::sqrt(2.0)) < 1e-12);

  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const double xq = simpson(
          [&](double x) {
            auto psi = hermite_functions(6, x);
            return psi[a] * x * psi[b];
          },
          -12.0, 12.0);
      CHECK(std::abs(s.x_mat(a, b).real() - xq) < 1e-9);
    }
  check_invariants(s, true);
}

TEST_CASE("TRK sum rule at 50 levels") {
  const SquareWell w{1.0};
  auto sw = solve_atomic(w, fix_mass_for_unit_gap(w), 50);
  CHECK(std::abs(trk_sum(sw) - 1.0) <= 1e-3);
  auto ho = solve_atomic(Harmonic{1.0}, 1.0, 50);
  CHECK(std::abs(trk_sum(ho) - 1.0) <= 1e-3);
  check_invariants(sw, true);
  check_invariants(ho, true);
}

TEST_CASE("finite differences agree with closed forms") {
  const SquareWell w{1.0};
  const double mw = fix_mass_for_unit_gap(w);
  struct Case {
    Potential pot;
    double mass;
  };
  for (const auto& c : {Case{w, mw}, Case{Harmonic{1.0}, 1.0}}) {
    auto exact = solve_atomic(c.pot, c.mass, 10);
    auto fd = solve_atomic_fd(c.pot, c.mass, 10, FdGrid{2000, std::nullopt});
    CAPTURE(exact.label);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(std::abs(fd.energies[i] - exact.energies[i]) <= 1e-4 * exact.energies[i]);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 10; ++j)
        CHECK(std::abs(std::abs(fd.x_mat(i, j)) - std::abs(exact.x_mat(i, j))) <= 1e-3);
    check_invariants(fd, false);
  }
}

TEST_CASE("finite differences converge at second order") {
  const SquareWell w{1.0};
  const double mw = fix_mass_for_unit_gap(w);
  auto max_err = [](const Potential& pot, double mass, std::size_t points) {
    auto exact = solve_atomic(pot, mass, 10);
    FdGrid g{points, std::holds_alternative<Harmonic>(pot) ? std::optional<double>(10.0) : std::nullopt};
    auto fd = solve_atomic_fd(pot, mass, 10, g);
    double e = 0.0;
    for (std::size_t i = 0; i < 10; ++i) e = std::max(e, std::abs(fd.energies[i] - exact.energies[i]));
    return e;
  };
  CHECK(max_err(w, mw, 499) / max_err(w, mw, 999) >= 3.0);
  CHECK(max_err(Harmonic{1.0}, 1.0, 500) / max_err(Harmonic{1.0}, 1.0, 1000) >= 3.0);
}

TEST_CASE("tabulated potentials") {
  Tabulated t;
  for (int i = 0; i <= 400; ++i) {
    const double x = -10.0 + 20.0 * i / 400.0;
    t.grid.push_back(x);
    t.values.push_back(0.5 * x * x);
  }
  auto s = solve_atomic(t, 1.0, 6, FdGrid{3000, std::nullopt});
  CHECK(s.symmetric);
  for (std::size_t n = 0; n < 6; ++n) CHECK(s.energies[n] == doctest::Approx(n + 0.5).epsilon(2e-3));
  check_invariants(s, false);

  Tabulated tilted = t;
  for (std::size_t i = 0; i < tilted.grid.size(); ++i) tilted.values[i] += 0.3 * tilted.grid[i];
  auto a = solve_atomic(tilted, 1.0, 4);
  CHECK_FALSE(a.symmetric);
  CHECK(std::abs(a.x_mat(0, 0)) > 0.1);  // displaced minimum at x = -0.3
}

TEST_CASE("tabulated CSV parsing") {
  std::ostringstream good;
  good << "x,V\n";
  for (int i = 0; i < 20; ++i) good << (i - 10) * 0.5 << "," << 0.1 * (i - 10) * (i - 10) << "\n";
  std::istringstream in(good.str());
  auto t = parse_tabulated_csv(in);
  CHECK(t.grid.size() == 20);
  CHECK(t.values[0] == doctest::Approx(10.0));

  std::istringstream bad_header("position,energy\n0,0\n");
  CHECK_THROWS_AS(parse_tabulated_csv(bad_header), std::invalid_argument);
  std::istringstream bad_number("x,V\n0,abc\n");
  CHECK_THROWS_WITH(parse_tabulated_csv(bad_number), "potential CSV line 2: malformed number");
  std::istringstream too_short("x,V\n0,0\n1,1\n");
  CHECK_THROWS_AS(parse_tabulated_csv(too_short), std::invalid_argument);
  std::ostringstream unsorted;
  unsorted << "x,V\n";
  for (int i = 0; i < 20; ++i) unsorted << (i == 5 ? 100 : i) << ",0\n";
  std::istringstream in2(unsorted.str());
  CHECK_THROWS_AS(parse_tabulated_csv(in2), std::invalid_argument);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(solve_atomic(SquareWell{-1.0}, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(solve_atomic(Harmonic{0.0}, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(solve_atomic(Harmonic{1.0}, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(solve_atomic(Harmonic{1.0}, -1.0, 4), std::invalid_argument);
  // 40 levels of a unit-gap square well need far more than 64 nodes.
  const SquareWell w{1.0};
  try {
    solve_atomic_fd(w, fix_mass_for_unit_gap(w), 30, FdGrid{64, std::nullopt});
    FAIL("expected insufficient grid");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("insufficient grid") != std::string::npos);
  }
}
