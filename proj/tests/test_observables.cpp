#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "rabigauge/errors.hpp"
#include "rabigauge/observables.hpp"
#include "rabigauge/random.hpp"

using namespace rabigauge;
using namespace rabigauge::observables;

namespace {

atomic::AtomicSpectrum square_well(std::size_t levels) {
  const atomic::SquareWell w{1.0};
  return atomic::solve_atomic(w, atomic::fix_mass_for_unit_gap(w), levels);
}

atomic::AtomicSpectrum oscillator(std::size_t levels) { return atomic::solve_atomic(atomic::Harmonic{1.0}, 1.0, levels); }

ModelParams model(const atomic::AtomicSpectrum& a, double alpha, double omega, double q, std::size_t d = 2,
                  std::size_t n = 2) {
  ModelParams p;
  p.alpha = alpha;
  p.omega = omega;
  p.coupling.q = q;
  p.mass = a.mass;
  p.d = d;
  p.n_photon = n;
  return p;
}

ComplexMatrix scaled(const ComplexMatrix& m, cplx s) {
  ComplexMatrix out = m;
  for (auto& z : out.data()) z *= s;
  return out;
}

// exp(i H t) by scaling and squaring of a Taylor series; independent of any eigensolver.
ComplexMatrix expm_i(const ComplexMatrix& h, double t) {
  const double scale_norm = max_abs(h) * h.rows() * std::abs(t);
  int squarings = 0;
  while (scale_norm / std::pow(2.0, squarings) > 0.25) ++squarings;
  const ComplexMatrix a = scaled(h, cplx(0.0, t / std::pow(2.0, squarings)));
  ComplexMatrix sum = ComplexMatrix::identity(h.rows());
  ComplexMatrix term = ComplexMatrix::identity(h.rows());
  for (int k = 1; k <= 30; ++k) {
    term = scaled(matmul(term, a), 1.0 / k);
    for (std::size_t i = 0; i < sum.data().size(); ++i) sum.data()[i] += term.data()[i];
  }
  for (int s = 0; s < squarings; ++s) sum = matmul(sum, sum);
  return sum;
}

ComplexMatrix diagonal(const std::vector<double>& d) {
  ComplexMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

cplx brute_force_otoc(const ComplexMatrix& h, const ComplexVector& psi, const ComplexMatrix& n, double t) {
  const auto u_plus = expm_i(h, t);
  const auto w = matmul(matmul(u_plus, n), adjoint(u_plus));
  const auto op = matmul(matmul(w, n), matmul(w, n));
  return inner(psi, matvec(op, psi));
}

ComplexVector random_state(std::size_t dim, Rng& rng) {
  ComplexVector v(dim);
  for (auto& z : v) z = rng.complex_normal();
  const double s = norm(v);
  for (auto& z : v) z /= s;
  return v;
}

}  // namespace

TEST_CASE("OTOC matches brute-force matrix products") {
  Rng rng(99);
  const auto sw = square_well(4);
  for (auto phase : {PhotonPhase::standard, PhotonPhase::real}) {
    for (int draw = 0; draw < 3; ++draw) {
      const auto p = model(sw, rng.uniform(-1.0, 2.0), rng.uniform(0.3, 3.0), rng.uniform(0.5, 4.0));
      const auto h = assemble(sw, p, phase);
      const auto eig = numerics::eigh(h);
      const auto number = photon_number_diagonal(2, 2);
      const auto n_mat = diagonal(number);
      std::vector<double> times(10);
      for (auto& t : times) t = rng.uniform(0.0, 10.0);

      const auto psi = random_state(4, rng);
      const auto series = otoc(psi, eig, number, times, false);
      for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(std::abs(series.values[k] - brute_force_otoc(h.matrix(), psi, n_mat, times[k])) <= 1e-12);

      const auto ground = otoc_eigenstate(0, eig, number, times, false);
      const auto g_vec = eig.vector(0);
      for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(std::abs(ground.values[k] - brute_force_otoc(h.matrix(), g_vec, n_mat, times[k])) <= 1e-12);
    }
  }
}

TEST_CASE("eigenstate and generic OTOC paths agree on larger spaces") {
  const auto osc = oscillator(6);
  const auto times = time_grid(5.0, 0.5);
  for (auto phase : {PhotonPhase::standard, PhotonPhase::real}) {
    const auto h = assemble(osc, model(osc, 0.3, 1.0, 1.2, 4, 8), phase);
    const auto eig = numerics::eigh(h);
    const auto number = photon_number_diagonal(4, 8);
    for (std::size_t k : {0u, 3u}) {
      const auto fast = otoc_eigenstate(k, eig, number, times);
      const auto slow = otoc(eig.vector(k), eig, number, times);
      CHECK(fast.normalized);
      for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(fast.values[i] - slow.values[i]) <= 1e-10);
    }
  }
}

TEST_CASE("W(t) is isospectral with n") {
  Rng rng(7);
  const auto sw = square_well(3);
  const auto h = assemble(sw, model(sw, 0.4, 1.0, 2.0, 3, 5), PhotonPhase::standard);
  const auto eig = numerics::eigh(h);
  auto number = photon_number_diagonal(3, 5);
  const auto n_mat = diagonal(number);
  std::sort(number.begin(), number.end());
  for (int k = 0; k < 5; ++k) {
    const double t = rng.uniform(0.0, 20.0);
    ComplexMatrix d(eig.dim(), eig.dim());
    for (std::size_t j = 0; j < eig.dim(); ++j) d(j, j) = std::polar(1.0, eig.eigenvalues[j] * t);
    const auto u = matmul(matmul(eig.eigenvectors, d), adjoint(eig.eigenvectors));
    const auto w = matmul(matmul(u, n_mat), adjoint(u));
    const auto ev = numerics::eigvalsh(HermitianMatrix(w, 1e-10));
    for (std::size_t j = 0; j < ev.size(); ++j) CHECK(std::abs(ev[j] - number[j]) <= 1e-9);
  }
}

TEST_CASE("OTOC at t = 0 and in the decoupled limit") {
  Rng rng(8);
  const auto osc = oscillator(4);
  const auto h = assemble(osc, model(osc, 0.7, 1.0, 1.0, 3, 6));
  const auto eig = numerics::eigh(h);
  const auto number = photon_number_diagonal(3, 6);
  const std::vector<double> t0{0.0};
  for (int k = 0; k < 10; ++k) {
    const auto psi = random_state(18, rng);
    const auto s = otoc(psi, eig, number, t0, false);
    double n4 = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) n4 += std::norm(psi[i]) * std::pow(number[i], 4);
    CHECK(std::abs(s.values[0].imag()) <= 1e-10);
    CHECK(s.values[0].real() >= 0.0);
    CHECK(s.values[0].real() == doctest::Approx(n4).epsilon(1e-12));
    CHECK(std::abs(otoc(psi, eig, number, t0).values[0] - 1.0) <= 1e-12);
  }

  const auto sw = square_well(16);
  auto ref = build_reference(sw, model(sw, 0.3, 1.0, 0.0, 8, 16), true);
  const auto pair = otoc_pair(sw, ref, time_grid(10.0, 0.1));
  CHECK_FALSE(pair.two_level.normalized);
  CHECK_FALSE(pair.accurate.normalized);
  for (std::size_t i = 0; i < pair.accurate.values.size(); ++i) {
    CHECK(std::abs(pair.two_level.values[i]) == 0.0);
    CHECK(std::abs(pair.accurate.values[i]) == 0.0);
  }
  CHECK(mean_error(pair.two_level, pair.accurate) == 0.0);
}

TEST_CASE("full-dynamics OTOC evolves the two-level state under the reference") {
  const auto sw = square_well(16);
  auto ref = build_reference(sw, model(sw, 0.5, 1.0, 1.0, 6, 12), true);
  const auto times = time_grid(4.0, 0.5);
  const auto lit = otoc_pair(sw, ref, times, OtocDynamics::full);
  const auto psi = truncated_ground_state(sw, 2, ref);
  const auto unsplit = numerics::eigh(assemble(sw, ref.params()));
  const auto direct = otoc(psi, unsplit, photon_number_diagonal(6, 12), times);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(lit.two_level.values[i] - direct.values[i]) <= 1e-10);
  CHECK(std::abs(lit.two_level.values[0] - 1.0) <= 1e-12);
}

TEST_CASE("parity sectors reproduce the unsplit model") {
  const auto sw = square_well(8);
  const auto p = model(sw, 0.3, 1.2, 2.5, 6, 10);
  const auto split = diagonalize(sw, p, true);
  REQUIRE(split.sectors.size() == 2);
  const auto whole = numerics::eigh(assemble(sw, p));
  for (std::size_t k = 0; k < whole.dim(); ++k) CHECK(std::abs(split.eigenvalues[k] - whole.eigenvalues[k]) <= 1e-11);

  // off-sector elements of the full matrix vanish
  const auto h = assemble(sw, p);
  for (std::size_t r : split.sectors[0].indices)
    for (std::size_t c : split.sectors[1].indices) CHECK(h(r, c) == cplx(0.0, 0.0));

  const auto times = time_grid(6.0, 0.25);
  const auto a = otoc_ground(split, times);
  const auto b = otoc_eigenstate(0, whole, photon_number_diagonal(6, 10), times);
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(std::abs(a.values[k] - b.values[k]) <= 1e-10);

  Rng rng(4);
  const auto psi = random_state(60, rng);
  CHECK(std::abs(split.expectation(psi) - HermitianMatrix(h).expectation(psi)) <= 1e-12);
  const auto c = otoc(psi, split, times);
  const auto e = otoc(psi, whole, photon_number_diagonal(6, 10), times);
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(std::abs(c.values[k] - e.values[k]) <= 1e-10);

  atomic::Tabulated t;
  for (int i = 0; i <= 200; ++i) {
    const double x = -8.0 + 16.0 * i / 200.0;
    t.grid.push_back(x);
    t.values.push_back(0.5 * x * x + 0.4 * x);
  }
  const auto asym = atomic::solve_atomic(t, 1.0, 4);
  CHECK(diagonalize(asym, model(asym, 0.3, 1.0, 1.0, 4, 6), false).sectors.size() == 1);
}

TEST_CASE("time grid") {
  auto t = time_grid(50.0, 0.05);
  CHECK(t.size() == 1001);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == doctest::Approx(50.0).epsilon(1e-14));
  CHECK_THROWS_AS(time_grid(1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(time_grid(2e5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(time_grid(-1.0, 0.1), std::invalid_argument);
}

TEST_CASE("mean error") {
  OtocSeries a, b;
  a.times = b.times = {0.0, 1.0, 2.0};
  a.values = {1.0, cplx(0.0, 3.0), 2.0};
  b.values = {0.0, 0.0, 0.0};
  // (0.5 * 1 + 3 + 0.5 * 2) / 2
  CHECK(mean_error(a, b) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(mean_error(b, a) == mean_error(a, b));
  CHECK(mean_error(a, a) == 0.0);

  OtocSeries c = a;
  for (auto& v : c.values) v += 0.4;
  CHECK(mean_error(a, c) == doctest::Approx(0.4).epsilon(1e-14));

  OtocSeries d = a;
  d.times = {0.0, 1.0, 2.5};
  CHECK_THROWS_AS(mean_error(a, d), std::invalid_argument);
}

TEST_CASE("decoupled ground energies") {
  const auto sw = square_well(16);
  auto ref = build_reference(sw, model(sw, 0.2, 1.0, 0.0, 8, 16));
  CHECK(ground_energy_truncated(sw, 2, ref) == doctest::Approx(sw.energies[0] + 0.5).epsilon(1e-14));
  CHECK(delta_Eg(sw, ref) == 0.0);
  const auto two = two_level_spectrum(sw, ref);
  // levels below e_2 + w/2 are shared by both models
  for (std::size_t n = 0; two[n] < sw.energies[2] + 0.5 - 1e-9; ++n) CHECK(spectrum_error(two, ref, n) <= 1e-12);
  CHECK_THROWS_AS(spectrum_error(two, ref, 32), std::out_of_range);
}

TEST_CASE("variational bound over random draws") {
  Rng rng(2024);
  const auto sw = square_well(8);
  const auto osc = oscillator(8);
  int draws = 0;
  for (int k = 0; k < 100; ++k) {
    for (const auto* a : {&sw, &osc}) {
      const double q = rng.uniform(0.0, 2.0) * std::sqrt(a->mass);
      auto ref = build_reference(*a, model(*a, rng.uniform(-1.0, 2.0), rng.uniform(0.1, 10.0), q, 8, 24));
      const double gap = ground_energy_truncated(*a, 2, ref) - ref.ground_energy();
      CHECK(gap >= -1e-10);
      CHECK(delta_Eg(*a, ref) >= 0.0);
      ++draws;
    }
  }
  CHECK(draws == 200);
}

TEST_CASE("parameter mismatch with the reference") {
  const auto sw = square_well(8);
  auto ref = build_reference(sw, model(sw, 0.2, 1.0, 1.0, 4, 8));
  auto p = model(sw, 0.3, 1.0, 1.0, 2, 8);
  CHECK_THROWS_AS(ground_energy_truncated(sw, p, ref), std::invalid_argument);
  p.alpha = 0.2;
  CHECK(ground_energy_truncated(sw, p, ref) == ground_energy_truncated(sw, 2, ref));
  CHECK_THROWS_AS(otoc_pair(sw, ref, time_grid(1.0, 0.1)), std::invalid_argument);  // no vectors
}

TEST_CASE("reference convergence") {
  SUBCASE("decoupled model converges at once") {
    const auto sw = square_well(64);
    auto ref = converge_reference(sw, model(sw, 0.5, 1.0, 0.0));
    CHECK(ref.report.size() == 3);
    CHECK(ref.report[1].delta == 0.0);
    std::vector<double> expected;
    for (std::size_t i = 0; i < ref.d_ref(); ++i)
      for (std::size_t n = 0; n < ref.n_ref(); ++n) expected.push_back(sw.energies[i] + n + 0.5);
    std::sort(expected.begin(), expected.end());
    for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(ref.model.eigenvalues[k] - expected[k]) <= 1e-12);
  }

  SUBCASE("coupled square well") {
    const auto sw = square_well(64);
    const double q = 0.07 * std::sqrt(sw.mass);
    auto ref = converge_reference(sw, model(sw, 0.0, 1.0, q));
    REQUIRE(ref.report.size() >= 3);
    CHECK(ref.report.back().delta <= 1e-6);
    // deltas of successive doublings of the same cutoff shrink
    std::vector<double> by_d, by_n;
    for (std::size_t k = 1; k < ref.report.size(); ++k)
      (ref.report[k].d != ref.report[k - 1].d ? by_d : by_n).push_back(ref.report[k].delta);
    for (const auto* seq : {&by_d, &by_n})
      for (std::size_t k = 1; k < seq->size(); ++k) CHECK((*seq)[k] <= (*seq)[k - 1] * 1.0001 + 1e-12);

    // gauge invariance of the converged reference and cutoff reuse
    std::vector<double> ground;
    for (double alpha : {0.0, 0.5, 1.0}) {
      auto fresh = converge_reference(sw, model(sw, alpha, 1.0, q));
      ground.push_back(fresh.ground_energy());
      auto reused = build_reference(sw, model(sw, alpha, 1.0, q, ref.d_ref(), ref.n_ref()));
      CHECK(std::abs(reused.ground_energy() - fresh.ground_energy()) <= 2e-6);
    }
    const auto [lo, hi] = std::minmax_element(ground.begin(), ground.end());
    CHECK((*hi - *lo) <= 1e-3 * std::abs(*lo));
  }

  SUBCASE("caps raise a convergence error") {
    const auto osc = oscillator(16);
    ReferenceOptions opt;
    opt.d_cap = 16;
    opt.n_cap = 32;
    try {
      converge_reference(osc, model(osc, 0.0, 1.0, 3.0), opt);
      FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
      CHECK(e.last_delta() > opt.tol);
    }
  }
}
