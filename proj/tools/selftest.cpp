#include <cmath>
#include <numbers>

#include "commands.hpp"
#include "csv.hpp"
#include "rabigauge/numerics.hpp"
#include "rabigauge/observables.hpp"
#include "rabigauge/random.hpp"

namespace rabigauge::cli {

namespace {

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

Check upper(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance};
}

ModelParams model(const atomic::AtomicSpectrum& a, double alpha, double omega, double q, std::size_t d,
                  std::size_t n) {
  ModelParams p;
  p.alpha = alpha;
  p.omega = omega;
  p.coupling.q = q;
  p.mass = a.mass;
  p.d = d;
  p.n_photon = n;
  return p;
}

std::vector<Check> numerics_checks(Rng& rng) {
  std::vector<Check> out;
  for (auto solver : {numerics::Solver::lapack, numerics::Solver::householder}) {
    const std::size_t dim = solver == numerics::Solver::lapack ? 200 : 80;
    std::vector<double> lambda(dim);
    for (auto& l : lambda) l = rng.uniform(-5.0, 5.0);
    const auto u = random_unitary(dim, rng);
    const HermitianMatrix h(planted_hermitian(u, lambda), 1e-10);
    const auto e = numerics::eigh(h, solver);
    std::sort(lambda.begin(), lambda.end());
    double spec = 0.0, trace_h = 0.0, trace_e = 0.0, resid = 0.0, ortho = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      spec = std::max(spec, std::abs(e.eigenvalues[i] - lambda[i]));
      trace_h += h(i, i).real();
      trace_e += e.eigenvalues[i];
    }
    const auto hu = matmul(h.matrix(), e.eigenvectors);
    const auto uu = matmul(adjoint(e.eigenvectors), e.eigenvectors);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t k = 0; k < dim; ++k) {
        resid = std::max(resid, std::abs(hu(i, k) - e.eigenvectors(i, k) * e.eigenvalues[k]));
        ortho = std::max(ortho, std::abs(uu(i, k) - (i == k ? 1.0 : 0.0)));
      }
    const std::string tag = solver == numerics::Solver::lapack ? "lapack" : "householder";
    out.push_back(upper("eigh planted spectrum (" + tag + ")", spec, 1e-10));
    out.push_back(upper("eigh residual (" + tag + ")", resid / (max_abs(h.matrix()) * dim), 1e-9));
    out.push_back(upper("eigh orthonormality (" + tag + ")", ortho, 1e-10));
    out.push_back(upper("eigh trace (" + tag + ")", std::abs(trace_e - trace_h) / std::abs(trace_h), 1e-9));
  }
  const auto r = numerics::minimize_scalar([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0, 61, 1e-8);
  out.push_back(upper("minimize_scalar quadratic", std::abs(r.argmin - 0.3), 1e-6));
  return out;
}

std::vector<Check> atomic_checks(const atomic::AtomicSpectrum& sw, const atomic::AtomicSpectrum& ho) {
  std::vector<Check> out;
  const double pi = std::numbers::pi;
  out.push_back(upper("TRK square well, 50 levels", std::abs(atomic::trk_sum(sw) - 1.0), 1e-3));
  out.push_back(upper("TRK harmonic, 50 levels", std::abs(atomic::trk_sum(ho) - 1.0), 1e-3));
  out.push_back(upper("|x01| square well", std::abs(std::abs(sw.x_mat(0, 1)) - 16.0 / (9.0 * pi * pi)), 1e-6));
  out.push_back(upper("|x01| harmonic", std::abs(std::abs(ho.x_mat(0, 1)) - std::sqrt(0.5)), 1e-6));
  const auto fd = atomic::solve_atomic_fd(atomic::Harmonic{1.0}, 1.0, 10);
  double rel = 0.0;
  for (std::size_t i = 0; i < 10; ++i) rel = std::max(rel, std::abs(fd.energies[i] - ho.energies[i]) / ho.energies[i]);
  out.push_back(upper("finite differences vs closed form, harmonic", rel, 1e-4));
  return out;
}

std::vector<Check> model_checks(const atomic::AtomicSpectrum& sw, const atomic::AtomicSpectrum& ho, Rng& rng) {
  std::vector<Check> out;
  double decoupled = 0.0, gap0 = 0.0;
  for (const auto* a : {&sw, &ho}) {
    for (double alpha : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
      const auto p = model(*a, alpha, 1.3, 0.0, 4, 8);
      const auto e = numerics::eigvalsh(assemble(*a, p));
      std::vector<double> expected;
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t n = 0; n < 8; ++n) expected.push_back(a->energies[i] + 1.3 * (n + 0.5));
      std::sort(expected.begin(), expected.end());
      for (std::size_t k = 0; k < e.size(); ++k) decoupled = std::max(decoupled, std::abs(e[k] - expected[k]));
      gap0 = std::max(gap0, std::abs(observables::delta_Eg(*a, observables::build_reference(*a, p))));
    }
  }
  out.push_back(upper("decoupled spectrum", decoupled, 1e-12));
  out.push_back(upper("decoupled delta_Eg", gap0, 1e-12));

  double closed = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto* a = k % 2 ? &ho : &sw;
    const auto p = model(*a, rng.uniform(-1.0, 2.0), rng.uniform(0.1, 10.0), rng.uniform(0.0, 2.0) * std::sqrt(a->mass),
                         2, 12);
    const auto e1 = numerics::eigvalsh(assemble(*a, p));
    const auto e2 = numerics::eigvalsh(two_level_closed_form(*a, p));
    for (std::size_t i = 0; i < e1.size(); ++i) closed = std::max(closed, std::abs(e1[i] - e2[i]));
  }
  out.push_back(upper("two-level closed form", closed, 1e-12));

  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 40; ++k) {
    const auto* a = k % 2 ? &ho : &sw;
    const double q = rng.uniform(0.0, 2.0) * std::sqrt(a->mass);
    const double alpha = rng.uniform(-1.0, 2.0);
    const double omega = rng.uniform(0.1, 10.0);
    const auto ref = observables::build_reference(*a, model(*a, alpha, omega, q, 8, 24));
    worst = std::min(worst, observables::ground_energy_truncated(*a, 2, ref) - ref.ground_energy());
  }
  out.push_back({"variational bound (min E_g2 - E_g)", worst, -1e-10, worst >= -1e-10});

  // Gauge invariance of converged references, lowest five levels.
  observables::ReferenceOptions opts;
  opts.watched_levels = 5;
  double spread = 0.0;
  std::vector<std::vector<double>> levels;
  for (double alpha : {0.0, 0.5, 1.0}) {
    const auto ref = observables::converge_reference(ho, model(ho, alpha, 1.0, kCalibratedCoupling, 2, 2), opts);
    levels.emplace_back(ref.model.eigenvalues.begin(), ref.model.eigenvalues.begin() + 5);
  }
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t j = i + 1; j < levels.size(); ++j)
      for (std::size_t n = 0; n < 5; ++n)
        spread = std::max(spread, std::abs(levels[i][n] - levels[j][n]) / std::abs(levels[i][n]));
  out.push_back(upper("gauge invariance, harmonic (relative)", spread, 1e-3));
  return out;
}

std::vector<Check> otoc_checks(const atomic::AtomicSpectrum& sw, Rng& rng) {
  std::vector<Check> out;
  const auto p = model(sw, 0.4, 1.0, 1.5, 2, 2);
  const HermitianMatrix h = assemble(sw, p);
  const auto eig = numerics::eigh(h);
  const auto number = observables::photon_number_diagonal(2, 2);
  ComplexMatrix n_op(4, 4);
  for (std::size_t i = 0; i < 4; ++i) n_op(i, i) = number[i];
  const auto psi = eig.vector(0);

  std::vector<double> times(10);
  for (auto& t : times) t = rng.uniform(0.0, 20.0);
  const auto series = observables::otoc(psi, eig, number, times, false);
  double diff = 0.0, iso = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    // exp(i H t) from the 4 x 4 Taylor series with scaling and squaring
    const double t = times[k];
    int squarings = 0;
    while (max_abs(h.matrix()) * 4.0 * t / std::pow(2.0, squarings) > 0.25) ++squarings;
    ComplexMatrix a = h.matrix();
    for (auto& z : a.data()) z *= cplx(0.0, t / std::pow(2.0, squarings));
    ComplexMatrix sum = ComplexMatrix::identity(4), term = ComplexMatrix::identity(4);
    for (int j = 1; j <= 30; ++j) {
      term = matmul(term, a);
      for (auto& z : term.data()) z /= static_cast<double>(j);
      for (std::size_t i = 0; i < 16; ++i) sum.data()[i] += term.data()[i];
    }
    for (int s = 0; s < squarings; ++s) sum = matmul(sum, sum);
    const auto w = matmul(matmul(sum, n_op), adjoint(sum));
    const auto op = matmul(matmul(w, n_op), matmul(w, n_op));
    diff = std::max(diff, std::abs(inner(psi, matvec(op, psi)) - series.values[k]));
    if (k < 5) {
      const auto wv = numerics::eigvalsh(HermitianMatrix(w, 1e-9));
      auto nv = number;
      std::sort(nv.begin(), nv.end());
      for (std::size_t i = 0; i < 4; ++i) iso = std::max(iso, std::abs(wv[i] - nv[i]));
    }
  }
  out.push_back(upper("OTOC spectral vs brute force", diff, 1e-12));
  out.push_back(upper("W(t) isospectral with n", iso, 1e-9));
  return out;
}

}  // namespace

CommandResult cmd_selftest(const ExperimentConfig& config) {
  Rng rng(config.seed);
  const atomic::SquareWell well{1.0};
  const auto sw = atomic::solve_atomic(well, atomic::fix_mass_for_unit_gap(well), 50);
  const auto ho = atomic::solve_atomic(atomic::Harmonic{1.0}, 1.0, 50);

  std::vector<Check> checks = numerics_checks(rng);
  for (auto&& group : {atomic_checks(sw, ho), model_checks(sw, ho, rng), otoc_checks(sw, rng)})
    checks.insert(checks.end(), group.begin(), group.end());

  CommandResult out;
  CsvWriter w({"check", "value", "tolerance", "pass"});
  std::string text;
  std::size_t failed = 0;
  for (const auto& c : checks) {
    w.row(c.name, c.value, c.tolerance, c.pass ? 1 : 0);
    text += (c.pass ? "PASS " : "FAIL ") + c.name + ": " + format_number(c.value) + " (tolerance " +
            format_number(c.tolerance) + ")\n";
    failed += c.pass ? 0 : 1;
  }
  out.files = {{"selftest.csv", w.str()}};
  out.summary = {{"checks", checks.size()}, {"failed", failed}};
  out.stdout_text = text;
  out.status = failed ? kFailure : kOk;
  return out;
}

}  // namespace rabigauge::cli
