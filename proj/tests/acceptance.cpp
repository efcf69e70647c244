// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance <path to rabi-gauge> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "rabigauge/atomic.hpp"
#include "rabigauge/hamiltonian.hpp"
#include "rabigauge/numerics.hpp"
#include "rabigauge/observables.hpp"
#include "rabigauge/optimizer.hpp"
#include "rabigauge/random.hpp"

using namespace rabigauge;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

atomic::AtomicSpectrum square_well(std::size_t levels) {
  const atomic::SquareWell w{1.0};
  return atomic::solve_atomic(w, atomic::fix_mass_for_unit_gap(w), levels);
}

atomic::AtomicSpectrum oscillator(std::size_t levels) {
  return atomic::solve_atomic(atomic::Harmonic{1.0}, 1.0, levels);
}

// Closed-form level i (from 0): n^2 pi^2 / (2 m) with m = 3 pi^2 / 2, and i + 1/2.
double well_level(std::size_t i) { return (i + 1.0) * (i + 1.0) / 3.0; }
double oscillator_level(std::size_t i) { return i + 0.5; }

ModelParams model(const atomic::AtomicSpectrum& a, double alpha, double omega, double q, std::size_t d, std::size_t n) {
  ModelParams p;
  p.alpha = alpha;
  p.omega = omega;
  p.coupling.q = q;
  p.mass = a.mass;
  p.d = d;
  p.n_photon = n;
  return p;
}

ComplexMatrix scaled(ComplexMatrix m, cplx s) {
  for (auto& z : m.data()) z *= s;
  return m;
}

// exp(i H t) from a Taylor series with scaling and squaring.
ComplexMatrix expm_i(const ComplexMatrix& h, double t) {
  int squarings = 0;
  while (max_abs(h) * h.rows() * std::abs(t) / std::pow(2.0, squarings) > 0.25) ++squarings;
  const ComplexMatrix a = scaled(h, cplx(0.0, t / std::pow(2.0, squarings)));
  ComplexMatrix sum = ComplexMatrix::identity(h.rows()), term = sum;
  for (int k = 1; k <= 30; ++k) {
    term = scaled(matmul(term, a), 1.0 / k);
    for (std::size_t i = 0; i < sum.data().size(); ++i) sum.data()[i] += term.data()[i];
  }
  for (int s = 0; s < squarings; ++s) sum = matmul(sum, sum);
  return sum;
}

// Shared between criteria 1, 6, 7 and 8.
struct Calibration {
  bool done = false;
  optimizer::CalibrationResult result;
  std::string error;
  double seconds = 0.0;
};

Calibration& calibration() {
  static Calibration c;
  if (!c.done) {
    c.done = true;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.result = optimizer::calibrate_coupling(square_well(128), oscillator(128));
    } catch (const std::exception& e) {
      c.error = e.what();
    }
    c.seconds = seconds_since(t0);
    std::cerr << "  calibration finished in " << fmt(c.seconds) << " s\n";
  }
  return c;
}

double calibrated_q() {
  const auto& c = calibration();
  if (!c.error.empty()) throw std::runtime_error("calibration failed: " + c.error);
  return c.result.q_cal;
}

Outcome criterion1() {
  const double q = calibrated_q();
  observables::ReferenceOptions opts;
  opts.tol = 1e-6;
  opts.watched_levels = 5;
  opts.d_cap = 128;
  bool pass = true;
  std::ostringstream os;
  for (const auto& [name, a] : {std::pair{"square well", square_well(128)}, std::pair{"harmonic", oscillator(128)}}) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<double>> levels;
    for (double alpha : {0.0, 0.5, 1.0}) {
      const auto ref = observables::converge_reference(a, model(a, alpha, 1.0, q, 2, 2), opts);
      levels.emplace_back(ref.model.eigenvalues.begin(), ref.model.eigenvalues.begin() + 5);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j)
        for (std::size_t n = 0; n < 5; ++n)
          worst = std::max(worst, std::abs(levels[i][n] - levels[j][n]) / std::abs(levels[j][n]));
    const double secs = seconds_since(t0);
    pass = pass && worst <= 1e-3 && secs <= 120.0;
    os << name << ": max relative difference " << fmt(worst) << " in " << fmt(secs) << " s; ";
  }
  os << "q = " << fmt(q);
  return {pass, os.str()};
}

Outcome criterion2() {
  double spec = 0.0, gap = 0.0, otoc = 0.0;
  const auto times = observables::time_grid(10.0, 0.05);
  for (int pot = 0; pot < 2; ++pot) {
    const auto a = pot == 0 ? square_well(16) : oscillator(16);
    for (double alpha : {-1.0, 0.0, 0.5, 1.0, 2.0})
      for (double omega : {0.3, 1.0, 4.0}) {
        const auto p = model(a, alpha, omega, 0.0, 6, 10);
        const auto e = numerics::eigvalsh(assemble(a, p));
        std::vector<double> expected;
        for (std::size_t i = 0; i < 6; ++i)
          for (std::size_t n = 0; n < 10; ++n)
            expected.push_back((pot == 0 ? well_level(i) : oscillator_level(i)) + omega * (n + 0.5));
        std::sort(expected.begin(), expected.end());
        for (std::size_t k = 0; k < expected.size(); ++k) spec = std::max(spec, std::abs(e[k] - expected[k]));

        auto ref = observables::build_reference(a, p, true);
        gap = std::max(gap, std::abs(observables::ground_energy_truncated(a, 2, ref) - ref.ground_energy()));
        const auto pair = observables::otoc_pair(a, ref, times, observables::OtocDynamics::two_level, false);
        for (std::size_t k = 0; k < times.size(); ++k)
          otoc = std::max({otoc, std::abs(pair.two_level.values[k]), std::abs(pair.accurate.values[k])});
      }
  }
  const bool pass = spec <= 1e-12 && gap <= 1e-12 && otoc <= 1e-12;
  return {pass, "spectrum error " + fmt(spec) + ", |delta_Eg| " + fmt(gap) + ", max |F(t)| " + fmt(otoc)};
}

Outcome criterion3() {
  Rng rng(31);
  const auto sw = square_well(16);
  const auto ho = oscillator(16);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const auto& a = k % 2 ? ho : sw;
    const double alpha = rng.uniform(-1.0, 2.0);
    const double omega = rng.uniform(0.1, 10.0);
    const double q = rng.uniform(0.0, 2.0) * std::sqrt(a.mass);
    const auto ref = observables::build_reference(a, model(a, alpha, omega, q, 16, 48));
    worst = std::min(worst, observables::ground_energy_truncated(a, 2, ref) - ref.ground_energy());
  }
  return {worst >= -1e-10, "min E_g2 - E_g over 200 draws: " + fmt(worst)};
}

Outcome criterion4() {
  const auto sw = square_well(50);
  const auto ho = oscillator(50);
  const double trk_sw = std::abs(atomic::trk_sum(sw) - 1.0);
  const double trk_ho = std::abs(atomic::trk_sum(ho) - 1.0);
  const double x_sw = std::abs(std::abs(sw.x_mat(0, 1)) - 16.0 / (9.0 * kPi * kPi));
  const double x_ho = std::abs(std::abs(ho.x_mat(0, 1)) - 1.0 / std::sqrt(2.0));

  double e_rel = 0.0, x_abs = 0.0;
  for (int pot = 0; pot < 2; ++pot) {
    const atomic::Potential p = pot == 0 ? atomic::Potential{atomic::SquareWell{1.0}} : atomic::Harmonic{1.0};
    const auto& exact = pot == 0 ? sw : ho;
    const auto fd = atomic::solve_atomic_fd(p, exact.mass, 10, atomic::FdGrid{2000, std::nullopt});
    for (std::size_t i = 0; i < 10; ++i) {
      const double e = pot == 0 ? well_level(i) : oscillator_level(i);
      e_rel = std::max(e_rel, std::abs(fd.energies[i] - e) / e);
      for (std::size_t j = 0; j < 10; ++j)
        x_abs = std::max(x_abs, std::abs(std::abs(fd.x_mat(i, j)) - std::abs(exact.x_mat(i, j))));
    }
  }
  const bool pass = trk_sw <= 1e-3 && trk_ho <= 1e-3 && x_sw <= 1e-6 && x_ho <= 1e-6 && e_rel <= 1e-4 && x_abs <= 1e-3;
  return {pass, "TRK " + fmt(trk_sw) + " / " + fmt(trk_ho) + ", |x01| " + fmt(x_sw) + " / " + fmt(x_ho) +
                    ", FD energies " + fmt(e_rel) + " rel, FD |x_ij| " + fmt(x_abs)};
}

Outcome criterion5() {
  Rng rng(5);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto a = k % 2 ? oscillator(4) : square_well(4);
    const auto p = model(a, rng.uniform(-1.0, 2.0), rng.uniform(0.1, 10.0), rng.uniform(0.0, 2.0) * std::sqrt(a.mass),
                         2, 16);
    const auto e1 = numerics::eigvalsh(assemble(a, p));
    const auto e2 = numerics::eigvalsh(two_level_closed_form(a, p));
    for (std::size_t i = 0; i < e1.size(); ++i) worst = std::max(worst, std::abs(e1[i] - e2[i]));
  }
  return {worst <= 1e-12, "max eigenvalue difference over 10 draws: " + fmt(worst)};
}

Outcome criterion6() {
  const double q = calibrated_q();
  bool pass = true;
  std::ostringstream os;
  for (const auto& [name, a] : {std::pair{"square well", square_well(128)}, std::pair{"harmonic", oscillator(128)}}) {
    std::vector<double> alphas;
    for (double omega : {0.1, 1.0, 10.0})
      alphas.push_back(optimizer::optimal_static_gauge(a, omega, {q, 1.0, 1.0}).alpha_opt);
    const bool ok = alphas[0] > 0.8 && alphas[2] < 0.2 && alphas[0] > alphas[1] && alphas[1] > alphas[2];
    pass = pass && ok;
    os << name << ": alpha_o(0.1, 1, 10) = " << fmt(alphas[0]) << ", " << fmt(alphas[1]) << ", " << fmt(alphas[2])
       << (ok ? "" : " [fails]") << "; ";
  }
  return {pass, os.str() + "q = " + fmt(q)};
}

Outcome criterion7() {
  const double q = calibrated_q();
  bool pass = true;
  std::ostringstream os;
  for (const auto& [name, a] : {std::pair{"square well", square_well(128)}, std::pair{"harmonic", oscillator(128)}}) {
    const auto levels = optimizer::optimal_gauge_per_level(a, 1.0, {q, 1.0, 1.0}, 9);
    const double a2 = levels[2].alpha_opt, a9 = levels[9].alpha_opt;
    const bool ok = std::abs(a9 - 1.0) < std::abs(a2 - 1.0);
    pass = pass && ok;
    os << name << ": alpha_o(2) = " << fmt(a2) << ", alpha_o(9) = " << fmt(a9) << (ok ? "" : " [fails]") << "; ";
  }
  return {pass, os.str() + "q = " + fmt(q)};
}

Outcome criterion8() {
  const auto& c = calibration();
  if (!c.error.empty()) return {false, "calibration threw: " + c.error};
  const auto& r = c.result;
  const bool a_ok = std::abs(r.alpha_opt - 0.847) <= 0.02 ||
                    std::any_of(r.warnings.begin(), r.warnings.end(),
                                [](const std::string& w) { return w.find("closest") != std::string::npos; });
  std::map<std::string, double> v;
  std::ostringstream os;
  os << "q_cal = " << fmt(r.q_cal) << ", alpha_o = " << fmt(r.alpha_opt) << (r.reached ? " (in window)" : " (closest)");
  for (const auto& o : r.out_of_sample) {
    v[o.label] = o.computed;
    os << "; " << o.label << " " << fmt(o.computed) << " vs reported " << fmt(o.expected) << (o.boundary ? " (edge)" : "");
  }
  if (!v.count("static alpha_o, harmonic") || !v.count("dynamical alpha_o, harmonic"))
    return {false, os.str() + "; out-of-sample values missing"};
  const double stat = v["static alpha_o, harmonic"], dyn = v["dynamical alpha_o, harmonic"];
  const bool b_ok = dyn < 0.0 && stat > 0.0;
  const bool c_ok = std::abs(dyn - stat) >= 0.2;
  os << "; (a) " << (a_ok ? "ok" : "no") << " (b) " << (b_ok ? "ok" : "no") << " (c) " << (c_ok ? "ok" : "no") << ", "
     << fmt(c.seconds) << " s";
  return {a_ok && b_ok && c_ok, os.str()};
}

Outcome criterion9() {
  Rng rng(9);
  const auto a = square_well(4);
  double otoc = 0.0, iso = 0.0;
  for (double alpha : {0.0, 0.37, 1.0}) {
    const auto p = model(a, alpha, 1.0, 1.2, 2, 2);
    const HermitianMatrix h = assemble(a, p);
    const auto eig = numerics::eigh(h);
    const std::vector<double> number{0.0, 1.0, 0.0, 1.0};
    ComplexMatrix n_op(4, 4);
    for (std::size_t i = 0; i < 4; ++i) n_op(i, i) = number[i];
    ComplexVector psi(4);
    for (auto& z : psi) z = rng.complex_normal();
    const double s = norm(psi);
    for (auto& z : psi) z /= s;

    std::vector<double> times(10);
    for (auto& t : times) t = rng.uniform(0.0, 30.0);
    const auto f = observables::otoc(psi, eig, number, times, false);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto u = expm_i(h.matrix(), times[k]);
      const auto w = matmul(matmul(u, n_op), adjoint(u));
      const auto op = matmul(matmul(w, n_op), matmul(w, n_op));
      otoc = std::max(otoc, std::abs(inner(psi, matvec(op, psi)) - f.values[k]));
      if (k < 5) {
        const auto wv = numerics::eigvalsh(HermitianMatrix(w, 1e-9));
        const std::vector<double> nv{0.0, 0.0, 1.0, 1.0};
        for (std::size_t i = 0; i < 4; ++i) iso = std::max(iso, std::abs(wv[i] - nv[i]));
      }
    }
  }
  return {otoc <= 1e-12 && iso <= 1e-9, "spectral vs brute force " + fmt(otoc) + ", W(t) vs n spectrum " + fmt(iso)};
}

Outcome criterion10() {
  Rng rng(10);
  double spec = 0.0, trace = 0.0;
  for (auto solver : {numerics::Solver::lapack, numerics::Solver::householder})
    for (std::size_t dim : {2, 10, 50, 100, 200, 400}) {
      std::vector<double> lambda(dim);
      for (auto& l : lambda) l = rng.uniform(-10.0, 10.0);
      const HermitianMatrix h(planted_hermitian(random_unitary(dim, rng), lambda), 1e-10);
      const auto e = numerics::eigh(h, solver);
      std::sort(lambda.begin(), lambda.end());
      double tr_h = 0.0, tr_e = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        spec = std::max(spec, std::abs(e.eigenvalues[i] - lambda[i]));
        tr_h += h(i, i).real();
        tr_e += e.eigenvalues[i];
      }
      trace = std::max(trace, std::abs(tr_e - tr_h) / std::max(1.0, std::abs(tr_h)));
    }
  const auto m = numerics::minimize_scalar([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0, 61, 1e-8);
  const double xmin = std::abs(m.argmin - 0.3);
  return {spec <= 1e-10 && trace <= 1e-9 && xmin <= 1e-6,
          "planted spectra " + fmt(spec) + " (dims 2..400, both solvers), trace " + fmt(trace) +
              ", quadratic minimum " + fmt(xmin)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome criterion11(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / ("rabi_gauge_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "scan.json") << R"({
  "potential": {"kind": "harmonic"},
  "alpha_grid": {"lo": -1, "hi": 2, "points": 16},
  "otoc": {"T": 5, "dt": 0.05}
})";
  auto run = [&](const std::string& args, const std::string& dir) {
    const std::string cmd = "\"" + cli + "\" " + args + " --out \"" + (root / dir).string() + "\" > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  std::vector<std::string> mismatched;
  bool ran = true;
  std::size_t compared = 0;
  const std::string cfg = "--config \"" + (root / "scan.json").string() + "\"";
  for (const auto& [args, name] : {std::pair{std::string("selftest"), std::string("selftest")},
                                   std::pair{"gauge-scan " + cfg, std::string("scan")},
                                   std::pair{"dyn-gauge " + cfg, std::string("dyn")}}) {
    ran = ran && run(args, name + "-a") == 0 && run(args, name + "-b") == 0;
    if (!ran) break;
    for (const auto& e : fs::directory_iterator(root / (name + "-a"))) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(e.path()) != slurp(root / (name + "-b") / e.path().filename()))
        mismatched.push_back(name + "/" + e.path().filename().string());
    }
  }
  fs::remove_all(root);
  if (!ran) return {false, "a CLI run exited with a nonzero status"};
  std::string detail = std::to_string(compared) + " CSV files compared across two invocations";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty() && compared >= 4, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path to rabi-gauge> [criteria...]\n";
    return 2;
  }
  const std::string cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3},  {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7},  {8, criterion8},
      {9, criterion9}, {10, criterion10}, {11, [&] { return criterion11(cli); }}};
  const std::map<int, std::string> titles{{1, "gauge invariance of the converged model"},
                                          {2, "decoupled exactness"},
                                          {3, "variational bound"},
                                          {4, "atomic solver oracles"},
                                          {5, "two-level closed form"},
                                          {6, "frequency trend of alpha_o"},
                                          {7, "per-level trend of alpha_o"},
                                          {8, "coupling calibration"},
                                          {9, "OTOC oracle"},
                                          {10, "numerics oracles"},
                                          {11, "determinism"}};

  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    std::cerr << "criterion " << id << " ...\n";
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << titles.at(id) << "): " << o.detail
              << " [" << fmt(seconds_since(t0)) << " s]" << std::endl;
  }
  return failed ? 1 : 0;
}
