#include "rabigauge/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "rabigauge/errors.hpp"

namespace rabigauge::optimizer {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return out;
}

void check_scan(const ScanOptions& o) {
  if (!(o.alpha_lo < o.alpha_hi)) throw std::invalid_argument("alpha range must satisfy lo < hi");
  if (o.grid_points < 8) throw std::invalid_argument("alpha grid needs at least 8 points");
  if (!(o.tol > 0.0)) throw std::invalid_argument("scan tol must be > 0");
}

std::string format_alpha(double alpha) {
  std::ostringstream os;
  os.precision(12);
  os << alpha;
  return os.str();
}

// Converged reference for one alpha; nullopt (with the reason) when the caps are hit.
struct Attempt {
  std::optional<observables::ConvergedReference> reference;
  std::string failure;
};

Attempt converge(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                 const observables::ReferenceOptions& options) {
  Attempt a;
  try {
    a.reference = observables::converge_reference(atomic, params, options);
  } catch (const ConvergenceError& e) {
    a.failure = e.what();
  }
  return a;
}

Sample sample_from(double alpha, const Attempt& a) {
  Sample s;
  s.alpha = alpha;
  s.metric = kNaN;
  if (a.reference) {
    s.d_ref = a.reference->d_ref();
    s.n_ref = a.reference->n_ref();
    s.ground_energy = a.reference->ground_energy();
  } else {
    s.failure = a.failure;
  }
  return s;
}

void require_some_valid(const std::vector<Sample>& samples, const std::string& what) {
  for (const auto& s : samples)
    if (std::isfinite(s.metric)) return;
  std::string why = samples.empty() ? std::string("no samples") : samples.front().failure;
  throw ConvergenceError(what + ": no alpha on the grid produced a converged reference (" + why + ")",
                         std::numeric_limits<double>::infinity());
}

void note_failures(const std::vector<Sample>& samples, std::vector<std::string>& warnings) {
  for (const auto& s : samples)
    if (!s.failure.empty()) warnings.push_back("alpha = " + format_alpha(s.alpha) + " excluded: " + s.failure);
}

// Relative spread of the converged ground energies; gauge invariance of the untruncated model.
void check_ground_spread(const std::vector<Sample>& samples, std::vector<std::string>& warnings) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : samples) {
    if (!s.failure.empty()) continue;
    lo = std::min(lo, s.ground_energy);
    hi = std::max(hi, s.ground_energy);
  }
  if (!(hi >= lo)) return;
  const double spread = (hi - lo) / std::max(std::abs(lo), std::abs(hi));
  if (spread > 1e-3) {
    std::ostringstream os;
    os << "reference ground energies vary by " << spread << " (relative) across alpha; gauge invariance is not met";
    warnings.push_back(os.str());
  }
}

GaugeScanResult finish_scan(Metric metric, std::size_t level, const ScanContext& context, std::vector<Sample> samples,
                            const std::function<double(double)>& refine, double tol,
                            std::vector<std::string> warnings) {
  std::vector<double> grid, values;
  for (const auto& s : samples) {
    grid.push_back(s.alpha);
    values.push_back(s.metric);
  }
  GaugeScanResult r;
  r.metric = metric;
  r.level = level;
  r.context = context;
  r.scan = numerics::refine_scan(refine, std::move(grid), std::move(values), tol);
  r.alpha_opt = r.scan.argmin;
  r.metric_opt = r.scan.min_value;
  r.samples = std::move(samples);
  r.warnings = std::move(warnings);
  if (r.scan.boundary_minimum)
    r.warnings.push_back(r.name() + ": minimum on the edge of the alpha range (alpha = " + format_alpha(r.alpha_opt) +
                         ")");
  if (r.scan.degenerate) r.warnings.push_back(r.name() + ": metric is constant over the alpha range");
  return r;
}

}  // namespace

std::string metric_name(Metric metric, std::size_t level) {
  switch (metric) {
    case Metric::delta_Eg:
      return "delta_Eg";
    case Metric::spectrum_error:
      return "spectrum_error(" + std::to_string(level) + ")";
    case Metric::otoc_mean_error:
      return "otoc_mean_error";
  }
  return "unknown";
}

observables::ReferenceOptions ScanOptions::default_reference() {
  observables::ReferenceOptions r;
  r.d_cap = 128;
  r.watched_levels = 1;
  return r;
}

std::size_t GaugeScanResult::max_d_ref() const {
  std::size_t m = 0;
  for (const auto& s : samples) m = std::max(m, s.d_ref);
  return m;
}

std::size_t GaugeScanResult::max_n_ref() const {
  std::size_t m = 0;
  for (const auto& s : samples) m = std::max(m, s.n_ref);
  return m;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ModelParams physical_params(const atomic::AtomicSpectrum& atomic, double alpha, double omega, const Coupling& coupling) {
  ModelParams p;
  p.alpha = alpha;
  p.omega = omega;
  p.coupling = coupling;
  p.mass = atomic.mass;
  p.validate();
  return p;
}

GaugeScanResult optimal_static_gauge(const atomic::AtomicSpectrum& atomic, double omega, const Coupling& coupling,
                                     const ScanOptions& options, const std::string& potential) {
  check_scan(options);
  auto evaluate = [&](double alpha) {
    const Attempt a = converge(atomic, physical_params(atomic, alpha, omega, coupling), options.reference);
    Sample s = sample_from(alpha, a);
    if (a.reference) s.metric = observables::delta_Eg(atomic, *a.reference);
    return s;
  };
  const auto alphas = linspace(options.alpha_lo, options.alpha_hi, options.grid_points);
  std::vector<Sample> samples(alphas.size());
  parallel_for(alphas.size(), options.workers, [&](std::size_t i) { samples[i] = evaluate(alphas[i]); });
  require_some_valid(samples, "optimal_static_gauge");

  std::vector<std::string> warnings;
  note_failures(samples, warnings);
  check_ground_spread(samples, warnings);
  return finish_scan(Metric::delta_Eg, 0, {omega, coupling, potential}, std::move(samples),
                     [&](double alpha) { return evaluate(alpha).metric; }, options.tol, std::move(warnings));
}

std::vector<GaugeScanResult> optimal_gauge_per_level(const atomic::AtomicSpectrum& atomic, double omega,
                                                     const Coupling& coupling, std::size_t n_max,
                                                     const ScanOptions& options, const std::string& potential) {
  check_scan(options);
  auto reference = options.reference;
  reference.watched_levels = std::max(reference.watched_levels, n_max + 1);

  struct LevelSample {
    Sample base;
    std::vector<double> errors;
    std::vector<std::string> crossings;
  };
  auto evaluate = [&](double alpha) {
    LevelSample out;
    const Attempt a = converge(atomic, physical_params(atomic, alpha, omega, coupling), reference);
    out.base = sample_from(alpha, a);
    out.errors.assign(n_max + 1, kNaN);
    if (!a.reference) return out;
    const auto two = observables::two_level_spectrum(atomic, *a.reference);
    const auto& full = a.reference->model.eigenvalues;
    for (std::size_t n = 0; n <= n_max; ++n) {
      out.errors[n] = observables::spectrum_error(two, *a.reference, n);
      for (const auto* spec : {&two, &full}) {
        const bool below = n > 0 && std::abs((*spec)[n] - (*spec)[n - 1]) < 1e-8;
        const bool above = n + 1 < spec->size() && std::abs((*spec)[n + 1] - (*spec)[n]) < 1e-8;
        if (below || above) {
          out.crossings.push_back("level " + std::to_string(n) + " at alpha = " + format_alpha(alpha) +
                                  ": near-degenerate levels (gap < 1e-8), level matching is ambiguous");
          break;
        }
      }
    }
    return out;
  };

  const auto alphas = linspace(options.alpha_lo, options.alpha_hi, options.grid_points);
  std::vector<LevelSample> grid(alphas.size());
  parallel_for(alphas.size(), options.workers, [&](std::size_t i) { grid[i] = evaluate(alphas[i]); });

  std::vector<Sample> bases;
  for (const auto& g : grid) bases.push_back(g.base);
  std::vector<std::string> shared;
  note_failures(bases, shared);
  check_ground_spread(bases, shared);

  std::vector<GaugeScanResult> results;
  for (std::size_t n = 0; n <= n_max; ++n) {
    std::vector<Sample> samples;
    std::vector<std::string> warnings = shared;
    for (const auto& g : grid) {
      Sample s = g.base;
      s.metric = g.errors[n];
      samples.push_back(s);
      for (const auto& c : g.crossings)
        if (c.rfind("level " + std::to_string(n) + " ", 0) == 0) warnings.push_back(c);
    }
    require_some_valid(samples, "optimal_gauge_per_level");
    auto refine = [&, n](double alpha) {
      const auto r = evaluate(alpha);
      return r.errors[n];
    };
    results.push_back(finish_scan(Metric::spectrum_error, n, {omega, coupling, potential}, std::move(samples), refine,
                                  options.tol, std::move(warnings)));
  }
  return results;
}

SweepGrid2D sweep2d(const atomic::AtomicSpectrum& atomic, const std::vector<double>& alphas,
                    const std::vector<double>& omegas, const Coupling& coupling, const ScanOptions& options) {
  auto ascending = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1])) return false;
    return true;
  };
  if (alphas.size() < 16 || omegas.size() < 16) throw std::invalid_argument("sweep2d: grids need >= 16 points each");
  if (!ascending(alphas) || !ascending(omegas)) throw std::invalid_argument("sweep2d: grids must be ascending");
  for (double w : omegas)
    if (!(w > 0.0)) throw std::invalid_argument("sweep2d: omega grid must be positive");

  SweepGrid2D out;
  out.alphas = alphas;
  out.omegas = omegas;
  const std::size_t na = alphas.size();
  std::vector<double> raw(na * omegas.size(), kNaN);
  std::vector<std::string> failures(raw.size());
  std::vector<std::pair<std::size_t, std::size_t>> cutoffs(raw.size());
  parallel_for(raw.size(), options.workers, [&](std::size_t cell) {
    const double w = omegas[cell / na];
    const double a = alphas[cell % na];
    const Attempt at = converge(atomic, physical_params(atomic, a, w, coupling), options.reference);
    if (at.reference) {
      raw[cell] = observables::delta_Eg(atomic, *at.reference);
      cutoffs[cell] = {at.reference->d_ref(), at.reference->n_ref()};
    } else
      failures[cell] = at.failure;
  });

  out.values.assign(omegas.size(), std::vector<double>(na, kNaN));
  for (std::size_t j = 0; j < omegas.size(); ++j) {
    RidgePoint rp{omegas[j], kNaN, kNaN};
    for (std::size_t i = 0; i < na; ++i) {
      const std::size_t cell = j * na + i;
      if (!failures[cell].empty()) {
        ++out.failed_cells;
        out.warnings.push_back("cell alpha = " + format_alpha(alphas[i]) + ", omega = " + format_alpha(omegas[j]) +
                               " excluded: " + failures[cell]);
        continue;
      }
      out.values[j][i] = std::log10(std::max(raw[cell], kLogFloor));
      out.max_d_ref = std::max(out.max_d_ref, cutoffs[cell].first);
      out.max_n_ref = std::max(out.max_n_ref, cutoffs[cell].second);
      if (!(raw[cell] >= rp.metric)) {
        rp.metric = raw[cell];
        rp.alpha_opt = alphas[i];
      }
    }
    out.ridge.push_back(rp);
  }
  return out;
}

OtocEvaluation otoc_at(const atomic::AtomicSpectrum& atomic, double alpha, double omega, const Coupling& coupling,
                       const OtocOptions& otoc, const observables::ReferenceOptions& reference) {
  auto opts = reference;
  opts.vectors = true;
  const auto times = observables::time_grid(otoc.T, otoc.dt);
  const auto ref = observables::converge_reference(atomic, physical_params(atomic, alpha, omega, coupling), opts);
  OtocEvaluation e;
  e.pair = observables::otoc_pair(atomic, ref, times, otoc.dynamics, otoc.normalize);
  e.mean_error = observables::mean_error(e.pair.two_level, e.pair.accurate);
  e.d_ref = ref.d_ref();
  e.n_ref = ref.n_ref();
  return e;
}

GaugeScanResult optimal_dynamical_gauge(const atomic::AtomicSpectrum& atomic, double omega, const Coupling& coupling,
                                        const OtocOptions& otoc, const ScanOptions& options,
                                        const std::string& potential) {
  check_scan(options);
  auto reference = options.reference;
  reference.watched_levels = std::max(reference.watched_levels, otoc_watched_levels);
  const auto times = observables::time_grid(otoc.T, otoc.dt);
  auto evaluate = [&](double alpha) {
    auto opts = reference;
    opts.vectors = true;
    const Attempt a = converge(atomic, physical_params(atomic, alpha, omega, coupling), opts);
    Sample s = sample_from(alpha, a);
    if (a.reference) {
      const auto pair = observables::otoc_pair(atomic, *a.reference, times, otoc.dynamics, otoc.normalize);
      s.metric = observables::mean_error(pair.two_level, pair.accurate);
    }
    return s;
  };
  const auto alphas = linspace(options.alpha_lo, options.alpha_hi, options.grid_points);
  std::vector<Sample> samples(alphas.size());
  parallel_for(alphas.size(), options.workers, [&](std::size_t i) { samples[i] = evaluate(alphas[i]); });
  require_some_valid(samples, "optimal_dynamical_gauge");

  std::vector<std::string> warnings;
  note_failures(samples, warnings);
  check_ground_spread(samples, warnings);
  return finish_scan(Metric::otoc_mean_error, 0, {omega, coupling, potential}, std::move(samples),
                     [&](double alpha) { return evaluate(alpha).metric; }, options.tol, std::move(warnings));
}

CalibrationResult calibrate_coupling(const atomic::AtomicSpectrum& square_well,
                                     const atomic::AtomicSpectrum& oscillator, const CalibrationOptions& options) {
  const double root_m = std::sqrt(square_well.mass);
  const double q_lo = options.q_lo.value_or(0.1 * root_m);
  const double q_hi = options.q_hi.value_or(10.0 * root_m);
  if (!(q_lo > 0.0 && q_lo < q_hi)) throw std::invalid_argument("calibrate: q range must satisfy 0 < lo < hi");
  if (options.q_points < 2) throw std::invalid_argument("calibrate: need at least 2 q points");

  CalibrationResult out;
  auto coupling_at = [&](double q) { return Coupling{q, options.v, options.eps0}; };
  auto alpha_at = [&](double q) {
    CalibrationPoint p{q, kNaN, false};
    try {
      const auto r = optimal_static_gauge(square_well, options.omega, coupling_at(q), options.scan, "square_well");
      p.alpha_opt = r.alpha_opt;
      p.boundary = r.scan.boundary_minimum;
      p.d_ref = r.max_d_ref();
      p.n_ref = r.max_n_ref();
    } catch (const ConvergenceError& e) {
      out.warnings.push_back("q = " + format_alpha(q) + ": " + e.what());
    }
    out.history.push_back(p);
    return p;
  };

  auto miss = [&](const CalibrationPoint& p) {
    return std::isfinite(p.alpha_opt) ? std::abs(p.alpha_opt - options.target) : std::numeric_limits<double>::infinity();
  };
  auto straddles = [&](const CalibrationPoint& a, const CalibrationPoint& b) {
    return std::isfinite(a.alpha_opt) && std::isfinite(b.alpha_opt) &&
           (a.alpha_opt - options.target) * (b.alpha_opt - options.target) <= 0.0;
  };

  // Ascending in q. Stops at the first bracket, or once alpha_o has moved
  // away from the target on two consecutive steps while outside the window;
  // strong couplings are by far the most expensive to converge.
  std::vector<CalibrationPoint> coarse;
  const double llo = std::log(q_lo), lhi = std::log(q_hi);
  for (std::size_t k = 0; k < options.q_points; ++k) {
    coarse.push_back(alpha_at(std::exp(llo + (lhi - llo) * static_cast<double>(k) / (options.q_points - 1))));
    const std::size_t n = coarse.size();
    if (n >= 2 && straddles(coarse[n - 2], coarse[n - 1])) break;
    if (n >= 3 && miss(coarse[n - 1]) > miss(coarse[n - 2]) && miss(coarse[n - 2]) > miss(coarse[n - 3]) &&
        miss(coarse[n - 1]) > options.window && k + 1 < options.q_points) {
      out.warnings.push_back("q scan stopped at q = " + format_alpha(coarse.back().q) +
                             ": alpha_o moves away from the target with increasing q");
      break;
    }
  }

  auto closer = [&](const CalibrationPoint& a, const CalibrationPoint& b) {
    if (!std::isfinite(b.alpha_opt)) return true;
    if (!std::isfinite(a.alpha_opt)) return false;
    return std::abs(a.alpha_opt - options.target) < std::abs(b.alpha_opt - options.target);
  };

  // First adjacent pair whose alpha_o straddles the target.
  std::optional<std::pair<CalibrationPoint, CalibrationPoint>> bracket;
  for (std::size_t k = 0; k + 1 < coarse.size() && !bracket; ++k)
    if (straddles(coarse[k], coarse[k + 1])) bracket = std::make_pair(coarse[k], coarse[k + 1]);

  CalibrationPoint best{q_lo, kNaN, false};
  for (const auto& p : coarse)
    if (closer(p, best)) best = p;

  if (bracket) {
    auto [a, b] = *bracket;
    for (std::size_t it = 0; it < options.max_bisections; ++it) {
      if (closer(a, best)) best = a;
      if (closer(b, best)) best = b;
      if (std::abs(best.alpha_opt - options.target) <= 0.25 * options.window) break;
      const auto m = alpha_at(std::sqrt(a.q * b.q));
      if (closer(m, best)) best = m;
      if (!std::isfinite(m.alpha_opt)) break;
      if ((a.alpha_opt - options.target) * (m.alpha_opt - options.target) <= 0.0)
        b = m;
      else
        a = m;
    }
  } else {
    out.warnings.push_back("target alpha_o is not bracketed on the q range; reporting the closest match");
  }

  out.q_cal = best.q;
  out.alpha_opt = best.alpha_opt;
  out.reached = std::isfinite(best.alpha_opt) && std::abs(best.alpha_opt - options.target) <= options.window;
  if (!std::isfinite(best.alpha_opt)) throw ConvergenceError("calibrate: no q in range gave a valid scan", kNaN);

  if (options.out_of_sample) {
    const Coupling c = coupling_at(out.q_cal);
    const auto osc = optimal_static_gauge(oscillator, options.omega, c, options.scan, "harmonic");
    out.out_of_sample.push_back(
        {"static alpha_o, harmonic", osc.alpha_opt, 0.469, osc.scan.boundary_minimum, osc.max_d_ref(), osc.max_n_ref()});
    const auto dyn_sw = optimal_dynamical_gauge(square_well, options.omega, c, options.otoc, options.scan, "square_well");
    out.out_of_sample.push_back(
        {"dynamical alpha_o, square well", dyn_sw.alpha_opt, 0.862, dyn_sw.scan.boundary_minimum, dyn_sw.max_d_ref(),
         dyn_sw.max_n_ref()});
    const auto dyn_osc = optimal_dynamical_gauge(oscillator, options.omega, c, options.otoc, options.scan, "harmonic");
    out.out_of_sample.push_back(
        {"dynamical alpha_o, harmonic", dyn_osc.alpha_opt, -0.374, dyn_osc.scan.boundary_minimum, dyn_osc.max_d_ref(),
         dyn_osc.max_n_ref()});
    for (const auto* r : {&osc, &dyn_sw, &dyn_osc})
      for (const auto& w : r->warnings) out.warnings.push_back(r->name() + " (" + r->context.potential + "): " + w);
  }
  return out;
}

}  // namespace rabigauge::optimizer
