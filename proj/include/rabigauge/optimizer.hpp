#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rabigauge/atomic.hpp"
#include "rabigauge/hamiltonian.hpp"
#include "rabigauge/numerics.hpp"
#include "rabigauge/observables.hpp"

namespace rabigauge::optimizer {

enum class Metric { delta_Eg, spectrum_error, otoc_mean_error };

// "delta_Eg", "spectrum_error(3)", "otoc_mean_error"
std::string metric_name(Metric metric, std::size_t level = 0);

struct ScanContext {
  double omega = 1.0;
  Coupling coupling;
  std::string potential;
};

struct ScanOptions {
  double alpha_lo = -1.0;
  double alpha_hi = 2.0;
  std::size_t grid_points = 61;
  double tol = 1e-4;  // golden-section bracket width
  observables::ReferenceOptions reference = default_reference();
  std::size_t workers = 1;

  static observables::ReferenceOptions default_reference();
};

struct OtocOptions {
  double T = 50.0;
  double dt = 0.05;
  observables::OtocDynamics dynamics = observables::OtocDynamics::two_level;
  bool normalize = true;
};

// One evaluated alpha; the reference data is absent when convergence failed.
struct Sample {
  double alpha = 0.0;
  double metric = 0.0;  // NaN when excluded
  std::size_t d_ref = 0;
  std::size_t n_ref = 0;
  double ground_energy = 0.0;
  std::string failure;
};

struct GaugeScanResult {
  Metric metric = Metric::delta_Eg;
  std::size_t level = 0;
  numerics::ScanResult1D scan;
  double alpha_opt = 0.0;
  double metric_opt = 0.0;
  ScanContext context;
  std::vector<Sample> samples;  // grid samples, ascending alpha
  std::vector<std::string> warnings;

  std::string name() const { return metric_name(metric, level); }
  // Largest reference cutoffs used on the grid.
  std::size_t max_d_ref() const;
  std::size_t max_n_ref() const;
};

/// Runs fn(0) ... fn(count - 1) on up to `workers` threads. Each index is
/// processed exactly once; the first exception is rethrown after all
/// threads have joined.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Model parameters at the given alpha with cutoffs left to the reference search.
ModelParams physical_params(const atomic::AtomicSpectrum& atomic, double alpha, double omega, const Coupling& coupling);

/// Minimizes delta_Eg over alpha. Each alpha gets a freshly converged
/// reference (ground level watched). A grid alpha whose reference fails to
/// converge is excluded and reported in `warnings`. The reference ground
/// energies of the grid are checked for gauge invariance (relative spread
/// <= 1e-3); a larger spread is reported as a warning.
GaugeScanResult optimal_static_gauge(const atomic::AtomicSpectrum& atomic, double omega, const Coupling& coupling,
                                     const ScanOptions& options = {}, const std::string& potential = "");

/// alpha_o(n) for n = 0 .. n_max from minimizing spectrum_error(n). The grid
/// is evaluated once for all levels (references watch levels 0..n_max);
/// each level is then refined separately.
std::vector<GaugeScanResult> optimal_gauge_per_level(const atomic::AtomicSpectrum& atomic, double omega,
                                                     const Coupling& coupling, std::size_t n_max = 10,
                                                     const ScanOptions& options = {},
                                                     const std::string& potential = "");

struct RidgePoint {
  double omega = 0.0;
  double alpha_opt = 0.0;  // NaN when the whole column failed
  double metric = 0.0;     // delta_Eg at alpha_opt
};

struct SweepGrid2D {
  std::vector<double> alphas;
  std::vector<double> omegas;
  std::vector<std::vector<double>> values;  // values[omega][alpha] = log10(max(delta_Eg, 1e-16)); NaN = failed
  std::vector<RidgePoint> ridge;
  std::vector<std::string> warnings;
  std::size_t failed_cells = 0;
  std::size_t max_d_ref = 0;  // over converged cells
  std::size_t max_n_ref = 0;
};

inline constexpr double kLogFloor = 1e-16;

// Requires ascending grids of >= 16 points each.
SweepGrid2D sweep2d(const atomic::AtomicSpectrum& atomic, const std::vector<double>& alphas,
                    const std::vector<double>& omegas, const Coupling& coupling, const ScanOptions& options = {});

// OTOC pair at a single alpha with a converged reference carrying vectors.
struct OtocEvaluation {
  observables::OtocPair pair;
  double mean_error = 0.0;
  std::size_t d_ref = 0;
  std::size_t n_ref = 0;
};

OtocEvaluation otoc_at(const atomic::AtomicSpectrum& atomic, double alpha, double omega, const Coupling& coupling,
                       const OtocOptions& otoc, const observables::ReferenceOptions& reference);

/// Minimizes the mean OTOC error over alpha. References watch the lowest
/// `otoc_watched_levels` levels.
GaugeScanResult optimal_dynamical_gauge(const atomic::AtomicSpectrum& atomic, double omega, const Coupling& coupling,
                                        const OtocOptions& otoc = {}, const ScanOptions& options = {},
                                        const std::string& potential = "");

inline constexpr std::size_t otoc_watched_levels = 5;

struct CalibrationOptions {
  double target = 0.847;
  double window = 0.02;
  double omega = 1.0;
  // q range; defaults to [0.1 sqrt(m), 10 sqrt(m)] of the calibration spectrum.
  std::optional<double> q_lo;
  std::optional<double> q_hi;
  std::size_t q_points = 9;  // log-spaced coarse scan
  std::size_t max_bisections = 12;
  double v = 1.0;
  double eps0 = 1.0;
  ScanOptions scan;
  bool out_of_sample = true;
  OtocOptions otoc;
};

struct CalibrationPoint {
  double q = 0.0;
  double alpha_opt = 0.0;  // NaN when the static scan had no valid sample
  bool boundary = false;
  std::size_t d_ref = 0;  // largest reference cutoffs of the scan
  std::size_t n_ref = 0;
};

struct OutOfSample {
  std::string label;
  double computed = 0.0;
  double expected = 0.0;
  bool boundary = false;
  std::size_t d_ref = 0;
  std::size_t n_ref = 0;
};

struct CalibrationResult {
  double q_cal = 0.0;
  double alpha_opt = 0.0;
  bool reached = false;  // |alpha_opt - target| <= window
  std::vector<CalibrationPoint> history;  // every evaluated q, in evaluation order
  std::vector<OutOfSample> out_of_sample;
  std::vector<std::string> warnings;
};

/// Finds q such that the square-well alpha_o at options.omega lies within
/// options.window of options.target: a log-spaced scan over the q range,
/// then bisection in log q on the first bracketing pair. Without a bracket
/// the closest achievable alpha_o and its q are returned with reached =
/// false. With out_of_sample set, the oscillator static gauge and both
/// dynamical gauges are evaluated at q_cal next to their expected values.
CalibrationResult calibrate_coupling(const atomic::AtomicSpectrum& square_well,
                                     const atomic::AtomicSpectrum& oscillator,
                                     const CalibrationOptions& options = {});

}  // namespace rabigauge::optimizer
