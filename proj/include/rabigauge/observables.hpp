#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rabigauge/atomic.hpp"
#include "rabigauge/hamiltonian.hpp"
#include "rabigauge/numerics.hpp"

namespace rabigauge::observables {

struct ReferenceOptions {
  double tol = 1e-6;  // absolute change of the watched eigenvalues per doubling
  std::size_t d_start = 8;
  std::size_t n_start = 16;
  std::size_t d_cap = 64;
  std::size_t n_cap = 512;
  std::size_t max_dim = 4096;  // memory guard on d * N
  std::size_t watched_levels = 10;
  bool vectors = false;
  PhotonPhase phase = PhotonPhase::real;
};

struct ConvergenceStep {
  std::size_t d = 0;
  std::size_t n_photon = 0;
  double delta = 0.0;  // vs the previous step; NaN for the first
};

struct Sector {
  std::vector<std::size_t> indices;  // ascending flat basis indices
  HermitianMatrix hamiltonian;
  numerics::EigenDecomposition decomposition;
};

/// H^alpha_{d,N} diagonalized sector by sector (see parity_sectors).
struct DiagonalizedModel {
  struct Level {
    std::size_t sector = 0;
    std::size_t index = 0;
  };

  ModelParams params;
  PhotonPhase phase = PhotonPhase::real;
  std::vector<Sector> sectors;
  std::vector<double> eigenvalues;  // all sectors, ascending

  std::size_t dim() const noexcept { return params.d * params.n_photon; }
  bool has_vectors() const noexcept;
  // Lowest level; exact ties go to the first sector.
  Level ground() const;
  // Ground eigenvector in the flat basis.
  ComplexVector ground_state() const;
  cplx expectation(std::span<const cplx> psi) const;
};

DiagonalizedModel diagonalize(const atomic::AtomicSpectrum& atomic, const ModelParams& params, bool vectors,
                              PhotonPhase phase = PhotonPhase::real);

// Near-exact model at cutoffs (d_ref, N_ref).
struct ConvergedReference {
  DiagonalizedModel model;
  std::vector<ConvergenceStep> report;

  const ModelParams& params() const noexcept { return model.params; }
  std::size_t d_ref() const noexcept { return model.params.d; }
  std::size_t n_ref() const noexcept { return model.params.n_photon; }
  double ground_energy() const { return model.eigenvalues.at(0); }
};

/// Doubles N, then d, alternately from (d_start, n_start). A dimension whose
/// latest doubling moved the watched eigenvalues by <= tol is frozen; the
/// search ends once both are frozen. Throws ConvergenceError at the caps.
ConvergedReference converge_reference(const atomic::AtomicSpectrum& atomic, const ModelParams& model,
                                      const ReferenceOptions& options = {});

// Reference at fixed cutoffs model.d, model.n_photon.
ConvergedReference build_reference(const atomic::AtomicSpectrum& atomic, const ModelParams& model, bool vectors = false,
                                   PhotonPhase phase = PhotonPhase::real);

// Same alpha, omega, coupling and mass (cutoffs may differ).
bool same_physics(const ModelParams& a, const ModelParams& b) noexcept;

// Lowest eigenvector of H at (d, N_ref), embedded into the reference space.
// The truncated model shares the reference's physical parameters and phase.
ComplexVector truncated_ground_state(const atomic::AtomicSpectrum& atomic, std::size_t d,
                                     const ConvergedReference& reference);

// <psi_d | H_ref | psi_d> for the ground vector psi_d of H^alpha_{d, N_ref}.
double ground_energy_truncated(const atomic::AtomicSpectrum& atomic, std::size_t d,
                               const ConvergedReference& reference);
// Uses params.d; throws std::invalid_argument unless same_physics(params, reference.params()).
double ground_energy_truncated(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                               const ConvergedReference& reference);

// E_{g,2} - E_{g,ref}; throws NumericalError below -1e-10, clamps tiny negatives to 0.
double delta_Eg(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference);

// Ascending eigenvalues of H^alpha_{2, N_ref}.
std::vector<double> two_level_spectrum(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference);

// |E_{n,2} - E_{n,ref}| by ascending index; n < 2 N_ref.
double spectrum_error(std::span<const double> two_level, const ConvergedReference& reference, std::size_t level);
double spectrum_error(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference, std::size_t level);

struct OtocSeries {
  std::vector<double> times;
  std::vector<cplx> values;
  bool normalized = false;
  cplx normalization = 0.0;  // raw F(0)
};

// 0, dt, ..., T; requires T/dt integral (to 1e-9) and <= 1e5 steps.
std::vector<double> time_grid(double T, double dt);

// Diagonal of 1 (x) b^dag b in the flat basis i * N + n.
std::vector<double> photon_number_diagonal(std::size_t d, std::size_t n_photon);

/// F(t) = <psi| W(t) n W(t) n |psi> with W(t) = exp(iHt) n exp(-iHt), from the
/// spectral factorization of H. `number` is the diagonal of n in the same basis.
/// Divides by F(0) when normalize is set and |F(0)| > 1e-12.
OtocSeries otoc(std::span<const cplx> state, const numerics::EigenDecomposition& dynamics,
                std::span<const double> number, std::span<const double> times, bool normalize = true);

// Same for the k-th eigenvector of H; cheaper.
OtocSeries otoc_eigenstate(std::size_t k, const numerics::EigenDecomposition& dynamics,
                           std::span<const double> number, std::span<const double> times, bool normalize = true);

// Flat-basis state under a sectored model, with n = 1 (x) b^dag b.
OtocSeries otoc(std::span<const cplx> state, const DiagonalizedModel& dynamics, std::span<const double> times,
                bool normalize = true);
// Ground state of the model under its own dynamics.
OtocSeries otoc_ground(const DiagonalizedModel& dynamics, std::span<const double> times, bool normalize = true);

enum class OtocDynamics { two_level, full };

struct OtocPair {
  OtocSeries two_level;
  OtocSeries accurate;
};

/// two_level: ground state of H^alpha_{2, N_ref}, evolved under that same
/// Hamiltonian (or under the reference with OtocDynamics::full).
/// accurate: reference ground state under the reference. Needs reference vectors.
OtocPair otoc_pair(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference,
                   std::span<const double> times, OtocDynamics dynamics = OtocDynamics::two_level,
                   bool normalize = true);

// (1/T) * trapezoid of |F_2(t) - F_ref(t)|
double mean_error(const OtocSeries& two_level, const OtocSeries& accurate);

}  // namespace rabigauge::observables
