#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rabigauge/atomic.hpp"
#include "rabigauge/matrix.hpp"

namespace rabigauge {

struct Coupling {
  double q = 1.0;     // charge
  double v = 1.0;     // mode volume
  double eps0 = 1.0;  // permittivity
};

struct ModelParams {
  double alpha = 0.0;
  double omega = 1.0;
  Coupling coupling;
  double mass = 1.0;
  std::size_t d = 2;          // atomic levels kept
  std::size_t n_photon = 16;  // Fock states 0..n_photon-1

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// sqrt(omega^2 + (1 - alpha)^2 q^2 / (m v eps0))
double renormalized_frequency(const ModelParams& p);
// Field amplitude g = 1 / sqrt(2 eps0 omega_alpha v).
double field_amplitude(const ModelParams& p);

// Phase of the Fock basis. `real` uses b' = i b, which leaves n unchanged and
// makes the Hamiltonian real symmetric whenever the dipole matrix is real.
enum class PhotonPhase { standard, real };

struct PhotonOperators {
  ComplexMatrix b;
  ComplexMatrix b_dag;
  ComplexMatrix number;
};

PhotonOperators photon_operators(std::size_t n_photon, PhotonPhase phase = PhotonPhase::standard);

struct ComposedBasisIndex {
  std::size_t d = 0;
  std::size_t n_photon = 0;

  std::size_t dim() const noexcept { return d * n_photon; }
  std::size_t flat(std::size_t i, std::size_t n) const noexcept { return i * n_photon + n; }
  std::size_t atomic(std::size_t flat_index) const noexcept { return flat_index / n_photon; }
  std::size_t photon(std::size_t flat_index) const noexcept { return flat_index % n_photon; }
};

/// Arbitrary-gauge Rabi Hamiltonian truncated to params.d atomic levels and
/// params.n_photon Fock states, in the flat basis i * n_photon + n:
///
///   sum_i e_i |i><i| + w_a (n + 1/2) + (a^2 q^2 / 2 v eps0) X^2
///   - ((1 - a) q / m) g P (b^dag + b) + i a q w_a g X (b^dag - b)
///
/// X and P are the d x d truncations of the atomic matrices and X^2 is the
/// square of the truncated matrix.
HermitianMatrix assemble(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                         PhotonPhase phase = PhotonPhase::real);

// Rows and columns `indices` (ascending flat indices) of assemble().
HermitianMatrix assemble_block(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                               std::span<const std::size_t> indices, PhotonPhase phase = PhotonPhase::real);

// True when x_ij and p_ij vanish (to 1e-12 relative) for i + j even, i, j < d.
bool parity_selective(const atomic::AtomicSpectrum& atomic, std::size_t d);

// H conserves (-1)^(i + n) for parity-selective dipoles, splitting the flat
// basis into the even and odd sectors (in that order). Otherwise one sector.
std::vector<std::vector<std::size_t>> parity_sectors(const atomic::AtomicSpectrum& atomic, const ModelParams& params);

// Pauli-matrix form of the d = 2 Hamiltonian; needs x_00 = x_11 = 0.
HermitianMatrix two_level_closed_form(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                                      PhotonPhase phase = PhotonPhase::real);

// Zero-pads the atomic index of a state on d_small * n_photon amplitudes.
ComplexVector embed_state(std::span<const cplx> psi, std::size_t d_small, std::size_t d_large,
                          std::size_t n_photon);

}  // namespace rabigauge
