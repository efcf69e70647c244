#include "rabigauge/hamiltonian.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rabigauge/errors.hpp"

namespace rabigauge {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// b expressed in the chosen Fock basis is phase * B with B the standard ladder matrix.
cplx ladder_phase(PhotonPhase phase) { return phase == PhotonPhase::real ? cplx(0.0, -1.0) : cplx(1.0, 0.0); }

void check_inputs(const atomic::AtomicSpectrum& atomic, const ModelParams& params) {
  params.validate();
  require(atomic.n_levels() >= params.d, "assemble: atomic spectrum has " + std::to_string(atomic.n_levels()) +
                                             " levels but d = " + std::to_string(params.d));
  require(atomic.x_mat.rows() == atomic.n_levels() && atomic.p_mat.rows() == atomic.n_levels(),
          "assemble: atomic matrices do not match the level count");
  require(std::abs(atomic.mass - params.mass) <= 1e-12 * params.mass,
          "assemble: model mass differs from the atomic spectrum mass");
}

HermitianMatrix checked(ComplexMatrix h) {
  const double defect = hermiticity_defect(h);
  if (defect > 1e-12) {
    std::ostringstream os;
    os << "assembled Hamiltonian is not Hermitian (max|H - H^dag| = " << defect
       << "); the x and p matrices are inconsistent";
    throw NumericalError(os.str());
  }
  return HermitianMatrix(std::move(h), 1e-12);
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(alpha), "alpha must be finite");
  require(omega > 0.0 && std::isfinite(omega), "omega must be > 0");
  require(coupling.q >= 0.0 && std::isfinite(coupling.q), "q must be >= 0");
  require(coupling.v > 0.0 && std::isfinite(coupling.v), "v must be > 0");
  require(coupling.eps0 > 0.0 && std::isfinite(coupling.eps0), "eps0 must be > 0");
  require(mass > 0.0 && std::isfinite(mass), "mass must be > 0");
  require(d >= 2, "d must be >= 2");
  require(n_photon >= 2, "n_photon must be >= 2");
}

double renormalized_frequency(const ModelParams& p) {
  const double s = 1.0 - p.alpha;
  return std::sqrt(p.omega * p.omega +
                   s * s * p.coupling.q * p.coupling.q / (p.mass * p.coupling.v * p.coupling.eps0));
}

double field_amplitude(const ModelParams& p) {
  return 1.0 / std::sqrt(2.0 * p.coupling.eps0 * renormalized_frequency(p) * p.coupling.v);
}

PhotonOperators photon_operators(std::size_t n_photon, PhotonPhase phase) {
  require(n_photon >= 2, "photon_operators: need at least 2 Fock states");
  const cplx c = ladder_phase(phase);
  PhotonOperators ops{ComplexMatrix(n_photon, n_photon), ComplexMatrix(n_photon, n_photon),
                      ComplexMatrix(n_photon, n_photon)};
  for (std::size_t n = 1; n < n_photon; ++n) {
    const double s = std::sqrt(static_cast<double>(n));
    ops.b(n - 1, n) = c * s;
    ops.b_dag(n, n - 1) = std::conj(c) * s;
  }
  for (std::size_t n = 0; n < n_photon; ++n) ops.number(n, n) = static_cast<double>(n);
  return ops;
}

namespace {

// Matrix elements of the truncated Hamiltonian between flat basis states.
class Elements {
 public:
  Elements(const atomic::AtomicSpectrum& atomic, const ModelParams& params, PhotonPhase phase)
      : atomic_(atomic), idx_{params.d, params.n_photon}, x2_(params.d, params.d) {
    check_inputs(atomic, params);
    const double q = params.coupling.q;
    wa_ = renormalized_frequency(params);
    const double g = field_amplitude(params);
    k_self_ = params.alpha * params.alpha * q * q / (2.0 * params.coupling.v * params.coupling.eps0);
    k_p_ = -(1.0 - params.alpha) * q / params.mass * g;
    k_x_ = cplx(0.0, params.alpha * q * wa_ * g);
    c_ = ladder_phase(phase);
    const std::size_t d = params.d;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += atomic.x_mat(i, k) * atomic.x_mat(k, j);
        x2_(i, j) = s;
      }
  }

  const ComposedBasisIndex& index() const noexcept { return idx_; }

  cplx operator()(std::size_t row, std::size_t col) const {
    const std::size_t i = idx_.atomic(row), n = idx_.photon(row);
    const std::size_t j = idx_.atomic(col), m = idx_.photon(col);
    if (n == m) {
      cplx v = k_self_ * x2_(i, j);
      if (i == j) v += atomic_.energies[i] + wa_ * (static_cast<double>(n) + 0.5);
      return v;
    }
    // Only the first off-diagonals of b^dag + b and b^dag - b are nonzero:
    // <n|b|n+1> = c s,  <n+1|b^dag|n> = conj(c) s.
    if (m == n + 1) {
      const cplx up = c_ * std::sqrt(static_cast<double>(m));
      return (k_p_ * atomic_.p_mat(i, j) - k_x_ * atomic_.x_mat(i, j)) * up;
    }
    if (n == m + 1) {
      const cplx down = std::conj(c_) * std::sqrt(static_cast<double>(n));
      return (k_p_ * atomic_.p_mat(i, j) + k_x_ * atomic_.x_mat(i, j)) * down;
    }
    return 0.0;
  }

 private:
  const atomic::AtomicSpectrum& atomic_;
  ComposedBasisIndex idx_;
  ComplexMatrix x2_;
  double wa_ = 0.0;
  double k_self_ = 0.0;
  double k_p_ = 0.0;
  cplx k_x_;
  cplx c_;
};

}  // namespace

HermitianMatrix assemble(const atomic::AtomicSpectrum& atomic, const ModelParams& params, PhotonPhase phase) {
  const Elements el(atomic, params, phase);
  const std::size_t dim = el.index().dim();
  ComplexMatrix h(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) h(r, c) = el(r, c);
  return checked(std::move(h));
}

HermitianMatrix assemble_block(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                               std::span<const std::size_t> indices, PhotonPhase phase) {
  const Elements el(atomic, params, phase);
  for (std::size_t k = 0; k < indices.size(); ++k)
    require(indices[k] < el.index().dim() && (k == 0 || indices[k] > indices[k - 1]),
            "assemble_block: indices must be ascending and inside the basis");
  ComplexMatrix h(indices.size(), indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r)
    for (std::size_t c = 0; c < indices.size(); ++c) h(r, c) = el(indices[r], indices[c]);
  return checked(std::move(h));
}

bool parity_selective(const atomic::AtomicSpectrum& atomic, std::size_t d) {
  double largest = 0.0;
  double forbidden = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double a = std::max(std::abs(atomic.x_mat(i, j)), std::abs(atomic.p_mat(i, j)) / atomic.mass);
      largest = std::max(largest, a);
      if ((i + j) % 2 == 0) forbidden = std::max(forbidden, a);
    }
  return forbidden <= 1e-12 * largest;
}

std::vector<std::vector<std::size_t>> parity_sectors(const atomic::AtomicSpectrum& atomic, const ModelParams& params) {
  const ComposedBasisIndex idx{params.d, params.n_photon};
  require(atomic.n_levels() >= params.d, "parity_sectors: atomic spectrum has fewer than d levels");
  if (!parity_selective(atomic, params.d)) {
    std::vector<std::size_t> all(idx.dim());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return {std::move(all)};
  }
  std::vector<std::vector<std::size_t>> sectors(2);
  for (std::size_t k = 0; k < idx.dim(); ++k) sectors[(idx.atomic(k) + idx.photon(k)) % 2].push_back(k);
  return sectors;
}

HermitianMatrix two_level_closed_form(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                                      PhotonPhase phase) {
  check_inputs(atomic, params);
  require(params.d == 2, "two_level_closed_form: d must be 2");
  const double x10 = std::abs(atomic.x_mat(1, 0));
  if (std::abs(atomic.x_mat(0, 0)) > 1e-8 * std::max(1.0, x10) ||
      std::abs(atomic.x_mat(1, 1)) > 1e-8 * std::max(1.0, x10))
    throw std::invalid_argument("closed form requires symmetric potential");

  const std::size_t N = params.n_photon;
  const double q = params.coupling.q;
  const double big_omega = atomic.energies[1] - atomic.energies[0];
  const double wa = renormalized_frequency(params);
  const double g = field_amplitude(params);
  const double delta = 0.5 * (atomic.energies[1] + atomic.energies[0]) +
                       params.alpha * params.alpha * q * q / (2.0 * params.coupling.v * params.coupling.eps0) * x10 * x10;
  const cplx u = x10 > 0.0 ? atomic.x_mat(1, 0) / x10 : cplx(1.0, 0.0);

  // Basis order (ground, excited).
  ComplexMatrix sz(2, 2), sx(2, 2), sy(2, 2), id2 = ComplexMatrix::identity(2);
  sz(0, 0) = -1.0;
  sz(1, 1) = 1.0;
  sx(0, 1) = std::conj(u);
  sx(1, 0) = u;
  sy(0, 1) = cplx(0.0, -1.0) * std::conj(u);
  sy(1, 0) = cplx(0.0, 1.0) * u;

  const PhotonOperators ph = photon_operators(N, phase);
  ComplexMatrix n_half = ph.number;
  for (std::size_t n = 0; n < N; ++n) n_half(n, n) += 0.5;
  ComplexMatrix plus(N, N), minus(N, N);
  for (std::size_t r = 0; r < N; ++r)
    for (std::size_t s = 0; s < N; ++s) {
      plus(r, s) = ph.b_dag(r, s) + ph.b(r, s);
      minus(r, s) = ph.b_dag(r, s) - ph.b(r, s);
    }

  ComplexMatrix atom(2, 2);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t s = 0; s < 2; ++s) atom(r, s) = 0.5 * big_omega * sz(r, s) + delta * id2(r, s);

  const ComplexMatrix terms[] = {
      kron(atom, ComplexMatrix::identity(N)),
      kron(id2, n_half),
      kron(sy, plus),
      kron(sx, minus),
  };
  const cplx weights[] = {
      1.0,
      wa,
      -(1.0 - params.alpha) * q / params.mass * g * params.mass * big_omega * x10,
      cplx(0.0, params.alpha * q * wa * g * x10),
  };
  ComplexMatrix h(2 * N, 2 * N);
  for (std::size_t t = 0; t < 4; ++t) {
    auto dst = h.data();
    auto src = terms[t].data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += weights[t] * src[k];
  }
  return checked(std::move(h));
}

ComplexVector embed_state(std::span<const cplx> psi, std::size_t d_small, std::size_t d_large,
                          std::size_t n_photon) {
  require(psi.size() == d_small * n_photon,
          "embed_state: state length " + std::to_string(psi.size()) + " does not match d_small * n_photon = " +
              std::to_string(d_small * n_photon) + " (photon cutoff mismatch)");
  require(d_large >= d_small, "embed_state: d_large must be >= d_small");
  ComplexVector out(d_large * n_photon, cplx(0.0, 0.0));
  std::copy(psi.begin(), psi.end(), out.begin());
  return out;
}

}  // namespace rabigauge
