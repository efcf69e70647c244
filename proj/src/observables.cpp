#include "rabigauge/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rabigauge/errors.hpp"

namespace rabigauge::observables {

namespace {

double watched_delta(const std::vector<double>& a, const std::vector<double>& b, std::size_t watched) {
  const std::size_t k = std::min({watched, a.size(), b.size()});
  double delta = 0.0;
  for (std::size_t i = 0; i < k; ++i) delta = std::max(delta, std::abs(a[i] - b[i]));
  return delta;
}

ModelParams with_cutoffs(ModelParams p, std::size_t d, std::size_t n) {
  p.d = d;
  p.n_photon = n;
  return p;
}

// Photon number operator in the eigenbasis of H, n~ = U^dag diag(number) U,
// kept in real arithmetic whenever U is real.
class SpectralNumber {
 public:
  SpectralNumber(const numerics::EigenDecomposition& eig, std::span<const double> number)
      : dim_(eig.dim()), lambda_(eig.eigenvalues) {
    if (!eig.has_vectors()) throw std::invalid_argument("otoc: eigen decomposition carries no eigenvectors");
    if (number.size() != dim_) throw std::invalid_argument("otoc: number operator and Hamiltonian dimensions differ");
    const auto& u = eig.eigenvectors;
    real_ = std::all_of(u.data().begin(), u.data().end(), [](const cplx& z) { return z.imag() == 0.0; });
    if (real_) {
      RealMatrix ur(dim_, dim_), nu(dim_, dim_);
      for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c) {
          ur(r, c) = u(r, c).real();
          nu(r, c) = number[r] * ur(r, c);
        }
      re_ = numerics::multiply(ur, nu, true);
    } else {
      ComplexMatrix nu(dim_, dim_);
      for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c) nu(r, c) = number[r] * u(r, c);
      cx_ = numerics::multiply(u, nu, true);
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  bool real() const noexcept { return real_; }
  const std::vector<double>& lambda() const noexcept { return lambda_; }

  // n~ X for a block of column vectors.
  ComplexMatrix apply(const ComplexMatrix& x) const {
    if (!real_) return numerics::multiply(cx_, x);
    RealMatrix xr(x.rows(), x.cols()), xi(x.rows(), x.cols());
    for (std::size_t k = 0; k < x.data().size(); ++k) {
      xr.data()[k] = x.data()[k].real();
      xi.data()[k] = x.data()[k].imag();
    }
    const RealMatrix yr = numerics::multiply(re_, xr);
    const RealMatrix yi = numerics::multiply(re_, xi);
    ComplexMatrix y(x.rows(), x.cols());
    for (std::size_t k = 0; k < y.data().size(); ++k) y.data()[k] = cplx(yr.data()[k], yi.data()[k]);
    return y;
  }

  // Column k of n~.
  ComplexVector column(std::size_t k) const {
    ComplexVector c(dim_);
    for (std::size_t j = 0; j < dim_; ++j) c[j] = real_ ? cplx(re_(j, k), 0.0) : cx_(j, k);
    return c;
  }

 private:
  std::size_t dim_;
  std::vector<double> lambda_;
  bool real_ = false;
  RealMatrix re_;
  ComplexMatrix cx_;
};

void finish(OtocSeries& s, bool normalize) {
  s.normalization = s.values.front();
  if (normalize && std::abs(s.normalization) > 1e-12) {
    const double f0 = s.normalization.real();
    for (auto& v : s.values) v /= f0;
    s.normalized = true;
  }
}

void check_times(std::span<const double> times) {
  if (times.empty()) throw std::invalid_argument("otoc: empty time grid");
}

// Times are processed in blocks so that each step is one matrix product.
constexpr std::size_t kTimeBlock = 128;

// exp(i sign (lambda_j - shift) t) for the rows j of a block.
ComplexMatrix phases(const std::vector<double>& lambda, double shift, std::span<const double> times, double sign) {
  ComplexMatrix p(lambda.size(), times.size());
  for (std::size_t j = 0; j < lambda.size(); ++j)
    for (std::size_t c = 0; c < times.size(); ++c) p(j, c) = std::polar(1.0, sign * (lambda[j] - shift) * times[c]);
  return p;
}

// F(t) for a state given in the eigenbasis (phi = U^dag psi); any norm.
//   F = < W phi | n u >,  W phi = D n D^dag phi,  u = D n D^dag (n phi),  D = exp(i Lambda t)
std::vector<cplx> generic_series(const SpectralNumber& nt, std::span<const cplx> phi, std::span<const double> times) {
  const std::size_t dim = nt.dim();
  ComplexMatrix phi_col(dim, 1);
  for (std::size_t k = 0; k < dim; ++k) phi_col(k, 0) = phi[k];
  const ComplexMatrix n_phi = nt.apply(phi_col);
  const double shift = nt.lambda().front();
  std::vector<cplx> out;
  out.reserve(times.size());
  for (std::size_t t0 = 0; t0 < times.size(); t0 += kTimeBlock) {
    const auto block = times.subspan(t0, std::min(kTimeBlock, times.size() - t0));
    const ComplexMatrix fwd = phases(nt.lambda(), shift, block, 1.0);
    ComplexMatrix a(dim, block.size()), b(dim, block.size());
    for (std::size_t k = 0; k < dim; ++k)
      for (std::size_t c = 0; c < block.size(); ++c) {
        a(k, c) = std::conj(fwd(k, c)) * phi[k];
        b(k, c) = std::conj(fwd(k, c)) * n_phi(k, 0);
      }
    ComplexMatrix w_phi = nt.apply(a);
    ComplexMatrix u = nt.apply(b);
    for (std::size_t k = 0; k < w_phi.data().size(); ++k) {
      w_phi.data()[k] *= fwd.data()[k];
      u.data()[k] *= fwd.data()[k];
    }
    const ComplexMatrix nu = nt.apply(u);
    for (std::size_t c = 0; c < block.size(); ++c) {
      cplx f = 0.0;
      for (std::size_t k = 0; k < dim; ++k) f += std::conj(w_phi(k, c)) * nu(k, c);
      out.push_back(f);
    }
  }
  return out;
}

// With c = n~ e_k and D = exp(i Lambda t), shifted so that lambda_k = 0:
//   F = (D c)^dag n~ D n~ (D^dag c) = sum_l conj(r_l) e^{i lambda_l t} s_l,
//   s = n~ D^dag c,  r = n~ D c   (r = conj(s) when n~ is real).
std::vector<cplx> eigenstate_series(const SpectralNumber& nt, std::size_t k, std::span<const double> times) {
  const std::size_t dim = nt.dim();
  if (k >= dim) throw std::out_of_range("otoc: eigenstate index out of range");
  const ComplexVector c = nt.column(k);
  const double shift = nt.lambda()[k];
  std::vector<cplx> out;
  out.reserve(times.size());
  for (std::size_t t0 = 0; t0 < times.size(); t0 += kTimeBlock) {
    const auto block = times.subspan(t0, std::min(kTimeBlock, times.size() - t0));
    const ComplexMatrix fwd = phases(nt.lambda(), shift, block, 1.0);
    ComplexMatrix xs(dim, block.size()), xr(dim, block.size());
    for (std::size_t j = 0; j < dim; ++j)
      for (std::size_t col = 0; col < block.size(); ++col) {
        xs(j, col) = std::conj(fwd(j, col)) * c[j];
        xr(j, col) = fwd(j, col) * c[j];
      }
    const ComplexMatrix s = nt.apply(xs);
    const ComplexMatrix r = nt.real() ? ComplexMatrix() : nt.apply(xr);
    for (std::size_t col = 0; col < block.size(); ++col) {
      cplx f = 0.0;
      for (std::size_t l = 0; l < dim; ++l) {
        const cplx rl = nt.real() ? std::conj(s(l, col)) : r(l, col);
        f += std::conj(rl) * fwd(l, col) * s(l, col);
      }
      out.push_back(f);
    }
  }
  return out;
}

ComplexVector to_eigenbasis(const numerics::EigenDecomposition& eig, std::span<const cplx> psi) {
  const std::size_t dim = eig.dim();
  ComplexVector phi(dim, 0.0);
  const auto& u = eig.eigenvectors;
  for (std::size_t r = 0; r < dim; ++r) {
    if (psi[r] == cplx(0.0, 0.0)) continue;
    auto row = u.row(r);
    for (std::size_t k = 0; k < dim; ++k) phi[k] += std::conj(row[k]) * psi[r];
  }
  return phi;
}

std::vector<double> sector_number(const Sector& sector, std::size_t n_photon) {
  std::vector<double> out(sector.indices.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<double>(sector.indices[k] % n_photon);
  return out;
}

OtocSeries make_series(std::span<const double> times, std::vector<cplx> values, bool normalize) {
  OtocSeries s;
  s.times.assign(times.begin(), times.end());
  s.values = std::move(values);
  finish(s, normalize);
  return s;
}

}  // namespace

bool same_physics(const ModelParams& a, const ModelParams& b) noexcept {
  return a.alpha == b.alpha && a.omega == b.omega && a.coupling.q == b.coupling.q && a.coupling.v == b.coupling.v &&
         a.coupling.eps0 == b.coupling.eps0 && a.mass == b.mass;
}

bool DiagonalizedModel::has_vectors() const noexcept {
  return !sectors.empty() &&
         std::all_of(sectors.begin(), sectors.end(), [](const Sector& s) { return s.decomposition.has_vectors(); });
}

DiagonalizedModel::Level DiagonalizedModel::ground() const {
  Level best;
  double e = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < sectors.size(); ++s) {
    const auto& ev = sectors[s].decomposition.eigenvalues;
    if (!ev.empty() && ev.front() < e) {
      e = ev.front();
      best = {s, 0};
    }
  }
  if (!std::isfinite(e)) throw std::logic_error("ground: model has no eigenvalues");
  return best;
}

ComplexVector DiagonalizedModel::ground_state() const {
  const Level g = ground();
  const Sector& s = sectors[g.sector];
  if (!s.decomposition.has_vectors()) throw std::invalid_argument("ground_state: model was diagonalized without vectors");
  ComplexVector out(dim(), 0.0);
  for (std::size_t k = 0; k < s.indices.size(); ++k) out[s.indices[k]] = s.decomposition.eigenvectors(k, g.index);
  return out;
}

cplx DiagonalizedModel::expectation(std::span<const cplx> psi) const {
  if (psi.size() != dim()) throw std::invalid_argument("expectation: state dimension differs from the model");
  cplx total = 0.0;
  for (const auto& s : sectors) {
    ComplexVector part(s.indices.size());
    bool any = false;
    for (std::size_t k = 0; k < part.size(); ++k) {
      part[k] = psi[s.indices[k]];
      any = any || part[k] != cplx(0.0, 0.0);
    }
    if (any) total += s.hamiltonian.expectation(part);
  }
  return total;
}

DiagonalizedModel diagonalize(const atomic::AtomicSpectrum& atomic, const ModelParams& params, bool vectors,
                              PhotonPhase phase) {
  DiagonalizedModel m;
  m.params = params;
  m.phase = phase;
  for (auto& indices : parity_sectors(atomic, params)) {
    Sector s;
    s.hamiltonian = assemble_block(atomic, params, indices, phase);
    s.indices = std::move(indices);
    if (vectors)
      s.decomposition = numerics::eigh(s.hamiltonian);
    else
      s.decomposition.eigenvalues = numerics::eigvalsh(s.hamiltonian);
    m.eigenvalues.insert(m.eigenvalues.end(), s.decomposition.eigenvalues.begin(), s.decomposition.eigenvalues.end());
    m.sectors.push_back(std::move(s));
  }
  std::sort(m.eigenvalues.begin(), m.eigenvalues.end());
  return m;
}

ConvergedReference build_reference(const atomic::AtomicSpectrum& atomic, const ModelParams& model, bool vectors,
                                   PhotonPhase phase) {
  ConvergedReference ref;
  ref.model = diagonalize(atomic, model, vectors, phase);
  ref.report.push_back({model.d, model.n_photon, std::numeric_limits<double>::quiet_NaN()});
  return ref;
}

ConvergedReference converge_reference(const atomic::AtomicSpectrum& atomic, const ModelParams& model,
                                      const ReferenceOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("converge_reference: tol must be > 0");
  if (atomic.n_levels() < options.d_start)
    throw std::invalid_argument("converge_reference: atomic spectrum has fewer than d_start levels");

  std::size_t d = options.d_start;
  std::size_t n = options.n_start;
  std::vector<ConvergenceStep> report{{d, n, std::numeric_limits<double>::quiet_NaN()}};
  auto previous = diagonalize(atomic, with_cutoffs(model, d, n), options.vectors, options.phase);

  bool d_done = false;
  bool n_done = false;
  bool grow_n = true;
  double last_delta = std::numeric_limits<double>::infinity();
  while (!(d_done && n_done)) {
    if (grow_n ? n_done : d_done) grow_n = !grow_n;
    const std::size_t nd = grow_n ? d : 2 * d;
    const std::size_t nn = grow_n ? 2 * n : n;
    if (nd > options.d_cap || nd > atomic.n_levels() || nn > options.n_cap || nd * nn > options.max_dim) {
      std::ostringstream os;
      os << "reference did not converge within the cutoff caps: stopped at d = " << d << ", N = " << n
         << " with last delta " << last_delta << " > tol " << options.tol;
      throw ConvergenceError(os.str(), last_delta);
    }
    // Any step may turn out to be the last, so vectors are kept throughout when requested.
    auto current = diagonalize(atomic, with_cutoffs(model, nd, nn), options.vectors, options.phase);
    last_delta = watched_delta(previous.eigenvalues, current.eigenvalues, options.watched_levels);
    report.push_back({nd, nn, last_delta});
    (grow_n ? n_done : d_done) = last_delta <= options.tol;
    d = nd;
    n = nn;
    previous = std::move(current);
    grow_n = !grow_n;
  }

  ConvergedReference ref;
  ref.model = std::move(previous);
  ref.report = std::move(report);
  return ref;
}

ComplexVector truncated_ground_state(const atomic::AtomicSpectrum& atomic, std::size_t d,
                                     const ConvergedReference& reference) {
  if (d > reference.d_ref()) throw std::invalid_argument("truncated model is larger than the reference");
  const auto m = diagonalize(atomic, with_cutoffs(reference.params(), d, reference.n_ref()), true, reference.model.phase);
  return embed_state(m.ground_state(), d, reference.d_ref(), reference.n_ref());
}

double ground_energy_truncated(const atomic::AtomicSpectrum& atomic, std::size_t d,
                               const ConvergedReference& reference) {
  const auto psi = truncated_ground_state(atomic, d, reference);
  const cplx e = reference.model.expectation(psi);
  if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real())))
    throw NumericalError("ground_energy_truncated: expectation value has an imaginary part");
  return e.real();
}

double ground_energy_truncated(const atomic::AtomicSpectrum& atomic, const ModelParams& params,
                               const ConvergedReference& reference) {
  if (!same_physics(params, reference.params()))
    throw std::invalid_argument("ground_energy_truncated: parameters differ from the reference");
  return ground_energy_truncated(atomic, params.d, reference);
}

double delta_Eg(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference) {
  const double gap = ground_energy_truncated(atomic, 2, reference) - reference.ground_energy();
  if (gap < -1e-10) {
    std::ostringstream os;
    os << "variational bound violated: E_g,2 - E_g,ref = " << gap;
    throw NumericalError(os.str());
  }
  return std::max(gap, 0.0);
}

std::vector<double> two_level_spectrum(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference) {
  return diagonalize(atomic, with_cutoffs(reference.params(), 2, reference.n_ref()), false, reference.model.phase)
      .eigenvalues;
}

double spectrum_error(std::span<const double> two_level, const ConvergedReference& reference, std::size_t level) {
  if (level >= 2 * reference.n_ref() || level >= two_level.size() || level >= reference.model.eigenvalues.size())
    throw std::out_of_range("spectrum_error: level " + std::to_string(level) + " out of range");
  return std::abs(two_level[level] - reference.model.eigenvalues[level]);
}

double spectrum_error(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference, std::size_t level) {
  return spectrum_error(two_level_spectrum(atomic, reference), reference, level);
}

std::vector<double> time_grid(double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("time grid: T and dt must be > 0");
  const double ratio = T / dt;
  if (ratio > 1e5) throw std::invalid_argument("time grid: T/dt exceeds 1e5 steps");
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - T) > 1e-9 * T)
    throw std::invalid_argument("time grid: T must be an integer multiple of dt");
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

std::vector<double> photon_number_diagonal(std::size_t d, std::size_t n_photon) {
  std::vector<double> out(d * n_photon);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t n = 0; n < n_photon; ++n) out[i * n_photon + n] = static_cast<double>(n);
  return out;
}

OtocSeries otoc(std::span<const cplx> state, const numerics::EigenDecomposition& dynamics,
                std::span<const double> number, std::span<const double> times, bool normalize) {
  check_times(times);
  const SpectralNumber nt(dynamics, number);
  if (state.size() != nt.dim()) throw std::invalid_argument("otoc: state and Hamiltonian dimensions differ");
  if (std::abs(norm(state) - 1.0) > 1e-10) throw std::invalid_argument("otoc: state is not normalized");
  return make_series(times, generic_series(nt, to_eigenbasis(dynamics, state), times), normalize);
}

OtocSeries otoc_eigenstate(std::size_t k, const numerics::EigenDecomposition& dynamics,
                           std::span<const double> number, std::span<const double> times, bool normalize) {
  check_times(times);
  const SpectralNumber nt(dynamics, number);
  return make_series(times, eigenstate_series(nt, k, times), normalize);
}

OtocSeries otoc(std::span<const cplx> state, const DiagonalizedModel& dynamics, std::span<const double> times,
                bool normalize) {
  check_times(times);
  if (state.size() != dynamics.dim()) throw std::invalid_argument("otoc: state and Hamiltonian dimensions differ");
  if (std::abs(norm(state) - 1.0) > 1e-10) throw std::invalid_argument("otoc: state is not normalized");
  // Every operator involved conserves the sector, so F splits into sector sums.
  std::vector<cplx> total(times.size(), 0.0);
  for (const auto& s : dynamics.sectors) {
    ComplexVector part(s.indices.size());
    double weight = 0.0;
    for (std::size_t k = 0; k < part.size(); ++k) {
      part[k] = state[s.indices[k]];
      weight += std::norm(part[k]);
    }
    if (weight == 0.0) continue;
    const SpectralNumber nt(s.decomposition, sector_number(s, dynamics.params.n_photon));
    const auto values = generic_series(nt, to_eigenbasis(s.decomposition, part), times);
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += values[k];
  }
  return make_series(times, std::move(total), normalize);
}

OtocSeries otoc_ground(const DiagonalizedModel& dynamics, std::span<const double> times, bool normalize) {
  check_times(times);
  const auto g = dynamics.ground();
  const Sector& s = dynamics.sectors[g.sector];
  const SpectralNumber nt(s.decomposition, sector_number(s, dynamics.params.n_photon));
  return make_series(times, eigenstate_series(nt, g.index, times), normalize);
}

OtocPair otoc_pair(const atomic::AtomicSpectrum& atomic, const ConvergedReference& reference,
                   std::span<const double> times, OtocDynamics dynamics, bool normalize) {
  if (!reference.model.has_vectors())
    throw std::invalid_argument("otoc_pair: reference was built without eigenvectors");
  const std::size_t N = reference.n_ref();
  OtocPair out;
  out.accurate = otoc_ground(reference.model, times, normalize);
  const auto two = diagonalize(atomic, with_cutoffs(reference.params(), 2, N), true, reference.model.phase);
  if (dynamics == OtocDynamics::two_level) {
    out.two_level = otoc_ground(two, times, normalize);
  } else {
    const auto psi = embed_state(two.ground_state(), 2, reference.d_ref(), N);
    out.two_level = otoc(psi, reference.model, times, normalize);
  }
  return out;
}

double mean_error(const OtocSeries& two_level, const OtocSeries& accurate) {
  const auto& ta = two_level.times;
  const auto& tb = accurate.times;
  if (ta.size() != tb.size() || ta.size() != two_level.values.size() || tb.size() != accurate.values.size())
    throw std::invalid_argument("mean_error: time grids differ");
  if (ta.size() < 2) throw std::invalid_argument("mean_error: need at least 2 samples");
  for (std::size_t k = 0; k < ta.size(); ++k)
    if (std::abs(ta[k] - tb[k]) > 1e-12 * (1.0 + std::abs(ta[k])))
      throw std::invalid_argument("mean_error: time grids differ");
  const double span = ta.back() - ta.front();
  if (!(span > 0.0)) throw std::invalid_argument("mean_error: time grid has zero length");
  std::vector<double> diff(ta.size());
  for (std::size_t k = 0; k < ta.size(); ++k) diff[k] = std::abs(two_level.values[k] - accurate.values[k]);
  return numerics::trapezoid(diff, ta[1] - ta[0]) / span;
}

}  // namespace rabigauge::observables
