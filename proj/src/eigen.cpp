#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <complex>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "rabigauge/errors.hpp"
#include "rabigauge/numerics.hpp"
#include "blas_threads.hpp"

namespace rabigauge::numerics {

namespace {

inline double conj_of(double x) { return x; }
inline cplx conj_of(const cplx& x) { return std::conj(x); }
inline double abs_of(double x) { return std::abs(x); }
inline double abs_of(const cplx& x) { return std::abs(x); }

// Householder reduction of a Hermitian (or real symmetric) matrix held in
// full row-major storage. On return `diag`/`off` describe a real symmetric
// tridiagonal T and, if `basis` is non-null, its rows hold Q^T where
// A = Q T Q^dag.
template <typename T>
void tridiagonalize(Matrix<T>& a, std::vector<double>& diag, std::vector<double>& off, Matrix<T>* basis) {
  const std::size_t n = a.rows();
  diag.assign(n, 0.0);
  off.assign(n > 0 ? n - 1 : 0, 0.0);

  std::vector<std::vector<T>> reflectors;
  std::vector<double> betas;
  std::vector<T> u, p;

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    u.assign(m, T{});
    double tail = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      u[i] = a(k + 1 + i, k);
      if (i > 0) tail += std::norm(u[i]);
    }
    if (tail == 0.0) {
      reflectors.emplace_back();
      betas.push_back(0.0);
      continue;
    }
    const double xnorm = std::sqrt(tail + std::norm(u[0]));
    const double a0 = abs_of(u[0]);
    const T phase = a0 == 0.0 ? T{1} : u[0] / a0;
    u[0] += phase * xnorm;
    double unorm2 = 0.0;
    for (const auto& v : u) unorm2 += std::norm(v);
    const double beta = 2.0 / unorm2;

    // p = beta * B u over the trailing block
    p.assign(m, T{});
    for (std::size_t i = 0; i < m; ++i) {
      auto row = a.row(k + 1 + i);
      T acc{};
      for (std::size_t j = 0; j < m; ++j) acc += row[k + 1 + j] * u[j];
      p[i] = beta * acc;
    }
    T kdot{};
    for (std::size_t i = 0; i < m; ++i) kdot += conj_of(u[i]) * p[i];
    const T kfac = 0.5 * beta * kdot;
    for (std::size_t i = 0; i < m; ++i) p[i] -= kfac * u[i];  // p is now w
    for (std::size_t i = 0; i < m; ++i) {
      auto row = a.row(k + 1 + i);
      const T ui = u[i];
      const T wi = p[i];
      for (std::size_t j = 0; j < m; ++j)
        row[k + 1 + j] -= ui * conj_of(p[j]) + wi * conj_of(u[j]);
    }
    const T sub = -phase * xnorm;
    a(k + 1, k) = sub;
    a(k, k + 1) = conj_of(sub);
    for (std::size_t i = 1; i < m; ++i) {
      a(k + 1 + i, k) = T{};
      a(k, k + 1 + i) = T{};
    }
    reflectors.push_back(u);
    betas.push_back(beta);
  }

  // Diagonal phases that make the off-diagonal real and non-negative.
  std::vector<T> phases(n, T{1});
  for (std::size_t k = 0; k < n; ++k) diag[k] = std::real(a(k, k));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const T t = a(k + 1, k);
    const double at = abs_of(t);
    off[k] = at;
    phases[k + 1] = at == 0.0 ? phases[k] : phases[k] * (t / at);
  }

  if (basis == nullptr) return;

  // Q^T = H_{n-3}^T ... H_0^T, each H^T = I - beta conj(u) u^T on rows k+1..
  Matrix<T> qt = Matrix<T>::identity(n);
  std::vector<T> r(n);
  for (std::size_t k = 0; k < reflectors.size(); ++k) {
    if (betas[k] == 0.0) continue;
    const auto& uk = reflectors[k];
    const std::size_t m = uk.size();
    std::fill(r.begin(), r.end(), T{});
    for (std::size_t i = 0; i < m; ++i) {
      auto row = qt.row(k + 1 + i);
      const T ui = uk[i];
      for (std::size_t j = 0; j < n; ++j) r[j] += ui * row[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      auto row = qt.row(k + 1 + i);
      const T c = betas[k] * conj_of(uk[i]);
      for (std::size_t j = 0; j < n; ++j) row[j] -= c * r[j];
    }
  }
  // Q' = Q D, i.e. scale row k of Q^T by phases[k].
  for (std::size_t k = 0; k < n; ++k) {
    auto row = qt.row(k);
    for (auto& v : row) v *= phases[k];
  }
  *basis = std::move(qt);
}

// Implicit-shift QL on a real symmetric tridiagonal matrix. Rotations are
// applied to rows of `vectors` when it is non-null. Returns false when the
// iteration budget (30 * n) is exhausted.
template <typename T>
bool tridiagonal_ql(std::vector<double>& d, std::vector<double> e_in, Matrix<T>* vectors, std::size_t& iterations) {
  const std::size_t n = d.size();
  std::vector<double> e(n, 0.0);
  std::copy(e_in.begin(), e_in.end(), e.begin());
  const std::size_t budget = 30 * std::max<std::size_t>(n, 1);
  const double eps = std::numeric_limits<double>::epsilon();
  iterations = 0;

  for (std::size_t l = 0; l < n; ++l) {
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (++iterations > budget) return false;
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        std::size_t i = m;
        while (i-- > l) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (vectors != nullptr) {
            auto vi = vectors->row(i);
            auto vi1 = vectors->row(i + 1);
            for (std::size_t k = 0; k < vi.size(); ++k) {
              const T fv = vi1[k];
              vi1[k] = s * vi[k] + c * fv;
              vi[k] = c * vi[k] - s * fv;
            }
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return true;
}

[[noreturn]] void fail(std::size_t n, double hmax, std::size_t iterations) {
  std::ostringstream os;
  os << "eigensolver failed: QL did not converge (dim=" << n << ", max|H_ij|=" << hmax
     << ", iterations=" << iterations << ")";
  throw NumericalError(os.str());
}

template <typename T>
EigenDecomposition solve(Matrix<T> a, bool want_vectors, double hmax) {
  const std::size_t n = a.rows();
  EigenDecomposition out;
  if (n == 0) return out;
  std::vector<double> d, e;
  Matrix<T> v;
  tridiagonalize(a, d, e, want_vectors ? &v : nullptr);
  a = Matrix<T>();
  std::size_t iterations = 0;
  if (!tridiagonal_ql(d, e, want_vectors ? &v : nullptr, iterations)) fail(n, hmax, iterations);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  out.eigenvalues.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.eigenvalues[k] = d[order[k]];
  if (!want_vectors) return out;

  out.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    auto src = v.row(order[k]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = cplx(src[i]);
  }
  return out;
}

[[noreturn]] void lapack_fail(const char* routine, lapack_int info, std::size_t n) {
  std::ostringstream os;
  os << "eigensolver failed: " << routine << " returned info=" << info << " (dim=" << n << ")";
  throw NumericalError(os.str());
}

EigenDecomposition lapack_solve(const HermitianMatrix& h, bool want_vectors) {
  single_threaded_blas();
  const std::size_t n = h.dim();
  EigenDecomposition out;
  if (n == 0) return out;
  out.eigenvalues.resize(n);
  const char job = want_vectors ? 'V' : 'N';
  const auto ln = static_cast<lapack_int>(n);
  auto src = h.matrix().data();
  if (h.is_real()) {
    std::vector<double> a(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) a[i] = src[i].real();
    const lapack_int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, job, 'L', ln, a.data(), ln, out.eigenvalues.data());
    if (info != 0) lapack_fail("dsyevd", info, n);
    if (want_vectors) {
      out.eigenvectors = ComplexMatrix(n, n);
      auto dst = out.eigenvectors.data();
      for (std::size_t i = 0; i < a.size(); ++i) dst[i] = a[i];
    }
    return out;
  }
  std::vector<cplx> a(src.begin(), src.end());
  const lapack_int info = LAPACKE_zheevd(LAPACK_ROW_MAJOR, job, 'L', ln, a.data(), ln, out.eigenvalues.data());
  if (info != 0) lapack_fail("zheevd", info, n);
  if (want_vectors) {
    out.eigenvectors = ComplexMatrix(n, n);
    auto dst = out.eigenvectors.data();
    std::copy(a.begin(), a.end(), dst.begin());
  }
  return out;
}

EigenDecomposition dispatch(const HermitianMatrix& h, bool want_vectors, Solver solver) {
  if (solver == Solver::lapack) return lapack_solve(h, want_vectors);
  const std::size_t n = h.dim();
  const double hmax = max_abs(h.matrix());
  if (h.is_real()) {
    RealMatrix a(n, n);
    auto src = h.matrix().data();
    auto dst = a.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i].real();
    return solve(std::move(a), want_vectors, hmax);
  }
  return solve(h.matrix(), want_vectors, hmax);
}

}  // namespace

ComplexVector EigenDecomposition::vector(std::size_t k) const {
  if (!has_vectors() || k >= dim()) throw std::out_of_range("eigenvector index out of range");
  ComplexVector v(dim());
  for (std::size_t i = 0; i < dim(); ++i) v[i] = eigenvectors(i, k);
  return v;
}

EigenDecomposition eigh(const HermitianMatrix& h, Solver solver) { return dispatch(h, true, solver); }

std::vector<double> eigvalsh(const HermitianMatrix& h, Solver solver) { return dispatch(h, false, solver).eigenvalues; }

EigenDecomposition eigh(const ComplexMatrix& h, Solver solver) { return eigh(HermitianMatrix(h, 1e-10), solver); }

std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag, std::span<const double> off) {
  if (off.size() + 1 != diag.size() && !diag.empty())
    throw std::invalid_argument("tridiagonal: off-diagonal length must be dim - 1");
  std::vector<double> d(diag.begin(), diag.end());
  std::size_t iterations = 0;
  if (!tridiagonal_ql<double>(d, std::vector<double>(off.begin(), off.end()), nullptr, iterations)) {
    double hmax = 0.0;
    for (double x : diag) hmax = std::max(hmax, std::abs(x));
    fail(d.size(), hmax, iterations);
  }
  std::sort(d.begin(), d.end());
  return d;
}

namespace {

// LU factorization with partial pivoting of (T - shift I), LAPACK dgttrf layout.
struct TridiagonalLU {
  std::vector<double> dl, d, du, du2;
  std::vector<bool> swapped;

  TridiagonalLU(std::span<const double> diag, std::span<const double> off, double shift, double tiny) {
    const std::size_t n = diag.size();
    d.resize(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = diag[i] - shift;
    dl.assign(off.begin(), off.end());
    du.assign(off.begin(), off.end());
    du2.assign(n > 2 ? n - 2 : 0, 0.0);
    swapped.assign(n, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        if (d[i] != 0.0) {
          const double fact = dl[i] / d[i];
          dl[i] = fact;
          d[i + 1] -= fact * du[i];
        }
      } else {
        const double fact = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = fact;
        const double temp = du[i];
        du[i] = d[i + 1];
        d[i + 1] = temp - fact * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -fact * du[i + 1];
        }
        swapped[i] = true;
      }
    }
    for (auto& x : d)
      if (std::abs(x) < tiny) x = std::copysign(tiny, x == 0.0 ? 1.0 : x);
  }

  void solve(std::vector<double>& b) const {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double temp = b[i] - dl[i] * b[i + 1];
        b[i] = b[i + 1];
        b[i + 1] = temp;
      }
    }
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t i = n - 2; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  }
};

void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  for (double& x : v) x /= s;
}

}  // namespace

TridiagonalEigenpairs tridiagonal_lowest(std::span<const double> diag, std::span<const double> off,
                                         std::size_t count) {
  const std::size_t n = diag.size();
  if (count > n) throw std::invalid_argument("tridiagonal_lowest: more eigenpairs requested than dimension");
  auto all = tridiagonal_eigenvalues(diag, off);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    scale = std::max(scale, std::abs(diag[i]) + (i < off.size() ? std::abs(off[i]) : 0.0) +
                                (i > 0 ? std::abs(off[i - 1]) : 0.0));
  const double eps = std::numeric_limits<double>::epsilon();

  TridiagonalEigenpairs out;
  out.eigenvalues.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
  out.vectors = RealMatrix(count, n);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < count; ++k) {
    const double lambda = out.eigenvalues[k];
    TridiagonalLU lu(diag, off, lambda, eps * std::max(scale, 1.0));
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i + k) + 0.3);
    for (int it = 0; it < 4; ++it) {
      lu.solve(v);
      normalize(v);
      // Keep orthogonal to earlier vectors in a near-degenerate cluster.
      for (std::size_t j = 0; j < k; ++j) {
        if (std::abs(out.eigenvalues[j] - lambda) > 1e-3 * std::max(scale, 1.0)) continue;
        auto prev = out.vectors.row(j);
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += prev[i] * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * prev[i];
        normalize(v);
      }
    }
    std::copy(v.begin(), v.end(), out.vectors.row(k).begin());
  }
  return out;
}

}  // namespace rabigauge::numerics
