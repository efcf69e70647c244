#include "rabigauge/matrix.hpp"

namespace rabigauge {

namespace {

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("matrix shape mismatch");
}

}  // namespace

ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = std::conj(a(i, j));
  return out;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx{}) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

ComplexVector matvec(const ComplexMatrix& a, std::span<const cplx> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
  ComplexVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    cplx acc{};
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b);
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

double max_abs(const ComplexMatrix& a) {
  double m = 0.0;
  for (const auto& v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double hermiticity_defect(const ComplexMatrix& a) {
  if (!a.square()) throw std::invalid_argument("hermiticity_defect: matrix not square");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - std::conj(a(j, i))));
  return m;
}

cplx inner(std::span<const cplx> x, std::span<const cplx> y) {
  if (x.size() != y.size()) throw std::invalid_argument("inner: dimension mismatch");
  cplx acc{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

double norm(std::span<const cplx> x) {
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v);
  return std::sqrt(acc);
}

HermitianMatrix::HermitianMatrix(ComplexMatrix m, double tol) : m_(std::move(m)) {
  const double defect = hermiticity_defect(m_);
  if (!(defect <= tol))
    throw std::invalid_argument("matrix is not Hermitian: max|H - H^dag| = " +
                                std::to_string(defect));
  const std::size_t n = m_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    m_(i, i) = cplx(m_(i, i).real(), 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx avg = 0.5 * (m_(i, j) + std::conj(m_(j, i)));
      m_(i, j) = avg;
      m_(j, i) = std::conj(avg);
    }
  }
}

bool HermitianMatrix::is_real() const noexcept {
  for (const auto& v : m_.data())
    if (v.imag() != 0.0) return false;
  return true;
}

cplx HermitianMatrix::expectation(std::span<const cplx> psi) const {
  return inner(psi, matvec(m_, psi));
}

}  // namespace rabigauge
