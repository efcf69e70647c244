#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rabigauge {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexMatrix = Matrix<cplx>;
using RealMatrix = Matrix<double>;

ComplexMatrix adjoint(const ComplexMatrix& a);
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector matvec(const ComplexMatrix& a, std::span<const cplx> x);

// max |a_ij - b_ij|; throws on shape mismatch.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
double max_abs(const ComplexMatrix& a);
// max |a_ij - conj(a_ji)|
double hermiticity_defect(const ComplexMatrix& a);

cplx inner(std::span<const cplx> x, std::span<const cplx> y);  // <x|y>
double norm(std::span<const cplx> x);

// Dense complex matrix that is Hermitian to within the tolerance given at
// construction; the stored entries are exactly Hermitian after (H + H^dag)/2.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(ComplexMatrix m, double tol = 1e-12);

  std::size_t dim() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  const cplx& operator()(std::size_t r, std::size_t c) const noexcept { return m_(r, c); }
  // True when every imaginary part is exactly zero.
  bool is_real() const noexcept;

  cplx expectation(std::span<const cplx> psi) const;

 private:
  ComplexMatrix m_;
};

}  // namespace rabigauge
