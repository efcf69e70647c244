#include <cblas.h>

#include <stdexcept>

#include "rabigauge/numerics.hpp"
#include "blas_threads.hpp"

// Present when BLAS comes from OpenBLAS; keeps results independent of the core count.
extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace rabigauge::numerics {

void single_threaded_blas() {
  static const bool once = [] {
    if (openblas_set_num_threads) openblas_set_num_threads(1);
    return true;
  }();
  (void)once;
}

namespace {

void check_shapes(std::size_t a_rows, std::size_t a_cols, std::size_t b_rows, bool adjoint_a) {
  if ((adjoint_a ? a_rows : a_cols) != b_rows) throw std::invalid_argument("multiply: inner dimensions differ");
}

}  // namespace

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b, bool adjoint_a) {
  check_shapes(a.rows(), a.cols(), b.rows(), adjoint_a);
  const std::size_t m = adjoint_a ? a.cols() : a.rows();
  const std::size_t k = b.rows();
  const std::size_t n = b.cols();
  RealMatrix c(m, n);
  if (m == 0 || n == 0 || k == 0) return c;
  single_threaded_blas();
  cblas_dgemm(CblasRowMajor, adjoint_a ? CblasTrans : CblasNoTrans, CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), 1.0, a.data().data(), static_cast<int>(a.cols()),
              b.data().data(), static_cast<int>(n), 0.0, c.data().data(), static_cast<int>(n));
  return c;
}

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b, bool adjoint_a) {
  check_shapes(a.rows(), a.cols(), b.rows(), adjoint_a);
  const std::size_t m = adjoint_a ? a.cols() : a.rows();
  const std::size_t k = b.rows();
  const std::size_t n = b.cols();
  ComplexMatrix c(m, n);
  if (m == 0 || n == 0 || k == 0) return c;
  single_threaded_blas();
  const cplx one(1.0, 0.0), zero(0.0, 0.0);
  cblas_zgemm(CblasRowMajor, adjoint_a ? CblasConjTrans : CblasNoTrans, CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), &one, a.data().data(), static_cast<int>(a.cols()),
              b.data().data(), static_cast<int>(n), &zero, c.data().data(), static_cast<int>(n));
  return c;
}

}  // namespace rabigauge::numerics
