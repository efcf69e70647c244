#include "rabigauge/random.hpp"

namespace rabigauge {

ComplexMatrix random_unitary(std::size_t n, Rng& rng) {
  // Columns are orthonormalized in place; stored as rows for locality, then transposed.
  ComplexMatrix rows(n, n);
  for (auto& v : rows.data()) v = rng.complex_normal();
  for (std::size_t k = 0; k < n; ++k) {
    auto vk = rows.row(k);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) {
        auto vj = rows.row(j);
        const cplx proj = inner(vj, vk);
        for (std::size_t i = 0; i < n; ++i) vk[i] -= proj * vj[i];
      }
    }
    const double nv = norm(vk);
    for (auto& x : vk) x /= nv;
  }
  ComplexMatrix u(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) u(i, k) = rows(k, i);
  return u;
}

ComplexMatrix planted_hermitian(const ComplexMatrix& u, std::span<const double> lambda) {
  const std::size_t n = u.rows();
  ComplexMatrix ul(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) ul(i, k) = u(i, k) * lambda[k];
  return matmul(ul, adjoint(u));
}

}  // namespace rabigauge
