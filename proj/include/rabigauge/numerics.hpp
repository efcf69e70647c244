#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rabigauge/matrix.hpp"

namespace rabigauge::numerics {

/// Spectral factorization H = U diag(eigenvalues) U^dag.
///
/// Eigenvalues are ascending; column k of `eigenvectors` belongs to
/// eigenvalues[k]. A values-only decomposition leaves `eigenvectors` empty.
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  ComplexMatrix eigenvectors;

  std::size_t dim() const noexcept { return eigenvalues.size(); }
  bool has_vectors() const noexcept { return eigenvectors.rows() == eigenvalues.size() && !eigenvalues.empty(); }
  ComplexVector vector(std::size_t k) const;
};

// lapack: divide and conquer (dsyevd / zheevd), the default.
// householder: Householder reduction to real tridiagonal form followed by
// implicit-shift QL, kept as an independent second route.
enum class Solver { lapack, householder };

/// Dense Hermitian eigensolver. Real input takes a real-arithmetic path.
/// Throws NumericalError("eigensolver failed ...") when the backend reports
/// failure (QL: no convergence within 30*dim iterations).
EigenDecomposition eigh(const HermitianMatrix& h, Solver solver = Solver::lapack);
std::vector<double> eigvalsh(const HermitianMatrix& h, Solver solver = Solver::lapack);

// Checks Hermiticity to 1e-10 and symmetrizes before solving.
EigenDecomposition eigh(const ComplexMatrix& h, Solver solver = Solver::lapack);

// op(a) * b through BLAS, op = (conjugate) transpose when adjoint_a is set.
RealMatrix multiply(const RealMatrix& a, const RealMatrix& b, bool adjoint_a = false);
ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b, bool adjoint_a = false);

/// Symmetric tridiagonal eigenproblem. `off[i]` couples rows i and i+1.
std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag, std::span<const double> off);

struct TridiagonalEigenpairs {
  std::vector<double> eigenvalues;  // lowest `count`, ascending
  RealMatrix vectors;               // row k: unit eigenvector for eigenvalues[k]
};

// Eigenvalues by QL, eigenvectors of the lowest `count` by inverse iteration.
TridiagonalEigenpairs tridiagonal_lowest(std::span<const double> diag, std::span<const double> off,
                                         std::size_t count);

struct ScanResult1D {
  std::vector<double> grid;
  std::vector<double> values;  // NaN marks an excluded sample
  double argmin = 0.0;
  double min_value = 0.0;
  bool boundary_minimum = false;  // best grid sample sits on the scan edge
  bool degenerate = false;        // all finite samples equal
  std::size_t excluded = 0;
};

/// Coarse grid scan over [lo, hi] followed by golden-section refinement in
/// the cell pair around the best sample. Non-finite samples are excluded.
/// The returned minimum is never worse than the best grid sample; exact
/// ties go to the smallest abscissa.
ScanResult1D minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                             std::size_t grid_points, double tol);

// Same, with grid samples supplied by the caller (already evaluated).
ScanResult1D refine_scan(const std::function<double(double)>& f, std::vector<double> grid,
                         std::vector<double> values, double tol);

double trapezoid(std::span<const double> values, double dt);

}  // namespace rabigauge::numerics
