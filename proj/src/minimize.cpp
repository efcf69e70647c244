#include <cmath>
#include <limits>
#include <stdexcept>

#include "rabigauge/numerics.hpp"

namespace rabigauge::numerics {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2

}  // namespace

ScanResult1D minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                             std::size_t grid_points, double tol) {
  if (!(lo < hi)) throw std::invalid_argument("minimize_scalar: require lo < hi");
  if (grid_points < 8) throw std::invalid_argument("minimize_scalar: require at least 8 grid points");
  std::vector<double> grid(grid_points);
  std::vector<double> values(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    values[i] = f(grid[i]);
  }
  return refine_scan(f, std::move(grid), std::move(values), tol);
}

ScanResult1D refine_scan(const std::function<double(double)>& f, std::vector<double> grid,
                         std::vector<double> values, double tol) {
  if (grid.size() != values.size() || grid.size() < 2)
    throw std::invalid_argument("refine_scan: grid and values must match and hold >= 2 samples");
  if (!(tol > 0.0)) throw std::invalid_argument("refine_scan: tol must be positive");

  ScanResult1D out;
  out.grid = std::move(grid);
  out.values = std::move(values);
  const std::size_t n = out.grid.size();

  std::size_t best = n;
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = out.values[i];
    if (!std::isfinite(v)) {
      ++out.excluded;
      out.values[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (v < vmin) {
      vmin = v;
      best = i;
    }
    vmax = std::max(vmax, v);
  }
  if (best == n) throw std::runtime_error("minimize_scalar: every sample was excluded");

  out.argmin = out.grid[best];
  out.min_value = vmin;
  out.degenerate = (vmax - vmin) <= 1e-14 * (1.0 + std::abs(vmin));
  out.boundary_minimum = best == 0 || best == n - 1;
  if (out.degenerate) return out;

  double a = out.grid[best == 0 ? 0 : best - 1];
  double b = out.grid[best == n - 1 ? n - 1 : best + 1];

  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  auto keep = [&out](double x, double fx) {
    if (std::isfinite(fx) && fx < out.min_value) {
      out.argmin = x;
      out.min_value = fx;
    }
  };
  keep(c, fc);
  keep(d, fd);
  while (std::abs(b - a) > tol) {
    // Excluded points count as +inf so the search walks away from them.
    const double gc = std::isfinite(fc) ? fc : std::numeric_limits<double>::infinity();
    const double gd = std::isfinite(fd) ? fd : std::numeric_limits<double>::infinity();
    if (gc <= gd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
      keep(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
      keep(d, fd);
    }
  }
  const double xm = 0.5 * (a + b);
  keep(xm, f(xm));
  return out;
}

double trapezoid(std::span<const double> values, double dt) {
  if (values.size() < 2) throw std::invalid_argument("trapezoid: need at least 2 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("trapezoid: dt must be positive");
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * dt;
}

}  // namespace rabigauge::numerics
