#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rabigauge/matrix.hpp"

namespace rabigauge::atomic {

// Infinite well on (-width/2, width/2).
struct SquareWell {
  double width = 1.0;
};

// V(x) = stiffness * x^2 / 2
struct Harmonic {
  double stiffness = 1.0;
};

// Sampled potential; hard walls at the first and last grid position.
struct Tabulated {
  std::vector<double> grid;
  std::vector<double> values;
};

using Potential = std::variant<SquareWell, Harmonic, Tabulated>;

// Throws std::invalid_argument on a malformed potential.
void validate(const Potential& potential);
// +inf outside a square well or a tabulated range; linear interpolation for tables.
double evaluate(const Potential& potential, double x);
std::string potential_id(const Potential& potential);
bool is_builtin(const Potential& potential);

// Two-column CSV with header `x,V`.
Tabulated parse_tabulated_csv(std::istream& in);
Tabulated load_tabulated_csv(const std::filesystem::path& path);

struct AtomicSpectrum {
  double mass = 1.0;
  std::vector<double> energies;  // ascending
  ComplexMatrix x_mat;           // <i|x|j>
  ComplexMatrix p_mat;           // <i|p|j>
  bool symmetric = false;        // potential is even in x
  std::string label;

  std::size_t n_levels() const noexcept { return energies.size(); }
  double gap() const { return energies.at(1) - energies.at(0); }
};

// Mass that puts the lowest transition at exactly 1.
double fix_mass_for_unit_gap(const Potential& potential);

struct FdGrid {
  std::size_t points = 2000;          // interior nodes
  std::optional<double> half_width;   // built-ins only: domain (-w, w); square well ignores it
};

// Closed forms for the built-in potentials; finite differences otherwise.
AtomicSpectrum solve_atomic(const Potential& potential, double mass, std::size_t n_levels, const FdGrid& grid = {});

// Uniform-grid finite-difference solve with hard walls, for any potential.
AtomicSpectrum solve_atomic_fd(const Potential& potential, double mass, std::size_t n_levels, const FdGrid& grid = {});

// sum_j 2m (e_j - e_level) |x_{level,j}|^2 over the retained levels.
double trk_sum(const AtomicSpectrum& spectrum, std::size_t level = 0);

}  // namespace rabigauge::atomic
