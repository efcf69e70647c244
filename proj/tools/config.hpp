#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rabigauge/atomic.hpp"
#include "rabigauge/hamiltonian.hpp"
#include "rabigauge/optimizer.hpp"

namespace rabigauge::cli {

// q returned by `calibrate` on the default configuration (square well,
// omega = 1, q range [0.1 sqrt(m), 10 sqrt(m)]).
inline constexpr double kCalibratedCoupling = 0.384764949049;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Either explicit values or lo/hi/points with linear or log spacing.
struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t points = 2;
  bool log = false;
  std::vector<double> values;

  std::vector<double> resolve() const;
};

struct PotentialSpec {
  std::string kind = "square_well";  // square_well | harmonic | tabulated
  double width = 1.0;
  double stiffness = 1.0;
  std::filesystem::path file;  // tabulated only, relative to the config file
};

struct ExperimentConfig {
  PotentialSpec potential;
  std::size_t levels = 128;  // atomic levels solved
  std::size_t fd_points = 2000;
  std::optional<double> fd_half_width;

  Coupling coupling{kCalibratedCoupling, 1.0, 1.0};
  std::optional<double> mass;

  double omega = 1.0;
  std::optional<GridSpec> omega_grid;
  double alpha = 0.0;
  GridSpec alpha_grid{-1.0, 2.0, 61, false, {}};

  std::size_t d = 2;
  observables::ReferenceOptions reference = optimizer::ScanOptions::default_reference();
  std::size_t spectrum_levels = 10;

  std::string metric = "delta_Eg";  // delta_Eg | spectrum_error
  std::size_t n_max = 10;
  double scan_tol = 1e-4;

  optimizer::OtocOptions otoc;

  optimizer::CalibrationOptions calibration;

  std::string output;
  std::uint64_t seed = 20240611;
  std::size_t workers = 1;
  bool dump_matrices = false;
};

/// Parses a JSON config. Unknown keys, wrong types and out-of-range values
/// raise ConfigError with the field path and, where it can be located, the
/// line in the source text. `base` resolves relative file names.
ExperimentConfig parse_config(const std::string& text, const std::string& source_name,
                              const std::filesystem::path& base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Cross-field checks that need the whole config; throws ConfigError.
void validate(const ExperimentConfig& config);

// Fully resolved config as JSON, in a fixed key order.
nlohmann::ordered_json to_json(const ExperimentConfig& config);

atomic::Potential make_potential(const ExperimentConfig& config);

}  // namespace rabigauge::cli
