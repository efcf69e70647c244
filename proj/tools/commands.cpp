#include "commands.hpp"

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "csv.hpp"
#include "rabigauge/errors.hpp"
#include "rabigauge/observables.hpp"
#include "rabigauge/optimizer.hpp"

namespace rabigauge::cli {

using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

atomic::AtomicSpectrum load_atomic(const ExperimentConfig& c) {
  const auto pot = make_potential(c);
  const double mass = c.mass.value_or(atomic::fix_mass_for_unit_gap(pot));
  return atomic::solve_atomic(pot, mass, c.levels, atomic::FdGrid{c.fd_points, c.fd_half_width});
}

optimizer::ScanOptions scan_options(const ExperimentConfig& c) {
  const auto& g = c.alpha_grid;
  if (!g.values.empty() || g.log)
    throw ConfigError("/alpha_grid: gauge scans need lo/hi/points with linear spacing");
  optimizer::ScanOptions s;
  s.alpha_lo = g.lo;
  s.alpha_hi = g.hi;
  s.grid_points = g.points;
  s.tol = c.scan_tol;
  s.reference = c.reference;
  s.workers = c.workers;
  return s;
}

ModelParams params_at(const atomic::AtomicSpectrum& a, double alpha, double omega, const Coupling& coupling) {
  return optimizer::physical_params(a, alpha, omega, coupling);
}

ordered_json cutoff_entry(const char* key, double x, std::size_t d, std::size_t n) {
  return {{key, x}, {"d_ref", d}, {"n_ref", n}};
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from, const std::string& prefix = "") {
  for (const auto& w : from) to.push_back(prefix + w);
}

std::string matrix_csv(const ComplexMatrix& m) {
  std::string s;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const std::string col = "c" + std::to_string(c);
    s += (c ? "," : "") + col + "_re," + col + "_im";
  }
  s += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      s += c ? "," : "";
      s += format_number(m(r, c).real()) + "," + format_number(m(r, c).imag());
    }
    s += '\n';
  }
  return s;
}

std::string otoc_csv(const observables::OtocPair& pair) {
  CsvWriter w({"t", "F2_re", "F2_im", "Fref_re", "Fref_im"});
  for (std::size_t k = 0; k < pair.accurate.times.size(); ++k)
    w.row(pair.accurate.times[k], pair.two_level.values[k].real(), pair.two_level.values[k].imag(),
          pair.accurate.values[k].real(), pair.accurate.values[k].imag());
  return w.str();
}

std::string scan_csv(const optimizer::GaugeScanResult& r) {
  CsvWriter w({"alpha", r.metric == optimizer::Metric::otoc_mean_error ? "otoc_mean_error" : "delta_Eg"});
  for (const auto& s : r.samples) w.row(s.alpha, s.metric);
  return w.str();
}

ordered_json scan_summary(const optimizer::GaugeScanResult& r) {
  return {{"metric", r.name()},
          {"alpha_opt", r.alpha_opt},
          {"metric_opt", r.metric_opt},
          {"boundary_minimum", r.scan.boundary_minimum},
          {"degenerate", r.scan.degenerate},
          {"excluded", r.scan.excluded}};
}

void add_scan_cutoffs(CommandResult& out, const optimizer::GaugeScanResult& r) {
  for (const auto& s : r.samples)
    if (s.failure.empty()) out.cutoffs.push_back(cutoff_entry("alpha", s.alpha, s.d_ref, s.n_ref));
}

std::string alpha_line(const optimizer::GaugeScanResult& r) {
  std::string line = "alpha_opt " + format_number(r.alpha_opt) + "\n" + r.name() + " " + format_number(r.metric_opt);
  if (r.scan.boundary_minimum) line += " (boundary minimum)";
  return line + "\n";
}

}  // namespace

CommandResult cmd_atomic(const ExperimentConfig& c) {
  const auto a = load_atomic(c);
  CommandResult out;
  CsvWriter energies({"level", "energy"});
  for (std::size_t i = 0; i < a.n_levels(); ++i) energies.row(i, a.energies[i]);
  CsvWriter dipole({"i", "j", "re", "im"});
  for (std::size_t i = 0; i < a.n_levels(); ++i)
    for (std::size_t j = 0; j < a.n_levels(); ++j) dipole.row(i, j, a.x_mat(i, j).real(), a.x_mat(i, j).imag());
  out.files = {{"atomic.csv", energies.str()}, {"dipole.csv", dipole.str()}};

  const double trk = atomic::trk_sum(a, 0);
  std::ostringstream os;
  os << "potential " << a.label << ", mass " << format_number(a.mass) << ", gap " << format_number(a.gap()) << "\n"
     << "TRK sum rule (ground level, " << a.n_levels() << " levels): " << format_number(trk) << ", |S - 1| = "
     << format_number(std::abs(trk - 1.0)) << (std::abs(trk - 1.0) <= 1e-3 ? " ok" : " exceeds 1e-3") << "\n";
  out.stdout_text = os.str();
  out.summary = {{"mass", a.mass},
                 {"gap", a.gap()},
                 {"levels", a.n_levels()},
                 {"trk_sum", trk},
                 {"x01_abs", std::abs(a.x_mat(0, 1))}};
  if (std::abs(trk - 1.0) > 1e-3) out.warnings.push_back("TRK sum deviates from 1 by more than 1e-3");
  return out;
}

CommandResult cmd_spectrum(const ExperimentConfig& c) {
  const auto a = load_atomic(c);
  const bool vs_omega = c.omega_grid.has_value();
  const auto points = vs_omega ? c.omega_grid->resolve() : c.alpha_grid.resolve();
  auto ref_opts = c.reference;
  ref_opts.watched_levels = std::max(ref_opts.watched_levels, c.spectrum_levels);

  struct Point {
    std::vector<double> two, full;
    std::size_t d_ref = 0, n_ref = 0;
    std::string failure;
  };
  std::vector<Point> results(points.size());
  optimizer::parallel_for(points.size(), c.workers, [&](std::size_t k) {
    const double alpha = vs_omega ? c.alpha : points[k];
    const double omega = vs_omega ? points[k] : c.omega;
    try {
      const auto ref = observables::converge_reference(a, params_at(a, alpha, omega, c.coupling), ref_opts);
      results[k].two = observables::two_level_spectrum(a, ref);
      results[k].full = ref.model.eigenvalues;
      results[k].d_ref = ref.d_ref();
      results[k].n_ref = ref.n_ref();
    } catch (const ConvergenceError& e) {
      results[k].failure = e.what();
    }
  });

  CommandResult out;
  const char* key = vs_omega ? "omega" : "alpha";
  CsvWriter w({key, "n", "E_n_2level", "E_n_full"});
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& r = results[k];
    if (!r.failure.empty())
      throw ConvergenceError(std::string("spectrum at ") + key + " = " + format_number(points[k]) + ": " + r.failure,
                             std::numeric_limits<double>::quiet_NaN());
    for (std::size_t n = 0; n < c.spectrum_levels; ++n)
      w.row(points[k], n, n < r.two.size() ? r.two[n] : std::numeric_limits<double>::quiet_NaN(), r.full.at(n));
    out.cutoffs.push_back(cutoff_entry(key, points[k], r.d_ref, r.n_ref));
  }
  out.files = {{vs_omega ? "spectrum_vs_omega.csv" : "spectrum.csv", w.str()}};
  out.summary = {{"points", points.size()}, {"levels", c.spectrum_levels}};
  return out;
}

CommandResult cmd_gauge_scan(const ExperimentConfig& c) {
  const auto a = load_atomic(c);
  const auto opts = scan_options(c);
  CommandResult out;
  if (c.metric == "delta_Eg") {
    const auto r = optimizer::optimal_static_gauge(a, c.omega, c.coupling, opts, c.potential.kind);
    out.files = {{"scan.csv", scan_csv(r)}};
    out.summary = scan_summary(r);
    out.warnings = r.warnings;
    out.stdout_text = alpha_line(r);
    add_scan_cutoffs(out, r);
    return out;
  }

  const auto levels = optimizer::optimal_gauge_per_level(a, c.omega, c.coupling, c.n_max, opts, c.potential.kind);
  CsvWriter grid({"alpha", "n", "spectrum_error"});
  for (std::size_t i = 0; i < levels.front().samples.size(); ++i)
    for (const auto& r : levels) grid.row(r.samples[i].alpha, r.level, r.samples[i].metric);
  CsvWriter best({"n", "alpha_opt", "spectrum_error", "boundary"});
  out.summary["levels"] = ordered_json::array();
  std::ostringstream os;
  for (const auto& r : levels) {
    best.row(r.level, r.alpha_opt, r.metric_opt, r.scan.boundary_minimum ? 1 : 0);
    out.summary["levels"].push_back(scan_summary(r));
    os << "alpha_opt n=" << r.level << " " << format_number(r.alpha_opt) << "\n";
    append(out.warnings, r.warnings, "n = " + std::to_string(r.level) + ": ");
  }
  out.files = {{"scan.csv", grid.str()}, {"alpha_opt_per_level.csv", best.str()}};
  out.stdout_text = os.str();
  add_scan_cutoffs(out, levels.front());
  return out;
}

CommandResult cmd_sweep2d(const ExperimentConfig& c) {
  const auto a = load_atomic(c);
  auto opts = scan_options(c);
  const GridSpec default_omegas{0.1, 10.0, 16, true, {}};
  const auto omegas = c.omega_grid.value_or(default_omegas).resolve();
  const auto alphas = c.alpha_grid.resolve();
  const auto s = optimizer::sweep2d(a, alphas, omegas, c.coupling, opts);

  CommandResult out;
  CsvWriter grid({"alpha", "omega", "log10_delta_Eg"});
  for (std::size_t j = 0; j < s.omegas.size(); ++j)
    for (std::size_t i = 0; i < s.alphas.size(); ++i) grid.row(s.alphas[i], s.omegas[j], s.values[j][i]);
  CsvWriter ridge({"omega", "alpha_opt", "delta_Eg"});
  for (const auto& p : s.ridge) ridge.row(p.omega, p.alpha_opt, p.metric);
  out.files = {{"sweep2d.csv", grid.str()}, {"ridge.csv", ridge.str()}};
  out.summary = {{"alphas", s.alphas.size()}, {"omegas", s.omegas.size()}, {"failed_cells", s.failed_cells}};
  out.cutoffs.push_back({{"max_d_ref", s.max_d_ref}, {"max_n_ref", s.max_n_ref}});
  out.warnings = s.warnings;
  std::ostringstream os;
  for (const auto& p : s.ridge)
    os << "ridge omega " << format_number(p.omega) << " alpha_opt " << format_number(p.alpha_opt) << "\n";
  out.stdout_text = os.str();
  return out;
}

CommandResult cmd_otoc(const ExperimentConfig& c) {
  const auto a = load_atomic(c);
  const auto e = optimizer::otoc_at(a, c.alpha, c.omega, c.coupling, c.otoc, c.reference);
  CommandResult out;
  out.files = {{"otoc.csv", otoc_csv(e.pair)}};
  out.cutoffs.push_back(cutoff_entry("alpha", c.alpha, e.d_ref, e.n_ref));
  out.summary = {{"alpha", c.alpha},
                 {"mean_error", e.mean_error},
                 {"F2_0", {e.pair.two_level.normalization.real(), e.pair.two_level.normalization.imag()}},
                 {"Fref_0", {e.pair.accurate.normalization.real(), e.pair.accurate.normalization.imag()}}};
  out.stdout_text = "otoc_mean_error " + format_number(e.mean_error) + "\n";
  if (c.dump_matrices) {
    auto p = params_at(a, c.alpha, c.omega, c.coupling);
    p.n_photon = e.n_ref;
    p.d = 2;
    out.files.push_back({"hamiltonian_2level.csv", matrix_csv(assemble(a, p).matrix())});
    p.d = e.d_ref;
    if (p.d * p.n_photon <= 1024)
      out.files.push_back({"hamiltonian_reference.csv", matrix_csv(assemble(a, p).matrix())});
    else
      out.warnings.push_back("reference Hamiltonian not dumped: dimension " + std::to_string(p.d * p.n_photon) +
                             " exceeds 1024");
  }
  return out;
}

CommandResult cmd_dyn_gauge(const ExperimentConfig& c) {
  const auto a = load_atomic(c);
  const auto r = optimizer::optimal_dynamical_gauge(a, c.omega, c.coupling, c.otoc, scan_options(c), c.potential.kind);
  auto ref = c.reference;
  ref.watched_levels = std::max(ref.watched_levels, optimizer::otoc_watched_levels);
  const auto e = optimizer::otoc_at(a, r.alpha_opt, c.omega, c.coupling, c.otoc, ref);

  CommandResult out;
  out.files = {{"otoc_scan.csv", scan_csv(r)}, {"otoc_series.csv", otoc_csv(e.pair)}};
  out.summary = scan_summary(r);
  out.summary["series_mean_error"] = e.mean_error;
  out.warnings = r.warnings;
  add_scan_cutoffs(out, r);
  out.cutoffs.push_back(cutoff_entry("alpha_opt", r.alpha_opt, e.d_ref, e.n_ref));
  out.stdout_text = alpha_line(r);
  return out;
}

CommandResult cmd_calibrate(const ExperimentConfig& c) {
  const atomic::SquareWell well{1.0};
  const auto sw = atomic::solve_atomic(well, atomic::fix_mass_for_unit_gap(well), c.levels);
  const auto osc = atomic::solve_atomic(atomic::Harmonic{1.0}, 1.0, c.levels);
  auto opts = c.calibration;
  opts.v = c.coupling.v;
  opts.eps0 = c.coupling.eps0;
  opts.scan = scan_options(c);
  opts.otoc = c.otoc;
  const auto r = optimizer::calibrate_coupling(sw, osc, opts);

  CommandResult out;
  CsvWriter history({"q", "alpha_opt", "boundary"});
  for (const auto& p : r.history) {
    history.row(p.q, p.alpha_opt, p.boundary ? 1 : 0);
    out.cutoffs.push_back(cutoff_entry("q", p.q, p.d_ref, p.n_ref));
  }

  std::ostringstream rep;
  rep << "target alpha_o (square well, omega = " << format_number(opts.omega) << "): " << format_number(opts.target)
      << " +- " << format_number(opts.window) << "\n"
      << "q_cal: " << format_number(r.q_cal) << "\n"
      << "alpha_o at q_cal: " << format_number(r.alpha_opt) << "\n"
      << "reached: " << (r.reached ? "yes" : "no (closest match)") << "\n"
      << "evaluated q: " << r.history.size() << "\n";
  ordered_json oos = ordered_json::array();
  if (!r.out_of_sample.empty()) {
    rep << "\nout-of-sample at q_cal:\n";
    for (const auto& o : r.out_of_sample) {
      rep << o.label << ": computed " << format_number(o.computed) << ", expected " << format_number(o.expected)
          << ", difference " << format_number(o.computed - o.expected)
          << (o.boundary ? ", on the alpha range edge" : "") << "\n";
      oos.push_back({{"label", o.label}, {"computed", o.computed}, {"expected", o.expected}, {"boundary", o.boundary}});
      out.cutoffs.push_back({{"label", o.label}, {"d_ref", o.d_ref}, {"n_ref", o.n_ref}});
    }
  }
  if (!r.warnings.empty()) {
    rep << "\nwarnings:\n";
    for (const auto& w : r.warnings) rep << "- " << w << "\n";
  }
  out.files = {{"calibration.csv", history.str()}, {"calibration_report.txt", rep.str()}};
  out.summary = {{"q_cal", r.q_cal}, {"alpha_opt", r.alpha_opt}, {"reached", r.reached}, {"out_of_sample", oos}};
  out.warnings = r.warnings;
  out.stdout_text = "q_cal " + format_number(r.q_cal) + "\nalpha_opt " + format_number(r.alpha_opt) + "\n";
  return out;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"atomic", "spectrum", "gauge-scan", "sweep2d",
                                              "otoc",   "dyn-gauge", "calibrate", "selftest"};
  return names;
}

std::string config_hash(const ExperimentConfig& config) {
  auto j = to_json(config);
  j.erase("output");
  j.erase("workers");
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

CommandResult dispatch(const std::string& name, const ExperimentConfig& c) {
  static const std::map<std::string, CommandResult (*)(const ExperimentConfig&)> table{
      {"atomic", cmd_atomic},   {"spectrum", cmd_spectrum},   {"gauge-scan", cmd_gauge_scan},
      {"sweep2d", cmd_sweep2d}, {"otoc", cmd_otoc},           {"dyn-gauge", cmd_dyn_gauge},
      {"calibrate", cmd_calibrate}, {"selftest", cmd_selftest}};
  return table.at(name)(c);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::optional<std::size_t> env_workers(std::ostream& err) {
  const char* s = std::getenv("RABI_GAUGE_WORKERS");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1) {
    err << "warning: ignoring RABI_GAUGE_WORKERS=" << s << " (expected a positive integer)\n";
    return std::nullopt;
  }
  return static_cast<std::size_t>(v);
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  f << body;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum Rabi model in an arbitrary gauge: spectra, optimal gauges and OTOCs", "rabi-gauge"};
  std::string config_path, out_dir, dynamics;
  std::optional<std::size_t> workers;
  bool no_normalize = false, dump = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--workers", workers, "worker threads for sweeps (fallback: RABI_GAUGE_WORKERS)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (default ./out/<command>-<config hash>)");
  app.add_option("--dynamics", dynamics, "OTOC dynamics of the two-level state")
      ->check(CLI::IsMember({"two-level", "full"}));
  app.add_flag("--no-normalize", no_normalize, "report raw OTOCs instead of F(t)/F(0)");
  app.add_flag("--dump-matrices", dump, "otoc: also write the Hamiltonians as CSV");
  app.require_subcommand(1, 1);
  for (const auto& name : command_names()) app.add_subcommand(name)->fallthrough();

  std::vector<const char*> argv{"rabi-gauge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    if (!out_dir.empty()) config.output = out_dir;
    if (workers)
      config.workers = *workers;
    else if (const auto w = env_workers(err))
      config.workers = *w;
    if (!dynamics.empty())
      config.otoc.dynamics =
          dynamics == "full" ? observables::OtocDynamics::full : observables::OtocDynamics::two_level;
    if (no_normalize) config.otoc.normalize = false;
    if (dump) config.dump_matrices = true;
    validate(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  const std::filesystem::path dir =
      config.output.empty() ? std::filesystem::path("out") / (command + "-" + config_hash(config))
                            : std::filesystem::path(config.output);
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult result;
  try {
    result = dispatch(command, config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ordered_json manifest;
  manifest["program"] = std::string("rabi-gauge ") + kVersion;
  manifest["command"] = command;
  manifest["config"] = to_json(config);
  manifest["config_hash"] = config_hash(config);
  manifest["converged_cutoffs"] = result.cutoffs;
  manifest["summary"] = result.summary;
  manifest["warnings"] = result.warnings;
  manifest["files"] = ordered_json::array();
  for (const auto& f : result.files) manifest["files"].push_back(f.name);
  manifest["status"] = result.status;
  manifest["started_utc"] = started;
  manifest["wall_clock_seconds"] = seconds;

  try {
    std::filesystem::create_directories(dir);
    for (const auto& f : result.files) write_file(dir / f.name, f.body);
    write_file(dir / "run_manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }

  out << result.stdout_text;
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  out << "output: " << dir.string() << "\n";
  return result.status;
}

}  // namespace rabigauge::cli
