#include "config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "rabigauge/observables.hpp"

namespace rabigauge::cli {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (const auto line = locate(path)) os << ":" << *line;
    os << ": " << (path.empty() ? "/" : path) << ": " << message;
    throw ConfigError(os.str());
  }

  void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
      bool known = false;
      for (const char* k : allowed) known = known || item.key() == k;
      if (!known) {
        std::string list;
        for (const char* k : allowed) list += (list.empty() ? "" : ", ") + std::string(k);
        fail(path + "/" + item.key(), "unknown key (allowed: " + list + ")");
      }
    }
  }

  const json* find(const json& obj, const char* key) const {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double real(const json& value, const std::string& path) const {
    if (!value.is_number()) fail(path, "expected a number");
    const double x = value.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
  }

  void real(const json& obj, const std::string& path, const char* key, double& out) const {
    if (const auto* v = find(obj, key)) out = real(*v, path + "/" + key);
  }

  void positive(const json& obj, const std::string& path, const char* key, double& out) const {
    if (const auto* v = find(obj, key)) {
      out = real(*v, path + "/" + key);
      if (!(out > 0.0)) fail(path + "/" + key, "must be > 0 (got " + show(out) + ")");
    }
  }

  void positive(const json& obj, const std::string& path, const char* key, std::optional<double>& out) const {
    if (!find(obj, key)) return;
    double x = 0.0;
    positive(obj, path, key, x);
    out = x;
  }

  void count(const json& obj, const std::string& path, const char* key, std::size_t& out, std::size_t min) const {
    if (const auto* v = find(obj, key)) {
      if (!v->is_number_integer()) fail(path + "/" + key, "expected a non-negative integer");
      if (v->is_number_unsigned()) {
        out = v->get<std::size_t>();
      } else {
        const auto s = v->get<std::int64_t>();
        if (s < 0) fail(path + "/" + key, "expected a non-negative integer");
        out = static_cast<std::size_t>(s);
      }
      if (out < min) fail(path + "/" + key, "must be >= " + std::to_string(min));
    }
  }

  void flag(const json& obj, const std::string& path, const char* key, bool& out) const {
    if (const auto* v = find(obj, key)) {
      if (!v->is_boolean()) fail(path + "/" + key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void text(const json& obj, const std::string& path, const char* key, std::string& out) const {
    if (const auto* v = find(obj, key)) {
      if (!v->is_string()) fail(path + "/" + key, "expected a string");
      out = v->get<std::string>();
    }
  }

  void choice(const json& obj, const std::string& path, const char* key, std::string& out,
              std::initializer_list<const char*> allowed) const {
    text(obj, path, key, out);
    if (!find(obj, key)) return;
    std::string list;
    for (const char* a : allowed) {
      if (out == a) return;
      list += (list.empty() ? "" : ", ") + std::string(a);
    }
    fail(path + "/" + key, "must be one of " + list + " (got \"" + out + "\")");
  }

  static std::string show(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }

 private:
  // Line of the last key of `path`, searched key by key through the text.
  std::optional<std::size_t> locate(const std::string& path) const {
    std::size_t pos = 0;
    std::size_t start = 1;
    bool any = false;
    while (start <= path.size()) {
      const std::size_t end = path.find('/', start);
      const std::string key = path.substr(start, end == std::string::npos ? std::string::npos : end - start);
      start = end == std::string::npos ? path.size() + 1 : end + 1;
      if (key.empty() || std::isdigit(static_cast<unsigned char>(key[0]))) continue;
      const auto found = text_.find("\"" + key + "\"", pos);
      if (found == std::string::npos) break;
      pos = found;
      any = true;
    }
    if (!any) return std::nullopt;
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos; ++i) line += text_[i] == '\n';
    return line;
  }

  const std::string& text_;
  std::string source_;
};

GridSpec read_grid(const Reader& r, const json& value, const std::string& path) {
  GridSpec g;
  const json* list = nullptr;
  if (value.is_array()) {
    list = &value;
  } else {
    r.only_keys(value, path, {"lo", "hi", "points", "spacing", "values"});
    if (const auto* v = r.find(value, "values")) {
      if (value.size() != 1) r.fail(path, "\"values\" excludes lo/hi/points/spacing");
      if (!v->is_array()) r.fail(path + "/values", "expected an array of numbers");
      list = v;
    }
  }
  if (list) {
    if (list->empty()) r.fail(path, "grid is empty");
    for (std::size_t i = 0; i < list->size(); ++i)
      g.values.push_back(r.real((*list)[i], path + "/" + std::to_string(i)));
    for (std::size_t i = 1; i < g.values.size(); ++i)
      if (!(g.values[i] > g.values[i - 1])) r.fail(path, "grid values must be strictly ascending");
    return g;
  }
  for (const char* k : {"lo", "hi", "points"})
    if (!r.find(value, k)) r.fail(path, std::string("missing \"") + k + "\"");
  r.real(value, path, "lo", g.lo);
  r.real(value, path, "hi", g.hi);
  r.count(value, path, "points", g.points, 2);
  std::string spacing = "linear";
  r.choice(value, path, "spacing", spacing, {"linear", "log"});
  g.log = spacing == "log";
  if (!(g.lo < g.hi)) r.fail(path, "need lo < hi");
  if (g.log && !(g.lo > 0.0)) r.fail(path + "/lo", "log spacing needs lo > 0");
  return g;
}

}  // namespace

std::vector<double> GridSpec::resolve() const {
  if (!values.empty()) return values;
  std::vector<double> out(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double f = points == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(points - 1);
    out[k] = log ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo + f * (hi - lo);
  }
  out.back() = points == 1 ? lo : hi;
  return out;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source_name,
                              const std::filesystem::path& base) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  const Reader r(text, source_name);
  r.only_keys(root, "",
              {"potential", "atomic", "coupling", "omega", "omega_grid", "alpha", "alpha_grid", "truncation",
               "spectrum", "scan", "otoc", "calibration", "output", "seed", "workers", "dump_matrices"});

  ExperimentConfig c;
  if (const auto* p = r.find(root, "potential")) {
    r.only_keys(*p, "/potential", {"kind", "width", "stiffness", "file"});
    r.choice(*p, "/potential", "kind", c.potential.kind, {"square_well", "harmonic", "tabulated"});
    r.positive(*p, "/potential", "width", c.potential.width);
    r.positive(*p, "/potential", "stiffness", c.potential.stiffness);
    std::string file;
    r.text(*p, "/potential", "file", file);
    const auto& kind = c.potential.kind;
    if (r.find(*p, "width") && kind != "square_well") r.fail("/potential/width", "only for kind square_well");
    if (r.find(*p, "stiffness") && kind != "harmonic") r.fail("/potential/stiffness", "only for kind harmonic");
    if (kind == "tabulated") {
      if (file.empty()) r.fail("/potential", "kind tabulated needs \"file\"");
      c.potential.file = base / file;
      try {
        atomic::validate(atomic::load_tabulated_csv(c.potential.file));
      } catch (const std::exception& e) {
        r.fail("/potential/file", e.what());
      }
    } else if (!file.empty()) {
      r.fail("/potential/file", "only for kind tabulated");
    }
  }
  if (const auto* a = r.find(root, "atomic")) {
    r.only_keys(*a, "/atomic", {"levels", "fd_points", "fd_half_width"});
    r.count(*a, "/atomic", "levels", c.levels, 2);
    r.count(*a, "/atomic", "fd_points", c.fd_points, 10);
    r.positive(*a, "/atomic", "fd_half_width", c.fd_half_width);
  }
  if (const auto* q = r.find(root, "coupling")) {
    r.only_keys(*q, "/coupling", {"q", "v", "eps0", "mass"});
    r.real(*q, "/coupling", "q", c.coupling.q);
    if (c.coupling.q < 0.0) r.fail("/coupling/q", "must be >= 0");
    r.positive(*q, "/coupling", "v", c.coupling.v);
    r.positive(*q, "/coupling", "eps0", c.coupling.eps0);
    r.positive(*q, "/coupling", "mass", c.mass);
  }
  r.positive(root, "", "omega", c.omega);
  if (const auto* g = r.find(root, "omega_grid")) {
    c.omega_grid = read_grid(r, *g, "/omega_grid");
    for (double w : c.omega_grid->resolve())
      if (!(w > 0.0)) r.fail("/omega_grid", "frequencies must be > 0");
  }
  r.real(root, "", "alpha", c.alpha);
  if (const auto* g = r.find(root, "alpha_grid")) c.alpha_grid = read_grid(r, *g, "/alpha_grid");

  if (const auto* t = r.find(root, "truncation")) {
    r.only_keys(*t, "/truncation", {"d", "tol", "d_start", "n_start", "d_cap", "n_cap", "max_dim"});
    r.count(*t, "/truncation", "d", c.d, 2);
    if (c.d != 2) r.fail("/truncation/d", "only the two-level truncation (d = 2) is supported");
    r.positive(*t, "/truncation", "tol", c.reference.tol);
    r.count(*t, "/truncation", "d_start", c.reference.d_start, 2);
    r.count(*t, "/truncation", "n_start", c.reference.n_start, 2);
    r.count(*t, "/truncation", "d_cap", c.reference.d_cap, 2);
    r.count(*t, "/truncation", "n_cap", c.reference.n_cap, 2);
    r.count(*t, "/truncation", "max_dim", c.reference.max_dim, 4);
    if (c.reference.d_start > c.reference.d_cap) r.fail("/truncation/d_start", "exceeds d_cap");
    if (c.reference.n_start > c.reference.n_cap) r.fail("/truncation/n_start", "exceeds n_cap");
  }
  if (const auto* s = r.find(root, "spectrum")) {
    r.only_keys(*s, "/spectrum", {"levels"});
    r.count(*s, "/spectrum", "levels", c.spectrum_levels, 1);
  }
  if (const auto* s = r.find(root, "scan")) {
    r.only_keys(*s, "/scan", {"metric", "n_max", "tol"});
    r.choice(*s, "/scan", "metric", c.metric, {"delta_Eg", "spectrum_error"});
    r.count(*s, "/scan", "n_max", c.n_max, 0);
    r.positive(*s, "/scan", "tol", c.scan_tol);
  }
  if (const auto* o = r.find(root, "otoc")) {
    r.only_keys(*o, "/otoc", {"T", "dt", "dynamics", "normalize"});
    r.positive(*o, "/otoc", "T", c.otoc.T);
    r.positive(*o, "/otoc", "dt", c.otoc.dt);
    std::string dynamics = "two-level";
    r.choice(*o, "/otoc", "dynamics", dynamics, {"two-level", "full"});
    c.otoc.dynamics = dynamics == "full" ? observables::OtocDynamics::full : observables::OtocDynamics::two_level;
    r.flag(*o, "/otoc", "normalize", c.otoc.normalize);
    try {
      (void)observables::time_grid(c.otoc.T, c.otoc.dt);
    } catch (const std::invalid_argument& e) {
      r.fail("/otoc", e.what());
    }
  }
  if (const auto* k = r.find(root, "calibration")) {
    r.only_keys(*k, "/calibration",
                {"target", "window", "omega", "q_lo", "q_hi", "q_points", "max_bisections", "out_of_sample"});
    auto& cal = c.calibration;
    r.real(*k, "/calibration", "target", cal.target);
    r.positive(*k, "/calibration", "window", cal.window);
    r.positive(*k, "/calibration", "omega", cal.omega);
    r.positive(*k, "/calibration", "q_lo", cal.q_lo);
    r.positive(*k, "/calibration", "q_hi", cal.q_hi);
    r.count(*k, "/calibration", "q_points", cal.q_points, 2);
    r.count(*k, "/calibration", "max_bisections", cal.max_bisections, 0);
    r.flag(*k, "/calibration", "out_of_sample", cal.out_of_sample);
    if (cal.q_lo && cal.q_hi && !(*cal.q_lo < *cal.q_hi)) r.fail("/calibration", "need q_lo < q_hi");
  }
  r.text(root, "", "output", c.output);
  if (const auto* s = r.find(root, "seed")) {
    if (!s->is_number_unsigned()) r.fail("/seed", "expected a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  }
  r.count(root, "", "workers", c.workers, 1);
  r.flag(root, "", "dump_matrices", c.dump_matrices);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.string(), path.parent_path());
}

void validate(const ExperimentConfig& c) {
  if (c.levels < c.reference.d_start) throw ConfigError("/atomic/levels: must be >= truncation.d_start");
  if (c.workers < 1) throw ConfigError("workers: must be >= 1");
  try {
    (void)observables::time_grid(c.otoc.T, c.otoc.dt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("/otoc: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  using oj = nlohmann::ordered_json;
  auto grid = [](const GridSpec& g) {
    oj j;
    if (!g.values.empty()) {
      j["values"] = g.values;
    } else {
      j["lo"] = g.lo;
      j["hi"] = g.hi;
      j["points"] = g.points;
      j["spacing"] = g.log ? "log" : "linear";
    }
    return j;
  };
  auto optional = [](const std::optional<double>& x) { return x ? oj(*x) : oj(nullptr); };

  oj j;
  oj pot;
  pot["kind"] = c.potential.kind;
  if (c.potential.kind == "square_well") pot["width"] = c.potential.width;
  if (c.potential.kind == "harmonic") pot["stiffness"] = c.potential.stiffness;
  if (c.potential.kind == "tabulated") pot["file"] = c.potential.file.string();
  j["potential"] = pot;
  j["atomic"] = {{"levels", c.levels}, {"fd_points", c.fd_points}, {"fd_half_width", optional(c.fd_half_width)}};
  j["coupling"] = {{"q", c.coupling.q}, {"v", c.coupling.v}, {"eps0", c.coupling.eps0}, {"mass", optional(c.mass)}};
  j["omega"] = c.omega;
  j["omega_grid"] = c.omega_grid ? grid(*c.omega_grid) : oj(nullptr);
  j["alpha"] = c.alpha;
  j["alpha_grid"] = grid(c.alpha_grid);
  j["truncation"] = {{"d", c.d},
                     {"tol", c.reference.tol},
                     {"d_start", c.reference.d_start},
                     {"n_start", c.reference.n_start},
                     {"d_cap", c.reference.d_cap},
                     {"n_cap", c.reference.n_cap},
                     {"max_dim", c.reference.max_dim}};
  j["spectrum"] = {{"levels", c.spectrum_levels}};
  j["scan"] = {{"metric", c.metric}, {"n_max", c.n_max}, {"tol", c.scan_tol}};
  j["otoc"] = {{"T", c.otoc.T},
               {"dt", c.otoc.dt},
               {"dynamics", c.otoc.dynamics == observables::OtocDynamics::full ? "full" : "two-level"},
               {"normalize", c.otoc.normalize}};
  const auto& cal = c.calibration;
  j["calibration"] = {{"target", cal.target},       {"window", cal.window},
                      {"omega", cal.omega},         {"q_lo", optional(cal.q_lo)},
                      {"q_hi", optional(cal.q_hi)}, {"q_points", cal.q_points},
                      {"max_bisections", cal.max_bisections}, {"out_of_sample", cal.out_of_sample}};
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["dump_matrices"] = c.dump_matrices;
  return j;
}

atomic::Potential make_potential(const ExperimentConfig& c) {
  if (c.potential.kind == "harmonic") return atomic::Harmonic{c.potential.stiffness};
  if (c.potential.kind == "tabulated") return atomic::load_tabulated_csv(c.potential.file);
  return atomic::SquareWell{c.potential.width};
}

}  // namespace rabigauge::cli
