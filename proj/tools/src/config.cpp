#include "heavytail/cli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace heavytail::cli {

namespace {

const std::vector<std::pair<Command, std::string>>& command_table() {
  static const std::vector<std::pair<Command, std::string>> table{
      {Command::simulate, "simulate"},         {Command::cluster_index, "cluster-index"},
      {Command::ldp_scan, "ldp-scan"},         {Command::stable_check, "stable-check"},
      {Command::drift_check, "drift-check"},   {Command::regen_check, "regen-check"},
      {Command::report, "report"}};
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

using Section = std::map<std::string, Entry>;

class Reader {
 public:
  std::map<std::string, Section> sections;
  std::map<std::string, std::size_t> section_lines;
  std::vector<std::string> errors;
  std::map<std::string, std::map<std::string, std::string>> echo;

  static std::string label(const std::string& section, const std::string& key) {
    return section.empty() ? key : "[" + section + "] " + key;
  }

  Entry* find(const std::string& section, const std::string& key) {
    auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }

  void fail(const Entry& e, const std::string& section, const std::string& key, const std::string& what) {
    errors.push_back("line " + std::to_string(e.line) + ": " + label(section, key) + " = '" + e.value + "': " + what);
  }

  void missing(const std::string& section, const std::string& key) {
    errors.push_back("missing required key " + label(section, key));
  }

  void record(const std::string& section, const std::string& key, const std::string& value) {
    echo[section.empty() ? "global" : section][key] = value;
  }

  std::optional<std::string> text(const std::string& section, const std::string& key) {
    Entry* e = find(section, key);
    if (e == nullptr) return std::nullopt;
    record(section, key, e->value);
    return e->value;
  }

  std::optional<double> number(const std::string& section, const std::string& key,
                               const std::function<bool(double)>& ok = nullptr, const char* rule = nullptr) {
    Entry* e = find(section, key);
    if (e == nullptr) return std::nullopt;
    double v = 0.0;
    if (!parse_double(e->value, v)) {
      fail(*e, section, key, "not a number");
      return std::nullopt;
    }
    if (ok && !ok(v)) {
      fail(*e, section, key, rule != nullptr ? rule : "out of range");
      return std::nullopt;
    }
    record(section, key, e->value);
    return v;
  }

  double number_or(const std::string& section, const std::string& key, double fallback,
                   const std::function<bool(double)>& ok = nullptr, const char* rule = nullptr) {
    return number(section, key, ok, rule).value_or(fallback);
  }

  std::optional<std::size_t> count(const std::string& section, const std::string& key, std::size_t min = 1) {
    Entry* e = find(section, key);
    if (e == nullptr) return std::nullopt;
    std::uint64_t v = 0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      fail(*e, section, key, "not a nonnegative integer");
      return std::nullopt;
    }
    if (v < min) {
      fail(*e, section, key, "must be at least " + std::to_string(min));
      return std::nullopt;
    }
    record(section, key, e->value);
    return static_cast<std::size_t>(v);
  }

  std::size_t count_or(const std::string& section, const std::string& key, std::size_t fallback, std::size_t min = 1) {
    return count(section, key, min).value_or(fallback);
  }

  std::optional<bool> flag(const std::string& section, const std::string& key) {
    Entry* e = find(section, key);
    if (e == nullptr) return std::nullopt;
    if (e->value == "true" || e->value == "1" || e->value == "yes") {
      record(section, key, "true");
      return true;
    }
    if (e->value == "false" || e->value == "0" || e->value == "no") {
      record(section, key, "false");
      return false;
    }
    fail(*e, section, key, "expected true or false");
    return std::nullopt;
  }

  std::optional<std::vector<double>> numbers(const std::string& section, const std::string& key) {
    Entry* e = find(section, key);
    if (e == nullptr) return std::nullopt;
    std::vector<double> out;
    std::string token;
    std::string cleaned = e->value;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    std::istringstream in(cleaned);
    while (in >> token) {
      double v = 0.0;
      if (!parse_double(token, v)) {
        fail(*e, section, key, "'" + token + "' is not a number");
        return std::nullopt;
      }
      out.push_back(v);
    }
    if (out.empty()) {
      fail(*e, section, key, "expected a list of numbers");
      return std::nullopt;
    }
    record(section, key, e->value);
    return out;
  }

  std::size_t line_of(const std::string& section, const std::string& key) {
    Entry* e = find(section, key);
    return e != nullptr ? e->line : 0;
  }

  static bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
  }
};

bool positive(double v) { return v > 0.0; }
bool nonnegative(double v) { return v >= 0.0; }

randkit::TailLaw read_law(Reader& r, const std::string& family_key, const std::string& fallback_family) {
  const std::string sec = "model";
  randkit::TailLaw law;
  const std::string name = r.text(sec, family_key).value_or(fallback_family);
  try {
    law.family = randkit::parse_tail_family(name);
  } catch (const Error&) {
    r.errors.push_back("line " + std::to_string(r.line_of(sec, family_key)) + ": [model] " + family_key + " = '" +
                       name + "': unknown law (pareto, symmetric_pareto, stable, lognormal, gaussian)");
    return law;
  }
  const bool needs_alpha = law.family == randkit::TailFamily::pareto ||
                           law.family == randkit::TailFamily::symmetric_pareto ||
                           law.family == randkit::TailFamily::stable;
  auto alpha = r.number(sec, "alpha", positive, "must be positive");
  if (needs_alpha && !alpha && r.line_of(sec, "alpha") == 0) r.missing(sec, "alpha");
  law.alpha = alpha.value_or(1.0);
  law.scale = r.number_or(sec, "scale", 1.0, positive, "must be positive");
  law.skew = r.number_or(sec, "skew", law.family == randkit::TailFamily::pareto ? 1.0 : 0.0,
                         [](double v) { return v >= -1.0 && v <= 1.0; }, "must lie in [-1, 1]");
  if (law.family == randkit::TailFamily::stable && law.alpha > 2.0) {
    r.errors.push_back("line " + std::to_string(r.line_of(sec, "alpha")) + ": [model] alpha: stable laws need alpha <= 2");
  }
  return law;
}

std::optional<Eigen::MatrixXd> read_matrix(Reader& r, const std::string& key, std::size_t dim) {
  auto values = r.numbers("model", key);
  if (!values) {
    if (r.line_of("model", key) == 0) r.missing("model", key);
    return std::nullopt;
  }
  const auto d = static_cast<Eigen::Index>(dim);
  if (values->size() == 1) return Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d) * values->front());
  if (values->size() != dim * dim) {
    r.errors.push_back("line " + std::to_string(r.line_of("model", key)) + ": [model] " + key + " needs 1 or " +
                       std::to_string(dim * dim) + " entries for dim = " + std::to_string(dim));
    return std::nullopt;
  }
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = (*values)[static_cast<std::size_t>(i * d + j)];
  }
  return m;
}

std::vector<models::AngularAtom> read_atoms(Reader& r, std::size_t dim) {
  std::vector<models::AngularAtom> atoms;
  auto raw = r.text("model", "atoms");
  if (!raw) return atoms;
  const std::size_t line = r.line_of("model", "atoms");
  std::istringstream groups(*raw);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::istringstream in(group);
    std::vector<double> v;
    double x = 0.0;
    while (in >> x) v.push_back(x);
    if (v.size() != dim + 1) {
      r.errors.push_back("line " + std::to_string(line) + ": [model] atoms: each atom needs " + std::to_string(dim) +
                         " coordinates and a weight");
      return {};
    }
    models::AngularAtom a;
    a.direction = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(dim));
    a.weight = v.back();
    if (!(a.direction.norm() > 0.0) || !(a.weight >= 0.0)) {
      r.errors.push_back("line " + std::to_string(line) + ": [model] atoms: directions must be non-zero and weights >= 0");
      return {};
    }
    atoms.push_back(std::move(a));
  }
  return atoms;
}

std::optional<models::ModelSpec> read_model(Reader& r) {
  const std::string sec = "model";
  if (r.sections.find(sec) == r.sections.end()) {
    r.errors.push_back("missing required section [model]");
    return std::nullopt;
  }
  auto type = r.text(sec, "type");
  if (!type) {
    r.missing(sec, "type");
    return std::nullopt;
  }
  const std::size_t errors_before = r.errors.size();
  std::optional<models::ModelSpec> spec;
  if (*type == "var1") {
    const std::size_t dim = r.count_or(sec, "dim", 1);
    models::Var1Spec v;
    auto a = read_matrix(r, "a", dim);
    v.innovation.law = read_law(r, "innovation", "pareto");
    v.innovation.atoms = read_atoms(r, dim);
    if (a) v.a = *a;
    spec = v;
  } else if (*type == "kesten") {
    const std::size_t dim = r.count_or(sec, "dim", 1);
    models::KestenSpec k;
    auto base = read_matrix(r, "base", dim);
    if (base) k.base = *base;
    const std::string mult = r.text(sec, "multiplier").value_or("fixed");
    if (mult == "fixed") {
      k.multiplier = models::MultiplierLaw::fixed;
    } else if (mult == "lognormal") {
      k.multiplier = models::MultiplierLaw::lognormal;
      k.log_mu = r.number_or(sec, "log_mu", 0.0);
      k.log_sigma2 = r.number_or(sec, "log_sigma2", 0.0, positive, "must be positive");
      if (r.line_of(sec, "log_sigma2") == 0) r.missing(sec, "log_sigma2");
    } else if (mult == "uniform") {
      k.multiplier = models::MultiplierLaw::uniform;
      auto lo = r.number(sec, "low");
      auto hi = r.number(sec, "high");
      if (!lo && r.line_of(sec, "low") == 0) r.missing(sec, "low");
      if (!hi && r.line_of(sec, "high") == 0) r.missing(sec, "high");
      k.low = lo.value_or(0.0);
      k.high = hi.value_or(1.0);
    } else {
      r.errors.push_back("line " + std::to_string(r.line_of(sec, "multiplier")) + ": [model] multiplier = '" + mult +
                         "': expected fixed, lognormal or uniform");
    }
    k.b_law = read_law(r, "b_law", "pareto");
    k.alpha_hint = r.number(sec, "alpha_hint", positive, "must be positive");
    k.pilot_length = r.count_or(sec, "pilot_length", k.pilot_length, 1000);
    k.pilot_quantile = r.number_or(sec, "pilot_quantile", k.pilot_quantile,
                                   [](double q) { return q > 0.0 && q < 1.0; }, "must lie in (0, 1)");
    spec = k;
  } else if (*type == "garch11") {
    models::Garch11Spec g;
    auto a0 = r.number(sec, "alpha0", positive, "must be positive");
    auto a1 = r.number(sec, "alpha1", positive, "must be positive");
    auto b1 = r.number(sec, "beta1", positive, "must be positive");
    for (const char* key : {"alpha0", "alpha1", "beta1"}) {
      if (r.line_of(sec, key) == 0) r.missing(sec, key);
    }
    g.alpha0 = a0.value_or(g.alpha0);
    g.alpha1 = a1.value_or(g.alpha1);
    g.beta1 = b1.value_or(g.beta1);
    const std::string z = r.text(sec, "z_law").value_or("gaussian");
    if (z == "gaussian") {
      g.z_law = models::GarchNoise::gaussian;
    } else if (z == "uniform") {
      g.z_law = models::GarchNoise::uniform;
    } else {
      r.errors.push_back("line " + std::to_string(r.line_of(sec, "z_law")) + ": [model] z_law = '" + z +
                         "': expected gaussian or uniform");
    }
    const std::string obs = r.text(sec, "observable").value_or("returns");
    if (obs == "returns") {
      g.observable = models::GarchObservable::returns;
    } else if (obs == "volatility_and_returns") {
      g.observable = models::GarchObservable::volatility_and_returns;
    } else {
      r.errors.push_back("line " + std::to_string(r.line_of(sec, "observable")) + ": [model] observable = '" + obs +
                         "': expected returns or volatility_and_returns");
    }
    spec = g;
  } else {
    r.errors.push_back("line " + std::to_string(r.line_of(sec, "type")) + ": [model] type = '" + *type +
                       "': expected var1, kesten or garch11");
    return std::nullopt;
  }
  if (r.errors.size() == errors_before) {
    try {
      models::validate(*spec);
    } catch (const Error& e) {
      r.errors.push_back("[model]: " + std::string(e.what()));
    }
  }
  return spec;
}

}  // namespace

std::string_view to_string(Command command) {
  for (const auto& [c, name] : command_table()) {
    if (c == command) return name;
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  for (const auto& [c, n] : command_table()) {
    if (n == name) return c;
  }
  return std::nullopt;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : command_table()) out.push_back(entry.second);
    return out;
  }();
  return names;
}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid config:";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ParameterError(join_problems(problems)), problems_(std::move(problems)) {}

ExperimentConfig parse_config(std::string_view text) {
  Reader r;
  r.sections[""];
  std::string current;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        r.errors.push_back("line " + std::to_string(line_no) + ": malformed section header");
        continue;
      }
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      r.sections[current];
      r.section_lines.emplace(current, line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      r.errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) {
      r.errors.push_back("line " + std::to_string(line_no) + ": empty key");
      continue;
    }
    Section& sec = r.sections[current];
    if (auto it = sec.find(key); it != sec.end()) {
      r.errors.push_back("line " + std::to_string(line_no) + ": duplicate key " + Reader::label(current, key) +
                         " (first defined on line " + std::to_string(it->second.line) + ")");
      continue;
    }
    sec.emplace(key, Entry{value, line_no, false});
  }

  static const std::set<std::string> known_sections{"",           "model",        "simulate",     "cluster-index",
                                                    "ldp-scan",   "stable-check", "drift-check",  "regen-check",
                                                    "report"};
  for (const auto& [name, lines] : r.section_lines) {
    if (known_sections.count(name) == 0) {
      r.errors.push_back("line " + std::to_string(lines) + ": unknown section [" + name + "]");
      r.sections.erase(name);
    }
  }

  ExperimentConfig cfg;
  if (auto cmd = r.text("", "command")) {
    cfg.command = parse_command(*cmd);
    if (!cfg.command) {
      r.errors.push_back("line " + std::to_string(r.line_of("", "command")) + ": command = '" + *cmd +
                         "': unknown command");
    }
  }
  if (auto seed = r.count("", "seed", 0)) {
    cfg.seed = *seed;
  } else if (r.line_of("", "seed") == 0) {
    r.missing("", "seed");
  }
  cfg.threads = r.count_or("", "threads", 0);
  cfg.output_dir = r.text("", "output_dir").value_or("");

  if (auto spec = read_model(r)) cfg.model = *spec;

  {
    const std::string s = "simulate";
    cfg.simulate.n = r.count_or(s, "n", cfg.simulate.n);
    cfg.simulate.burn_in = r.count(s, "burn_in", 0);
  }
  {
    const std::string s = "cluster-index";
    cfg.cluster.horizon = r.count(s, "horizon", 0);
    cfg.cluster.replicas = r.count_or(s, "replicas", cfg.cluster.replicas, 100);
    cfg.cluster.directions = r.count_or(s, "directions", 0);
    cfg.cluster.telescoping_k = r.count_or(s, "telescoping_k", 0);
    cfg.cluster.closed_form = r.flag(s, "closed_form").value_or(true);
    cfg.cluster.extremal = r.flag(s, "extremal").value_or(true);
  }
  {
    const std::string s = "ldp-scan";
    cfg.ldp.n = r.count_or(s, "n", cfg.ldp.n);
    cfg.ldp.replicas = r.count_or(s, "replicas", cfg.ldp.replicas);
    cfg.ldp.grid_size = r.count_or(s, "grid_size", cfg.ldp.grid_size);
    cfg.ldp.epsilon = r.number_or(s, "epsilon", cfg.ldp.epsilon, positive, "must be positive");
    cfg.ldp.c_factor = r.number_or(s, "c_factor", cfg.ldp.c_factor, [](double v) { return v > 1.0; }, "must exceed 1");
    cfg.ldp.theta = r.numbers(s, "theta").value_or(std::vector<double>{});
    cfg.ldp.target = r.number(s, "target", nonnegative, "must be nonnegative");
    cfg.ldp.band = r.number(s, "band", positive, "must be positive");
    cfg.ldp.target_replicas = r.count_or(s, "target_replicas", cfg.ldp.target_replicas, 100);
  }
  {
    const std::string s = "stable-check";
    cfg.stable.n = r.count_or(s, "n", cfg.stable.n);
    cfg.stable.replicas = r.count_or(s, "replicas", cfg.stable.replicas, 2);
    cfg.stable.grid_points = r.count_or(s, "grid_points", cfg.stable.grid_points, 2);
    cfg.stable.x_max = r.number_or(s, "x_max", cfg.stable.x_max, positive, "must be positive");
    cfg.stable.symmetric = r.flag(s, "symmetric").value_or(false);
    cfg.stable.directions = r.count_or(s, "directions", 0);
    cfg.stable.b_replicas = r.count_or(s, "b_replicas", cfg.stable.b_replicas, 100);
  }
  {
    const std::string s = "drift-check";
    cfg.drift.p = r.number_or(s, "p", cfg.drift.p, positive, "must be positive");
    cfg.drift.m = r.count_or(s, "m", cfg.drift.m);
    if (auto g = r.numbers(s, "grid")) {
      if (g->size() < 2 || std::any_of(g->begin(), g->end(), [](double v) { return !(v > 0.0); })) {
        r.errors.push_back("line " + std::to_string(r.line_of(s, "grid")) +
                           ": [drift-check] grid needs at least two positive values");
      } else {
        cfg.drift.grid = *g;
      }
    }
    cfg.drift.replicas_per_state = r.count_or(s, "replicas_per_state", cfg.drift.replicas_per_state, 2);
  }
  {
    const std::string s = "regen-check";
    cfg.regen.n = r.count_or(s, "n", cfg.regen.n);
    cfg.regen.radius = r.number_or(s, "radius", cfg.regen.radius, positive, "must be positive");
    cfg.regen.atomized = r.flag(s, "atomized").value_or(false);
    cfg.regen.spectral_k = r.count_or(s, "spectral_k", 0);
    cfg.regen.batch_size = r.count_or(s, "batch_size", 0);
  }

  for (const auto& [sname, sec] : r.sections) {
    for (const auto& [key, entry] : sec) {
      if (!entry.used) {
        r.errors.push_back("line " + std::to_string(entry.line) + ": unknown key " + Reader::label(sname, key));
      }
    }
  }
  if (!r.errors.empty()) {
    // Report in file order; entries without a line go last.
    std::stable_sort(r.errors.begin(), r.errors.end(), [](const std::string& a, const std::string& b) {
      auto line_of = [](const std::string& s) -> std::size_t {
        if (s.rfind("line ", 0) != 0) return static_cast<std::size_t>(-1);
        return static_cast<std::size_t>(std::strtoull(s.c_str() + 5, nullptr, 10));
      };
      return line_of(a) < line_of(b);
    });
    throw ConfigError(std::move(r.errors));
  }
  cfg.echo = std::move(r.echo);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace heavytail::cli
