#include "efsgd/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace efsgd {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string item; in >> item;) out.push_back(item);
  return out;
}

template <class T>
std::optional<T> parse_number(const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

double parse_double_or_throw(const std::string& text, const std::string& what) {
  const auto v = parse_number<double>(text);
  if (!v) throw std::invalid_argument(what + ": '" + text + "' is not a number");
  return *v;
}

std::size_t parse_size_or_throw(const std::string& text, const std::string& what) {
  const auto v = parse_number<std::size_t>(text);
  if (!v) throw std::invalid_argument(what + ": '" + text + "' is not a non-negative integer");
  return *v;
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"problem", {"kind", "dim", "lambda_min", "lambda_max", "b_scale", "sigma", "budget", "seed"}},
      {"schedule", {"spec"}},
      {"compressor", {"spec"}},
      {"server_compressor", {"spec"}},
      {"run", {"workers", "rounds", "x0", "seed", "ensemble", "log", "threads", "jobs"}},
      {"output", {"csv", "summary", "x_columns"}},
      {"grid", {"schedule", "compressor", "delta", "workers", "rounds"}},
  };
  return keys;
}

// Parsed INI tree plus the source line of every section and key.
class Document {
 public:
  Document(const std::string& text, std::string source, bool allow_grid) : source_(std::move(source)) {
    std::istringstream in(text);
    try {
      pt::read_ini(in, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(source_, e.line(), "", e.message());
    }
    index_lines(text);
    for (const auto& [section, body] : tree_) {
      const auto it = allowed_keys().find(section);
      if (it == allowed_keys().end() || (section == "grid" && !allow_grid)) {
        throw ConfigError(source_, line_of(section, ""), section, "unknown section [" + section + "]");
      }
      for (const auto& [key, value] : body) {
        if (!it->second.count(key)) {
          throw ConfigError(source_, line_of(section, key), section + "." + key, "unknown key");
        }
      }
    }
  }

  bool has_section(const std::string& section) const { return tree_.find(section) != tree_.not_found(); }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto s = tree_.find(section);
    if (s == tree_.not_found()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.not_found()) return std::nullopt;
    return trim(k->second.data());
  }

  std::string require(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v || v->empty()) throw error(section, key, "required value missing");
    return *v;
  }

  ConfigError error(const std::string& section, const std::string& key, const std::string& message) const {
    return ConfigError(source_, line_of(section, key), section + "." + key, message);
  }

  // Runs `parse` on the value and maps any failure to a field diagnostic.
  template <class F>
  auto field(const std::string& section, const std::string& key, F&& parse) const {
    const std::string value = require(section, key);
    try {
      return parse(value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw error(section, key, e.what());
    }
  }

  template <class T>
  T number(const std::string& section, const std::string& key, T fallback) const {
    if (!get(section, key)) return fallback;
    return field(section, key, [&](const std::string& v) {
      const auto parsed = parse_number<T>(v);
      if (!parsed) throw std::invalid_argument("'" + v + "' is not a valid number");
      return *parsed;
    });
  }

  bool flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!get(section, key)) return fallback;
    return field(section, key, [](const std::string& v) {
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      throw std::invalid_argument("expected true or false, got '" + v + "'");
    });
  }

  const std::string& source() const { return source_; }

 private:
  void index_lines(const std::string& text) {
    std::istringstream in(text);
    std::string section;
    std::size_t n = 0;
    for (std::string raw; std::getline(in, raw);) {
      ++n;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == ';' || line[0] == '#') continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        lines_.emplace(section + ".", n);
        continue;
      }
      const auto eq = line.find('=');
      if (eq != std::string::npos) lines_.emplace(section + "." + trim(std::string_view(line).substr(0, eq)), n);
    }
  }

  std::size_t line_of(const std::string& section, const std::string& key) const {
    auto it = lines_.find(section + "." + key);
    if (it == lines_.end()) it = lines_.find(section + ".");
    return it == lines_.end() ? 0 : it->second;
  }

  std::string source_;
  pt::ptree tree_;
  std::map<std::string, std::size_t> lines_;
};

Problem build_problem(const Document& doc) {
  const std::string kind = doc.require("problem", "kind");
  if (kind != "linear_quarter" && kind != "quadratic" && kind != "sigmoid" && kind != "synthetic_quadratic") {
    throw doc.error("problem", "kind",
                    "unknown problem '" + kind + "' (expected linear_quarter, quadratic, sigmoid, synthetic_quadratic)");
  }
  if (kind != "synthetic_quadratic") {
    for (const char* key : {"dim", "lambda_min", "lambda_max", "b_scale", "sigma", "budget", "seed"}) {
      if (doc.get("problem", key)) throw doc.error("problem", key, "only used by kind = synthetic_quadratic");
    }
  }
  if (kind == "linear_quarter") return Problem::linear_quarter();
  if (kind == "quadratic") return Problem::quadratic();
  if (kind == "sigmoid") return Problem::sigmoid();
  if (kind == "synthetic_quadratic") {
    SyntheticQuadraticSpec spec;
    spec.dim = doc.number<std::size_t>("problem", "dim", spec.dim);
    spec.lambda_min = doc.number<double>("problem", "lambda_min", spec.lambda_min);
    spec.lambda_max = doc.number<double>("problem", "lambda_max", spec.lambda_max);
    spec.b_scale = doc.number<double>("problem", "b_scale", spec.b_scale);
    spec.sigma = doc.number<double>("problem", "sigma", spec.sigma);
    spec.budget = doc.number<double>("problem", "budget", spec.budget);
    spec.seed = doc.number<std::uint64_t>("problem", "seed", spec.seed);
    try {
      return Problem::synthetic_quadratic(spec);
    } catch (const std::exception& e) {
      throw doc.error("problem", "", e.what());
    }
  }
  throw std::logic_error("unreachable problem kind");
}

ParamVector parse_x0(const std::string& text, std::size_t dim) {
  const std::vector<std::string> parts = split(text, ',');
  if (parts.size() == 1) return ParamVector::filled(dim, parse_double_or_throw(parts[0], "x0"));
  if (parts.size() != dim) {
    throw std::invalid_argument("x0 has " + std::to_string(parts.size()) + " entries, problem dimension is " +
                                std::to_string(dim));
  }
  std::vector<double> values;
  for (const std::string& p : parts) values.push_back(parse_double_or_throw(p, "x0"));
  return ParamVector(std::move(values));
}

Compressor with_delta(const Compressor& c, double delta) { return Compressor(c.kind(), delta); }

ExperimentConfig build_experiment(const Document& doc) {
  const Problem problem = build_problem(doc);
  const int workers = doc.number<int>("run", "workers", 1);
  if (workers < 1) throw doc.error("run", "workers", "must be >= 1");
  const auto rounds = doc.field("run", "rounds", [](const std::string& v) {
    const auto parsed = parse_number<std::int64_t>(v);
    if (!parsed || *parsed < 1) throw std::invalid_argument("must be an integer >= 1");
    return *parsed;
  });

  const std::string schedule_spec = doc.require("schedule", "spec");
  const std::string compressor_spec = doc.require("compressor", "spec");
  std::optional<std::string> server_spec;
  if (doc.has_section("server_compressor")) server_spec = doc.require("server_compressor", "spec");

  const Schedule schedule =
      doc.field("schedule", "spec", [&](const std::string& v) { return parse_schedule(v, workers, rounds); });
  const Compressor worker_c =
      doc.field("compressor", "spec", [&](const std::string& v) { return parse_compressor(v, problem.dim()); });
  const Compressor server_c =
      server_spec ? doc.field("server_compressor", "spec",
                              [&](const std::string& v) { return parse_compressor(v, problem.dim()); })
                  : worker_c;

  ParamVector x0 = doc.get("run", "x0") ? doc.field("run", "x0", [&](const std::string& v) {
    return parse_x0(v, problem.dim());
  })
                                        : ParamVector(problem.dim());

  LogMode log_mode = LogMode::kThin;
  if (auto v = doc.get("run", "log")) {
    if (*v == "full") {
      log_mode = LogMode::kFull;
    } else if (*v != "thin") {
      throw doc.error("run", "log", "expected full or thin, got '" + *v + "'");
    }
  }

  ExperimentConfig cfg{RunConfig{problem, schedule, worker_c, server_c, workers, rounds, std::move(x0),
                                 doc.number<std::uint64_t>("run", "seed", 0), log_mode,
                                 doc.number<int>("run", "threads", 1)},
                       1, 1, {}, schedule_spec, compressor_spec, server_spec};
  if (cfg.run.threads < 1) throw doc.error("run", "threads", "must be >= 1");
  cfg.ensemble = doc.number<int>("run", "ensemble", 1);
  if (cfg.ensemble < 1) throw doc.error("run", "ensemble", "must be >= 1");
  cfg.jobs = doc.number<int>("run", "jobs", 1);
  if (cfg.jobs < 1) throw doc.error("run", "jobs", "must be >= 1");
  cfg.output.csv = doc.get("output", "csv").value_or("");
  cfg.output.summary = doc.get("output", "summary").value_or("");
  cfg.output.x_columns = doc.flag("output", "x_columns", false);
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& field,
                         const std::string& message)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) +
                         (field.empty() ? std::string() : ": " + field) + ": " + message),
      line_(line),
      field_(field) {}

Schedule parse_schedule(const std::string& spec, int workers, std::int64_t rounds) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto no_arg = [&] {
    if (colon != std::string::npos) throw std::invalid_argument("schedule '" + kind + "' takes no parameter");
  };
  if (kind == "constant") return Schedule::constant(parse_double_or_throw(arg, "constant step size"));
  if (kind == "counterex1") return no_arg(), Schedule::counter_ex1();
  if (kind == "counterex2") return no_arg(), Schedule::counter_ex2();
  if (kind == "counterex3") return no_arg(), Schedule::counter_ex3();
  if (kind == "corollary2") {
    if (colon == std::string::npos) return Schedule::corollary2(workers, rounds);
    const std::vector<std::string> parts = split(arg, ':');
    if (parts.size() != 2) throw std::invalid_argument("corollary2 expects corollary2 or corollary2:M:T");
    return Schedule::corollary2(static_cast<int>(parse_size_or_throw(parts[0], "corollary2 M")),
                                static_cast<std::int64_t>(parse_size_or_throw(parts[1], "corollary2 T")));
  }
  if (kind == "custom") {
    std::vector<double> table;
    for (const std::string& p : split(arg, ';')) table.push_back(parse_double_or_throw(p, "custom step size"));
    return Schedule::custom(std::move(table));
  }
  throw std::invalid_argument("unknown schedule '" + kind +
                              "' (expected constant, counterex1, counterex2, counterex3, corollary2, custom)");
}

Compressor parse_compressor(const std::string& spec, std::size_t dim) {
  const auto at = spec.find('@');
  const std::string body = spec.substr(0, at);
  std::optional<double> delta;
  if (at != std::string::npos) delta = parse_double_or_throw(spec.substr(at + 1), "compressor delta");
  const auto colon = body.find(':');
  const std::string kind = body.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : body.substr(colon + 1);
  auto need_arg = [&] {
    if (arg.empty()) throw std::invalid_argument("compressor '" + kind + "' needs a parameter, e.g. " + kind + ":2");
  };

  std::optional<Compressor::Kind> parsed;
  if (kind == "scaling") {
    need_arg();
    parsed = Compressor::Scaling{parse_double_or_throw(arg, "scaling factor")};
  } else if (kind == "topk") {
    need_arg();
    parsed = Compressor::TopK{parse_size_or_throw(arg, "topk k")};
  } else if (kind == "randk") {
    need_arg();
    parsed = Compressor::RandomSparsify{parse_size_or_throw(arg, "randk k"), false};
  } else if (kind == "randk-unbiased") {
    need_arg();
    parsed = Compressor::RandomSparsify{parse_size_or_throw(arg, "randk k"), true};
  } else if (kind == "identity") {
    if (!arg.empty()) throw std::invalid_argument("identity takes no parameter");
    parsed = Compressor::Identity{};
  } else {
    throw std::invalid_argument("unknown compressor '" + kind +
                                "' (expected scaling, topk, randk, randk-unbiased, identity)");
  }

  std::visit(
      [dim](const auto& k) {
        if constexpr (requires { k.k; }) {
          if (k.k > dim) {
            throw std::invalid_argument("k = " + std::to_string(k.k) + " exceeds the dimension " + std::to_string(dim));
          }
        }
      },
      *parsed);

  // Probe with a valid delta to get the admissible range for this kind.
  const Compressor probe(*parsed, 1.0);
  const double admissible = probe.max_admissible_delta(dim);
  const bool is_identity = std::holds_alternative<Compressor::Identity>(*parsed);
  const double chosen = delta.value_or(is_identity ? 0.5 : admissible);
  if (!(chosen > 0.0 && chosen <= 1.0)) {
    throw std::invalid_argument("compressor delta must lie in (0, 1], got " + std::to_string(chosen) +
                                (delta ? "" : " (no valid delta exists for this compressor on this dimension)"));
  }
  if (chosen > admissible * (1.0 + 1e-12)) {
    throw std::invalid_argument("declared delta " + std::to_string(chosen) + " exceeds the admissible " +
                                std::to_string(admissible) + " for " + kind + " on dimension " + std::to_string(dim));
  }
  return Compressor(*parsed, chosen);
}

ExperimentConfig parse_experiment(const std::string& text, const std::string& source) {
  const Document doc(text, source, false);
  return build_experiment(doc);
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return parse_experiment(read_file(path), path.string());
}

SweepConfig parse_sweep(const std::string& text, const std::string& source) {
  const Document doc(text, source, true);
  SweepConfig cfg{build_experiment(doc), {}};
  if (auto v = doc.get("grid", "schedule")) cfg.grid.schedules = split_ws(*v);
  if (auto v = doc.get("grid", "compressor")) cfg.grid.compressors = split_ws(*v);
  if (auto v = doc.get("grid", "delta")) {
    cfg.grid.deltas = doc.field("grid", "delta", [](const std::string& s) {
      std::vector<double> out;
      for (const std::string& p : split_ws(s)) out.push_back(parse_double_or_throw(p, "delta"));
      return out;
    });
  }
  if (auto v = doc.get("grid", "workers")) {
    cfg.grid.workers = doc.field("grid", "workers", [](const std::string& s) {
      std::vector<int> out;
      for (const std::string& p : split_ws(s)) {
        const auto m = parse_number<int>(p);
        if (!m || *m < 1) throw std::invalid_argument("'" + p + "' is not an integer >= 1");
        out.push_back(*m);
      }
      return out;
    });
  }
  if (auto v = doc.get("grid", "rounds")) {
    cfg.grid.rounds = doc.field("grid", "rounds", [](const std::string& s) {
      std::vector<std::int64_t> out;
      for (const std::string& p : split_ws(s)) {
        const auto t = parse_number<std::int64_t>(p);
        if (!t || *t < 1) throw std::invalid_argument("'" + p + "' is not an integer >= 1");
        out.push_back(*t);
      }
      return out;
    });
  }
  return cfg;
}

SweepConfig load_sweep(const std::filesystem::path& path) { return parse_sweep(read_file(path), path.string()); }

ExperimentConfig with_grid_point(const ExperimentConfig& base, const std::string& schedule,
                                 const std::string& compressor, std::optional<double> delta, int workers,
                                 std::int64_t rounds) {
  ExperimentConfig cfg = base;
  const std::size_t dim = base.run.problem.dim();
  cfg.run.workers = workers;
  cfg.run.rounds = rounds;
  cfg.run.schedule = parse_schedule(schedule, workers, rounds);
  cfg.schedule_spec = schedule;
  cfg.compressor_spec = compressor;
  cfg.run.worker_compressor = parse_compressor(compressor, dim);
  cfg.run.server_compressor =
      base.server_compressor_spec ? parse_compressor(*base.server_compressor_spec, dim) : cfg.run.worker_compressor;
  if (delta) {
    cfg.run.worker_compressor = with_delta(cfg.run.worker_compressor, *delta);
    cfg.run.server_compressor = with_delta(cfg.run.server_compressor, *delta);
  }
  return cfg;
}

}  // namespace efsgd
