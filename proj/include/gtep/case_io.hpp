#pragma once

// YAML case and plan files.  Every schema problem is collected with its line
// and column before anything is returned; validation violations are mapped
// back to the nearest node of the file.

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gtep/benders.hpp"
#include "gtep/model.hpp"

namespace gtep {

inline constexpr const char* kCaseSchema = "gtep-case";
inline constexpr const char* kPlanSchema = "gtep-plan";
inline constexpr int kSchemaVersion = 1;

struct Diagnostic {
  std::string path;
  int line = 0;  // 1-based, 0 if unknown
  int column = 0;
  std::string message;

  std::string to_string(const std::string& source = "") const {
    std::string out = source;
    if (line > 0) out += (out.empty() ? "" : ":") + std::to_string(line) + ":" + std::to_string(column);
    if (!out.empty()) out += ": ";
    if (!path.empty()) out += path + ": ";
    return out + message;
  }
};

class CaseError : public DataError {
 public:
  CaseError(std::string source, std::vector<Diagnostic> diags)
      : DataError(render(source, diags)), source_(std::move(source)), diags_(std::move(diags)) {}
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }
  const std::string& source() const { return source_; }

 private:
  static std::string render(const std::string& source, const std::vector<Diagnostic>& d) {
    std::string out;
    for (const auto& x : d) out += x.to_string(source) + "\n";
    return out;
  }
  std::string source_;
  std::vector<Diagnostic> diags_;
};

struct LoadedCase {
  PlanningCase planning;
  RunConfig config;
};

namespace detail {

class YamlReader {
 public:
  std::vector<Diagnostic> diags;
  std::map<std::string, YAML::Mark> marks;

  void error(const YAML::Node& at, const std::string& path, const std::string& msg) {
    Diagnostic d{path, 0, 0, msg};
    if (at.IsDefined() && at.Mark().line >= 0) {
      d.line = at.Mark().line + 1;
      d.column = at.Mark().column + 1;
    }
    diags.push_back(std::move(d));
  }

  void remember(const std::string& path, const YAML::Node& n) {
    if (n.IsDefined()) marks[path] = n.Mark();
  }

  // Checks that `n` is a map with keys drawn from `allowed`.
  bool map(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
    remember(path, n);
    if (!n.IsMap()) {
      error(n, path, "expected a mapping");
      return false;
    }
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) error(kv.first, join(path, key), "unknown key '" + key + "'");
    }
    return true;
  }

  bool seq(const YAML::Node& n, const std::string& path) {
    remember(path, n);
    if (!n.IsSequence()) {
      error(n, path, "expected a list");
      return false;
    }
    return true;
  }

  template <class T>
  T get(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback,
        bool required = false) {
    const YAML::Node n = parent[key];
    const std::string p = join(path, key);
    if (!n.IsDefined() || n.IsNull()) {
      if (required) error(parent, p, "missing required key '" + key + "'");
      return fallback;
    }
    remember(p, n);
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "not a scalar");
      return n.as<T>();
    } catch (const YAML::Exception&) {
      error(n, p, std::string("expected ") + type_name<T>());
      return fallback;
    }
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& path) {
    std::vector<double> out;
    if (!seq(n, path)) return out;
    for (std::size_t i = 0; i < n.size(); ++i) {
      try {
        out.push_back(n[i].as<double>());
      } catch (const YAML::Exception&) {
        error(n[i], path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(0.0);
      }
    }
    return out;
  }

  std::vector<std::vector<double>> matrix(const YAML::Node& n, const std::string& path) {
    std::vector<std::vector<double>> out;
    if (!seq(n, path)) return out;
    for (std::size_t i = 0; i < n.size(); ++i)
      out.push_back(numbers(n[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<std::string> strings(const YAML::Node& n, const std::string& path) {
    std::vector<std::string> out;
    if (!n.IsDefined() || n.IsNull()) return out;
    if (!seq(n, path)) return out;
    for (std::size_t i = 0; i < n.size(); ++i) {
      try {
        out.push_back(n[i].as<std::string>());
      } catch (const YAML::Exception&) {
        error(n[i], path + "[" + std::to_string(i) + "]", "expected a string");
      }
    }
    return out;
  }

  template <class E>
  E choice(const YAML::Node& parent, const std::string& key, const std::string& path,
           const std::map<std::string, E>& options, E fallback) {
    const YAML::Node n = parent[key];
    if (!n.IsDefined()) return fallback;
    const std::string v = get<std::string>(parent, key, path, "");
    const auto it = options.find(v);
    if (it != options.end()) return it->second;
    std::string list;
    for (const auto& [name, _] : options) list += (list.empty() ? "" : ", ") + name;
    error(n, join(path, key), "'" + v + "' is not one of: " + list);
    return fallback;
  }

  // Line of the deepest remembered node that prefixes `path`.
  Diagnostic locate(const std::string& path, const std::string& message) const {
    Diagnostic d{path, 0, 0, message};
    std::string p = path;
    while (!p.empty()) {
      const auto it = marks.find(p);
      if (it != marks.end()) {
        d.line = it->second.line + 1;
        d.column = it->second.column + 1;
        break;
      }
      const auto cut = p.find_last_of(".[");
      if (cut == std::string::npos) break;
      p.resize(cut);
    }
    return d;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, int>) return "an integer";
    if constexpr (std::is_same_v<T, std::uint64_t>) return "a non-negative integer";
    if constexpr (std::is_same_v<T, double>) return "a number";
    if constexpr (std::is_same_v<T, bool>) return "true or false";
    return "a string";
  }
};

inline const std::map<std::string, AssetStatus> kStatus{{"existing", AssetStatus::kExisting},
                                                        {"candidate", AssetStatus::kCandidate}};
inline const std::map<std::string, CircuitType> kCircuitType{{"line", CircuitType::kLine},
                                                             {"transformer", CircuitType::kTransformer}};
inline const std::map<std::string, ProjectKind> kProjectKind{{"hydro", ProjectKind::kHydro},
                                                             {"thermal", ProjectKind::kThermal},
                                                             {"renewable", ProjectKind::kRenewable},
                                                             {"circuit", ProjectKind::kCircuit}};
inline const std::map<std::string, CostBasis> kCostBasis{{"per_kw", CostBasis::kPerKw},
                                                         {"total", CostBasis::kTotal}};
inline const std::map<std::string, LogicKind> kLogicKind{{"exclusive", LogicKind::kExclusive},
                                                         {"associated", LogicKind::kAssociated},
                                                         {"precedence", LogicKind::kPrecedence}};

template <class E>
std::string name_of(const std::map<std::string, E>& options, E value) {
  for (const auto& [name, v] : options)
    if (v == value) return name;
  return "?";
}

inline void check_schema(YamlReader& r, const YAML::Node& root, const char* schema) {
  const std::string tag = r.get<std::string>(root, "schema", "", "", true);
  if (!tag.empty() && tag != schema)
    r.error(root["schema"], "schema", "expected schema '" + std::string(schema) + "', got '" + tag + "'");
  const int version = r.get<int>(root, "version", "", 0, true);
  if (root["version"].IsDefined() && version != kSchemaVersion)
    r.error(root["version"], "version",
            "unsupported schema version " + std::to_string(version) + " (expected " +
                std::to_string(kSchemaVersion) + ")");
}

inline YAML::Node parse_yaml(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw CaseError(source, {{"", e.mark.line + 1, e.mark.column + 1, e.msg}});
  }
}

}  // namespace detail

inline LoadedCase parse_case(const std::string& text, const std::string& source = "") {
  using detail::YamlReader;
  const YAML::Node root = detail::parse_yaml(text, source);
  YamlReader r;
  LoadedCase out;
  PlanningCase& c = out.planning;
  if (!r.map(root, "", {"schema", "version", "name", "horizon", "deficit_cost", "buses", "circuits",
                        "hydros", "thermals", "renewables", "demand", "candidates", "logic",
                        "inflow", "run"}))
    throw CaseError(source, r.diags);
  detail::check_schema(r, root, kCaseSchema);
  c.name = r.get<std::string>(root, "name", "", "");
  c.deficit_cost = r.get<double>(root, "deficit_cost", "", c.deficit_cost);

  const YAML::Node hz = root["horizon"];
  if (!hz.IsDefined()) {
    r.error(root, "horizon", "missing required key 'horizon'");
  } else if (r.map(hz, "horizon", {"stages", "scenarios", "openings", "stage_hours",
                                   "discount_rate", "start_year", "stages_per_year"})) {
    c.stages = r.get<int>(hz, "stages", "horizon", 1, true);
    c.scenarios = r.get<int>(hz, "scenarios", "horizon", 1);
    c.openings = r.get<int>(hz, "openings", "horizon", 1);
    c.stage_hours = r.get<double>(hz, "stage_hours", "horizon", c.stage_hours);
    c.stage_discount_rate = r.get<double>(hz, "discount_rate", "horizon", 0.0);
    c.start_year = r.get<int>(hz, "start_year", "horizon", 1);
    c.stages_per_year = r.get<int>(hz, "stages_per_year", "horizon", 1);
  }

  auto each = [&](const char* key, auto&& fn) {
    const YAML::Node list = root[key];
    if (!list.IsDefined() || list.IsNull()) return;
    if (!r.seq(list, key)) return;
    for (std::size_t i = 0; i < list.size(); ++i)
      fn(list[i], std::string(key) + "[" + std::to_string(i) + "]");
  };

  each("buses", [&](const YAML::Node& n, const std::string& p) {
    if (!r.map(n, p, {"id", "name", "voltage_kv"})) return;
    Bus b;
    b.id = r.get<std::string>(n, "id", p, "", true);
    b.name = r.get<std::string>(n, "name", p, "");
    b.voltage_kv = r.get<double>(n, "voltage_kv", p, 0.0);
    c.buses.push_back(b);
  });
  each("circuits", [&](const YAML::Node& n, const std::string& p) {
    if (!r.map(n, p, {"id", "from", "to", "susceptance", "rating", "status", "type"})) return;
    Circuit k;
    k.id = r.get<std::string>(n, "id", p, "", true);
    k.from_bus = r.get<std::string>(n, "from", p, "", true);
    k.to_bus = r.get<std::string>(n, "to", p, "", true);
    k.susceptance = r.get<double>(n, "susceptance", p, 0.0, true);
    k.rating = r.get<double>(n, "rating", p, 0.0, true);
    k.status = r.choice(n, "status", p, detail::kStatus, AssetStatus::kExisting);
    k.type = r.choice(n, "type", p, detail::kCircuitType, CircuitType::kLine);
    c.circuits.push_back(k);
  });
  each("hydros", [&](const YAML::Node& n, const std::string& p) {
    if (!r.map(n, p, {"id", "bus", "max_storage", "max_turbining", "production_coefficient",
                      "max_block_power", "upstream", "initial_storage", "status", "technology"}))
      return;
    HydroPlant h;
    h.id = r.get<std::string>(n, "id", p, "", true);
    h.bus = r.get<std::string>(n, "bus", p, "", true);
    h.max_storage = r.get<double>(n, "max_storage", p, 0.0, true);
    h.max_turbining = r.get<double>(n, "max_turbining", p, 0.0, true);
    h.production_coefficient = r.get<double>(n, "production_coefficient", p, 0.0, true);
    h.max_block_power = r.get<double>(n, "max_block_power", p, 0.0, true);
    h.upstream = r.strings(n["upstream"], p + ".upstream");
    h.initial_storage = r.get<double>(n, "initial_storage", p, 0.0);
    h.status = r.choice(n, "status", p, detail::kStatus, AssetStatus::kExisting);
    h.technology = r.get<std::string>(n, "technology", p, "hydro");
    c.hydros.push_back(h);
  });
  each("thermals", [&](const YAML::Node& n, const std::string& p) {
    if (!r.map(n, p, {"id", "bus", "capacity", "variable_cost", "status", "technology"})) return;
    ThermalPlant g;
    g.id = r.get<std::string>(n, "id", p, "", true);
    g.bus = r.get<std::string>(n, "bus", p, "", true);
    g.capacity = r.get<double>(n, "capacity", p, 0.0, true);
    g.variable_cost = r.get<double>(n, "variable_cost", p, 0.0, true);
    g.status = r.choice(n, "status", p, detail::kStatus, AssetStatus::kExisting);
    g.technology = r.get<std::string>(n, "technology", p, "thermal");
    c.thermals.push_back(g);
  });
  each("renewables", [&](const YAML::Node& n, const std::string& p) {
    if (!r.map(n, p, {"id", "bus", "nameplate_mw", "production", "status", "technology"})) return;
    RenewablePlant w;
    w.id = r.get<std::string>(n, "id", p, "", true);
    w.bus = r.get<std::string>(n, "bus", p, "", true);
    w.nameplate_mw = r.get<double>(n, "nameplate_mw", p, 0.0);
    const YAML::Node prod = n["production"];
    if (!prod.IsDefined()) {
      r.error(n, p + ".production", "missing required key 'production'");
    } else if (r.seq(prod, p + ".production")) {
      for (std::size_t t = 0; t < prod.size(); ++t)
        w.production.push_back(r.matrix(prod[t], p + ".production[" + std::to_string(t) + "]"));
    }
    w.status = r.choice(n, "status", p, detail::kStatus, AssetStatus::kExisting);
    w.technology = r.get<std::string>(n, "technology", p, "renewable");
    c.renewables.push_back(w);
  });

  const YAML::Node demand = root["demand"];
  if (!demand.IsDefined()) {
    r.error(root, "demand", "missing required key 'demand'");
  } else if (r.map(demand, "demand", {"blocks"}) && r.seq(demand["blocks"], "demand.blocks")) {
    const YAML::Node blocks = demand["blocks"];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::string p = "demand.blocks[" + std::to_string(b) + "]";
      if (!r.map(blocks[b], p, {"duration", "load"})) continue;
      DemandBlock d;
      d.duration_fraction = r.get<double>(blocks[b], "duration", p, 0.0, true);
      if (blocks[b]["load"].IsDefined()) d.load = r.matrix(blocks[b]["load"], p + ".load");
      else r.error(blocks[b], p + ".load", "missing required key 'load'");
      c.blocks.push_back(d);
    }
  }

  each("candidates", [&](const YAML::Node& n, const std::string& p) {
    if (!r.map(n, p, {"id", "kind", "device", "overnight_cost", "cost_basis", "payments", "lifetime",
                      "wacc", "earliest_stage", "capex_multiplier"}))
      return;
    CandidateProject q;
    q.id = r.get<std::string>(n, "id", p, "", true);
    if (!n["kind"].IsDefined()) r.error(n, p + ".kind", "missing required key 'kind'");
    q.kind = r.choice(n, "kind", p, detail::kProjectKind, ProjectKind::kThermal);
    q.target = r.get<std::string>(n, "device", p, "", true);
    q.overnight_cost = r.get<double>(n, "overnight_cost", p, 0.0, true);
    q.cost_basis = r.choice(n, "cost_basis", p, detail::kCostBasis, CostBasis::kPerKw);
    if (n["payments"].IsDefined()) q.payment_schedule = r.numbers(n["payments"], p + ".payments");
    q.lifetime = r.get<double>(n, "lifetime", p, 30.0);
    q.wacc = r.get<double>(n, "wacc", p, 0.0);
    q.earliest_stage = r.get<int>(n, "earliest_stage", p, 1);
    if (n["capex_multiplier"].IsDefined())
      q.capex_multiplier = r.numbers(n["capex_multiplier"], p + ".capex_multiplier");
    c.candidates.push_back(q);
  });
  each("logic", [&](const YAML::Node& n, const std::string& p) {
    if (!r.map(n, p, {"kind", "projects"})) return;
    LogicConstraint l;
    if (!n["kind"].IsDefined()) r.error(n, p + ".kind", "missing required key 'kind'");
    l.kind = r.choice(n, "kind", p, detail::kLogicKind, LogicKind::kExclusive);
    l.projects = r.strings(n["projects"], p + ".projects");
    c.logic.push_back(l);
  });

  const int H = static_cast<int>(c.hydros.size());
  const YAML::Node inflow = root["inflow"];
  if (!inflow.IsDefined() || inflow.IsNull()) {
    if (H > 0) r.error(root, "inflow", "missing required key 'inflow' (case has hydro plants)");
    c.inflow = InflowModel::stationary({}, {}, {});
  } else if (r.map(inflow, "inflow",
                   {"seasons", "mean", "stddev", "serial_corr", "spatial_corr", "initial"})) {
    c.inflow.seasons = r.get<int>(inflow, "seasons", "inflow", 1);
    c.inflow.mean = r.matrix(inflow["mean"], "inflow.mean");
    c.inflow.stddev = r.matrix(inflow["stddev"], "inflow.stddev");
    c.inflow.serial_corr = r.matrix(inflow["serial_corr"], "inflow.serial_corr");
    if (inflow["spatial_corr"].IsDefined()) {
      const auto m = r.matrix(inflow["spatial_corr"], "inflow.spatial_corr");
      c.inflow.spatial_corr.resize(static_cast<Eigen::Index>(m.size()),
                                   m.empty() ? 0 : static_cast<Eigen::Index>(m[0].size()));
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i].size() != m[0].size()) {
          r.error(inflow["spatial_corr"], "inflow.spatial_corr", "rows must have equal length");
          break;
        }
        for (std::size_t j = 0; j < m[i].size(); ++j)
          c.inflow.spatial_corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
      }
    } else {
      c.inflow.spatial_corr = Eigen::MatrixXd::Identity(H, H);
    }
    c.initial_inflow = r.numbers(inflow["initial"], "inflow.initial");
  }

  RunConfig& cfg = out.config;
  const YAML::Node run = root["run"];
  if (run.IsDefined() && !run.IsNull() &&
      r.map(run, "run", {"target_gap", "max_iterations", "seed", "sddp_iterations", "workers",
                         "big_m_max"})) {
    cfg.target_gap = r.get<double>(run, "target_gap", "run", cfg.target_gap);
    cfg.max_iterations = r.get<int>(run, "max_iterations", "run", cfg.max_iterations);
    cfg.seed = r.get<std::uint64_t>(run, "seed", "run", cfg.seed);
    cfg.sddp.max_iterations = r.get<int>(run, "sddp_iterations", "run", cfg.sddp.max_iterations);
    cfg.workers = r.get<int>(run, "workers", "run", cfg.workers);
    cfg.m_max = r.get<double>(run, "big_m_max", "run", cfg.m_max);
    if (!(cfg.target_gap > 0.0 && cfg.target_gap < 1.0))
      r.error(run["target_gap"], "run.target_gap", "must lie in (0, 1)");
    if (cfg.max_iterations < 1) r.error(run["max_iterations"], "run.max_iterations", "must be >= 1");
    if (cfg.sddp.max_iterations < 1)
      r.error(run["sddp_iterations"], "run.sddp_iterations", "must be >= 1");
    if (cfg.workers < 1) r.error(run["workers"], "run.workers", "must be >= 1");
  }

  if (!r.diags.empty()) throw CaseError(source, r.diags);
  const ValidationReport rep = validate_case(c);
  if (!rep.ok()) {
    std::vector<Diagnostic> d;
    for (const auto& v : rep.violations) d.push_back(r.locate(v.path, v.message));
    throw CaseError(source, d);
  }
  return out;
}

inline LoadedCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseError(path, {{"", 0, 0, "cannot open file"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str(), path);
}

inline std::string serialize_case(const PlanningCase& c, const RunConfig& cfg = {}) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "schema" << YAML::Value << kCaseSchema;
  e << YAML::Key << "version" << YAML::Value << kSchemaVersion;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "horizon" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "stages" << YAML::Value << c.stages;
  e << YAML::Key << "scenarios" << YAML::Value << c.scenarios;
  e << YAML::Key << "openings" << YAML::Value << c.openings;
  e << YAML::Key << "stage_hours" << YAML::Value << c.stage_hours;
  e << YAML::Key << "discount_rate" << YAML::Value << c.stage_discount_rate;
  e << YAML::Key << "start_year" << YAML::Value << c.start_year;
  e << YAML::Key << "stages_per_year" << YAML::Value << c.stages_per_year;
  e << YAML::EndMap;
  e << YAML::Key << "deficit_cost" << YAML::Value << c.deficit_cost;

  auto flow = [&](const auto& v) { e << YAML::Flow << YAML::BeginSeq; for (const auto& x : v) e << x; e << YAML::EndSeq; };
  auto flow2 = [&](const auto& m) { e << YAML::BeginSeq; for (const auto& row : m) flow(row); e << YAML::EndSeq; };

  e << YAML::Key << "buses" << YAML::Value << YAML::BeginSeq;
  for (const auto& b : c.buses)
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << b.id << YAML::Key
      << "name" << YAML::Value << b.name << YAML::Key << "voltage_kv" << YAML::Value << b.voltage_kv
      << YAML::EndMap;
  e << YAML::EndSeq;

  e << YAML::Key << "circuits" << YAML::Value << YAML::BeginSeq;
  for (const auto& k : c.circuits)
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << k.id << YAML::Key
      << "from" << YAML::Value << k.from_bus << YAML::Key << "to" << YAML::Value << k.to_bus
      << YAML::Key << "susceptance" << YAML::Value << k.susceptance << YAML::Key << "rating"
      << YAML::Value << k.rating << YAML::Key << "status" << YAML::Value
      << detail::name_of(detail::kStatus, k.status) << YAML::Key << "type" << YAML::Value
      << detail::name_of(detail::kCircuitType, k.type) << YAML::EndMap;
  e << YAML::EndSeq;

  e << YAML::Key << "hydros" << YAML::Value << YAML::BeginSeq;
  for (const auto& h : c.hydros) {
    e << YAML::BeginMap;
    e << YAML::Key << "id" << YAML::Value << h.id;
    e << YAML::Key << "bus" << YAML::Value << h.bus;
    e << YAML::Key << "max_storage" << YAML::Value << h.max_storage;
    e << YAML::Key << "max_turbining" << YAML::Value << h.max_turbining;
    e << YAML::Key << "production_coefficient" << YAML::Value << h.production_coefficient;
    e << YAML::Key << "max_block_power" << YAML::Value << h.max_block_power;
    e << YAML::Key << "upstream" << YAML::Value;
    flow(h.upstream);
    e << YAML::Key << "initial_storage" << YAML::Value << h.initial_storage;
    e << YAML::Key << "status" << YAML::Value << detail::name_of(detail::kStatus, h.status);
    e << YAML::Key << "technology" << YAML::Value << h.technology;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "thermals" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : c.thermals)
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << g.id << YAML::Key
      << "bus" << YAML::Value << g.bus << YAML::Key << "capacity" << YAML::Value << g.capacity
      << YAML::Key << "variable_cost" << YAML::Value << g.variable_cost << YAML::Key << "status"
      << YAML::Value << detail::name_of(detail::kStatus, g.status) << YAML::Key << "technology"
      << YAML::Value << g.technology << YAML::EndMap;
  e << YAML::EndSeq;

  e << YAML::Key << "renewables" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : c.renewables) {
    e << YAML::BeginMap;
    e << YAML::Key << "id" << YAML::Value << w.id;
    e << YAML::Key << "bus" << YAML::Value << w.bus;
    e << YAML::Key << "nameplate_mw" << YAML::Value << w.nameplate_mw;
    e << YAML::Key << "status" << YAML::Value << detail::name_of(detail::kStatus, w.status);
    e << YAML::Key << "technology" << YAML::Value << w.technology;
    e << YAML::Key << "production" << YAML::Value << YAML::BeginSeq;
    for (const auto& st : w.production) flow2(st);
    e << YAML::EndSeq;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "demand" << YAML::Value << YAML::BeginMap << YAML::Key << "blocks"
    << YAML::Value << YAML::BeginSeq;
  for (const auto& b : c.blocks) {
    e << YAML::BeginMap << YAML::Key << "duration" << YAML::Value << b.duration_fraction;
    e << YAML::Key << "load" << YAML::Value;
    flow2(b.load);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;

  e << YAML::Key << "candidates" << YAML::Value << YAML::BeginSeq;
  for (const auto& q : c.candidates) {
    e << YAML::BeginMap;
    e << YAML::Key << "id" << YAML::Value << q.id;
    e << YAML::Key << "kind" << YAML::Value << detail::name_of(detail::kProjectKind, q.kind);
    e << YAML::Key << "device" << YAML::Value << q.target;
    e << YAML::Key << "overnight_cost" << YAML::Value << q.overnight_cost;
    e << YAML::Key << "cost_basis" << YAML::Value << detail::name_of(detail::kCostBasis, q.cost_basis);
    e << YAML::Key << "payments" << YAML::Value;
    flow(q.payment_schedule);
    e << YAML::Key << "lifetime" << YAML::Value << q.lifetime;
    e << YAML::Key << "wacc" << YAML::Value << q.wacc;
    e << YAML::Key << "earliest_stage" << YAML::Value << q.earliest_stage;
    if (!q.capex_multiplier.empty()) {
      e << YAML::Key << "capex_multiplier" << YAML::Value;
      flow(q.capex_multiplier);
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "logic" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : c.logic) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "kind" << YAML::Value
      << detail::name_of(detail::kLogicKind, l.kind) << YAML::Key << "projects" << YAML::Value;
    flow(l.projects);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "inflow" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "seasons" << YAML::Value << c.inflow.seasons;
  e << YAML::Key << "mean" << YAML::Value;
  flow2(c.inflow.mean);
  e << YAML::Key << "stddev" << YAML::Value;
  flow2(c.inflow.stddev);
  e << YAML::Key << "serial_corr" << YAML::Value;
  flow2(c.inflow.serial_corr);
  std::vector<std::vector<double>> corr(c.inflow.spatial_corr.rows());
  for (Eigen::Index i = 0; i < c.inflow.spatial_corr.rows(); ++i)
    for (Eigen::Index j = 0; j < c.inflow.spatial_corr.cols(); ++j)
      corr[i].push_back(c.inflow.spatial_corr(i, j));
  e << YAML::Key << "spatial_corr" << YAML::Value;
  flow2(corr);
  e << YAML::Key << "initial" << YAML::Value;
  flow(c.initial_inflow);
  e << YAML::EndMap;

  e << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "target_gap" << YAML::Value << cfg.target_gap;
  e << YAML::Key << "max_iterations" << YAML::Value << cfg.max_iterations;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "sddp_iterations" << YAML::Value << cfg.sddp.max_iterations;
  e << YAML::Key << "workers" << YAML::Value << cfg.workers;
  e << YAML::Key << "big_m_max" << YAML::Value << cfg.m_max;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Plan files: the entry stage of every built project.

inline TrialPlan parse_plan(const std::string& text, const PlanningCase& c,
                            const std::string& source = "") {
  const YAML::Node root = detail::parse_yaml(text, source);
  detail::YamlReader r;
  TrialPlan plan = TrialPlan::nothing(c);
  if (!r.map(root, "", {"schema", "version", "builds"})) throw CaseError(source, r.diags);
  detail::check_schema(r, root, kPlanSchema);
  const YAML::Node builds = root["builds"];
  if (builds.IsDefined() && !builds.IsNull() && r.seq(builds, "builds")) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < builds.size(); ++i) {
      const std::string p = "builds[" + std::to_string(i) + "]";
      if (!r.map(builds[i], p, {"project", "stage"})) continue;
      const std::string id = r.get<std::string>(builds[i], "project", p, "", true);
      const int stage = r.get<int>(builds[i], "stage", p, 0, true);
      int q = -1;
      for (std::size_t k = 0; k < c.candidates.size(); ++k)
        if (c.candidates[k].id == id) q = static_cast<int>(k);
      if (q < 0) {
        r.error(builds[i], p + ".project", "unknown project '" + id + "'");
        continue;
      }
      if (!seen.insert(id).second) r.error(builds[i], p + ".project", "project '" + id + "' listed twice");
      if (stage < c.candidates[q].earliest_stage || stage > c.stages) {
        r.error(builds[i]["stage"], p + ".stage",
                "stage " + std::to_string(stage) + " outside [" +
                    std::to_string(c.candidates[q].earliest_stage) + ", " + std::to_string(c.stages) + "]");
        continue;
      }
      for (int t = stage - 1; t < c.stages; ++t) plan.built[q][t] = 1.0;
    }
  }
  if (!r.diags.empty()) throw CaseError(source, r.diags);
  return plan;
}

inline TrialPlan load_plan(const std::string& path, const PlanningCase& c) {
  std::ifstream in(path);
  if (!in) throw CaseError(path, {{"", 0, 0, "cannot open file"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str(), c, path);
}

inline std::string serialize_plan(const PlanningCase& c, const TrialPlan& plan) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "schema" << YAML::Value << kPlanSchema;
  e << YAML::Key << "version" << YAML::Value << kSchemaVersion;
  e << YAML::Key << "builds" << YAML::Value << YAML::BeginSeq;
  for (std::size_t p = 0; p < c.candidates.size(); ++p) {
    const int stage = entry_stage(plan, static_cast<int>(p));
    if (stage == 0) continue;
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "project" << YAML::Value << c.candidates[p].id
      << YAML::Key << "stage" << YAML::Value << stage << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace gtep
