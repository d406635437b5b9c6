#pragma once

// Planning-case data model: network, plants, demand, candidate projects,
// horizon and stochastic settings, plus validation and the investment cost
// coefficient used by the master problem.
//
// Stages are 1-based wherever they appear in data (earliest_stage, reports)
// and 0-based in array indices.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtep/inflow.hpp"

namespace gtep {

// Invalid or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AssetStatus { kExisting, kCandidate };
enum class CircuitType { kLine, kTransformer };
enum class ProjectKind { kHydro, kThermal, kRenewable, kCircuit };
enum class CostBasis { kPerKw, kTotal };
enum class LogicKind { kExclusive, kAssociated, kPrecedence };

inline const char* to_string(ProjectKind k) {
  switch (k) {
    case ProjectKind::kHydro: return "hydro";
    case ProjectKind::kThermal: return "thermal";
    case ProjectKind::kRenewable: return "renewable";
    case ProjectKind::kCircuit: return "circuit";
  }
  return "?";
}

struct Bus {
  std::string id;
  std::string name;
  double voltage_kv = 0.0;

  bool operator==(const Bus&) const = default;
};

struct Circuit {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double susceptance = 0.0;  // per unit, > 0
  double rating = 0.0;       // MW
  AssetStatus status = AssetStatus::kExisting;
  CircuitType type = CircuitType::kLine;

  bool operator==(const Circuit&) const = default;
};

struct HydroPlant {
  std::string id;
  std::string bus;
  double max_storage = 0.0;             // hm3
  double max_turbining = 0.0;           // hm3 per stage
  double production_coefficient = 0.0;  // MWh per hm3
  double max_block_power = 0.0;         // MW
  std::vector<std::string> upstream;    // plants releasing into this one
  double initial_storage = 0.0;         // hm3
  AssetStatus status = AssetStatus::kExisting;
  std::string technology = "hydro";

  bool operator==(const HydroPlant&) const = default;
};

struct ThermalPlant {
  std::string id;
  std::string bus;
  double capacity = 0.0;       // MW
  double variable_cost = 0.0;  // $/MWh
  AssetStatus status = AssetStatus::kExisting;
  std::string technology = "thermal";

  bool operator==(const ThermalPlant&) const = default;
};

struct RenewablePlant {
  std::string id;
  std::string bus;
  double nameplate_mw = 0.0;
  // production[stage][block][scenario], MW
  std::vector<std::vector<std::vector<double>>> production;
  AssetStatus status = AssetStatus::kExisting;
  std::string technology = "renewable";

  bool operator==(const RenewablePlant&) const = default;
};

struct DemandBlock {
  double duration_fraction = 0.0;
  // load[stage][bus index], MW
  std::vector<std::vector<double>> load;

  bool operator==(const DemandBlock&) const = default;
};

struct CandidateProject {
  std::string id;
  ProjectKind kind = ProjectKind::kThermal;
  std::string target;  // device id
  double overnight_cost = 0.0;
  CostBasis cost_basis = CostBasis::kPerKw;
  std::vector<double> payment_schedule{1.0};  // fraction per construction year
  double lifetime = 1.0;                      // years
  double wacc = 0.0;                          // per year
  int earliest_stage = 1;
  std::vector<double> capex_multiplier;  // per stage; empty means all 1

  bool operator==(const CandidateProject&) const = default;
};

struct LogicConstraint {
  LogicKind kind = LogicKind::kExclusive;
  std::vector<std::string> projects;  // precedence: {first, second}

  bool operator==(const LogicConstraint&) const = default;
};

struct PlanningCase {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Circuit> circuits;
  std::vector<HydroPlant> hydros;
  std::vector<ThermalPlant> thermals;
  std::vector<RenewablePlant> renewables;
  std::vector<DemandBlock> blocks;
  std::vector<CandidateProject> candidates;
  std::vector<LogicConstraint> logic;

  int stages = 1;
  int scenarios = 1;  // forward scenarios S (also renewable columns)
  int openings = 1;   // backward branching L
  double deficit_cost = 1000.0;      // $/MWh
  double stage_discount_rate = 0.0;  // per stage
  double stage_hours = 1.0;
  int start_year = 1;
  int stages_per_year = 1;

  InflowModel inflow;
  std::vector<double> initial_inflow;  // a_1 per hydro, hm3

  int num_blocks() const { return static_cast<int>(blocks.size()); }

  double block_hours(int block) const {
    return blocks[block].duration_fraction * stage_hours;
  }

  int entry_year(int stage) const {  // 1-based stage
    return start_year + (stage - 1) / std::max(1, stages_per_year);
  }

  std::optional<int> bus_index(const std::string& id) const {
    for (int n = 0; n < static_cast<int>(buses.size()); ++n)
      if (buses[n].id == id) return n;
    return std::nullopt;
  }

  bool operator==(const PlanningCase&) const = default;
};

// Build status per candidate project and 0-based stage: 1 means built and
// available from that stage on.  Values may be fractional in LP relaxations.
struct TrialPlan {
  std::vector<std::vector<double>> built;  // [project][stage]

  static TrialPlan nothing(const PlanningCase& c) {
    return {std::vector<std::vector<double>>(c.candidates.size(),
                                             std::vector<double>(c.stages, 0.0))};
  }
  double at(int project, int stage) const { return built[project][stage]; }
  bool operator==(const TrialPlan&) const = default;
};

// Index of the project building `device`, or -1.
inline int project_for_device(const PlanningCase& c, const std::string& device) {
  for (int p = 0; p < static_cast<int>(c.candidates.size()); ++p)
    if (c.candidates[p].target == device) return p;
  return -1;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  void add(std::string path, std::string message) {
    violations.push_back({std::move(path), std::move(message)});
  }
  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) out += v.path + ": " + v.message + "\n";
    return out;
  }
};

namespace detail {

inline std::string at(const std::string& list, std::size_t i) {
  return list + "[" + std::to_string(i) + "]";
}

// Nodes on some cycle of the directed "upstream -> plant" graph.
inline std::set<std::string> cascade_cycles(const std::vector<HydroPlant>& hydros) {
  std::map<std::string, const HydroPlant*> by_id;
  for (const auto& h : hydros) by_id[h.id] = &h;
  enum Color { kWhite, kGray, kBlack };
  std::map<std::string, Color> color;
  std::set<std::string> on_cycle;
  std::vector<std::string> stack;
  std::function<void(const std::string&)> dfs = [&](const std::string& id) {
    color[id] = kGray;
    stack.push_back(id);
    const auto it = by_id.find(id);
    if (it != by_id.end()) {
      for (const auto& up : it->second->upstream) {
        if (!by_id.count(up)) continue;
        if (color[up] == kGray) {
          auto pos = std::find(stack.begin(), stack.end(), up);
          on_cycle.insert(pos, stack.end());
        } else if (color[up] == kWhite) {
          dfs(up);
        }
      }
    }
    stack.pop_back();
    color[id] = kBlack;
  };
  for (const auto& h : hydros)
    if (color[h.id] == kWhite) dfs(h.id);
  return on_cycle;
}

}  // namespace detail

inline ValidationReport validate_case(const PlanningCase& c) {
  using detail::at;
  ValidationReport rep;
  const int T = c.stages;
  const int B = c.num_blocks();

  if (c.stages < 1) rep.add("horizon.stages", "must be >= 1");
  if (c.scenarios < 1) rep.add("horizon.scenarios", "must be >= 1");
  if (c.openings < 1) rep.add("horizon.openings", "must be >= 1");
  if (!(c.deficit_cost >= 0.0)) rep.add("deficit_cost", "must be >= 0");
  if (!(c.stage_discount_rate > -1.0)) rep.add("horizon.discount_rate", "must be > -1");
  if (!(c.stage_hours > 0.0)) rep.add("horizon.stage_hours", "must be > 0");
  if (c.stages_per_year < 1) rep.add("horizon.stages_per_year", "must be >= 1");

  std::set<std::string> bus_ids;
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const auto& b = c.buses[i];
    if (b.id.empty()) rep.add(at("buses", i) + ".id", "empty bus id");
    if (!bus_ids.insert(b.id).second)
      rep.add(at("buses", i) + ".id", "duplicate bus id '" + b.id + "'");
  }
  if (c.buses.empty()) rep.add("buses", "at least one bus is required");
  auto check_bus = [&](const std::string& path, const std::string& id) {
    if (!bus_ids.count(id)) rep.add(path, "unknown bus '" + id + "'");
  };

  std::set<std::string> device_ids;
  auto unique_device = [&](const std::string& path, const std::string& id) {
    if (id.empty()) rep.add(path, "empty id");
    if (!device_ids.insert(id).second) rep.add(path, "duplicate device id '" + id + "'");
  };

  for (std::size_t k = 0; k < c.circuits.size(); ++k) {
    const auto& ck = c.circuits[k];
    const std::string p = at("circuits", k);
    unique_device(p + ".id", ck.id);
    check_bus(p + ".from", ck.from_bus);
    check_bus(p + ".to", ck.to_bus);
    if (ck.from_bus == ck.to_bus) rep.add(p, "self-loop circuit '" + ck.id + "'");
    if (!(ck.susceptance > 0.0))
      rep.add(p + ".susceptance", "circuit '" + ck.id + "' susceptance must be > 0");
    if (!(ck.rating > 0.0))
      rep.add(p + ".rating", "circuit '" + ck.id + "' rating must be > 0");
  }

  std::set<std::string> hydro_ids;
  for (const auto& h : c.hydros) hydro_ids.insert(h.id);
  for (std::size_t i = 0; i < c.hydros.size(); ++i) {
    const auto& h = c.hydros[i];
    const std::string p = at("hydros", i);
    unique_device(p + ".id", h.id);
    check_bus(p + ".bus", h.bus);
    if (!(h.max_storage >= 0.0)) rep.add(p + ".max_storage", "must be >= 0");
    if (!(h.max_turbining > 0.0)) rep.add(p + ".max_turbining", "must be > 0");
    if (!(h.production_coefficient > 0.0))
      rep.add(p + ".production_coefficient", "must be > 0");
    if (!(h.max_block_power > 0.0)) rep.add(p + ".max_block_power", "must be > 0");
    if (!(h.initial_storage >= 0.0 && h.initial_storage <= h.max_storage))
      rep.add(p + ".initial_storage", "must lie in [0, max_storage]");
    for (std::size_t u = 0; u < h.upstream.size(); ++u) {
      if (!hydro_ids.count(h.upstream[u]))
        rep.add(at(p + ".upstream", u), "unknown hydro '" + h.upstream[u] + "'");
      if (h.upstream[u] == h.id) rep.add(at(p + ".upstream", u), "cyclic cascade");
    }
  }
  const auto cyc = detail::cascade_cycles(c.hydros);
  for (std::size_t i = 0; i < c.hydros.size(); ++i)
    if (cyc.count(c.hydros[i].id))
      rep.add(at("hydros", i) + ".upstream",
              "cyclic cascade through '" + c.hydros[i].id + "'");

  for (std::size_t j = 0; j < c.thermals.size(); ++j) {
    const auto& g = c.thermals[j];
    const std::string p = at("thermals", j);
    unique_device(p + ".id", g.id);
    check_bus(p + ".bus", g.bus);
    if (!(g.capacity > 0.0)) rep.add(p + ".capacity", "must be > 0");
    if (!(g.variable_cost >= 0.0)) rep.add(p + ".variable_cost", "must be >= 0");
  }

  for (std::size_t r = 0; r < c.renewables.size(); ++r) {
    const auto& w = c.renewables[r];
    const std::string p = at("renewables", r);
    unique_device(p + ".id", w.id);
    check_bus(p + ".bus", w.bus);
    if (!(w.nameplate_mw >= 0.0)) rep.add(p + ".nameplate_mw", "must be >= 0");
    bool dims = static_cast<int>(w.production.size()) == T;
    bool nonneg = true;
    for (const auto& st : w.production) {
      dims = dims && static_cast<int>(st.size()) == B;
      for (const auto& bl : st) {
        dims = dims && static_cast<int>(bl.size()) == c.scenarios;
        for (double v : bl) nonneg = nonneg && v >= 0.0;
      }
    }
    if (!dims)
      rep.add(p + ".production", "dimensions must be stages x blocks x scenarios");
    if (!nonneg) rep.add(p + ".production", "production values must be >= 0");
  }

  if (c.blocks.empty()) rep.add("demand.blocks", "at least one block is required");
  double frac = 0.0;
  for (std::size_t b = 0; b < c.blocks.size(); ++b) {
    const auto& bl = c.blocks[b];
    const std::string p = at("demand.blocks", b);
    if (!(bl.duration_fraction > 0.0 && bl.duration_fraction <= 1.0))
      rep.add(p + ".duration", "duration fraction must lie in (0, 1]");
    frac += bl.duration_fraction;
    if (static_cast<int>(bl.load.size()) != T) {
      rep.add(p + ".load", "one load vector per stage required");
      continue;
    }
    for (int t = 0; t < T; ++t) {
      if (bl.load[t].size() != c.buses.size()) {
        rep.add(p + ".load", "one load value per bus required");
        break;
      }
      if (std::any_of(bl.load[t].begin(), bl.load[t].end(),
                      [](double v) { return !(v >= 0.0); })) {
        rep.add(p + ".load", "loads must be >= 0");
        break;
      }
    }
  }
  if (!c.blocks.empty() && std::abs(frac - 1.0) > 1e-9)
    rep.add("demand.blocks", "block durations must sum to 1");

  // Candidate projects and the devices they build.
  std::map<std::string, std::pair<ProjectKind, AssetStatus>> devices;
  for (const auto& h : c.hydros) devices[h.id] = {ProjectKind::kHydro, h.status};
  for (const auto& g : c.thermals) devices[g.id] = {ProjectKind::kThermal, g.status};
  for (const auto& w : c.renewables) devices[w.id] = {ProjectKind::kRenewable, w.status};
  for (const auto& k : c.circuits) devices[k.id] = {ProjectKind::kCircuit, k.status};

  std::set<std::string> project_ids;
  std::map<std::string, int> built_by;
  for (std::size_t q = 0; q < c.candidates.size(); ++q) {
    const auto& pj = c.candidates[q];
    const std::string p = at("candidates", q);
    if (pj.id.empty()) rep.add(p + ".id", "empty project id");
    if (!project_ids.insert(pj.id).second)
      rep.add(p + ".id", "duplicate project id '" + pj.id + "'");
    const auto dev = devices.find(pj.target);
    if (dev == devices.end()) {
      rep.add(p + ".device", "unknown device '" + pj.target + "'");
    } else {
      if (dev->second.first != pj.kind)
        rep.add(p + ".kind", "device '" + pj.target + "' is not a " + to_string(pj.kind));
      if (dev->second.second != AssetStatus::kCandidate)
        rep.add(p + ".device", "device '" + pj.target + "' is not flagged candidate");
      ++built_by[pj.target];
    }
    if (!(pj.overnight_cost >= 0.0)) rep.add(p + ".overnight_cost", "must be >= 0");
    double paid = 0.0;
    for (double f : pj.payment_schedule) {
      if (!(f >= 0.0)) rep.add(p + ".payments", "payment fractions must be >= 0");
      paid += f;
    }
    if (pj.payment_schedule.empty() || std::abs(paid - 1.0) > 1e-9)
      rep.add(p + ".payments", "payment fractions must sum to 1");
    if (!(pj.lifetime > 0.0)) rep.add(p + ".lifetime", "must be > 0");
    if (!(pj.wacc > -1.0)) rep.add(p + ".wacc", "must be > -1");
    if (pj.earliest_stage < 1 || pj.earliest_stage > T)
      rep.add(p + ".earliest_stage", "must lie within the horizon");
    if (!pj.capex_multiplier.empty()) {
      if (static_cast<int>(pj.capex_multiplier.size()) != T)
        rep.add(p + ".capex_multiplier", "one multiplier per stage required");
      for (double f : pj.capex_multiplier)
        if (!(f > 0.0)) {
          rep.add(p + ".capex_multiplier", "multipliers must be > 0");
          break;
        }
    }
  }
  for (const auto& [id, info] : devices) {
    if (info.second != AssetStatus::kCandidate) continue;
    const auto it = built_by.find(id);
    if (it == built_by.end())
      rep.add("candidates", "candidate device '" + id + "' has no project");
    else if (it->second > 1)
      rep.add("candidates", "candidate device '" + id + "' is built by several projects");
  }

  for (std::size_t l = 0; l < c.logic.size(); ++l) {
    const auto& lc = c.logic[l];
    const std::string p = at("logic", l);
    const std::size_t n = lc.projects.size();
    if (lc.kind == LogicKind::kExclusive && n < 2)
      rep.add(p, "exclusivity needs at least 2 projects");
    if (lc.kind != LogicKind::kExclusive && n != 2)
      rep.add(p, "association and precedence need exactly 2 projects");
    for (const auto& id : lc.projects)
      if (!project_ids.count(id)) rep.add(p + ".projects", "unknown project '" + id + "'");
  }

  const int H = static_cast<int>(c.hydros.size());
  for (const auto& msg : check_inflow_model(c.inflow, H)) rep.add("inflow", msg);
  if (static_cast<int>(c.initial_inflow.size()) != H)
    rep.add("inflow.initial", "one initial inflow per hydro required");
  for (double a : c.initial_inflow)
    if (!(a >= 0.0)) {
      rep.add("inflow.initial", "initial inflows must be >= 0");
      break;
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Investment cost

// Construction payments at the end of each construction year, the last one at
// commissioning, compounded at the WACC to the commissioning date.
inline double construction_cost_factor(const std::vector<double>& payments,
                                       double wacc) {
  const int years = static_cast<int>(payments.size());
  double f = 0.0;
  for (int k = 0; k < years; ++k)
    f += payments[k] * std::pow(1.0 + wacc, years - 1 - k);
  return f;
}

// Capacity in kW on which a per-kW overnight cost is charged.
inline double project_capacity_kw(const PlanningCase& c, const CandidateProject& p) {
  switch (p.kind) {
    case ProjectKind::kHydro:
      for (const auto& h : c.hydros)
        if (h.id == p.target) return h.max_block_power * 1000.0;
      break;
    case ProjectKind::kThermal:
      for (const auto& g : c.thermals)
        if (g.id == p.target) return g.capacity * 1000.0;
      break;
    case ProjectKind::kRenewable:
      for (const auto& w : c.renewables)
        if (w.id == p.target) return w.nameplate_mw * 1000.0;
      break;
    case ProjectKind::kCircuit:
      for (const auto& k : c.circuits)
        if (k.id == p.target) return k.rating * 1000.0;
      break;
  }
  throw std::invalid_argument("project '" + p.id + "' targets unknown device '" +
                              p.target + "'");
}

// Objective coefficient for commissioning `project` at 1-based `build_stage`,
// in money discounted to the start of the horizon.  End-of-horizon salvage
// value is not credited.
inline double investment_coefficient(const PlanningCase& c,
                                     const CandidateProject& project,
                                     int build_stage) {
  if (build_stage < project.earliest_stage)
    throw std::invalid_argument("project '" + project.id + "' cannot be built at stage " +
                                std::to_string(build_stage) +
                                " (earliest " + std::to_string(project.earliest_stage) + ")");
  if (build_stage > c.stages)
    throw std::invalid_argument("build stage beyond horizon");
  double overnight = project.overnight_cost;
  if (project.cost_basis == CostBasis::kPerKw) overnight *= project_capacity_kw(c, project);
  const double multiplier =
      project.capex_multiplier.empty() ? 1.0 : project.capex_multiplier[build_stage - 1];
  const double discount = std::pow(1.0 + c.stage_discount_rate, -(build_stage - 1));
  return overnight * multiplier *
         construction_cost_factor(project.payment_schedule, project.wacc) * discount;
}

// Present-value factor applied to operation costs incurred in 0-based stage t.
inline double stage_discount_factor(const PlanningCase& c, int stage) {
  return std::pow(1.0 + c.stage_discount_rate, -stage);
}

}  // namespace gtep
