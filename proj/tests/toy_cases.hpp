#pragma once

// Small deterministic planning cases plus brute-force oracles: plan
// enumeration and a directly assembled multi-stage operation LP.

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gtep/lp.hpp"
#include "gtep/model.hpp"

namespace gtep::toys {

inline ThermalPlant thermal(std::string id, std::string bus, double cap, double cost,
                            AssetStatus st = AssetStatus::kExisting) {
  ThermalPlant g;
  g.id = std::move(id);
  g.bus = std::move(bus);
  g.capacity = cap;
  g.variable_cost = cost;
  g.status = st;
  return g;
}

inline CandidateProject project(std::string id, ProjectKind kind, std::string target,
                                double cost) {
  CandidateProject p;
  p.id = std::move(id);
  p.kind = kind;
  p.target = std::move(target);
  p.overnight_cost = cost;
  p.cost_basis = CostBasis::kTotal;
  return p;
}

// Random deterministic case: <= 3 buses, <= 2 stages, one scenario, one
// opening, at most 6 project-stage binaries.
inline PlanningCase random_toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

  PlanningCase c;
  c.name = "toy" + std::to_string(seed);
  c.stages = 1 + pick(2);
  c.scenarios = 1;
  c.openings = 1;
  c.stage_hours = 100.0;
  c.stage_discount_rate = uni(0.0, 0.1);
  c.deficit_cost = 500.0;
  const int N = 2 + pick(2);
  for (int n = 0; n < N; ++n) c.buses.push_back({"N" + std::to_string(n), "", 230});
  auto bus = [&](int n) { return c.buses[n].id; };
  for (int n = 0; n + 1 < N; ++n)
    c.circuits.push_back({"E" + std::to_string(n), bus(n), bus(n + 1), uni(0.5, 3.0), uni(20, 60),
                          AssetStatus::kExisting, CircuitType::kLine});
  c.blocks = {{0.3, {}}, {0.7, {}}};
  for (int t = 0; t < c.stages; ++t) {
    std::vector<double> peak, base;
    for (int n = 0; n < N; ++n) {
      const double d = n == 0 ? uni(0, 20) : uni(30, 70);
      peak.push_back(d * 1.3 * (1.0 + 0.1 * t));
      base.push_back(d * 0.8 * (1.0 + 0.1 * t));
    }
    c.blocks[0].load.push_back(peak);
    c.blocks[1].load.push_back(base);
  }
  c.thermals.push_back(thermal("G0", bus(0), uni(80, 160), uni(10, 30)));
  c.thermals.push_back(thermal("G1", bus(N - 1), uni(10, 40), uni(80, 150)));

  const bool with_hydro = pick(2) == 0;
  if (with_hydro) {
    HydroPlant h;
    h.id = "H0";
    h.bus = bus(pick(N));
    h.max_storage = uni(20, 60);
    h.max_turbining = uni(10, 40);
    h.production_coefficient = uni(0.5, 1.5) * c.stage_hours / 10.0;
    h.max_block_power = uni(20, 50);
    h.initial_storage = uni(0, h.max_storage);
    c.hydros.push_back(h);
    c.inflow = InflowModel::stationary({uni(2, 15)}, {0.0}, {0.0});
    c.initial_inflow = {uni(2, 15)};
  } else {
    c.inflow = InflowModel::stationary({}, {}, {});
  }

  const int max_projects = 6 / c.stages;
  const int P = 1 + pick(max_projects);
  const double scale = c.deficit_cost * c.stage_hours * 10.0;
  for (int p = 0; p < P; ++p) {
    const std::string id = "P" + std::to_string(p);
    const std::string dev = "C" + std::to_string(p);
    const int kind = pick(4);
    if (kind == 0) {
      c.thermals.push_back(thermal(dev, bus(pick(N)), uni(10, 50), uni(20, 90), AssetStatus::kCandidate));
      c.candidates.push_back(project(id, ProjectKind::kThermal, dev, uni(0.1, 1.5) * scale));
    } else if (kind == 1) {
      const int a = pick(N);
      int b = pick(N - 1);
      if (b >= a) ++b;
      c.circuits.push_back({dev, bus(a), bus(b), uni(0.5, 3.0), uni(20, 60),
                            AssetStatus::kCandidate, CircuitType::kLine});
      c.candidates.push_back(project(id, ProjectKind::kCircuit, dev, uni(0.1, 1.5) * scale));
    } else if (kind == 2) {
      RenewablePlant w;
      w.id = dev;
      w.bus = bus(pick(N));
      w.nameplate_mw = 40;
      w.status = AssetStatus::kCandidate;
      w.production.assign(c.stages, std::vector<std::vector<double>>(2, std::vector<double>(1)));
      for (auto& st : w.production)
        for (auto& b : st) b[0] = uni(0, 40);
      c.renewables.push_back(w);
      c.candidates.push_back(project(id, ProjectKind::kRenewable, dev, uni(0.1, 1.5) * scale));
    } else {
      HydroPlant h;
      h.id = dev;
      h.bus = bus(pick(N));
      h.max_storage = uni(10, 40);
      h.max_turbining = uni(10, 30);
      h.production_coefficient = uni(0.5, 1.5) * c.stage_hours / 10.0;
      h.max_block_power = uni(20, 40);
      h.initial_storage = 0.0;
      h.status = AssetStatus::kCandidate;
      c.hydros.push_back(h);
      c.candidates.push_back(project(id, ProjectKind::kHydro, dev, uni(0.1, 1.5) * scale));
    }
    if (c.stages == 2 && pick(4) == 0) c.candidates.back().earliest_stage = 2;
  }
  const int H = static_cast<int>(c.hydros.size());
  if (H > 0) {
    std::vector<double> mu, zero(H, 0.0);
    for (int i = 0; i < H; ++i) mu.push_back(uni(2, 15));
    c.inflow = InflowModel::stationary(mu, zero, zero);
    c.initial_inflow.resize(H);
    for (int i = 0; i < H; ++i) c.initial_inflow[i] = uni(2, 15);
  }
  if (P >= 2 && pick(3) == 0) {
    const LogicKind k = static_cast<LogicKind>(pick(3));
    c.logic.push_back({k, {c.candidates[0].id, c.candidates[1].id}});
  }
  return c;
}

inline bool plan_respects_logic(const PlanningCase& c, const TrialPlan& plan) {
  auto index = [&](const std::string& id) {
    for (std::size_t p = 0; p < c.candidates.size(); ++p)
      if (c.candidates[p].id == id) return static_cast<int>(p);
    return -1;
  };
  auto total = [&](int p) {
    return std::accumulate(plan.built[p].begin(), plan.built[p].end(), 0.0);
  };
  for (const auto& rule : c.logic) {
    if (rule.kind == LogicKind::kExclusive) {
      double n = 0.0;
      for (const auto& id : rule.projects) n += plan.built[index(id)].back();
      if (n > 1.0) return false;
    } else {
      const double a = total(index(rule.projects[0])), b = total(index(rule.projects[1]));
      if (rule.kind == LogicKind::kAssociated && a != b) return false;
      if (rule.kind == LogicKind::kPrecedence && a < b) return false;
    }
  }
  return true;
}

// Every monotone plan that respects earliest stages and logic constraints.
inline std::vector<TrialPlan> enumerate_plans(const PlanningCase& c) {
  const int P = static_cast<int>(c.candidates.size());
  const int T = c.stages;
  std::vector<TrialPlan> out;
  std::vector<int> entry(P, 0);  // 0 = never, else 1-based entry stage
  std::function<void(int)> rec = [&](int p) {
    if (p == P) {
      TrialPlan plan = TrialPlan::nothing(c);
      for (int q = 0; q < P; ++q)
        for (int t = 0; t < T; ++t) plan.built[q][t] = entry[q] > 0 && t + 1 >= entry[q] ? 1.0 : 0.0;
      if (plan_respects_logic(c, plan)) out.push_back(plan);
      return;
    }
    for (int e = 0; e <= T; ++e) {
      if (e > 0 && e < c.candidates[p].earliest_stage) continue;
      entry[p] = e;
      rec(p + 1);
    }
  };
  rec(0);
  return out;
}

// Investment cost of a binary plan charged at the entry stage.
inline double oracle_investment(const PlanningCase& c, const TrialPlan& plan) {
  double v = 0.0;
  for (std::size_t p = 0; p < c.candidates.size(); ++p) {
    for (int t = 0; t < c.stages; ++t) {
      if (plan.built[p][t] > 0.5) {
        v += investment_coefficient(c, c.candidates[p], t + 1);
        break;
      }
    }
  }
  return v;
}

// Deterministic multi-stage operation cost at a binary plan, assembled as one
// LP over all stages.  Unbuilt devices are dropped and the DC network is the
// union of existing and built circuits.
inline double oracle_operation(const PlanningCase& c, const TrialPlan& plan) {
  const int T = c.stages, N = static_cast<int>(c.buses.size()), B = c.num_blocks();
  auto built = [&](const std::string& id, AssetStatus st, int t) {
    if (st == AssetStatus::kExisting) return true;
    for (std::size_t p = 0; p < c.candidates.size(); ++p)
      if (c.candidates[p].target == id) return plan.built[p][t] > 0.5;
    return false;
  };
  auto bus = [&](const std::string& id) { return *c.bus_index(id); };
  LinearProgram lp;
  std::vector<int> prev_v(c.hydros.size(), -1);
  std::vector<double> inflow = c.initial_inflow;
  for (int t = 0; t < T; ++t) {
    const double df = std::pow(1.0 + c.stage_discount_rate, -t);
    std::vector<std::vector<std::vector<Term>>> inj(B, std::vector<std::vector<Term>>(N));
    std::vector<int> v(c.hydros.size()), u(c.hydros.size()), s(c.hydros.size());
    for (std::size_t i = 0; i < c.hydros.size(); ++i) {
      const auto& h = c.hydros[i];
      const double on = built(h.id, h.status, t) ? 1.0 : 0.0;
      v[i] = lp.add_variable("v", 0, h.max_storage * on);
      u[i] = lp.add_variable("u", 0, h.max_turbining * on);
      s[i] = lp.add_variable("s", 0, kInf);
    }
    for (std::size_t i = 0; i < c.hydros.size(); ++i) {
      const auto& h = c.hydros[i];
      std::vector<Term> wb{{v[i], 1}, {u[i], 1}, {s[i], 1}};
      for (const auto& up : h.upstream)
        for (std::size_t m = 0; m < c.hydros.size(); ++m)
          if (c.hydros[m].id == up) {
            wb.push_back({u[m], -1});
            wb.push_back({s[m], -1});
          }
      double rhs = inflow[i];
      if (t == 0) rhs += h.initial_storage;
      else wb.push_back({prev_v[i], -1});
      lp.add_row("wb", wb, RowSense::kEqual, rhs);
      std::vector<Term> es{{u[i], -h.production_coefficient}};
      for (int b = 0; b < B; ++b) {
        const int e = lp.add_variable("e", 0, h.max_block_power);
        es.push_back({e, c.block_hours(b)});
        inj[b][bus(h.bus)].push_back({e, 1});
      }
      lp.add_row("es", es, RowSense::kEqual, 0);
    }
    prev_v = v;
    for (const auto& g : c.thermals) {
      if (!built(g.id, g.status, t)) continue;
      for (int b = 0; b < B; ++b)
        inj[b][bus(g.bus)].push_back(
            {lp.add_variable("g", 0, g.capacity, df * c.block_hours(b) * g.variable_cost), 1});
    }
    for (int b = 0; b < B; ++b) {
      std::vector<double> rhs(N);
      for (int n = 0; n < N; ++n) rhs[n] = c.blocks[b].load[t][n];
      for (const auto& w : c.renewables)
        if (built(w.id, w.status, t)) rhs[bus(w.bus)] -= w.production[t][b][0];
      std::vector<int> theta(N);
      for (int n = 0; n < N; ++n) {
        theta[n] = lp.add_variable("th", n == 0 ? 0.0 : -kInf, n == 0 ? 0.0 : kInf);
        inj[b][n].push_back({lp.add_variable("def", 0, kInf, df * c.block_hours(b) * c.deficit_cost), 1});
        inj[b][n].push_back({lp.add_variable("sur", 0, kInf), -1});
      }
      // Islands of the built network get their own reference angle.
      std::vector<int> comp(N);
      std::iota(comp.begin(), comp.end(), 0);
      std::function<int(int)> find = [&](int a) { return comp[a] == a ? a : comp[a] = find(comp[a]); };
      for (const auto& k : c.circuits)
        if (built(k.id, k.status, t)) comp[find(bus(k.from_bus))] = find(bus(k.to_bus));
      for (int n = 1; n < N; ++n) {
        bool first = true;
        for (int m = 0; m < n; ++m)
          if (find(m) == find(n)) first = false;
        if (first) lp.variables[theta[n]].lower = lp.variables[theta[n]].upper = 0.0;
      }
      for (const auto& k : c.circuits) {
        if (!built(k.id, k.status, t)) continue;
        const int f = lp.add_variable("f", -k.rating, k.rating);
        const int a = bus(k.from_bus), z = bus(k.to_bus);
        inj[b][a].push_back({f, -1});
        inj[b][z].push_back({f, 1});
        lp.add_row("kvl", {{f, 1}, {theta[a], -k.susceptance}, {theta[z], k.susceptance}},
                   RowSense::kEqual, 0);
      }
      for (int n = 0; n < N; ++n) lp.add_row("bal", inj[b][n], RowSense::kEqual, rhs[n]);
    }
    // Deterministic inflow recursion (zero variance).
    for (std::size_t i = 0; i < inflow.size(); ++i)
      inflow[i] = c.inflow.mean[c.inflow.season_of(t + 1)][i];
  }
  const auto sol = solve_lp(lp);
  if (!sol.optimal()) throw std::runtime_error("oracle operation LP not optimal");
  return sol.objective;
}

struct EnumerationResult {
  TrialPlan plan;
  double total = 0.0;
};

inline EnumerationResult enumerate_optimum(const PlanningCase& c) {
  EnumerationResult best;
  best.total = kInf;
  for (const auto& plan : enumerate_plans(c)) {
    const double total = oracle_investment(c, plan) + oracle_operation(c, plan);
    if (total < best.total) best = {plan, total};
  }
  return best;
}

}  // namespace gtep::toys
