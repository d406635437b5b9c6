#pragma once

// Benders coordination between the investment master and the SDDP operation
// module.

#include <chrono>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gtep/investment.hpp"
#include "gtep/model.hpp"
#include "gtep/network.hpp"
#include "gtep/sddp.hpp"

namespace gtep {

struct RunConfig {
  double target_gap = 0.03;
  int max_iterations = 80;
  std::uint64_t seed = 1;
  int workers = 1;
  double m_max = 0.0;  // big-M fallback for disconnected corridors, 0 = automatic
  SddpOptions sddp;
  SolverTolerances lp;
};

struct IterationRecord {
  int iteration = 0;
  TrialPlan plan;
  double master_objective = 0.0;
  double lower = 0.0;  // best lower bound so far
  double investment = 0.0;
  double operation = 0.0;         // SDDP forward mean
  double operation_stddev = 0.0;
  double upper = 0.0;             // best investment + operation so far
  double gap = 0.0;               // (upper - lower) / upper
  int sddp_iterations = 0;
  bool sddp_converged = false;
  double seconds = 0.0;
};

struct PlanResult {
  TrialPlan best_plan;
  double best_investment = 0.0;
  double best_operation = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  bool converged = false;
  std::vector<IterationRecord> history;
  std::vector<BendersCut> cuts;
  SddpResult best_sddp;
};

inline double relative_gap(double upper, double lower) {
  const double diff = upper - lower;
  if (std::abs(upper) < 1e-12) return std::abs(diff) < 1e-12 ? 0.0 : kInf;
  return diff / std::abs(upper);
}

// Investment-space cut from the forward records of an SDDP run at `plan`.
inline BendersCut assemble_investment_cut(const PlanningCase& c, const NetworkTopology& topo,
                                          const TrialPlan& plan, const ForwardResult& fr) {
  const int T = c.stages;
  const int P = static_cast<int>(c.candidates.size());
  const int S = static_cast<int>(fr.records.size());
  const int B = c.num_blocks();
  BendersCut cut;
  cut.coefficient.assign(P, std::vector<double>(T, 0.0));
  cut.constant.assign(T, 0.0);
  if (S == 0) throw std::invalid_argument("assemble_investment_cut: no forward records");

  auto device_index = [](const auto& list, const std::string& id) {
    for (int i = 0; i < static_cast<int>(list.size()); ++i)
      if (list[i].id == id) return i;
    throw DataError("candidate targets unknown device '" + id + "'");
  };

  for (int p = 0; p < P; ++p) {
    const auto& proj = c.candidates[p];
    for (int t = 0; t < T; ++t) {
      double sum = 0.0;
      for (int s = 0; s < S; ++s) {
        const ForwardRecord& r = fr.records[s][t];
        const StageDuals& d = r.duals;
        switch (proj.kind) {
          case ProjectKind::kHydro: {
            const int i = device_index(c.hydros, proj.target);
            sum += c.hydros[i].max_storage * d.storage_cap[i] +
                   c.hydros[i].max_turbining * d.turbine_cap[i];
            break;
          }
          case ProjectKind::kThermal: {
            const int j = device_index(c.thermals, proj.target);
            for (int b = 0; b < B; ++b) sum += c.thermals[j].capacity * d.thermal_cap[j][b];
            break;
          }
          case ProjectKind::kRenewable: {
            const int w = device_index(c.renewables, proj.target);
            const int n = *c.bus_index(c.renewables[w].bus);
            for (int b = 0; b < B; ++b)
              sum -= c.renewables[w].production[t][b][r.state.column] * d.balance[n][b];
            break;
          }
          case ProjectKind::kCircuit: {
            const int k = device_index(c.circuits, proj.target);
            for (int b = 0; b < B; ++b)
              sum += -topo.big_m[k] * (d.kvl_upper[k][b] + d.kvl_lower[k][b]) +
                     topo.rating[k] * (d.flow_upper[k][b] + d.flow_lower[k][b]);
            break;
          }
        }
      }
      cut.coefficient[p][t] = sum / S;
    }
  }
  for (int t = 0; t < T; ++t) {
    double cost = 0.0;
    for (int s = 0; s < S; ++s) cost += fr.records[s][t].immediate_cost;
    cost /= S;
    for (int p = 0; p < P; ++p) cost -= cut.coefficient[p][t] * plan.built[p][t];
    cut.constant[t] = cost;
  }
  return cut;
}

inline SddpOptions sddp_options(const RunConfig& cfg) {
  SddpOptions o = cfg.sddp;
  o.seed = cfg.seed;
  o.workers = cfg.workers;
  o.lp = cfg.lp;
  return o;
}

// Expected operation cost of a fixed plan under the run's seed.
inline SddpResult simulate_plan(const PlanningCase& c, const NetworkTopology& topo,
                                const TrialPlan& plan, const RunConfig& cfg) {
  return run_sddp(c, topo, plan, sddp_options(cfg));
}

using IterationCallback = std::function<void(const IterationRecord&)>;

inline PlanResult run_benders(const PlanningCase& c, const RunConfig& cfg,
                              const IterationCallback& on_iteration = {}) {
  if (!(cfg.target_gap > 0.0 && cfg.target_gap < 1.0))
    throw std::invalid_argument("target gap must lie in (0, 1)");
  if (cfg.max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
  const NetworkTopology topo = build_topology(c, cfg.m_max);
  PlanResult res;
  res.lower = -kInf;
  res.upper = kInf;
  for (int m = 1; m <= cfg.max_iterations; ++m) {
    const auto start = std::chrono::steady_clock::now();
    const MasterSolution master = solve_master(c, build_master(c, res.cuts), cfg.lp);
    if (master.status == LpStatus::kInfeasible)
      throw DataError("investment master is infeasible (contradictory logic constraints)");
    if (!master.ok())
      throw SolverFailure(std::string("investment master ") + to_string(master.status));

    SddpResult op = simulate_plan(c, topo, master.plan, cfg);
    IterationRecord rec;
    rec.iteration = m;
    rec.plan = master.plan;
    rec.master_objective = master.objective;
    rec.investment = master.investment;
    rec.operation = op.forward.mean;
    rec.operation_stddev = op.forward.stddev;
    rec.sddp_iterations = op.iterations;
    rec.sddp_converged = op.converged;

    const double total = rec.investment + rec.operation;
    // With no candidates the plan space is a single point and the cut at it
    // is exact, so the bound closes immediately.
    const double lower = c.candidates.empty() ? total : master.objective;
    res.lower = std::max(res.lower, lower);
    if (total < res.upper) {
      res.upper = total;
      res.best_plan = master.plan;
      res.best_investment = rec.investment;
      res.best_operation = rec.operation;
      res.best_sddp = op;
    }
    rec.lower = res.lower;
    rec.upper = res.upper;
    rec.gap = relative_gap(res.upper, res.lower);
    res.gap = rec.gap;

    BendersCut cut = assemble_investment_cut(c, topo, master.plan, op.forward);
    cut.iteration = m;
    res.cuts.push_back(std::move(cut));
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.history.push_back(rec);
    if (on_iteration) on_iteration(rec);
    if (rec.gap <= cfg.target_gap) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gtep
