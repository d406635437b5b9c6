#pragma once

// Investment master: binaries x[p][t] (cumulative built status), expected
// operation cost proxy w bounded below by accumulated Benders cuts.

#include <cmath>
#include <string>
#include <vector>

#include "gtep/lp.hpp"
#include "gtep/model.hpp"

namespace gtep {

// w >= sum_t ( sum_p coefficient[p][t] x[p][t] + constant[t] )
struct BendersCut {
  std::vector<std::vector<double>> coefficient;  // [project][stage]
  std::vector<double> constant;                  // per stage
  int iteration = 0;

  double evaluate(const TrialPlan& plan) const {
    double v = 0.0;
    for (double c : constant) v += c;
    for (std::size_t p = 0; p < coefficient.size(); ++p)
      for (std::size_t t = 0; t < coefficient[p].size(); ++t) v += coefficient[p][t] * plan.built[p][t];
    return v;
  }
};

// Objective coefficient of x[p][t]: the build cost is charged once through
// x[p][t] - x[p][t-1], so x[p][t] carries I(t) - I(t+1).
inline std::vector<std::vector<double>> master_costs(const PlanningCase& c) {
  const int T = c.stages;
  std::vector<std::vector<double>> cost(c.candidates.size(), std::vector<double>(T, 0.0));
  for (std::size_t p = 0; p < c.candidates.size(); ++p) {
    const auto& proj = c.candidates[p];
    for (int t = std::max(0, proj.earliest_stage - 1); t < T; ++t) {
      const double here = investment_coefficient(c, proj, t + 1);
      const double next = t + 1 < T ? investment_coefficient(c, proj, t + 2) : 0.0;
      cost[p][t] = here - next;
    }
  }
  return cost;
}

inline double plan_investment_cost(const PlanningCase& c, const TrialPlan& plan) {
  const auto cost = master_costs(c);
  double v = 0.0;
  for (std::size_t p = 0; p < cost.size(); ++p)
    for (std::size_t t = 0; t < cost[p].size(); ++t) v += cost[p][t] * plan.built[p][t];
  return v;
}

// 1-based stage at which project p enters, 0 if never built.
inline int entry_stage(const TrialPlan& plan, int p) {
  for (std::size_t t = 0; t < plan.built[p].size(); ++t)
    if (plan.built[p][t] > 0.5) return static_cast<int>(t) + 1;
  return 0;
}

struct MasterProblem {
  MilpRequest request;
  std::vector<std::vector<int>> x;  // [project][stage] variable index
  int w = -1;
};

inline MasterProblem build_master(const PlanningCase& c, const std::vector<BendersCut>& cuts,
                                  bool relax = false) {
  MasterProblem m;
  LinearProgram& lp = m.request.lp;
  const int T = c.stages;
  const int P = static_cast<int>(c.candidates.size());
  const auto cost = master_costs(c);
  m.x.assign(P, std::vector<int>(T, -1));
  for (int p = 0; p < P; ++p) {
    const auto& proj = c.candidates[p];
    for (int t = 0; t < T; ++t) {
      const double ub = t + 1 < proj.earliest_stage ? 0.0 : 1.0;
      m.x[p][t] = lp.add_variable("x_" + proj.id + "_" + std::to_string(t + 1), 0.0, ub, cost[p][t]);
      if (!relax) m.request.binaries.push_back(m.x[p][t]);
    }
  }
  m.w = lp.add_variable("w", 0.0, kInf, 1.0);

  for (int p = 0; p < P; ++p)
    for (int t = 1; t < T; ++t)
      lp.add_row("mono_" + c.candidates[p].id + "_" + std::to_string(t + 1),
                 {{m.x[p][t], 1.0}, {m.x[p][t - 1], -1.0}}, RowSense::kGreaterEqual, 0.0);

  auto index_of = [&](const std::string& id) {
    for (int p = 0; p < P; ++p)
      if (c.candidates[p].id == id) return p;
    throw DataError("logic constraint references unknown project '" + id + "'");
  };
  int k = 0;
  for (const auto& rule : c.logic) {
    const std::string name = "logic" + std::to_string(k++);
    if (rule.kind == LogicKind::kExclusive) {
      std::vector<Term> terms;
      for (const auto& id : rule.projects) terms.push_back({m.x[index_of(id)][T - 1], 1.0});
      lp.add_row(name, terms, RowSense::kLessEqual, 1.0);
      continue;
    }
    const int a = index_of(rule.projects.at(0)), b = index_of(rule.projects.at(1));
    std::vector<Term> terms;
    for (int t = 0; t < T; ++t) {
      terms.push_back({m.x[a][t], 1.0});
      terms.push_back({m.x[b][t], -1.0});
    }
    lp.add_row(name, terms,
               rule.kind == LogicKind::kAssociated ? RowSense::kEqual : RowSense::kGreaterEqual, 0.0);
  }

  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const auto& cut = cuts[i];
    std::vector<Term> terms{{m.w, 1.0}};
    for (int p = 0; p < P; ++p)
      for (int t = 0; t < T; ++t)
        if (cut.coefficient[p][t] != 0.0) terms.push_back({m.x[p][t], -cut.coefficient[p][t]});
    double rhs = 0.0;
    for (double v : cut.constant) rhs += v;
    lp.add_row("cut" + std::to_string(i + 1), terms, RowSense::kGreaterEqual, rhs);
  }
  return m;
}

struct MasterSolution {
  LpStatus status = LpStatus::kNumericalFailure;
  TrialPlan plan;
  double w = 0.0;
  double investment = 0.0;
  double objective = 0.0;  // investment + w, a lower bound on the total cost
  long nodes = 0;

  bool ok() const { return status == LpStatus::kOptimal; }
};

inline MasterSolution solve_master(const PlanningCase& c, const MasterProblem& m,
                                   const SolverTolerances& tol = {}) {
  MasterSolution out;
  const LpSolution sol = m.request.binaries.empty() ? solve_lp(m.request.lp, tol)
                                                    : solve_milp(m.request, tol);
  out.status = sol.status;
  out.nodes = sol.nodes;
  if (!sol.optimal()) return out;
  out.plan = TrialPlan::nothing(c);
  const bool integral = !m.request.binaries.empty();
  for (std::size_t p = 0; p < m.x.size(); ++p) {
    for (std::size_t t = 0; t < m.x[p].size(); ++t) {
      double v = sol.primal[m.x[p][t]];
      if (integral) v = std::round(v);
      if (t > 0 && integral) v = std::max(v, out.plan.built[p][t - 1]);
      out.plan.built[p][t] = v;
    }
  }
  out.w = sol.primal[m.w];
  out.investment = plan_investment_cost(c, out.plan);
  out.objective = out.investment + out.w;
  return out;
}

}  // namespace gtep
