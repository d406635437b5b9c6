#pragma once

// Stochastic dual dynamic programming for the transmission-constrained
// hydrothermal operation problem at a fixed trial plan.
//
// Stage LP (0-based stage t, all costs in present value):
//   min  sum_tau h_tau df_t (sum_j c_j g_j + deficit_cost sum_n def_n)
//        + (1/L) sum_l alpha_l
//   storage balance, storage/turbining caps, hydro energy split, thermal
//   caps, DC network per block, opening inflow identities and future-cost
//   cuts per (hyperplane, opening).
//
// Openings pair an inflow noise draw xi_l with renewable scenario column
// l mod S.  Future-cost hyperplanes are affine in end storage, inflow and the
// net renewable injection per (block, bus), so one pool per stage is valid
// for every renewable column.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gtep/inflow.hpp"
#include "gtep/lp.hpp"
#include "gtep/model.hpp"
#include "gtep/network.hpp"

namespace gtep {

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StageState {
  std::vector<double> storage;  // at the start of the stage, hm3
  std::vector<double> inflow;   // during the stage, hm3
  int column = 0;               // renewable scenario column
};

struct Hyperplane {
  std::vector<double> storage;                 // per hydro
  std::vector<double> inflow;                  // per hydro
  std::vector<std::vector<double>> renewable;  // [block][bus], per MW injected
  double constant = 0.0;

  double evaluate(const std::vector<double>& v, const std::vector<double>& a,
                  const std::vector<std::vector<double>>& r) const {
    double q = constant;
    for (std::size_t i = 0; i < storage.size(); ++i) q += storage[i] * v[i] + inflow[i] * a[i];
    for (std::size_t b = 0; b < renewable.size(); ++b)
      for (std::size_t n = 0; n < renewable[b].size(); ++n) q += renewable[b][n] * r[b][n];
    return q;
  }
};

// pool[t] approximates the cost-to-go from the start of stage t.
using FcfPool = std::vector<std::vector<Hyperplane>>;

struct StageDuals {
  std::vector<double> storage;                  // water balance, per hydro
  std::vector<std::vector<double>> inflow;      // opening identities [l][hydro]
  std::vector<double> storage_cap;              // candidate hydros, else 0
  std::vector<double> turbine_cap;              // candidate hydros, else 0
  std::vector<std::vector<double>> thermal_cap; // [thermal][block], candidates
  std::vector<std::vector<double>> balance;     // [bus][block]
  std::vector<std::vector<double>> kvl_upper;   // [circuit][block], candidates
  std::vector<std::vector<double>> kvl_lower;
  std::vector<std::vector<double>> flow_upper;
  std::vector<std::vector<double>> flow_lower;
};

struct ForwardRecord {
  int stage = 0;
  int scenario = 0;
  int opening = -1;  // opening that produced this stage's state (-1 at stage 0)
  StageState state;
  double immediate_cost = 0.0;
  double future_cost = 0.0;
  std::vector<double> storage_end, turbined, spilled;  // per hydro
  std::vector<std::vector<double>> hydro_power;        // [hydro][block] MW
  std::vector<std::vector<double>> thermal;            // [thermal][block] MW
  std::vector<std::vector<double>> flow;               // [circuit][block] MW
  std::vector<std::vector<double>> deficit;            // [bus][block] MW
  std::vector<std::vector<double>> surplus;            // [bus][block] MW
  std::vector<std::vector<double>> renewable;          // [bus][block] MW injected
  std::vector<std::vector<double>> load;               // [bus][block] MW
  std::vector<std::vector<double>> marginal_cost;      // [bus][block] $/MWh
  StageDuals duals;
};

struct SddpOptions {
  int max_iterations = 10;
  bool check_convergence = true;
  double z = 1.96;
  double tolerance = 1e-8;  // relative slack in the convergence test
  std::uint64_t seed = 1;
  int workers = 1;
  bool warm_start = true;
  SolverTolerances lp;
};

struct ConvergenceStatus {
  bool converged = false;
  double threshold = 0.0;  // mean - z * stderr
};

// lower >= mean - z * stderr of the forward costs (stderr 0 for one scenario).
inline ConvergenceStatus sddp_converged(double lower, const std::vector<double>& costs,
                                        double z = 1.96, double tolerance = 1e-8) {
  const double n = static_cast<double>(costs.size());
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= n;
  double var = 0.0;
  for (double c : costs) var += (c - mean) * (c - mean);
  const double stderr_ = costs.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  ConvergenceStatus st;
  st.threshold = mean - z * stderr_;
  st.converged = lower >= st.threshold - tolerance * std::max(1.0, std::abs(mean));
  return st;
}

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0x632BE59BD9B4E019ULL));
}

// Runs f(i) for i in [0, count) on up to `workers` threads.
template <class F>
void parallel_for(int count, int workers, F&& f) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// Variable and row indices of one stage LP.
struct StageLayout {
  std::vector<int> storage, turbine, spill;      // per hydro
  std::vector<std::vector<int>> hydro_power;     // [hydro][block]
  std::vector<std::vector<int>> thermal;         // [thermal][block]
  std::vector<std::vector<int>> deficit;         // [bus][block]
  std::vector<std::vector<int>> surplus;         // [bus][block]
  std::vector<NetworkBlock> network;             // per block
  std::vector<std::vector<int>> opening_inflow;  // [opening][hydro]
  std::vector<int> alpha;                        // per opening

  std::vector<int> water_balance;                // per hydro
  std::vector<int> energy_split;                 // per hydro
  std::vector<int> storage_cap, turbine_cap;     // per hydro, -1 if existing
  std::vector<std::vector<int>> thermal_cap;     // [thermal][block], -1 if existing
  std::vector<std::vector<int>> inflow_row;      // [opening][hydro]
  int cuts_synced = 0;                           // hyperplanes with rows
};

struct StageSolve {
  LpSolution solution;
  ForwardRecord record;
  Hyperplane cut;
  std::vector<ConditionedInflow> openings;  // next-stage inflows
};

// Operation problem of one case at one trial plan.
class OperationModel {
 public:
  OperationModel(const PlanningCase& c, const NetworkTopology& topo, const TrialPlan& plan,
                 std::uint64_t seed = 1, SolverTolerances tol = {})
      : c_(c), topo_(topo), plan_(plan), solver_(tol) {
    const int T = c.stages;
    if (static_cast<int>(plan.built.size()) != static_cast<int>(c.candidates.size()))
      throw std::invalid_argument("trial plan does not cover every candidate project");
    for (const auto& row : plan.built)
      if (static_cast<int>(row.size()) != T)
        throw std::invalid_argument("trial plan does not cover every stage");
    auto factors = [&](const std::string& id, AssetStatus st) {
      std::vector<double> f(T, 1.0);
      if (st == AssetStatus::kCandidate) {
        const int p = project_for_device(c, id);
        for (int t = 0; t < T; ++t) f[t] = p < 0 ? 0.0 : plan.at(p, t);
      }
      return f;
    };
    for (const auto& h : c.hydros) hydro_x_.push_back(factors(h.id, h.status));
    for (const auto& g : c.thermals) thermal_x_.push_back(factors(g.id, g.status));
    for (const auto& w : c.renewables) renewable_x_.push_back(factors(w.id, w.status));
    for (const auto& k : c.circuits) circuit_x_.push_back(factors(k.id, k.status));
    for (const auto& w : c.renewables) renewable_bus_.push_back(*c.bus_index(w.bus));
    for (const auto& h : c.hydros) hydro_bus_.push_back(*c.bus_index(h.bus));
    for (const auto& g : c.thermals) thermal_bus_.push_back(*c.bus_index(g.bus));
    for (const auto& h : c.hydros) {
      std::vector<int> up;
      for (const auto& u : h.upstream)
        for (int m = 0; m < static_cast<int>(c.hydros.size()); ++m)
          if (c.hydros[m].id == u) up.push_back(m);
      upstream_.push_back(up);
    }
    // Opening noise for each transition into stage t >= 1, fixed for the run.
    noise_.resize(T);
    for (int t = 1; t < T; ++t)
      noise_[t] = sample_noise(c.inflow, c.openings, detail::mix_seed(seed, 0x0BE11ULL, t));
    templates_.resize(T);
  }

  const PlanningCase& planning_case() const { return c_; }
  const NetworkTopology& topology() const { return topo_; }
  int stages() const { return c_.stages; }
  int openings() const { return c_.openings; }
  const LpSolver& solver() const { return solver_; }

  double discount(int t) const { return stage_discount_factor(c_, t); }
  int opening_column(int l) const { return l % std::max(1, c_.scenarios); }

  // Net renewable injection [block][bus] at stage t for scenario column `col`.
  std::vector<std::vector<double>> renewable_injection(int t, int col) const {
    std::vector<std::vector<double>> r(c_.num_blocks(), std::vector<double>(c_.buses.size(), 0.0));
    for (std::size_t w = 0; w < c_.renewables.size(); ++w)
      for (int b = 0; b < c_.num_blocks(); ++b)
        r[b][renewable_bus_[w]] += c_.renewables[w].production[t][b][col] * renewable_x_[w][t];
    return r;
  }

  StageState initial_state() const {
    StageState s;
    for (const auto& h : c_.hydros) s.storage.push_back(h.initial_storage);
    s.inflow = c_.initial_inflow;
    s.column = 0;
    return s;
  }

  std::vector<ConditionedInflow> condition_openings(int t, const StageState& state) const {
    std::vector<ConditionedInflow> out;
    if (t + 1 >= c_.stages) return out;
    for (const auto& xi : noise_[t + 1])
      out.push_back(condition_next(c_.inflow, t, state.inflow, xi));
    return out;
  }

  // Stage LP with the pool for stage t+1 and the given state.  Rows for the
  // pool's hyperplanes are appended in pool order, one per opening.
  LinearProgram build_stage_lp(int t, const StageState& state,
                               const std::vector<ConditionedInflow>& openings,
                               const FcfPool& pool, StageLayout* layout_out = nullptr) {
    sync_template(t, pool);
    LinearProgram lp = templates_[t].lp;
    set_state(t, lp, templates_[t].layout, state, openings);
    if (layout_out) *layout_out = templates_[t].layout;
    return lp;
  }

  // Adds rows for hyperplanes appended to pool[t+1] since the last call.
  // Not thread safe; call before solving stage t concurrently.
  void sync_template(int t, const FcfPool& pool) {
    auto& tpl = templates_[t];
    if (!tpl.built) build_template(t);
    if (t + 1 >= c_.stages) return;
    const auto& cuts = pool[t + 1];
    auto& L = tpl.layout;
    for (int p = L.cuts_synced; p < static_cast<int>(cuts.size()); ++p) {
      const Hyperplane& h = cuts[p];
      for (int l = 0; l < c_.openings; ++l) {
        std::vector<Term> terms{{L.alpha[l], 1.0}};
        for (std::size_t i = 0; i < c_.hydros.size(); ++i) {
          if (h.storage[i] != 0.0) terms.push_back({L.storage[i], -h.storage[i]});
          if (h.inflow[i] != 0.0) terms.push_back({L.opening_inflow[l][i], -h.inflow[i]});
        }
        double rhs = h.constant;
        const auto& r = opening_renewables_[t][l];
        for (std::size_t b = 0; b < h.renewable.size(); ++b)
          for (std::size_t n = 0; n < h.renewable[b].size(); ++n) rhs += h.renewable[b][n] * r[b][n];
        tpl.lp.add_row("cut" + std::to_string(p) + "_" + std::to_string(l), std::move(terms),
                       RowSense::kGreaterEqual, rhs);
      }
    }
    L.cuts_synced = static_cast<int>(cuts.size());
  }

  // Solves stage t at `state` using the (already synced) template.
  StageSolve solve_stage(int t, const StageState& state, const LpBasis* hint = nullptr) const {
    const auto& tpl = templates_[t];
    if (!tpl.built) throw std::logic_error("stage template not synced");
    StageSolve out;
    out.openings = condition_openings(t, state);
    LinearProgram lp = tpl.lp;
    set_state(t, lp, tpl.layout, state, out.openings);
    out.solution = solver_.solve(lp, hint);
    if (!out.solution.optimal())
      throw SolverFailure("stage " + std::to_string(t + 1) + " LP " +
                          to_string(out.solution.status) + " (complete recourse violated)");
    extract(t, lp, tpl.layout, state, out);
    return out;
  }

 private:
  struct Template {
    bool built = false;
    LinearProgram lp;
    StageLayout layout;
  };

  void build_template(int t) {
    auto& tpl = templates_[t];
    LinearProgram& lp = tpl.lp;
    StageLayout& L = tpl.layout;
    const int H = static_cast<int>(c_.hydros.size());
    const int J = static_cast<int>(c_.thermals.size());
    const int N = static_cast<int>(c_.buses.size());
    const int B = c_.num_blocks();
    const int K = topo_.num_circuits();
    const double df = discount(t);

    for (int i = 0; i < H; ++i) {
      const auto& h = c_.hydros[i];
      const bool cand = h.status == AssetStatus::kCandidate;
      L.storage.push_back(lp.add_variable("v_" + h.id, 0.0, cand ? kInf : h.max_storage));
      L.turbine.push_back(lp.add_variable("u_" + h.id, 0.0, cand ? kInf : h.max_turbining));
      L.spill.push_back(lp.add_variable("s_" + h.id, 0.0, kInf));
      std::vector<int> e;
      for (int b = 0; b < B; ++b)
        e.push_back(lp.add_variable("e_" + h.id + "_" + std::to_string(b), 0.0, h.max_block_power));
      L.hydro_power.push_back(e);
    }
    for (int j = 0; j < J; ++j) {
      const auto& g = c_.thermals[j];
      const bool cand = g.status == AssetStatus::kCandidate;
      std::vector<int> v;
      for (int b = 0; b < B; ++b)
        v.push_back(lp.add_variable("g_" + g.id + "_" + std::to_string(b), 0.0,
                                    cand ? kInf : g.capacity,
                                    df * c_.block_hours(b) * g.variable_cost));
      L.thermal.push_back(v);
    }
    L.deficit.assign(N, {});
    L.surplus.assign(N, {});
    for (int n = 0; n < N; ++n) {
      for (int b = 0; b < B; ++b) {
        const std::string tag = c_.buses[n].id + "_" + std::to_string(b);
        L.deficit[n].push_back(
            lp.add_variable("def_" + tag, 0.0, kInf, df * c_.block_hours(b) * c_.deficit_cost));
        L.surplus[n].push_back(lp.add_variable("sur_" + tag, 0.0, kInf));
      }
    }

    // Water balance: v + u + s - sum_upstream (u + s) = v0 + a.
    for (int i = 0; i < H; ++i) {
      std::vector<Term> terms{{L.storage[i], 1.0}, {L.turbine[i], 1.0}, {L.spill[i], 1.0}};
      for (int m : upstream_[i]) {
        terms.push_back({L.turbine[m], -1.0});
        terms.push_back({L.spill[m], -1.0});
      }
      L.water_balance.push_back(lp.add_row("wb_" + c_.hydros[i].id, terms, RowSense::kEqual, 0.0));
    }
    for (int i = 0; i < H; ++i) {
      const auto& h = c_.hydros[i];
      std::vector<Term> terms{{L.turbine[i], -h.production_coefficient}};
      for (int b = 0; b < B; ++b) terms.push_back({L.hydro_power[i][b], c_.block_hours(b)});
      L.energy_split.push_back(lp.add_row("es_" + h.id, terms, RowSense::kEqual, 0.0));
    }
    for (int i = 0; i < H; ++i) {
      const auto& h = c_.hydros[i];
      if (h.status != AssetStatus::kCandidate) {
        L.storage_cap.push_back(-1);
        L.turbine_cap.push_back(-1);
        continue;
      }
      const double x = hydro_x_[i][t];
      L.storage_cap.push_back(lp.add_row("vcap_" + h.id, {{L.storage[i], 1.0}},
                                         RowSense::kLessEqual, h.max_storage * x));
      L.turbine_cap.push_back(lp.add_row("ucap_" + h.id, {{L.turbine[i], 1.0}},
                                         RowSense::kLessEqual, h.max_turbining * x));
    }
    L.thermal_cap.assign(J, std::vector<int>(B, -1));
    for (int j = 0; j < J; ++j) {
      const auto& g = c_.thermals[j];
      if (g.status != AssetStatus::kCandidate) continue;
      for (int b = 0; b < B; ++b)
        L.thermal_cap[j][b] =
            lp.add_row("gcap_" + g.id + "_" + std::to_string(b), {{L.thermal[j][b], 1.0}},
                       RowSense::kLessEqual, g.capacity * thermal_x_[j][t]);
    }

    std::vector<double> built(K);
    for (int k = 0; k < K; ++k) built[k] = circuit_x_[k][t];
    for (int b = 0; b < B; ++b) {
      std::vector<std::vector<Term>> inj(N);
      for (int i = 0; i < H; ++i) inj[hydro_bus_[i]].push_back({L.hydro_power[i][b], 1.0});
      for (int j = 0; j < J; ++j) inj[thermal_bus_[j]].push_back({L.thermal[j][b], 1.0});
      for (int n = 0; n < N; ++n) {
        inj[n].push_back({L.deficit[n][b], 1.0});
        inj[n].push_back({L.surplus[n][b], -1.0});
      }
      const std::vector<double> zero(N, 0.0);
      L.network.push_back(
          add_dc_network(lp, topo_, built, inj, zero, "_" + std::to_string(b)));
    }

    if (t + 1 < c_.stages) {
      const int nl = c_.openings;
      for (int l = 0; l < nl; ++l) {
        std::vector<int> a;
        for (int i = 0; i < H; ++i)
          a.push_back(lp.add_variable("a_" + std::to_string(l) + "_" + c_.hydros[i].id, -kInf, kInf));
        L.opening_inflow.push_back(a);
        L.alpha.push_back(lp.add_variable("alpha_" + std::to_string(l), 0.0, kInf, 1.0 / nl));
      }
      for (int l = 0; l < nl; ++l) {
        std::vector<int> rows;
        for (int i = 0; i < H; ++i)
          rows.push_back(lp.add_row("ai_" + std::to_string(l) + "_" + c_.hydros[i].id,
                                    {{L.opening_inflow[l][i], 1.0}}, RowSense::kEqual, 0.0));
        L.inflow_row.push_back(rows);
      }
      opening_renewables_.resize(c_.stages);
      opening_renewables_[t].clear();
      for (int l = 0; l < nl; ++l)
        opening_renewables_[t].push_back(renewable_injection(t + 1, opening_column(l)));
    }
    tpl.built = true;
  }

  void set_state(int t, LinearProgram& lp, const StageLayout& L, const StageState& state,
                 const std::vector<ConditionedInflow>& openings) const {
    const int H = static_cast<int>(c_.hydros.size());
    for (int i = 0; i < H; ++i)
      lp.rows[L.water_balance[i]].rhs = state.storage[i] + state.inflow[i];
    const auto r = renewable_injection(t, state.column);
    for (int b = 0; b < c_.num_blocks(); ++b)
      for (std::size_t n = 0; n < c_.buses.size(); ++n)
        lp.rows[L.network[b].balance_row[n]].rhs = c_.blocks[b].load[t][n] - r[b][n];
    for (std::size_t l = 0; l < L.inflow_row.size(); ++l)
      for (int i = 0; i < H; ++i) lp.rows[L.inflow_row[l][i]].rhs = openings[l].inflow[i];
  }

  void extract(int t, const LinearProgram& lp, const StageLayout& L, const StageState& state,
               StageSolve& out) const {
    const auto& x = out.solution.primal;
    const auto& y = out.solution.duals;
    const int H = static_cast<int>(c_.hydros.size());
    const int J = static_cast<int>(c_.thermals.size());
    const int N = static_cast<int>(c_.buses.size());
    const int B = c_.num_blocks();
    const int K = topo_.num_circuits();
    ForwardRecord& rec = out.record;
    rec.stage = t;
    rec.state = state;

    double future = 0.0;
    for (int a : L.alpha) future += lp.variables[a].cost * x[a];
    rec.future_cost = future;
    rec.immediate_cost = out.solution.objective - future;

    auto grid = [&](int rows) { return std::vector<std::vector<double>>(rows, std::vector<double>(B, 0.0)); };
    rec.hydro_power = grid(H);
    rec.thermal = grid(J);
    rec.flow = grid(K);
    rec.deficit = grid(N);
    rec.surplus = grid(N);
    rec.renewable = grid(N);
    rec.load = grid(N);
    rec.marginal_cost = grid(N);
    for (int i = 0; i < H; ++i) {
      rec.storage_end.push_back(x[L.storage[i]]);
      rec.turbined.push_back(x[L.turbine[i]]);
      rec.spilled.push_back(x[L.spill[i]]);
      for (int b = 0; b < B; ++b) rec.hydro_power[i][b] = x[L.hydro_power[i][b]];
    }
    for (int j = 0; j < J; ++j)
      for (int b = 0; b < B; ++b) rec.thermal[j][b] = x[L.thermal[j][b]];
    const auto r = renewable_injection(t, state.column);
    const double df = discount(t);
    for (int b = 0; b < B; ++b) {
      for (int k = 0; k < K; ++k) rec.flow[k][b] = x[L.network[b].flow[k]];
      for (int n = 0; n < N; ++n) {
        rec.deficit[n][b] = x[L.deficit[n][b]];
        rec.surplus[n][b] = x[L.surplus[n][b]];
        rec.renewable[n][b] = r[b][n];
        rec.load[n][b] = c_.blocks[b].load[t][n];
        rec.marginal_cost[n][b] = y[L.network[b].balance_row[n]] / (df * c_.block_hours(b));
      }
    }

    StageDuals& d = rec.duals;
    d.storage.resize(H);
    d.storage_cap.assign(H, 0.0);
    d.turbine_cap.assign(H, 0.0);
    for (int i = 0; i < H; ++i) {
      d.storage[i] = y[L.water_balance[i]];
      if (L.storage_cap[i] >= 0) d.storage_cap[i] = y[L.storage_cap[i]];
      if (L.turbine_cap[i] >= 0) d.turbine_cap[i] = y[L.turbine_cap[i]];
    }
    d.inflow.assign(L.inflow_row.size(), std::vector<double>(H, 0.0));
    for (std::size_t l = 0; l < L.inflow_row.size(); ++l)
      for (int i = 0; i < H; ++i) d.inflow[l][i] = y[L.inflow_row[l][i]];
    d.thermal_cap = grid(J);
    for (int j = 0; j < J; ++j)
      for (int b = 0; b < B; ++b)
        if (L.thermal_cap[j][b] >= 0) d.thermal_cap[j][b] = y[L.thermal_cap[j][b]];
    d.balance = grid(N);
    for (int n = 0; n < N; ++n)
      for (int b = 0; b < B; ++b) d.balance[n][b] = y[L.network[b].balance_row[n]];
    d.kvl_upper = grid(K);
    d.kvl_lower = grid(K);
    d.flow_upper = grid(K);
    d.flow_lower = grid(K);
    for (int k = 0; k < K; ++k) {
      if (!topo_.candidate[k]) continue;
      for (int b = 0; b < B; ++b) {
        const auto& nb = L.network[b];
        d.kvl_upper[k][b] = y[nb.kvl_upper[k]];
        d.kvl_lower[k][b] = y[nb.kvl_lower[k]];
        d.flow_upper[k][b] = y[nb.flow_upper[k]];
        d.flow_lower[k][b] = y[nb.flow_lower[k]];
      }
    }

    // Hyperplane through (state, objective) by the chain rule.
    Hyperplane& h = out.cut;
    h.storage = d.storage;
    h.inflow = d.storage;
    for (std::size_t l = 0; l < d.inflow.size(); ++l)
      for (int i = 0; i < H; ++i) h.inflow[i] += d.inflow[l][i] * out.openings[l].sensitivity[i];
    h.renewable.assign(B, std::vector<double>(N, 0.0));
    for (int b = 0; b < B; ++b)
      for (int n = 0; n < N; ++n) h.renewable[b][n] = -d.balance[n][b];
    h.constant = 0.0;
    h.constant = out.solution.objective - h.evaluate(state.storage, state.inflow, r);
  }

  const PlanningCase& c_;
  const NetworkTopology& topo_;
  TrialPlan plan_;
  SimplexSolver solver_;
  std::vector<std::vector<double>> hydro_x_, thermal_x_, renewable_x_, circuit_x_;
  std::vector<int> renewable_bus_, hydro_bus_, thermal_bus_;
  std::vector<std::vector<int>> upstream_;
  std::vector<std::vector<NoiseDraw>> noise_;  // [stage][opening]
  std::vector<std::vector<std::vector<std::vector<double>>>> opening_renewables_;
  std::vector<Template> templates_;
};

struct ForwardResult {
  std::vector<std::vector<ForwardRecord>> records;  // [scenario][stage]
  std::vector<double> scenario_costs;
  double mean = 0.0;
  double stddev = 0.0;
  double lower = 0.0;  // stage-1 objective
};

struct SddpResult {
  FcfPool pool;
  ForwardResult forward;  // last forward pass
  std::vector<double> lower_history;
  std::vector<double> mean_history;
  int iterations = 0;
  bool converged = false;
  bool hit_cap = false;
  long lp_solves = 0;
};

// Forward opening index for scenario s entering stage t (t >= 1).
inline std::vector<std::vector<int>> forward_openings(const PlanningCase& c, std::uint64_t seed) {
  std::vector<std::vector<int>> pick(c.scenarios, std::vector<int>(c.stages, -1));
  for (int s = 0; s < c.scenarios; ++s) {
    std::mt19937_64 rng(detail::mix_seed(seed, 0xF0AAULL, s));
    std::uniform_int_distribution<int> u(0, c.openings - 1);
    for (int t = 1; t < c.stages; ++t) pick[s][t] = u(rng);
  }
  return pick;
}

class SddpSolver {
 public:
  SddpSolver(OperationModel& model, SddpOptions opt)
      : m_(model), opt_(std::move(opt)), picks_(forward_openings(model.planning_case(), opt_.seed)) {
    const int T = m_.stages(), S = m_.planning_case().scenarios;
    pool_.assign(T + 1, {});
    bases_.assign(T, std::vector<LpBasis>(S));
  }

  const FcfPool& pool() const { return pool_; }
  long lp_solves() const { return solves_; }

  ForwardResult forward_pass() {
    const auto& c = m_.planning_case();
    const int T = c.stages, S = c.scenarios;
    for (int t = 0; t < T; ++t) m_.sync_template(t, pool_);
    ForwardResult fr;
    fr.records.assign(S, std::vector<ForwardRecord>(T));
    // Stage 1 is common to every scenario.
    StageSolve first = m_.solve_stage(0, m_.initial_state(), hint(0, 0));
    keep(0, 0, first.solution);
    ++solves_;
    fr.lower = first.solution.objective;
    std::vector<long> counts(S, 0);
    detail::parallel_for(S, opt_.workers, [&](int s) {
      ForwardRecord rec0 = first.record;
      rec0.scenario = s;
      fr.records[s][0] = std::move(rec0);
      std::vector<ConditionedInflow> openings = first.openings;
      for (int t = 1; t < T; ++t) {
        const ForwardRecord& prev = fr.records[s][t - 1];
        const int l = picks_[s][t];
        StageState st;
        st.storage = prev.storage_end;
        st.inflow = openings[l].inflow;
        st.column = m_.opening_column(l);
        StageSolve sv = m_.solve_stage(t, st, hint(t, s));
        keep(t, s, sv.solution);
        ++counts[s];
        sv.record.scenario = s;
        sv.record.opening = l;
        openings = std::move(sv.openings);
        fr.records[s][t] = std::move(sv.record);
      }
    });
    for (long n : counts) solves_ += n;
    fr.scenario_costs.assign(S, 0.0);
    for (int s = 0; s < S; ++s)
      for (int t = 0; t < T; ++t) fr.scenario_costs[s] += fr.records[s][t].immediate_cost;
    double mean = 0.0;
    for (double v : fr.scenario_costs) mean += v;
    mean /= S;
    double var = 0.0;
    for (double v : fr.scenario_costs) var += (v - mean) * (v - mean);
    fr.mean = mean;
    fr.stddev = S > 1 ? std::sqrt(var / (S - 1)) : 0.0;
    return fr;
  }

  // One hyperplane per visited state for stages T..2, appended in scenario order.
  void backward_pass(const ForwardResult& fr) {
    const auto& c = m_.planning_case();
    const int T = c.stages, S = c.scenarios;
    for (int t = T - 1; t >= 1; --t) {
      m_.sync_template(t, pool_);
      std::vector<Hyperplane> cuts(S);
      detail::parallel_for(S, opt_.workers, [&](int s) {
        StageSolve sv = m_.solve_stage(t, fr.records[s][t].state, hint(t, s));
        keep(t, s, sv.solution);
        cuts[s] = std::move(sv.cut);
      });
      solves_ += S;
      for (auto& h : cuts) pool_[t].push_back(std::move(h));
    }
  }

  SddpResult run() {
    SddpResult res;
    const auto& c = m_.planning_case();
    for (int it = 1; it <= opt_.max_iterations; ++it) {
      ForwardResult fr = forward_pass();
      res.lower_history.push_back(fr.lower);
      res.mean_history.push_back(fr.mean);
      res.iterations = it;
      const bool last_stage_only = c.stages == 1;
      const bool ok = opt_.check_convergence &&
                      sddp_converged(fr.lower, fr.scenario_costs, opt_.z, opt_.tolerance).converged;
      res.forward = std::move(fr);
      if (ok || last_stage_only) {
        res.converged = true;
        break;
      }
      if (it == opt_.max_iterations) {
        res.hit_cap = opt_.check_convergence;
        break;
      }
      backward_pass(res.forward);
    }
    res.pool = pool_;
    res.lp_solves = solves_;
    return res;
  }

 private:
  const LpBasis* hint(int t, int s) const {
    if (!opt_.warm_start) return nullptr;
    const LpBasis& b = bases_[t][s];
    return b.empty() ? nullptr : &b;
  }
  void keep(int t, int s, const LpSolution& sol) {
    if (opt_.warm_start) bases_[t][s] = sol.basis;
  }

  OperationModel& m_;
  SddpOptions opt_;
  std::vector<std::vector<int>> picks_;
  FcfPool pool_;
  std::vector<std::vector<LpBasis>> bases_;  // [stage][scenario]
  long solves_ = 0;
};

inline SddpResult run_sddp(const PlanningCase& c, const NetworkTopology& topo,
                           const TrialPlan& plan, const SddpOptions& opt = {}) {
  OperationModel model(c, topo, plan, opt.seed, opt.lp);
  SddpSolver solver(model, opt);
  return solver.run();
}

// Conservation residuals of one forward record.
inline double water_balance_residual(const PlanningCase& c, const ForwardRecord& r) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.hydros.size(); ++i) {
    double res = r.storage_end[i] - r.state.storage[i] - r.state.inflow[i] + r.turbined[i] +
                 r.spilled[i];
    for (const auto& up : c.hydros[i].upstream)
      for (std::size_t m = 0; m < c.hydros.size(); ++m)
        if (c.hydros[m].id == up) res -= r.turbined[m] + r.spilled[m];
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

inline double energy_balance_residual(const PlanningCase& c, const NetworkTopology& topo,
                                      const ForwardRecord& r) {
  double worst = 0.0;
  const int N = static_cast<int>(c.buses.size());
  for (int b = 0; b < c.num_blocks(); ++b) {
    std::vector<double> net(N, 0.0);
    for (std::size_t i = 0; i < c.hydros.size(); ++i)
      net[*c.bus_index(c.hydros[i].bus)] += r.hydro_power[i][b];
    for (std::size_t j = 0; j < c.thermals.size(); ++j)
      net[*c.bus_index(c.thermals[j].bus)] += r.thermal[j][b];
    for (int k = 0; k < topo.num_circuits(); ++k) {
      net[topo.from[k]] -= r.flow[k][b];
      net[topo.to[k]] += r.flow[k][b];
    }
    for (int n = 0; n < N; ++n) {
      const double res =
          net[n] + r.renewable[n][b] + r.deficit[n][b] - r.surplus[n][b] - r.load[n][b];
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst;
}

}  // namespace gtep
