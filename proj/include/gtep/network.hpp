#pragma once

// DC network: incidence matrix, big-M calibration for candidate circuits and
// the per-block Kirchhoff rows added to a stage LP.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtep/lp.hpp"
#include "gtep/model.hpp"

namespace gtep {

struct NetworkTopology {
  std::vector<std::string> bus_ids;
  std::vector<std::string> circuit_ids;
  std::vector<int> from;  // bus index per circuit
  std::vector<int> to;
  std::vector<double> susceptance;
  std::vector<double> rating;
  std::vector<bool> candidate;
  std::vector<double> big_m;          // 0 for existing circuits
  std::vector<bool> big_m_fallback;   // terminals disconnected in the existing grid
  std::vector<int> component;         // per bus, over existing + candidate circuits
  std::vector<int> reference_buses;   // one per component

  int num_buses() const { return static_cast<int>(bus_ids.size()); }
  int num_circuits() const { return static_cast<int>(from.size()); }
};

// N x K, +1 at the from bus and -1 at the to bus of each column.
inline Eigen::MatrixXi incidence_matrix(const std::vector<Bus>& buses,
                                        const std::vector<Circuit>& circuits) {
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(static_cast<int>(buses.size()),
                                            static_cast<int>(circuits.size()));
  auto index = [&](const std::string& id) {
    for (int n = 0; n < static_cast<int>(buses.size()); ++n)
      if (buses[n].id == id) return n;
    throw std::invalid_argument("circuit references unknown bus '" + id + "'");
  };
  for (int k = 0; k < static_cast<int>(circuits.size()); ++k) {
    s(index(circuits[k].from_bus), k) = 1;
    s(index(circuits[k].to_bus), k) = -1;
  }
  return s;
}

namespace detail {

// Shortest distances from `source` over existing circuits, edge length rating/susceptance.
inline std::vector<double> angle_distances(const NetworkTopology& topo, int source) {
  const int n = topo.num_buses();
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (int k = 0; k < topo.num_circuits(); ++k) {
    if (topo.candidate[k]) continue;
    const double len = topo.rating[k] / topo.susceptance[k];
    adj[topo.from[k]].push_back({topo.to[k], len});
    adj[topo.to[k]].push_back({topo.from[k], len});
  }
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, len] : adj[u]) {
      if (d + len < dist[v]) {
        dist[v] = d + len;
        heap.push({dist[v], v});
      }
    }
  }
  return dist;
}

inline std::vector<int> components(int n, const std::vector<int>& from,
                                   const std::vector<int>& to) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t k = 0; k < from.size(); ++k) {
    const int a = find(from[k]), b = find(to[k]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> label(n, -1), comp(n);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (label[r] < 0) label[r] = next++;
    comp[i] = label[r];
  }
  return comp;
}

}  // namespace detail

// Smallest M that relaxes the angle law of unbuilt candidate k without
// restricting the existing grid.  Returns {M, fallback_used}.
inline std::pair<double, bool> calibrate_big_m(const NetworkTopology& topo, int k,
                                               double m_max = 0.0) {
  if (!topo.candidate[k]) throw std::invalid_argument("calibrate_big_m: circuit is not a candidate");
  const int a = topo.from[k], b = topo.to[k];
  const double gamma = topo.susceptance[k];

  double parallel = std::numeric_limits<double>::infinity();
  for (int j = 0; j < topo.num_circuits(); ++j) {
    if (topo.candidate[j]) continue;
    const bool same = (topo.from[j] == a && topo.to[j] == b) ||
                      (topo.from[j] == b && topo.to[j] == a);
    if (same) parallel = std::min(parallel, topo.rating[j] / topo.susceptance[j]);
  }
  if (std::isfinite(parallel)) return {gamma * parallel, false};

  const double dist = detail::angle_distances(topo, a)[b];
  if (std::isfinite(dist)) return {gamma * dist, false};

  if (m_max > 0.0) return {m_max, true};
  double spread = 0.0;
  for (int j = 0; j < topo.num_circuits(); ++j)
    spread += topo.rating[j] / topo.susceptance[j];
  return {gamma * spread, true};
}

inline NetworkTopology build_topology(const PlanningCase& c, double m_max = 0.0) {
  NetworkTopology topo;
  for (const auto& b : c.buses) topo.bus_ids.push_back(b.id);
  const Eigen::MatrixXi s = incidence_matrix(c.buses, c.circuits);
  for (int k = 0; k < static_cast<int>(c.circuits.size()); ++k) {
    const auto& ck = c.circuits[k];
    int f = -1, t = -1;
    for (int n = 0; n < s.rows(); ++n) {
      if (s(n, k) == 1) f = n;
      if (s(n, k) == -1) t = n;
    }
    topo.circuit_ids.push_back(ck.id);
    topo.from.push_back(f);
    topo.to.push_back(t);
    topo.susceptance.push_back(ck.susceptance);
    topo.rating.push_back(ck.rating);
    topo.candidate.push_back(ck.status == AssetStatus::kCandidate);
  }
  const int nk = topo.num_circuits();
  topo.big_m.assign(nk, 0.0);
  topo.big_m_fallback.assign(nk, false);
  for (int k = 0; k < nk; ++k) {
    if (!topo.candidate[k]) continue;
    const auto [m, fallback] = calibrate_big_m(topo, k, m_max);
    topo.big_m[k] = m;
    topo.big_m_fallback[k] = fallback;
  }
  topo.component = detail::components(topo.num_buses(), topo.from, topo.to);
  const int ncomp = topo.component.empty()
                        ? 0
                        : *std::max_element(topo.component.begin(), topo.component.end()) + 1;
  topo.reference_buses.assign(ncomp, -1);
  for (int n = 0; n < topo.num_buses(); ++n) {
    int& ref = topo.reference_buses[topo.component[n]];
    if (ref < 0 || topo.bus_ids[n] < topo.bus_ids[ref]) ref = n;
  }
  return topo;
}

// Variables and rows created for one block.  Row entries are -1 where a row
// does not apply (existing circuits have no disjunctive or flow-bound rows).
struct NetworkBlock {
  std::vector<int> flow;
  std::vector<int> angle;
  std::vector<int> balance_row;  // per bus
  std::vector<int> kvl_row;      // existing circuits
  std::vector<int> kvl_upper;    // candidates:  f - g*dtheta <= M(1 - x)
  std::vector<int> kvl_lower;    // candidates: -f + g*dtheta <= M(1 - x)
  std::vector<int> flow_upper;   // candidates:  f <= rating * x
  std::vector<int> flow_lower;   // candidates: -f <= rating * x
};

// Adds flows, angles and Kirchhoff rows for one block.  `built` holds the
// (possibly fractional) build status of every circuit, 1 for existing ones.
// Bus balance:  injections - (flows leaving) + (flows arriving) = net_load.
inline NetworkBlock add_dc_network(LinearProgram& lp, const NetworkTopology& topo,
                                   std::span<const double> built,
                                   const std::vector<std::vector<Term>>& injections,
                                   std::span<const double> net_load,
                                   const std::string& tag = "") {
  const int n = topo.num_buses(), nk = topo.num_circuits();
  if (static_cast<int>(built.size()) != nk || static_cast<int>(injections.size()) != n ||
      static_cast<int>(net_load.size()) != n)
    throw std::invalid_argument("add_dc_network: dimension mismatch");
  NetworkBlock nb;
  nb.kvl_row.assign(nk, -1);
  nb.kvl_upper.assign(nk, -1);
  nb.kvl_lower.assign(nk, -1);
  nb.flow_upper.assign(nk, -1);
  nb.flow_lower.assign(nk, -1);

  std::vector<bool> is_ref(n, false);
  for (int r : topo.reference_buses) is_ref[r] = true;
  for (int i = 0; i < n; ++i) {
    const double lim = is_ref[i] ? 0.0 : kInf;
    nb.angle.push_back(lp.add_variable("theta_" + topo.bus_ids[i] + tag, -lim, lim));
  }
  for (int k = 0; k < nk; ++k) {
    const double lim = topo.candidate[k] ? kInf : topo.rating[k];
    nb.flow.push_back(lp.add_variable("f_" + topo.circuit_ids[k] + tag, -lim, lim));
  }

  for (int i = 0; i < n; ++i) {
    std::vector<Term> terms = injections[i];
    for (int k = 0; k < nk; ++k) {
      if (topo.from[k] == i) terms.push_back({nb.flow[k], -1.0});
      if (topo.to[k] == i) terms.push_back({nb.flow[k], 1.0});
    }
    nb.balance_row.push_back(lp.add_row("bal_" + topo.bus_ids[i] + tag, std::move(terms),
                                        RowSense::kEqual, net_load[i]));
  }

  for (int k = 0; k < nk; ++k) {
    const double g = topo.susceptance[k];
    const int f = nb.flow[k], a = nb.angle[topo.from[k]], b = nb.angle[topo.to[k]];
    const std::string id = topo.circuit_ids[k] + tag;
    if (!topo.candidate[k]) {
      nb.kvl_row[k] = lp.add_row("kvl_" + id, {{f, 1.0}, {a, -g}, {b, g}}, RowSense::kEqual, 0.0);
      continue;
    }
    const double x = built[k];
    const double slack = topo.big_m[k] * (1.0 - x);
    nb.kvl_upper[k] = lp.add_row("kvlu_" + id, {{f, 1.0}, {a, -g}, {b, g}},
                                 RowSense::kLessEqual, slack);
    nb.kvl_lower[k] = lp.add_row("kvll_" + id, {{f, -1.0}, {a, g}, {b, -g}},
                                 RowSense::kLessEqual, slack);
    nb.flow_upper[k] = lp.add_row("fu_" + id, {{f, 1.0}}, RowSense::kLessEqual,
                                  topo.rating[k] * x);
    nb.flow_lower[k] = lp.add_row("fl_" + id, {{f, -1.0}}, RowSense::kLessEqual,
                                  topo.rating[k] * x);
  }
  return nb;
}

}  // namespace gtep
