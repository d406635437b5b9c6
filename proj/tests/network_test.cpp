#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>

#include "gtep/network.hpp"
#include "oracles.hpp"

namespace gtep {
namespace {

using toys::make_buses;
using toys::net_case;

Circuit line(const std::string& id, int a, int b, double gamma, double rating,
             bool candidate = false) {
  return toys::numbered_line(id, a, b, gamma, rating, candidate);
}

TEST(IncidenceMatrix, SingleCircuit) {
  const auto s = incidence_matrix(make_buses(2), {line("L", 0, 1, 1, 1)});
  EXPECT_EQ(s(0, 0), 1);
  EXPECT_EQ(s(1, 0), -1);
}

TEST(IncidenceMatrix, TriangleColumnsSumToZero) {
  const auto s = incidence_matrix(make_buses(3), {line("a", 0, 1, 1, 1), line("b", 1, 2, 1, 1),
                                                  line("c", 2, 0, 1, 1)});
  EXPECT_TRUE((s.colwise().sum().array() == 0).all());
  EXPECT_EQ(s.row(0).sum(), 0);
}

TEST(IncidenceMatrix, MatchesAdjacencyOracle) {
  std::mt19937_64 rng(21);
  const int n = 10;
  const auto buses = make_buses(n);
  std::vector<Circuit> cs;
  std::map<std::string, std::pair<std::string, std::string>> ends;
  for (int k = 0; k < 25; ++k) {
    const int a = static_cast<int>(rng() % n);
    int b = static_cast<int>(rng() % (n - 1));
    if (b >= a) ++b;
    cs.push_back(line("c" + std::to_string(k), a, b, 1, 1));
    ends[cs.back().id] = {cs.back().from_bus, cs.back().to_bus};
  }
  const auto s = incidence_matrix(buses, cs);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 25; ++k) {
      const auto& [f, t] = ends[cs[k].id];
      const int expected = buses[i].id == f ? 1 : (buses[i].id == t ? -1 : 0);
      EXPECT_EQ(s(i, k), expected);
    }
  }
}

TEST(CalibrateBigM, ParallelCircuit) {
  const auto topo = build_topology(
      net_case(2, {line("E", 0, 1, 10, 100), line("E2", 1, 0, 5, 100), line("C", 0, 1, 20, 50, true)}));
  EXPECT_DOUBLE_EQ(topo.big_m[2], 200.0);
  EXPECT_FALSE(topo.big_m_fallback[2]);
}

TEST(CalibrateBigM, DuplicateCircuitGivesRating) {
  const auto topo = build_topology(net_case(2, {line("E", 0, 1, 7, 130), line("C", 0, 1, 7, 130, true)}));
  EXPECT_DOUBLE_EQ(topo.big_m[1], 130.0);
}

// Minimum over every simple path of the summed rating/susceptance.
double all_paths_oracle(int n, const std::vector<Circuit>& cs, int a, int b) {
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& c : cs) {
    if (c.status == AssetStatus::kCandidate) continue;
    const int u = std::stoi(c.from_bus.substr(1)) - 10, v = std::stoi(c.to_bus.substr(1)) - 10;
    adj[u].push_back({v, c.rating / c.susceptance});
    adj[v].push_back({u, c.rating / c.susceptance});
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> seen(n, false);
  std::function<void(int, double)> walk = [&](int u, double len) {
    if (u == b) {
      best = std::min(best, len);
      return;
    }
    seen[u] = true;
    for (const auto& [v, l] : adj[u])
      if (!seen[v]) walk(v, len + l);
    seen[u] = false;
  };
  walk(a, 0.0);
  return best;
}

TEST(CalibrateBigM, PathGraphEndpoints) {
  std::vector<Circuit> cs{line("a", 0, 1, 2, 100), line("b", 1, 2, 4, 100), line("c", 2, 3, 5, 50),
                          line("new", 0, 3, 3, 80, true)};
  const auto topo = build_topology(net_case(4, cs));
  EXPECT_NEAR(topo.big_m[3], 3.0 * all_paths_oracle(4, cs, 0, 3), 1e-12);
  EXPECT_NEAR(topo.big_m[3], 3.0 * (50.0 + 25.0 + 10.0), 1e-12);
}

TEST(CalibrateBigM, RandomGraphsMatchAllPathsOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + trial % 4;
    std::vector<Circuit> cs;
    for (int k = 0; k < n + 2; ++k) {
      const int a = static_cast<int>(rng() % n);
      int b = static_cast<int>(rng() % (n - 1));
      if (b >= a) ++b;
      cs.push_back(line("e" + std::to_string(k), a, b, u(rng), 100 * u(rng)));
    }
    // Candidate between two buses with no direct existing circuit.
    int a = 0, b = 0;
    for (a = 0; a < n; ++a) {
      for (b = a + 1; b < n; ++b) {
        bool direct = false;
        for (const auto& c : cs)
          direct |= (c.from_bus == "N" + std::to_string(10 + a) && c.to_bus == "N" + std::to_string(10 + b)) ||
                    (c.from_bus == "N" + std::to_string(10 + b) && c.to_bus == "N" + std::to_string(10 + a));
        if (!direct) break;
      }
      if (b < n) break;
    }
    if (a >= n) continue;
    cs.push_back(line("cand", a, b, 2.5, 60, true));
    const auto topo = build_topology(net_case(n, cs));
    const double oracle = all_paths_oracle(n, cs, a, b);
    if (std::isfinite(oracle)) {
      EXPECT_NEAR(topo.big_m.back(), 2.5 * oracle, 1e-9) << "trial " << trial;
      EXPECT_FALSE(topo.big_m_fallback.back());
    } else {
      EXPECT_TRUE(topo.big_m_fallback.back());
    }
  }
}

TEST(CalibrateBigM, DisconnectedTerminalsFallBackAndFlag) {
  const std::vector<Circuit> cs{line("a", 0, 1, 2, 100), line("b", 2, 3, 4, 40),
                                line("c", 1, 2, 5, 50, true)};
  const auto topo = build_topology(net_case(4, cs));
  EXPECT_TRUE(topo.big_m_fallback[2]);
  EXPECT_NEAR(topo.big_m[2], 5.0 * (50.0 + 10.0 + 10.0), 1e-12);
  EXPECT_DOUBLE_EQ(build_topology(net_case(4, cs), 999.0).big_m[2], 999.0);
  EXPECT_EQ(topo.reference_buses, std::vector<int>{0});
}

TEST(BuildTopology, ReferenceBusPerComponent) {
  auto c = net_case(5, {line("a", 1, 0, 1, 1), line("b", 3, 4, 1, 1)});
  const auto topo = build_topology(c);
  EXPECT_EQ(topo.reference_buses, (std::vector<int>{0, 2, 3}));
}

// ---------------------------------------------------------------------------
// LP-level properties on small random systems.

using toys::direct_dcopf;
using toys::kNetDeficit;
using toys::network_lp_objective;
using toys::random_instance;
using Instance = toys::NetInstance;

TEST(DcNetwork, AllBuiltMatchesDirectDcOpf) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const auto in = random_instance(rng, 3 + trial % 3, trial % 2, 2);
    const auto topo = build_topology(in.net);
    const std::vector<double> built(topo.num_circuits(), 1.0);
    EXPECT_NEAR(network_lp_objective(in, topo, built), direct_dcopf(in), 1e-6) << "trial " << trial;
  }
}

TEST(DcNetwork, BuiltCandidateEnforcesExactKvl) {
  std::mt19937_64 rng(12);
  const auto in = random_instance(rng, 3, 0, 1);
  const auto topo = build_topology(in.net);
  LinearProgram lp;
  std::vector<std::vector<Term>> inj(3);
  for (const auto& g : in.gens) inj[g.bus].push_back({lp.add_variable("g", 0, g.cap, g.cost), 1.0});
  for (int i = 0; i < 3; ++i) inj[i].push_back({lp.add_variable("def", 0, kInf, kNetDeficit), 1.0});
  const std::vector<double> built(topo.num_circuits(), 1.0);
  const auto nb = add_dc_network(lp, topo, built, inj, in.load);
  const int k = topo.num_circuits() - 1;
  EXPECT_EQ(lp.rows[nb.kvl_upper[k]].rhs, 0.0);
  EXPECT_EQ(lp.rows[nb.kvl_lower[k]].rhs, 0.0);
  const auto sol = solve_lp(lp);
  const double resid = sol.primal[nb.flow[k]] -
                       topo.susceptance[k] * (sol.primal[nb.angle[topo.from[k]]] -
                                              sol.primal[nb.angle[topo.to[k]]]);
  EXPECT_NEAR(resid, 0.0, 1e-7);
}

TEST(DcNetwork, UnbuiltCandidateCarriesNoFlow) {
  std::mt19937_64 rng(13);
  const auto in = random_instance(rng, 4, 1, 2);
  const auto topo = build_topology(in.net);
  LinearProgram lp;
  std::vector<std::vector<Term>> inj(4);
  for (const auto& g : in.gens) inj[g.bus].push_back({lp.add_variable("g", 0, g.cap, g.cost), 1.0});
  for (int i = 0; i < 4; ++i) inj[i].push_back({lp.add_variable("def", 0, kInf, kNetDeficit), 1.0});
  std::vector<double> built(topo.num_circuits(), 1.0);
  built.back() = 0.0;
  const auto nb = add_dc_network(lp, topo, built, inj, in.load);
  const int k = topo.num_circuits() - 1;
  EXPECT_EQ(lp.rows[nb.flow_upper[k]].rhs, 0.0);
  EXPECT_DOUBLE_EQ(lp.rows[nb.kvl_upper[k]].rhs, topo.big_m[k]);
  const auto sol = solve_lp(lp);
  EXPECT_NEAR(sol.primal[nb.flow[k]], 0.0, 1e-7);
}

TEST(DcNetwork, UnbuiltRowsCanBeDeleted) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto in = random_instance(rng, 3 + trial % 4, trial % 3, 2);
    const auto topo = build_topology(in.net);
    std::vector<double> built(topo.num_circuits(), 1.0);
    const int drop = topo.num_circuits() - 1 - trial % 2;
    built[drop] = 0.0;
    const double with_rows = network_lp_objective(in, topo, built);

    Instance pruned = in;
    pruned.net.circuits.erase(pruned.net.circuits.begin() + drop);
    const auto ptopo = build_topology(pruned.net);
    built.erase(built.begin() + drop);
    EXPECT_NEAR(with_rows, network_lp_objective(pruned, ptopo, built), 1e-6) << "trial " << trial;
  }
}

TEST(DcNetwork, CalibratedMIsSufficient) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng, 3 + trial % 5, trial % 3, 1 + trial % 3);
    const auto topo = build_topology(in.net);
    auto loose = topo;
    for (auto& m : loose.big_m) m *= 10.0;
    std::vector<double> built(topo.num_circuits(), 1.0);
    for (int k = 0; k < topo.num_circuits(); ++k)
      if (topo.candidate[k]) built[k] = 0.0;
    EXPECT_NEAR(network_lp_objective(in, topo, built), network_lp_objective(in, loose, built), 1e-6)
        << "trial " << trial;
  }
}

}  // namespace
}  // namespace gtep
