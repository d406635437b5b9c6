#pragma once

// Comma-separated result tables and the YAML run summary.

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtep/benders.hpp"
#include "gtep/investment.hpp"
#include "gtep/model.hpp"
#include "gtep/network.hpp"

namespace gtep {

inline constexpr const char* kSummarySchema = "gtep-summary";

// Shortest text that reads back to the same double.
inline std::string num(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
      : out_(path), width_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("ragged table row");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

// Appends one row per Benders iteration as soon as it completes.
class ConvergenceLog {
 public:
  explicit ConvergenceLog(const std::filesystem::path& dir)
      : csv_(dir / "convergence.csv",
             {"iteration", "lower_bound", "upper_bound", "gap", "master_objective", "investment",
              "operation_mean", "operation_stddev", "sddp_iterations", "sddp_converged"}) {}

  void append(const IterationRecord& r) {
    csv_.row({std::to_string(r.iteration), num(r.lower), num(r.upper), num(r.gap),
              num(r.master_objective), num(r.investment), num(r.operation),
              num(r.operation_stddev), std::to_string(r.sddp_iterations),
              r.sddp_converged ? "true" : "false"});
  }

 private:
  CsvWriter csv_;
};

inline void write_timing(const std::filesystem::path& dir, const std::vector<IterationRecord>& h) {
  CsvWriter csv(dir / "timing.csv", {"iteration", "seconds"});
  for (const auto& r : h) csv.row({std::to_string(r.iteration), num(r.seconds)});
}

inline double project_capacity_mw(const PlanningCase& c, const CandidateProject& p) {
  return project_capacity_kw(c, p) / 1000.0;
}

inline std::string project_technology(const PlanningCase& c, const CandidateProject& p) {
  for (const auto& h : c.hydros)
    if (h.id == p.target) return h.technology;
  for (const auto& g : c.thermals)
    if (g.id == p.target) return g.technology;
  for (const auto& w : c.renewables)
    if (w.id == p.target) return w.technology;
  return "circuit";
}

inline void write_plan_table(const std::filesystem::path& dir, const PlanningCase& c,
                             const TrialPlan& plan) {
  CsvWriter csv(dir / "plan.csv", {"project", "kind", "device", "technology", "capacity_mw",
                                   "entry_stage", "entry_year", "investment_cost"});
  for (std::size_t p = 0; p < c.candidates.size(); ++p) {
    const auto& q = c.candidates[p];
    const int stage = entry_stage(plan, static_cast<int>(p));
    if (stage == 0) continue;
    csv.row({q.id, to_string(q.kind), q.target, project_technology(c, q),
             num(project_capacity_mw(c, q)), std::to_string(stage),
             std::to_string(c.entry_year(stage)), num(investment_coefficient(c, q, stage))});
  }
}

inline void write_circuit_table(const std::filesystem::path& dir, const PlanningCase& c,
                                const TrialPlan& plan) {
  CsvWriter csv(dir / "circuits.csv",
                {"circuit", "from", "to", "cost", "rating_mw", "type", "entry_year"});
  for (std::size_t p = 0; p < c.candidates.size(); ++p) {
    const auto& q = c.candidates[p];
    if (q.kind != ProjectKind::kCircuit) continue;
    const int stage = entry_stage(plan, static_cast<int>(p));
    if (stage == 0) continue;
    for (const auto& k : c.circuits) {
      if (k.id != q.target) continue;
      csv.row({k.id, k.from_bus, k.to_bus, num(investment_coefficient(c, q, stage)), num(k.rating),
               k.type == CircuitType::kLine ? "line" : "transformer",
               std::to_string(c.entry_year(stage))});
    }
  }
}

// Added generation capacity per technology and year, plus the running total.
inline void write_capacity_table(const std::filesystem::path& dir, const PlanningCase& c,
                                 const TrialPlan& plan) {
  std::set<std::string> techs;
  for (const auto& q : c.candidates)
    if (q.kind != ProjectKind::kCircuit) techs.insert(project_technology(c, q));
  const int first = c.entry_year(1), last = c.entry_year(c.stages);
  std::map<std::pair<int, std::string>, double> added;
  for (std::size_t p = 0; p < c.candidates.size(); ++p) {
    const auto& q = c.candidates[p];
    const int stage = entry_stage(plan, static_cast<int>(p));
    if (q.kind == ProjectKind::kCircuit || stage == 0) continue;
    added[{c.entry_year(stage), project_technology(c, q)}] += project_capacity_mw(c, q);
  }
  CsvWriter csv(dir / "capacity.csv", {"year", "technology", "added_mw", "cumulative_mw"});
  std::map<std::string, double> total;
  for (int y = first; y <= last; ++y) {
    for (const auto& tech : techs) {
      const auto it = added.find({y, tech});
      const double a = it == added.end() ? 0.0 : it->second;
      total[tech] += a;
      csv.row({std::to_string(y), tech, num(a), num(total[tech])});
    }
  }
}

// Scenario-mean dispatch and nodal marginal costs of a forward pass.
inline void write_operation_tables(const std::filesystem::path& dir, const PlanningCase& c,
                                   const NetworkTopology& topo, const ForwardResult& fr) {
  const int S = static_cast<int>(fr.records.size());
  const int B = c.num_blocks();
  CsvWriter disp(dir / "dispatch.csv", {"stage", "block", "kind", "id", "mean_mw"});
  CsvWriter mc(dir / "marginal_cost.csv", {"stage", "block", "bus", "mean", "min", "max"});
  for (int t = 0; t < c.stages; ++t) {
    for (int b = 0; b < B; ++b) {
      auto mean = [&](auto&& get) {
        double v = 0.0;
        for (int s = 0; s < S; ++s) v += get(fr.records[s][t]);
        return v / S;
      };
      auto emit = [&](const char* kind, const std::string& id, double v) {
        disp.row({std::to_string(t + 1), std::to_string(b + 1), kind, id, num(v)});
      };
      for (std::size_t i = 0; i < c.hydros.size(); ++i)
        emit("hydro", c.hydros[i].id, mean([&](const ForwardRecord& r) { return r.hydro_power[i][b]; }));
      for (std::size_t j = 0; j < c.thermals.size(); ++j)
        emit("thermal", c.thermals[j].id, mean([&](const ForwardRecord& r) { return r.thermal[j][b]; }));
      for (std::size_t n = 0; n < c.buses.size(); ++n) {
        const std::string& id = c.buses[n].id;
        emit("renewable", id, mean([&](const ForwardRecord& r) { return r.renewable[n][b]; }));
        emit("deficit", id, mean([&](const ForwardRecord& r) { return r.deficit[n][b]; }));
        emit("load", id, mean([&](const ForwardRecord& r) { return r.load[n][b]; }));
      }
      for (int k = 0; k < topo.num_circuits(); ++k)
        emit("flow", topo.circuit_ids[k], mean([&](const ForwardRecord& r) { return r.flow[k][b]; }));
      for (std::size_t n = 0; n < c.buses.size(); ++n) {
        double lo = kInf, hi = -kInf;
        for (int s = 0; s < S; ++s) {
          lo = std::min(lo, fr.records[s][t].marginal_cost[n][b]);
          hi = std::max(hi, fr.records[s][t].marginal_cost[n][b]);
        }
        mc.row({std::to_string(t + 1), std::to_string(b + 1), c.buses[n].id,
                num(mean([&](const ForwardRecord& r) { return r.marginal_cost[n][b]; })), num(lo),
                num(hi)});
      }
    }
  }
}

inline void write_run_summary(const std::filesystem::path& dir, const PlanningCase& c,
                              const RunConfig& cfg, const PlanResult& res) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "schema" << YAML::Value << kSummarySchema;
  e << YAML::Key << "version" << YAML::Value << 1;
  e << YAML::Key << "command" << YAML::Value << "run";
  e << YAML::Key << "case" << YAML::Value << c.name;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "target_gap" << YAML::Value << num(cfg.target_gap);
  e << YAML::Key << "max_iterations" << YAML::Value << cfg.max_iterations;
  e << YAML::Key << "iterations" << YAML::Value << static_cast<int>(res.history.size());
  e << YAML::Key << "converged" << YAML::Value << res.converged;
  e << YAML::Key << "lower_bound" << YAML::Value << num(res.lower);
  e << YAML::Key << "upper_bound" << YAML::Value << num(res.upper);
  e << YAML::Key << "gap" << YAML::Value << num(res.gap);
  e << YAML::Key << "investment_cost" << YAML::Value << num(res.best_investment);
  e << YAML::Key << "operation_cost" << YAML::Value << num(res.best_operation);
  e << YAML::Key << "total_cost" << YAML::Value << num(res.best_investment + res.best_operation);
  e << YAML::Key << "plan" << YAML::Value << YAML::BeginSeq;
  for (std::size_t p = 0; p < c.candidates.size(); ++p) {
    const int stage = entry_stage(res.best_plan, static_cast<int>(p));
    if (stage == 0) continue;
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "project" << YAML::Value << c.candidates[p].id
      << YAML::Key << "stage" << YAML::Value << stage << YAML::Key << "year" << YAML::Value
      << c.entry_year(stage) << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::EndMap;
  std::ofstream(dir / "summary.yaml") << e.c_str() << "\n";
}

inline void write_simulation_summary(const std::filesystem::path& dir, const PlanningCase& c,
                                     const RunConfig& cfg, const TrialPlan& plan,
                                     const SddpResult& op) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "schema" << YAML::Value << kSummarySchema;
  e << YAML::Key << "version" << YAML::Value << 1;
  e << YAML::Key << "command" << YAML::Value << "simulate";
  e << YAML::Key << "case" << YAML::Value << c.name;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "investment_cost" << YAML::Value << num(plan_investment_cost(c, plan));
  e << YAML::Key << "operation_cost" << YAML::Value << num(op.forward.mean);
  e << YAML::Key << "operation_stddev" << YAML::Value << num(op.forward.stddev);
  e << YAML::Key << "lower_bound" << YAML::Value << num(op.forward.lower);
  e << YAML::Key << "sddp_iterations" << YAML::Value << op.iterations;
  e << YAML::Key << "sddp_converged" << YAML::Value << op.converged;
  e << YAML::Key << "sddp_hit_cap" << YAML::Value << op.hit_cap;
  e << YAML::EndMap;
  std::ofstream(dir / "summary.yaml") << e.c_str() << "\n";
}

inline void write_run_reports(const std::filesystem::path& dir, const PlanningCase& c,
                              const RunConfig& cfg, const PlanResult& res) {
  const NetworkTopology topo = build_topology(c, cfg.m_max);
  write_plan_table(dir, c, res.best_plan);
  write_circuit_table(dir, c, res.best_plan);
  write_capacity_table(dir, c, res.best_plan);
  write_operation_tables(dir, c, topo, res.best_sddp.forward);
  write_run_summary(dir, c, cfg, res);
}

}  // namespace gtep
