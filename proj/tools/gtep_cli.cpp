#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "gtep/benders.hpp"
#include "gtep/case_io.hpp"
#include "gtep/report.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("GTEP_OUT_DIR"); env && *env) return env;
  return "gtep-out";
}

void apply_overrides(gtep::RunConfig& cfg, const std::optional<double>& gap,
                     const std::optional<int>& max_iter, const std::optional<std::uint64_t>& seed,
                     const std::optional<int>& workers, const std::optional<int>& sddp_iter) {
  if (gap) cfg.target_gap = *gap;
  if (max_iter) cfg.max_iterations = *max_iter;
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (sddp_iter) cfg.sddp.max_iterations = *sddp_iter;
}

int cmd_validate(const std::string& path) {
  const auto loaded = gtep::load_case(path);
  const auto& c = loaded.planning;
  std::cout << path << ": ok (" << c.buses.size() << " buses, " << c.circuits.size()
            << " circuits, " << c.hydros.size() << " hydros, " << c.thermals.size()
            << " thermals, " << c.renewables.size() << " renewables, " << c.candidates.size()
            << " candidates, " << c.stages << " stages)\n";
  return kOk;
}

int cmd_run(const std::string& path, const std::optional<double>& gap, const std::optional<int>& max_iter,
            const std::optional<std::uint64_t>& seed, const std::optional<int>& workers,
            const std::optional<int>& sddp_iter, const fs::path& out) {
  auto loaded = gtep::load_case(path);
  gtep::RunConfig cfg = loaded.config;
  apply_overrides(cfg, gap, max_iter, seed, workers, sddp_iter);
  fs::create_directories(out);
  gtep::ConvergenceLog log(out);
  std::vector<gtep::IterationRecord> done;
  auto on_iteration = [&](const gtep::IterationRecord& r) {
    log.append(r);
    done.push_back(r);
    gtep::write_timing(out, done);
    std::cerr << "iteration " << r.iteration << "  LB " << gtep::num(r.lower) << "  UB "
              << gtep::num(r.upper) << "  gap " << gtep::num(r.gap) << "\n";
  };
  const auto res = gtep::run_benders(loaded.planning, cfg, on_iteration);
  gtep::write_run_reports(out, loaded.planning, cfg, res);
  std::ofstream(out / "best.plan") << gtep::serialize_plan(loaded.planning, res.best_plan);
  std::cout << (res.converged ? "converged" : "iteration cap reached") << " after "
            << res.history.size() << " iterations: LB " << gtep::num(res.lower) << ", UB "
            << gtep::num(res.upper) << ", gap " << gtep::num(res.gap) << "\n"
            << "reports written to " << out.string() << "\n";
  return kOk;
}

int cmd_simulate(const std::string& path, const std::string& plan_path,
                 const std::optional<std::uint64_t>& seed, const std::optional<int>& workers,
                 const std::optional<int>& sddp_iter, const fs::path& out) {
  auto loaded = gtep::load_case(path);
  gtep::RunConfig cfg = loaded.config;
  apply_overrides(cfg, std::nullopt, std::nullopt, seed, workers, sddp_iter);
  const auto& c = loaded.planning;
  const gtep::TrialPlan plan = gtep::load_plan(plan_path, c);
  const auto topo = gtep::build_topology(c, cfg.m_max);
  const auto op = gtep::simulate_plan(c, topo, plan, cfg);
  fs::create_directories(out);
  gtep::write_operation_tables(out, c, topo, op.forward);
  gtep::write_simulation_summary(out, c, cfg, plan, op);
  std::cout << "expected operation cost " << gtep::num(op.forward.mean) << " (stddev "
            << gtep::num(op.forward.stddev) << ", " << op.iterations << " SDDP iterations"
            << (op.converged ? ", converged" : "") << ")\n"
            << "reports written to " << out.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generation and transmission expansion planning"};
  app.require_subcommand(1);

  std::string case_path, plan_path, out_flag;
  std::optional<double> gap;
  std::optional<int> max_iter, workers, sddp_iter;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Co-optimize investment and operation");
  run->add_option("case", case_path, "Case file")->required();
  run->add_option("--gap", gap, "Target relative gap")->check(CLI::Range(0.0, 1.0));
  run->add_option("--max-iter", max_iter, "Benders iteration cap")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Scenario seed");
  run->add_option("--out", out_flag, "Output directory (default $GTEP_OUT_DIR or ./gtep-out)");
  run->add_option("--workers", workers, "Worker threads for SDDP")->check(CLI::PositiveNumber);
  run->add_option("--sddp-iter", sddp_iter, "SDDP iteration cap")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Load and validate a case file");
  validate->add_option("case", case_path, "Case file")->required();

  auto* simulate = app.add_subcommand("simulate", "Operation study at a fixed plan");
  simulate->add_option("case", case_path, "Case file")->required();
  simulate->add_option("--plan", plan_path, "Plan file")->required();
  simulate->add_option("--seed", seed, "Scenario seed");
  simulate->add_option("--out", out_flag, "Output directory (default $GTEP_OUT_DIR or ./gtep-out)");
  simulate->add_option("--workers", workers, "Worker threads for SDDP")->check(CLI::PositiveNumber);
  simulate->add_option("--sddp-iter", sddp_iter, "SDDP iteration cap")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(case_path);
    if (*run)
      return cmd_run(case_path, gap, max_iter, seed, workers, sddp_iter,
                     output_dir(out_flag));
    if (*simulate)
      return cmd_simulate(case_path, plan_path, seed, workers, sddp_iter, output_dir(out_flag));
  } catch (const gtep::DataError& e) {
    std::cerr << "data error:\n" << e.what() << (std::string(e.what()).ends_with('\n') ? "" : "\n");
    return kData;
  } catch (const gtep::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
