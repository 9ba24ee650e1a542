#pragma once

#include <optional>
#include <string>
#include <vector>

#include "opfsdr/analysis.hpp"
#include "opfsdr/conversion.hpp"
#include "opfsdr/formulation.hpp"
#include "opfsdr/network.hpp"
#include "opfsdr/solver.hpp"

namespace opfsdr {

struct RunConfig {
  std::string input_path;
  std::string format = "auto";   // matpower | json | auto (by extension)
  std::string flows = "all";     // all | none | path to a branch-id list file
  std::string strategy = "full"; // full|band|arrow|sparse|diagonal|unconverted|soc-minors
  int rho = 1;
  bool amalgamate_cliques = false;
  int t_fill = 16;
  int t_size = 16;
  double fix_gen_tol = 1e-3;
  double min_resistance = 1e-4;
  bool scale = true;
  SolverOptions solver;
  int reference_bus = 0;  // internal index
  std::string report_dir;
  std::string dump_tree_path;
  std::string export_spec;  // "<format>:<path>"
};

Network load_network(const RunConfig& config);
Network preprocess(const Network& raw, const RunConfig& config);

// Network graph pattern (edges of the bus admittance matrix).
SparsityPattern network_pattern(const Network& net);

ConsistencyStrategy strategy_from_name(const std::string& name, int rho);

struct StrategyRun {
  std::string strategy;
  Solution solution;
  long rows_original = 0;
  long rows_total = 0;
  std::optional<CountReport> counts;        // converted strategies only
  std::optional<RankReport> rank;           // PSD-bearing strategies only
  std::optional<RecoveredSolution> recovery;
  std::optional<FeasibilityReport> feasibility;
  std::string recovery_error;  // reason recovery was skipped, if any
};

// Formulates, converts, solves and analyzes one strategy.
StrategyRun run_strategy(const Network& net, const SdrProblem& sdr,
                         const std::string& strategy_name, const RunConfig& config);

// Solver-facing real-form problem for a strategy (what cmd_export writes).
ConeLP solver_form(const Network& net, const SdrProblem& sdr,
                   const std::string& strategy_name, const RunConfig& config);

// CLI entry points; return process exit codes (0 optimal, 1 usage error,
// 2 infeasible, 3 numerical failure / iteration limit).
int cmd_run(const RunConfig& config);
int cmd_bench(const RunConfig& config, const std::vector<std::string>& strategies,
              const std::string& csv_path);
int cmd_export(const RunConfig& config);

int exit_code_for(SolveStatus status);

}  // namespace opfsdr
