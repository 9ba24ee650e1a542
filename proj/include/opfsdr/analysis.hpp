#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfsdr/conversion.hpp"
#include "opfsdr/formulation.hpp"
#include "opfsdr/network.hpp"

namespace opfsdr {

struct BlockEig {
  int order = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double ratio = 0.0;  // lambda1 / max(lambda2, floor)
};

struct RankReport {
  std::vector<BlockEig> blocks;
  double min_ratio = 0.0;
  double threshold = 1e4;
  bool rank_one = false;
};

// Eigenvalue-ratio rank indicator per block; verdict rank-1 iff the smallest
// ratio reaches the threshold. Throws EmptyBlocks.
RankReport rank_report(const std::vector<Eigen::MatrixXcd>& blocks,
                       double threshold = 1e4);

struct RecoveredSolution {
  Eigen::VectorXcd voltages;         // per-unit, reference bus at angle zero
  std::vector<double> p_dispatch;    // per generator (injection-derived)
  std::vector<double> q_dispatch;
  double objective = 0.0;            // generation cost at the recovered dispatch
  double clip_violation = 0.0;       // dispatch clipped against generator bounds
  std::string notes;
};

struct RecoveryOptions {
  int reference_bus = 0;
  double phase_tolerance = 1e-4;  // separator phase mismatch limit (radians)
  double rank_threshold = 1e4;
  double magnitude_tolerance = 1e-4;  // shared-bus magnitude disagreement limit
};

// Rank-1 voltage recovery from per-clique blocks: top eigenvector fragments,
// phases aligned over clique-tree edges root to leaf, magnitudes on shared
// buses averaged. Throws InsufficientCoupling for diagonal-only strategies,
// NotRankOne when the rank verdict fails, PhaseInconsistent when fragments
// disagree beyond tolerance.
RecoveredSolution recover_voltage(const Network& net,
                                  const std::vector<Eigen::MatrixXcd>& blocks,
                                  const CliqueTree& tree,
                                  const ConsistencyStrategy& strategy,
                                  const RecoveryOptions& options = {});

// Clique tree with a single clique {0..n-1}; lets the unconverted SDR reuse
// the block-based recovery path.
CliqueTree trivial_clique_tree(int order);

struct FeasibilityReport {
  double max_p_balance = 0.0;
  double max_q_balance = 0.0;
  double max_generation_violation = 0.0;
  double max_voltage_violation = 0.0;
  double max_flow_violation = 0.0;
  double objective_gap = 0.0;  // recovered objective minus relaxation bound
};

// Residuals of the original OPF constraints at the recovered point.
FeasibilityReport check_feasibility(const Network& net, const RecoveredSolution& rec);

// relaxed_value / reference_value; throws NonpositiveBase when the
// reference is not positive.
double normalized_objective(double relaxed_value, double reference_value);

// Generator dispatch read off the SDR slack variables of a solution vector.
void slack_dispatch(const Network& net, const VariableMap& map,
                    const Eigen::VectorXd& z, std::vector<double>& p,
                    std::vector<double>& q);

}  // namespace opfsdr
