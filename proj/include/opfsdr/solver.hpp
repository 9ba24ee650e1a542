#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "opfsdr/conelp.hpp"

namespace opfsdr {

struct SolverOptions {
  double tolerance = 1e-7;        // primal/dual residual target
  int max_iterations = 200;
  double step_fraction = 0.98;    // fraction of the step to the cone boundary
  // Certificate acceptance and relative-gap targets; NaN tracks `tolerance`.
  double feasibility_tolerance = std::numeric_limits<double>::quiet_NaN();
  double gap_tolerance = std::numeric_limits<double>::quiet_NaN();
  bool verbose = false;

  double gap_tol() const {
    return std::isnan(gap_tolerance) ? tolerance : gap_tolerance;
  }
  double feas_tol() const {
    return std::isnan(feasibility_tolerance) ? tolerance : feasibility_tolerance;
  }
};

enum class SolveStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  IterationLimit,
  NumericalFailure,
};

std::string to_string(SolveStatus status);

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd z;  // primal point (or unbounded-ray certificate)
  Eigen::VectorXd y;  // equality multipliers (or infeasibility certificate)
  Eigen::VectorXd s;  // dual cone point, zero on free coordinates
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  double certificate_residual = 0.0;  // Farkas residual for infeasible statuses
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string log;
};

// Primal-dual path-following interior-point method (Nesterov-Todd scaling,
// Mehrotra predictor-corrector, homogeneous self-dual embedding) for cone LPs
// over products of free, nonnegative, second-order and real symmetric PSD
// segments. Hermitian segments must pass real_embedding first.
Solution solve(const ConeLP& lp, const SolverOptions& options = {});

// Maps a solution of scale_conelp(lp) back to the coordinates of lp.
void unscale_solution(const ScalingRecord& record, Solution& solution);

}  // namespace opfsdr
