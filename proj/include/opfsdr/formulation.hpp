#pragma once

#include <array>
#include <string>
#include <vector>

#include "opfsdr/admittance.hpp"
#include "opfsdr/conelp.hpp"
#include "opfsdr/network.hpp"

namespace opfsdr {

// Index bookkeeping for the SDR cone LP. Variable vector layout:
//   [ t_g (free, one per quad generator) |
//     p_lo, p_up, q_lo, q_up (per active generator), v_lo, v_up (per bus) |
//     flow SOC3 pairs (per flow-limited branch) | cost SOC3 (per quad gen) |
//     X (HermitianPsd of order n) ]
// Row order: P balance (n), Q balance (n), P range, Q range, voltage pairs
// (lower, upper per bus), flow rows (6 per branch), cost rows (3 per quad gen).
struct VariableMap {
  int n_buses = 0;
  std::vector<int> active_gens;  // indices into Network::generators, non-fixed
  std::vector<int> quad_gens;    // subset of active_gens with quadratic cost
  std::vector<int> flow_branches;  // the set F

  // Coordinate bases.
  int t_begin = 0;
  int p_lo_begin = 0, p_up_begin = 0, q_lo_begin = 0, q_up_begin = 0;
  int v_lo_begin = 0, v_up_begin = 0;
  int flow_soc_begin = 0;  // 6 coords per flow branch (two SOC3)
  int cost_soc_begin = 0;  // 3 coords per quad gen
  int psd_begin = 0;
  int psd_order = 0;

  int n_active() const { return static_cast<int>(active_gens.size()); }
  int n_quad() const { return static_cast<int>(quad_gens.size()); }
  int n_flow() const { return static_cast<int>(flow_branches.size()); }

  int t(int quad_pos) const { return t_begin + quad_pos; }
  int p_lo(int active_pos) const { return p_lo_begin + active_pos; }
  int p_up(int active_pos) const { return p_up_begin + active_pos; }
  int q_lo(int active_pos) const { return q_lo_begin + active_pos; }
  int q_up(int active_pos) const { return q_up_begin + active_pos; }
  int v_lo(int bus) const { return v_lo_begin + bus; }
  int v_up(int bus) const { return v_up_begin + bus; }
  int flow_soc(int flow_pos, int direction) const {
    return flow_soc_begin + 6 * flow_pos + 3 * direction;
  }
  int cost_soc(int quad_pos) const { return cost_soc_begin + 3 * quad_pos; }
  PsdLayout psd() const { return PsdLayout(psd_begin, psd_order, SegmentKind::HermitianPsd); }

  // Row index helpers.
  int row_p_balance(int bus) const { return bus; }
  int row_q_balance(int bus) const { return n_buses + bus; }
  int row_p_range(int active_pos) const { return 2 * n_buses + active_pos; }
  int row_q_range(int active_pos) const { return 2 * n_buses + n_active() + active_pos; }
  int row_voltage(int bus, bool upper) const {
    return 2 * n_buses + 2 * n_active() + 2 * bus + (upper ? 1 : 0);
  }
  int row_flow(int flow_pos, int direction, int component) const {
    return 4 * n_buses + 2 * n_active() + 6 * flow_pos + 3 * direction + component;
  }
  int row_cost(int quad_pos, int component) const {
    return 4 * n_buses + 2 * n_active() + 6 * n_flow() + 3 * quad_pos + component;
  }

  // Human-readable coordinate name; defined for every index.
  std::string describe(int coord) const;
};

struct SdrProblem {
  ConeLP lp;
  VariableMap map;
};

// Builds the semidefinite relaxation of the OPF as a cone LP. Expects the
// network preprocessed (tight generators fixed, flow set chosen).
SdrProblem build_sdr(const Network& net);

// Number of conic variable coordinates of the SDR:
// 4|G| + 2|N| + 3(2|F| + |Gquad|) + |N|^2 with |G| the active generators.
long count_variables(const Network& net);

// Closed-form equality row count: 4|N| + 2|G| + 3(2|F| + |Gquad|).
long count_rows(const Network& net);

// Three rows binding the SOC3 block at coordinates w_base..w_base+2 to the
// epigraph alpha p^2 + beta p <= t:
//   w = (1/2 + t - beta p, 1/2 - t + beta p, sqrt(2 alpha) p).
std::array<LinExpr, 3> quadratic_cost_rows(double alpha, double beta, const LinExpr& p,
                                           const LinExpr& t, int w_base);

// Six rows binding the two SOC3 blocks at z_base (z_{k,l}) and z_base+3
// (z_{l,k}) to the flow limit of the branch. Throws MissingLimit.
std::array<LinExpr, 6> flow_limit_rows(const Network& net, int branch,
                                       const PsdLayout& x, int z_base);

// Replaces the Hermitian PSD block by PSD constraints on the given 2x2
// principal minors, each expressed as one 4-dimensional SOC. The X
// coordinates become free variables. Weaker-or-equal relaxation.
ConeLP soc_minor_relaxation(const ConeLP& lp, const VariableMap& map,
                            const std::vector<std::pair<int, int>>& minors);

// Adds tr(M X) to expr with the raw-entry coordinates of layout x; M Hermitian.
void add_trace_term(LinExpr& expr, const ComplexSparseMatrix& m, const PsdLayout& x,
                    double scale = 1.0);

}  // namespace opfsdr
