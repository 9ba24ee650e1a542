#include "opfsdr/formulation.hpp"

#include <cmath>
#include <set>

namespace opfsdr {

std::string VariableMap::describe(int coord) const {
  auto tag = [](const std::string& name, int i) { return name + "[" + std::to_string(i) + "]"; };
  if (coord >= t_begin && coord < t_begin + n_quad()) return tag("t", coord - t_begin);
  if (coord >= p_lo_begin && coord < p_lo_begin + n_active()) return tag("p_lo", coord - p_lo_begin);
  if (coord >= p_up_begin && coord < p_up_begin + n_active()) return tag("p_up", coord - p_up_begin);
  if (coord >= q_lo_begin && coord < q_lo_begin + n_active()) return tag("q_lo", coord - q_lo_begin);
  if (coord >= q_up_begin && coord < q_up_begin + n_active()) return tag("q_up", coord - q_up_begin);
  if (coord >= v_lo_begin && coord < v_lo_begin + n_buses) return tag("v_lo", coord - v_lo_begin);
  if (coord >= v_up_begin && coord < v_up_begin + n_buses) return tag("v_up", coord - v_up_begin);
  if (coord >= flow_soc_begin && coord < flow_soc_begin + 6 * n_flow()) {
    const int rel = coord - flow_soc_begin;
    return "flow[" + std::to_string(rel / 6) + "]." + (rel % 6 < 3 ? "kl" : "lk") +
           std::to_string(rel % 3);
  }
  if (coord >= cost_soc_begin && coord < cost_soc_begin + 3 * n_quad()) {
    const int rel = coord - cost_soc_begin;
    return "w[" + std::to_string(rel / 3) + "]." + std::to_string(rel % 3);
  }
  if (coord >= psd_begin && coord < psd_begin + psd_order * psd_order) {
    const PsdLayout x = psd();
    for (int i = 0; i < psd_order; ++i) {
      if (coord == x.diag(i)) return "X[" + std::to_string(i) + "," + std::to_string(i) + "]";
      for (int j = i + 1; j < psd_order; ++j) {
        if (coord == x.re(i, j))
          return "ReX[" + std::to_string(i) + "," + std::to_string(j) + "]";
        if (coord == x.im(i, j))
          return "ImX[" + std::to_string(i) + "," + std::to_string(j) + "]";
      }
    }
  }
  throw DimensionMismatch("coordinate out of range: " + std::to_string(coord));
}

void add_trace_term(LinExpr& expr, const ComplexSparseMatrix& m, const PsdLayout& x,
                    double scale) {
  // tr(M X) = sum_i M_ii X_ii + 2 sum_{i<j} (Re M_ij Re X_ij + Im M_ij Im X_ij)
  for (const Triplet& t : m.entries()) {
    if (t.row == t.col) {
      expr.terms.emplace_back(x.diag(t.row), scale * t.value.real());
    } else if (t.row < t.col) {
      if (t.value.real() != 0.0) {
        expr.terms.emplace_back(x.re(t.row, t.col), 2.0 * scale * t.value.real());
      }
      if (t.value.imag() != 0.0) {
        expr.terms.emplace_back(x.im(t.row, t.col), 2.0 * scale * t.value.imag());
      }
    }
  }
}

long count_variables(const Network& net) {
  long active = 0, quad = 0;
  for (const Generator& g : net.generators) {
    if (g.kind == GenKind::Fixed) continue;
    ++active;
    if (g.kind == GenKind::Quadratic) ++quad;
  }
  const long n = net.n_buses();
  const long f = static_cast<long>(net.flow_limited.size());
  return 4 * active + 2 * n + 3 * (2 * f + quad) + n * n;
}

long count_rows(const Network& net) {
  long active = 0, quad = 0;
  for (const Generator& g : net.generators) {
    if (g.kind == GenKind::Fixed) continue;
    ++active;
    if (g.kind == GenKind::Quadratic) ++quad;
  }
  const long n = net.n_buses();
  const long f = static_cast<long>(net.flow_limited.size());
  return 4 * n + 2 * active + 3 * (2 * f + quad);
}

std::array<LinExpr, 3> quadratic_cost_rows(double alpha, double beta, const LinExpr& p,
                                           const LinExpr& t, int w_base) {
  if (!(alpha > 0.0)) throw FormulationError("quadratic cost requires alpha > 0");
  auto minus = [](const LinExpr& e, double scale) {
    LinExpr out;
    for (const auto& [i, v] : e.terms) out.terms.emplace_back(i, -scale * v);
    out.constant = -scale * e.constant;
    return out;
  };
  std::array<LinExpr, 3> rows;
  // w0 - (1/2 + t - beta p) = 0
  rows[0] = minus(t, 1.0);
  for (const auto& [i, v] : p.terms) rows[0].terms.emplace_back(i, beta * v);
  rows[0].constant += beta * p.constant - 0.5;
  rows[0].terms.emplace_back(w_base, 1.0);
  // w1 - (1/2 - t + beta p) = 0
  rows[1] = t;
  for (const auto& [i, v] : p.terms) rows[1].terms.emplace_back(i, -beta * v);
  rows[1].constant += -beta * p.constant - 0.5;
  rows[1].terms.emplace_back(w_base + 1, 1.0);
  // w2 - sqrt(2 alpha) p = 0
  const double s = std::sqrt(2.0 * alpha);
  rows[2] = minus(p, s);
  rows[2].terms.emplace_back(w_base + 2, 1.0);
  return rows;
}

std::array<LinExpr, 6> flow_limit_rows(const Network& net, int branch,
                                       const PsdLayout& x, int z_base) {
  const Branch& br = net.branches.at(branch);
  if (!br.s_max.has_value()) {
    throw MissingLimit("branch " + std::to_string(branch + 1) + " has no flow limit");
  }
  const FlowMatrices fm = branch_flow_matrices(net, branch);
  std::array<LinExpr, 6> rows;
  const ComplexSparseMatrix* mats[4] = {&fm.from_active, &fm.from_reactive, &fm.to_active,
                                        &fm.to_reactive};
  for (int d = 0; d < 2; ++d) {
    // z0 = s_max
    rows[3 * d].terms.emplace_back(z_base + 3 * d, 1.0);
    rows[3 * d].constant = -*br.s_max;
    for (int comp = 0; comp < 2; ++comp) {
      LinExpr& row = rows[3 * d + 1 + comp];
      row.terms.emplace_back(z_base + 3 * d + 1 + comp, 1.0);
      add_trace_term(row, *mats[2 * d + comp], x, -1.0);
    }
  }
  return rows;
}

SdrProblem build_sdr(const Network& net) {
  net.validate();
  SdrProblem out;
  VariableMap& vm = out.map;
  const int n = net.n_buses();
  vm.n_buses = n;
  for (int g = 0; g < net.n_generators(); ++g) {
    const Generator& gen = net.generators[g];
    if (gen.kind == GenKind::Fixed) continue;
    if (gen.kind == GenKind::Quadratic && !(gen.alpha > 0.0)) {
      throw FormulationError("generator at bus " + std::to_string(net.buses[gen.bus].id) +
                             " classified quadratic but alpha <= 0");
    }
    vm.active_gens.push_back(g);
    if (gen.kind == GenKind::Quadratic) vm.quad_gens.push_back(g);
  }
  vm.flow_branches = net.flow_limited;

  const int ga = vm.n_active();
  const int gq = vm.n_quad();
  const int nf = vm.n_flow();
  vm.t_begin = 0;
  vm.p_lo_begin = gq;
  vm.p_up_begin = vm.p_lo_begin + ga;
  vm.q_lo_begin = vm.p_up_begin + ga;
  vm.q_up_begin = vm.q_lo_begin + ga;
  vm.v_lo_begin = vm.q_up_begin + ga;
  vm.v_up_begin = vm.v_lo_begin + n;
  vm.flow_soc_begin = vm.v_up_begin + n;
  vm.cost_soc_begin = vm.flow_soc_begin + 6 * nf;
  vm.psd_begin = vm.cost_soc_begin + 3 * gq;
  vm.psd_order = n;

  ConeLP& lp = out.lp;
  lp.cone.segments = {{SegmentKind::Free, gq},
                      {SegmentKind::NonNeg, 4 * ga + 2 * n}};
  for (int i = 0; i < 2 * nf + gq; ++i) lp.cone.segments.push_back({SegmentKind::Soc, 3});
  lp.cone.segments.push_back({SegmentKind::HermitianPsd, n});
  const int dim = lp.cone.dim();
  lp.h = Eigen::VectorXd::Zero(dim);

  // Objective: linear generators contribute beta (P_min + p_lo), quadratic
  // ones the epigraph variable t; constant cost terms go to the offset.
  for (int a = 0; a < ga; ++a) {
    const Generator& g = net.generators[vm.active_gens[a]];
    if (g.kind == GenKind::Linear) {
      lp.h(vm.p_lo(a)) = g.beta;
      lp.objective_offset += g.beta * g.p_min + g.cost_const;
    } else {
      lp.objective_offset += g.cost_const;
    }
  }
  for (int q = 0; q < gq; ++q) lp.h(vm.t(q)) = 1.0;
  for (const Generator& g : net.generators) {
    if (g.kind == GenKind::Fixed) {
      const double p = g.p_fixed();
      lp.objective_offset += g.alpha * p * p + g.beta * p + g.cost_const;
    }
  }

  const ComplexSparseMatrix y = build_admittance(net);
  const PsdLayout x = vm.psd();

  // Positions of generators in the active list, by generator index.
  std::vector<int> active_pos(net.n_generators(), -1);
  for (int a = 0; a < ga; ++a) active_pos[vm.active_gens[a]] = a;

  // Power balance rows.
  std::vector<LinExpr> p_rows(n), q_rows(n);
  for (int k = 0; k < n; ++k) {
    const InjectionPair inj = bus_injection_matrices(y, k);
    add_trace_term(p_rows[k], inj.active, x);
    add_trace_term(q_rows[k], inj.reactive, x);
    p_rows[k].constant = net.buses[k].p_demand;
    q_rows[k].constant = net.buses[k].q_demand;
  }
  for (int g = 0; g < net.n_generators(); ++g) {
    const Generator& gen = net.generators[g];
    if (gen.kind == GenKind::Fixed) {
      p_rows[gen.bus].constant -= gen.p_fixed();
      q_rows[gen.bus].constant -= gen.q_fixed();
    } else {
      const int a = active_pos[g];
      p_rows[gen.bus].terms.emplace_back(vm.p_lo(a), -1.0);
      p_rows[gen.bus].constant -= gen.p_min;
      q_rows[gen.bus].terms.emplace_back(vm.q_lo(a), -1.0);
      q_rows[gen.bus].constant -= gen.q_min;
    }
  }
  for (int k = 0; k < n; ++k) lp.add_row(p_rows[k]);
  for (int k = 0; k < n; ++k) lp.add_row(q_rows[k]);

  // Generation range rows.
  for (int a = 0; a < ga; ++a) {
    const Generator& g = net.generators[vm.active_gens[a]];
    LinExpr row;
    row.terms.emplace_back(vm.p_lo(a), 1.0);
    row.terms.emplace_back(vm.p_up(a), 1.0);
    row.constant = -(g.p_max - g.p_min);
    lp.add_row(row);
  }
  for (int a = 0; a < ga; ++a) {
    const Generator& g = net.generators[vm.active_gens[a]];
    LinExpr row;
    row.terms.emplace_back(vm.q_lo(a), 1.0);
    row.terms.emplace_back(vm.q_up(a), 1.0);
    row.constant = -(g.q_max - g.q_min);
    lp.add_row(row);
  }

  // Voltage magnitude rows: Vmin^2 + v_lo = X_kk and X_kk + v_up = Vmax^2.
  for (int k = 0; k < n; ++k) {
    const Bus& b = net.buses[k];
    LinExpr lo;
    lo.terms.emplace_back(vm.v_lo(k), 1.0);
    lo.terms.emplace_back(x.diag(k), -1.0);
    lo.constant = b.v_min * b.v_min;
    lp.add_row(lo);
    LinExpr up;
    up.terms.emplace_back(x.diag(k), 1.0);
    up.terms.emplace_back(vm.v_up(k), 1.0);
    up.constant = -b.v_max * b.v_max;
    lp.add_row(up);
  }

  // Flow limit rows.
  for (int f = 0; f < nf; ++f) {
    for (LinExpr& row : flow_limit_rows(net, vm.flow_branches[f], x, vm.flow_soc(f, 0))) {
      lp.add_row(row);
    }
  }

  // Quadratic cost rows.
  for (int q = 0; q < gq; ++q) {
    const Generator& g = net.generators[vm.quad_gens[q]];
    const int a = active_pos[vm.quad_gens[q]];
    LinExpr p = LinExpr::variable(vm.p_lo(a));
    p.constant = g.p_min;
    for (LinExpr& row :
         quadratic_cost_rows(g.alpha, g.beta, p, LinExpr::variable(vm.t(q)), vm.cost_soc(q))) {
      lp.add_row(row);
    }
  }

  lp.canonicalize();
  lp.check_consistent();
  return out;
}

ConeLP soc_minor_relaxation(const ConeLP& lp, const VariableMap& map,
                            const std::vector<std::pair<int, int>>& minors) {
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : minors) {
    if (i < 0 || j <= i || j >= map.psd_order) {
      throw FormulationError("minor indices must satisfy 0 <= i < j < order");
    }
    if (!seen.insert({i, j}).second) {
      throw DuplicateMinor("duplicate minor (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
    }
  }
  ConeLP out = lp;
  // The PSD block keeps its coordinates but loses the cone membership.
  bool replaced = false;
  for (ConeSegment& s : out.cone.segments) {
    if (s.kind == SegmentKind::HermitianPsd) {
      if (replaced) throw FormulationError("expected a single PSD segment");
      s = {SegmentKind::Free, s.dim()};
      replaced = true;
    }
  }
  if (!replaced) throw FormulationError("no PSD segment to relax");

  const PsdLayout x = map.psd();
  int next = out.dim();
  out.h.conservativeResize(next + 4 * static_cast<int>(minors.size()));
  for (const auto& [i, j] : minors) {
    out.cone.segments.push_back({SegmentKind::Soc, 4});
    for (int k = 0; k < 4; ++k) out.h(next + k) = 0.0;
    // (X_ii + X_jj, X_ii - X_jj, 2 Re X_ij, 2 Im X_ij) in a 4-dim SOC is
    // equivalent to PSD of the 2x2 principal minor (i, j).
    LinExpr r0, r1, r2, r3;
    r0.terms = {{next + 0, 1.0}, {x.diag(i), -1.0}, {x.diag(j), -1.0}};
    r1.terms = {{next + 1, 1.0}, {x.diag(i), -1.0}, {x.diag(j), 1.0}};
    r2.terms = {{next + 2, 1.0}, {x.re(i, j), -2.0}};
    r3.terms = {{next + 3, 1.0}, {x.im(i, j), -2.0}};
    out.add_row(r0);
    out.add_row(r1);
    out.add_row(r2);
    out.add_row(r3);
    next += 4;
  }
  out.canonicalize();
  out.check_consistent();
  return out;
}

}  // namespace opfsdr
