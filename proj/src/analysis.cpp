#include "opfsdr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "opfsdr/admittance.hpp"

namespace opfsdr {

RankReport rank_report(const std::vector<Eigen::MatrixXcd>& blocks, double threshold) {
  if (blocks.empty()) throw EmptyBlocks("rank report of an empty block list");
  RankReport rep;
  rep.threshold = threshold;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (const Eigen::MatrixXcd& blk : blocks) {
    BlockEig be;
    be.order = static_cast<int>(blk.rows());
    if (be.order == 1) {
      be.lambda1 = blk(0, 0).real();
      be.lambda2 = 0.0;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(blk, Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();  // ascending
      be.lambda1 = ev(be.order - 1);
      be.lambda2 = ev(be.order - 2);
    }
    const double floor_ = std::max(be.lambda1, 1.0) * 1e-16;
    be.ratio = be.lambda1 / std::max(be.lambda2, floor_);
    rep.min_ratio = std::min(rep.min_ratio, be.ratio);
    rep.blocks.push_back(be);
  }
  rep.rank_one = rep.min_ratio >= threshold;
  return rep;
}

CliqueTree trivial_clique_tree(int order) {
  std::vector<int> all(order);
  std::iota(all.begin(), all.end(), 0);
  return build_clique_tree({all});
}

namespace {

// Distributes `needed` over the generators at one bus proportionally to their
// bound widths, clipping into the bounds. Returns the clipped excess.
double distribute(double needed, const std::vector<double>& lo,
                  const std::vector<double>& hi, std::vector<double>& out) {
  const std::size_t n = lo.size();
  out.assign(n, 0.0);
  double total_lo = 0.0, total_width = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_lo += lo[i];
    total_width += hi[i] - lo[i];
  }
  const double excess = needed - total_lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double width = hi[i] - lo[i];
    const double share = total_width > 0.0 ? width / total_width : 1.0 / n;
    out[i] = lo[i] + excess * share;
  }
  double clipped = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::clamp(out[i], lo[i], hi[i]);
    clipped += std::abs(out[i] - c);
    out[i] = c;
  }
  return clipped;
}

}  // namespace

RecoveredSolution recover_voltage(const Network& net,
                                  const std::vector<Eigen::MatrixXcd>& blocks,
                                  const CliqueTree& tree,
                                  const ConsistencyStrategy& strategy,
                                  const RecoveryOptions& options) {
  const bool diagonal_only =
      strategy.kind == StrategyKind::Diagonal ||
      ((strategy.kind == StrategyKind::Band || strategy.kind == StrategyKind::Arrow) &&
       strategy.rho < 1);
  if (diagonal_only) {
    throw InsufficientCoupling(
        "diagonal-only consistency carries no relative phase information");
  }
  if (static_cast<int>(blocks.size()) != tree.size()) {
    throw DimensionMismatch("block count does not match the clique tree");
  }
  const RankReport rank = rank_report(blocks, options.rank_threshold);
  if (!rank.rank_one) {
    throw NotRankOne("minimum eigenvalue ratio " + std::to_string(rank.min_ratio) +
                     " below threshold " + std::to_string(options.rank_threshold));
  }

  const int n = net.n_buses();
  if (tree.vertex_count() != n) throw DimensionMismatch("tree does not cover the network");

  // Rank-1 fragments.
  std::vector<Eigen::VectorXcd> fragment(tree.size());
  for (int k = 0; k < tree.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(blocks[k]);
    const int p = static_cast<int>(blocks[k].rows());
    const double l1 = std::max(eig.eigenvalues()(p - 1), 0.0);
    fragment[k] = std::sqrt(l1) * eig.eigenvectors().col(p - 1);
  }

  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  std::vector<int> hits(n, 0);
  // Parents before children: reverse postorder.
  std::vector<int> order(tree.postorder.rbegin(), tree.postorder.rend());
  for (int k : order) {
    const std::vector<int>& clique = tree.cliques[k];
    Eigen::VectorXcd& frag = fragment[k];
    if (tree.parent[k] >= 0) {
      // Align the fragment phase on the separator against already-fixed buses.
      cplx w(0.0, 0.0);
      double scale = 0.0;
      for (std::size_t p = 0; p < clique.size(); ++p) {
        const int bus = clique[p];
        if (hits[bus] > 0) {
          w += v(bus) * std::conj(frag(p));
          scale += std::abs(v(bus)) * std::abs(frag(p));
        }
      }
      if (scale <= 0.0 || std::abs(w) < 1e-12 * std::max(scale, 1e-30)) {
        throw PhaseInconsistent("separator carries no phase information for clique " +
                                std::to_string(k));
      }
      frag *= w / std::abs(w);
    }
    for (std::size_t p = 0; p < clique.size(); ++p) {
      const int bus = clique[p];
      const cplx u = frag(p);
      if (hits[bus] == 0) {
        v(bus) = u;
      } else {
        const double mag_v = std::abs(v(bus)), mag_u = std::abs(u);
        if (mag_v > 1e-9 && mag_u > 1e-9) {
          double dphi = std::arg(u * std::conj(v(bus)));
          if (std::abs(dphi) > options.phase_tolerance) {
            throw PhaseInconsistent("phase mismatch of " + std::to_string(dphi) +
                                    " rad at bus " + std::to_string(net.buses[bus].id));
          }
          if (std::abs(mag_u - mag_v) > options.magnitude_tolerance * std::max(1.0, mag_v)) {
            throw PhaseInconsistent("magnitude mismatch at bus " +
                                    std::to_string(net.buses[bus].id));
          }
        }
        // Average magnitudes, keep the first phase.
        const double mag = (mag_v * hits[bus] + mag_u) / (hits[bus] + 1);
        v(bus) = std::polar(mag, std::arg(v(bus)));
      }
      ++hits[bus];
    }
  }

  // Reference phase.
  const int ref = options.reference_bus;
  if (ref < 0 || ref >= n) throw DimensionMismatch("reference bus out of range");
  if (std::abs(v(ref)) > 0.0) {
    v *= std::conj(v(ref)) / std::abs(v(ref));
  }

  RecoveredSolution rec;
  rec.voltages = v;

  // Injection-derived dispatch.
  const ComplexSparseMatrix y = build_admittance(net);
  const Eigen::VectorXcd inj_current = y.multiply(v);
  rec.p_dispatch.assign(net.n_generators(), 0.0);
  rec.q_dispatch.assign(net.n_generators(), 0.0);
  double clipped = 0.0;
  for (int bus = 0; bus < n; ++bus) {
    const std::vector<int> gens = net.generators_at(bus);
    if (gens.empty()) continue;
    const cplx s_inj = v(bus) * std::conj(inj_current(bus));
    double need_p = s_inj.real() + net.buses[bus].p_demand;
    double need_q = s_inj.imag() + net.buses[bus].q_demand;
    std::vector<int> active;
    for (int g : gens) {
      const Generator& gen = net.generators[g];
      if (gen.kind == GenKind::Fixed) {
        rec.p_dispatch[g] = gen.p_fixed();
        rec.q_dispatch[g] = gen.q_fixed();
        need_p -= gen.p_fixed();
        need_q -= gen.q_fixed();
      } else {
        active.push_back(g);
      }
    }
    if (active.empty()) continue;
    std::vector<double> lo, hi, out;
    for (int g : active) {
      lo.push_back(net.generators[g].p_min);
      hi.push_back(net.generators[g].p_max);
    }
    clipped += distribute(need_p, lo, hi, out);
    for (std::size_t i = 0; i < active.size(); ++i) rec.p_dispatch[active[i]] = out[i];
    lo.clear();
    hi.clear();
    for (int g : active) {
      lo.push_back(net.generators[g].q_min);
      hi.push_back(net.generators[g].q_max);
    }
    clipped += distribute(need_q, lo, hi, out);
    for (std::size_t i = 0; i < active.size(); ++i) rec.q_dispatch[active[i]] = out[i];
  }
  rec.clip_violation = clipped;

  double cost = 0.0;
  for (int g = 0; g < net.n_generators(); ++g) {
    const Generator& gen = net.generators[g];
    const double p = rec.p_dispatch[g];
    cost += gen.alpha * p * p + gen.beta * p + gen.cost_const;
  }
  rec.objective = cost;
  return rec;
}

FeasibilityReport check_feasibility(const Network& net, const RecoveredSolution& rec) {
  FeasibilityReport rep;
  const int n = net.n_buses();
  if (rec.voltages.size() != n) throw DimensionMismatch("voltage vector length mismatch");
  const ComplexSparseMatrix y = build_admittance(net);
  const Eigen::VectorXcd current = y.multiply(rec.voltages);

  for (int k = 0; k < n; ++k) {
    cplx gen(0.0, 0.0);
    for (int g : net.generators_at(k)) {
      gen += cplx(rec.p_dispatch[g], rec.q_dispatch[g]);
    }
    const cplx balance = rec.voltages(k) * std::conj(current(k)) -
                         (gen - cplx(net.buses[k].p_demand, net.buses[k].q_demand));
    rep.max_p_balance = std::max(rep.max_p_balance, std::abs(balance.real()));
    rep.max_q_balance = std::max(rep.max_q_balance, std::abs(balance.imag()));
    const double vm = std::abs(rec.voltages(k));
    rep.max_voltage_violation = std::max(
        {rep.max_voltage_violation, vm - net.buses[k].v_max, net.buses[k].v_min - vm});
  }
  rep.max_voltage_violation = std::max(rep.max_voltage_violation, 0.0);

  for (int g = 0; g < net.n_generators(); ++g) {
    const Generator& gen = net.generators[g];
    rep.max_generation_violation = std::max(
        {rep.max_generation_violation, rec.p_dispatch[g] - gen.p_max,
         gen.p_min - rec.p_dispatch[g], rec.q_dispatch[g] - gen.q_max,
         gen.q_min - rec.q_dispatch[g]});
  }
  // dispatch clipped against the bounds during recovery counts as violation
  rep.max_generation_violation =
      std::max({rep.max_generation_violation, rec.clip_violation, 0.0});

  for (int f : net.flow_limited) {
    const FlowMatrices fm = branch_flow_matrices(net, f);
    const double smax = *net.branches[f].s_max;
    const cplx s_from(fm.from_active.quadratic_form(rec.voltages).real(),
                      fm.from_reactive.quadratic_form(rec.voltages).real());
    const cplx s_to(fm.to_active.quadratic_form(rec.voltages).real(),
                    fm.to_reactive.quadratic_form(rec.voltages).real());
    rep.max_flow_violation = std::max(
        {rep.max_flow_violation, std::abs(s_from) - smax, std::abs(s_to) - smax});
  }
  rep.max_flow_violation = std::max(rep.max_flow_violation, 0.0);
  return rep;
}

double normalized_objective(double relaxed_value, double reference_value) {
  if (!(reference_value > 0.0)) {
    throw NonpositiveBase("reference objective must be positive");
  }
  return relaxed_value / reference_value;
}

void slack_dispatch(const Network& net, const VariableMap& map,
                    const Eigen::VectorXd& z, std::vector<double>& p,
                    std::vector<double>& q) {
  p.assign(net.n_generators(), 0.0);
  q.assign(net.n_generators(), 0.0);
  for (int a = 0; a < map.n_active(); ++a) {
    const Generator& gen = net.generators[map.active_gens[a]];
    p[map.active_gens[a]] = gen.p_min + z(map.p_lo(a));
    q[map.active_gens[a]] = gen.q_min + z(map.q_lo(a));
  }
  for (int g = 0; g < net.n_generators(); ++g) {
    if (net.generators[g].kind == GenKind::Fixed) {
      p[g] = net.generators[g].p_fixed();
      q[g] = net.generators[g].q_fixed();
    }
  }
}

}  // namespace opfsdr
