#include "support/fixtures.hpp"

#include "opfsdr/admittance.hpp"

namespace opfsdr::testing {

SynthNetwork random_network(std::mt19937& rng, const SynthOptions& opts) {
  const int n = opts.n_buses;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Network net;
  for (int k = 0; k < n; ++k) {
    Bus b;
    b.id = k + 1;
    b.v_min = 0.94;
    b.v_max = 1.06;
    net.buses.push_back(b);
  }
  const SparsityPattern graph = random_connected_graph(rng, n, opts.extra_edges);
  for (int i = 0; i < n; ++i) {
    for (int j : graph.neighbors(i)) {
      if (j <= i) continue;
      Branch br;
      br.from = i;
      br.to = j;
      br.r = 0.01 + 0.06 * unit(rng);
      br.x = 0.05 + 0.2 * unit(rng);
      br.b_charging = 0.04 * unit(rng);
      if (unit(rng) < 0.15) br.tap_ratio = 0.97 + 0.06 * unit(rng);
      net.branches.push_back(br);
    }
  }

  // Ground-truth voltage profile.
  Eigen::VectorXcd v(n);
  for (int k = 0; k < n; ++k) {
    const double mag = 0.98 + 0.04 * unit(rng);
    const double ang = k == 0 ? 0.0 : 0.12 * (unit(rng) - 0.5);
    v(k) = std::polar(mag, ang);
  }

  // Generator placement: bus 0 always, then random distinct buses.
  std::vector<int> gen_buses{0};
  while (static_cast<int>(gen_buses.size()) < std::min(opts.n_gens, n)) {
    const int b = static_cast<int>(unit(rng) * n) % n;
    if (std::find(gen_buses.begin(), gen_buses.end(), b) == gen_buses.end()) {
      gen_buses.push_back(b);
    }
  }

  // Demands at non-generator buses follow from the profile; generator buses
  // get a chosen demand and a dispatch that closes the balance.
  const ComplexSparseMatrix y = build_admittance(net);
  const Eigen::VectorXcd inj = y.multiply(v);
  SynthNetwork out;
  std::vector<double> pstar(gen_buses.size()), qstar(gen_buses.size());
  for (int k = 0; k < n; ++k) {
    const cplx s_k = v(k) * std::conj(inj(k));
    const bool is_gen =
        std::find(gen_buses.begin(), gen_buses.end(), k) != gen_buses.end();
    if (is_gen) {
      const double pd = 0.1 + 0.3 * unit(rng);
      const double qd = 0.3 * pd;
      net.buses[k].p_demand = pd;
      net.buses[k].q_demand = qd;
    } else {
      net.buses[k].p_demand = -s_k.real();
      net.buses[k].q_demand = -s_k.imag();
    }
  }
  for (std::size_t gi = 0; gi < gen_buses.size(); ++gi) {
    const int k = gen_buses[gi];
    const cplx s_k = v(k) * std::conj(inj(k));
    pstar[gi] = s_k.real() + net.buses[k].p_demand;
    qstar[gi] = s_k.imag() + net.buses[k].q_demand;
    Generator g;
    g.bus = k;
    g.p_min = std::min(0.0, pstar[gi] - 0.1);
    g.p_max = pstar[gi] + 0.4 + 0.8 * unit(rng);
    g.q_min = qstar[gi] - 0.5 - 0.5 * unit(rng);
    g.q_max = qstar[gi] + 0.5 + 0.5 * unit(rng);
    if (opts.quadratic_costs && (gi == 0 || unit(rng) < 0.7)) {
      g.alpha = 0.5 + 2.5 * unit(rng);
      g.beta = 5.0 + 15.0 * unit(rng);
    } else {
      g.alpha = 0.0;
      g.beta = 5.0 + 15.0 * unit(rng);
    }
    g.kind = classify_cost(g.alpha);
    net.generators.push_back(g);
  }

  if (opts.with_flow_limits) {
    for (int b = 0; b < net.n_branches(); ++b) {
      if (unit(rng) < 0.4) {
        const FlowMatrices fm = branch_flow_matrices(net, b);
        const cplx s_from(fm.from_active.quadratic_form(v).real(),
                          fm.from_reactive.quadratic_form(v).real());
        const cplx s_to(fm.to_active.quadratic_form(v).real(),
                        fm.to_reactive.quadratic_form(v).real());
        const double peak = std::max(std::abs(s_from), std::abs(s_to));
        net.branches[b].s_max = std::max(peak * (1.2 + 0.5 * unit(rng)), 0.05);
        net.flow_limited.push_back(b);
      }
    }
  }
  net.validate();
  out.network = net;
  out.feasible_voltage = v;
  out.feasible_p = pstar;
  out.feasible_q = qstar;
  return out;
}

}  // namespace opfsdr::testing
