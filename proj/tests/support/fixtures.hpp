#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "opfsdr/cliquetree.hpp"
#include "opfsdr/network.hpp"
#include "opfsdr/pattern.hpp"

namespace opfsdr::testing {

inline Network two_bus() {
  Network net;
  net.buses = {{1, 0.95, 1.05, 0.0, 0.0, 0.0, 0.0}, {2, 0.95, 1.05, 0.4, 0.1, 0.0, 0.0}};
  Generator g;
  g.bus = 0;
  g.p_min = 0.0;
  g.p_max = 1.0;
  g.q_min = -0.5;
  g.q_max = 0.5;
  g.alpha = 1.0;
  g.beta = 10.0;
  g.kind = GenKind::Quadratic;
  net.generators = {g};
  Branch br;
  br.from = 0;
  br.to = 1;
  br.r = 0.02;
  br.x = 0.1;
  br.b_charging = 0.02;
  br.s_max = 1.0;
  net.branches = {br};
  net.flow_limited = {0};
  return net;
}

inline Network three_bus_ring() {
  Network net;
  net.buses = {{1, 0.95, 1.05, 0.0, 0.0, 0.0, 0.0},
               {2, 0.95, 1.05, 0.35, 0.1, 0.0, 0.0},
               {3, 0.95, 1.05, 0.25, 0.05, 0.0, 0.0}};
  Generator g;
  g.bus = 0;
  g.p_min = 0.0;
  g.p_max = 1.5;
  g.q_min = -1.0;
  g.q_max = 1.0;
  g.alpha = 0.9;
  g.beta = 12.0;
  g.kind = GenKind::Quadratic;
  net.generators = {g};
  auto mkbranch = [](int f, int t) {
    Branch br;
    br.from = f;
    br.to = t;
    br.r = 0.02;
    br.x = 0.12;
    br.b_charging = 0.01;
    return br;
  };
  net.branches = {mkbranch(0, 1), mkbranch(1, 2), mkbranch(2, 0)};
  return net;
}

// Random connected simple graph with n vertices and roughly extra_edges chords.
inline SparsityPattern random_connected_graph(std::mt19937& rng, int n, int extra_edges) {
  SparsityPattern p(n);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    p.add_edge(v, parent(rng));
  }
  for (int e = 0; e < extra_edges; ++e) {
    const int a = pick(rng), b = pick(rng);
    if (a != b) p.add_edge(a, b);
  }
  return p;
}

struct SynthOptions {
  int n_buses = 10;
  int extra_edges = 3;
  int n_gens = 3;
  bool with_flow_limits = false;
  bool quadratic_costs = true;
};

// Synthetic OPF instance built around a known feasible voltage profile: the
// profile satisfies the power flow equations exactly with the generated
// demands and dispatch, so the OPF (and its SDR) are feasible by construction.
struct SynthNetwork {
  Network network;
  Eigen::VectorXcd feasible_voltage;
  std::vector<double> feasible_p, feasible_q;  // per generator
};

SynthNetwork random_network(std::mt19937& rng, const SynthOptions& opts);

// Brute-force maximal clique enumeration (Bron-Kerbosch), for small graphs.
inline void bron_kerbosch(const SparsityPattern& g, std::set<int> r, std::set<int> p,
                          std::set<int> x, std::vector<std::vector<int>>& out) {
  if (p.empty() && x.empty()) {
    out.emplace_back(r.begin(), r.end());
    return;
  }
  std::set<int> p_copy = p;
  for (int v : p_copy) {
    std::set<int> nv(g.neighbors(v).begin(), g.neighbors(v).end());
    std::set<int> r2 = r, p2, x2;
    r2.insert(v);
    for (int u : p) {
      if (nv.count(u)) p2.insert(u);
    }
    for (int u : x) {
      if (nv.count(u)) x2.insert(u);
    }
    bron_kerbosch(g, r2, p2, x2, out);
    p.erase(v);
    x.insert(v);
  }
}

inline std::vector<std::vector<int>> all_maximal_cliques(const SparsityPattern& g) {
  std::set<int> p;
  for (int i = 0; i < g.order(); ++i) p.insert(i);
  std::vector<std::vector<int>> out;
  bron_kerbosch(g, {}, p, {}, out);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string data_path(const std::string& name) {
  return std::string(OPFSDR_DATA_DIR) + "/" + name;
}

}  // namespace opfsdr::testing
