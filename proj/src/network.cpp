#include "opfsdr/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace opfsdr {

int Network::internal_index(int external_id) const {
  for (int i = 0; i < n_buses(); ++i) {
    if (buses[i].id == external_id) return i;
  }
  throw ValidationError("unknown bus id " + std::to_string(external_id));
}

std::vector<int> Network::generators_at(int bus) const {
  std::vector<int> out;
  for (int g = 0; g < n_generators(); ++g) {
    if (generators[g].bus == bus) out.push_back(g);
  }
  return out;
}

bool Network::connected() const {
  const int n = n_buses();
  if (n == 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (const Branch& br : branches) {
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n;
}

void Network::validate() const {
  if (buses.empty()) throw ValidationError("network has no buses");
  for (const Bus& b : buses) {
    if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max)) {
      throw ValidationError("bus " + std::to_string(b.id) +
                            ": voltage bounds must satisfy 0 < v_min <= v_max");
    }
    if (!std::isfinite(b.p_demand) || !std::isfinite(b.q_demand)) {
      throw ValidationError("bus " + std::to_string(b.id) + ": demand not finite");
    }
  }
  for (const Generator& g : generators) {
    if (g.bus < 0 || g.bus >= n_buses()) throw ValidationError("generator bus out of range");
    if (g.p_min > g.p_max || g.q_min > g.q_max) {
      throw ValidationError("generator bounds inverted at bus " +
                            std::to_string(buses[g.bus].id));
    }
    if (g.alpha < 0.0) throw ValidationError("negative quadratic cost coefficient");
  }
  for (const Branch& br : branches) {
    if (br.from < 0 || br.from >= n_buses() || br.to < 0 || br.to >= n_buses()) {
      throw ValidationError("branch endpoint out of range");
    }
    if (br.from == br.to) throw ValidationError("self-loop branch");
    if (br.r < 0.0) throw ValidationError("negative branch resistance");
    if (!(br.tap_ratio > 0.0)) throw ValidationError("nonpositive tap ratio");
  }
  for (int f : flow_limited) {
    if (f < 0 || f >= n_branches()) throw ValidationError("flow set index out of range");
    if (!branches[f].s_max.has_value()) {
      throw ValidationError("flow set contains branch without a limit");
    }
  }
  if (!connected()) throw ValidationError("network graph is not connected");
}

GenKind classify_cost(double alpha) {
  return alpha > 0.0 ? GenKind::Quadratic : GenKind::Linear;
}

Network fix_tight_generators(const Network& net, double tol) {
  Network out = net;
  for (Generator& g : out.generators) {
    if (g.kind == GenKind::Fixed) continue;
    if (g.p_max - g.p_min < tol) {
      const double mid = 0.5 * (g.p_min + g.p_max);
      g.p_min = g.p_max = mid;
      g.kind = GenKind::Fixed;
    }
  }
  return out;
}

Network apply_min_resistance(const Network& net, double r_min) {
  if (r_min < 0.0) throw ValidationError("negative minimum resistance");
  Network out = net;
  for (Branch& br : out.branches) br.r = std::max(br.r, r_min);
  return out;
}

std::vector<int> flow_set_all(const Network& net) {
  std::vector<int> out;
  for (int i = 0; i < net.n_branches(); ++i) {
    if (net.branches[i].s_max.has_value()) out.push_back(i);
  }
  return out;
}

std::vector<int> flow_set_from_list(const Network& net, const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int id;
    while (ls >> id) {
      if (id < 1 || id > net.n_branches()) {
        throw ParseError("flow list line " + std::to_string(lineno) + ": branch id " +
                         std::to_string(id) + " out of range");
      }
      if (!net.branches[id - 1].s_max.has_value()) {
        throw ParseError("flow list line " + std::to_string(lineno) + ": branch " +
                         std::to_string(id) + " has no flow limit");
      }
      out.push_back(id - 1);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace opfsdr
