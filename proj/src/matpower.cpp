#include "opfsdr/matpower.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <vector>

namespace opfsdr {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Strips '%' comments and '...' line continuations.
std::string strip_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto pct = line.find('%');
    if (pct != std::string::npos) line.erase(pct);
    auto cont = line.find("...");
    if (cont != std::string::npos) line.erase(cont);
    out += line;
    out += '\n';
  }
  return out;
}

// Reads the bracketed matrix following "mpc.<name> = [ ... ];". Rows are
// separated by ';' or newlines.
std::vector<std::vector<double>> read_matrix(const std::string& text,
                                             const std::string& name, bool required) {
  const std::string key = name + "=";
  std::string squashed;
  squashed.reserve(text.size());
  // A whitespace-free copy with an index map back into the original.
  std::vector<std::size_t> pos_map;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!std::isspace(static_cast<unsigned char>(text[i]))) {
      squashed += text[i];
      pos_map.push_back(i);
    }
  }
  auto at = squashed.find(key);
  if (at == std::string::npos) {
    if (required) throw ParseError("missing matrix '" + name + "'");
    return {};
  }
  std::size_t open = at + key.size();
  if (open >= squashed.size() || squashed[open] != '[') {
    throw ParseError("matrix '" + name + "': expected '['");
  }
  auto close = squashed.find(']', open);
  if (close == std::string::npos) throw ParseError("matrix '" + name + "': missing ']'");

  const std::string body =
      std::string(text, pos_map[open] + 1, pos_map[close] - pos_map[open] - 1);

  std::vector<std::vector<double>> rows;
  std::vector<double> current;
  std::istringstream in(body);
  std::string token;
  auto flush_row = [&]() {
    if (!current.empty()) {
      rows.push_back(current);
      current.clear();
    }
  };
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    // ';' ends a row wherever it appears.
    std::size_t start = 0;
    while (start <= line.size()) {
      auto semi = line.find(';', start);
      const std::string chunk = line.substr(start, semi == std::string::npos
                                                       ? std::string::npos
                                                       : semi - start);
      std::istringstream cs(chunk);
      while (cs >> token) {
        try {
          std::size_t used = 0;
          const double v = std::stod(token, &used);
          if (used != token.size()) throw std::invalid_argument(token);
          current.push_back(v);
        } catch (const std::exception&) {
          throw ParseError("matrix '" + name + "': bad number '" + token + "'");
        }
      }
      if (semi == std::string::npos) break;
      flush_row();
      start = semi + 1;
    }
    flush_row();
  }
  flush_row();
  return rows;
}

double read_scalar(const std::string& text, const std::string& name) {
  std::string squashed;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) squashed += ch;
  }
  const std::string key = name + "=";
  auto at = squashed.find(key);
  if (at == std::string::npos) throw ParseError("missing scalar '" + name + "'");
  auto end = squashed.find(';', at);
  const std::string val = squashed.substr(at + key.size(), end - at - key.size());
  try {
    return std::stod(val);
  } catch (const std::exception&) {
    throw ParseError("scalar '" + name + "': bad number '" + val + "'");
  }
}

}  // namespace

Network parse_matpower_case(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matpower_case(buf.str());
}

Network parse_matpower_case(const std::string& raw) {
  const std::string text = strip_comments(raw);

  Network net;
  net.base_mva = read_scalar(text, "mpc.baseMVA");
  if (!(net.base_mva > 0.0)) throw ParseError("baseMVA must be positive");
  const double base = net.base_mva;

  const auto bus_rows = read_matrix(text, "mpc.bus", true);
  const auto gen_rows = read_matrix(text, "mpc.gen", true);
  const auto branch_rows = read_matrix(text, "mpc.branch", true);
  const auto cost_rows = read_matrix(text, "mpc.gencost", false);

  if (bus_rows.empty()) throw ParseError("bus matrix is empty");

  std::map<int, int> id_to_internal;
  for (const auto& row : bus_rows) {
    if (row.size() < 13) throw ParseError("bus row too short");
    Bus b;
    b.id = static_cast<int>(row[0]);
    b.p_demand = row[2] / base;
    b.q_demand = row[3] / base;
    b.shunt_g = row[4] / base;
    b.shunt_b = row[5] / base;
    b.v_max = row[11];
    b.v_min = row[12];
    if (id_to_internal.count(b.id)) {
      throw ParseError("duplicate bus id " + std::to_string(b.id));
    }
    id_to_internal[b.id] = static_cast<int>(net.buses.size());
    net.buses.push_back(b);
  }

  auto lookup_bus = [&](double id_raw, const char* where) {
    const int id = static_cast<int>(id_raw);
    auto it = id_to_internal.find(id);
    if (it == id_to_internal.end()) {
      throw ParseError(std::string(where) + ": unknown bus id " + std::to_string(id));
    }
    return it->second;
  };

  if (!cost_rows.empty() && cost_rows.size() != gen_rows.size() &&
      cost_rows.size() != 2 * gen_rows.size()) {
    throw ParseError("gencost row count does not match gen matrix");
  }

  for (std::size_t i = 0; i < gen_rows.size(); ++i) {
    const auto& row = gen_rows[i];
    if (row.size() < 10) throw ParseError("gen row too short");
    const int status = static_cast<int>(row[7]);
    if (status <= 0) continue;  // out of service
    Generator g;
    g.bus = lookup_bus(row[0], "gen");
    g.q_max = row[3] / base;
    g.q_min = row[4] / base;
    g.p_max = row[8] / base;
    g.p_min = row[9] / base;
    if (!cost_rows.empty()) {
      const auto& cost = cost_rows[i];
      if (cost.size() < 4) throw ParseError("gencost row too short");
      const int model = static_cast<int>(cost[0]);
      if (model == 1) throw ParseError("piecewise-linear gencost is not supported");
      if (model != 2) throw ParseError("unknown gencost model " + std::to_string(model));
      const int ncost = static_cast<int>(cost[3]);
      if (ncost > 3) throw ParseError("polynomial gencost degree > 2 is not supported");
      if (static_cast<int>(cost.size()) < 4 + ncost) throw ParseError("gencost row too short");
      // Coefficients are listed highest degree first, in MW; convert to per unit.
      double c2 = 0.0, c1 = 0.0, c0 = 0.0;
      if (ncost == 3) {
        c2 = cost[4];
        c1 = cost[5];
        c0 = cost[6];
      } else if (ncost == 2) {
        c1 = cost[4];
        c0 = cost[5];
      } else if (ncost == 1) {
        c0 = cost[4];
      }
      if (c2 < 0.0) throw ParseError("negative quadratic gencost coefficient");
      g.alpha = c2 * base * base;
      g.beta = c1 * base;
      g.cost_const = c0;
    }
    g.kind = classify_cost(g.alpha);
    net.generators.push_back(g);
  }

  for (const auto& row : branch_rows) {
    if (row.size() < 11) throw ParseError("branch row too short");
    const int status = static_cast<int>(row[10]);
    if (status == 0) continue;  // out of service
    Branch br;
    br.from = lookup_bus(row[0], "branch");
    br.to = lookup_bus(row[1], "branch");
    if (br.from == br.to) {
      throw ParseError("self-loop branch at bus " + std::to_string(static_cast<int>(row[0])));
    }
    br.r = row[2];
    br.x = row[3];
    br.b_charging = row[4];
    if (row[5] > 0.0) br.s_max = row[5] / base;  // RATE_A = 0 means unlimited
    br.tap_ratio = row[8] == 0.0 ? 1.0 : row[8];
    br.phase_shift = row[9] * kPi / 180.0;
    net.branches.push_back(br);
  }

  net.flow_limited = flow_set_all(net);
  net.validate();
  return net;
}

}  // namespace opfsdr
