#pragma once

#include <optional>
#include <string>
#include <vector>

#include "opfsdr/errors.hpp"

namespace opfsdr {

struct Bus {
  int id = 0;  // external (1-based) id; position in Network::buses is the internal index
  double v_min = 0.9;
  double v_max = 1.1;
  double p_demand = 0.0;  // per unit
  double q_demand = 0.0;  // per unit
  double shunt_g = 0.0;   // per unit
  double shunt_b = 0.0;   // per unit
};

enum class GenKind { Fixed, Linear, Quadratic };

struct Generator {
  int bus = 0;  // internal bus index
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
  double alpha = 0.0;       // quadratic cost coefficient (per unit^2)
  double beta = 0.0;        // linear cost coefficient (per unit)
  double cost_const = 0.0;  // constant cost term, kept for objective offset reporting
  GenKind kind = GenKind::Linear;

  double p_fixed() const { return 0.5 * (p_min + p_max); }
  double q_fixed() const { return 0.5 * (q_min + q_max); }
};

struct Branch {
  int from = 0, to = 0;  // internal bus indices (directed)
  double r = 0.0, x = 0.0;
  double b_charging = 0.0;
  double tap_ratio = 1.0;
  double phase_shift = 0.0;  // radians
  std::optional<double> s_max;  // per unit; absent = unlimited
};

struct Network {
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  std::vector<int> flow_limited;  // branch indices forming the flow-constrained set
  double base_mva = 100.0;

  int n_buses() const { return static_cast<int>(buses.size()); }
  int n_generators() const { return static_cast<int>(generators.size()); }
  int n_branches() const { return static_cast<int>(branches.size()); }

  int internal_index(int external_id) const;  // throws ValidationError if unknown
  int external_id(int internal_index) const { return buses.at(internal_index).id; }

  std::vector<int> generators_at(int bus) const;

  bool connected() const;

  // Structural and numeric sanity checks; throws ValidationError.
  void validate() const;
};

// Classifies generator kind from the cost coefficients (does not touch Fixed).
GenKind classify_cost(double alpha);

// Pins generators whose active-power range is narrower than tol to the
// midpoint of the range and marks them Fixed. Idempotent.
Network fix_tight_generators(const Network& net, double tol = 1e-3);

// Raises every branch series resistance to at least r_min. Idempotent.
Network apply_min_resistance(const Network& net, double r_min = 1e-4);

// Flow set selection: all branches with a finite limit.
std::vector<int> flow_set_all(const Network& net);
// Flow set from a list file (one 1-based branch id per line, '#' comments).
std::vector<int> flow_set_from_list(const Network& net, const std::string& text);

}  // namespace opfsdr
