#include "opfsdr/netjson.hpp"

#include <json.hpp>

namespace opfsdr {

using nlohmann::json;

namespace {

double require_number(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) throw ParseError("missing \"" + path + "." + key + "\"");
  if (!obj[key].is_number()) throw ParseError("\"" + path + "." + key + "\" must be a number");
  return obj[key].get<double>();
}

double optional_number(const json& obj, const char* key, double fallback) {
  return obj.contains(key) ? obj[key].get<double>() : fallback;
}

GenKind kind_from_string(const std::string& s) {
  if (s == "fixed") return GenKind::Fixed;
  if (s == "linear") return GenKind::Linear;
  if (s == "quadratic") return GenKind::Quadratic;
  throw ParseError("unknown generator kind \"" + s + "\"");
}

const char* kind_to_string(GenKind k) {
  switch (k) {
    case GenKind::Fixed: return "fixed";
    case GenKind::Linear: return "linear";
    case GenKind::Quadratic: return "quadratic";
  }
  return "linear";
}

}  // namespace

Network parse_network_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != 1) {
    throw ParseError("missing or unsupported \"schema_version\" (expected 1)");
  }
  for (const char* key : {"buses", "generators", "branches"}) {
    if (!doc.contains(key)) throw ParseError(std::string("missing \"") + key + "\"");
    if (!doc[key].is_array()) throw ParseError(std::string("\"") + key + "\" must be an array");
  }

  Network net;
  net.base_mva = optional_number(doc, "base_mva", 100.0);

  int idx = 0;
  for (const json& jb : doc["buses"]) {
    const std::string path = "buses[" + std::to_string(idx++) + "]";
    Bus b;
    b.id = static_cast<int>(require_number(jb, "id", path));
    b.v_min = require_number(jb, "v_min", path);
    b.v_max = require_number(jb, "v_max", path);
    b.p_demand = optional_number(jb, "p_demand", 0.0);
    b.q_demand = optional_number(jb, "q_demand", 0.0);
    b.shunt_g = optional_number(jb, "shunt_g", 0.0);
    b.shunt_b = optional_number(jb, "shunt_b", 0.0);
    net.buses.push_back(b);
  }
  idx = 0;
  for (const json& jg : doc["generators"]) {
    const std::string path = "generators[" + std::to_string(idx++) + "]";
    Generator g;
    g.bus = net.internal_index(static_cast<int>(require_number(jg, "bus", path)));
    g.p_min = require_number(jg, "p_min", path);
    g.p_max = require_number(jg, "p_max", path);
    g.q_min = require_number(jg, "q_min", path);
    g.q_max = require_number(jg, "q_max", path);
    g.alpha = optional_number(jg, "alpha", 0.0);
    g.beta = optional_number(jg, "beta", 0.0);
    g.cost_const = optional_number(jg, "cost_const", 0.0);
    g.kind = jg.contains("kind") ? kind_from_string(jg["kind"].get<std::string>())
                                 : classify_cost(g.alpha);
    net.generators.push_back(g);
  }
  idx = 0;
  for (const json& jl : doc["branches"]) {
    const std::string path = "branches[" + std::to_string(idx++) + "]";
    Branch br;
    br.from = net.internal_index(static_cast<int>(require_number(jl, "from", path)));
    br.to = net.internal_index(static_cast<int>(require_number(jl, "to", path)));
    br.r = require_number(jl, "r", path);
    br.x = require_number(jl, "x", path);
    br.b_charging = optional_number(jl, "b_charging", 0.0);
    br.tap_ratio = optional_number(jl, "tap_ratio", 1.0);
    br.phase_shift = optional_number(jl, "phase_shift", 0.0);
    if (jl.contains("s_max") && !jl["s_max"].is_null()) br.s_max = jl["s_max"].get<double>();
    net.branches.push_back(br);
  }
  if (doc.contains("flow_limited")) {
    for (const json& f : doc["flow_limited"]) {
      net.flow_limited.push_back(f.get<int>());
    }
  } else {
    net.flow_limited = flow_set_all(net);
  }
  net.validate();
  return net;
}

std::string serialize_network_json(const Network& net, int indent) {
  json doc;
  doc["schema_version"] = 1;
  doc["base_mva"] = net.base_mva;
  doc["buses"] = json::array();
  for (const Bus& b : net.buses) {
    doc["buses"].push_back({{"id", b.id},
                            {"v_min", b.v_min},
                            {"v_max", b.v_max},
                            {"p_demand", b.p_demand},
                            {"q_demand", b.q_demand},
                            {"shunt_g", b.shunt_g},
                            {"shunt_b", b.shunt_b}});
  }
  doc["generators"] = json::array();
  for (const Generator& g : net.generators) {
    doc["generators"].push_back({{"bus", net.external_id(g.bus)},
                                 {"p_min", g.p_min},
                                 {"p_max", g.p_max},
                                 {"q_min", g.q_min},
                                 {"q_max", g.q_max},
                                 {"alpha", g.alpha},
                                 {"beta", g.beta},
                                 {"cost_const", g.cost_const},
                                 {"kind", kind_to_string(g.kind)}});
  }
  doc["branches"] = json::array();
  for (const Branch& br : net.branches) {
    json jl = {{"from", net.external_id(br.from)},
               {"to", net.external_id(br.to)},
               {"r", br.r},
               {"x", br.x},
               {"b_charging", br.b_charging},
               {"tap_ratio", br.tap_ratio},
               {"phase_shift", br.phase_shift}};
    if (br.s_max.has_value()) jl["s_max"] = *br.s_max;
    doc["branches"].push_back(jl);
  }
  doc["flow_limited"] = net.flow_limited;
  return doc.dump(indent) + "\n";
}

}  // namespace opfsdr
