#pragma once

#include <string>

#include "opfsdr/network.hpp"

namespace opfsdr {

// Native JSON network format, "schema_version": 1. Round trip law:
// parse_network_json(serialize_network_json(net)) == net.
Network parse_network_json(const std::string& text);
std::string serialize_network_json(const Network& net, int indent = 2);

}  // namespace opfsdr
