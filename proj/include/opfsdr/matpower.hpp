#pragma once

#include <iosfwd>
#include <string>

#include "opfsdr/network.hpp"

namespace opfsdr {

// Parses the MATPOWER case subset documented in docs/matpower-format.md.
// All quantities are converted to per unit on the system base. Out-of-service
// generators and branches are dropped before validation.
Network parse_matpower_case(const std::string& text);
Network parse_matpower_case(std::istream& in);

}  // namespace opfsdr
