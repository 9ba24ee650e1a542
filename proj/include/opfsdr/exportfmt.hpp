#pragma once

#include <string>

#include "opfsdr/conelp.hpp"

namespace opfsdr {

enum class ExportFormat { SdpaSparse, Cbf };

ExportFormat export_format_from_string(const std::string& name);

// Serializes a real-form cone LP to an interchange format.
//   sdpa-sparse: SDPA ".dat-s"; accepts NonNeg and SymPsd segments only
//                (UnsupportedSegment otherwise).
//   cbf:         Conic Benchmark Format v3; accepts Free, NonNeg, Soc, SymPsd.
// `comment` lines are embedded in the file header.
std::string export_conelp(const ConeLP& lp, ExportFormat format,
                          const std::string& comment = "");

}  // namespace opfsdr
