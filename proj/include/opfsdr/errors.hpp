#pragma once

#include <stdexcept>
#include <string>

namespace opfsdr {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define OPFSDR_DEFINE_ERROR(name)                                \
  class name : public Error {                                    \
   public:                                                       \
    explicit name(const std::string& what) : Error(what) {}      \
  }

// Input handling.
OPFSDR_DEFINE_ERROR(ParseError);
OPFSDR_DEFINE_ERROR(ValidationError);

// Network matrices.
OPFSDR_DEFINE_ERROR(SingularBranch);

// Formulation.
OPFSDR_DEFINE_ERROR(FormulationError);
OPFSDR_DEFINE_ERROR(MissingLimit);
OPFSDR_DEFINE_ERROR(DuplicateMinor);

// Chordal toolkit.
OPFSDR_DEFINE_ERROR(NotChordal);

// Conversion.
OPFSDR_DEFINE_ERROR(UncoveredEntry);
OPFSDR_DEFINE_ERROR(StrategyError);

// Solver.
OPFSDR_DEFINE_ERROR(DimensionMismatch);
OPFSDR_DEFINE_ERROR(UnsupportedSegment);

// Analysis.
OPFSDR_DEFINE_ERROR(EmptyBlocks);
OPFSDR_DEFINE_ERROR(NotRankOne);
OPFSDR_DEFINE_ERROR(InsufficientCoupling);
OPFSDR_DEFINE_ERROR(PhaseInconsistent);
OPFSDR_DEFINE_ERROR(NonpositiveBase);

#undef OPFSDR_DEFINE_ERROR

}  // namespace opfsdr
