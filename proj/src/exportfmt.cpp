#include "opfsdr/exportfmt.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace opfsdr {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Splits a multi-line comment into lines with the given prefix.
void emit_comment(std::ostringstream& out, const std::string& comment,
                  const std::string& prefix) {
  if (comment.empty()) return;
  std::istringstream in(comment);
  std::string line;
  while (std::getline(in, line)) out << prefix << line << "\n";
}

struct CoordInfo {
  enum Kind { Scalar, PsdEntry } kind = Scalar;
  int scalar_index = -1;  // position among scalar variables
  int block = -1;         // psd variable index
  int i = 0, j = 0;       // matrix entry, i >= j (lower triangle)
  double scale = 1.0;     // matrix coefficient = row coefficient * scale
};

// Coordinate classification shared by both writers.
std::vector<CoordInfo> classify(const ConeLP& lp) {
  std::vector<CoordInfo> info(lp.dim());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  int at = 0, scalar_at = 0, psd_at = 0;
  for (const ConeSegment& seg : lp.cone.segments) {
    if (seg.kind == SegmentKind::SymPsd) {
      const int p = seg.size;
      int local = at;
      for (int i = 0; i < p; ++i) {
        info[local].kind = CoordInfo::PsdEntry;
        info[local].block = psd_at;
        info[local].i = i;
        info[local].j = i;
        info[local].scale = 1.0;
        ++local;
        for (int j = i + 1; j < p; ++j) {
          info[local].kind = CoordInfo::PsdEntry;
          info[local].block = psd_at;
          info[local].i = j;  // lower triangle
          info[local].j = i;
          info[local].scale = inv_sqrt2;
          ++local;
        }
      }
      ++psd_at;
    } else {
      for (int i = 0; i < seg.dim(); ++i) {
        info[at + i].kind = CoordInfo::Scalar;
        info[at + i].scalar_index = scalar_at++;
      }
    }
    at += seg.dim();
  }
  return info;
}

std::string export_sdpa(const ConeLP& lp, const std::string& comment) {
  for (const ConeSegment& seg : lp.cone.segments) {
    if (seg.kind == SegmentKind::Soc || seg.kind == SegmentKind::Free) {
      throw UnsupportedSegment("sdpa-sparse supports nonnegative and PSD segments only");
    }
    if (seg.kind == SegmentKind::HermitianPsd) {
      throw UnsupportedSegment("sdpa-sparse requires real blocks; apply real_embedding");
    }
  }
  // Block table in segment order; LP blocks are negative sizes.
  struct Block {
    int sdpa_size;  // negative: diagonal block
    int base;       // z coordinate base
  };
  std::vector<Block> blocks;
  int at = 0;
  for (const ConeSegment& seg : lp.cone.segments) {
    blocks.push_back({seg.kind == SegmentKind::NonNeg ? -seg.size : seg.size, at});
    at += seg.dim();
  }

  std::ostringstream out;
  emit_comment(out, comment, "\"");
  out << lp.num_rows() << " = mDIM\n";
  out << blocks.size() << " = nBLOCK\n";
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out << blocks[b].sdpa_size << (b + 1 < blocks.size() ? " " : "");
  }
  out << " = bLOCKsTRUCT\n";
  for (int r = 0; r < lp.num_rows(); ++r) {
    out << fmt(-lp.c(r)) << (r + 1 < lp.num_rows() ? " " : "");
  }
  out << "\n";

  const std::vector<CoordInfo> info = classify(lp);
  // Entry writer: SDPA wants 1-based (block, i, j) with i <= j.
  auto emit_entries = [&](int matrix_index, const SparseRow& row, double sign) {
    for (const auto& [coord, value] : row.coeffs) {
      // Locate the block.
      int b = static_cast<int>(blocks.size()) - 1;
      while (blocks[b].base > coord) --b;
      const ConeSegment& seg = lp.cone.segments[b];
      int i, j;
      double v;
      if (seg.kind == SegmentKind::NonNeg) {
        i = j = coord - blocks[b].base + 1;
        v = value;
      } else {
        const CoordInfo& ci = info[coord];
        i = ci.j + 1;  // upper triangle: i <= j
        j = ci.i + 1;
        v = value * ci.scale;
      }
      if (v != 0.0) {
        out << matrix_index << " " << b + 1 << " " << i << " " << j << " "
            << fmt(sign * v) << "\n";
      }
    }
  };
  // F0 = -objective matrix (SDPA dual form maximizes tr(F0 Y)).
  SparseRow hrow;
  for (int i = 0; i < lp.dim(); ++i) hrow.add(i, lp.h(i));
  emit_entries(0, hrow, -1.0);
  for (int r = 0; r < lp.num_rows(); ++r) emit_entries(r + 1, lp.rows[r], 1.0);
  return out.str();
}

std::string export_cbf(const ConeLP& lp, const std::string& comment) {
  const std::vector<CoordInfo> info = classify(lp);
  std::vector<int> psd_orders;
  struct ScalarCone {
    const char* name;
    int dim;
  };
  std::vector<ScalarCone> scalar_cones;
  int n_scalar = 0;
  for (const ConeSegment& seg : lp.cone.segments) {
    switch (seg.kind) {
      case SegmentKind::Free:
        scalar_cones.push_back({"F", seg.size});
        n_scalar += seg.size;
        break;
      case SegmentKind::NonNeg:
        scalar_cones.push_back({"L+", seg.size});
        n_scalar += seg.size;
        break;
      case SegmentKind::Soc:
        scalar_cones.push_back({"Q", seg.size});
        n_scalar += seg.size;
        break;
      case SegmentKind::SymPsd:
        psd_orders.push_back(seg.size);
        break;
      case SegmentKind::HermitianPsd:
        throw UnsupportedSegment("cbf requires real blocks; apply real_embedding");
    }
  }

  std::ostringstream out;
  emit_comment(out, comment, "# ");
  out << "VER\n3\n\n";
  out << "OBJSENSE\nMIN\n\n";
  if (!psd_orders.empty()) {
    out << "PSDVAR\n" << psd_orders.size() << "\n";
    for (int p : psd_orders) out << p << "\n";
    out << "\n";
  }
  if (n_scalar > 0) {
    out << "VAR\n" << n_scalar << " " << scalar_cones.size() << "\n";
    for (const ScalarCone& c : scalar_cones) out << c.name << " " << c.dim << "\n";
    out << "\n";
  }
  out << "CON\n" << lp.num_rows() << " 1\nL= " << lp.num_rows() << "\n\n";

  // Objective coordinates.
  std::vector<std::string> objf, obja;
  for (int coord = 0; coord < lp.dim(); ++coord) {
    const double v = lp.h(coord);
    if (v == 0.0) continue;
    const CoordInfo& ci = info[coord];
    if (ci.kind == CoordInfo::Scalar) {
      obja.push_back(std::to_string(ci.scalar_index) + " " + fmt(v));
    } else {
      objf.push_back(std::to_string(ci.block) + " " + std::to_string(ci.i) + " " +
                     std::to_string(ci.j) + " " + fmt(v * ci.scale));
    }
  }
  if (!objf.empty()) {
    out << "OBJFCOORD\n" << objf.size() << "\n";
    for (const std::string& line : objf) out << line << "\n";
    out << "\n";
  }
  if (!obja.empty()) {
    out << "OBJACOORD\n" << obja.size() << "\n";
    for (const std::string& line : obja) out << line << "\n";
    out << "\n";
  }

  std::vector<std::string> fcoord, acoord, bcoord;
  for (int r = 0; r < lp.num_rows(); ++r) {
    for (const auto& [coord, value] : lp.rows[r].coeffs) {
      const CoordInfo& ci = info[coord];
      if (ci.kind == CoordInfo::Scalar) {
        acoord.push_back(std::to_string(r) + " " + std::to_string(ci.scalar_index) +
                         " " + fmt(value));
      } else {
        fcoord.push_back(std::to_string(r) + " " + std::to_string(ci.block) + " " +
                         std::to_string(ci.i) + " " + std::to_string(ci.j) + " " +
                         fmt(value * ci.scale));
      }
    }
    if (lp.c(r) != 0.0) bcoord.push_back(std::to_string(r) + " " + fmt(lp.c(r)));
  }
  if (!fcoord.empty()) {
    out << "FCOORD\n" << fcoord.size() << "\n";
    for (const std::string& line : fcoord) out << line << "\n";
    out << "\n";
  }
  if (!acoord.empty()) {
    out << "ACOORD\n" << acoord.size() << "\n";
    for (const std::string& line : acoord) out << line << "\n";
    out << "\n";
  }
  if (!bcoord.empty()) {
    out << "BCOORD\n" << bcoord.size() << "\n";
    for (const std::string& line : bcoord) out << line << "\n";
    out << "\n";
  }
  return out.str();
}

}  // namespace

ExportFormat export_format_from_string(const std::string& name) {
  if (name == "sdpa-sparse" || name == "sdpa") return ExportFormat::SdpaSparse;
  if (name == "cbf") return ExportFormat::Cbf;
  throw ValidationError("unknown export format \"" + name + "\"");
}

std::string export_conelp(const ConeLP& lp, ExportFormat format,
                          const std::string& comment) {
  lp.check_consistent();
  switch (format) {
    case ExportFormat::SdpaSparse: return export_sdpa(lp, comment);
    case ExportFormat::Cbf: return export_cbf(lp, comment);
  }
  throw ValidationError("unknown export format");
}

}  // namespace opfsdr
