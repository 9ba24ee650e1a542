#include "opfsdr/conversion.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace opfsdr {

std::string ConsistencyStrategy::name() const {
  switch (kind) {
    case StrategyKind::Full: return "full";
    case StrategyKind::Band: return "band" + std::to_string(rho);
    case StrategyKind::Arrow: return "arrow" + std::to_string(rho);
    case StrategyKind::Sparse: return "sparse";
    case StrategyKind::Diagonal: return "diagonal";
  }
  return "?";
}

namespace {

// Keep entry (a, b), a <= b, of a separator of size e under the strategy.
bool keep_entry(const ConsistencyStrategy& st, int a, int b, int e, int ga, int gb,
                const SparsityPattern* net) {
  switch (st.kind) {
    case StrategyKind::Full:
      return true;
    case StrategyKind::Diagonal:
      return a == b;
    case StrategyKind::Band: {
      const int rho_j = std::min(st.rho, e - 1);
      return b - a <= rho_j;
    }
    case StrategyKind::Arrow: {
      const int rho_j = std::min(st.rho, e - 1);
      return a == b || a < rho_j;
    }
    case StrategyKind::Sparse:
      return a == b || net->has_edge(ga, gb);
  }
  return false;
}

}  // namespace

std::vector<ConsistencyConstraint> consistency_constraints(
    const CliqueTree& tree, const ConsistencyStrategy& strategy,
    const SparsityPattern* network_edges) {
  if (strategy.kind == StrategyKind::Sparse && network_edges == nullptr) {
    throw StrategyError("sparse consistency requires the network edge pattern");
  }
  if ((strategy.kind == StrategyKind::Band || strategy.kind == StrategyKind::Arrow) &&
      strategy.rho < 0) {
    throw StrategyError("rho must be nonnegative");
  }
  std::vector<ConsistencyConstraint> out;
  for (int j = 0; j < tree.size(); ++j) {
    if (tree.parent[j] < 0) continue;
    const std::vector<int>& eta = tree.separators[j];  // sorted by global index
    const int e = static_cast<int>(eta.size());
    for (int a = 0; a < e; ++a) {
      for (int b = a; b < e; ++b) {
        if (!keep_entry(strategy, a, b, e, eta[a], eta[b], network_edges)) continue;
        ConsistencyConstraint cc;
        cc.child = j;
        cc.parent = tree.parent[j];
        cc.a = a;
        cc.b = b;
        cc.ga = eta[a];
        cc.gb = eta[b];
        cc.imag = false;
        out.push_back(cc);
        if (a != b) {
          cc.imag = true;
          out.push_back(cc);
        }
      }
    }
  }
  return out;
}

long consistency_count_closed_form(const CliqueTree& tree,
                                   const ConsistencyStrategy& strategy,
                                   const SparsityPattern* network_edges) {
  if (strategy.kind == StrategyKind::Sparse && network_edges == nullptr) {
    throw StrategyError("sparse consistency requires the network edge pattern");
  }
  long s = 0;
  for (int j = 0; j < tree.size(); ++j) {
    if (tree.parent[j] < 0) continue;
    const std::vector<int>& eta = tree.separators[j];
    const long e = static_cast<long>(eta.size());
    switch (strategy.kind) {
      case StrategyKind::Full:
        s += e * e;
        break;
      case StrategyKind::Diagonal:
        s += e;
        break;
      case StrategyKind::Band:
      case StrategyKind::Arrow: {
        const long rho_j = std::min<long>(strategy.rho, e - 1);
        s += e;
        for (long l = 1; l <= rho_j; ++l) s += 2 * (e - l);
        break;
      }
      case StrategyKind::Sparse: {
        long lj = 0;  // separator pairs joined by at least one line
        for (std::size_t a = 0; a < eta.size(); ++a) {
          for (std::size_t b = a + 1; b < eta.size(); ++b) {
            if (network_edges->has_edge(eta[a], eta[b])) ++lj;
          }
        }
        s += e + 2 * lj;
        break;
      }
    }
  }
  return s;
}

long naive_real_consistency_count(const CliqueTree& tree) {
  long s = 0;
  for (int j = 0; j < tree.size(); ++j) {
    if (tree.parent[j] < 0) continue;
    const long e = static_cast<long>(tree.separators[j].size());
    s += 2 * e * (2 * e + 1) / 2;
  }
  return s;
}

EntryAssignment::EntryAssignment(int order, const CliqueTree& tree) : order_(order) {
  membership_.resize(order);
  std::vector<int> post_pos(tree.size());
  for (int p = 0; p < tree.size(); ++p) post_pos[tree.postorder[p]] = p;
  for (int k = 0; k < tree.size(); ++k) {
    for (int v : tree.cliques[k]) {
      if (v < 0 || v >= order) throw DimensionMismatch("clique vertex out of range");
      membership_[v].emplace_back(post_pos[k], k);
    }
  }
  for (auto& list : membership_) std::sort(list.begin(), list.end());
}

std::optional<int> EntryAssignment::try_owner(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (j >= order_ || i < 0) throw DimensionMismatch("entry index out of range");
  // Lists are sorted by postorder position; scan the shorter one.
  const auto& li = membership_[i];
  const auto& lj = membership_[j];
  int best_post = -1, best_clique = -1;
  for (const auto& [post, clique] : li) {
    for (const auto& [post2, clique2] : lj) {
      if (clique2 == clique) {
        if (best_post < 0 || post < best_post) {
          best_post = post;
          best_clique = clique;
        }
        break;
      }
    }
  }
  if (best_clique < 0) return std::nullopt;
  return best_clique;
}

int EntryAssignment::owner(int i, int j) const {
  auto o = try_owner(i, j);
  if (!o.has_value()) {
    throw UncoveredEntry("entry (" + std::to_string(i) + "," + std::to_string(j) +
                         ") is not covered by any clique");
  }
  return *o;
}

namespace {

struct PsdCoordInfo {
  int i, j;      // entry, i <= j
  bool imag;
};

// Decodes a raw-entry Hermitian coordinate offset.
PsdCoordInfo decode_hermitian(int offset, int order) {
  int i = 0;
  int remaining = offset;
  while (true) {
    const int row_len = 1 + 2 * (order - 1 - i);
    if (remaining < row_len) break;
    remaining -= row_len;
    ++i;
  }
  if (remaining == 0) return {i, i, false};
  const int j = i + 1 + (remaining - 1) / 2;
  return {i, j, (remaining - 1) % 2 == 1};
}

}  // namespace

ConvertedProblem convert(const ConeLP& lp, const CliqueTree& tree,
                         const ConsistencyStrategy& strategy,
                         const SparsityPattern* network_edges) {
  lp.check_consistent();
  int psd_count = 0;
  for (const ConeSegment& s : lp.cone.segments) {
    if (s.kind == SegmentKind::HermitianPsd) ++psd_count;
    if (s.kind == SegmentKind::SymPsd) {
      throw StrategyError("convert expects a complex-form problem");
    }
  }
  if (psd_count != 1 || lp.cone.segments.back().kind != SegmentKind::HermitianPsd) {
    throw StrategyError("convert expects exactly one trailing Hermitian PSD segment");
  }
  const int n = lp.cone.segments.back().size;
  if (tree.vertex_count() != n) {
    throw DimensionMismatch("clique tree does not cover the PSD block");
  }

  ConvertedProblem out;
  out.tree = tree;
  out.strategy = strategy;
  out.assignment = EntryAssignment(n, tree);
  out.original_rows = lp.num_rows();
  out.original_order = n;

  const int prefix_dim = lp.dim() - n * n;
  const int m = tree.size();

  ConeLP& conv = out.problem;
  conv.cone.segments.assign(lp.cone.segments.begin(), lp.cone.segments.end() - 1);
  out.block_begin.resize(m);
  int at = prefix_dim;
  for (int k = 0; k < m; ++k) {
    const int p = static_cast<int>(tree.cliques[k].size());
    conv.cone.segments.push_back({SegmentKind::HermitianPsd, p});
    out.block_begin[k] = at;
    at += p * p;
  }
  conv.h = Eigen::VectorXd::Zero(at);
  conv.h.head(prefix_dim) = lp.h.head(prefix_dim);
  conv.objective_offset = lp.objective_offset;

  // Local position of each vertex within each clique.
  std::vector<std::vector<int>> local(m);
  for (int k = 0; k < m; ++k) {
    local[k].assign(n, -1);
    for (std::size_t p = 0; p < tree.cliques[k].size(); ++p) {
      local[k][tree.cliques[k][p]] = static_cast<int>(p);
    }
  }

  auto remap_coord = [&](int coord) -> int {
    if (coord < prefix_dim) return coord;
    const PsdCoordInfo info = decode_hermitian(coord - prefix_dim, n);
    const int owner = out.assignment.owner(info.i, info.j);
    const PsdLayout layout = out.block_layout(owner);
    const int li = local[owner][info.i];
    const int lj = local[owner][info.j];
    if (info.i == info.j) return layout.diag(li);
    return info.imag ? layout.im(li, lj) : layout.re(li, lj);
  };

  for (int coord = prefix_dim; coord < lp.dim(); ++coord) {
    if (lp.h(coord) != 0.0) conv.h(remap_coord(coord)) += lp.h(coord);
  }

  conv.rows.reserve(lp.num_rows());
  conv.c.resize(lp.num_rows());
  for (int r = 0; r < lp.num_rows(); ++r) {
    SparseRow row;
    for (const auto& [coord, value] : lp.rows[r].coeffs) {
      row.add(remap_coord(coord), value);
    }
    row.canonicalize();
    conv.rows.push_back(std::move(row));
    conv.c(r) = lp.c(r);
    out.row_tags.push_back({RowTag::Original, r, {}});
  }

  const auto coupling = consistency_constraints(tree, strategy, network_edges);
  for (const ConsistencyConstraint& cc : coupling) {
    const PsdLayout child = out.block_layout(cc.child);
    const PsdLayout par = out.block_layout(cc.parent);
    const int cia = local[cc.child][cc.ga], cib = local[cc.child][cc.gb];
    const int pia = local[cc.parent][cc.ga], pib = local[cc.parent][cc.gb];
    SparseRow row;
    if (cc.a == cc.b) {
      row.add(child.diag(cia), 1.0);
      row.add(par.diag(pia), -1.0);
    } else if (!cc.imag) {
      row.add(child.re(cia, cib), 1.0);
      row.add(par.re(pia, pib), -1.0);
    } else {
      row.add(child.im(cia, cib), 1.0);
      row.add(par.im(pia, pib), -1.0);
    }
    row.canonicalize();
    conv.rows.push_back(std::move(row));
    conv.c.conservativeResize(conv.rows.size());
    conv.c(static_cast<Eigen::Index>(conv.rows.size()) - 1) = 0.0;
    out.row_tags.push_back({RowTag::Consistency, -1, cc});
  }
  conv.check_consistent();
  return out;
}

CountReport ConvertedProblem::count_report() const {
  CountReport rep;
  rep.original_rows = original_rows;
  rep.consistency_rows = problem.num_rows() - original_rows;
  rep.ratio = original_rows == 0
                  ? 0.0
                  : static_cast<double>(problem.num_rows()) / original_rows;
  for (const auto& c : tree.cliques) {
    const int p = static_cast<int>(c.size());
    rep.block_orders.push_back(p);
    rep.sum_block_squares += static_cast<long>(p) * p;
  }
  return rep;
}

std::string ConvertedProblem::to_json(int indent) const {
  nlohmann::json doc;
  doc["format"] = "converted-debug";
  doc["strategy"] = strategy.name();
  doc["original_rows"] = original_rows;
  doc["consistency_rows"] = problem.num_rows() - original_rows;
  doc["block_orders"] = nlohmann::json::array();
  for (const auto& c : tree.cliques) doc["block_orders"].push_back(c.size());
  doc["cliques"] = tree.cliques;
  doc["parents"] = tree.parent;
  doc["row_tags"] = nlohmann::json::array();
  for (const RowTag& tag : row_tags) {
    if (tag.kind == RowTag::Original) {
      doc["row_tags"].push_back({{"kind", "original"}, {"row", tag.original_row}});
    } else {
      const ConsistencyConstraint& cc = tag.consistency;
      doc["row_tags"].push_back({{"kind", "consistency"},
                                 {"child", cc.child},
                                 {"parent", cc.parent},
                                 {"entry", {cc.ga, cc.gb}},
                                 {"part", cc.imag ? "imag" : "real"}});
    }
  }
  return doc.dump(indent) + "\n";
}

ConeLP real_embedding(const ConeLP& lp) {
  lp.check_consistent();
  ConeLP out;
  out.objective_offset = lp.objective_offset;

  // Coordinate translation tables. Non-PSD coordinates map one-to-one.
  struct BlockInfo {
    int src_base, dst_base, order;
  };
  std::vector<BlockInfo> blocks;
  int src_at = 0, dst_at = 0;
  for (const ConeSegment& s : lp.cone.segments) {
    if (s.kind == SegmentKind::HermitianPsd) {
      out.cone.segments.push_back({SegmentKind::SymPsd, 2 * s.size});
      blocks.push_back({src_at, dst_at, s.size});
    } else {
      out.cone.segments.push_back(s);
    }
    src_at += s.dim();
    dst_at += out.cone.segments.back().dim();
  }
  const int dst_dim = dst_at;

  // src coordinate -> list of (dst coordinate, scale)
  const double q = std::sqrt(2.0) / 4.0;
  auto translate = [&](int coord) -> std::vector<std::pair<int, double>> {
    // Identify the containing segment.
    int sa = 0, da = 0;
    for (const ConeSegment& s : lp.cone.segments) {
      const int sdim = s.dim();
      if (coord < sa + sdim) {
        if (s.kind != SegmentKind::HermitianPsd) return {{coord - sa + da, 1.0}};
        const int p = s.size;
        const PsdCoordInfo info = decode_hermitian(coord - sa, p);
        const PsdLayout z(da, 2 * p, SegmentKind::SymPsd);
        if (info.i == info.j) {
          return {{z.svec(info.i, info.i), 0.5}, {z.svec(info.i + p, info.i + p), 0.5}};
        }
        if (!info.imag) {
          return {{z.svec(info.i, info.j), q}, {z.svec(info.i + p, info.j + p), q}};
        }
        return {{z.svec(info.i, info.j + p), -q}, {z.svec(info.j, info.i + p), q}};
      }
      sa += sdim;
      da += (s.kind == SegmentKind::HermitianPsd)
                ? ConeSegment{SegmentKind::SymPsd, 2 * s.size}.dim()
                : sdim;
    }
    throw DimensionMismatch("coordinate out of range");
  };

  out.h = Eigen::VectorXd::Zero(dst_dim);
  for (int coord = 0; coord < lp.dim(); ++coord) {
    if (lp.h(coord) == 0.0) continue;
    for (const auto& [dst, scale] : translate(coord)) out.h(dst) += scale * lp.h(coord);
  }
  out.c = lp.c;
  out.rows.reserve(lp.num_rows());
  for (const SparseRow& src : lp.rows) {
    SparseRow row;
    for (const auto& [coord, value] : src.coeffs) {
      for (const auto& [dst, scale] : translate(coord)) row.add(dst, scale * value);
    }
    row.canonicalize();
    out.rows.push_back(std::move(row));
  }
  out.check_consistent();
  return out;
}

Eigen::VectorXd embed_point(const ConeLP& lp, const Eigen::VectorXd& z) {
  if (z.size() != lp.dim()) throw DimensionMismatch("point length mismatch");
  int dst_dim = 0;
  for (const ConeSegment& s : lp.cone.segments) {
    dst_dim += (s.kind == SegmentKind::HermitianPsd) ? s.size * (2 * s.size + 1)
                                                     : s.dim();
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dst_dim);
  int src_at = 0, dst_at = 0;
  for (const ConeSegment& s : lp.cone.segments) {
    if (s.kind == SegmentKind::HermitianPsd) {
      const int p = s.size;
      const PsdLayout x(src_at, p, SegmentKind::HermitianPsd);
      const Eigen::MatrixXcd xm = x.unpack_hermitian(z);
      Eigen::MatrixXd zm(2 * p, 2 * p);
      zm.topLeftCorner(p, p) = xm.real();
      zm.bottomRightCorner(p, p) = xm.real();
      zm.topRightCorner(p, p) = -xm.imag();
      zm.bottomLeftCorner(p, p) = xm.imag();
      const PsdLayout zl(dst_at, 2 * p, SegmentKind::SymPsd);
      zl.pack_symmetric(zm, out);
      src_at += p * p;
      dst_at += p * (2 * p + 1);
    } else {
      out.segment(dst_at, s.dim()) = z.segment(src_at, s.dim());
      src_at += s.dim();
      dst_at += s.dim();
    }
  }
  return out;
}

std::vector<Eigen::MatrixXcd> extract_hermitian_blocks(const ConeLP& original,
                                                       const Eigen::VectorXd& embedded_z) {
  std::vector<Eigen::MatrixXcd> out;
  int dst_at = 0;
  for (const ConeSegment& s : original.cone.segments) {
    if (s.kind == SegmentKind::HermitianPsd) {
      const int p = s.size;
      const PsdLayout zl(dst_at, 2 * p, SegmentKind::SymPsd);
      const Eigen::MatrixXd zm = zl.unpack_symmetric(embedded_z);
      Eigen::MatrixXcd x(p, p);
      const Eigen::MatrixXd re =
          0.5 * (zm.topLeftCorner(p, p) + zm.bottomRightCorner(p, p));
      const Eigen::MatrixXd im =
          0.5 * (zm.bottomLeftCorner(p, p) - zm.topRightCorner(p, p));
      x.real() = 0.5 * (re + re.transpose());
      x.imag() = 0.5 * (im - im.transpose());
      out.push_back(x);
      dst_at += (2 * p) * (2 * p + 1) / 2;
    } else {
      dst_at += s.dim();
    }
  }
  return out;
}

}  // namespace opfsdr
