#include "opfsdr/conelp.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace opfsdr {

int ConeSpec::dim() const {
  int total = 0;
  for (const ConeSegment& s : segments) total += s.dim();
  return total;
}

int ConeSpec::cone_dim() const {
  int total = 0;
  for (const ConeSegment& s : segments) {
    if (s.kind != SegmentKind::Free) total += s.dim();
  }
  return total;
}

int ConeSpec::barrier_degree() const {
  int deg = 0;
  for (const ConeSegment& s : segments) {
    switch (s.kind) {
      case SegmentKind::Free: break;
      case SegmentKind::NonNeg: deg += s.size; break;
      case SegmentKind::Soc: deg += 1; break;
      case SegmentKind::HermitianPsd:
      case SegmentKind::SymPsd: deg += s.size; break;
    }
  }
  return deg;
}

bool ConeSpec::has_kind(SegmentKind kind) const {
  return std::any_of(segments.begin(), segments.end(),
                     [kind](const ConeSegment& s) { return s.kind == kind; });
}

void SparseRow::canonicalize() {
  std::sort(coeffs.begin(), coeffs.end());
  std::size_t out = 0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (out > 0 && coeffs[out - 1].first == coeffs[i].first) {
      coeffs[out - 1].second += coeffs[i].second;
    } else {
      coeffs[out++] = coeffs[i];
    }
  }
  coeffs.resize(out);
  std::erase_if(coeffs, [](const auto& e) { return e.second == 0.0; });
}

double SparseRow::dot(const Eigen::VectorXd& z) const {
  double acc = 0.0;
  for (const auto& [i, v] : coeffs) acc += v * z(i);
  return acc;
}

double SparseRow::max_abs() const {
  double m = 0.0;
  for (const auto& [i, v] : coeffs) m = std::max(m, std::abs(v));
  return m;
}

void ConeLP::add_row(const LinExpr& expr) {
  SparseRow row;
  for (const auto& [i, v] : expr.terms) row.add(i, v);
  row.canonicalize();
  rows.push_back(std::move(row));
  c.conservativeResize(rows.size());
  c(static_cast<Eigen::Index>(rows.size()) - 1) = expr.constant;
}

void ConeLP::add_row(const LinExpr& lhs, const LinExpr& rhs) {
  LinExpr diff = lhs;
  for (const auto& [i, v] : rhs.terms) diff.terms.emplace_back(i, -v);
  diff.constant -= rhs.constant;
  add_row(diff);
}

void ConeLP::canonicalize() {
  for (SparseRow& r : rows) r.canonicalize();
}

void ConeLP::check_consistent() const {
  if (cone.dim() != dim()) {
    throw DimensionMismatch("cone dimension " + std::to_string(cone.dim()) +
                            " does not match variable count " + std::to_string(dim()));
  }
  if (c.size() != num_rows()) throw DimensionMismatch("constant vector length mismatch");
  for (const SparseRow& r : rows) {
    for (const auto& [i, v] : r.coeffs) {
      if (i < 0 || i >= dim()) throw DimensionMismatch("row coefficient index out of range");
      if (!std::isfinite(v)) throw DimensionMismatch("row coefficient not finite");
    }
  }
  for (int i = 0; i < dim(); ++i) {
    if (!std::isfinite(h(i))) throw DimensionMismatch("objective coefficient not finite");
  }
}

PsdLayout::PsdLayout(int base, int order, SegmentKind kind)
    : base_(base), order_(order), kind_(kind) {}

int PsdLayout::row_offset(int i) const {
  if (kind_ == SegmentKind::HermitianPsd) {
    // Row i holds 1 + 2(order - 1 - i) coordinates.
    return i + (2 * order_ - 1 - i) * i;  // sum_{k<i} (1 + 2(order-1-k))
  }
  // SymPsd: row i holds (order - i) coordinates.
  return i * order_ - i * (i - 1) / 2;
}

int PsdLayout::diag(int i) const { return base_ + row_offset(i); }

int PsdLayout::re(int i, int j) const {
  return base_ + row_offset(i) + 1 + 2 * (j - i - 1);
}

int PsdLayout::im(int i, int j) const { return re(i, j) + 1; }

int PsdLayout::svec(int i, int j) const { return base_ + row_offset(i) + (j - i); }

Eigen::MatrixXcd PsdLayout::unpack_hermitian(const Eigen::VectorXd& z) const {
  Eigen::MatrixXcd x(order_, order_);
  for (int i = 0; i < order_; ++i) {
    x(i, i) = z(diag(i));
    for (int j = i + 1; j < order_; ++j) {
      const cplx v(z(re(i, j)), z(im(i, j)));
      x(i, j) = v;
      x(j, i) = std::conj(v);
    }
  }
  return x;
}

Eigen::MatrixXd PsdLayout::unpack_symmetric(const Eigen::VectorXd& z) const {
  Eigen::MatrixXd x(order_, order_);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < order_; ++i) {
    x(i, i) = z(svec(i, i));
    for (int j = i + 1; j < order_; ++j) {
      const double v = z(svec(i, j)) * inv_sqrt2;
      x(i, j) = v;
      x(j, i) = v;
    }
  }
  return x;
}

void PsdLayout::pack_hermitian(const Eigen::MatrixXcd& x, Eigen::VectorXd& z) const {
  for (int i = 0; i < order_; ++i) {
    z(diag(i)) = x(i, i).real();
    for (int j = i + 1; j < order_; ++j) {
      z(re(i, j)) = x(i, j).real();
      z(im(i, j)) = x(i, j).imag();
    }
  }
}

void PsdLayout::pack_symmetric(const Eigen::MatrixXd& x, Eigen::VectorXd& z) const {
  const double sqrt2 = std::sqrt(2.0);
  for (int i = 0; i < order_; ++i) {
    z(svec(i, i)) = x(i, i);
    for (int j = i + 1; j < order_; ++j) z(svec(i, j)) = sqrt2 * x(i, j);
  }
}

std::vector<int> segment_offsets(const ConeSpec& spec) {
  std::vector<int> off;
  off.reserve(spec.segments.size());
  int at = 0;
  for (const ConeSegment& s : spec.segments) {
    off.push_back(at);
    at += s.dim();
  }
  return off;
}

std::pair<ConeLP, ScalingRecord> scale_conelp(const ConeLP& lp) {
  ConeLP out = lp;
  ScalingRecord rec;
  rec.d.resize(lp.num_rows());
  for (int k = 0; k < lp.num_rows(); ++k) {
    double dk = std::max(std::abs(lp.c(k)), lp.rows[k].max_abs());
    if (dk == 0.0) dk = 1.0;  // all-zero row guard
    rec.d(k) = dk;
    for (auto& [i, v] : out.rows[k].coeffs) v /= dk;
    out.c(k) /= dk;
  }
  rec.h_norm = lp.h.norm();
  if (rec.h_norm == 0.0) rec.h_norm = 1.0;
  out.h /= rec.h_norm;
  out.objective_offset /= rec.h_norm;
  return {std::move(out), std::move(rec)};
}

std::string conelp_to_json(const ConeLP& lp, int indent) {
  nlohmann::json doc;
  doc["format"] = "conelp-debug";
  doc["version"] = 1;
  doc["dim"] = lp.dim();
  doc["num_rows"] = lp.num_rows();
  doc["objective_offset"] = lp.objective_offset;
  doc["segments"] = nlohmann::json::array();
  for (const ConeSegment& s : lp.cone.segments) {
    const char* kind = nullptr;
    switch (s.kind) {
      case SegmentKind::Free: kind = "free"; break;
      case SegmentKind::NonNeg: kind = "nonneg"; break;
      case SegmentKind::Soc: kind = "soc"; break;
      case SegmentKind::HermitianPsd: kind = "hermitian_psd"; break;
      case SegmentKind::SymPsd: kind = "sym_psd"; break;
    }
    doc["segments"].push_back({{"kind", kind}, {"size", s.size}});
  }
  doc["h"] = std::vector<double>(lp.h.data(), lp.h.data() + lp.h.size());
  doc["rows"] = nlohmann::json::array();
  for (int k = 0; k < lp.num_rows(); ++k) {
    nlohmann::json row;
    row["c"] = lp.c(k);
    row["coeffs"] = nlohmann::json::array();
    for (const auto& [i, v] : lp.rows[k].coeffs) {
      row["coeffs"].push_back({i, v});
    }
    doc["rows"].push_back(std::move(row));
  }
  return doc.dump(indent) + "\n";
}

}  // namespace opfsdr
