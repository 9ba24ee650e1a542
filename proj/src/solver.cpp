#include "opfsdr/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace opfsdr {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd svec_to_mat(const Eigen::Ref<const Eigen::VectorXd>& v, int p) {
  Eigen::MatrixXd m(p, p);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  int at = 0;
  for (int i = 0; i < p; ++i) {
    m(i, i) = v(at++);
    for (int j = i + 1; j < p; ++j) {
      const double x = v(at++) * inv_sqrt2;
      m(i, j) = x;
      m(j, i) = x;
    }
  }
  return m;
}

void mat_to_svec(const Eigen::MatrixXd& m, Eigen::Ref<Eigen::VectorXd> v) {
  const int p = static_cast<int>(m.rows());
  const double sqrt2 = std::sqrt(2.0);
  int at = 0;
  for (int i = 0; i < p; ++i) {
    v(at++) = m(i, i);
    for (int j = i + 1; j < p; ++j) v(at++) = sqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
}

struct SocBlock {
  int base = 0;  // cone-coordinate base
  int dim = 0;
  // NT scaling state
  double eta = 1.0;
  Eigen::VectorXd wbar;    // normalized scaling point, wbar' J wbar = 1
  Eigen::VectorXd lambda;  // scaled point
};

struct PsdBlock {
  int base = 0;   // cone-coordinate base (svec)
  int order = 0;
  // NT scaling state
  Eigen::MatrixXd r, rinv;  // W_nt = r r'
  Eigen::MatrixXd wnt;
  Eigen::VectorXd sigma;    // scaled point eigenvalues (lambda)
};

struct NonNegBlock {
  int base = 0;
  int count = 0;
  Eigen::VectorXd w;       // elementwise scaling
  Eigen::VectorXd lambda;  // sqrt(x s)
};

// Row data split by segment kind, in cone/free coordinates.
struct RowSplit {
  std::vector<std::pair<int, double>> cone;    // all cone coords (position, value)
  std::vector<std::pair<int, double>> free;    // free coords (position, value)
  std::vector<std::pair<int, double>> nonneg;  // nonneg coords (position, value)
  struct SocPart {
    int block = 0;
    std::vector<std::pair<int, double>> local;  // (local index, value)
  };
  std::vector<SocPart> soc;
  struct PsdPart {
    int block = 0;
    std::vector<std::tuple<int, int, double>> matrix;  // (i, j, A_ij) with i <= j
    std::vector<int> touched;                          // distinct local rows
  };
  std::vector<PsdPart> psd;
};

struct Workspace {
  int cone_dim = 0;
  int n_free = 0;
  int n_rows = 0;
  std::vector<int> coord_map;  // z coord -> cone position (>=0) or -1-free_position
  std::vector<NonNegBlock> nonneg;
  std::vector<SocBlock> socs;
  std::vector<PsdBlock> psds;
  std::vector<RowSplit> rows;
  Eigen::VectorXd nn_w_flat;  // nonneg scaling, indexed by cone position
  Eigen::VectorXd cc, cf;  // objective split
  Eigen::VectorXd b;
  Eigen::MatrixXd af;      // dense free-column block of A (n_rows x n_free)
  double bnorm = 1.0, cnorm = 1.0;
  int barrier_degree = 0;
};

double dot_sparse(const std::vector<std::pair<int, double>>& sp, const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (const auto& [i, val] : sp) acc += val * v(i);
  return acc;
}

void scatter_add(const std::vector<std::pair<int, double>>& sp, double scale,
                 Eigen::VectorXd& v) {
  for (const auto& [i, val] : sp) v(i) += scale * val;
}

class Ipm {
 public:
  Ipm(const ConeLP& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) { setup(); }

  Solution run();

 private:
  void setup();
  void init_point();
  bool update_scalings();
  bool build_normal_matrix();
  // Applies the NT operator H = W^2 to a dense cone vector.
  void apply_h(const Eigen::VectorXd& in, Eigen::VectorXd& out) const;
  // v = H a_row for one sparse row, writing only touched spans; returns spans.
  void apply_h_row(const RowSplit& row, Eigen::VectorXd& work,
                   std::vector<std::pair<int, int>>& spans) const;
  void clear_spans(Eigen::VectorXd& work,
                   const std::vector<std::pair<int, int>>& spans) const;

  // Saddle solve: [M af; af' 0][dy; dxf] = [r1; r2].
  bool saddle_factorize();
  void saddle_solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                    Eigen::VectorXd& dy, Eigen::VectorXd& dxf) const;

  // Jordan-algebra helpers on scaled vectors.
  void lambda_div(const Eigen::VectorXd& d, Eigen::VectorXd& out) const;  // L_lambda^{-1} d
  void scaled_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      Eigen::VectorXd& out) const;  // u o v in scaled space
  Eigen::VectorXd lambda_sq() const;                // lambda o lambda
  Eigen::VectorXd identity_vec() const;

  // Scaled directions: dx_scaled = Wx(dx), ds_scaled = Ws(ds).
  void scale_x_dir(const Eigen::VectorXd& dx, Eigen::VectorXd& out) const;
  void scale_s_dir(const Eigen::VectorXd& ds, Eigen::VectorXd& out) const;
  // ds = Ws^{-1}(d) for d in scaled space.
  void unscale_to_s(const Eigen::VectorXd& d, Eigen::VectorXd& out) const;

  // Max step to the cone boundary from the current (x, s) along scaled dirs.
  double max_step(const Eigen::VectorXd& dx_scaled, const Eigen::VectorXd& ds_scaled) const;

  struct Direction {
    Eigen::VectorXd dx, dy, ds, dxf;
    double dtau = 0.0, dkappa = 0.0;
  };
  // Targets are the right-hand sides of the Newton system; d_t lives in the
  // scaled space (already L_lambda-divided).
  struct Targets {
    Eigen::VectorXd rp, rdc, rdf;
    double rg = 0.0;
    Eigen::VectorXd d;
    double dtk = 0.0;
  };
  bool newton_core(const Targets& t, Direction& dir);
  bool newton_solve(double eta, const Eigen::VectorXd& dcomp, double dtk, Direction& dir);

  void compute_residuals();
  Solution finish(SolveStatus status, int iters, double elapsed);

  const ConeLP& lp_;
  SolverOptions opt_;
  Workspace w_;
  static constexpr int kInactiveFree = std::numeric_limits<int>::min();
  int unbounded_free_ = -1;  // untouched free coord with nonzero objective

  // iterate
  Eigen::VectorXd x_, s_, xf_, y_;
  double tau_ = 1.0, kappa_ = 1.0;

  // best iterate seen so far (by worst relative residual)
  struct Snapshot {
    Eigen::VectorXd x, s, xf, y;
    double tau = 1.0, kappa = 1.0;
    double score = kInf;
  } best_;

  // residual state
  Eigen::VectorXd res_p_, res_dc_, res_df_;
  double res_g_ = 0.0;
  double rel_p_ = kInf, rel_d_ = kInf, rel_gap_ = kInf;
  double pobj_ = 0.0, dobj_ = 0.0;

  // normal matrix state
  Eigen::MatrixXd m_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd minv_af_;
  Eigen::LLT<Eigen::MatrixXd> sf_llt_;

  // per-iteration cached tau-column
  Eigen::VectorXd wsq_cc_, vecc_, g1_, gf1_;
  double cc_wsq_cc_ = 0.0;

  std::string log_;
};

void Ipm::setup() {
  lp_.check_consistent();
  w_.n_rows = lp_.num_rows();
  const int dim = lp_.dim();
  w_.coord_map.assign(dim, 0);

  // Free coordinates that no row references are pinned to zero (they would
  // make the free-block Schur complement singular); an untouched coordinate
  // with a nonzero objective coefficient certifies dual infeasibility.
  std::vector<char> is_free_seg(dim, 0), touched(dim, 0);
  {
    int at = 0;
    for (const ConeSegment& seg : lp_.cone.segments) {
      if (seg.kind == SegmentKind::Free) {
        for (int i = 0; i < seg.size; ++i) is_free_seg[at + i] = 1;
      }
      at += seg.dim();
    }
    for (const SparseRow& row : lp_.rows) {
      for (const auto& [coord, value] : row.coeffs) touched[coord] = 1;
    }
  }

  int cone_at = 0, free_at = 0;
  int z_at = 0;
  for (const ConeSegment& seg : lp_.cone.segments) {
    switch (seg.kind) {
      case SegmentKind::Free:
        for (int i = 0; i < seg.size; ++i) {
          if (touched[z_at + i]) {
            w_.coord_map[z_at + i] = -1 - free_at;
            ++free_at;
          } else {
            w_.coord_map[z_at + i] = kInactiveFree;
            if (lp_.h(z_at + i) != 0.0) {
              unbounded_free_ = z_at + i;
            }
          }
        }
        break;
      case SegmentKind::NonNeg: {
        NonNegBlock blk;
        blk.base = cone_at;
        blk.count = seg.size;
        w_.nonneg.push_back(blk);
        for (int i = 0; i < seg.size; ++i) w_.coord_map[z_at + i] = cone_at + i;
        cone_at += seg.size;
        break;
      }
      case SegmentKind::Soc: {
        if (seg.size < 2) throw DimensionMismatch("SOC dimension must be >= 2");
        SocBlock blk;
        blk.base = cone_at;
        blk.dim = seg.size;
        w_.socs.push_back(blk);
        for (int i = 0; i < seg.size; ++i) w_.coord_map[z_at + i] = cone_at + i;
        cone_at += seg.size;
        break;
      }
      case SegmentKind::SymPsd: {
        PsdBlock blk;
        blk.base = cone_at;
        blk.order = seg.size;
        w_.psds.push_back(blk);
        for (int i = 0; i < seg.dim(); ++i) w_.coord_map[z_at + i] = cone_at + i;
        cone_at += seg.dim();
        break;
      }
      case SegmentKind::HermitianPsd:
        throw DimensionMismatch(
            "solver requires real symmetric PSD blocks; apply real_embedding first");
    }
    z_at += seg.dim();
  }
  w_.cone_dim = cone_at;
  w_.n_free = free_at;
  if (w_.cone_dim == 0) throw DimensionMismatch("problem has no conic variables");
  w_.barrier_degree = lp_.cone.barrier_degree();

  // Objective and constraint data in split coordinates.
  w_.cc = Eigen::VectorXd::Zero(w_.cone_dim);
  w_.cf = Eigen::VectorXd::Zero(w_.n_free);
  for (int i = 0; i < dim; ++i) {
    const int m = w_.coord_map[i];
    if (m == kInactiveFree) continue;
    if (m >= 0) {
      w_.cc(m) = lp_.h(i);
    } else {
      w_.cf(-1 - m) = lp_.h(i);
    }
  }
  w_.b = -lp_.c;
  w_.af = Eigen::MatrixXd::Zero(w_.n_rows, w_.n_free);

  // Per-coordinate lookup: which block kind owns each cone position.
  enum class Owner : char { NonNeg, Soc, Psd };
  std::vector<Owner> owner(w_.cone_dim, Owner::NonNeg);
  std::vector<int> block_of(w_.cone_dim, -1), local_of(w_.cone_dim, 0);
  for (std::size_t k = 0; k < w_.nonneg.size(); ++k) {
    for (int i = 0; i < w_.nonneg[k].count; ++i) {
      owner[w_.nonneg[k].base + i] = Owner::NonNeg;
      block_of[w_.nonneg[k].base + i] = static_cast<int>(k);
      local_of[w_.nonneg[k].base + i] = i;
    }
  }
  for (std::size_t k = 0; k < w_.socs.size(); ++k) {
    for (int i = 0; i < w_.socs[k].dim; ++i) {
      owner[w_.socs[k].base + i] = Owner::Soc;
      block_of[w_.socs[k].base + i] = static_cast<int>(k);
      local_of[w_.socs[k].base + i] = i;
    }
  }
  for (std::size_t k = 0; k < w_.psds.size(); ++k) {
    const PsdBlock& blk = w_.psds[k];
    const int d = blk.order * (blk.order + 1) / 2;
    for (int i = 0; i < d; ++i) {
      owner[blk.base + i] = Owner::Psd;
      block_of[blk.base + i] = static_cast<int>(k);
      local_of[blk.base + i] = i;
    }
  }
  // local svec index -> (i, j)
  auto decode_svec = [](int offset, int p) {
    int i = 0, rem = offset;
    while (rem >= p - i) {
      rem -= p - i;
      ++i;
    }
    return std::pair<int, int>(i, i + rem);
  };

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  w_.rows.resize(w_.n_rows);
  for (int r = 0; r < w_.n_rows; ++r) {
    RowSplit& row = w_.rows[r];
    for (const auto& [coord, value] : lp_.rows[r].coeffs) {
      const int m = w_.coord_map[coord];
      if (m < 0) {
        row.free.emplace_back(-1 - m, value);
        w_.af(r, -1 - m) = value;
        continue;
      }
      row.cone.emplace_back(m, value);
      const int blk = block_of[m];
      const int local = local_of[m];
      switch (owner[m]) {
        case Owner::NonNeg:
          row.nonneg.emplace_back(m, value);
          break;
        case Owner::Soc: {
          if (row.soc.empty() || row.soc.back().block != blk) {
            row.soc.push_back({blk, {}});
          }
          row.soc.back().local.emplace_back(local, value);
          break;
        }
        case Owner::Psd: {
          if (row.psd.empty() || row.psd.back().block != blk) {
            RowSplit::PsdPart part;
            part.block = blk;
            row.psd.push_back(part);
          }
          auto& part = row.psd.back();
          const auto [i, j] = decode_svec(local, w_.psds[blk].order);
          part.matrix.emplace_back(i, j, i == j ? value : value * inv_sqrt2);
          break;
        }
      }
    }
    for (auto& part : row.psd) {
      for (const auto& [i, j, v] : part.matrix) {
        part.touched.push_back(i);
        if (j != i) part.touched.push_back(j);
      }
      std::sort(part.touched.begin(), part.touched.end());
      part.touched.erase(std::unique(part.touched.begin(), part.touched.end()),
                         part.touched.end());
    }
  }
  w_.bnorm = std::max(1.0, w_.b.norm());
  w_.cnorm = std::max(1.0, std::sqrt(w_.cc.squaredNorm() + w_.cf.squaredNorm()));
}

void Ipm::init_point() {
  x_ = Eigen::VectorXd::Zero(w_.cone_dim);
  s_ = Eigen::VectorXd::Zero(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    x_.segment(blk.base, blk.count).setOnes();
    s_.segment(blk.base, blk.count).setOnes();
  }
  for (const SocBlock& blk : w_.socs) {
    x_(blk.base) = 1.0;
    s_(blk.base) = 1.0;
  }
  for (const PsdBlock& blk : w_.psds) {
    int at = blk.base;
    for (int i = 0; i < blk.order; ++i) {
      x_(at) = 1.0;
      s_(at) = 1.0;
      at += blk.order - i;
    }
  }
  xf_ = Eigen::VectorXd::Zero(w_.n_free);
  y_ = Eigen::VectorXd::Zero(w_.n_rows);
  tau_ = 1.0;
  kappa_ = 1.0;
}

bool Ipm::update_scalings() {
  if (w_.nn_w_flat.size() != w_.cone_dim) w_.nn_w_flat.setZero(w_.cone_dim);
  for (NonNegBlock& blk : w_.nonneg) {
    auto xs = x_.segment(blk.base, blk.count);
    auto ss = s_.segment(blk.base, blk.count);
    if ((xs.array() <= 0).any() || (ss.array() <= 0).any()) return false;
    blk.w = (xs.array() / ss.array()).sqrt();
    blk.lambda = (xs.array() * ss.array()).sqrt();
    w_.nn_w_flat.segment(blk.base, blk.count) = blk.w;
  }
  for (SocBlock& blk : w_.socs) {
    auto xs = x_.segment(blk.base, blk.dim);
    auto ss = s_.segment(blk.base, blk.dim);
    const double xj = xs(0) * xs(0) - xs.tail(blk.dim - 1).squaredNorm();
    const double sj = ss(0) * ss(0) - ss.tail(blk.dim - 1).squaredNorm();
    if (xj <= 0 || sj <= 0 || xs(0) <= 0 || ss(0) <= 0) return false;
    const double rx = std::sqrt(xj), rs = std::sqrt(sj);
    Eigen::VectorXd xbar = xs / rx, sbar = ss / rs;
    const double gamma = std::sqrt(0.5 * (1.0 + xbar.dot(sbar)));
    blk.wbar = xbar;
    blk.wbar(0) += sbar(0);
    blk.wbar.tail(blk.dim - 1) -= sbar.tail(blk.dim - 1);
    blk.wbar /= 2.0 * gamma;
    blk.eta = std::sqrt(rx / rs);
    // lambda = W s
    const double a = blk.wbar(0);
    auto bvec = blk.wbar.tail(blk.dim - 1);
    blk.lambda.resize(blk.dim);
    const double bs = bvec.dot(ss.tail(blk.dim - 1));
    blk.lambda(0) = blk.eta * (a * ss(0) + bs);
    blk.lambda.tail(blk.dim - 1) =
        blk.eta * (ss(0) * bvec + ss.tail(blk.dim - 1) + bvec * (bs / (1.0 + a)));
  }
  for (PsdBlock& blk : w_.psds) {
    const int p = blk.order;
    const int d = p * (p + 1) / 2;
    const Eigen::MatrixXd xm = svec_to_mat(x_.segment(blk.base, d), p);
    const Eigen::MatrixXd sm = svec_to_mat(s_.segment(blk.base, d), p);
    Eigen::LLT<Eigen::MatrixXd> lx(xm), ls(sm);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    const Eigen::MatrixXd lxm = lx.matrixL();
    const Eigen::MatrixXd lsm = ls.matrixL();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(lsm.transpose() * lxm,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sig = svd.singularValues();
    if (sig.minCoeff() <= 0) return false;
    const Eigen::VectorXd isq = sig.array().sqrt().inverse().matrix();
    blk.r = lxm * svd.matrixV() * isq.asDiagonal();
    blk.rinv = isq.asDiagonal() * svd.matrixU().transpose() * lsm.transpose();
    blk.wnt = blk.r * blk.r.transpose();
    blk.sigma = sig;
  }
  return true;
}

void Ipm::apply_h(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
  out.resize(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    out.segment(blk.base, blk.count) =
        in.segment(blk.base, blk.count).array() * blk.w.array().square();
  }
  for (const SocBlock& blk : w_.socs) {
    auto u = in.segment(blk.base, blk.dim);
    auto o = out.segment(blk.base, blk.dim);
    const double wu = blk.wbar.dot(u);
    o = 2.0 * wu * blk.wbar;
    o(0) -= u(0);
    o.tail(blk.dim - 1) += u.tail(blk.dim - 1);
    o *= blk.eta * blk.eta;
  }
  for (const PsdBlock& blk : w_.psds) {
    const int d = blk.order * (blk.order + 1) / 2;
    const Eigen::MatrixXd um = svec_to_mat(in.segment(blk.base, d), blk.order);
    const Eigen::MatrixXd bm = blk.wnt * um * blk.wnt;
    mat_to_svec(bm, out.segment(blk.base, d));
  }
}

void Ipm::apply_h_row(const RowSplit& row, Eigen::VectorXd& work,
                      std::vector<std::pair<int, int>>& spans) const {
  spans.clear();
  for (const auto& [pos, val] : row.nonneg) {
    const double wv = w_.nn_w_flat(pos);
    work(pos) = val * wv * wv;
    spans.emplace_back(pos, 1);
  }
  for (const auto& part : row.soc) {
    const SocBlock& blk = w_.socs[part.block];
    double wu = 0.0;
    for (const auto& [local, val] : part.local) wu += blk.wbar(local) * val;
    auto o = work.segment(blk.base, blk.dim);
    o = (2.0 * wu * blk.eta * blk.eta) * blk.wbar;
    for (const auto& [local, val] : part.local) {
      o(local) += blk.eta * blk.eta * (local == 0 ? -val : val);
    }
    spans.emplace_back(blk.base, blk.dim);
  }
  for (const auto& part : row.psd) {
    const PsdBlock& blk = w_.psds[part.block];
    const int p = blk.order;
    const int nr = static_cast<int>(part.touched.size());
    // B = W(:,R) A(R,R) W(R,:) with R the touched rows.
    Eigen::MatrixXd arr = Eigen::MatrixXd::Zero(nr, nr);
    std::vector<int> where(p, -1);
    for (int t = 0; t < nr; ++t) where[part.touched[t]] = t;
    for (const auto& [i, j, v] : part.matrix) {
      arr(where[i], where[j]) = v;
      if (i != j) arr(where[j], where[i]) = v;
    }
    Eigen::MatrixXd wcols(p, nr);
    for (int t = 0; t < nr; ++t) wcols.col(t) = blk.wnt.col(part.touched[t]);
    const Eigen::MatrixXd bm = wcols * arr * wcols.transpose();
    const int d = p * (p + 1) / 2;
    mat_to_svec(bm, work.segment(blk.base, d));
    spans.emplace_back(blk.base, d);
  }
}

void Ipm::clear_spans(Eigen::VectorXd& work,
                      const std::vector<std::pair<int, int>>& spans) const {
  for (const auto& [base, len] : spans) work.segment(base, len).setZero();
}

bool Ipm::build_normal_matrix() {
  const int r = w_.n_rows;
  m_.setZero(r, r);
  Eigen::VectorXd work = Eigen::VectorXd::Zero(w_.cone_dim);
  std::vector<std::pair<int, int>> spans;
  for (int i = 0; i < r; ++i) {
    apply_h_row(w_.rows[i], work, spans);
    for (int j = 0; j <= i; ++j) {
      const double v = dot_sparse(w_.rows[j].cone, work);
      m_(i, j) = v;
      m_(j, i) = v;
    }
    clear_spans(work, spans);
  }
  return true;
}

bool Ipm::saddle_factorize() {
  const double scale = std::max(1.0, m_.diagonal().cwiseAbs().maxCoeff());
  for (double reg : {0.0, 1e-12, 1e-10, 1e-8}) {
    Eigen::MatrixXd mreg = m_;
    if (reg > 0.0) mreg.diagonal().array() += reg * scale;
    llt_.compute(mreg);
    if (llt_.info() != Eigen::Success) continue;
    if (w_.n_free > 0) {
      minv_af_ = llt_.solve(w_.af);
      Eigen::MatrixXd sf = w_.af.transpose() * minv_af_;
      sf_llt_.compute(sf);
      if (sf_llt_.info() != Eigen::Success) continue;
    }
    return true;
  }
  return false;
}

void Ipm::saddle_solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                       Eigen::VectorXd& dy, Eigen::VectorXd& dxf) const {
  auto solve_once = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        Eigen::VectorXd& out_y, Eigen::VectorXd& out_xf) {
    if (w_.n_free == 0) {
      out_y = llt_.solve(a);
      out_xf.resize(0);
      return;
    }
    const Eigen::VectorXd t = llt_.solve(a);
    out_xf = sf_llt_.solve(w_.af.transpose() * t - b);
    out_y = t - minv_af_ * out_xf;
  };
  solve_once(r1, r2, dy, dxf);
  // Iterative refinement against the unregularized saddle matrix; the normal
  // equations lose digits once the scaling spread grows.
  for (int pass = 0; pass < 4; ++pass) {
    Eigen::VectorXd res1 = r1 - m_ * dy;
    if (w_.n_free > 0) res1 -= w_.af * dxf;
    Eigen::VectorXd res2;
    if (w_.n_free > 0) res2 = r2 - w_.af.transpose() * dy;
    const double scale = std::max({1.0, r1.cwiseAbs().maxCoeff()});
    if (res1.cwiseAbs().maxCoeff() +
            (w_.n_free > 0 ? res2.cwiseAbs().maxCoeff() : 0.0) <
        1e-14 * scale) {
      break;
    }
    Eigen::VectorXd cy, cxf;
    solve_once(res1, w_.n_free > 0 ? res2 : Eigen::VectorXd(), cy, cxf);
    dy += cy;
    if (w_.n_free > 0) dxf += cxf;
  }
}

void Ipm::lambda_div(const Eigen::VectorXd& d, Eigen::VectorXd& out) const {
  out.resize(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    out.segment(blk.base, blk.count) =
        d.segment(blk.base, blk.count).array() / blk.lambda.array();
  }
  for (const SocBlock& blk : w_.socs) {
    auto dd = d.segment(blk.base, blk.dim);
    auto o = out.segment(blk.base, blk.dim);
    const double l0 = blk.lambda(0);
    auto l1 = blk.lambda.tail(blk.dim - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * dd(0) - l1.dot(dd.tail(blk.dim - 1))) / det;
    o(0) = u0;
    o.tail(blk.dim - 1) = (dd.tail(blk.dim - 1) - u0 * l1) / l0;
  }
  for (const PsdBlock& blk : w_.psds) {
    const int p = blk.order;
    const int dsz = p * (p + 1) / 2;
    Eigen::MatrixXd dm = svec_to_mat(d.segment(blk.base, dsz), p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) dm(i, j) *= 2.0 / (blk.sigma(i) + blk.sigma(j));
    }
    mat_to_svec(dm, out.segment(blk.base, dsz));
  }
}

void Ipm::scaled_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                         Eigen::VectorXd& out) const {
  out.resize(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    out.segment(blk.base, blk.count) = u.segment(blk.base, blk.count).array() *
                                       v.segment(blk.base, blk.count).array();
  }
  for (const SocBlock& blk : w_.socs) {
    auto us = u.segment(blk.base, blk.dim);
    auto vs = v.segment(blk.base, blk.dim);
    auto o = out.segment(blk.base, blk.dim);
    o(0) = us.dot(vs);
    o.tail(blk.dim - 1) = us(0) * vs.tail(blk.dim - 1) + vs(0) * us.tail(blk.dim - 1);
  }
  for (const PsdBlock& blk : w_.psds) {
    const int p = blk.order;
    const int dsz = p * (p + 1) / 2;
    const Eigen::MatrixXd um = svec_to_mat(u.segment(blk.base, dsz), p);
    const Eigen::MatrixXd vm = svec_to_mat(v.segment(blk.base, dsz), p);
    const Eigen::MatrixXd prod = 0.5 * (um * vm + vm * um);
    mat_to_svec(prod, out.segment(blk.base, dsz));
  }
}

Eigen::VectorXd Ipm::lambda_sq() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    out.segment(blk.base, blk.count) = blk.lambda.array().square();
  }
  for (const SocBlock& blk : w_.socs) {
    auto o = out.segment(blk.base, blk.dim);
    o(0) = blk.lambda.squaredNorm();
    o.tail(blk.dim - 1) = 2.0 * blk.lambda(0) * blk.lambda.tail(blk.dim - 1);
  }
  for (const PsdBlock& blk : w_.psds) {
    int at = blk.base;
    for (int i = 0; i < blk.order; ++i) {
      out(at) = blk.sigma(i) * blk.sigma(i);
      at += blk.order - i;
    }
  }
  return out;
}

Eigen::VectorXd Ipm::identity_vec() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) out.segment(blk.base, blk.count).setOnes();
  for (const SocBlock& blk : w_.socs) out(blk.base) = 1.0;
  for (const PsdBlock& blk : w_.psds) {
    int at = blk.base;
    for (int i = 0; i < blk.order; ++i) {
      out(at) = 1.0;
      at += blk.order - i;
    }
  }
  return out;
}

void Ipm::scale_x_dir(const Eigen::VectorXd& dx, Eigen::VectorXd& out) const {
  out.resize(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    out.segment(blk.base, blk.count) =
        dx.segment(blk.base, blk.count).array() / blk.w.array();
  }
  for (const SocBlock& blk : w_.socs) {
    // W^{-1} = eta^{-1} [[a, -b'], [-b, I + b b'/(1+a)]]
    auto u = dx.segment(blk.base, blk.dim);
    auto o = out.segment(blk.base, blk.dim);
    const double a = blk.wbar(0);
    auto bv = blk.wbar.tail(blk.dim - 1);
    const double bu = bv.dot(u.tail(blk.dim - 1));
    o(0) = (a * u(0) - bu) / blk.eta;
    o.tail(blk.dim - 1) =
        (-u(0) * bv + u.tail(blk.dim - 1) + bv * (bu / (1.0 + a))) / blk.eta;
  }
  for (const PsdBlock& blk : w_.psds) {
    const int dsz = blk.order * (blk.order + 1) / 2;
    const Eigen::MatrixXd um = svec_to_mat(dx.segment(blk.base, dsz), blk.order);
    const Eigen::MatrixXd sc = blk.rinv * um * blk.rinv.transpose();
    mat_to_svec(sc, out.segment(blk.base, dsz));
  }
}

void Ipm::scale_s_dir(const Eigen::VectorXd& ds, Eigen::VectorXd& out) const {
  out.resize(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    out.segment(blk.base, blk.count) =
        ds.segment(blk.base, blk.count).array() * blk.w.array();
  }
  for (const SocBlock& blk : w_.socs) {
    auto u = ds.segment(blk.base, blk.dim);
    auto o = out.segment(blk.base, blk.dim);
    const double a = blk.wbar(0);
    auto bv = blk.wbar.tail(blk.dim - 1);
    const double bu = bv.dot(u.tail(blk.dim - 1));
    o(0) = blk.eta * (a * u(0) + bu);
    o.tail(blk.dim - 1) =
        blk.eta * (u(0) * bv + u.tail(blk.dim - 1) + bv * (bu / (1.0 + a)));
  }
  for (const PsdBlock& blk : w_.psds) {
    const int dsz = blk.order * (blk.order + 1) / 2;
    const Eigen::MatrixXd um = svec_to_mat(ds.segment(blk.base, dsz), blk.order);
    const Eigen::MatrixXd sc = blk.r.transpose() * um * blk.r;
    mat_to_svec(sc, out.segment(blk.base, dsz));
  }
}

void Ipm::unscale_to_s(const Eigen::VectorXd& d, Eigen::VectorXd& out) const {
  out.resize(w_.cone_dim);
  for (const NonNegBlock& blk : w_.nonneg) {
    out.segment(blk.base, blk.count) =
        d.segment(blk.base, blk.count).array() / blk.w.array();
  }
  for (const SocBlock& blk : w_.socs) {
    // Ws^{-1} = W^{-1} (symmetric scaling)
    auto u = d.segment(blk.base, blk.dim);
    auto o = out.segment(blk.base, blk.dim);
    const double a = blk.wbar(0);
    auto bv = blk.wbar.tail(blk.dim - 1);
    const double bu = bv.dot(u.tail(blk.dim - 1));
    o(0) = (a * u(0) - bu) / blk.eta;
    o.tail(blk.dim - 1) =
        (-u(0) * bv + u.tail(blk.dim - 1) + bv * (bu / (1.0 + a))) / blk.eta;
  }
  for (const PsdBlock& blk : w_.psds) {
    const int dsz = blk.order * (blk.order + 1) / 2;
    const Eigen::MatrixXd um = svec_to_mat(d.segment(blk.base, dsz), blk.order);
    const Eigen::MatrixXd sc = blk.rinv.transpose() * um * blk.rinv;
    mat_to_svec(sc, out.segment(blk.base, dsz));
  }
}

double Ipm::max_step(const Eigen::VectorXd& dx_scaled,
                     const Eigen::VectorXd& ds_scaled) const {
  double alpha = kInf;
  auto soc_step = [](double p0, const Eigen::Ref<const Eigen::VectorXd>& p1, double d0,
                     const Eigen::Ref<const Eigen::VectorXd>& d1) {
    // Largest a >= 0 with (p + a d) in the SOC: smallest positive root of
    // qc + 2 qb a + qa a^2 = 0 (the J-norm along the ray), qc > 0 at an
    // interior p.
    const double qa = d0 * d0 - d1.squaredNorm();
    const double qb = p0 * d0 - p1.dot(d1);
    const double qc = p0 * p0 - p1.squaredNorm();
    double best = kInf;
    if (qa == 0.0) {
      if (qb < 0.0) best = -qc / (2.0 * qb);
    } else {
      const double disc = qb * qb - qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double root : {(-qb - sq) / qa, (-qb + sq) / qa}) {
          if (root > 0.0 && root < best) best = root;
        }
      }
    }
    if (d0 < 0.0) best = std::min(best, -p0 / d0);
    return best;
  };
  // In scaled coordinates the current point is lambda on both sides.
  for (const NonNegBlock& blk : w_.nonneg) {
    for (int i = 0; i < blk.count; ++i) {
      const double l = blk.lambda(i);
      const double dx = dx_scaled(blk.base + i);
      const double ds = ds_scaled(blk.base + i);
      if (dx < 0.0) alpha = std::min(alpha, -l / dx);
      if (ds < 0.0) alpha = std::min(alpha, -l / ds);
    }
  }
  for (const SocBlock& blk : w_.socs) {
    const int d = blk.dim;
    alpha = std::min(alpha, soc_step(blk.lambda(0), blk.lambda.tail(d - 1),
                                     dx_scaled(blk.base), dx_scaled.segment(blk.base + 1, d - 1)));
    alpha = std::min(alpha, soc_step(blk.lambda(0), blk.lambda.tail(d - 1),
                                     ds_scaled(blk.base), ds_scaled.segment(blk.base + 1, d - 1)));
  }
  for (const PsdBlock& blk : w_.psds) {
    const int p = blk.order;
    const int dsz = p * (p + 1) / 2;
    const Eigen::VectorXd isq = blk.sigma.array().sqrt().inverse().matrix();
    for (const Eigen::VectorXd* dir : {&dx_scaled, &ds_scaled}) {
      Eigen::MatrixXd dm = svec_to_mat(dir->segment(blk.base, dsz), p);
      dm = isq.asDiagonal() * dm * isq.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dm, Eigen::EigenvaluesOnly);
      const double lmin = eig.eigenvalues().minCoeff();
      if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
    }
  }
  return alpha;
}

bool Ipm::newton_core(const Targets& t, Direction& dir) {
  // u = rdc + Ws^{-1} d
  Eigen::VectorXd u;
  unscale_to_s(t.d, u);
  u += t.rdc;

  Eigen::VectorXd hu(w_.cone_dim);
  apply_h(u, hu);
  Eigen::VectorXd r1 = t.rp;
  for (int i = 0; i < w_.n_rows; ++i) r1(i) -= dot_sparse(w_.rows[i].cone, hu);
  Eigen::VectorXd r2 = -t.rdf;

  Eigen::VectorXd g2, gf2;
  saddle_solve(r1, r2, g2, gf2);

  // tau elimination
  const Eigen::VectorXd bmv = w_.b - vecc_;
  double num = t.rg - t.dtk / tau_ - w_.cc.dot(hu) + bmv.dot(g2);
  if (w_.n_free > 0) num -= w_.cf.dot(gf2);
  double den = -bmv.dot(g1_) - cc_wsq_cc_ - kappa_ / tau_;
  if (w_.n_free > 0) den += w_.cf.dot(gf1_);
  if (den == 0.0 || !std::isfinite(den)) return false;
  dir.dtau = num / den;

  dir.dy = g2 + g1_ * dir.dtau;
  dir.dxf = w_.n_free > 0 ? Eigen::VectorXd(gf2 + gf1_ * dir.dtau) : Eigen::VectorXd();

  // W^{-2} dx = A' dy - cc dtau + u  =>  dx = H (that)
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(w_.cone_dim);
  for (int i = 0; i < w_.n_rows; ++i) scatter_add(w_.rows[i].cone, dir.dy(i), aty);
  Eigen::VectorXd rhs = aty - w_.cc * dir.dtau + u;
  apply_h(rhs, dir.dx);
  // ds = Ws^{-1} d - (A' dy - cc dtau + u)
  unscale_to_s(t.d, dir.ds);
  dir.ds -= rhs;
  dir.dkappa = (t.dtk - kappa_ * dir.dtau) / tau_;
  return dir.dx.allFinite() && dir.ds.allFinite() && dir.dy.allFinite() &&
         std::isfinite(dir.dtau) && std::isfinite(dir.dkappa);
}

bool Ipm::newton_solve(double eta, const Eigen::VectorXd& dcomp, double dtk,
                       Direction& dir) {
  Targets t;
  t.rp = -eta * res_p_;
  t.rdc = -eta * res_dc_;
  t.rdf = -eta * res_df_;
  t.rg = -eta * res_g_;
  lambda_div(dcomp, t.d);
  t.dtk = dtk;
  if (!newton_core(t, dir)) return false;

  // Full-system iterative refinement: the dx reconstruction through W^2
  // amplifies roundoff that the saddle refinement alone cannot see.
  for (int pass = 0; pass < 2; ++pass) {
    Targets e;
    e.rp = t.rp;
    for (int i = 0; i < w_.n_rows; ++i) {
      double ax = dot_sparse(w_.rows[i].cone, dir.dx);
      if (w_.n_free > 0) ax += dot_sparse(w_.rows[i].free, dir.dxf);
      e.rp(i) -= ax - w_.b(i) * dir.dtau;
    }
    e.rdc = t.rdc + dir.ds - w_.cc * dir.dtau;
    for (int i = 0; i < w_.n_rows; ++i) scatter_add(w_.rows[i].cone, dir.dy(i), e.rdc);
    e.rdf = t.rdf - w_.cf * dir.dtau;
    if (w_.n_free > 0) e.rdf += w_.af.transpose() * dir.dy;
    e.rg = t.rg - (dir.dkappa + w_.cc.dot(dir.dx) +
                   (w_.n_free > 0 ? w_.cf.dot(dir.dxf) : 0.0) - w_.b.dot(dir.dy));
    Eigen::VectorXd dxs, dss;
    scale_x_dir(dir.dx, dxs);
    scale_s_dir(dir.ds, dss);
    e.d = t.d - dxs - dss;
    e.dtk = t.dtk - (kappa_ * dir.dtau + tau_ * dir.dkappa);

    const double err = e.rp.cwiseAbs().maxCoeff() + e.rdc.cwiseAbs().maxCoeff() +
                       e.d.cwiseAbs().maxCoeff() + std::abs(e.rg) + std::abs(e.dtk) +
                       (w_.n_free > 0 ? e.rdf.cwiseAbs().maxCoeff() : 0.0);
    const double ref = 1.0 + t.rp.cwiseAbs().maxCoeff() + t.d.cwiseAbs().maxCoeff();
    if (!(err > 1e-13 * ref)) break;
    Direction corr;
    if (!newton_core(e, corr)) break;
    dir.dx += corr.dx;
    dir.dy += corr.dy;
    dir.ds += corr.ds;
    if (w_.n_free > 0) dir.dxf += corr.dxf;
    dir.dtau += corr.dtau;
    dir.dkappa += corr.dkappa;
  }
  return true;
}

void Ipm::compute_residuals() {
  res_p_.resize(w_.n_rows);
  for (int i = 0; i < w_.n_rows; ++i) {
    double ax = dot_sparse(w_.rows[i].cone, x_);
    if (w_.n_free > 0) ax += dot_sparse(w_.rows[i].free, xf_);
    res_p_(i) = ax - tau_ * w_.b(i);
  }
  res_dc_ = tau_ * w_.cc - s_;
  for (int i = 0; i < w_.n_rows; ++i) scatter_add(w_.rows[i].cone, -y_(i), res_dc_);
  res_df_ = tau_ * w_.cf;
  if (w_.n_free > 0) res_df_ -= w_.af.transpose() * y_;
  res_g_ = kappa_ + w_.cc.dot(x_) + (w_.n_free > 0 ? w_.cf.dot(xf_) : 0.0) - w_.b.dot(y_);

  pobj_ = (w_.cc.dot(x_) + (w_.n_free > 0 ? w_.cf.dot(xf_) : 0.0)) / tau_;
  dobj_ = w_.b.dot(y_) / tau_;
  rel_p_ = res_p_.norm() / (tau_ * w_.bnorm);
  const double dnorm = std::sqrt(res_dc_.squaredNorm() + res_df_.squaredNorm());
  rel_d_ = dnorm / (tau_ * w_.cnorm);
  rel_gap_ = std::abs(pobj_ - dobj_) / (1.0 + std::abs(pobj_) + std::abs(dobj_));
}

Solution Ipm::finish(SolveStatus status, int iters, double elapsed) {
  Solution sol;
  sol.status = status;
  sol.iterations = iters;
  sol.wall_time_s = elapsed;
  sol.log = log_;

  const int dim = lp_.dim();
  sol.z.resize(dim);
  sol.s = Eigen::VectorXd::Zero(dim);
  double denom = 1.0;
  if (status == SolveStatus::Optimal || status == SolveStatus::IterationLimit ||
      status == SolveStatus::NumericalFailure) {
    denom = tau_ > 0.0 ? tau_ : 1.0;
  } else if (status == SolveStatus::PrimalInfeasible) {
    denom = std::max(w_.b.dot(y_), 1e-300);
  } else if (status == SolveStatus::DualInfeasible) {
    denom = std::max(-(w_.cc.dot(x_) + (w_.n_free > 0 ? w_.cf.dot(xf_) : 0.0)), 1e-300);
  }
  for (int i = 0; i < dim; ++i) {
    const int m = w_.coord_map[i];
    if (m == kInactiveFree) {
      sol.z(i) = 0.0;
    } else if (m >= 0) {
      sol.z(i) = x_(m) / denom;
      sol.s(i) = s_(m) / denom;
    } else {
      sol.z(i) = xf_(-1 - m) / denom;
    }
  }
  sol.y = y_ / denom;
  sol.primal_residual = rel_p_;
  sol.dual_residual = rel_d_;
  sol.duality_gap = rel_gap_;
  if (status == SolveStatus::Optimal || status == SolveStatus::IterationLimit ||
      status == SolveStatus::NumericalFailure) {
    sol.objective = lp_.h.dot(sol.z) + lp_.objective_offset;
  } else {
    sol.objective = std::numeric_limits<double>::quiet_NaN();
  }
  if (status == SolveStatus::PrimalInfeasible) {
    // Farkas certificate: A' y + s = 0, b' y = 1 after normalization.
    Eigen::VectorXd aty = Eigen::VectorXd::Zero(w_.cone_dim);
    for (int i = 0; i < w_.n_rows; ++i) scatter_add(w_.rows[i].cone, y_(i), aty);
    Eigen::VectorXd atyf =
        w_.n_free > 0 ? Eigen::VectorXd(w_.af.transpose() * y_) : Eigen::VectorXd();
    double nrm = std::sqrt((aty + s_).squaredNorm() +
                           (w_.n_free > 0 ? atyf.squaredNorm() : 0.0));
    sol.certificate_residual = nrm / denom;
  } else if (status == SolveStatus::DualInfeasible) {
    Eigen::VectorXd ax(w_.n_rows);
    for (int i = 0; i < w_.n_rows; ++i) {
      ax(i) = dot_sparse(w_.rows[i].cone, x_) +
              (w_.n_free > 0 ? dot_sparse(w_.rows[i].free, xf_) : 0.0);
    }
    sol.certificate_residual = ax.norm() / denom;
  }
  return sol;
}

Solution Ipm::run() {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  init_point();
  if (unbounded_free_ >= 0) {
    // Unconstrained free coordinate with a cost: explicit unbounded ray.
    Solution sol;
    sol.status = SolveStatus::DualInfeasible;
    sol.z = Eigen::VectorXd::Zero(lp_.dim());
    sol.z(unbounded_free_) = lp_.h(unbounded_free_) > 0.0 ? -1.0 : 1.0;
    sol.y = Eigen::VectorXd::Zero(w_.n_rows);
    sol.s = Eigen::VectorXd::Zero(lp_.dim());
    sol.objective = std::numeric_limits<double>::quiet_NaN();
    sol.certificate_residual = 0.0;
    sol.wall_time_s = elapsed();
    sol.log = "unbounded free coordinate " + std::to_string(unbounded_free_) + "\n";
    return sol;
  }

  char line[256];
  std::snprintf(line, sizeof(line), "%4s %12s %12s %9s %9s %9s %9s %8s\n", "iter",
                "pobj", "dobj", "gap", "pres", "dres", "mu", "step");
  log_ += line;

  auto restore_best = [&] {
    if (best_.score < kInf) {
      x_ = best_.x;
      s_ = best_.s;
      xf_ = best_.xf;
      y_ = best_.y;
      tau_ = best_.tau;
      kappa_ = best_.kappa;
      compute_residuals();
    }
  };
  auto score_ok = [&] {
    return rel_p_ <= opt_.tolerance && rel_d_ <= opt_.tolerance &&
           rel_gap_ <= opt_.gap_tol();
  };

  int stalled = 0;
  int it = 0;
  for (; it <= opt_.max_iterations; ++it) {
    compute_residuals();
    const double mu = (x_.dot(s_) + tau_ * kappa_) / (w_.barrier_degree + 1);

    const double score = std::max({rel_p_, rel_d_, rel_gap_});
    if (score < best_.score) {
      best_ = {x_, s_, xf_, y_, tau_, kappa_, score};
    }

    if (rel_p_ <= opt_.tolerance && rel_d_ <= opt_.tolerance &&
        rel_gap_ <= opt_.gap_tol()) {
      return finish(SolveStatus::Optimal, it, elapsed());
    }
    // Infeasibility detection: tau converging to zero relative to kappa.
    if (tau_ < 1e-8 * std::max(1.0, kappa_) ||
        (mu < opt_.tolerance * 1e-2 && tau_ < 1e-4 * std::max(1.0, kappa_))) {
      const double by = w_.b.dot(y_);
      const double cx = w_.cc.dot(x_) + (w_.n_free > 0 ? w_.cf.dot(xf_) : 0.0);
      if (by > 0.0) {
        Eigen::VectorXd aty = Eigen::VectorXd::Zero(w_.cone_dim);
        for (int i = 0; i < w_.n_rows; ++i) scatter_add(w_.rows[i].cone, y_(i), aty);
        double res = (aty + s_).norm();
        if (w_.n_free > 0) {
          res = std::hypot(res, (w_.af.transpose() * y_).norm());
        }
        if (res / by <= opt_.feas_tol() * w_.cnorm * 10) {
          return finish(SolveStatus::PrimalInfeasible, it, elapsed());
        }
      }
      if (cx < 0.0) {
        Eigen::VectorXd ax(w_.n_rows);
        for (int i = 0; i < w_.n_rows; ++i) {
          ax(i) = dot_sparse(w_.rows[i].cone, x_) +
                  (w_.n_free > 0 ? dot_sparse(w_.rows[i].free, xf_) : 0.0);
        }
        if (ax.norm() / (-cx) <= opt_.feas_tol() * w_.bnorm * 10) {
          return finish(SolveStatus::DualInfeasible, it, elapsed());
        }
      }
      return finish(SolveStatus::NumericalFailure, it, elapsed());
    }
    if (it == opt_.max_iterations) break;

    if (!update_scalings()) {
      restore_best();
      return finish(score_ok() ? SolveStatus::Optimal : SolveStatus::NumericalFailure, it,
                    elapsed());
    }
    build_normal_matrix();
    if (!saddle_factorize()) {
      restore_best();
      return finish(score_ok() ? SolveStatus::Optimal : SolveStatus::NumericalFailure, it,
                    elapsed());
    }

    // tau column, fixed per iteration
    apply_h(w_.cc, wsq_cc_);
    cc_wsq_cc_ = w_.cc.dot(wsq_cc_);
    vecc_.resize(w_.n_rows);
    for (int i = 0; i < w_.n_rows; ++i) vecc_(i) = dot_sparse(w_.rows[i].cone, wsq_cc_);
    saddle_solve(vecc_ + w_.b, w_.cf, g1_, gf1_);

    // Predictor (affine scaling direction).
    Direction aff;
    if (!newton_solve(1.0, -lambda_sq(), -tau_ * kappa_, aff)) {
      return finish(SolveStatus::NumericalFailure, it, elapsed());
    }
    Eigen::VectorXd dxs, dss;
    scale_x_dir(aff.dx, dxs);
    scale_s_dir(aff.ds, dss);
    double alpha_aff = max_step(dxs, dss);
    if (aff.dtau < 0.0) alpha_aff = std::min(alpha_aff, -tau_ / aff.dtau);
    if (aff.dkappa < 0.0) alpha_aff = std::min(alpha_aff, -kappa_ / aff.dkappa);
    alpha_aff = std::min(alpha_aff, 1.0);

    double sigma = std::min(1.0, std::pow(1.0 - alpha_aff, 3.0));
    // Keep the gap from outrunning the feasibility residuals: once they lag,
    // recenter instead of driving mu further down.
    const double lag = std::max(rel_p_, rel_d_) / std::max(rel_gap_, 1e-16);
    if (lag > 100.0) {
      sigma = std::max(sigma, 0.5);
    } else if (lag > 10.0) {
      sigma = std::max(sigma, 0.05);
    }

    // Corrector.
    Eigen::VectorXd correction;
    scaled_product(dxs, dss, correction);
    Eigen::VectorXd dcomp = -lambda_sq() - correction + sigma * mu * identity_vec();
    const double dtk = -tau_ * kappa_ - aff.dtau * aff.dkappa + sigma * mu;
    Direction dir;
    if (!newton_solve(1.0 - sigma, dcomp, dtk, dir)) {
      return finish(SolveStatus::NumericalFailure, it, elapsed());
    }
    scale_x_dir(dir.dx, dxs);
    scale_s_dir(dir.ds, dss);
    double alpha = max_step(dxs, dss);
    if (dir.dtau < 0.0) alpha = std::min(alpha, -tau_ / dir.dtau);
    if (dir.dkappa < 0.0) alpha = std::min(alpha, -kappa_ / dir.dkappa);
    alpha = std::min(opt_.step_fraction * alpha, 1.0);
    if (!(alpha > 1e-12)) {
      restore_best();
      return finish(score_ok() ? SolveStatus::Optimal : SolveStatus::NumericalFailure, it,
                    elapsed());
    }
    if (alpha < 1e-7) {
      if (++stalled >= 3) {
        restore_best();
        return finish(score_ok() ? SolveStatus::Optimal : SolveStatus::NumericalFailure,
                      it, elapsed());
      }
    } else {
      stalled = 0;
    }

    x_ += alpha * dir.dx;
    s_ += alpha * dir.ds;
    if (w_.n_free > 0) xf_ += alpha * dir.dxf;
    y_ += alpha * dir.dy;
    tau_ += alpha * dir.dtau;
    kappa_ += alpha * dir.dkappa;

    std::snprintf(line, sizeof(line), "%4d %12.4e %12.4e %9.2e %9.2e %9.2e %9.2e %8.2e\n",
                  it, pobj_, dobj_, rel_gap_, rel_p_, rel_d_, mu, alpha);
    log_ += line;
    if (opt_.verbose) std::fputs(line, stderr);
  }
  return finish(SolveStatus::IterationLimit, it, elapsed());
}

}  // namespace

Solution solve(const ConeLP& lp, const SolverOptions& options) {
  Ipm ipm(lp, options);
  return ipm.run();
}

void unscale_solution(const ScalingRecord& record, Solution& solution) {
  solution.y = (solution.y.array() / record.d.array()).matrix() * record.h_norm;
  solution.s *= record.h_norm;
  solution.objective *= record.h_norm;
}

}  // namespace opfsdr
