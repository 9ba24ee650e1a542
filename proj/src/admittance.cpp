#include "opfsdr/admittance.hpp"

#include <cmath>

namespace opfsdr {

BranchAdmittance branch_admittance(const Branch& br) {
  const cplx z(br.r, br.x);
  if (z == cplx(0.0, 0.0)) {
    throw SingularBranch("branch has zero series impedance");
  }
  const cplx y = 1.0 / z;
  const cplx ych(0.0, 0.5 * br.b_charging);
  const cplx tap = std::polar(br.tap_ratio, br.phase_shift);
  BranchAdmittance a;
  a.from_from = (y + ych) / (br.tap_ratio * br.tap_ratio);
  a.from_to = -y / std::conj(tap);
  a.to_from = -y / tap;
  a.to_to = y + ych;
  return a;
}

ComplexSparseMatrix build_admittance(const Network& net) {
  const int n = net.n_buses();
  std::vector<Triplet> trip;
  trip.reserve(4 * net.branches.size() + n);
  for (const Branch& br : net.branches) {
    const BranchAdmittance a = branch_admittance(br);
    trip.push_back({br.from, br.from, a.from_from});
    trip.push_back({br.from, br.to, a.from_to});
    trip.push_back({br.to, br.from, a.to_from});
    trip.push_back({br.to, br.to, a.to_to});
  }
  for (int k = 0; k < n; ++k) {
    const Bus& b = net.buses[k];
    if (b.shunt_g != 0.0 || b.shunt_b != 0.0) {
      trip.push_back({k, k, cplx(b.shunt_g, b.shunt_b)});
    }
  }
  return ComplexSparseMatrix::from_triplets(n, std::move(trip));
}

InjectionPair bus_injection_matrices(const ComplexSparseMatrix& y, int k) {
  const int n = y.order();
  if (k < 0 || k >= n) throw DimensionMismatch("bus index out of range");
  // M = Y^H e_k e_k^T has column k equal to conj(row k of Y).
  std::vector<Triplet> m;
  for (const Triplet& t : y.entries()) {
    if (t.row == k) m.push_back({t.col, k, std::conj(t.value)});
  }
  InjectionPair out;
  hermitian_split(ComplexSparseMatrix::from_triplets(n, std::move(m)), out.active,
                  out.reactive);
  return out;
}

FlowMatrices branch_flow_matrices(const Network& net, int branch) {
  if (branch < 0 || branch >= net.n_branches()) {
    throw DimensionMismatch("branch index out of range");
  }
  const Branch& br = net.branches[branch];
  const BranchAdmittance a = branch_admittance(br);
  const int n = net.n_buses();
  const int k = br.from, l = br.to;
  // S_from = v_k conj(i_from) = conj(Yff)|v_k|^2 + conj(Yft) v_k v_l^*
  //        = v^H (conj(Yff) e_k e_k^T + conj(Yft) e_l e_k^T) v.
  FlowMatrices out;
  {
    std::vector<Triplet> m{{k, k, std::conj(a.from_from)}, {l, k, std::conj(a.from_to)}};
    hermitian_split(ComplexSparseMatrix::from_triplets(n, std::move(m)), out.from_active,
                    out.from_reactive);
  }
  {
    std::vector<Triplet> m{{l, l, std::conj(a.to_to)}, {k, l, std::conj(a.to_from)}};
    hermitian_split(ComplexSparseMatrix::from_triplets(n, std::move(m)), out.to_active,
                    out.to_reactive);
  }
  return out;
}

}  // namespace opfsdr
