#pragma once

#include "opfsdr/complexmat.hpp"
#include "opfsdr/network.hpp"

namespace opfsdr {

// Bus admittance matrix from the standard pi transmission line model with
// off-nominal taps, phase shifters and bus shunts. i = Y v.
ComplexSparseMatrix build_admittance(const Network& net);

// Hermitian pair (Y_k, Ytilde_k) with
//   v^H Y_k v      = Re(i_k^* v_k)
//   v^H Ytilde_k v = Im(i_k^* v_k)
// for i = Y v. Support confined to row/column k.
struct InjectionPair {
  ComplexSparseMatrix active;    // Y_k
  ComplexSparseMatrix reactive;  // Ytilde_k
};
InjectionPair bus_injection_matrices(const ComplexSparseMatrix& admittance, int k);

// Hermitian matrices describing the branch power flow at each end:
//   S_from(v) = v^H from_active v + j v^H from_reactive v
//   S_to(v)   = v^H to_active v   + j v^H to_reactive v
// Support confined to the two endpoint indices.
struct FlowMatrices {
  ComplexSparseMatrix from_active;    // T_{k,l}
  ComplexSparseMatrix from_reactive;  // Ttilde_{k,l}
  ComplexSparseMatrix to_active;      // T_{l,k}
  ComplexSparseMatrix to_reactive;    // Ttilde_{l,k}
};
FlowMatrices branch_flow_matrices(const Network& net, int branch);

// 2x2 admittance of one branch: [i_from; i_to] = Ybr [v_from; v_to].
struct BranchAdmittance {
  cplx from_from, from_to, to_from, to_to;
};
BranchAdmittance branch_admittance(const Branch& br);

}  // namespace opfsdr
