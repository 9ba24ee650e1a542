#!/usr/bin/env python3
"""Generates the synthetic benchmark cases under data/.

The cases mirror the dimensions of the IEEE 118- and 300-bus systems
(bus/generator/branch counts and all-quadratic costs) without redistributing
the original data. Topology is a random geometric graph; demands are drawn
first and a Newton power flow is solved so the emitted operating point is
feasible for the OPF bounds written into the file.

Deterministic: fixed seeds, stable formatting.
"""
import math

import numpy as np


def build_topology(rng, n_bus, n_branch):
    # Clustered points in the plane; tree by nearest-neighbor growth, then the
    # shortest non-tree pairs as chords.
    pts = rng.random((n_bus, 2))
    order = list(range(n_bus))
    in_tree = [order[0]]
    edges = []
    for v in order[1:]:
        d = [(np.hypot(*(pts[v] - pts[u])), u) for u in in_tree]
        dist, u = min(d)
        edges.append((u, v, dist))
        in_tree.append(v)
    have = {(min(a, b), max(a, b)) for a, b, _ in edges}
    cand = []
    for i in range(n_bus):
        for j in range(i + 1, n_bus):
            if (i, j) not in have:
                cand.append((np.hypot(*(pts[i] - pts[j])), i, j))
    cand.sort()
    # mostly local chords, with a share of longer-range ties as in real grids
    n_extra = n_branch - len(edges)
    n_far = max(1, n_extra // 4)
    k = 0
    while len(edges) < n_branch - n_far and k < len(cand):
        dist, i, j = cand[k]
        k += 1
        edges.append((i, j, dist))
        have.add((i, j))
    far_pool = cand[k:]
    picks = rng.choice(len(far_pool), size=min(n_far, len(far_pool)), replace=False)
    for p in sorted(picks.tolist()):
        dist, i, j = far_pool[p]
        if len(edges) >= n_branch:
            break
        edges.append((i, j, min(dist, 0.6)))
        have.add((i, j))
    while len(edges) < n_branch:
        dist, i, j = cand[k]
        k += 1
        edges.append((i, j, dist))
    return edges


def branch_params(rng, edges):
    out = []
    for (i, j, dist) in edges:
        scale = 0.4 + 2.0 * dist
        r = scale * rng.uniform(0.008, 0.03)
        x = r * rng.uniform(2.8, 4.5)
        b = x * rng.uniform(0.15, 0.4)
        tap = 1.0
        if rng.random() < 0.08:
            tap = rng.uniform(0.96, 1.04)
        out.append((i, j, r, x, b, tap))
    return out


def ybus(n, branches, shunts):
    y = np.zeros((n, n), dtype=complex)
    for (i, j, r, x, b, tap) in branches:
        ys = 1.0 / complex(r, x)
        ysh = 0.5j * b
        y[i, i] += (ys + ysh) / tap**2
        y[j, j] += ys + ysh
        y[i, j] += -ys / tap
        y[j, i] += -ys / tap
    for k, (g, b) in enumerate(shunts):
        y[k, k] += complex(g, b)
    return y


def newton_pf(y, p_sched, q_sched, pv, slack, vset, tol=1e-10, iters=40):
    n = y.shape[0]
    v = np.ones(n, dtype=complex)
    v[slack] = vset[slack]
    for b in pv:
        v[b] = vset[b]
    pq = [k for k in range(n) if k != slack and k not in pv]
    for _ in range(iters):
        s = v * np.conj(y @ v)
        dp = p_sched - s.real
        dq = q_sched - s.imag
        mis = np.concatenate([dp[[k for k in range(n) if k != slack]],
                              dq[pq]])
        if np.max(np.abs(mis)) < tol:
            return v, True
        # numerical Jacobian on (theta, |v|) - n is small, this is fine
        ang = np.angle(v)
        mag = np.abs(v)
        idx_t = [k for k in range(n) if k != slack]
        idx_m = pq
        m = len(idx_t) + len(idx_m)
        jac = np.zeros((m, m))
        eps = 1e-7
        for c, k in enumerate(idx_t):
            ang2 = ang.copy()
            ang2[k] += eps
            v2 = mag * np.exp(1j * ang2)
            s2 = v2 * np.conj(y @ v2)
            jac[:, c] = np.concatenate([(s2.real - s.real)[idx_t],
                                        (s2.imag - s.imag)[idx_m]]) / eps
        for c, k in enumerate(idx_m):
            mag2 = mag.copy()
            mag2[k] += eps
            v2 = mag2 * np.exp(1j * ang)
            s2 = v2 * np.conj(y @ v2)
            jac[:, len(idx_t) + c] = np.concatenate([(s2.real - s.real)[idx_t],
                                                     (s2.imag - s.imag)[idx_m]]) / eps
        try:
            step = np.linalg.solve(jac, mis)
        except np.linalg.LinAlgError:
            return v, False
        ang[idx_t] += step[:len(idx_t)]
        mag[idx_m] += step[len(idx_t):]
        v = mag * np.exp(1j * ang)
    return v, False


def make_case(name, seed, n_bus, n_gen, n_branch, base=100.0, load_hi=0.55,
              z_scale=1.0, vset=(1.0, 1.03)):
    rng = np.random.default_rng(seed)
    edges = build_topology(rng, n_bus, n_branch)
    branches = [(i, j, r * z_scale, x * z_scale, b, tap)
                for (i, j, r, x, b, tap) in branch_params(rng, edges)]
    shunts = [(0.0, 0.0) for _ in range(n_bus)]

    # generator placement: spread over the plane (every k-th bus by index)
    gens = sorted(rng.choice(n_bus, size=n_gen, replace=False).tolist())
    slack = gens[0]
    load_buses = [k for k in range(n_bus) if rng.random() < 0.72 or k not in gens]

    p_load = np.zeros(n_bus)
    q_load = np.zeros(n_bus)
    for k in load_buses:
        if k == slack:
            continue
        p_load[k] = rng.uniform(0.08, load_hi)
        q_load[k] = p_load[k] * rng.uniform(0.15, 0.4)

    total = p_load.sum()
    share = rng.uniform(0.5, 1.5, size=n_gen)
    share /= share.sum()
    p_gen = 1.03 * total * share  # ~3% loss margin

    p_sched = -p_load.copy()
    q_sched = -q_load.copy()
    for g, k in enumerate(gens):
        p_sched[k] += p_gen[g]
    vset_range = vset
    vset = np.ones(n_bus)
    for k in gens:
        vset[k] = rng.uniform(*vset_range)

    y = ybus(n_bus, branches, shunts)
    v, ok = newton_pf(y, p_sched, q_sched, [k for k in gens if k != slack], slack, vset)
    if not ok:
        raise RuntimeError(f"{name}: power flow did not converge")
    vm = np.abs(v)
    if vm.min() < 0.9401 or vm.max() > 1.0599:
        raise RuntimeError(f"{name}: voltage profile out of range {vm.min()} {vm.max()}")

    s_inj = v * np.conj(y @ v)
    p_disp = np.zeros(n_gen)
    q_disp = np.zeros(n_gen)
    for g, k in enumerate(gens):
        p_disp[g] = s_inj[k].real + p_load[k]
        q_disp[g] = s_inj[k].imag + q_load[k]

    lines = [f"function mpc = {name}", "mpc.version = '2';",
             f"mpc.baseMVA = {base:g};", ""]
    lines.append("%% bus data")
    lines.append("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin")
    lines.append("mpc.bus = [")
    for k in range(n_bus):
        btype = 3 if k == slack else (2 if k in gens else 1)
        lines.append(
            f"\t{k + 1}\t{btype}\t{p_load[k] * base:.2f}\t{q_load[k] * base:.2f}"
            f"\t0\t0\t1\t{vm[k]:.5f}\t{math.degrees(np.angle(v[k])):.4f}"
            f"\t138\t1\t1.06\t0.94;")
    lines.append("];")
    lines.append("")
    lines.append("%% generator data")
    lines.append("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin")
    lines.append("mpc.gen = [")
    for g, k in enumerate(gens):
        pmax = max(p_disp[g] * rng.uniform(1.35, 1.9), p_disp[g] + 0.35)
        qspan = max(0.6 * pmax, abs(q_disp[g]) * 1.6 + 0.3)
        lines.append(
            f"\t{k + 1}\t{p_disp[g] * base:.2f}\t{q_disp[g] * base:.2f}"
            f"\t{qspan * base:.2f}\t{-qspan * base:.2f}\t{vm[k]:.5f}\t{base:g}\t1"
            f"\t{pmax * base:.2f}\t0;")
    lines.append("];")
    lines.append("")
    lines.append("%% branch data")
    lines.append("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus")
    lines.append("mpc.branch = [")
    for (i, j, r, x, b, tap) in branches:
        tap_field = 0 if tap == 1.0 else round(tap, 4)
        lines.append(
            f"\t{i + 1}\t{j + 1}\t{r:.5f}\t{x:.5f}\t{b:.5f}\t0\t0\t0"
            f"\t{tap_field}\t0\t1\t-360\t360;")
    lines.append("];")
    lines.append("")
    lines.append("%% generator cost data (quadratic)")
    lines.append("%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0")
    lines.append("mpc.gencost = [")
    for g in range(n_gen):
        c2 = rng.uniform(0.008, 0.05)
        c1 = rng.uniform(18.0, 42.0)
        c0 = rng.uniform(0.0, 150.0)
        lines.append(f"\t2\t0\t0\t3\t{c2:.5f}\t{c1:.3f}\t{c0:.2f};")
    lines.append("];")
    lines.append("")
    return "\n".join(lines)


def main():
    import pathlib
    out = pathlib.Path(__file__).resolve().parent.parent / "data"
    out.mkdir(exist_ok=True)
    (out / "case118.m").write_text(make_case("case118", 20240118, 118, 54, 186))
    (out / "case300.m").write_text(
        make_case("case300", 20240300, 300, 69, 409, load_hi=0.3, z_scale=0.55,
                  vset=(0.985, 1.015)))
    print("wrote case118.m and case300.m")


if __name__ == "__main__":
    main()
