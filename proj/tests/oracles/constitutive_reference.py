#!/usr/bin/env python3
"""Reference evaluation of the critical-state rate equations.

Straight-line explicit-Euler implementation kept independent of the C++
library. Running this script prints the frozen constants used in
tests/test_simulator.cpp. Any edit to the C++ formulas must reproduce these
numbers, not the other way around.
"""
import math

G0 = 3000.0
NU = 0.3
N_EXP = 0.67
PHI_C = 31.2
EC0 = 0.937
LAMBDA = 0.022
XI = 0.71
D_EXP = 2.0
P_ATM = 101.325


def state_functions(e, p):
    mc = 6.0 * math.sin(math.radians(PHI_C)) / (3.0 - math.sin(math.radians(PHI_C)))
    g = G0 * (2.97 - e) ** 2 / (1.0 + e) * (p / P_ATM) ** N_EXP
    k = 2.0 * g * (1.0 + NU) / (3.0 * (1.0 - 2.0 * NU))
    ec = EC0 - LAMBDA * (p / P_ATM) ** XI
    mp = mc * (ec / e) ** D_EXP
    mpt = mc * (e / ec) ** D_EXP
    return g, k, ec, mp, mpt


def step_drained(p, q, e, eps_v, eps_d, deps, e0):
    g, k, ec, mp, mpt = state_functions(e, p)
    dq = 3.0 * g * (deps - (q / (p * mp)) * abs(deps))
    deps_v = mpt * abs(deps) - (q / p) * deps
    p += dq / 3.0
    q += dq
    e -= (1.0 + e0) * deps_v
    eps_v += deps_v
    eps_d += deps
    return p, q, e, eps_v, eps_d


def step_undrained(p, q, e, u, deps):
    g, k, ec, mp, mpt = state_functions(e, p)
    deps_v_p = mpt * abs(deps) - (q / p) * deps
    dp = -k * deps_v_p
    dq = 3.0 * g * (deps - (q / (p * mp)) * abs(deps))
    du = dq / 3.0 - dp
    return p + dp, q + dq, e, u + du


def triangular_path(amplitude, n_cycles, steps_per_branch):
    """0 -> +a, then alternating full branches, closing back at 0."""
    d = amplitude / steps_per_branch
    deps = []
    deps += [d] * steps_per_branch
    for c in range(n_cycles):
        deps += [-d] * (2 * steps_per_branch)
        if c < n_cycles - 1:
            deps += [d] * (2 * steps_per_branch)
        else:
            deps += [d] * steps_per_branch
    return deps


def main():
    print("== state_functions at Table params, e=0.70, p=300 kPa ==")
    g, k, ec, mp, mpt = state_functions(0.70, 300.0)
    print(f"G    = {g:.12e}")
    print(f"K    = {k:.12e}")
    print(f"e_c  = {ec:.12e}")
    print(f"M_p  = {mp:.12e}")
    print(f"M_pt = {mpt:.12e}")
    mc = 6.0 * math.sin(math.radians(PHI_C)) / (3.0 - math.sin(math.radians(PHI_C)))
    print(f"M_c  = {mc:.12e}")

    print("\n== drained monotonic, 100 steps of 1e-3, e0=0.70, sigma3=98 ==")
    p, q, e, eps_v, eps_d = 98.0, 0.0, 0.70, 0.0, 0.0
    for _ in range(100):
        p, q, e, eps_v, eps_d = step_drained(p, q, e, eps_v, eps_d, 1e-3, 0.70)
    print(f"p     = {p:.12e}")
    print(f"q     = {q:.12e}")
    print(f"eps_v = {eps_v:.12e}")
    print(f"e     = {e:.12e}")

    print("\n== undrained single cycle, amplitude 1%, 25 steps/branch, e0=0.925, sigma3=300 ==")
    p, q, e, u = 300.0, 0.0, 0.925, 0.0
    path = triangular_path(0.01, 1, 25)
    print(f"path steps = {len(path)}")
    died = None
    for i, deps in enumerate(path):
        p, q, e, u = step_undrained(p, q, e, u, deps)
        if p <= 0.0:
            died = i
            break
    if died is None:
        print(f"p   = {p:.12e}")
        print(f"q   = {q:.12e}")
        print(f"u   = {u:.12e}")
        print(f"r_u = {u / 300.0:.12e}")
    else:
        print(f"p' <= 0 at step {died}")

    print("\n== undrained suite survival scan (amplitude 1%, spb=50, 2 cycles) ==")
    e0_list = sorted(
        [0.575, 0.600, 0.775, 0.950]
        + [0.625 + i * (0.925 - 0.625) / 11 for i in range(12)]
    )
    for e0 in e0_list:
        p, q, e, u = 300.0, 0.0, e0, 0.0
        path = triangular_path(0.01, 2, 50)
        stop = len(path)
        reason = "full"
        for i, deps in enumerate(path):
            p, q, e, u = step_undrained(p, q, e, u, deps)
            if p <= 0.0:
                stop, reason = i, "p<=0"
                break
            if u / 300.0 >= 0.95:
                stop, reason = i + 1, "ru>=0.95"
                break
        print(f"e0={e0:.4f}  steps={stop:4d}/{len(path)}  r_u_end={u/300.0: .4f}  {reason}")


if __name__ == "__main__":
    main()
