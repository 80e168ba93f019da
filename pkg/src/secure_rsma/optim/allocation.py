"""Common-message allocation: ``max_a min_k a_k r_c + r_p[k]`` over the simplex."""
from __future__ import annotations

import numpy as np

from ..conic import ConicProgram, solve
from ..metrics import RateAllocation, RateReport


def allocation_lp(r_c_sec: float, r_p_sec) -> tuple[RateAllocation, float]:
    """Solve the allocation LP with the conic solver; returns ``(a, zeta)``."""
    r_p_sec = np.asarray(r_p_sec, float)
    k = r_p_sec.size
    if k == 1:
        return RateAllocation(np.ones(1)), float(r_c_sec + r_p_sec[0])
    if r_c_sec <= 0:
        return RateAllocation.uniform(k), float(r_p_sec.min())
    prog = ConicProgram()
    zeta = prog.variable("zeta")
    a = prog.variable("a", k, lb=0.0, ub=1.0)
    prog.add_eq(sum(a.entries()), 1.0, "simplex")
    for i in range(k):
        prog.add_le(zeta.e, a[i] * r_c_sec + r_p_sec[i], f"secrecy[{i}]")
    prog.maximize(zeta.e)
    res = solve(prog)
    if not res.ok:
        raise RuntimeError(f"allocation LP failed: {res.status}")
    alloc = np.clip(res["a"], 0.0, 1.0)
    return RateAllocation(alloc / alloc.sum()), res["zeta"]


def allocation_closed_form(r_c_sec: float, r_p_sec) -> tuple[RateAllocation, float]:
    """Water-level equalizer: raise the weakest users until the common budget is spent."""
    r_p_sec = np.asarray(r_p_sec, float)
    k = r_p_sec.size
    if k == 1:
        return RateAllocation(np.ones(1)), float(r_c_sec + r_p_sec[0])
    if r_c_sec <= 0:
        return RateAllocation.uniform(k), float(r_p_sec.min())
    order = np.argsort(r_p_sec, kind="stable")
    sorted_p = r_p_sec[order]
    level = sorted_p[0] + r_c_sec
    for n in range(1, k + 1):
        level = (r_c_sec + sorted_p[:n].sum()) / n
        if n == k or level <= sorted_p[n]:
            break
    a = np.clip((level - r_p_sec) / r_c_sec, 0.0, 1.0)
    a /= a.sum()
    return RateAllocation(a), float(level)


def solve_allocation(report: RateReport, method: str = "closed_form") -> RateAllocation:
    """Optimal allocation for the secrecy rates in ``report``."""
    solver = {"closed_form": allocation_closed_form, "lp": allocation_lp}[method]
    return solver(report.r_c_sec, report.r_p_sec)[0]
