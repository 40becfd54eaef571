"""Dense two-phase simplex and the optimal obedient-IC/IR mechanism LP."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .dist import ContinuousDist, TypeGrid, discretize
from .env import slope
from .mech import Mechanism, cell_widths, mechanism_from_q, revenue

PIVOT_TOL = 1e-9
BUDGET_PER_DIM, BUDGET_BASE = 50, 1000


@dataclass
class StandardLP:
    """maximize c.x + offset  s.t.  A[r].x (senses[r]) b[r],  lo <= x <= hi."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: list
    bounds: list
    offset: float = 0.0
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, float)
        self.A = np.asarray(self.A, float).reshape(-1, len(self.c))
        self.b = np.asarray(self.b, float)
        if len(self.b) != self.A.shape[0] or len(self.senses) != len(self.b):
            raise ValueError("row data misaligned")
        if len(self.bounds) != len(self.c):
            raise ValueError("one bound pair per variable")
        if any(s not in ("<=", "=", ">=") for s in self.senses):
            raise ValueError("senses must be <=, = or >=")


class LPResult(NamedTuple):
    status: str
    x: np.ndarray | None
    objective: float | None


class LPNumericalError(RuntimeError):
    pass


# ---------------------------------------------------------------- simplex

def _pivot(T, r, k):
    T[r] /= T[r, k]
    col = T[:, k].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, allowed, budget, bland_after):
    """Maximise using the objective row T[-1] (reduced costs, negative = improving)."""
    rows = T.shape[0] - 1
    pivots = 0
    while True:
        rc = T[-1, :-1]
        cand = np.where((rc < -PIVOT_TOL) & allowed)[0]
        if cand.size == 0:
            return "optimal", pivots
        bland = pivots >= bland_after
        k = int(cand[0]) if bland else int(cand[np.argmin(rc[cand])])
        col = T[:rows, k]
        pos = col > PIVOT_TOL
        if not pos.any():
            return "unbounded", pivots
        ratios = np.full(rows, np.inf)
        ratios[pos] = T[:rows, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.where(ratios <= best + PIVOT_TOL * max(1.0, abs(best)))[0]
        r = int(min(ties, key=lambda i: basis[i])) if bland else int(ties[np.argmax(col[ties])])
        _pivot(T, r, k)
        basis[r] = k
        pivots += 1
        if pivots > budget:
            B = T[:rows, basis]
            raise LPNumericalError(f"pivot budget {budget} exhausted; basis condition {np.linalg.cond(B):.3e}")


def _to_nonneg(lp: StandardLP):
    """Rewrite x = shift + M y with y >= 0; upper bounds become rows."""
    n = len(lp.c)
    cols, shift = [], np.zeros(n)
    extra_rows = []
    for j, (lo, hi) in enumerate(lp.bounds):
        lo = -math.inf if lo is None else lo
        hi = math.inf if hi is None else hi
        if lo > hi:
            return None
        if math.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if math.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for t, (j, s) in enumerate(cols):
        M[j, t] = s
    A = lp.A @ M
    b = lp.b - lp.A @ shift
    senses = list(lp.senses)
    if extra_rows:
        U = np.zeros((len(extra_rows), len(cols)))
        for r, (t, ub) in enumerate(extra_rows):
            U[r, t] = 1.0
        A = np.vstack([A, U])
        b = np.concatenate([b, [ub for _, ub in extra_rows]])
        senses += ["<="] * len(extra_rows)
    c = lp.c @ M
    const = float(lp.c @ shift)
    return A, b, senses, c, M, shift, const


def solve_lp(lp: StandardLP) -> LPResult:
    """Two-phase dense simplex; Dantzig pricing, Bland's rule after
    5 * (rows + cols) pivots so cycling cannot persist."""
    conv = _to_nonneg(lp)
    if conv is None:
        return LPResult("infeasible", None, None)
    A, b, senses, c, M, shift, const = conv
    rows, ny = A.shape
    A = A.copy()
    b = b.copy()
    senses = list(senses)
    for i in range(rows):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]
    n_slack = sum(s != "=" for s in senses)
    n_art = sum(s != "<=" for s in senses)
    width = ny + n_slack + n_art
    T = np.zeros((rows + 1, width + 1))
    T[:rows, :ny] = A
    T[:rows, -1] = b
    basis = [0] * rows
    si, ai = ny, ny + n_slack
    art_cols = []
    for i, s in enumerate(senses):
        if s == "<=":
            T[i, si] = 1.0
            basis[i] = si
            si += 1
        else:
            if s == ">=":
                T[i, si] = -1.0
                si += 1
            T[i, ai] = 1.0
            basis[i] = ai
            art_cols.append(ai)
            ai += 1
    budget = BUDGET_PER_DIM * (rows + width) + BUDGET_BASE
    bland_after = 5 * (rows + width)

    allowed = np.ones(width, bool)
    if art_cols:
        # phase 1: maximise -sum(artificials)
        T[-1, :] = 0.0
        T[-1, art_cols] = 1.0
        for i, bv in enumerate(basis):
            if bv in art_cols:
                T[-1] -= T[i]
        status, _ = _run(T, basis, allowed, budget, bland_after)
        if -T[-1, -1] > 1e-7 * max(1.0, np.abs(b).max()):
            return LPResult("infeasible", None, None)
        art = set(art_cols)
        # drive zero-level artificials out of the basis
        keep = []
        for i in range(rows):
            if basis[i] in art:
                nz = [k for k in range(ny + n_slack) if abs(T[i, k]) > PIVOT_TOL]
                if nz:
                    _pivot(T, i, nz[0])
                    basis[i] = nz[0]
                    keep.append(i)
            else:
                keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[i] for i in keep]
        allowed[art_cols] = False
        T[:, art_cols] = 0.0
    rows = T.shape[0] - 1
    cost = np.zeros(width)
    cost[:ny] = c
    T[-1, :] = 0.0
    T[-1, :width] = -cost
    for i, bv in enumerate(basis):
        if T[-1, bv] != 0.0:
            T[-1] -= T[-1, bv] * T[i]
    status, _ = _run(T, basis, allowed, budget, bland_after)
    if status == "unbounded":
        return LPResult("unbounded", None, None)
    y = np.zeros(width)
    for i, bv in enumerate(basis):
        y[bv] = T[i, -1]
    x = shift + M @ y[:ny]
    return LPResult("optimal", x, float(lp.c @ x + lp.offset))


def solve_lp_highs(lp: StandardLP) -> LPResult:
    """Same contract as solve_lp, delegated to HiGHS dual simplex."""
    ub = [i for i, s in enumerate(lp.senses) if s == "<="]
    lb = [i for i, s in enumerate(lp.senses) if s == ">="]
    eq = [i for i, s in enumerate(lp.senses) if s == "="]
    A_ub = np.vstack([lp.A[ub], -lp.A[lb]]) if ub or lb else None
    b_ub = np.concatenate([lp.b[ub], -lp.b[lb]]) if ub or lb else None
    res = linprog(-lp.c, A_ub=A_ub, b_ub=b_ub,
                  A_eq=lp.A[eq] if eq else None, b_eq=lp.b[eq] if eq else None,
                  bounds=lp.bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status == 2:
        return LPResult("infeasible", None, None)
    if res.status == 3:
        return LPResult("unbounded", None, None)
    if res.status != 0:
        raise LPNumericalError(res.message)
    return LPResult("optimal", res.x, float(lp.c @ res.x + lp.offset))


# ---------------------------------------------------------------- optimal mechanism program

@dataclass
class QSolution:
    q: list
    objective: float
    revenue: float
    option_size: int
    raw_q: list = field(default_factory=list)


def _grid_arrays(grid: TypeGrid):
    pts = np.asarray(grid.points, float)
    if pts.ndim != 1:
        raise ValueError("the LP needs a binary (scalar) grid")
    if pts[0] != 0.0:
        raise ValueError("grid must contain 0 as its first point")
    f = np.asarray(grid.masses, float)
    widths = np.asarray(cell_widths(list(pts), 1.0))
    return pts, f, widths


def build_optmech_program(env, grid: TypeGrid) -> StandardLP:
    m = env.m
    if m < 2:
        raise ValueError("need at least two actions")
    theta, f, D = _grid_arrays(grid)
    N = len(theta)
    u11, u2m = float(env.u11), float(env.u2m)
    c0 = u11 - u2m
    F = np.cumsum(f)
    K = m - 2
    nv = N * (2 + K)
    qi = np.arange(N)
    si = N + np.arange(N)

    def ri(k):
        return 2 * N + (k - 2) * N + np.arange(N)

    cost = np.zeros(nv)
    cost[qi] = theta * f + D * F
    cost[si] = f
    rows, rhs, senses = [], [], []

    def row():
        r = np.zeros(nv)
        rows.append(r)
        return r

    for i in range(N - 1):
        r = row()
        r[qi[i]], r[qi[i + 1]] = 1.0, -1.0
        rhs.append(0.0)
        senses.append("<=")
    for i in range(N):
        r = row()
        r[si[i]], r[qi[i]] = 1.0, 1.0
        rhs.append(c0)
        senses.append("<=")
    ells = {}
    for k in range(2, m):
        ell = float(slope(env, k))
        ells[k] = ell
        idx = ri(k)
        for i in range(N):
            r = row()
            r[idx[i]], r[qi[i]] = 1.0, -1.0
            rhs.append(-ell)
            senses.append("<=")
        r = row()
        r[idx] = D
        rhs.append(float(env.u[1][m - k]) - u2m)
        senses.append(">=")
    r = row()
    r[qi] = D
    rhs.append(c0)
    senses.append("=")

    floor = -(u11 + u2m)
    bounds = [(-u2m, u11)] * N + [(floor, 0.0)] * N + [(floor - abs(e), 0.0) for e in ells.values() for _ in range(N)]
    return StandardLP(cost, np.array(rows), np.array(rhs), senses, bounds, offset=-c0,
                      labels={"N": N, "m": m, "ell": ells})


def _as_grid(dist, N):
    if isinstance(dist, TypeGrid):
        return dist
    if isinstance(dist, ContinuousDist):
        return discretize(dist, N)
    raise TypeError("dist must be a TypeGrid or ContinuousDist")


def solve_optmech(env, dist, N: int = 400, method: str = "highs", merge_tol: float = 1e-8):
    """Optimal obedient-IC/IR mechanism on the grid: (QSolution, Mechanism)."""
    grid = _as_grid(dist, N)
    lp = build_optmech_program(env, grid)
    res = solve_lp(lp) if method == "simplex" else solve_lp_highs(lp)
    if res.status != "optimal":
        raise RuntimeError(f"optimal-mechanism LP returned {res.status}")
    n = lp.labels["N"]
    raw = res.x[:n]
    q = _clean_q(raw, env, grid)
    mech = mechanism_from_q(q, env, grid, merge_tol)
    rev = float(revenue(mech, env))
    qs = [float(v) for v in _q_values(mech, env)]
    sol = QSolution(q=qs, objective=res.objective, revenue=rev,
                    option_size=len(mech.options), raw_q=[float(v) for v in raw])
    return sol, mech


def _clean_q(raw, env, grid):
    """Project solver output onto the exact constraint set: clip, enforce
    monotonicity, then fix the integral on the last cell with room."""
    q = np.clip(np.asarray(raw, float), -float(env.u2m), float(env.u11))
    q = np.maximum.accumulate(q)
    _, _, D = _grid_arrays(grid)
    gap = (float(env.u11) - float(env.u2m)) - float(q @ D)
    if gap != 0.0:
        # spread the residual over the top block (it only moves by solver tolerance)
        top = np.where(np.abs(q - q[-1]) <= 1e-12)[0]
        w = D[top].sum()
        if w > 0:
            q[top] += gap / w
    return list(q)


def _q_values(mech, env):
    from .experiment import q_of
    return [q_of(mech.options[a][0], env) for a in mech.assignment]
