"""Menus, mechanisms, revenue, incentive verification and extractions.

Everything here works on float grids (numpy) and on exact grids (object
arrays of Fractions) with the same code path.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dist import TypeGrid
from .env import type_vector
from .experiment import Experiment, experiment_of, full_information
from .numeric import is_exact, rat_str, worker_count

Q_TOL = 1e-9
CHUNK = 1 << 21
CURVE_TOL = 1e-12


@dataclass(frozen=True)
class Menu:
    options: tuple

    def __post_init__(self):
        seen, opts = set(), []
        for E, price in self.options:
            if price < 0 or (isinstance(price, float) and not math.isfinite(price)):
                raise ValueError("prices must be finite and nonnegative")
            key = (E.pi, price)
            if key in seen:
                continue
            seen.add(key)
            opts.append((E, price))
        if not opts:
            raise ValueError("menu needs at least one option")
        object.__setattr__(self, "options", tuple(opts))

    def to_json(self) -> dict:
        return {"options": [{"experiment": E.to_json(), "price": _num_json(p)} for E, p in self.options]}


@dataclass(frozen=True)
class Mechanism:
    """Assignment of grid types to priced options."""

    grid: TypeGrid
    options: tuple
    assignment: tuple

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        if len(self.assignment) != len(self.grid):
            raise ValueError("one assignment per grid type")
        if any(not 0 <= a < len(self.options) for a in self.assignment):
            raise ValueError("assignment refers to a missing option")

    @property
    def payments(self) -> list:
        return [self.options[a][1] for a in self.assignment]

    @property
    def option_size(self) -> int:
        return len(set(self.assignment))

    def to_json(self) -> dict:
        out = self.grid.to_json()
        out["options"] = [{"experiment": E.to_json(), "price": _num_json(p)} for E, p in self.options]
        out["assignment"] = list(self.assignment)
        return out


@dataclass
class ICReport:
    ir_violation: object
    ic_violation: object
    ic_identity_violation: object
    witnesses: dict = field(default_factory=dict)

    def ok(self, tol=0) -> bool:
        return self.ir_violation <= tol and self.ic_violation <= tol

    def to_json(self) -> dict:
        return {"ir_violation": _num_json(self.ir_violation), "ic_violation": _num_json(self.ic_violation),
                "ic_identity_violation": _num_json(self.ic_identity_violation),
                "witnesses": self.witnesses}


def _num_json(v):
    if isinstance(v, Fraction):
        return rat_str(v)
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    return float(v)


# ---------------------------------------------------------------- tables

def _exact_data(*vals) -> bool:
    return all(is_exact(v) for v in vals)


def type_matrix(env, grid) -> np.ndarray:
    """(N, n) array of full prior vectors; object dtype for exact grids."""
    if grid.exact:
        return np.array([type_vector(env, p) for p in grid.points], dtype=object)
    pts = np.asarray(grid.points, float)
    if pts.ndim == 1:
        if env.n != 2:
            raise ValueError("scalar grid needs a binary environment")
        return np.column_stack([pts, 1.0 - pts])
    if pts.shape[1] == env.n - 1:
        pts = np.column_stack([pts, 1.0 - pts.sum(1)])
    if pts.shape[1] != env.n:
        raise ValueError("grid dimension does not match environment")
    return pts


def _payoff_array(env, exact):
    return np.array(env.u, dtype=object if exact else float)


def _pi_stack(options, exact):
    return np.array([E.pi for E, _ in options], dtype=object if exact else float)


def _signal_table(T, Pi, U):
    # P[t, k, s, j] = sum_i T[t, i] Pi[k, i, s] U[i, j]
    return np.einsum("ti,kis,ij->tksj", T, Pi, U)


def value_tables(T, Pi, U, enumerate_sigma=False):
    """(best-interpretation values, obedient values), both (N, K)."""
    P = _signal_table(T, Pi, U)
    m = P.shape[2]
    diag = np.arange(m)
    vstar = P[:, :, diag, diag].sum(-1)
    vbest = P.max(-1).sum(-1)
    if enumerate_sigma:
        venum = None
        for sigma in itertools.product(range(P.shape[3]), repeat=m):
            v = P[:, :, diag, list(sigma)].sum(-1)
            venum = v if venum is None else np.maximum(venum, v) if v.dtype != object else _objmax(venum, v)
        if np.any(venum != vbest):
            raise AssertionError("per-signal best interpretation disagrees with full enumeration")
    return vbest, vstar


def _objmax(a, b):
    out = a.copy()
    mask = b > a
    out[mask] = b[mask]
    return out


def outside_values(T, U) -> np.ndarray:
    return np.einsum("ti,ij->tj", T, U).max(1)


def informed_values(T, U) -> np.ndarray:
    return (T * U.max(1)).sum(1)


def gains(env, grid) -> np.ndarray:
    exact = grid.exact
    T = type_matrix(env, grid)
    U = _payoff_array(env, exact)
    return informed_values(T, U) - outside_values(T, U)


# ---------------------------------------------------------------- buyers

def best_response(menu, env, theta) -> tuple:
    """(option index or None for the outside option, net utility)."""
    vec = type_vector(env, theta)
    exact = _exact_data(*vec) and all(_exact_data(*sum(E.pi, ()), p) for E, p in menu.options)
    T = np.array([vec], dtype=object if exact else float)
    U = _payoff_array(env, exact)
    vbest, _ = value_tables(T, _pi_stack(menu.options, exact), U)
    prices = np.array([p for _, p in menu.options], dtype=object if exact else float)
    util = vbest[0] - prices
    k = int(np.argmax(util))
    outside = outside_values(T, U)[0]
    if util[k] >= outside:
        return k, util[k]
    return None, outside


def menu_choices(menu, env, grid) -> tuple:
    """Per-type chosen option (-1 = outside) and net utility."""
    exact = grid.exact
    T = type_matrix(env, grid)
    U = _payoff_array(env, exact)
    prices = np.array([p for _, p in menu.options], dtype=object if exact else float)
    choice = np.empty(len(grid), dtype=int)
    util = np.empty(len(grid), dtype=object if exact else float)
    for sl in _chunks(len(grid), len(menu.options) * env.m * env.m):
        vbest, _ = value_tables(T[sl], _pi_stack(menu.options, exact), U)
        net = vbest - prices
        k = np.argmax(net, axis=1)
        best = net[np.arange(len(k)), k]
        out = outside_values(T[sl], U)
        buy = best >= out
        choice[sl] = np.where(buy, k, -1)
        util[sl] = np.where(buy, best, out)
    return choice, util


def revenue(obj, env, grid=None):
    if isinstance(obj, Mechanism):
        g = obj.grid
        return sum(m * t for m, t in zip(g.masses, obj.payments))
    choice, _ = menu_choices(obj, env, grid)
    prices = [p for _, p in obj.options]
    total = 0 * grid.masses[0]
    for c, m in zip(choice, grid.masses):
        if c >= 0:
            total = total + m * prices[c]
    return total


def _chunks(N, width):
    step = max(1, CHUNK // max(1, width))
    return [slice(i, min(N, i + step)) for i in range(0, N, step)]


# ---------------------------------------------------------------- verification

def verify(mech: Mechanism, env, enumerate_sigma=False) -> ICReport:
    """Worst IR and IC violations over grid types, all options and all
    interpretations (per-signal best action), plus the obedient-only IC
    violation (responsive IC)."""
    grid = mech.grid
    exact = grid.exact and all(_exact_data(*sum(E.pi, ()), p) for E, p in mech.options)
    dtype = object if exact else float
    T = type_matrix(env, grid)
    if exact:
        T = T.astype(object)
    U = _payoff_array(env, exact)
    Pi = _pi_stack(mech.options, exact)
    prices = np.array([p for _, p in mech.options], dtype=dtype)
    assign = np.asarray(mech.assignment, dtype=int)
    zero = Fraction(0) if exact else 0.0

    def scan(sl):
        vbest, vstar = value_tables(T[sl], Pi, U, enumerate_sigma)
        rows = np.arange(vbest.shape[0])
        own = assign[sl]
        truth = vstar[rows, own] - prices[own]
        dev_all = vbest - prices
        dev_id = vstar - prices
        ka = np.argmax(dev_all, axis=1)
        ki = np.argmax(dev_id, axis=1)
        ic = dev_all[rows, ka] - truth
        ic_id = dev_id[rows, ki] - truth
        ir = outside_values(T[sl], U) - truth
        out = {}
        for name, arr, who in (("ic", ic, ka), ("ic_identity", ic_id, ki), ("ir", ir, None)):
            t = int(np.argmax(arr))
            out[name] = (arr[t], sl.start + t, None if who is None else int(who[t]))
        return out

    parts = _chunks(len(grid), len(mech.options) * env.m * env.m * (1 if not enumerate_sigma else 4))
    workers = min(worker_count(), len(parts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan, parts))
    else:
        results = [scan(sl) for sl in parts]

    def combine(name):
        best = max(results, key=lambda r: r[name][0])[name]
        val = best[0] if best[0] > 0 else zero
        return val, {"type": best[1], "deviation": best[2]}

    ic, w_ic = combine("ic")
    ic_id, w_id = combine("ic_identity")
    ir, w_ir = combine("ir")
    return ICReport(ir, ic, ic_id, {"ic": w_ic, "ic_identity": w_id, "ir": {"type": w_ir["type"]}})


# ---------------------------------------------------------------- q mechanisms

def _binary_points(grid):
    pts = list(grid.points)
    if grid.exact:
        return pts
    return [float(p) for p in pts]


def cell_widths(points, right=1):
    return [b - a for a, b in zip(points, list(points[1:]) + [right])]


def payment_from_q(q, env, grid) -> list:
    """Payments of the obedient-IC mechanism induced by a monotone step q,
    t(theta) = theta q(theta) + min(u11 - u2m - q(theta), 0) - int_0^theta q."""
    pts = _binary_points(grid)
    q = list(q)
    if len(q) != len(pts):
        raise ValueError("one q value per grid point")
    if pts[0] != 0:
        raise ValueError("grid must start at 0")
    exact = grid.exact and all(is_exact(v) for v in q)
    tol = 0 if exact else Q_TOL
    u11, u2m = env.u11, env.u2m
    c = u11 - u2m
    for a, b in zip(q, q[1:]):
        if b < a - tol:
            raise ValueError("q must be nondecreasing")
    if q[0] < -u2m - tol or q[-1] > u11 + tol:
        raise ValueError("q outside [-u2m, u11]")
    widths = cell_widths(pts, 1)
    total = sum(v * w for v, w in zip(q, widths))
    if abs(total - c) > tol:
        raise ValueError(f"integral of q is {total}, expected {c}")
    out, run = [], 0 * total
    for th, v, w in zip(pts, q, widths):
        out.append(th * v + min(c - v, 0) - run)
        run = run + v * w
    return out


def merge_q(q, grid, tol=1e-8) -> tuple:
    """Group consecutive q values within ``tol``; each group takes its
    width-weighted mean so the integral of q is unchanged."""
    pts = _binary_points(grid)
    widths = cell_widths(pts, 1)
    groups = []
    for i, v in enumerate(q):
        if groups and abs(v - q[groups[-1][0]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    merged = list(q)
    for g in groups:
        w = sum(widths[i] for i in g)
        mean = sum(q[i] * widths[i] for i in g) / w if w > 0 else q[g[0]]
        for i in g:
            merged[i] = mean
    # float means can drift by an ulp; restore monotonicity
    for i in range(1, len(merged)):
        if merged[i] < merged[i - 1]:
            merged[i] = merged[i - 1]
    return merged, groups


def mechanism_from_q(q, env, grid, tol=1e-8) -> Mechanism:
    merged, groups = merge_q(q, grid, tol)
    pay = payment_from_q(merged, env, grid)
    options, assign = [], [0] * len(merged)
    for g in groups:
        E = experiment_of(merged[g[0]], env)
        options.append((E, pay[g[0]]))
        for i in g:
            assign[i] = len(options) - 1
    return Mechanism(grid, tuple(options), tuple(assign))


# ---------------------------------------------------------------- full information

def frev(env, grid) -> tuple:
    """Best single price for complete information: (price, revenue).  Candidate
    prices are the types' gains; the smallest optimal price is returned."""
    U = gains(env, grid)
    masses = grid.masses
    if grid.exact:
        order = sorted(range(len(U)), key=lambda i: U[i], reverse=True)
        best_p, best_r = Fraction(0), Fraction(0)
        cum = Fraction(0)
        k = 0
        while k < len(order):
            v = U[order[k]]
            while k < len(order) and U[order[k]] == v:
                cum += masses[order[k]]
                k += 1
            r = v * cum
            if r > best_r or (r == best_r and v < best_p):
                best_p, best_r = v, r
        return best_p, best_r
    U = np.asarray(U, float)
    vals, inv = np.unique(U, return_inverse=True)
    mass_at = np.bincount(inv, weights=np.asarray(masses, float), minlength=len(vals))
    above = np.cumsum(mass_at[::-1])[::-1]
    rev = vals * above
    k = int(np.argmax(rev))
    return float(vals[k]), float(rev[k])


def frev_curve(env, grid, prices) -> np.ndarray:
    U = np.asarray(gains(env, grid), float)
    order = np.sort(U)
    masses = np.asarray(grid.masses, float)[np.argsort(U, kind="stable")]
    tail = np.concatenate([np.cumsum(masses[::-1])[::-1], [0.0]])
    # gains equal to a price up to rounding still buy at that price
    idx = np.searchsorted(order, np.asarray(prices, float) - CURVE_TOL, side="left")
    return np.asarray(prices, float) * tail[idx]


def full_info_revenue(env, grid, price):
    U = gains(env, grid)
    return price * sum(m for g, m in zip(U, grid.masses) if g >= price)


def _slices(mech):
    shares = {}
    for a, m in zip(mech.assignment, mech.grid.masses):
        shares[a] = shares.get(a, 0) + m
    return shares


def full_info_extraction(mech: Mechanism, env, grid=None, ir_tol=1e-9) -> tuple:
    """Sell complete information at one of the mechanism's own prices.

    An IR buyer paying t_j values complete information at least t_j, so the
    price t_j recovers option j's revenue slice; the best slice is at least
    Rev / option_size."""
    rep = verify(mech, env)
    if rep.ir_violation > ir_tol:
        raise ValueError(f"mechanism is not IR (violation {rep.ir_violation})")
    U = gains(env, mech.grid)
    best = None
    for j in sorted(_slices(mech)):
        price = mech.options[j][1]
        own = [U[i] for i, a in enumerate(mech.assignment) if a == j]
        price = min([price] + own)   # absorbs float IR slack only
        r = price * sum(m for g, m in zip(U, mech.grid.masses) if g >= price)
        if best is None or r > best[1]:
            best = (price, r)
    return best


def price_bucket_extraction(menu, env, grid) -> tuple:
    """Group options into dyadic price buckets and sell complete information at
    the cheapest price of the best bucket: (price, revenue, bucket count)."""
    prices = [p for _, p in menu.options]
    tmax = max(prices)
    if tmax <= 0:
        raise ValueError("menu has no positive price")
    pos = [p for p in prices if p > 0]
    tmin = min(pos)
    ratio = tmax / tmin
    k = max(1, math.ceil(math.log2(ratio)) if not is_exact(ratio) else _ceil_log2(ratio))
    U = gains(env, grid)
    best = None
    for b in range(k):
        lo = tmin * 2 ** b
        members = [p for p in pos if lo <= p and (p < lo * 2 or b == k - 1)]
        if not members:
            continue
        price = min(members)
        r = price * sum(m for g, m in zip(U, grid.masses) if g >= price)
        if best is None or r > best[1]:
            best = (price, r)
    return best[0], best[1], k


def _ceil_log2(x: Fraction) -> int:
    k = 0
    while 2 ** k < x:
        k += 1
    return k


def eps_ic_to_menu(mech, eta, delta=None, env=None) -> Menu:
    """Turn a delta-IC, delta-IR mechanism into an exactly IC menu by pricing
    every option at (1 - eta) t - delta (clamped at 0)."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if delta is None:
        if env is None:
            raise ValueError("need env to measure delta")
        rep = verify(mech, env)
        delta = max(rep.ic_violation, rep.ir_violation)
    opts = []
    for E, t in mech.options:
        p = (1 - eta) * t - delta
        if p < 0:
            warnings.warn("adjusted price negative; clamped to 0")
            p = 0 * p
        opts.append((E, p))
    return Menu(tuple(opts))


def full_info_menu(n, price) -> Menu:
    return Menu(((full_information(n, exact=is_exact(price)), price),))
