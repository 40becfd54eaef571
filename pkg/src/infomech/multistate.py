"""Three-state constructions under matching utility: shell point sets, the
instance whose optimal revenue beats complete information by a growing
factor, its exact certification, and the ratio integral of a mechanism."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dist import TypeGrid, simplex_grid
from .env import MatchingEnvironment
from .experiment import Experiment
from .mech import Mechanism, frev, frev_curve, gains, revenue, verify

R_LO, R_HI = 0.3, 0.4
ANGLE_LO, ANGLE_HI = math.atan(9 / 10), math.atan(10 / 9)
CUSHION = Fraction(1000001, 1000000)
BAND_TOL = 1e-12


class CertificationError(AssertionError):
    """IC/IR or monotone purchase failed; carries the witness."""


# ---------------------------------------------------------------- shells

@dataclass(frozen=True)
class ShellConfig:
    N: int
    M: int
    radii: tuple
    counts: tuple


def shell_config(N: int) -> ShellConfig:
    if N < 1:
        raise ValueError("N must be at least 1")
    counts, total = [], 0
    while total < N:
        c = math.ceil(round((len(counts) + 1) ** 0.75, 12))
        counts.append(c)
        total += c
    M = len(counts)
    weights = np.cumsum([l ** -1.5 for l in range(1, M + 1)])
    radii = tuple(float(R_LO + (R_HI - R_LO) * w / weights[-1]) for w in weights)
    return ShellConfig(N, M, radii, tuple(counts))


def _gap(y, prev):
    return min((y[0] - p[0]) * y[0] + (y[1] - p[1]) * y[1] for p in prev)


def shell_points(N: int) -> tuple:
    """(points, gaps) as exact Fractions of the float construction.

    Shell i has radius r_i and ceil(i^(3/4)) points at evenly spaced interior
    angles of [atan(9/10), atan(10/9)]; gap_k is the smallest inner-product
    margin of y_k against every earlier point and the origin."""
    cfg = shell_config(N)
    ys = []
    for r, c in zip(cfg.radii, cfg.counts):
        for j in range(c):
            phi = ANGLE_LO + (ANGLE_HI - ANGLE_LO) * (j + 0.5) / c
            ys.append((Fraction(r * math.cos(phi)), Fraction(r * math.sin(phi))))
    ys = ys[:N]
    gaps, prev = [], [(Fraction(0), Fraction(0))]
    for y in ys:
        norm2 = y[0] ** 2 + y[1] ** 2
        # the points come from float trigonometry, so allow rounding at the band edges
        if not (R_LO ** 2 - BAND_TOL <= norm2 <= R_HI ** 2 + BAND_TOL):
            raise AssertionError(f"point {y} leaves the radius band")
        if not Fraction(9, 10) <= y[0] / y[1] <= Fraction(10, 9):
            raise AssertionError(f"point {y} leaves the angular range")
        g = _gap(y, prev)
        if not 0 < g <= norm2:
            raise AssertionError(f"gap {g} out of range at {y}")
        gaps.append(g)
        prev.append(y)
    return tuple(ys), tuple(gaps)


# ---------------------------------------------------------------- instance

def _U2(x):
    # gain of complete information under matching utility when x1, x2 < 1/3
    return x[0] + x[1]


@dataclass(frozen=True)
class RatioInstance:
    ys: tuple
    gaps: tuple
    t: tuple
    delta: Fraction
    xs: tuple          # full prior vectors (x1, x2, 1 - x1 - x2)
    xi: tuple
    masses: tuple
    experiments: tuple
    eps: Fraction

    @property
    def N(self) -> int:
        return len(self.ys)

    @property
    def env(self) -> MatchingEnvironment:
        return MatchingEnvironment(3)

    @property
    def grid(self) -> TypeGrid:
        return TypeGrid(self.xs, self.masses)

    @property
    def ratio_lb(self) -> Fraction:
        return Fraction(3, 2) * (1 - self.eps) * sum(self.gaps)


def build_ratio_instance(ys, eps, gaps=None) -> RatioInstance:
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    ys = tuple((Fraction(a), Fraction(b)) for a, b in ys)
    if gaps is None:
        prev, gaps = [(Fraction(0), Fraction(0))], []
        for y in ys:
            gaps.append(_gap(y, prev))
            prev.append(y)
    gaps = tuple(gaps)
    if any(_U2(y) == 0 for y in ys):
        raise ValueError("a point has zero gain")
    t = [Fraction(1)]
    for k in range(1, len(ys)):
        grow = CUSHION * t[-1] * gaps[k] * _U2(ys[k - 1]) / (gaps[k - 1] * _U2(ys[k]))
        t.append(max(t[-1] / eps, grow))
    delta = Fraction(1, 2) / max(tk / g for tk, g in zip(t, gaps))
    xs, xi = [], []
    for y, tk, g in zip(ys, t, gaps):
        s = delta * tk / g
        x1, x2 = s * y[0], s * y[1]
        xs.append((x1, x2, 1 - x1 - x2))
        xi.append(_U2((x1, x2)))
    if any(b <= a for a, b in zip(xi, xi[1:])):
        raise AssertionError("gains of the support are not increasing")
    masses = [xi[0] * (1 / a - 1 / b) for a, b in zip(xi, xi[1:])] + [xi[0] / xi[-1]]
    zero, one = Fraction(0), Fraction(1)
    exps = tuple(Experiment(((y[0], zero, 1 - y[0]), (zero, y[1], 1 - y[1]), (zero, zero, one))) for y in ys)
    return RatioInstance(ys, gaps, tuple(t), delta, tuple(xs), tuple(xi), tuple(masses), exps, eps)


def mechanism_from_instance(inst: RatioInstance, grid: TypeGrid | None = None) -> Mechanism:
    """Each type takes the option maximising obedient value minus price delta*t_q
    (ties go to the larger index)."""
    grid = grid or inst.grid
    prices = [inst.delta * tk for tk in inst.t]
    assign = []
    for x in grid.points:
        best = None
        for q, y in enumerate(inst.ys):
            val = x[0] * y[0] + x[1] * y[1] - prices[q]
            if best is None or val >= best[0]:
                best = (val, q)
        assign.append(best[1])
    return Mechanism(grid, tuple(zip(inst.experiments, prices)), tuple(assign))


@dataclass(frozen=True)
class MultistateReport:
    ic_ok: bool
    ir_violation: Fraction
    ic_violation: Fraction
    revenue: Fraction
    frev: Fraction
    frev_price: Fraction
    ratio: Fraction
    ratio_lb: Fraction
    ratio_integral: Fraction


def certify(inst: RatioInstance, mech: Mechanism | None = None, tol=Fraction(0)) -> MultistateReport:
    mech = mech or mechanism_from_instance(inst)
    env = inst.env
    rep = verify(mech, env, enumerate_sigma=True)
    if not rep.ok(tol):
        raise CertificationError(f"IC/IR failed: {rep.to_json()}")
    for k, q in enumerate(mech.assignment):
        if q < k:
            raise CertificationError(f"type {k} buys option {q} below its own index")
    rev = revenue(mech, env)
    price, fr = frev(env, mech.grid)
    if fr != inst.xi[0]:
        raise CertificationError(f"full-information revenue {fr} differs from xi_1 {inst.xi[0]}")
    return MultistateReport(True, rep.ir_violation, rep.ic_violation, rev, fr, price,
                            rev / fr, inst.ratio_lb, ratio_integral(mech, env))


def ratio_integral(mech: Mechanism, env, grid: TypeGrid | None = None):
    """Integral of 1/r(x) where r(x) is the smallest gain among types paying at
    least x; a step function over the distinct payments."""
    grid = grid or mech.grid
    U = gains(env, grid)
    pays = mech.payments
    levels = sorted({p for p in pays if p > 0})
    total, last = 0 * levels[0] if levels else 0, 0 * levels[0] if levels else 0
    for x in levels:
        r = min(u for u, p in zip(U, pays) if p >= x)
        if r <= 0:
            return math.inf
        total += (x - last) / r
        last = x
    return total


# ---------------------------------------------------------------- uniform prior on the simplex

def uniform_simplex_frev(G: int = 300) -> tuple:
    grid = simplex_grid(3, G)
    return frev(MatchingEnvironment(3), grid)


def uniform_simplex_curve(G: int = 300, prices=None) -> tuple:
    """(prices, p * Pr[U >= p]) on the simplex lattice of resolution G."""
    grid = simplex_grid(3, G)
    prices = np.linspace(0.0, 2 / 3, 201) if prices is None else np.asarray(prices, float)
    return prices, frev_curve(MatchingEnvironment(3), grid, prices)


def uniform_simplex_analytic(p):
    """p (1 - 3 p^2), exact for p <= 1/3."""
    p = np.asarray(p, float)
    return p * (1 - 3 * p * p)
