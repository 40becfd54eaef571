"""Exact construction of the environment where selling complete information
loses a log factor, with its windowed mechanism and exact checks.

All arithmetic is in Fractions; floats appear only in the final logarithms.
"""

from __future__ import annotations

import math
import warnings
from types import SimpleNamespace
from dataclasses import dataclass
from fractions import Fraction

from .env import PayoffMatrix, is_canonical, u_of
from .experiment import Experiment
from .mech import Menu, best_response, eps_ic_to_menu
from .numeric import PiecewiseLinear


class GateError(AssertionError):
    """A mathematical guarantee failed; carries the witness."""


@dataclass(frozen=True)
class LBConstruction:
    m: int
    eps: Fraction
    d: tuple          # d[0..m-2]
    theta: tuple      # theta[0..m-1], theta[0] = 0
    l: tuple          # l[0] = -1, l[i] = -eps^(2^i)
    h: tuple          # h[0..m-2]
    p: tuple          # p[1..m-2], p[0] unused (None)
    env: PayoffMatrix
    experiments: tuple  # experiments[j] for j = 1..m-2, index 0 unused

    @property
    def K(self) -> int:
        return self.m - 2

    @property
    def a(self) -> Fraction:
        return self.theta[1]

    @property
    def b(self) -> Fraction:
        return self.theta[self.m - 1]

    @property
    def c(self) -> Fraction:
        return 1 - self.u(self.a)

    def u(self, x) -> Fraction:
        return u_of(self.env, x)

    def ir_piece(self) -> PiecewiseLinear:
        xs = self.theta[1:]
        return PiecewiseLinear(xs, tuple(self.u(x) for x in xs))

    def cdf(self, x) -> Fraction:
        """Continuous part of F; the atom at b is handled separately."""
        return 1 - self.c / (1 - self.u(x))

    @property
    def atom(self) -> Fraction:
        return self.c / (1 - self.u(self.b))

    def line(self, j, a):
        """(slope, intercept) of the buyer's utility from option j when signal
        m is read as action a (0-based); signal 1 always means action 1."""
        u1, u2 = self.env.u
        lj = self.l[j]
        return (1 + lj) - lj * u1[a] - u2[a], u2[a] - self.p[j]

    def utility(self, j, a, x) -> Fraction:
        s, t = self.line(j, a)
        return s * x + t


def build(m: int, eps) -> LBConstruction:
    eps = Fraction(eps)
    if m < 3:
        raise ValueError("need m >= 3")
    if not 0 < eps < 1:
        raise ValueError("need 0 < eps < 1")
    if eps >= Fraction(1, 2 ** m):
        # the analytic guarantee assumes eps < 2^-m; the exact checks still
        # decide whether this particular instance works
        warnings.warn(f"eps = {eps} is not below 2^-{m}; relying on exact verification")
    E = 2 ** m
    d = [eps ** E] + [2 ** i * eps ** (E - 2 ** i) for i in range(1, m - 1)]
    theta = [Fraction(0)]
    for di in d:
        theta.append(theta[-1] + di)
    l = [Fraction(-1)] + [-(eps ** (2 ** i)) for i in range(1, m - 1)]
    h = [-l[i] * d[i] for i in range(m - 1)]
    p = [None] + [sum(h[:i], Fraction(0)) + theta[i] * l[i] for i in range(1, m - 1)]
    u1 = [Fraction(0)] * m
    u2 = [Fraction(0)] * m
    u1[0], u2[m - 1] = Fraction(1), Fraction(1)
    for i in range(1, m - 1):
        u2[m - 1 - i] = 1 - sum(h[:i], Fraction(0)) - theta[i] * l[i]
        u1[m - 1 - i] = u2[m - 1 - i] + l[i]
    env = PayoffMatrix((tuple(u1), tuple(u2)))
    if not (theta[-1] < 1 and is_canonical(env)):
        raise ValueError(f"eps = {eps} gives a degenerate construction for m = {m}")
    zero, one = Fraction(0), Fraction(1)
    exps = [None]
    for j in range(1, m - 1):
        row1 = [1 + l[j]] + [zero] * (m - 2) + [-l[j]]
        row2 = [zero] * (m - 1) + [one]
        exps.append(Experiment((tuple(row1), tuple(row2))))
    return LBConstruction(m, eps, tuple(d), tuple(theta), tuple(l), tuple(h), tuple(p), env, tuple(exps))


def delta_bound(c: LBConstruction) -> Fraction:
    return 7 * c.eps ** (2 ** c.m + 1)


# ---------------------------------------------------------------- mechanism M

def _window(c, i):
    return [j for j in (i, i - 1, i - 2) if j >= 1]


def _interval_of(c, x):
    """Index i with x in (theta_i, theta_{i+1}]; theta_1 itself joins interval 1."""
    for i in range(1, c.K + 1):
        if x <= c.theta[i + 1]:
            return i
    raise ValueError("type outside the support")


def _choose(c, i, x):
    """Utility-maximising (option, action) within the window of interval i;
    ties prefer the larger option index, then the obedient action."""
    best = None
    for j in _window(c, i):
        for a in range(c.m):
            val = c.utility(j, a, x)
            key = (val, j, a == c.m - 1, -a)
            if best is None or key > best[0]:
                best = (key, j, a)
    return best[1], best[2]


def _crossings(lines, lo, hi):
    pts = {lo, hi}
    for x in range(len(lines)):
        s1, t1 = lines[x]
        for y in range(x + 1, len(lines)):
            s2, t2 = lines[y]
            if s1 != s2:
                z = (t2 - t1) / (s1 - s2)
                if lo < z < hi:
                    pts.add(z)
    return sorted(pts)


def _relabel(c, j, a) -> Experiment:
    m = c.m
    row1 = [Fraction(0)] * m
    row2 = [Fraction(0)] * m
    row1[0] += 1 + c.l[j]
    row1[a] += -c.l[j]
    row2[a] += 1
    return Experiment((tuple(row1), tuple(row2)))


@dataclass(frozen=True)
class WindowedMechanism:
    """Assignment on the continuous support [theta_1, theta_{m-1}].

    ``segments`` are (lo, hi, option j, action a) on which the choice is
    constant in the open interval; ``choice`` gives the exact assignment at
    any point.  Options recommend the chosen action on the second signal, so
    obeying the recommendation is the buyer's chosen behaviour."""

    construction: LBConstruction
    segments: tuple

    def choice(self, x):
        c = self.construction
        return _choose(c, _interval_of(c, x), x)

    def payment(self, x) -> Fraction:
        return self.construction.p[self.choice(x)[0]]

    @property
    def options(self) -> tuple:
        c = self.construction
        used = sorted({(j, a) for _, _, j, a in self.segments} | {self.choice(c.b)})
        return tuple((_relabel(c, j, a), c.p[j]) for j, a in used)

    @property
    def base_options(self) -> tuple:
        c = self.construction
        return tuple((c.experiments[j], c.p[j]) for j in range(1, c.K + 1))


def mechanism_M(c: LBConstruction) -> WindowedMechanism:
    segs = []
    for i in range(1, c.K + 1):
        lo, hi = c.theta[i], c.theta[i + 1]
        lines = [c.line(j, a) for j in _window(c, i) for a in range(c.m)]
        pts = _crossings(lines, lo, hi)
        for x0, x1 in zip(pts, pts[1:]):
            j, a = _choose(c, i, (x0 + x1) / 2)
            if segs and segs[-1][2:] == (j, a) and segs[-1][1] == x0:
                segs[-1] = (segs[-1][0], x1, j, a)
            else:
                segs.append((x0, x1, j, a))
    return WindowedMechanism(c, tuple(segs))


# ---------------------------------------------------------------- verification

def verify_lb(c: LBConstruction, M: WindowedMechanism, raise_on_fail=True):
    """Exact delta-IC and IR over the continuous support.

    Every utility is affine in theta on each interval, so differences are
    maximised at interval ends or crossing points; those are all checked,
    with each interval evaluated under its own window (right limits at the
    left end)."""
    all_lines = [(j, a) for j in range(1, c.K + 1) for a in range(c.m)]
    delta, ir_ok = Fraction(0), True
    witness, ir_witness = None, None
    for i in range(1, c.K + 1):
        lo, hi = c.theta[i], c.theta[i + 1]
        lines = [c.line(j, a) for j, a in all_lines]
        lines += [(c.env.u[0][k] - c.env.u[1][k], c.env.u[1][k]) for k in range(c.m)]
        for x in _crossings(lines, lo, hi):
            j, a = _choose(c, i, x)
            truth = c.utility(j, a, x)
            dev = max(c.utility(jj, aa, x) for jj, aa in all_lines)
            if dev - truth > delta:
                delta, witness = dev - truth, x
            if truth < c.u(x):
                ir_ok, ir_witness = False, x
    bound = delta_bound(c)
    if raise_on_fail and (delta > bound or not ir_ok):
        raise GateError(f"delta {delta} (bound {bound}) at {witness}; IR ok {ir_ok} at {ir_witness}")
    return delta, ir_ok


def revenue_M(c: LBConstruction, M: WindowedMechanism) -> Fraction:
    rev = Fraction(0)
    for lo, hi, j, _ in M.segments:
        rev += c.p[j] * (c.cdf(hi) - c.cdf(lo))
    return rev + c.p[M.choice(c.b)[0]] * c.atom


def frev_exact(c: LBConstruction) -> Fraction:
    """Best complete-information price; gains 1 - u(theta) increase on the
    support, so the kinks and the atom give every candidate."""
    best = Fraction(0)
    for x in c.theta[1:]:
        price = 1 - c.u(x)
        if x == c.b:
            tail = c.atom
        else:
            tail = 1 - c.cdf(x)
        best = max(best, price * tail)
    return best


def _log_ratio(num: Fraction, den: Fraction) -> float:
    r = Fraction(num) / Fraction(den)
    return math.log(r.numerator) - math.log(r.denominator)


@dataclass(frozen=True)
class LBSummary:
    revenue: Fraction
    frev: Fraction
    surplus: float
    surplus_ratio: float
    revenue_ratio: float


def revenue_and_ratio(c: LBConstruction, M: WindowedMechanism, check=True) -> LBSummary:
    rev = revenue_M(c, M)
    fr = frev_exact(c)
    ratio = _log_ratio(1 - c.u(c.b), 1 - c.u(c.a))
    surplus = float(fr) * ratio
    rev_ratio = float(rev / fr)
    if check:
        if rev_ratio < ratio / 9 - 1e-12:
            raise GateError(f"Rev/FRev {rev_ratio} below surplus ratio / 9 = {ratio / 9}")
        if ratio < math.log(2) * (c.m - 2) - 1e-12:
            raise GateError(f"surplus ratio {ratio} below ln2 (m - 2)")
    return LBSummary(rev, fr, surplus, ratio, rev_ratio)


# ---------------------------------------------------------------- menu

def lb_menu(c: LBConstruction, M: WindowedMechanism, eta=Fraction(1, 2)) -> Menu:
    return eps_ic_to_menu(SimpleNamespace(options=M.base_options), Fraction(eta), delta_bound(c))


def menu_revenue(c: LBConstruction, menu: Menu) -> Fraction:
    """Exact revenue of a menu of binary experiments under the construction's
    distribution, with buyers best-responding (outside option u(theta))."""
    lines = []
    for E, price in menu.options:
        if any(E.pi[i][k] != 0 for i in range(2) for k in range(1, c.m - 1)):
            raise ValueError("menu experiments must leave the middle signals unused")
        # value of E is the max over (first-signal action, last-signal action)
        for a0 in range(c.m):
            for a1 in range(c.m):
                s, t = _option_line(c, E, a0, a1)
                lines.append((s, t - price))
    lines += [(c.env.u[0][k] - c.env.u[1][k], c.env.u[1][k]) for k in range(c.m)]
    pts = sorted(set(_crossings(lines, c.a, c.b)) | set(c.theta[1:]))
    prices = [p for _, p in menu.options]
    rev = Fraction(0)
    for x0, x1 in zip(pts, pts[1:]):
        k, _ = best_response(menu, c.env, (x0 + x1) / 2)
        if k is not None:
            rev += prices[k] * (c.cdf(x1) - c.cdf(x0))
    k, _ = best_response(menu, c.env, c.b)
    if k is not None:
        rev += prices[k] * c.atom
    return rev


def _option_line(c, E, a0, a1):
    # utility of reading the first and last signal as actions a0, a1 (middle signals unused)
    u1, u2 = c.env.u
    pi = E.pi
    s1 = pi[0][0] * u1[a0] + pi[0][-1] * u1[a1]
    s2 = pi[1][0] * u2[a0] + pi[1][-1] * u2[a1]
    return s1 - s2, s2
