"""Exact and floating-point numeric helpers.

Rationals are Python's ``fractions.Fraction`` (arbitrary-precision, always
reduced).  Piecewise-linear functions and line envelopes are generic over the
number type: feed them Fractions and every breakpoint stays exact, feed them
floats and breakpoints closer than ``1e-12 * (b - a)`` are merged.
"""

from __future__ import annotations

import bisect
import os
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC

import numpy as np

Rational = Fraction

BREAK_TOL = 1e-12


def rat(num, den=1) -> Fraction:
    """Build a reduced rational; accepts ints, Fractions or "p/q" strings."""
    if isinstance(num, str):
        return Fraction(num.strip()) / Fraction(den)
    if den == 0:
        raise ZeroDivisionError("zero denominator")
    return Fraction(num, den)


def rat_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def is_exact(x) -> bool:
    return isinstance(x, _RationalABC)


def worker_count() -> int:
    """Worker cap from INFOMECH_THREADS (default 1)."""
    raw = os.environ.get("INFOMECH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Line:
    slope: object
    intercept: object

    def __call__(self, x):
        return self.slope * x + self.intercept


def _cross(l1: Line, l2: Line):
    # abscissa where two non-parallel lines meet
    return (l2.intercept - l1.intercept) / (l1.slope - l2.slope)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous PWL function given by breakpoints ``xs`` and values ``ys``."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs, ys = tuple(self.xs), tuple(self.ys)
        if len(xs) != len(ys):
            raise ValueError("breakpoints and values differ in length")
        if len(xs) < 2:
            raise ValueError("need at least two breakpoints")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def domain(self):
        return self.xs[0], self.xs[-1]

    @property
    def pieces(self) -> int:
        return len(self.xs) - 1

    def slopes(self) -> list:
        return [(y1 - y0) / (x1 - x0) for x0, x1, y0, y1 in
                zip(self.xs, self.xs[1:], self.ys, self.ys[1:])]

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return np.interp(x, np.asarray(self.xs, float), np.asarray(self.ys, float))
        a, b = self.domain
        if x < a or x > b:
            raise ValueError(f"{x} outside domain [{a}, {b}]")
        k = bisect.bisect_right(self.xs, x) - 1
        k = min(max(k, 0), len(self.xs) - 2)
        x0, x1 = self.xs[k], self.xs[k + 1]
        y0, y1 = self.ys[k], self.ys[k + 1]
        if x == x0:
            return y0
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def is_convex(self, tol=0.0) -> bool:
        s = self.slopes()
        return all(b >= a - tol for a, b in zip(s, s[1:]))

    def to_json(self) -> dict:
        def conv(v):
            return rat_str(v) if isinstance(v, Fraction) else float(v)
        return {"x": [conv(v) for v in self.xs], "y": [conv(v) for v in self.ys]}

    @classmethod
    def from_json(cls, obj) -> "PiecewiseLinear":
        def parse(v):
            return Fraction(v) if isinstance(v, str) else float(v)
        return cls(tuple(parse(v) for v in obj["x"]), tuple(parse(v) for v in obj["y"]))


def envelope_pieces(lines, domain):
    """Upper envelope of ``lines`` on ``domain``.

    Returns ``(indices, xs)``: the input index of the line owning each piece,
    left to right, and the breakpoints (len(indices) + 1 of them).  Lines
    that touch the envelope in a single point are dropped.
    """
    lines = list(lines)
    if not lines:
        raise ValueError("no lines")
    a, b = domain
    if not a < b:
        raise ValueError("empty domain")
    exact = all(is_exact(v) for ln in lines for v in (ln.slope, ln.intercept)) and is_exact(a) and is_exact(b)
    tol = 0 if exact else BREAK_TOL * (b - a)

    # slope ascending; for equal slopes keep the larger intercept (then lower index)
    order = sorted(range(len(lines)), key=lambda i: (lines[i].slope, -lines[i].intercept, i))
    dedup = []
    for i in order:
        if dedup and lines[dedup[-1]].slope == lines[i].slope:
            continue
        dedup.append(i)

    hull = []
    for i in dedup:
        li = lines[i]
        while hull:
            top = lines[hull[-1]]
            if len(hull) == 1:
                break
            prev = lines[hull[-2]]
            # top is useless if li overtakes prev no later than top does
            if _cross(prev, li) <= _cross(prev, top) + tol:
                hull.pop()
            else:
                break
        hull.append(i)

    # breakpoints on the real line, then clip to the domain
    cuts = [_cross(lines[p], lines[q]) for p, q in zip(hull, hull[1:])]
    idx, xs = [], [a]
    for k, i in enumerate(hull):
        lo = cuts[k - 1] if k > 0 else None
        hi = cuts[k] if k < len(cuts) else None
        left = a if lo is None or lo < a else lo
        right = b if hi is None or hi > b else hi
        if right - left > tol:
            idx.append(i)
            xs.append(right)
    xs[-1] = b
    if not idx:
        # every line lives on a sliver; fall back to the best at the midpoint
        mid = (a + b) / 2
        best = max(range(len(lines)), key=lambda i: (lines[i](mid), -i))
        return [best], [a, b]
    return idx, xs


def upper_envelope(lines, domain) -> PiecewiseLinear:
    lines = list(lines)
    idx, xs = envelope_pieces(lines, domain)
    ys = [lines[idx[0]](xs[0])] + [lines[i](x) for i, x in zip(idx, xs[1:])]
    return PiecewiseLinear(tuple(xs), tuple(ys))


def lower_convex_hull(points) -> PiecewiseLinear:
    """Greatest convex minorant of the interpolant through ``points``."""
    pts = [(x, y) for x, y in points]
    if len(pts) < 2:
        raise ValueError("need at least two points")
    for (x0, _), (x1, _) in zip(pts, pts[1:]):
        if x1 == x0:
            raise ValueError("duplicate abscissa")
        if x1 < x0:
            raise ValueError("abscissae must be increasing")
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (ox, oy), (ax, ay) = hull[-2], hull[-1]
            # drop the middle point unless it turns strictly left
            if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return PiecewiseLinear(tuple(p[0] for p in hull), tuple(p[1] for p in hull))


def lower_hull_indices(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vertex indices of the lower convex hull for increasing float ``x``."""
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            if (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o]) <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def integrate_pwl(f: PiecewiseLinear, a, b):
    """Exact integral of ``f`` over ``[a, b]``."""
    if a > b:
        raise ValueError("a > b")
    lo, hi = f.domain
    if a < lo or b > hi:
        raise ValueError("interval outside domain")
    if a == b:
        return 0 * f.ys[0]
    xs = [a] + [x for x in f.xs if a < x < b] + [b]
    total = 0 * f.ys[0]
    for x0, x1 in zip(xs, xs[1:]):
        total += (f(x0) + f(x1)) * (x1 - x0) / 2
    return total
