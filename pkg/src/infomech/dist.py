"""Type distributions: finite grids and continuous families on [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .numeric import PiecewiseLinear, rat_str

MASS_TOL = 1e-12


@dataclass(frozen=True)
class TypeGrid:
    """Finite support with masses.  Binary types are scalars (prob. of state 1);
    multi-state types are rows of an (N, n) array."""

    points: object
    masses: object

    def __post_init__(self):
        pts, ms = self.points, self.masses
        exact = isinstance(ms, (list, tuple)) and all(isinstance(v, (int, Fraction)) for v in ms)
        if exact:
            ms = tuple(ms)
            pts = tuple(tuple(p) if hasattr(p, "__len__") else p for p in pts)
            if any(v < 0 for v in ms) or sum(ms) != 1:
                raise ValueError("masses must be nonnegative and sum to 1")
        else:
            pts = np.asarray(pts, dtype=float)
            ms = np.asarray(ms, dtype=float)
            if np.any(ms < -MASS_TOL) or abs(ms.sum() - 1) > MASS_TOL * max(1, len(ms)):
                raise ValueError("masses must be nonnegative and sum to 1")
            if pts.ndim == 1 and np.any(np.diff(pts) <= 0):
                raise ValueError("binary grid points must be strictly increasing")
        if len(pts) != len(ms) or len(ms) == 0:
            raise ValueError("points and masses must be non-empty and aligned")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)

    @property
    def exact(self) -> bool:
        return isinstance(self.masses, tuple)

    def __len__(self):
        return len(self.masses)

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, Fraction):
                return rat_str(v)
            if hasattr(v, "__len__"):
                return [conv(x) for x in v]
            return float(v)
        return {"grid": {"theta": [conv(p) for p in self.points], "mass": [conv(v) for v in self.masses]}}


@dataclass(frozen=True)
class ContinuousDist:
    """A distribution on [0, 1] described by vectorised cdf and pdf."""

    family: str
    cdf: Callable
    pdf: Callable
    params: dict = field(default_factory=dict)
    support: tuple = (0.0, 1.0)

    def to_json(self) -> dict:
        out = {"family": self.family}
        for k, v in self.params.items():
            out[k] = v.to_json() if hasattr(v, "to_json") else v
        return out


def uniform() -> ContinuousDist:
    return ContinuousDist("uniform",
                          cdf=lambda x: np.clip(np.asarray(x, float), 0.0, 1.0),
                          pdf=lambda x: np.ones_like(np.asarray(x, float)))


def exponential(lam: float) -> ContinuousDist:
    """Exponential(lam) restricted to [0, 1]."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    c = 1.0 / (-math.expm1(-lam))

    def cdf(x):
        x = np.clip(np.asarray(x, float), 0.0, 1.0)
        return c * -np.expm1(-lam * x)

    def pdf(x):
        return c * lam * np.exp(-lam * np.asarray(x, float))

    return ContinuousDist("exp", cdf, pdf, {"lambda": lam})


def normal(sigma2: float) -> ContinuousDist:
    """N(0, sigma2) restricted to [0, 1]."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    s = math.sqrt(2.0 * sigma2)
    z = 0.5 * math.erf(1.0 / s)
    erf = np.vectorize(math.erf, otypes=[float])

    def cdf(x):
        x = np.clip(np.asarray(x, float), 0.0, 1.0)
        return 0.5 * erf(x / s) / z

    def pdf(x):
        x = np.asarray(x, float)
        return np.exp(-x * x / (2 * sigma2)) / (math.sqrt(2 * math.pi * sigma2) * z)

    return ContinuousDist("normal", cdf, pdf, {"sigma2": sigma2})


def from_pdf(pdf: Callable, name="custom", resolution=200001) -> ContinuousDist:
    """Normalise an arbitrary positive density; cdf by fine cumulative trapezoid."""
    xs = np.linspace(0.0, 1.0, resolution)
    ys = np.asarray(pdf(xs), float)
    cum = np.concatenate([[0.0], np.cumsum((ys[1:] + ys[:-1]) * 0.5 * np.diff(xs))])
    total = cum[-1]
    if total <= 0:
        raise ValueError("density integrates to zero")
    cum /= total
    return ContinuousDist(name,
                          cdf=lambda x: np.interp(np.asarray(x, float), xs, cum),
                          pdf=lambda x: np.asarray(pdf(np.asarray(x, float)), float) / total)


def er_dist(h: PiecewiseLinear, a=None, b=None) -> ContinuousDist:
    """F(theta) = 1 - c / (1 - h(theta)) on [a, b), c = 1 - h(a), with the
    leftover mass as an atom at b so that F(b) = 1."""
    a = h.domain[0] if a is None else a
    b = h.domain[1] if b is None else b
    if not 0 < a < b < 1:
        raise ValueError("need 0 < a < b < 1")
    if any(s >= 0 for s in h.slopes()):
        raise ValueError("h must be strictly decreasing")
    xs = np.asarray(h.xs, float)
    ys = np.asarray(h.ys, float)
    if np.any(ys <= 0) or np.any(ys >= 1):
        raise ValueError("h must take values in (0, 1)")
    c = 1.0 - float(h(a))
    slopes = np.diff(ys) / np.diff(xs)

    def cdf(x):
        x = np.asarray(x, float)
        hv = np.interp(x, xs, ys)
        out = 1.0 - c / (1.0 - hv)
        out = np.where(x < a, 0.0, out)
        return np.where(x >= b, 1.0, out)

    def pdf(x):
        x = np.asarray(x, float)
        hv = np.interp(x, xs, ys)
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
        out = -c * slopes[k] / (1.0 - hv) ** 2
        return np.where((x < a) | (x >= b), 0.0, out)

    return ContinuousDist("er", cdf, pdf, {"h": h, "a": float(a), "b": float(b)}, support=(float(a), float(b)))


def er_atom(h: PiecewiseLinear, b=None) -> float:
    b = h.domain[1] if b is None else b
    c = 1.0 - float(h(h.domain[0]))
    return c / (1.0 - float(h(b)))


def discretize(dist: ContinuousDist, N: int = 400) -> TypeGrid:
    """Points (i-1)/N carrying mass F(i/N) - F((i-1)/N), i = 1..N."""
    if N < 2:
        raise ValueError("N must be at least 2")
    edges = np.arange(N + 1) / N
    F = np.asarray(dist.cdf(edges), float)
    F[0], F[-1] = 0.0, 1.0
    masses = np.maximum(np.diff(F), 0.0)
    masses /= masses.sum()
    return TypeGrid(edges[:-1], masses)


def point_grid(points, masses) -> TypeGrid:
    return TypeGrid(points, masses)


def simplex_grid(n: int = 3, G: int = 1) -> TypeGrid:
    """Uniform masses on the lattice {(i/G, j/G, 1 - i/G - j/G)}."""
    if n != 3:
        raise ValueError("only the 3-state simplex is supported")
    if G < 1:
        raise ValueError("G must be at least 1")
    ij = [(i, j) for i in range(G + 1) for j in range(G + 1 - i)]
    pts = np.array([(i / G, j / G, (G - i - j) / G) for i, j in ij])
    return TypeGrid(pts, np.full(len(pts), 1.0 / len(pts)))
