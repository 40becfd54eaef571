"""Payoff environments, canonical form and the IR curve."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .numeric import Line, PiecewiseLinear, envelope_pieces, is_exact, rat_str, upper_envelope

ORDER_TOL = 1e-12
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class PayoffMatrix:
    u: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.u)
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("payoff matrix must be a non-empty rectangle")
        object.__setattr__(self, "u", rows)

    @property
    def n(self) -> int:
        return len(self.u)

    @property
    def m(self) -> int:
        return len(self.u[0])

    # canonical binary shorthands
    @property
    def u11(self):
        return self.u[0][0]

    @property
    def u2m(self):
        return self.u[1][-1]

    def to_json(self) -> dict:
        def conv(v):
            return rat_str(v) if isinstance(v, Fraction) else float(v)
        return {"n": self.n, "m": self.m, "u": [[conv(v) for v in r] for r in self.u]}


@dataclass(frozen=True)
class MatchingEnvironment:
    """n states, n actions, payoff 1 when the action matches the state."""

    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("matching environment needs n >= 2")

    @property
    def n(self) -> int:
        return self.size

    @property
    def m(self) -> int:
        return self.size

    @property
    def u(self) -> tuple:
        return tuple(tuple(1 if i == j else 0 for j in range(self.size)) for i in range(self.size))

    def to_json(self) -> dict:
        return {"matching": self.size}


@dataclass(frozen=True)
class TransformLog:
    """How a raw binary matrix was mapped to canonical form.

    ``canonical[i][j] = (raw[s(i)][permutation[j]] - shift[s(i)]) / scale``
    where ``s`` swaps the two states when ``swapped``.  shift1/shift2 refer to
    the raw state labels.  Revenues in canonical units times ``scale`` give raw
    revenues.
    """

    shift1: object = 0
    shift2: object = 0
    scale: object = 1
    permutation: tuple = ()
    swapped: bool = False

    def is_identity(self) -> bool:
        return (self.shift1 == 0 and self.shift2 == 0 and self.scale == 1 and not self.swapped
                and tuple(self.permutation) == tuple(range(len(self.permutation))))

    def to_json(self) -> dict:
        def conv(v):
            return rat_str(v) if isinstance(v, Fraction) else float(v)
        return {"shift1": conv(self.shift1), "shift2": conv(self.shift2), "scale": conv(self.scale),
                "permutation": list(self.permutation), "swapped": self.swapped}


@dataclass(frozen=True)
class IRCurve:
    curve: PiecewiseLinear
    piece_slopes: tuple = field(default=())


def action_lines(env) -> list:
    """Line of action j: theta * u1j + (1 - theta) * u2j."""
    return [Line(env.u[0][j] - env.u[1][j], env.u[1][j]) for j in range(env.m)]


def canonicalize(raw) -> tuple:
    if not isinstance(raw, PayoffMatrix):
        raw = PayoffMatrix(raw)
    if raw.n != 2:
        raise ValueError("canonicalize needs a binary-state matrix")
    if raw.m < 2:
        raise ValueError("need at least two actions")
    exact = all(is_exact(v) for r in raw.u for v in r)
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)

    lines = action_lines(raw)
    idx, _ = envelope_pieces(lines, (zero, one))
    if len(idx) < 2:
        raise ValueError("degenerate environment")
    # envelope runs left (state 2 likely) to right (state 1 likely); action 1 is the rightmost piece
    perm = list(reversed(idx))
    r1 = [raw.u[0][j] for j in perm]
    r2 = [raw.u[1][j] for j in perm]
    shift1, shift2 = r1[-1], r2[0]
    r1 = [v - shift1 for v in r1]
    r2 = [v - shift2 for v in r2]
    swapped = False
    if r1[0] < r2[-1]:
        swapped = True
        r1, r2 = list(reversed(r2)), list(reversed(r1))
        perm = list(reversed(perm))
    scale = r2[-1]
    r1 = [v / scale for v in r1]
    r2 = [v / scale for v in r2]
    tol = 0 if exact else ORDER_TOL
    for a, b in zip(r1, r1[1:]):
        if not a > b + tol:
            raise ValueError("state-1 payoffs not strictly decreasing after canonicalization")
    for a, b in zip(r2, r2[1:]):
        if not b > a + tol:
            raise ValueError("state-2 payoffs not strictly increasing after canonicalization")
    log = TransformLog(shift1=shift1, shift2=shift2, scale=scale,
                       permutation=tuple(perm), swapped=swapped)
    return PayoffMatrix((tuple(r1), tuple(r2))), log


def is_canonical(env, tol=ORDER_TOL) -> bool:
    if env.n != 2 or env.m < 2:
        return False
    r1, r2 = env.u
    ok = abs(r1[-1]) <= tol and abs(r2[0]) <= tol and abs(r2[-1] - 1) <= tol and r1[0] >= r2[-1] - tol
    ok = ok and all(a > b + (0 if is_exact(a) else tol) for a, b in zip(r1, r1[1:]))
    ok = ok and all(b > a + (0 if is_exact(a) else tol) for a, b in zip(r2, r2[1:]))
    return ok


def slope(env, k: int):
    """Slope of the k-th IR piece (1-based, left to right): u_{1,m+1-k} - u_{2,m+1-k}."""
    j = env.m - k
    return env.u[0][j] - env.u[1][j]


def ir_curve(env) -> IRCurve:
    exact = all(is_exact(v) for r in env.u for v in r)
    dom = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    curve = upper_envelope(action_lines(env), dom)
    return IRCurve(curve=curve, piece_slopes=tuple(curve.slopes()))


def u_of(env, theta):
    """Best uninformed payoff at prior theta (probability of state 1)."""
    if theta < 0 or theta > 1:
        raise ValueError("theta outside [0, 1]")
    return max(theta * env.u[0][j] + (1 - theta) * env.u[1][j] for j in range(env.m))


def type_vector(env, theta) -> tuple:
    """Full prior vector; scalars mean P(state 1) in binary environments and
    a vector of length n-1 leaves the last coordinate implied."""
    if not hasattr(theta, "__len__"):
        if env.n != 2:
            raise ValueError("scalar type needs a binary environment")
        vec = (theta, 1 - theta)
    else:
        vec = tuple(theta)
        if len(vec) == env.n - 1:
            vec = vec + (1 - sum(vec),)
        elif len(vec) != env.n:
            raise ValueError("type has the wrong dimension")
    exact = all(is_exact(v) for v in vec)
    tol = 0 if exact else SIMPLEX_TOL
    if any(v < -tol for v in vec) or abs(sum(vec) - 1) > tol:
        raise ValueError("type outside the simplex")
    return vec


def gain_of(env, theta):
    """Surplus gain from full information, U(theta)."""
    vec = type_vector(env, theta)
    u = env.u
    informed = sum(vec[i] * max(u[i]) for i in range(env.n))
    blind = max(sum(vec[i] * u[i][j] for i in range(env.n)) for j in range(env.m))
    return informed - blind
