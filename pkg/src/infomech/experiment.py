"""Experiments, their valuations, and the scalar q form of semi-informative ones."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .env import type_vector
from .numeric import is_exact, rat_str

ROW_TOL = 1e-12
PATTERN_TOL = 1e-12


@dataclass(frozen=True)
class Experiment:
    """pi[i][k] = probability of signal k in state i."""

    pi: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.pi)
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("experiment must be a non-empty rectangle")
        for r in rows:
            exact = all(is_exact(v) for v in r)
            tol = 0 if exact else ROW_TOL
            if any(v < -tol for v in r):
                raise ValueError("negative signal probability")
            if abs(sum(r) - 1) > tol:
                raise ValueError("experiment rows must sum to 1")
        object.__setattr__(self, "pi", rows)

    @property
    def n(self) -> int:
        return len(self.pi)

    @property
    def m(self) -> int:
        return len(self.pi[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.pi, dtype=float)

    def to_json(self) -> dict:
        def conv(v):
            return rat_str(v) if isinstance(v, Fraction) else float(v)
        return {"pi": [[conv(v) for v in r] for r in self.pi]}


def full_information(n: int, exact=False) -> Experiment:
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    return Experiment(tuple(tuple(one if i == k else zero for k in range(n)) for i in range(n)))


def _check_dims(env, E):
    if E.n != env.n or E.m != env.m:
        raise ValueError("experiment and environment dimensions differ")


def signal_payoffs(env, theta, E) -> list:
    """payoff[k][j]: joint weight of signal k with action j, sum_i theta_i pi_ik u_ij."""
    _check_dims(env, E)
    vec = type_vector(env, theta)
    u, pi = env.u, E.pi
    return [[sum(vec[i] * pi[i][k] * u[i][j] for i in range(env.n)) for j in range(env.m)]
            for k in range(E.m)]


def value_sigma(env, theta, E, sigma) -> object:
    sigma = tuple(sigma)
    if len(sigma) != E.m or any(not 0 <= s < env.m for s in sigma):
        raise ValueError("interpretation must map every signal to an action")
    pay = signal_payoffs(env, theta, E)
    return sum(pay[k][sigma[k]] for k in range(E.m))


def value_star(env, theta, E) -> object:
    """Value when every recommendation is obeyed (identity interpretation)."""
    return value_sigma(env, theta, E, range(E.m))


def value_best(env, theta, E) -> tuple:
    pay = signal_payoffs(env, theta, E)
    sigma = []
    for row in pay:
        best = 0
        for j in range(1, len(row)):
            if row[j] > row[best]:
                best = j
        sigma.append(best)
    return sum(pay[k][sigma[k]] for k in range(E.m)), tuple(sigma)


def all_interpretations(m: int):
    return itertools.product(range(m), repeat=m)


# ---------------------------------------------------------------- q form

def _is_zero(v):
    return v == 0 if is_exact(v) else abs(v) <= PATTERN_TOL


def _is_one(v):
    return v == 1 if is_exact(v) else abs(v - 1) <= PATTERN_TOL


def is_semi_informative(E) -> bool:
    if E.n != 2 or E.m < 2:
        return False
    middle_empty = all(_is_zero(E.pi[i][k]) for i in range(2) for k in range(1, E.m - 1))
    return middle_empty and (_is_one(E.pi[0][0]) or _is_one(E.pi[1][-1]))


def q_of(E, env):
    if not is_semi_informative(E):
        raise ValueError("experiment is not semi-informative")
    return E.pi[0][0] * env.u11 - E.pi[1][-1] * env.u2m


def experiment_of(q, env) -> Experiment:
    u11, u2m, m = env.u11, env.u2m, env.m
    tol = 0 if is_exact(q) else PATTERN_TOL
    if q < -u2m - tol or q > u11 + tol:
        raise ValueError("q outside [-u2m, u11]")
    one, zero = (Fraction(1), Fraction(0)) if is_exact(q) and is_exact(u11) else (1.0, 0.0)
    pad = [zero] * (m - 2)
    if q <= u11 - u2m:
        p11 = min(max((q + u2m) / u11, zero), one)
        return Experiment(((p11, *pad, one - p11), (zero, *pad, one)))
    p2m = min(max((u11 - q) / u2m, zero), one)
    return Experiment(((one, *pad, zero), (one - p2m, *pad, p2m)))


def value_star_q(q, theta, env):
    return theta * q + env.u2m + min(env.u11 - env.u2m - q, 0)


# ---------------------------------------------------------------- transforms

def to_fully_recommending(env, E, price) -> tuple:
    """Move all mass off the middle signals without changing obedient value."""
    _check_dims(env, E)
    u = env.u
    m = env.m
    pi = [list(r) for r in E.pi]
    span1 = u[0][0] - u[0][m - 1]
    span2 = u[1][m - 1] - u[1][0]
    for ell in range(1, m - 1):
        eps = pi[0][ell]
        if eps:
            pi[0][0] += (u[0][ell] - u[0][m - 1]) * eps / span1
            pi[0][m - 1] += (u[0][0] - u[0][ell]) * eps / span1
            pi[0][ell] = 0 * eps
        eps = pi[1][ell]
        if eps:
            pi[1][0] += (u[1][m - 1] - u[1][ell]) * eps / span2
            pi[1][m - 1] += (u[1][ell] - u[1][0]) * eps / span2
            pi[1][ell] = 0 * eps
    return Experiment(tuple(tuple(r) for r in pi)), price


def to_semi_informative(env, E, price) -> tuple:
    """Push a fully-recommending experiment to pi11 = 1 or pi2m = 1, raising
    the price by exactly the value added so net obedient utility is unchanged."""
    _check_dims(env, E)
    m = env.m
    for i in range(2):
        for k in range(1, m - 1):
            if not _is_zero(E.pi[i][k]):
                raise ValueError("experiment must be fully recommending")
    u11, u2m = env.u11, env.u2m
    p11, p2m = E.pi[0][0], E.pi[1][m - 1]
    zero = 0 * p11
    pad = [zero] * (m - 2)
    if (1 - p11) * u11 <= (1 - p2m) * u2m:
        e1 = 1 - p11
        e2 = u11 / u2m * e1
        n11, n2m = 1 + zero, p2m + e2
        new_price = price + e2 * u2m
    else:
        e2 = 1 - p2m
        e1 = u2m / u11 * e2
        n11, n2m = p11 + e1, 1 + zero
        new_price = price + e1 * u11
    out = Experiment(((n11, *pad, 1 - n11), (1 - n2m, *pad, n2m)))
    return out, new_price
