"""Random instances shared by the property and acceptance tests."""

from fractions import Fraction

import numpy as np

from infomech.dist import TypeGrid
from infomech.env import PayoffMatrix, canonicalize, is_canonical
from infomech.mech import mechanism_from_q


def random_canonical_env(rng, m, exact=False):
    """Canonical env whose IR curve has exactly m pieces: pick increasing
    slopes and kinks, build the curve's lines, then canonicalize."""
    while True:
        slopes = np.sort(rng.uniform(-2, 2, m))
        kinks = np.sort(rng.uniform(0.05, 0.95, m - 1))
        if np.min(np.diff(slopes)) < 0.05 or np.min(np.diff(np.r_[0, kinks, 1])) < 0.05:
            continue
        if exact:
            slopes = [Fraction(round(s * 1000), 1000) for s in slopes]
            kinks = [Fraction(round(k * 1000), 1000) for k in kinks]
        intercepts = [1 + 0 * slopes[0]]
        for k in range(1, m):
            # next line meets the previous one at kink k-1
            x = kinks[k - 1]
            intercepts.append(intercepts[-1] + (slopes[k - 1] - slopes[k]) * x)
        u1 = [b + s for s, b in zip(slopes, intercepts)]
        u2 = list(intercepts)
        env, _ = canonicalize(PayoffMatrix((tuple(u1), tuple(u2))))
        if env.m == m and is_canonical(env):
            return env


def random_grid(rng, N):
    w = rng.dirichlet(np.ones(N))
    return TypeGrid(np.arange(N) / N, w)


def random_ir_q(rng, env, N, extra_lines=2):
    """Monotone q whose running utility u2m + int q is a convex curve above
    the IR curve: the envelope of the action lines plus random lines under
    the chord, differenced on the grid."""
    u11, u2m = float(env.u11), float(env.u2m)
    lines = [(float(env.u[0][j]) - float(env.u[1][j]), float(env.u[1][j])) for j in range(env.m)]
    for _ in range(extra_lines):
        a0 = rng.uniform(0, u2m)
        a1 = rng.uniform(0, u11)
        lines.append((a1 - a0, a0))
    x = np.arange(N + 1) / N
    W = np.max([s * x + t for s, t in lines], axis=0)
    return list(np.diff(W) * N)


def random_ir_mechanism(rng, env, N=120, extra_lines=2):
    grid = random_grid(rng, N)
    q = random_ir_q(rng, env, N, extra_lines)
    return mechanism_from_q(q, env, grid, tol=1e-9)

