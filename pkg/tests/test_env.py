from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from generators import random_canonical_env
from infomech.env import (MatchingEnvironment, PayoffMatrix, canonicalize, gain_of, ir_curve, is_canonical,
                          slope, u_of)
from infomech.lowerbound import build

TABLE2 = PayoffMatrix(((1, 0.8, 0.6, 0), (0, 0.5, 0.8, 1)))
TABLE2_EXACT = PayoffMatrix(((F(1), F(4, 5), F(3, 5), F(0)), (F(0), F(1, 2), F(4, 5), F(1))))


def envelope_members(u, n=10_001):
    """Actions that are the strict maximum somewhere on a fine grid."""
    th = np.linspace(0, 1, n)
    vals = np.array([th * u[0][j] + (1 - th) * u[1][j] for j in range(len(u[0]))])
    if len(vals) == 1:
        return {0}
    top = vals.max(axis=0)
    return {j for j in range(len(u[0])) if np.any((vals[j] >= top - 1e-15)
                                                  & (np.sort(vals, axis=0)[-2] < top - 1e-12))}


def test_table2_is_already_canonical():
    env, log = canonicalize(TABLE2_EXACT)
    assert env == TABLE2_EXACT and log.is_identity()
    assert is_canonical(TABLE2)


def test_dominated_action_removed():
    raw = ((1, 0.5, 0), (0, 0.25, 1))
    assert envelope_members(raw) == {0, 2}
    env, log = canonicalize(PayoffMatrix(raw))
    assert env.u == ((1, 0), (0, 1))
    assert sorted(log.permutation) == [0, 2]


def test_scaling_recorded():
    env, log = canonicalize(PayoffMatrix(((2, 0), (0, 2))))
    assert env.u == ((1, 0), (0, 1))
    assert log.scale == 2


def test_state_swap_and_shift():
    # state 2 has the bigger sure payoff, so the states are swapped
    env, log = canonicalize(PayoffMatrix(((F(2), F(1)), (F(1), F(5)))))
    assert log.swapped and is_canonical(env)
    assert env.u11 >= env.u2m == 1


def test_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        canonicalize(PayoffMatrix(((1, 0.5), (1, 0.5))))


def test_non_binary_rejected():
    with pytest.raises(ValueError):
        canonicalize(PayoffMatrix(((1, 0), (0, 1), (0.5, 0.5))))


def test_log_json_fields():
    _, log = canonicalize(PayoffMatrix(((2, 0), (0, 2))))
    assert set(log.to_json()) == {"shift1", "shift2", "scale", "permutation", "swapped"}


def test_table2_ir_slopes():
    assert ir_curve(TABLE2_EXACT).piece_slopes == (-1, F(-1, 5), F(3, 10), 1)
    assert [slope(TABLE2_EXACT, k) for k in range(1, 5)] == [-1, F(-1, 5), F(3, 10), 1]


def test_matching_two_kink():
    curve = ir_curve(PayoffMatrix(((F(1), F(0)), (F(0), F(1))))).curve
    assert curve.xs == (0, F(1, 2), 1)


def test_lower_bound_interior_piece():
    c = build(3, F(1, 10))
    curve = ir_curve(c.env)
    assert curve.piece_slopes == (-1, F(-1, 100), 1)
    assert curve.curve.xs[1] == c.theta[1] and curve.curve.xs[2] > c.theta[2]


def test_u_of_examples():
    assert u_of(TABLE2, 0) == 1
    assert u_of(TABLE2_EXACT, F(1, 4)) == F(3, 4)
    with pytest.raises(ValueError):
        u_of(TABLE2, 1.5)


def test_gain_examples():
    assert gain_of(PayoffMatrix(((1, 0), (0, 1))), 0.3) == pytest.approx(0.3)
    assert gain_of(TABLE2, 0.3) == pytest.approx(1 - 0.74)
    assert gain_of(MatchingEnvironment(3), (F(1, 3), F(1, 3))) == F(2, 3)
    assert 1 - gain_of(MatchingEnvironment(3), (F(1, 3), F(1, 3))) == F(1, 3)
    for v in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
        assert gain_of(MatchingEnvironment(3), tuple(map(F, v))) == 0
    assert gain_of(TABLE2, 0) == 0 and gain_of(TABLE2, 1) == 0
    with pytest.raises(ValueError):
        gain_of(MatchingEnvironment(3), (0.8, 0.5))


def test_matching_requires_two_states():
    with pytest.raises(ValueError):
        MatchingEnvironment(1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_canonical_properties(seed, m):
    rng = np.random.default_rng(seed)
    env = random_canonical_env(rng, m, exact=True)
    again, log = canonicalize(env)
    assert again == env and log.is_identity()
    ir = ir_curve(env)
    assert ir.curve.is_convex()
    assert list(ir.piece_slopes) == sorted(ir.piece_slopes) and len(ir.piece_slopes) == m
    assert ir.piece_slopes[0] == -env.u2m and ir.piece_slopes[-1] == env.u11
    assert u_of(env, 0) == 1 and u_of(env, 1) == env.u11
    x = F(int(rng.integers(1, 999)), 1000)
    assert gain_of(env, x) > 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(-9, 9), st.integers(-9, 9)), min_size=2, max_size=6))
def test_canonicalize_keeps_envelope_actions(cols):
    raw = PayoffMatrix((tuple(F(a) for a, _ in cols), tuple(F(b) for _, b in cols)))
    distinct = sorted(set(cols))
    members = envelope_members((tuple(a for a, _ in distinct), tuple(b for _, b in distinct)))
    if len(members) < 2:
        with pytest.raises(ValueError):
            canonicalize(raw)
        return
    env, log = canonicalize(raw)
    assert is_canonical(env) and env.m == len(members)
    # canonical payoffs map back to the raw ones
    for i in range(2):
        for j, rj in enumerate(log.permutation):
            src = 1 - i if log.swapped else i
            shift = log.shift1 if src == 0 else log.shift2
            assert env.u[i][j] == (raw.u[src][rj] - shift) / log.scale
