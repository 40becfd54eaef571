import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infomech.dist import exponential, from_pdf, normal, uniform
from infomech.env import PayoffMatrix
from infomech.fullinfo import (check_fullinfo_optimal, check_premise, certify_full_information, iron, p_hat,
                               phi_minus, phi_plus, search_multipliers, solve_price, virtual_values)
from infomech.optlp import solve_optmech

M2 = PayoffMatrix(((1.0, 0.0), (0.0, 1.0)))
M3 = PayoffMatrix(((1.0, 0.6, 0.0), (0.0, 0.6, 1.0)))
TABLE2 = PayoffMatrix(((1, 0.8, 0.6, 0), (0, 0.5, 0.8, 1)))
BIMODAL = from_pdf(lambda x: 1 + 0.9 * np.cos(4 * np.pi * x), "bimodal")


def full_info_revenue(env, dist, p):
    # complete information sells to theta in [p/u11, 1 - p/u2m] when p <= p_hat
    lo, hi = p / float(env.u11), 1 - p / float(env.u2m)
    return p * float(dist.cdf(hi) - dist.cdf(lo))


# ---------------------------------------------------------------- virtual values

def test_uniform_no_ironing():
    vp = virtual_values(uniform())
    assert np.allclose(vp.phi_minus, 2 * vp.theta) and np.allclose(vp.phi_plus, 2 * vp.theta - 1)
    assert vp.intervals_minus == [] and vp.intervals_plus == []


def test_exponential_two_is_monotone():
    vp = virtual_values(exponential(2.0))
    assert vp.intervals_minus == []
    assert np.max(np.abs(vp.ironed_minus - vp.phi_minus)) <= 1e-6


def test_bimodal_gets_ironed():
    vp = virtual_values(BIMODAL)
    assert np.any(np.diff(vp.phi_minus) < 0)
    assert len(vp.intervals_minus) >= 1
    assert np.all(vp.minus.G <= vp.minus.H + 1e-15)
    assert np.all(np.diff(vp.ironed_minus) >= -1e-6)


def test_nonpositive_density_rejected():
    with pytest.raises(ValueError):
        virtual_values(from_pdf(lambda x: 1 + np.cos(4 * np.pi * x)))


@pytest.mark.parametrize("dist", [uniform(), exponential(1.0), exponential(3.0), normal(0.3), normal(0.8), BIMODAL])
def test_ironing_invariants(dist):
    vp = virtual_values(dist)
    f = dist.pdf(vp.theta)
    assert np.allclose(vp.phi_minus - vp.phi_plus, f)
    assert np.all(vp.ironed_minus >= vp.ironed_plus - 1e-6)
    for irn in (vp.minus, vp.plus):
        assert irn.G[0] == pytest.approx(irn.H[0]) and irn.G[-1] == pytest.approx(irn.H[-1])
        # hull slopes are the ironed values and integrate back to H(1)
        slopes = np.diff(irn.G) / np.diff(irn.r)
        assert np.all(np.diff(slopes) >= -1e-9)
        assert np.sum(slopes * np.diff(irn.r)) == pytest.approx(irn.H[-1], abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 1.9))
def test_ironing_idempotent_on_monotone(lam):
    # exponential with lambda <= 2 has nondecreasing phi-
    d = exponential(lam)
    once = iron(phi_minus, d)
    assert once.r_intervals == []
    th = np.linspace(0, 1, 501)
    assert np.allclose(once(th), phi_minus(d, th))


# ---------------------------------------------------------------- price and certificate

def test_p_hat_examples():
    assert p_hat(M3) == pytest.approx(0.4)
    # min{0.2 / 0.7, 0.2 / 0.8}
    assert p_hat(TABLE2) == pytest.approx(1 / 4)
    assert p_hat(M2) == pytest.approx(0.5)


def test_solve_price_uniform():
    assert solve_price(M2, uniform()) == pytest.approx(0.25, abs=1e-9)
    low = PayoffMatrix(((1.0, 0.9, 0.0), (0.0, 0.4, 1.0)))
    assert p_hat(low) == pytest.approx(0.2)
    assert solve_price(low, uniform()) is None


def test_solve_price_exponential():
    d = exponential(1.0)
    p = solve_price(M2, d)
    assert abs(float(phi_minus(d, p) - phi_plus(d, 1 - p))) <= 1e-9


def test_certificate_uniform_quarter():
    cert = check_fullinfo_optimal(M2, uniform(), 0.25, 0.5)
    assert cert.ok
    assert cert.theta_L == 0.25 and cert.theta_H == 0.75


def test_certificate_rejects_high_price():
    cert = check_fullinfo_optimal(M2, uniform(), 0.4, 0.8)
    assert cert.cond1 and not cert.cond2


def test_certificate_three_action_quarter():
    cert = certify_full_information(M3, uniform())
    assert cert is not None and cert.ok and cert.price == pytest.approx(0.25, abs=1e-9)


def test_lambda_needs_three_actions():
    cert = check_fullinfo_optimal(TABLE2, uniform(), 2 / 7, 0.5, 0.1)
    assert not cert.cond1


def test_three_action_multiplier_example():
    """p = 1 - u22 = p_hat with eta = 0.8, lambda = 0.2 on the uniform prior."""
    cert = check_fullinfo_optimal(M3, uniform(), 0.4, 0.8, 0.2)
    assert cert.cond1 and cert.cond3
    assert cert.ok, cert.slacks
    sol, _ = solve_optmech(M3, uniform(), 400)
    assert sol.objective == pytest.approx(full_info_revenue(M3, uniform(), 0.4), abs=2e-3)


def test_multiplier_search_finds_known_certificate():
    cert = search_multipliers(M2, uniform(), 0.25, lams=[0.0])
    assert cert is not None and cert.eta == pytest.approx(0.5, abs=0.01)


def test_premise_examples():
    assert check_premise(TABLE2, uniform())
    vp = virtual_values(normal(0.6))
    assert np.all(np.diff(vp.phi_minus) >= -1e-8) and np.all(np.diff(vp.phi_plus) >= -1e-8)
    ph = float(p_hat(M2))
    want = float(phi_minus(normal(0.6), ph) - phi_plus(normal(0.6), 1 - ph)) >= -1e-8
    assert check_premise(M2, normal(0.6)) == want
    assert not check_premise(M2, exponential(3.0))


@pytest.mark.parametrize("env,dist", [(M2, uniform()), (M3, uniform()), (TABLE2, uniform()),
                                      (M2, exponential(1.0)), (M2, normal(0.6)), (TABLE2, exponential(0.5))])
def test_certified_price_is_lp_optimal(env, dist):
    assert check_premise(env, dist)
    p = solve_price(env, dist)
    assert p is not None
    eta = float(phi_minus(dist, p / float(env.u11)))
    assert check_fullinfo_optimal(env, dist, p, eta).ok
    N = 400
    sol, _ = solve_optmech(env, dist, N)
    assert sol.objective == pytest.approx(full_info_revenue(env, dist, p), abs=max(2e-3, 3 / N))
