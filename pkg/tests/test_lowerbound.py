import math
import warnings
from fractions import Fraction as F

import pytest

from infomech.env import ir_curve, u_of
from infomech.experiment import value_best
from infomech.lowerbound import (GateError, build, delta_bound, frev_exact, lb_menu, mechanism_M, menu_revenue,
                                 revenue_and_ratio, revenue_M, verify_lb)

E10 = F(1, 10)


def quiet_build(m, eps):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build(m, eps)


CASES = [(3, E10), (4, E10), (4, F(1, 17)), (5, F(1, 40))]


def test_m3_fields():
    c = build(3, E10)
    assert c.d == (F(1, 10 ** 8), F(2, 10 ** 6))
    assert c.theta[1] == F(1, 10 ** 8) and c.theta[2] == F(1, 10 ** 8) + F(2, 10 ** 6)
    assert c.l[1] == F(-1, 100)
    assert c.h[1] == F(2, 10 ** 8)
    assert c.p[1] == F(99, 10 ** 10)


def test_large_eps_warns_and_still_builds():
    with pytest.warns(UserWarning, match="2\\^-4"):
        build(4, E10)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build(2, E10)
    with pytest.raises(ValueError):
        build(3, F(0))
    with pytest.raises(ValueError):
        build(3, F(1))
    with pytest.warns(UserWarning):
        build(3, F(1, 2))


@pytest.mark.parametrize("m,eps", CASES)
def test_construction_identities(m, eps):
    c = quiet_build(m, eps)
    E = 2 ** m
    assert c.d[0] == eps ** E
    for i in range(1, m - 1):
        assert c.d[i] == 2 ** i * eps ** (E - 2 ** i)
        assert c.l[i] == -(eps ** (2 ** i))
        assert c.h[i] == 2 ** i * eps ** E
        assert c.theta[i + 1] - c.theta[i] == c.d[i]
        assert c.u(c.theta[i + 1]) - c.u(c.theta[i]) == -c.h[i]
        closed = (2 ** i - 1) * eps ** E - eps ** (E + 2 ** i) - sum(
            (2 ** j * eps ** (E + 2 ** i - 2 ** j) for j in range(1, i)), F(0))
        assert c.p[i] == closed
        assert (2 ** i - 1) * eps ** E - eps ** (E + 1) <= c.p[i] <= (2 ** i - 1) * eps ** E
    for i in range(1, m):
        assert c.theta[i] < eps ** (E - 2 ** (i - 1) - 1)
    # |l_i| shrinks, so the pieces steepen toward zero and stay convex
    assert all(abs(a) > abs(b) for a, b in zip(c.l[1:], c.l[2:]))
    for i in range(1, m):
        assert c.u(c.theta[i]) == 1 - sum(c.h[:i], F(0))
    assert ir_curve(c.env).curve.is_convex()
    u1, u2 = c.env.u
    assert u1[0] == u2[-1] == 1 and u1[-1] == u2[0] == 0


@pytest.mark.parametrize("m,eps", CASES)
def test_frev_is_first_gain(m, eps):
    c = quiet_build(m, eps)
    assert frev_exact(c) == eps ** (2 ** m) == c.theta[1]


def test_m3_mechanism_is_one_option():
    c = build(3, E10)
    M = mechanism_M(c)
    assert {s[2] for s in M.segments} == {1}
    assert revenue_M(c, M) == F(99, 10 ** 10)
    assert verify_lb(c, M) == (0, True)


def test_m4_window_at_kink():
    c = quiet_build(4, E10)
    M = mechanism_M(c)
    x = c.theta[2]
    # both window options, followed obediently, touch the IR curve here
    assert max(c.utility(j, 3, x) for j in (1, 2)) == c.u(x)
    j, a = M.choice(x)
    assert j in (1, 2) and c.utility(j, a, x) >= c.u(x)


@pytest.mark.parametrize("m,eps", CASES)
def test_following_meets_ir_at_kinks(m, eps):
    c = quiet_build(m, eps)
    for i in range(1, m - 1):
        s, _ = c.line(i, m - 1)
        assert s == 1 + c.l[i] - c.l[i] * c.env.u[0][m - 1] - c.env.u[1][m - 1]
        for x in (c.theta[i], c.theta[i + 1]):
            assert c.utility(i, m - 1, x) == c.u(x)
    M = mechanism_M(c)
    for x in c.theta[1:]:
        j, a = M.choice(x)
        assert c.utility(j, a, x) >= c.u(x)


@pytest.mark.parametrize("m,eps", CASES)
def test_delta_gate(m, eps):
    c = quiet_build(m, eps)
    delta, ir_ok = verify_lb(c, mechanism_M(c))
    assert ir_ok and delta <= delta_bound(c) == 7 * eps ** (2 ** m + 1)


def test_gate_raises_with_witness(monkeypatch):
    c = quiet_build(4, E10)
    monkeypatch.setattr("infomech.lowerbound.delta_bound", lambda _: F(-1))
    with pytest.raises(GateError, match="delta"):
        verify_lb(c, mechanism_M(c))


@pytest.mark.parametrize("m,eps", CASES)
def test_surplus_ratio(m, eps):
    c = quiet_build(m, eps)
    s = revenue_and_ratio(c, mechanism_M(c))
    assert s.surplus_ratio == pytest.approx(math.log(2 ** (m - 1) - 1), rel=1e-12)
    assert s.surplus_ratio >= math.log(2) * (m - 2)
    assert s.revenue_ratio >= s.surplus_ratio / 9
    assert s.revenue == revenue_M(c, mechanism_M(c))


def test_revenue_by_segments():
    c = quiet_build(4, E10)
    M = mechanism_M(c)
    # independent: integrate payment against F over a fine rational partition
    pts = sorted({x for seg in M.segments for x in seg[:2]})
    total = F(0)
    for x0, x1 in zip(pts, pts[1:]):
        total += M.payment((x0 + x1) / 2) * (c.cdf(x1) - c.cdf(x0))
    total += M.payment(c.b) * c.atom
    assert total == revenue_M(c, M)


@pytest.mark.parametrize("m,eps", CASES)
def test_menu_options_are_semi_informative(m, eps):
    c = quiet_build(m, eps)
    menu = lb_menu(c, mechanism_M(c))
    assert len(menu.options) == m - 2
    for E, _ in menu.options:
        assert E.pi[1][m - 1] == 1


def test_menu_revenue_m4():
    c = quiet_build(4, E10)
    M = mechanism_M(c)
    rev = menu_revenue(c, lb_menu(c, M))
    assert rev >= revenue_M(c, M) / 2 - 3 * delta_bound(c)
    assert float(rev / frev_exact(c)) >= math.log(7) / 18 - 21 * float(E10) / 10


def test_menu_revenue_m3_single_option():
    c = build(3, E10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        menu = lb_menu(c, mechanism_M(c))
    assert len(menu.options) == 1
    E, price = menu.options[0]
    # independent: buy when the best reading of E net of price clears the outside option
    n = 2000
    pts = [c.a + (c.b - c.a) * F(k, n) for k in range(n + 1)]
    buys = lambda x: value_best(c.env, x, E)[0] - price >= c.u(x)
    approx = sum((c.cdf(x1) - c.cdf(x0) for x0, x1 in zip(pts, pts[1:]) if buys((x0 + x1) / 2)), F(0))
    approx = price * (approx + (c.atom if buys(c.b) else 0))
    assert float(menu_revenue(c, menu)) == pytest.approx(float(approx), rel=2e-3, abs=1e-30)


def test_menu_ratio_grows_with_m():
    ratios = []
    for m in (3, 4, 5):
        c = quiet_build(m, F(1, 2 ** m + 4))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            menu = lb_menu(c, mechanism_M(c))
        ratios.append(menu_revenue(c, menu) / frev_exact(c))
    assert ratios == sorted(ratios)
