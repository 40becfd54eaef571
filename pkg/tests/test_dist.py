import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from infomech.dist import (TypeGrid, discretize, er_atom, er_dist, exponential, from_pdf, normal, simplex_grid,
                           uniform)
from infomech.fullinfo import phi_minus, phi_plus
from infomech.numeric import PiecewiseLinear

H = PiecewiseLinear((0.1, 0.2), (0.9, 0.8))


def test_uniform_four_cells():
    g = discretize(uniform(), 4)
    assert np.allclose(g.points, [0, 0.25, 0.5, 0.75])
    assert np.allclose(g.masses, 0.25)


def test_exponential_two_cells():
    g = discretize(exponential(1.0), 2)
    z = 1 - math.exp(-1)
    assert np.allclose(g.masses, [(1 - math.exp(-0.5)) / z, (math.exp(-0.5) - math.exp(-1)) / z], atol=1e-14)


def test_discretize_needs_two_cells():
    with pytest.raises(ValueError):
        discretize(uniform(), 1)


def test_er_cdf_example():
    d = er_dist(H)
    assert float(d.cdf(0.15)) == pytest.approx(1 / 3, abs=1e-14)
    assert float(d.cdf(0.1)) == 0.0 and float(d.cdf(0.2)) == 1.0
    assert er_atom(H) == pytest.approx(0.1 / 0.2)


def test_er_masses_sum_to_one():
    g = discretize(er_dist(H), 100)
    assert g.masses.sum() == pytest.approx(1.0, abs=1e-14)
    # the atom at b lands in the bin ending at b
    assert g.masses[19] == pytest.approx(1 - float(er_dist(H).cdf(0.19)), abs=1e-12)


def test_er_rejects_increasing():
    with pytest.raises(ValueError):
        er_dist(PiecewiseLinear((0.1, 0.2), (0.8, 0.9)))
    with pytest.raises(ValueError):
        er_dist(PiecewiseLinear((0.0, 0.2), (0.9, 0.8)))


def test_er_density_matches_cdf():
    d = er_dist(PiecewiseLinear((0.1, 0.15, 0.3), (0.9, 0.8, 0.75)))
    got, _ = integrate.quad(lambda x: float(d.pdf(x)), 0.1, 0.25, points=[0.15])
    assert got == pytest.approx(float(d.cdf(0.25)) - float(d.cdf(0.1)), abs=1e-10)


def test_truncated_normal_normaliser():
    d = normal(0.8)
    total, _ = integrate.quad(lambda x: float(d.pdf(x)), 0, 1)
    assert total == pytest.approx(1.0, abs=1e-10)
    assert float(d.cdf(1.0)) == pytest.approx(1.0)


def test_from_pdf_normalises():
    d = from_pdf(lambda x: 1 + x)
    assert float(d.cdf(0.5)) == pytest.approx((0.5 + 0.125) / 1.5, abs=1e-9)


def test_family_parameters_checked():
    with pytest.raises(ValueError):
        exponential(0)
    with pytest.raises(ValueError):
        normal(-1)


def test_grid_validation():
    with pytest.raises(ValueError):
        TypeGrid([0.0, 0.5], [0.7, 0.7])
    with pytest.raises(ValueError):
        TypeGrid([0.5, 0.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        TypeGrid([0.0], [0.5, 0.5])


def test_simplex_counts():
    g = simplex_grid(3, 1)
    assert len(g) == 3 and np.allclose(g.masses, 1 / 3)
    assert len(simplex_grid(3, 2)) == 6
    with pytest.raises(ValueError):
        simplex_grid(3, 0)


def test_simplex_tail_area():
    g = simplex_grid(3, 200)
    pts = g.points
    assert g.masses[(1 - pts.max(axis=1)) >= 1 / 3 - 1e-12].sum() == pytest.approx(2 / 3, abs=0.01)


def test_uniform_virtual_values():
    th = np.linspace(0, 1, 11)
    assert np.allclose(phi_minus(uniform(), th), 2 * th)
    assert np.allclose(phi_plus(uniform(), th), 2 * th - 1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 8.0), st.integers(2, 500), st.sampled_from(["exp", "normal", "uniform"]))
def test_discretize_masses(param, N, fam):
    d = {"exp": exponential, "normal": normal}.get(fam, lambda _: uniform())(param)
    g = discretize(d, N)
    assert (g.masses >= 0).all() and g.masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(g.points, np.arange(N) / N)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.001, 0.3), min_size=1, max_size=5), st.floats(0.5, 0.95))
def test_er_cdf_monotone(drops, h0):
    xs = np.linspace(0.1, 0.6, len(drops) + 1)
    # convex decreasing: drops shrink left to right
    drops = sorted(drops, reverse=True)
    ys = [h0]
    for dr in drops:
        ys.append(ys[-1] - dr * (ys[-1] - 0.01))
    d = er_dist(PiecewiseLinear(tuple(xs), tuple(ys)))
    t = np.linspace(0, 1, 2001)
    F = d.cdf(t)
    assert (np.diff(F) >= -1e-15).all()
    assert float(d.cdf(0.1)) == 0.0 and float(d.cdf(0.6)) == 1.0
