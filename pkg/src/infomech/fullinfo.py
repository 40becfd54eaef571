"""Virtual values, ironing, and the certificate that selling complete
information at one price is optimal (binary states)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numeric import lower_hull_indices

GAP_TOL = 1e-10
SLACK_TOL = 1e-8
R_POINTS = 2001
INV_POINTS = 200001


def phi_minus(dist, theta):
    theta = np.asarray(theta, float)
    return theta * dist.pdf(theta) + dist.cdf(theta)


def phi_plus(dist, theta):
    theta = np.asarray(theta, float)
    return (theta - 1.0) * dist.pdf(theta) + dist.cdf(theta)


@dataclass
class Ironed:
    """One ironed virtual value: raw phi, the cumulative transform H on an
    r-grid (r = F(theta)), its convex hull G, and the ironed intervals."""

    phi: object
    dist: object
    r: np.ndarray
    H: np.ndarray
    G: np.ndarray
    r_intervals: list
    theta_intervals: list
    levels: list

    def __call__(self, theta):
        theta = np.asarray(theta, float)
        out = np.asarray(self.phi(self.dist, theta), float).copy()
        if self.r_intervals:
            rv = np.asarray(self.dist.cdf(theta), float)
            for (lo, hi), lev in zip(self.r_intervals, self.levels):
                inside = (rv > lo) & (rv < hi)
                out = np.where(inside, lev, out)
        return out

    def in_interior(self, theta) -> bool:
        return any(lo < theta < hi for lo, hi in self.theta_intervals)


def _inverse_cdf(dist):
    tt = np.linspace(0.0, 1.0, INV_POINTS)
    FF = np.maximum.accumulate(np.asarray(dist.cdf(tt), float))
    return lambda r: np.interp(r, FF, tt)


def iron(phi, dist, r_points=R_POINTS) -> Ironed:
    inv = _inverse_cdf(dist)
    r = np.linspace(0.0, 1.0, r_points)
    vals = np.asarray(phi(dist, inv(r)), float)
    H = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(r))])
    hull = lower_hull_indices(r, H)
    G = np.interp(r, r[hull], H[hull])
    above = H - G > GAP_TOL
    spans = []
    # each maximal run of strict gap sits between two consecutive hull vertices
    for a, b in zip(hull, hull[1:]):
        if b - a < 2 or not above[a + 1:b].any():
            continue
        # the true tangency lies within a cell of the hull vertex; widen until
        # the flat level meets phi on both sides so the result stays monotone
        while True:
            level = (H[b] - H[a]) / (r[b] - r[a])
            if b + 1 < len(r) and vals[b] < level:
                b += 1
            elif a > 0 and vals[a] > level:
                a -= 1
            else:
                break
        if spans and a <= spans[-1][1]:
            a = spans.pop()[0]
        spans.append((a, b))
    r_int = [(r[a], r[b]) for a, b in spans]
    th_int = [(float(inv(r[a])), float(inv(r[b]))) for a, b in spans]
    levels = [(H[b] - H[a]) / (r[b] - r[a]) for a, b in spans]
    return Ironed(phi, dist, r, H, G, r_int, th_int, levels)


@dataclass
class VirtualPair:
    theta: np.ndarray
    phi_minus: np.ndarray
    phi_plus: np.ndarray
    ironed_minus: np.ndarray
    ironed_plus: np.ndarray
    minus: Ironed
    plus: Ironed

    @property
    def intervals_minus(self):
        return self.minus.theta_intervals

    @property
    def intervals_plus(self):
        return self.plus.theta_intervals


def virtual_values(dist, N: int = 2000) -> VirtualPair:
    theta = np.linspace(0.0, 1.0, N + 1)
    inner = np.asarray(dist.pdf(theta[1:-1]), float)
    if np.any(inner <= 0):
        raise ValueError("density must be positive on (0, 1)")
    mi = iron(phi_minus, dist)
    pl = iron(phi_plus, dist)
    return VirtualPair(theta, phi_minus(dist, theta), phi_plus(dist, theta), mi(theta), pl(theta), mi, pl)


# ---------------------------------------------------------------- certificate

def p_hat(env):
    u = env.u
    m = env.m
    u11, u12, u22 = u[0][0], u[0][1], u[1][1]
    u2m, u2m1, u1m1 = u[1][m - 1], u[1][m - 2], u[0][m - 2]
    a = (u11 - u12) * u2m / (u11 - u12 + u22)
    b = (u2m - u2m1) * u11 / (u2m + u1m1 - u2m1)
    return min(a, b)


def _W(env, dist, p):
    u11, u2m = float(env.u11), float(env.u2m)
    return float(phi_minus(dist, p / u11) - phi_plus(dist, 1.0 - p / u2m))


def solve_price(env, dist, tol=1e-10):
    """Price p in (0, p_hat] with phi-(p/u11) = phi+(1 - p/u2m), or None."""
    hi = float(p_hat(env))
    # same slack as the premise check, so a root sitting at p_hat is kept
    if _W(env, dist, hi) < -SLACK_TOL:
        return None
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _W(env, dist, mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class Certificate:
    price: float
    eta: float
    lam: float
    p_hat: float
    theta_L: float
    theta_H: float
    cond1: bool
    cond2: bool
    cond3: bool
    slacks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.cond1 and self.cond2 and self.cond3

    def to_json(self) -> dict:
        return {"price": self.price, "eta": self.eta, "lambda": self.lam, "p_hat": self.p_hat,
                "theta_L": self.theta_L, "theta_H": self.theta_H, "cond1": self.cond1,
                "cond2": self.cond2, "cond3": self.cond3, "ok": self.ok,
                "slacks": {k: float(v) for k, v in self.slacks.items()}}


def check_fullinfo_optimal(env, dist, p, eta, lam=0.0, vp: VirtualPair | None = None,
                           N: int = 2000, tol: float = SLACK_TOL) -> Certificate:
    vp = vp or virtual_values(dist, N)
    u = env.u
    u11, u2m = float(env.u11), float(env.u2m)
    ph = float(p_hat(env))
    tL, tH = p / u11, 1.0 - p / u2m

    cond1 = p > 0 and lam >= 0 and p <= ph + tol
    if lam > 0:
        cond1 = cond1 and env.m == 3
        cond1 = cond1 and abs((u[0][1] - u[1][1]) - (u11 - 1)) <= tol
        cond1 = cond1 and abs(p - ph) <= tol and abs(p - (1 - u[1][1])) <= tol

    grid = np.union1d(vp.theta, [tL, tH])
    A = vp.minus(grid) - eta + lam
    B = vp.plus(grid) - eta
    seg1 = grid <= tL
    seg2 = (grid >= tL) & (grid <= tH)
    seg3 = grid >= tH
    slacks = {
        "low_minus_max": A[seg1].max() if seg1.any() else -np.inf,
        "mid_minus_min": A[seg2].min() if seg2.any() else np.inf,
        "mid_plus_max": B[seg2].max() if seg2.any() else -np.inf,
        "high_plus_min": B[seg3].min() if seg3.any() else np.inf,
    }
    cond2 = (slacks["low_minus_max"] <= tol and slacks["mid_minus_min"] >= -tol
             and slacks["mid_plus_max"] <= tol and slacks["high_plus_min"] >= -tol)
    cond3 = not vp.minus.in_interior(tL) and not vp.plus.in_interior(tH)
    return Certificate(float(p), float(eta), float(lam), ph, tL, tH, bool(cond1), bool(cond2), bool(cond3),
                       {k: float(v) for k, v in slacks.items()})


def check_premise(env, dist, N: int = 2000, tol: float = SLACK_TOL) -> bool:
    theta = np.linspace(0.0, 1.0, N + 1)
    mono = (np.diff(phi_minus(dist, theta)) >= -tol).all() and (np.diff(phi_plus(dist, theta)) >= -tol).all()
    return bool(mono and _W(env, dist, float(p_hat(env))) >= -tol)


def certify_full_information(env, dist, N: int = 2000):
    """Premise check, price, and the certificate with eta = phi-(theta_L)."""
    if not check_premise(env, dist, N):
        return None
    p = solve_price(env, dist)
    if p is None:
        return None
    eta = float(phi_minus(dist, p / float(env.u11)))
    return check_fullinfo_optimal(env, dist, p, eta, 0.0, N=N)


def search_multipliers(env, dist, p, etas=None, lams=None, N: int = 1000):
    """Grid search for (eta, lambda) passing the certificate; heuristic, a
    miss proves nothing."""
    vp = virtual_values(dist, N)
    etas = np.linspace(0.0, 2.0, 201) if etas is None else etas
    lams = np.linspace(0.0, 1.0, 101) if lams is None else lams
    for lam in lams:
        for eta in etas:
            cert = check_fullinfo_optimal(env, dist, p, float(eta), float(lam), vp=vp)
            if cert.ok:
                return cert
    return None
