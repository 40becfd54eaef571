"""
Selling information about a binary state
========================================

A buyer holds a prior theta on state 1 and will pick one of m actions.
We look at the IR curve of a four-action payoff matrix, solve for the
optimal mechanism on a uniform prior, and check that posting one price
for complete information is already optimal.
"""

import numpy as np

from infomech.dist import discretize, uniform
from infomech.env import PayoffMatrix, ir_curve
from infomech.experiment import q_of
from infomech.fullinfo import certify_full_information
from infomech.mech import frev
from infomech.optlp import solve_optmech

env = PayoffMatrix(((1, 0.8, 0.6, 0), (0, 0.5, 0.8, 1)))

# the buyer's best uninformed payoff is the upper envelope of the action lines
curve = ir_curve(env).curve
print("kinks:", np.round(curve.xs, 4))
print("slopes:", [round(s, 4) for s in curve.slopes()])

# optimal mechanism over a 400-point grid
grid = discretize(uniform(), 400)
sol, mech = solve_optmech(env, grid)
print(f"LP revenue {sol.revenue:.5f} with {sol.option_size} options")
for E, price in mech.options:
    print(f"  q = {float(q_of(E, env)):+.4f}  price = {float(price):.5f}")

# compare with a single posted price for complete information
price, rev = frev(env, grid)
print(f"complete information at {price:.4f} earns {rev:.5f}")

cert = certify_full_information(env, uniform())
print("certificate:", "optimal" if cert and cert.ok else "not certified",
      f"at p = {cert.price:.6f}" if cert else "")
