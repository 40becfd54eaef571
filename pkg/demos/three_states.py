"""
Three states with matching utility
==================================

Points on thin shells give a support where each type strictly prefers its
own experiment.  The mechanism is certified exactly over every
signal-to-action map.  A uniform prior on the simplex is shown for contrast;
there one price of 1/3 is the best complete information can do.
"""

from fractions import Fraction

import numpy as np

from infomech.multistate import (build_ratio_instance, certify, shell_points, uniform_simplex_analytic,
                                 uniform_simplex_curve, uniform_simplex_frev)

for N in (8, 16, 32):
    ys, gaps = shell_points(N)
    inst = build_ratio_instance(ys, Fraction(1, 3), gaps)
    rep = certify(inst)
    print(f"N = {N:2d}: Rev/FRev = {float(rep.ratio):.4f}, guaranteed {float(rep.ratio_lb):.4f}, "
          f"sum of gaps {float(sum(gaps)):.4f}")

price, rev = uniform_simplex_frev(300)
print(f"uniform prior: best price {price:.4f}, revenue {rev:.4f} (2/9 = {2 / 9:.4f})")

p = np.linspace(0, 1 / 3, 7)
_, curve = uniform_simplex_curve(300, p)
for x, y, z in zip(p, curve, uniform_simplex_analytic(p)):
    print(f"  p = {x:.3f}: lattice {y:.4f}, p(1 - 3p^2) = {z:.4f}")
