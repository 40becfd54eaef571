"""
A gap between menus and a single price
======================================

The construction below builds an IR curve from m pieces whose slopes shrink
doubly exponentially, together with a prior that makes every complete
information price earn the same.  A mechanism that offers one experiment per
piece earns a logarithmic factor more.  Everything is exact rationals.
"""

import math
import warnings
from fractions import Fraction

from infomech.lowerbound import (build, delta_bound, frev_exact, lb_menu, mechanism_M, menu_revenue,
                                 revenue_and_ratio, verify_lb)

for m, eps in [(3, Fraction(1, 10)), (4, Fraction(1, 17)), (5, Fraction(1, 40))]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = build(m, eps)
        M = mechanism_M(c)
        delta, ir_ok = verify_lb(c, M)
        s = revenue_and_ratio(c, M)
        menu = lb_menu(c, M)
    print(f"m = {m}, eps = {eps}")
    print(f"  support [{float(c.a):.3e}, {float(c.b):.3e}], FRev = eps^{2 ** m}: {frev_exact(c) == eps ** 2 ** m}")
    print(f"  measured delta {delta} (bound {float(delta_bound(c)):.2e}), IR {ir_ok}")
    print(f"  surplus / FRev = {s.surplus_ratio:.4f}  (ln(2^(m-1) - 1) = {math.log(2 ** (m - 1) - 1):.4f})")
    print(f"  Rev(M) / FRev = {s.revenue_ratio:.4f}")
    print(f"  exact-IC menu / FRev = {float(menu_revenue(c, menu) / s.frev):.4f}")
