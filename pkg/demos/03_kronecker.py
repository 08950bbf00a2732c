"""Simultaneous small fractional parts.

Multiples l*e and l*e^2 are equidistributed modulo one, so some l makes
both fractional parts small. l = 0 does so trivially; asking l to be
an integer as well (the leading alpha_0) gives the first nontrivial hit.
"""

import math

from quantinv.analyzer import kronecker_witness

theta = [math.e, math.e ** 2]
print("trivial:", kronecker_witness(theta, [0, 0], 0.05, (0, 500), 1e-3))
l = kronecker_witness(theta, [0, 0, 0], 0.05, (1, 500), 1e-3)
print("nontrivial:", l)
for name, t in (("l", 1.0), ("l e", math.e), ("l e^2", math.e ** 2)):
    print(f"  frac({name}) = {(l * t) % 1:.5f}")
