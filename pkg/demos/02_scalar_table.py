"""Scalar systems x(k+1) = a x(k) + u(k) against a brute force search.

For a grid of coefficients and two-letter alphabets {0, b} the scalar
rules give a verdict; the oracle enumerates output windows of length 10
from grid pairs of initial states. A collision is a proof of NotULI, a
collision-free run is only evidence.
"""

from fractions import Fraction

from quantinv.analyzer import ULDI, ULI, brute_force_oracle, classify_1d, scalar_system

print(f"{'a':>6} {'b':>6}  {'ULDI':<13} {'ULI':<13} oracle")
for a in ("1/2", "-3/5", "3/2", "-5/2", "3"):
    for b in ("1/2", "3/2", "3", "5"):
        v = classify_1d(a, [0, b], level=5)
        s = {v.question: v.property, v.companion.question: v.companion.property}
        r = brute_force_oracle(scalar_system(a, [0, b]), 10)
        seen = "collision" if r.collision else f"none (window {r.window})"
        flag = "  <-- contradiction" if r.collision and s[ULI] == ULI else ""
        print(f"{str(Fraction(a)):>6} {str(Fraction(b)):>6}  {s[ULDI]:<13} {s[ULI]:<13} {seen}{flag}")
