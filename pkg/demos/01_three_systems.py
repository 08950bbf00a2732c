"""Walk through the three bundled systems.

Run with ``python3 demos/01_three_systems.py``. Takes about 20 s, most
of it spent on the mixed-spectrum system.
"""

import time

from quantinv.analyzer import classify_1d, decide_uldi, decide_uli_contractive
from quantinv.cli import data_dir
from quantinv.spectral import spectral_split
from quantinv.sysfile import load_system


def show(title, v, t0):
    print(f"  {title}: {v}  ({time.perf_counter() - t0:.1f} s)")
    for note in v.notes:
        print(f"    - {note}")


# A purely expansive planar system. Inputs can only be told apart if the
# (inverse) difference attractor leaves the strip |x_1| < 1. It does not.
sys1, meta1 = load_system(data_dir() / "ex1.sys")
print("example 1:", [f"{abs(l):.4f}" for l in spectral_split(sys1.A).eigvals])
t0 = time.perf_counter()
show("ULDI", decide_uldi(sys1, level=8, assume=meta1["assume"]), t0)

# One expansive and two contractive directions. The window language of
# in-strip orbits dies out after one step, so a nonzero input is always
# detected, one step late.
sys2, meta2 = load_system(data_dir() / "ex2.sys")
t0 = time.perf_counter()
v2 = decide_uldi(sys2, level=8, assume=meta2["assume"])
show("ULDI", v2, t0)
Te = v2.artifacts["Te"].cover
print(f"  expanding part of the attractor: {Te.bounds()[0][0]:.4f} .. {Te.bounds()[1][0]:.4f}")

# A scalar contraction. Alternating inputs +1, -1 keep the difference
# orbit on {-2/3, 2/3}, yet the pair of actual orbits is separated at once.
sys3, _ = load_system(data_dir() / "ex3.sys")
t0 = time.perf_counter()
v3 = classify_1d("1/2", [-1, 0, 1])
show("scalar table", v3, t0)
print("  witness orbit:", [z[0] for z in v3.certificate.orbit], "inputs", v3.certificate.word)
t0 = time.perf_counter()
show("ULI", decide_uli_contractive(sys3), t0)
