"""A tour of the exact hbar-series engine.

Everything downstream (kernels, vertex relations, level-zero data) is built
from truncated hbar-series whose coefficients are multivariate Laurent
expansions with certified windows.  This script walks the basic moves.
"""

from fractions import Fraction

from qcurrents.hseries import (
    RegionSeries,
    invert_unit,
    nth_root_shift,
    region_expand_reciprocal,
    serialize,
    substitute,
    transcendental,
)

ZW = ("z", "w")
BOX = {"z": (-8, 8), "w": (-8, 8)}

print("== 1/(z - w) expanded for |w| < |z| ==")
g = region_expand_reciprocal(ZW, 3, (1, (0, 0)), 1, "z", -1, "w", BOX)
for k in range(4):
    print(f"  coefficient of z^{-1-k} w^{k}:", g.coeff(0, (-1 - k, k)))

print("\n== region inversion: (z - w)^-1 via invert_unit agrees ==")
zmw = RegionSeries.from_terms(ZW, 3, {0: {(1, 0): 1, (0, 1): -1}})
inv = invert_unit(zmw, BOX)
print("  difference is certified zero:",
      (inv - g).is_zero_on({"z": (-6, 6), "w": (-6, 6)}))

print("\n== the shifted variable z_1 = (z^3 + 3 hbar)^(1/3) ==")
s = nth_root_shift(3, 1, 4)
print("  image:", dict(s.image.terms))
cube = substitute(RegionSeries.monomial(("z",), 4, 1, (3,)), s)
print("  its cube:", {k: dict(t) for k, t in cube.terms.items()},
      " (= z^3 + 3 hbar exactly)")

print("\n== exp/log round trip on a kernel-shaped unit ==")
gk = region_expand_reciprocal(ZW, 4, (1, (-1, -1)), 1, "z", -1, "w", BOX)
hbar = RegionSeries.monomial(ZW, 4, 1, (0, 0), hbar=1)
a = RegionSeries.one(ZW, 4) + hbar * gk
back = transcendental("exp", transcendental("log", a))
print("  exp(log(1 + hbar G)) - (1 + hbar G) is zero:",
      (back - a).is_zero_on({"z": (-5, 5), "w": (-5, 5)}))

print("\n== canonical serialization (golden-file format) ==")
small = RegionSeries.from_terms(ZW, 2, {0: {(1, 0): 1, (0, 1): Fraction(-1, 2)}})
print(serialize(small))
