"""
Classical argument shift on so(3) and gl(2)
===========================================

Start from a Casimir, differentiate it repeatedly along a Nijenhuis field,
and check that every pair of the resulting functions Poisson-commutes.
"""

from shiftq.exact import Polynomial
from shiftq.polyvector import (
    gl2_bivector,
    lie_derivative,
    nijenhuis_defect,
    so3_bivector,
    vector_field,
)
from shiftq.shift import classical_shift
from shiftq.errors import HypothesisError

V = ("x1", "x2", "x3")
x1, x2, x3 = Polynomial.gens(V)

# the Lie-Poisson structure of so(3): {x1, x2} = x3 and cyclic
pi = so3_bivector(V)
casimir = x1**2 + x2**2 + x3**2

# a constant field is Nijenhuis for a linear bracket: L_xi^2 pi = 0
xi = vector_field(V, {2: 1})
print("L_xi pi   =", lie_derivative(xi, pi))
print("L_xi^2 pi =", nijenhuis_defect(xi, pi))

fam = classical_shift(pi, xi, [casimir], kmax=3)
for (c, k), f in fam.generators:
    print(f"  L_xi^{k} f = {f}")
print("all brackets zero:", fam.all_zero)

# the proof also needs L_xi^k pi (d L^l f, d L^m g) = 0; these are logged
rec = [c for c in fam.log if c.name.startswith("recursion")]
print(f"{sum(c.passed for c in rec)}/{len(rec)} recursion quantities vanish")

# gl(2) with both Casimirs, shifted along d/dx11
pi2 = gl2_bivector()
a, b, c, d = Polynomial.gens(pi2.vars)
fam2 = classical_shift(pi2, vector_field(pi2.vars, {0: 1}), [a + d, a * d - b * c], kmax=2)
print("gl(2):", len(fam2.generators), "generators, all brackets zero:", fam2.all_zero)

# x1^2 d/dx1 is not Nijenhuis, and the engine refuses it by name
bad = vector_field(V, {0: x1**2})
try:
    classical_shift(pi, bad, [casimir])
except HypothesisError as e:
    print("refused:", e.hypothesis, "-", e)
fam3 = classical_shift(pi, bad, [casimir], strict=False)
print("non-strict run fails:", fam3.failures()[:3])
