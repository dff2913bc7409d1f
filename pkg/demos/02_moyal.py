"""
The Moyal product as a Maurer-Cartan element
============================================

Associativity of f*g = fg + sum hbar^k B_k(f, g) is the equation
delta B + 1/2 [B, B] = 0 in Hochschild cochains. Build the Moyal product
on the plane, check that equation order by order, then break B_2.
"""

from shiftq.exact import Polynomial, HbarPoly
from shiftq.hochschild import (
    PolyDiffOp,
    StarProduct,
    gerstenhaber_bracket,
    hkr,
    mc_defect_star,
    moyal,
    residual_terms,
    star_commutator,
    star_mul,
)
from shiftq.polyvector import Polyvector, schouten

V = ("x", "y")
x, y = Polynomial.gens(V)

S = moyal(Polyvector.basis(V, (0, 1)), 4)
print("mc defect through hbar^4 is zero:", mc_defect_star(S).is_zero())
print("x*y     =", star_mul(S, x, y))
print("[x, y]* =", star_commutator(S, x, y))
print("B_2(x^2, y^2) =", S.B_k(2)(x * x, y * y))

# bump one coefficient of B_2; the defect shows up exactly at hbar^2
key = next(k for k, c in S.B.terms() if not c[2].is_zero())
bump = PolyDiffOp(V, 2, {key: HbarPoly.hbar(V, 4, 2)}, cap=4)
T = StarProduct(S.B + bump)
for order, k, value in residual_terms(mc_defect_star(T))[:3]:
    print(f"  residual at hbar^{order}: {k} -> {value}")

# HKR is not a Lie morphism: two bivectors that Schouten-commute
a = Polyvector.basis(V, (0, 1))
b = Polyvector(V, 2, {(0, 1): x * x})
print("[a, b]_SN =", schouten(a, b))
G = gerstenhaber_bracket(hkr(a), hkr(b))
print("[hkr a, hkr b](x, y, y) =", G(x, y, y))
