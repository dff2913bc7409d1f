"""
A small L-infinity kernel
=========================

Two finite DG Lie algebras given by tables. We check the generalized Jacobi
identities, twist by a Maurer-Cartan element, and test a few morphisms and
derivations.
"""

from shiftq.linfty import (
    FiniteSpace,
    GradedMap,
    LInftyAlgebra,
    LInftyDerivation,
    LInftyMorphism,
    derivation_defect,
    jacobi_sweep,
    lie_derivative_lift,
    mc_defect,
    morphism_defect,
    morphism_sweep,
    derivation_sweep,
    twist_structure,
)

# G1: x in degree 1, y in degree 2, dx = y, [x, x] = -2y
sp = FiniteSpace([("x", 1), ("y", 2)])
x, y = sp.vec("x"), sp.vec("y")
G1 = LInftyAlgebra.from_maps(sp, {
    1: GradedMap(sp, 1, 1, {("x",): y}),
    2: GradedMap(sp, 2, 0, {("x", "x"): y.scale(-2)}),
})
rep = jacobi_sweep(G1, max_arity=4)
print("G1 Jacobi through arity 4:", rep.passed, f"({rep.checked} tuples)")

# dx + 1/2 [x, x] = y - y = 0, so x is Maurer-Cartan
print("mc_defect(x) =", mc_defect(G1, x))
print("mc_defect(2x) =", mc_defect(G1, x.scale(2)))
print("twisted d(x) =", twist_structure(G1, x).d(x))

# G2: z acts on x and y, dx = y
sp2 = FiniteSpace([("z", 0), ("x", 1), ("y", 2)])
z, x2, y2 = (sp2.vec(n) for n in ("z", "x", "y"))
G2 = LInftyAlgebra.from_maps(sp2, {
    1: GradedMap(sp2, 1, 1, {("x",): y2}),
    2: GradedMap(sp2, 2, 0, {("z", "x"): x2, ("z", "y"): y2}),
})
print("G2 Jacobi:", jacobi_sweep(G2).passed)

scale = lambda a, b: GradedMap(sp2, 1, 0, {("z",): z, ("x",): x2.scale(a), ("y",): y2.scale(b)})
good = LInftyMorphism.from_unshifted(G2, G2, {1: scale(2, 2)})
bad = LInftyMorphism.from_unshifted(G2, G2, {1: scale(1, 2)})
print("x,y -> 2x,2y is a morphism:", morphism_sweep(good).passed)
print("x -> x, y -> 2y fails, F1 d x - d F1 x =", morphism_defect(bad, 1, (x2,)))

inner = lie_derivative_lift(G2, z)
print("[z, .] is a derivation:", derivation_sweep(inner).passed)
odd = LInftyDerivation.from_unshifted(G2, {1: GradedMap(sp2, 1, 0, {("y",): y2.scale(2)})})
print("scaling y alone is not, d X1 x - X1 d x =", derivation_defect(odd, 0, (x2,)))
