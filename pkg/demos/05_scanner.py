"""
Scanning for strong Nijenhuis derivations
=========================================

Enumerate candidate derivations over a small rational grid, keep the ones
that are derivations and strong Nijenhuis for a Maurer-Cartan element, and
flag whether each survivor is just a lift of something classical.
"""

from shiftq.errors import ResourceError
from shiftq.linfty import FiniteSpace, GradedMap, LInftyAlgebra, Vec
from shiftq.shift import Slot, scan_strong_nijenhuis

# z in degree 0 acts by [z, p] = q; p is Maurer-Cartan since everything else vanishes
sp = FiniteSpace([("z", 0), ("p", 1), ("q", 1)])
L = LInftyAlgebra.from_maps(sp, {2: GradedMap(sp, 2, 0, {("z", "p"): sp.vec("q")})}, cutoff=3)

# one unknown: X_1(p) = c q. Every choice is c [z, .], an inner derivation
res = scan_strong_nijenhuis(L, sp.vec("p"), [Slot(1, ("p",), "q")], ["-1", "0", "1"])
print(f"examined {res.examined}/{res.total}, derivations {res.derivations}")
for f in res.found:
    print(f"  c = {f['assignment'][0]:>2}  trivial={f['trivial']}  genuine={f['genuine']}")

# on G2 a map fixing x -> 2x cannot commute with d whatever it does on y
sp2 = FiniteSpace([("z", 0), ("x", 1), ("y", 2)])
G2 = LInftyAlgebra.from_maps(sp2, {
    1: GradedMap(sp2, 1, 1, {("x",): sp2.vec("y")}),
    2: GradedMap(sp2, 2, 0, {("z", "x"): sp2.vec("x"), ("z", "y"): sp2.vec("y")}),
})
res = scan_strong_nijenhuis(G2, sp2.zero(), [Slot(1, ("y",), "y")], ["-1", "0", "1"],
                            fixed={1: {("x",): Vec({"x": 2})}})
print("non-derivation grid found:", res.found)

# the budget caps the walk and hands back what was seen so far
try:
    scan_strong_nijenhuis(L, sp.vec("p"), [Slot(1, ("p",), "q")], ["-1", "0", "1"], budget=2)
except ResourceError as e:
    print("budget hit:", e, "| partial examined", e.partial.examined)
