from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import V3
from shiftq.errors import DomainError, HypothesisError, ResourceError, StructuralError
from shiftq.exact import Polynomial
from shiftq.hochschild import moyal
from shiftq.linfty import (
    FiniteSpace,
    GradedMap,
    LInftyAlgebra,
    LInftyDerivation,
    Vec,
    derivation_defect,
    dpoly_dgla,
    tpoly_dgla,
    x_of_pi,
)
from shiftq.polyvector import (
    Polyvector,
    gl2_bivector,
    lie_derivative,
    poisson_bracket,
    schouten,
    so3_bivector,
    vector_field,
)
from shiftq.shift import (
    BinaryOpModel,
    Slot,
    binary_shift_check,
    classical_shift,
    default_budget,
    families_coincide,
    is_inner,
    lemma_residuals,
    lift_classical,
    quantum_shift,
    recursion_quantity,
    scan_strong_nijenhuis,
    shift_identities,
    weak_nijenhuis_chain,
)

x1, x2, x3 = Polynomial.gens(V3)
F = Polyvector.function
SO3 = so3_bivector(V3)
D3 = vector_field(V3, {2: 1})
CAS = x1 * x1 + x2 * x2 + x3 * x3


def gl2():
    pi = gl2_bivector()
    a, b, c, d = Polynomial.gens(pi.vars)
    return pi, vector_field(pi.vars, {0: 1}), [a + d, a * d - b * c]


class TestClassical:
    def test_so3_family(self):
        fam = classical_shift(SO3, D3, [CAS], kmax=2)
        assert fam.elements() == [CAS, x3.scale(2), Polynomial.const(V3, 2)]
        assert fam.all_zero and fam.passed
        assert len(fam.bracket_matrix) == 6

    def test_gl2_family(self):
        pi, xi, cas = gl2()
        fam = classical_shift(pi, xi, cas, kmax=2)
        assert fam.all_zero and fam.passed
        x22 = Polynomial.gens(pi.vars)[3]
        assert fam.generators[4] == ((1, 1), x22)
        assert poisson_bracket(pi, x22, cas[1]).is_zero()

    def test_poisson_field_gives_central_family(self):
        x = vector_field(V3, {0: x2, 1: -x1})
        assert lie_derivative(x, SO3).is_zero()
        fam = classical_shift(SO3, x, [CAS], kmax=3)
        assert fam.all_zero

    def test_recursion_quantities(self):
        for pi, xi, cas in ((SO3, D3, [CAS]), gl2()):
            for f, g in product(cas, repeat=2):
                for k, l, m in product(range(4), repeat=3):
                    if k + l + m <= 3:
                        assert recursion_quantity(pi, xi, f, g, k, l, m).is_zero()
        fam = classical_shift(SO3, D3, [CAS])
        rec = [c for c in fam.log if c.name.startswith("recursion")]
        assert len(rec) == 20 and all(c.passed for c in rec)

    def test_negative_nijenhuis(self):
        xi = vector_field(V3, {0: x1 * x1})
        with pytest.raises(HypothesisError) as exc:
            classical_shift(SO3, xi, [CAS])
        assert exc.value.hypothesis == "nijenhuis"
        fam = classical_shift(SO3, xi, [CAS], strict=False)
        assert "hypothesis:nijenhuis" in fam.failures()
        assert not fam.passed

    def test_negative_casimir_and_poisson(self):
        with pytest.raises(HypothesisError) as exc:
            classical_shift(SO3, D3, [x1])
        assert exc.value.hypothesis == "casimir"
        bad = Polyvector(V3, 2, {(0, 1): x1, (1, 2): x1 * x2, (0, 2): x3 + 1})
        with pytest.raises(HypothesisError) as exc:
            classical_shift(bad, D3, [])
        assert exc.value.hypothesis == "poisson"
        fam = classical_shift(SO3, D3, [x1, x2], strict=False)
        assert not fam.all_zero and "bracket(0, 0)(1, 0)" in fam.failures()

    def test_structural(self):
        with pytest.raises(StructuralError):
            classical_shift(SO3, SO3, [CAS])


@st.composite
def constant_fields(draw):
    cs = draw(st.lists(st.integers(-2, 2), min_size=3, max_size=3))
    return vector_field(V3, {i: c for i, c in enumerate(cs) if c})


@given(constant_fields())
@settings(max_examples=20)
def test_constant_fields_shift_so3(xi):
    """Constant fields are Nijenhuis for linear Poisson structures."""
    fam = classical_shift(SO3, xi, [CAS], kmax=3)
    assert fam.all_zero and fam.passed


class TestBinary:
    def model(self):
        m = [[[0] * 4 for _ in range(4)] for _ in range(4)]
        m[0][1] = [0, 0, 1, 0]
        m[1][0] = [0, 0, -1, 0]
        xi = [[0, 1, 0, 1], [0] * 4, [0] * 4, [0] * 4]
        return BinaryOpModel(4, m, xi)

    def test_fixture(self):
        M = self.model()
        assert all(not any(v) for row in M.xi_action(M.xi_action(M.m)) for v in row)
        assert any(any(v) for row in M.xi_action(M.m) for v in row)
        fam = binary_shift_check(M, [[0, 0, 1, 0], [0, 0, 0, 1]], kmax=3)
        assert fam.all_zero and fam.passed
        assert fam.generators[1][1].is_zero()
        assert fam.generators[5] == ((1, 1), fam.generators[5][1]) and fam.generators[5][1].coords == (1, 0, 0, 0)

    def test_zero_operation(self):
        M = BinaryOpModel(2, [[[0, 0]] * 2] * 2, [[1, 1], [0, 1]])
        assert binary_shift_check(M, [[1, 0]], kmax=2).all_zero

    def test_centrality_violated(self):
        M = self.model()
        with pytest.raises(HypothesisError) as exc:
            binary_shift_check(M, [[1, 0, 0, 0]])
        assert exc.value.hypothesis == "central"
        fam = binary_shift_check(M, [[1, 0, 0, 0], [0, 1, 0, 0]], strict=False)
        assert not fam.all_zero
        assert any(n.startswith("hypothesis:central") for n in fam.failures())

    def test_xi_square_violated(self):
        m = [[[0] * 3 for _ in range(3)] for _ in range(3)]
        m[0][1], m[1][0] = [0, 0, 1], [0, 0, -1]
        M = BinaryOpModel(3, m, [[1, 0, 0], [0, 0, 0], [0, 0, 0]])
        with pytest.raises(HypothesisError) as exc:
            binary_shift_check(M, [[0, 0, 1]])
        assert exc.value.hypothesis == "xi-squared-kills-m"


class TestLift:
    def test_lift(self):
        X = lift_classical(D3)
        assert X.X(1, SO3) == Polyvector.basis(V3, (0, 1))
        assert lift_classical(Polyvector.zero(V3, 1)).x.maps == {}
        with pytest.raises(StructuralError):
            lift_classical(SO3)

    def test_leibniz_over_schouten(self):
        xi = vector_field(V3, {0: x2, 2: x1 * x3})
        X = lift_classical(xi)
        args = [F(x1 * x2), Polyvector.basis(V3, (1,), x3), Polyvector.basis(V3, (0, 2), x1), SO3]
        for a, b in product(args, repeat=2):
            assert derivation_defect(X, 1, (a, b)).is_zero()
            assert derivation_defect(X, 0, (a,)).is_zero()


class TestQuantum:
    def test_bridge_coincides(self):
        L = tpoly_dgla(V3)
        X = lift_classical(D3, L)
        q = quantum_shift(L, SO3, X, [F(CAS)], kmax=3, max_arity=2)
        assert q.passed and q.all_zero
        c = classical_shift(SO3, D3, [CAS], kmax=3)
        assert families_coincide(c, q)
        names = {ch.name for ch in q.log}
        assert "hypothesis:strong-nijenhuis" in names and "exp(X)(pi) = pi + X(pi)" in names
        assert {f"lemma[0](k={k})" for k in range(1, 5)} <= names

    def test_dpoly_moyal_smoke(self):
        vars2 = ("x", "y")
        L = dpoly_dgla(vars2, cap=2)
        B = moyal(Polyvector.basis(vars2, (0, 1)), 2).B
        from shiftq.hochschild import PolyDiffOp

        xi = PolyDiffOp(vars2, 1, {((1, 0),): 1}, cap=2)
        X = LInftyDerivation.from_unshifted(L, {1: lambda a: L.bracket(xi, a)})
        one = PolyDiffOp(vars2, 0, {(): 1}, cap=2)
        assert x_of_pi(X, B).is_zero()
        fam = quantum_shift(L, B, X, [one], kmax=2, max_arity=1, probes=L.space.probes(max_degree=1, max_arity=1))
        assert fam.passed and fam.all_zero

    def test_refuses_weak_defect(self):
        L = tpoly_dgla(V3)
        X = lift_classical(vector_field(V3, {0: x1 * x1}), L)
        with pytest.raises(HypothesisError) as exc:
            quantum_shift(L, SO3, X, [F(CAS)], max_arity=1)
        assert exc.value.hypothesis == "weak-nijenhuis"

    def test_central_degree(self):
        L = tpoly_dgla(V3)
        with pytest.raises(DomainError):
            quantum_shift(L, SO3, lift_classical(D3, L), [D3], max_arity=1)

    def test_weak_chain(self):
        L = tpoly_dgla(V3)
        X = lift_classical(D3, L)
        chain = weak_nijenhuis_chain(X, SO3, F(CAS), F(CAS * x3))
        assert set(chain) >= {"d_pi X(pi)", "[X(pi),X(pi)]", "mc(pi+X(pi))", "weak", "{X_pi f, X_pi g}"}
        # CAS * x3 is not central, which only the last items feel
        chain = weak_nijenhuis_chain(X, SO3, F(CAS), F(CAS * CAS))
        assert all(v.is_zero() for v in chain.values())

    def test_identities(self):
        L = tpoly_dgla(V3)
        X = lift_classical(D3, L)
        f = F(CAS)
        xs = [f]
        for _ in range(3):
            xs.append(X.X(1, xs[-1]))
        for a, b in product(xs, repeat=2):
            r1, r2 = shift_identities(X, SO3, a, b)
            assert r1.is_zero() and r2.is_zero()


class TestLemma:
    def test_corrected_form_on_bridge(self):
        L = tpoly_dgla(V3)
        res = lemma_residuals(lift_classical(D3, L), SO3, F(CAS), kmax=4)
        assert all(good.is_zero() for good, _ in res.values())

    def test_literal_form_fails(self):
        """A constant Poisson structure where the coefficient ``k`` and the sign both show."""
        pi = Polyvector.basis(V3, (0, 1))
        xi = vector_field(V3, {2: x1})
        assert lie_derivative(xi, lie_derivative(xi, pi)).is_zero()
        L = tpoly_dgla(V3)
        X = lift_classical(xi, L)
        res = lemma_residuals(X, pi, F(x3 * x3), kmax=3)
        assert all(good.is_zero() for good, _ in res.values())
        assert res[1][1] == Polyvector.basis(V3, (1,), x3).scale(4)
        assert res[2][1] == Polyvector.basis(V3, (1,), x1).scale(6)
        xp = x_of_pi(X, pi)
        d1 = schouten(pi, X.X(1, F(x3 * x3)))
        assert d1 == Polyvector.basis(V3, (1,), x3).scale(2)
        assert schouten(xp, F(x3 * x3)) == Polyvector.basis(V3, (1,), x3).scale(-2)


def scanner_dgla():
    sp = FiniteSpace([("z", 0), ("p", 1), ("q", 1)])
    z, p, q = (sp.vec(n) for n in ("z", "p", "q"))
    L = LInftyAlgebra.from_maps(sp, {2: GradedMap(sp, 2, 0, {("z", "p"): q})}, cutoff=3)
    return L, p


def g2():
    sp = FiniteSpace([("z", 0), ("x", 1), ("y", 2)])
    x, y = sp.vec("x"), sp.vec("y")
    return LInftyAlgebra.from_maps(
        sp, {1: GradedMap(sp, 1, 1, {("x",): y}), 2: GradedMap(sp, 2, 0, {("z", "x"): x, ("z", "y"): y})}
    )


class TestScanner:
    def test_lifts_are_not_genuine(self):
        L, p = scanner_dgla()
        res = scan_strong_nijenhuis(L, p, [Slot(1, ("p",), "q")], ["-1", "0", "1"])
        assert res.examined == res.total == 3
        assert [f["assignment"] for f in res.found] == [["-1"], ["0"], ["1"]]
        assert not any(f["genuine"] for f in res.found)
        assert [f["trivial"] for f in res.found] == [False, True, False]

    def test_zero_grid_is_trivial(self):
        L, p = scanner_dgla()
        res = scan_strong_nijenhuis(L, p, [Slot(1, ("p",), "q")], ["0"])
        assert len(res.found) == 1 and res.found[0]["trivial"]

    def test_non_derivations_filtered(self):
        L = g2()
        fixed = {1: {("x",): Vec({"x": 2})}}
        res = scan_strong_nijenhuis(L, L.space.zero(), [Slot(1, ("y",), "y")], ["-1", "0", "1"], fixed=fixed)
        assert res.found == [] and res.derivations == 0 and res.examined == 3

    def test_budget(self, monkeypatch):
        L, p = scanner_dgla()
        slots = [Slot(1, ("p",), "q")]
        with pytest.raises(ResourceError) as exc:
            scan_strong_nijenhuis(L, p, slots, ["-1", "0", "1"], budget=2)
        assert exc.value.partial.examined == 2 and len(exc.value.partial.found) == 2
        monkeypatch.setenv("SHIFTQ_BUDGET", "1")
        assert default_budget() == 1
        with pytest.raises(ResourceError):
            scan_strong_nijenhuis(L, p, slots, ["-1", "0"])
        monkeypatch.setenv("SHIFTQ_BUDGET", "many")
        with pytest.raises(StructuralError):
            default_budget()

    def test_slot_validation(self):
        L, p = scanner_dgla()
        with pytest.raises(StructuralError):
            scan_strong_nijenhuis(L, p, [Slot(1, ("p",), "z")], ["1"])
        with pytest.raises(DomainError):
            scan_strong_nijenhuis(tpoly_dgla(V3), SO3, [], ["1"])

    def test_is_inner(self):
        L, p = scanner_dgla()
        X1 = GradedMap(L.space, 1, 0, {("p",): L.space.vec("q").scale(3)})
        assert is_inner(L, X1) and is_inner(L, None)
        assert not is_inner(L, GradedMap(L.space, 1, 0, {("q",): L.space.vec("p")}))
