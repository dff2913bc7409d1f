from itertools import combinations

import pytest
import sympy
from hypothesis import given, settings

from conftest import V3, polynomials, polyvectors
from shiftq.errors import StructuralError
from shiftq.exact import Polynomial
from shiftq.polyvector import (
    PoissonStructure,
    Polyvector,
    contract,
    d_pi,
    gl2_bivector,
    hamiltonian_field,
    is_poisson,
    lie_derivative,
    lie_poisson,
    nijenhuis_defect,
    poisson_bracket,
    schouten,
    so3_bivector,
    vector_field,
    wedge,
)

x1, x2, x3 = Polynomial.gens(V3)
S = sympy.symbols(V3)
F = Polyvector.function


def matrix(pi):
    """Antisymmetric coefficient matrix of a bivector as sympy expressions."""
    n = len(pi.vars)
    m = [[sympy.Integer(0)] * n for _ in range(n)]
    for (i, j), c in pi.terms():
        m[i][j] = c.to_sympy()
        m[j][i] = -c.to_sympy()
    return m


def sym_bracket(pi, f, g):
    m = matrix(pi)
    n = len(pi.vars)
    return sum(m[i][j] * sympy.diff(f, S[i]) * sympy.diff(g, S[j]) for i in range(n) for j in range(n))


def sym_field(xi):
    return [xi.coeff((i,)).to_sympy() for i in range(len(xi.vars))]


def sign(r):
    return -1 if r % 2 else 1


bivectors = polyvectors(rank=2, max_deg=1)
fields = polyvectors(rank=1, max_deg=2)


@given(bivectors, polynomials(), polynomials())
def test_poisson_bracket_matches_coordinates(pi, f, g):
    got = poisson_bracket(pi, f, g)
    assert sympy.expand(got.to_sympy() - sym_bracket(pi, f.to_sympy(), g.to_sympy())) == 0


@given(bivectors, polynomials(), polynomials())
def test_bracket_via_schouten(pi, f, g):
    assert schouten(F(f), schouten(pi, F(g))).as_function() == poisson_bracket(pi, f, g)


@given(fields, polynomials())
def test_vector_field_acts_as_derivation(xi, f):
    want = sum(c * sympy.diff(f.to_sympy(), s) for c, s in zip(sym_field(xi), S))
    assert sympy.expand(schouten(xi, F(f)).as_function().to_sympy() - want) == 0


@given(fields, fields)
def test_vector_fields_bracket_to_lie_bracket(a, b):
    A, B = sym_field(a), sym_field(b)
    got = schouten(a, b)
    for k in range(3):
        want = sum(A[i] * sympy.diff(B[k], S[i]) - B[i] * sympy.diff(A[k], S[i]) for i in range(3))
        assert sympy.expand(got.coeff((k,)).to_sympy() - want) == 0


@given(fields, bivectors)
def test_lie_derivative_of_bivector(xi, pi):
    X = sym_field(xi)
    m = matrix(pi)
    got = lie_derivative(xi, pi)
    for i, j in combinations(range(3), 2):
        want = sum(
            X[k] * sympy.diff(m[i][j], S[k]) - m[k][j] * sympy.diff(X[i], S[k]) - m[i][k] * sympy.diff(X[j], S[k])
            for k in range(3)
        )
        assert sympy.expand(got.coeff((i, j)).to_sympy() - want) == 0


@given(bivectors)
@settings(max_examples=60)
def test_schouten_square_is_jacobiator(pi):
    pb = lambda f, g: poisson_bracket(pi, f, g)
    jac = pb(x1, pb(x2, x3)) + pb(x2, pb(x3, x1)) + pb(x3, pb(x1, x2))
    assert contract(schouten(pi, pi), [x1, x2, x3]) == jac.scale(-2)
    assert is_poisson(pi) == jac.is_zero()


@given(polyvectors(max_deg=1), polyvectors(max_deg=1))
def test_graded_antisymmetry(a, b):
    p, q = a.rank - 1, b.rank - 1
    assert (schouten(a, b) + schouten(b, a).scale(sign(p * q))).is_zero()


@given(polyvectors(max_deg=1), polyvectors(max_deg=1), polyvectors(max_deg=1))
@settings(max_examples=60)
def test_graded_jacobi(a, b, c):
    p, q = a.rank - 1, b.rank - 1
    lhs = schouten(a, schouten(b, c))
    rhs = schouten(schouten(a, b), c) + schouten(b, schouten(a, c)).scale(sign(p * q))
    assert (lhs - rhs).is_zero()


@given(polyvectors(max_deg=1), polyvectors(max_deg=1), polyvectors(max_deg=1))
@settings(max_examples=60)
def test_leibniz(a, b, c):
    pa, pc = a.rank, c.rank
    lhs = schouten(a, wedge(b, c))
    rhs = wedge(schouten(a, b), c).scale(sign((pa - 1) * pc)) + wedge(b, schouten(a, c))
    assert (lhs - rhs).is_zero()


def test_wedge_is_graded_commutative():
    d1, d2 = Polyvector.basis(V3, (0,)), Polyvector.basis(V3, (1,))
    assert wedge(d1, d2) == Polyvector.basis(V3, (0, 1))
    assert wedge(d2, d1) == Polyvector.basis(V3, (0, 1)).scale(-1)
    assert wedge(d1, d1).is_zero()


def test_contract_is_determinant_pairing():
    biv = Polyvector.basis(V3, (0, 1))
    assert contract(biv, [x1, x2]) == Polynomial.const(V3, 1)
    assert contract(biv, [x2, x1]) == Polynomial.const(V3, -1)
    assert contract(biv, [x1 * x2, x2]) == x2


class TestFixtures:
    def test_so3(self):
        pi = so3_bivector(V3)
        assert is_poisson(pi)
        assert poisson_bracket(pi, x1, x2) == x3
        assert poisson_bracket(pi, x2, x3) == x1
        assert lie_poisson(3, [(1, 2, 3, 1), (2, 3, 1, 1), (3, 1, 2, 1)], V3) == pi
        f = x1**2 + x2**2 + x3**2
        assert d_pi(pi, F(f)).is_zero()

    def test_gl2_casimirs(self):
        pi = gl2_bivector()
        x11, x12, x21, x22 = Polynomial.gens(pi.vars)
        assert is_poisson(pi)
        assert poisson_bracket(pi, x12, x21) == x11 - x22
        for c in (x11 + x22, x11 * x22 - x12 * x21):
            for g in Polynomial.gens(pi.vars):
                assert poisson_bracket(pi, c, g).is_zero()

    def test_bridge_lie_derivative(self):
        pi = so3_bivector(V3)
        xi = vector_field(V3, {2: 1})
        assert lie_derivative(xi, pi) == Polyvector.basis(V3, (0, 1))
        assert nijenhuis_defect(xi, pi).is_zero()
        assert schouten(pi, lie_derivative(xi, pi)).is_zero()

    def test_nijenhuis_negative_control(self):
        pi = so3_bivector(V3)
        xi = vector_field(V3, {0: x1**2})
        r = nijenhuis_defect(xi, pi)
        assert not r.is_zero()
        assert r.coeff((1, 2)) == (x1**3).scale(2)

    def test_d_pi_squares_to_zero(self):
        pi = so3_bivector(V3)
        for a in (F(x1 * x2), vector_field(V3, {0: x3, 2: x1**2}), Polyvector.basis(V3, (0, 2), x2)):
            assert d_pi(pi, d_pi(pi, a)).is_zero()

    def test_hamiltonian_field(self):
        pi = so3_bivector(V3)
        f = x1 * x2
        X = hamiltonian_field(pi, f)
        for g in (x1, x3, x2 * x3):
            assert schouten(X, F(g)).as_function() == -poisson_bracket(pi, f, g)

    def test_poisson_structure_flag(self):
        assert PoissonStructure(so3_bivector(V3)).jacobi_verified
        bad = Polyvector(V3, 2, {(0, 1): x1, (1, 2): x1 * x2, (0, 2): x3 + 1})
        assert not PoissonStructure(bad).jacobi_verified


def test_structural_errors():
    with pytest.raises(StructuralError):
        Polyvector(V3, 2, {(0,): 1})
    with pytest.raises(StructuralError):
        schouten(Polyvector.basis(V3, (0,)), Polyvector.basis(("y",), (0,)))
