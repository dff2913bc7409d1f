"""Polyvector fields on R^n with polynomial coefficients.

A rank-p polyvector is stored as ``{(i1<...<ip): coefficient}`` with 0-based
indices, meaning ``sum c * d_{i1} ^ ... ^ d_{ip}``.  Functions are rank 0.
Coefficients are :class:`~shiftq.exact.Polynomial` or, for hbar-dependent
elements, :class:`~shiftq.exact.HbarPoly`.

Sign convention of the Schouten bracket (frozen, see ``schouten``): it is the
usual odd-Poisson bracket on superfunctions ``f(x, theta)`` transported along
the reversal ``d_{i1}^...^d_{ip} -> theta_{ip}...theta_{i1}``.  With it

* ``[xi, f] = xi(f)`` and vector fields bracket to their Lie bracket,
* ``[a, b] = -(-1)^{(p-1)(q-1)} [b, a]``,
* ``{f, g} = pi(df, dg) = [f, [pi, g]]``,
* ``[a, b^c] = (-1)^{(p_a-1) p_c} [a, b]^c + b^[a, c]``.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from typing import Dict, Iterable, Sequence, Tuple

from .errors import StructuralError
from .exact import HbarPoly, Polynomial, as_fraction

Index = Tuple[int, ...]


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    sign = 1
    s = list(seq)
    for i in range(len(s)):
        for j in range(i + 1, len(s)):
            if s[i] > s[j]:
                sign = -sign
    return sign


def _normalize(idx: Iterable[int]) -> Tuple[int, Index]:
    idx = tuple(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    return perm_sign(idx), tuple(sorted(idx))


def _reversal_sign(r: int) -> int:
    return -1 if (r * (r - 1) // 2) % 2 else 1


class Polyvector:
    """Antisymmetric polyvector field; immutable."""

    __slots__ = ("vars", "rank", "_terms", "cap")

    def __init__(self, variables, rank: int, terms: Dict[Iterable[int], object] | None = None, cap=None):
        self.vars = tuple(variables)
        if rank < 0:
            raise StructuralError("polyvector rank must be >= 0")
        self.rank = rank
        out: Dict[Index, object] = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if len(idx) != rank:
                raise StructuralError(f"index {idx} does not have length {rank}")
            if any(not 0 <= i < len(self.vars) for i in idx):
                raise StructuralError(f"index {idx} out of range")
            if isinstance(c, (int, Fraction, str)):
                c = Polynomial.const(self.vars, as_fraction(c))
            if c.vars != self.vars:
                raise StructuralError("coefficient variables differ from polyvector variables")
            sign, key = _normalize(idx)
            if not sign:
                continue
            c = c if sign > 0 else -c
            out[key] = out[key] + c if key in out else c
        caps = {c.cap for c in out.values() if isinstance(c, HbarPoly)}
        if cap is not None:
            caps.add(cap)
        if len(caps) > 1:
            raise StructuralError(f"mixed hbar caps {sorted(caps)}")
        self.cap = caps.pop() if caps else None
        if self.cap is not None:
            out = {k: (v if isinstance(v, HbarPoly) else HbarPoly.lift(v, self.cap)) for k, v in out.items()}
        self._terms = {k: v for k, v in out.items() if not v.is_zero()}

    @classmethod
    def function(cls, f) -> "Polyvector":
        return cls(f.vars, 0, {(): f})

    @classmethod
    def basis(cls, variables, idx: Iterable[int], c=1) -> "Polyvector":
        idx = tuple(idx)
        return cls(variables, len(idx), {idx: c})

    @classmethod
    def zero(cls, variables, rank: int, cap=None) -> "Polyvector":
        return cls(variables, rank, {}, cap=cap)

    @property
    def degree(self) -> int:
        """Shifted degree ``rank - 1``."""
        return self.rank - 1

    def terms(self):
        return sorted(self._terms.items())

    def coeff(self, idx) -> object:
        sign, key = _normalize(idx)
        c = self._terms.get(key)
        if c is None or not sign:
            return _zero_coeff(self)
        return c if sign > 0 else -c

    def as_function(self):
        if self.rank != 0:
            raise StructuralError("only rank-0 polyvectors are functions")
        return self.coeff(())

    def is_zero(self) -> bool:
        return not self._terms

    def max_degree(self) -> int:
        return max((c.total_degree() for c in self._terms.values()), default=-1)

    def __eq__(self, other):
        if not isinstance(other, Polyvector):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return self.vars == other.vars
        return self.vars == other.vars and self.rank == other.rank and self._terms == other._terms

    def __hash__(self):
        return hash((self.vars, self.rank, frozenset(self._terms.items())))

    def _check(self, other: "Polyvector"):
        if not isinstance(other, Polyvector):
            raise StructuralError("expected a Polyvector")
        if self.vars != other.vars:
            raise StructuralError(f"variable lists differ: {self.vars} vs {other.vars}")

    def __add__(self, other):
        if not isinstance(other, Polyvector):
            return NotImplemented
        self._check(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.rank != other.rank:
            raise StructuralError(f"cannot add rank {self.rank} and rank {other.rank}")
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out[k] + v if k in out else v
        return Polyvector(self.vars, self.rank, out)

    def __neg__(self):
        return Polyvector(self.vars, self.rank, {k: -v for k, v in self._terms.items()}, cap=self.cap)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    def scale(self, c) -> "Polyvector":
        """Multiply by a rational or by a coefficient-ring element."""
        if isinstance(c, (int, Fraction, str)):
            c = as_fraction(c)
            return Polyvector(self.vars, self.rank, {k: v.scale(c) for k, v in self._terms.items()}, cap=self.cap)
        cap = c.cap if isinstance(c, HbarPoly) else self.cap
        return Polyvector(self.vars, self.rank, {k: c * v for k, v in self._terms.items()}, cap=cap)

    def map_coeffs(self, fn) -> "Polyvector":
        return Polyvector(self.vars, self.rank, {k: fn(v) for k, v in self._terms.items()})

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for idx, c in self.terms():
            basis = "^".join(f"d_{self.vars[i]}" for i in idx)
            cs = str(c)
            if not basis:
                parts.append(f"({cs})")
            elif cs == "1":
                parts.append(basis)
            elif cs == "-1":
                parts.append(f"-{basis}")
            else:
                parts.append(f"({cs})*{basis}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"Polyvector(rank={self.rank}, {str(self)})"


def _zero_coeff(pv: Polyvector):
    if pv.cap is not None:
        return HbarPoly(pv.vars, pv.cap)
    return Polynomial.zero(pv.vars)


def wedge(a: Polyvector, b: Polyvector) -> Polyvector:
    a._check(b)
    out: Dict[Index, object] = {}
    for I, c in a._terms.items():
        for J, d in b._terms.items():
            sign, key = _normalize(I + J)
            if not sign:
                continue
            v = c * d
            v = v if sign > 0 else -v
            out[key] = out[key] + v if key in out else v
    cap = a.cap if a.cap is not None else b.cap
    return Polyvector(a.vars, a.rank + b.rank, out, cap=cap)


def _theta_right_derivative(idx: Index, i: int):
    """d/dtheta_i acting from the right on theta_idx: (sign, remaining index)."""
    k = idx.index(i)
    sign = -1 if (len(idx) - 1 - k) % 2 else 1
    return sign, idx[:k] + idx[k + 1:]


def _raw_odd_bracket(a: Polyvector, b: Polyvector) -> Dict[Index, object]:
    """sum_i (R_i a)(d_i b) - (-1)^{(p-1)(q-1)} (R_i b)(d_i a) in theta order."""
    p, q = a.rank, b.rank
    out: Dict[Index, object] = {}

    def accumulate(x: Polyvector, y: Polyvector, outer_sign: int):
        for I, c in x._terms.items():
            for i in I:
                s1, rest = _theta_right_derivative(I, i)
                for J, d in y._terms.items():
                    dd = d.partial(i)
                    if dd.is_zero():
                        continue
                    s2, key = _normalize(rest + J)
                    if not s2:
                        continue
                    v = c * dd
                    if s1 * s2 * outer_sign < 0:
                        v = -v
                    out[key] = out[key] + v if key in out else v

    accumulate(a, b, 1)
    accumulate(b, a, 1 if ((p - 1) * (q - 1)) % 2 else -1)
    return out


def schouten(a: Polyvector, b: Polyvector) -> Polyvector:
    """Schouten-Nijenhuis bracket; rank ``p + q - 1`` (zero function when negative)."""
    a._check(b)
    p, q = a.rank, b.rank
    r = p + q - 1
    cap = a.cap if a.cap is not None else b.cap
    if r < 0:
        return Polyvector.zero(a.vars, 0, cap=cap)
    sign = _reversal_sign(p) * _reversal_sign(q) * _reversal_sign(r)
    raw = _raw_odd_bracket(a, b)
    if sign < 0:
        raw = {k: -v for k, v in raw.items()}
    return Polyvector(a.vars, r, raw, cap=cap)


def lie_derivative(xi: Polyvector, a: Polyvector) -> Polyvector:
    if xi.rank != 1:
        raise StructuralError(f"Lie derivative needs a vector field, got rank {xi.rank}")
    return schouten(xi, a)


def contract(psi: Polyvector, fs: Sequence) -> object:
    """``psi(df_1, ..., df_p)`` with the determinant pairing."""
    if len(fs) != psi.rank:
        raise StructuralError(f"rank {psi.rank} polyvector needs {psi.rank} functions")
    total = _zero_coeff(psi)
    for f in fs:
        if f.vars != psi.vars:
            raise StructuralError("function variables differ from polyvector variables")
    grads = [[f.partial(i) for i in range(len(psi.vars))] for f in fs]
    for I, c in psi._terms.items():
        for perm in permutations(range(len(I))):
            term = c
            for b, a in enumerate(perm):
                term = term * grads[b][I[a]]
            total = total + term if perm_sign(perm) > 0 else total - term
    return total


class PoissonStructure:
    """A bivector together with the outcome of the ``[pi, pi] = 0`` check."""

    __slots__ = ("bivector", "jacobi_verified")

    def __init__(self, bivector: Polyvector, jacobi_verified: bool | None = None):
        if bivector.rank != 2:
            raise StructuralError(f"Poisson structure needs a bivector, got rank {bivector.rank}")
        self.bivector = bivector
        if jacobi_verified is None:
            jacobi_verified = schouten(bivector, bivector).is_zero()
        self.jacobi_verified = jacobi_verified

    @property
    def vars(self):
        return self.bivector.vars

    def __repr__(self):
        return f"PoissonStructure({self.bivector}, jacobi_verified={self.jacobi_verified})"


def is_poisson(pi: Polyvector) -> bool:
    return PoissonStructure(pi).jacobi_verified


def _as_bivector(pi) -> Polyvector:
    return pi.bivector if isinstance(pi, PoissonStructure) else pi


def poisson_bracket(pi, f, g):
    """``{f, g} = pi(df, dg)``."""
    biv = _as_bivector(pi)
    if f.vars != biv.vars or g.vars != biv.vars:
        raise StructuralError("function variables differ from the Poisson structure's")
    return contract(biv, [f, g])


def d_pi(pi, a: Polyvector) -> Polyvector:
    """Lichnerowicz differential ``[pi, a]``."""
    return schouten(_as_bivector(pi), a)


def nijenhuis_defect(xi: Polyvector, pi) -> Polyvector:
    """``L_xi^2 pi``; zero iff ``xi`` is a Nijenhuis field."""
    if xi.rank != 1:
        raise StructuralError(f"Nijenhuis defect needs a vector field, got rank {xi.rank}")
    biv = _as_bivector(pi)
    return lie_derivative(xi, lie_derivative(xi, biv))


def hamiltonian_field(pi, f) -> Polyvector:
    """``X_f`` with ``X_f(g) = -{f, g}``."""
    biv = _as_bivector(pi)
    return Polyvector(
        biv.vars, 1, {(k,): -poisson_bracket(biv, f, x) for k, x in enumerate(Polynomial.gens(biv.vars))}
    )


def vector_field(variables, components: Dict[int, object]) -> Polyvector:
    """``sum_i components[i] * d_i`` (0-based indices)."""
    return Polyvector(variables, 1, {(i,): c for i, c in components.items()})


def lie_poisson(dim: int, structure_constants: Iterable[Tuple[int, int, int, object]], variables=None) -> Polyvector:
    """Linear bivector ``sum c_ij^k x_k d_i ^ d_j`` from 1-based ``(i, j, k, c)``.

    Each entry contributes once; listing both ``(i, j)`` and ``(j, i)``
    therefore double counts.
    """
    variables = tuple(variables) if variables is not None else tuple(f"x{i}" for i in range(1, dim + 1))
    if len(variables) != dim:
        raise StructuralError("variable count does not match dim")
    terms: Dict[Index, Polynomial] = {}
    for i, j, k, c in structure_constants:
        if not (1 <= i <= dim and 1 <= j <= dim and 1 <= k <= dim):
            raise StructuralError(f"structure constant index out of range: {(i, j, k)}")
        if i == j:
            continue
        sign, key = _normalize((i - 1, j - 1))
        v = Polynomial.var(variables, k - 1).scale(as_fraction(c) * sign)
        terms[key] = terms[key] + v if key in terms else v
    return Polyvector(variables, 2, terms)


def so3_bivector(variables=("x1", "x2", "x3")) -> Polyvector:
    """``x3 d1^d2 + x1 d2^d3 + x2 d3^d1``."""
    return lie_poisson(3, [(1, 2, 3, 1), (2, 3, 1, 1), (3, 1, 2, 1)], variables)


def gl2_bivector(variables=("x11", "x12", "x21", "x22")) -> Polyvector:
    """Lie-Poisson bivector of gl(2) from ``[E_ij, E_kl] = d_jk E_il - d_li E_kj``."""
    names = [(1, 1), (1, 2), (2, 1), (2, 2)]
    pos = {ij: n + 1 for n, ij in enumerate(names)}
    consts = []
    for a, (i, j) in enumerate(names):
        for b, (k, l) in enumerate(names):
            if a >= b:
                continue
            if j == k:
                consts.append((a + 1, b + 1, pos[(i, l)], 1))
            if l == i:
                consts.append((a + 1, b + 1, pos[(k, j)], -1))
    return lie_poisson(4, consts, variables)
