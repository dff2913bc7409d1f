"""Arity-truncated L-infinity algebras, morphisms, homotopies and derivations.

Internally every Taylor family lives on the suspension ``V[1]`` where the
structure maps are graded *symmetric* in shifted degrees ``|a| - 1`` and all
identities read as coderivation or coalgebra-map equations with plain Koszul
signs.  Users supply (and read back) the unshifted, graded-antisymmetric maps
``D_n : Lambda^n V -> V`` of degree ``2 - n``; the two are related by the
decalage sign ``(-1)^{n(n-1)/2 + sum_i (n - i)|a_i|}``.  Under it

* ``d[a,b] - [da,b] - (-1)^a [a,db]`` is the arity-2 structure defect,
* ``F1[a,b] - [F1 a, F1 b] = dF2(a,b) + F2(da,b) + (-1)^a F2(a,db)``,
* ``dPi + sum 1/n! D_n(Pi..Pi)`` is the Maurer-Cartan defect,
* the twisted differential of a DGLA is ``da + [Pi, a]``.

Backends: :class:`FiniteSpace` (abstract basis and tables),
:class:`TpolySpace` (polyvectors, Schouten bracket) and :class:`DpolySpace`
(polydifferential operators, Gerstenhaber bracket).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, product
from math import factorial
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

from .errors import DomainError, ResourceError, StructuralError
from .exact import Polynomial, as_fraction, fraction_str
from .hochschild import PolyDiffOp, gerstenhaber_bracket, hochschild_delta
from .polyvector import Polyvector, schouten


# ----------------------------------------------------------------------------
# signs and unshuffles

def sym_koszul_sign(perm: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign of ``a_1..a_n -> a_perm[0]..a_perm[n-1]`` in the symmetric convention.

    Each inverted pair of elements with degrees ``d, e`` contributes ``(-1)^{de}``.
    """
    if len(perm) != len(degrees):
        raise StructuralError("permutation and degree list lengths differ")
    sign = 1
    for x in range(len(perm)):
        for y in range(x + 1, len(perm)):
            if perm[x] > perm[y] and (degrees[perm[x]] * degrees[perm[y]]) % 2:
                sign = -sign
    return sign


def koszul_sign(perm: Sequence[int], degrees: Sequence[int]) -> int:
    """Exterior Koszul sign on unshifted degrees: a swap gives ``-(-1)^{de}``."""
    if len(perm) != len(degrees):
        raise StructuralError("permutation and degree list lengths differ")
    sign = sym_koszul_sign(perm, degrees)
    for x in range(len(perm)):
        for y in range(x + 1, len(perm)):
            if perm[x] > perm[y]:
                sign = -sign
    return sign


def unshuffles(i: int, j: int) -> List[Tuple[int, ...]]:
    """Permutations ``s`` of ``0..i+j-1`` increasing on both blocks ``[:i]`` and ``[i:]``."""
    if i < 0 or j < 0:
        raise StructuralError("block sizes must be non-negative")
    n = i + j
    out = []
    for first in combinations(range(n), i):
        rest = tuple(k for k in range(n) if k not in first)
        out.append(first + rest)
    return out


def block_unshuffles(sizes: Sequence[int]) -> List[Tuple[int, ...]]:
    """Unshuffles for consecutive blocks of the given sizes."""
    n = sum(sizes)

    def rec(avail: Tuple[int, ...], k: int):
        if k == len(sizes):
            yield ()
            return
        for chosen in combinations(avail, sizes[k]):
            left = tuple(a for a in avail if a not in chosen)
            for tail in rec(left, k + 1):
                yield chosen + tail

    return list(rec(tuple(range(n)), 0))


def compositions(n: int, k: int) -> List[Tuple[int, ...]]:
    """Ordered ``k``-tuples of positive integers summing to ``n``."""
    if k == 0:
        return [()] if n == 0 else []
    out = []
    for first in range(1, n - k + 2):
        for rest in compositions(n - first, k - 1):
            out.append((first,) + rest)
    return out


def decalage_sign(degrees: Sequence[int]) -> int:
    """Relates unshifted ``M(a_1..a_n)`` to its shifted counterpart."""
    n = len(degrees)
    e = n * (n - 1) // 2 + sum((n - 1 - i) * d for i, d in enumerate(degrees))
    return -1 if e % 2 else 1


# ----------------------------------------------------------------------------
# finite backend

class Vec:
    """Element of a finite graded space: ``{basis name: Fraction}``."""

    __slots__ = ("_c",)

    def __init__(self, coords: Dict[str, object] | None = None):
        self._c = {k: as_fraction(v) for k, v in (coords or {}).items() if as_fraction(v)}

    @classmethod
    def basis(cls, name: str) -> "Vec":
        return cls({name: 1})

    def items(self):
        return sorted(self._c.items())

    def coeff(self, name: str) -> Fraction:
        return self._c.get(name, Fraction(0))

    def is_zero(self) -> bool:
        return not self._c

    def __add__(self, other):
        if not isinstance(other, Vec):
            return NotImplemented
        out = dict(self._c)
        for k, v in other._c.items():
            out[k] = out.get(k, 0) + v
        return Vec(out)

    def __neg__(self):
        return Vec({k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "Vec":
        c = as_fraction(c)
        return Vec({k: c * v for k, v in self._c.items()})

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, Vec):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def __str__(self):
        if not self._c:
            return "0"
        parts = []
        for k, v in self.items():
            parts.append(k if v == 1 else f"-{k}" if v == -1 else f"{fraction_str(v)}*{k}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"Vec({self})"


class FiniteSpace:
    """Graded space with a finite named basis; degrees are unshifted."""

    kind = "finite"

    def __init__(self, basis: Sequence[Tuple[str, int]]):
        names = [b[0] for b in basis]
        if len(set(names)) != len(names):
            raise StructuralError("basis names must be unique")
        self.basis = tuple((str(n), int(d)) for n, d in basis)
        self._deg = dict(self.basis)
        self._pos = {n: i for i, (n, _) in enumerate(self.basis)}

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.basis)

    def check(self, v):
        if not isinstance(v, Vec):
            raise StructuralError(f"expected a Vec, got {type(v).__name__}")
        for k, _ in v.items():
            if k not in self._deg:
                raise StructuralError(f"unknown basis element {k!r}")

    def zero(self) -> Vec:
        return Vec()

    def vec(self, name: str) -> Vec:
        if name not in self._deg:
            raise StructuralError(f"unknown basis element {name!r}")
        return Vec.basis(name)

    def basis_degree(self, name: str) -> int:
        return self._deg[name]

    def degree(self, v: Vec) -> int:
        degs = {self._deg[k] for k, _ in v.items()}
        if len(degs) != 1:
            raise DomainError(f"element {v} is not homogeneous")
        return degs.pop()

    def parts(self, v: Vec) -> List[Vec]:
        self.check(v)
        by: Dict[int, Dict[str, Fraction]] = {}
        for k, c in v.items():
            by.setdefault(self._deg[k], {})[k] = c
        return [Vec(by[d]) for d in sorted(by)]

    def probes(self) -> List[Vec]:
        return [Vec.basis(n) for n in self.names]

    def label(self, v: Vec) -> str:
        return str(v)

    def __repr__(self):
        return f"FiniteSpace({list(self.basis)})"


class GradedMap:
    """Unshifted graded-antisymmetric multilinear map on a :class:`FiniteSpace`.

    ``entries`` maps argument tuples (any order) to values; antisymmetry fills
    in the rest with exterior Koszul signs.
    """

    def __init__(self, space: FiniteSpace, arity: int, degree: int, entries: Dict[Tuple[str, ...], Vec] | None = None):
        if arity < 1:
            raise StructuralError("graded maps have arity >= 1")
        self.space = space
        self.arity = arity
        self.degree = degree
        self._table: Dict[Tuple[str, ...], Vec] = {}
        for args, val in (entries or {}).items():
            args = tuple(args)
            if len(args) != arity:
                raise StructuralError(f"entry {args} does not have arity {arity}")
            space.check(val)
            sign, key = self._canon(args)
            if sign == 0:
                if not val.is_zero():
                    raise StructuralError(f"entry {args} must vanish by antisymmetry")
                continue
            if not val.is_zero():
                want = sum(space.basis_degree(a) for a in args) + degree
                if space.degree(val) != want:
                    raise StructuralError(f"entry {args} -> {val} is not of degree {degree}")
            v = val if sign > 0 else -val
            if key in self._table and self._table[key] != v:
                raise StructuralError(f"conflicting entries for {key}")
            self._table[key] = v
        self._table = {k: v for k, v in self._table.items() if not v.is_zero()}

    def _canon(self, args: Tuple[str, ...]):
        pos = self.space._pos
        for a in args:
            if a not in pos:
                raise StructuralError(f"unknown basis element {a!r}")
        perm = sorted(range(len(args)), key=lambda k: pos[args[k]])
        key = tuple(args[k] for k in perm)
        degs = [self.space.basis_degree(a) for a in args]
        sign = koszul_sign(perm, degs)
        for a, b in zip(key, key[1:]):
            if a == b and self.space.basis_degree(a) % 2 == 0:
                return 0, key
        return sign, key

    def on_basis(self, args: Sequence[str]) -> Vec:
        sign, key = self._canon(tuple(args))
        if not sign:
            return Vec()
        v = self._table.get(key)
        if v is None:
            return Vec()
        return v if sign > 0 else -v

    def __call__(self, *args: Vec) -> Vec:
        if len(args) != self.arity:
            raise StructuralError(f"map of arity {self.arity} given {len(args)} arguments")
        total = Vec()
        for choice in product(*[a.items() for a in args]):
            coef = Fraction(1)
            names = []
            for name, c in choice:
                coef *= c
                names.append(name)
            total = total + self.on_basis(names).scale(coef)
        return total

    def entries(self):
        return sorted(self._table.items())

    def is_zero(self) -> bool:
        return not self._table

    def __repr__(self):
        return f"GradedMap(arity={self.arity}, degree={self.degree}, {len(self._table)} entries)"


# ----------------------------------------------------------------------------
# polynomial backends

class TpolySpace:
    """Polyvector fields on fixed variables; degree = rank - 1."""

    kind = "tpoly"

    def __init__(self, variables, cap=None):
        self.vars = tuple(variables)
        self.cap = cap

    def check(self, a):
        if not isinstance(a, Polyvector) or a.vars != self.vars:
            raise StructuralError("expected a Polyvector on the space's variables")

    def zero(self) -> Polyvector:
        return Polyvector.zero(self.vars, 0, cap=self.cap)

    def degree(self, a: Polyvector) -> int:
        return a.rank - 1

    def parts(self, a) -> list:
        self.check(a)
        return [] if a.is_zero() else [a]

    def label(self, a) -> str:
        return str(a)

    def probes(self, max_degree: int = 1, max_rank: int | None = None) -> list:
        """Basis polyvectors times monomials of degree <= ``max_degree``."""
        n = len(self.vars)
        top = n if max_rank is None else min(max_rank, n)
        out = []
        for r in range(top + 1):
            for idx in combinations(range(n), r):
                for m in _monomials(self.vars, max_degree):
                    out.append(Polyvector(self.vars, r, {idx: m}, cap=self.cap))
        return out

    def __repr__(self):
        return f"TpolySpace({self.vars}, cap={self.cap})"


class DpolySpace:
    """Polydifferential operators on fixed variables; degree = arity - 1."""

    kind = "dpoly"

    def __init__(self, variables, cap=None):
        self.vars = tuple(variables)
        self.cap = cap

    def check(self, a):
        if not isinstance(a, PolyDiffOp) or a.vars != self.vars:
            raise StructuralError("expected a PolyDiffOp on the space's variables")

    def zero(self) -> PolyDiffOp:
        return PolyDiffOp.zero(self.vars, 0, cap=self.cap)

    def degree(self, a: PolyDiffOp) -> int:
        return a.arity - 1

    def parts(self, a) -> list:
        self.check(a)
        return [] if a.is_zero() else [a]

    def label(self, a) -> str:
        return str(a)

    def probes(self, max_degree: int = 1, max_arity: int = 2) -> list:
        """Operators of order <= 1 in each slot with monomial coefficients."""
        n = len(self.vars)
        orders = [(0,) * n] + [tuple(int(k == i) for k in range(n)) for i in range(n)]
        out = []
        for a in range(max_arity + 1):
            for key in product(orders, repeat=a):
                for m in _monomials(self.vars, max_degree):
                    out.append(PolyDiffOp(self.vars, a, {key: m}, cap=self.cap))
        return out

    def __repr__(self):
        return f"DpolySpace({self.vars}, cap={self.cap})"


def _monomials(variables, max_degree: int) -> List[Polynomial]:
    n = len(variables)
    exps = [e for e in product(range(max_degree + 1), repeat=n) if sum(e) <= max_degree]
    exps.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return [Polynomial.monomial(variables, e) for e in exps]


# ----------------------------------------------------------------------------
# Taylor families

ShiftedFn = Callable[[tuple], object]


class Family:
    """Shifted Taylor coefficients ``{n: fn}`` between two spaces, zero above ``cutoff``."""

    def __init__(self, source, target, maps: Dict[int, ShiftedFn], cutoff: int):
        self.source = source
        self.target = target
        self.maps = dict(maps)
        self.cutoff = cutoff

    def __call__(self, n: int, args: Sequence) -> object:
        if len(args) != n:
            raise StructuralError(f"arity {n} given {len(args)} arguments")
        fn = self.maps.get(n)
        if fn is None or n > self.cutoff:
            return self.target.zero()
        total = self.target.zero()
        for parts in product(*[self.source.parts(a) for a in args]):
            v = fn(tuple(parts))
            if not _is_zero(v):
                total = total + v
        return total

    def max_arity(self) -> int:
        return max((n for n in self.maps if n <= self.cutoff), default=0)


def _is_zero(v) -> bool:
    return v.is_zero()


def _shift_unshifted(space, fn: Callable) -> ShiftedFn:
    def shifted(args):
        v = fn(*args)
        if decalage_sign([space.degree(a) for a in args]) < 0:
            v = -v
        return v

    return shifted


def _check_degrees(maps: Dict[int, Callable], offset: int, what: str) -> None:
    """Tables given as :class:`GradedMap` must have degree ``offset - n``."""
    for n, m in maps.items():
        if isinstance(m, GradedMap):
            if m.arity != n:
                raise StructuralError(f"table for {what}_{n} has arity {m.arity}")
            if m.degree != offset - n:
                raise StructuralError(f"{what}_{n} must have degree {offset - n}, got {m.degree}")


def _sdeg(space, a) -> int:
    return space.degree(a) - 1


def _sum(space, items) -> object:
    total = space.zero()
    for v in items:
        if not _is_zero(v):
            total = total + v
    return total


def _homogeneous_tuples(space, args: Sequence) -> Iterable[tuple]:
    return product(*[space.parts(a) for a in args])


def _compose_taylor(outer: Family, inner: Family, args: tuple, space) -> object:
    """``sum_i sum_{unsh(i, n-i)} eps * outer_{n-i+1}(inner_i(first block), rest)``."""
    n = len(args)
    degs = [_sdeg(space, a) for a in args]
    total = outer.target.zero()
    for i in range(1, n + 1):
        if i > inner.cutoff or i not in inner.maps or n - i + 1 > outer.cutoff or (n - i + 1) not in outer.maps:
            continue
        for s in unshuffles(i, n - i):
            inner_val = inner(i, tuple(args[k] for k in s[:i]))
            if _is_zero(inner_val):
                continue
            v = outer(n - i + 1, (inner_val,) + tuple(args[k] for k in s[i:]))
            if _is_zero(v):
                continue
            total = total + (v if sym_koszul_sign(s, degs) > 0 else -v)
    return total


# ----------------------------------------------------------------------------
# algebras, morphisms, derivations

class LInftyAlgebra:
    """L-infinity structure truncated at ``cutoff``.

    ``dgla`` holds unshifted ``(d, bracket)`` callables when all structure
    maps above arity 2 vanish.
    """

    def __init__(self, space, shifted: Dict[int, ShiftedFn], cutoff: int = 4, dgla=None):
        self.space = space
        self.cutoff = cutoff
        self.q = Family(space, space, shifted, cutoff)
        self.dgla = dgla

    @property
    def is_dgla(self) -> bool:
        return self.dgla is not None

    @classmethod
    def from_dgla(cls, space, d: Callable | None, bracket: Callable, cutoff: int = 4) -> "LInftyAlgebra":
        """DGLA with unshifted differential ``d`` (``None`` for zero) and bracket."""
        zero_d = d is None
        d_fn = (lambda a: space.zero()) if zero_d else d
        maps = {2: _shift_unshifted(space, bracket)}
        if not zero_d:
            maps[1] = _shift_unshifted(space, d_fn)
        return cls(space, maps, cutoff, dgla=(d_fn, bracket))

    @classmethod
    def from_maps(cls, space: FiniteSpace, maps: Dict[int, GradedMap], cutoff: int = 4) -> "LInftyAlgebra":
        """Finite algebra from unshifted tables ``D_n`` (degree ``2 - n``)."""
        for n, m in maps.items():
            if m.arity != n:
                raise StructuralError(f"table for D_{n} has arity {m.arity}")
            if m.degree != 2 - n:
                raise StructuralError(f"D_{n} must have degree {2 - n}, got {m.degree}")
        shifted = {n: _shift_unshifted(space, m) for n, m in maps.items() if not m.is_zero()}
        dgla = None
        if all(n <= 2 or m.is_zero() for n, m in maps.items()):
            d = maps.get(1)
            br = maps.get(2)
            dgla = (
                (lambda a: d(a)) if d is not None else (lambda a: space.zero()),
                (lambda a, b: br(a, b)) if br is not None else (lambda a, b: space.zero()),
            )
        alg = cls(space, shifted, cutoff, dgla=dgla)
        alg.tables = dict(maps)
        return alg

    def D(self, n: int, *args):
        """Unshifted ``D_n`` evaluated on (possibly inhomogeneous) arguments."""
        return _unshifted_eval(self.q, self.space, n, args)

    def d(self, a):
        return self.D(1, a)

    def bracket(self, a, b):
        return self.D(2, a, b)


def _unshifted_eval(fam: Family, space, n: int, args) -> object:
    total = fam.target.zero()
    for parts in _homogeneous_tuples(space, args):
        v = fam(n, parts)
        if _is_zero(v):
            continue
        if decalage_sign([space.degree(a) for a in parts]) < 0:
            v = -v
        total = total + v
    return total


def tpoly_dgla(variables, cap=None, cutoff: int = 4) -> LInftyAlgebra:
    """Polyvector fields with zero differential and the Schouten bracket."""
    return LInftyAlgebra.from_dgla(TpolySpace(variables, cap), None, schouten, cutoff)


def dpoly_dgla(variables, cap=None, cutoff: int = 4) -> LInftyAlgebra:
    """Polydifferential operators with ``delta = [mu, .]`` and the Gerstenhaber bracket."""
    return LInftyAlgebra.from_dgla(DpolySpace(variables, cap), hochschild_delta, gerstenhaber_bracket, cutoff)


class LInftyMorphism:
    """``F = {F_n}``: source -> target, stored shifted (all of degree 0)."""

    def __init__(self, source: LInftyAlgebra, target: LInftyAlgebra, shifted: Dict[int, ShiftedFn], cutoff: int | None = None):
        self.source = source
        self.target = target
        cutoff = cutoff if cutoff is not None else min(source.cutoff, target.cutoff)
        self.f = Family(source.space, target.space, shifted, cutoff)

    @property
    def cutoff(self) -> int:
        return self.f.cutoff

    @classmethod
    def from_unshifted(cls, source, target, maps: Dict[int, Callable], cutoff=None) -> "LInftyMorphism":
        """Unshifted ``F_n`` of degree ``1 - n`` (callables or :class:`GradedMap`)."""
        _check_degrees(maps, 1, "F")
        return cls(source, target, {n: _shift_unshifted(source.space, m) for n, m in maps.items()}, cutoff)

    @classmethod
    def identity(cls, alg: LInftyAlgebra) -> "LInftyMorphism":
        return cls(alg, alg, {1: lambda args: args[0]})

    def F(self, n: int, *args):
        return _unshifted_eval(self.f, self.source.space, n, args)


class LInftyDerivation:
    """Coderivation ``X = {X_n}`` of degree 0 commuting (when valid) with ``D``."""

    def __init__(self, algebra: LInftyAlgebra, shifted: Dict[int, ShiftedFn], cutoff: int | None = None):
        self.algebra = algebra
        self.x = Family(algebra.space, algebra.space, shifted, cutoff if cutoff is not None else algebra.cutoff)

    @classmethod
    def from_unshifted(cls, algebra, maps: Dict[int, Callable], cutoff=None) -> "LInftyDerivation":
        """Unshifted ``X_n`` of degree ``1 - n``, so that ``X`` has total degree 0."""
        _check_degrees(maps, 1, "X")
        return cls(algebra, {n: _shift_unshifted(algebra.space, m) for n, m in maps.items()}, cutoff)

    @classmethod
    def zero(cls, algebra) -> "LInftyDerivation":
        return cls(algebra, {})

    @property
    def cutoff(self) -> int:
        return self.x.cutoff

    def X(self, n: int, *args):
        return _unshifted_eval(self.x, self.algebra.space, n, args)

    def is_linear(self) -> bool:
        return all(n == 1 for n in self.x.maps)


@dataclass
class MCElement:
    """Degree-1 element of an algebra; ``verified`` once its defect is zero."""

    algebra: LInftyAlgebra
    value: object
    verified: bool = False

    def verify(self) -> bool:
        self.verified = _is_zero(mc_defect(self.algebra, self))
        return self.verified


def _mc_value(L: LInftyAlgebra, m) -> object:
    value = m.value if isinstance(m, MCElement) else m
    parts = L.space.parts(value)
    if len(parts) > 1 or (parts and L.space.degree(parts[0]) != 1):
        raise DomainError("Maurer-Cartan elements must have degree 1")
    return value


def _require_mc(L: LInftyAlgebra, m) -> object:
    value = _mc_value(L, m)
    if isinstance(m, MCElement) and m.verified:
        return value
    if not _is_zero(mc_defect(L, value)):
        raise DomainError("element does not satisfy the Maurer-Cartan equation")
    if isinstance(m, MCElement):
        m.verified = True
    return value


def _pi_powers(n_max: int, value) -> Iterable[Tuple[int, tuple]]:
    for k in range(n_max + 1):
        yield k, (value,) * k


def mc_defect(L: LInftyAlgebra, m) -> object:
    """``sum_{n=1}^{cutoff} 1/n! D_n(Pi, ..., Pi)``."""
    value = _mc_value(L, m)
    if _is_zero(value):
        return L.space.zero()
    terms = []
    for n in range(1, L.cutoff + 1):
        v = L.q(n, (value,) * n)
        if not _is_zero(v):
            terms.append(v.scale(Fraction(1, factorial(n))))
    return _sum(L.space, terms)


def _twisted_family(fam: Family, value, cutoff: int) -> Dict[int, ShiftedFn]:
    maps = {}
    top = fam.max_arity()
    for n in range(1, cutoff + 1):
        ks = [k for k in range(0, cutoff - n + 1) if (n + k) in fam.maps and n + k <= top]
        if not ks:
            continue

        def fn(args, n=n, ks=ks):
            out = []
            for k in ks:
                v = fam(n + k, tuple(args) + (value,) * k)
                if not _is_zero(v):
                    out.append(v.scale(Fraction(1, factorial(k))))
            return _sum(fam.target, out)

        maps[n] = fn
    return maps


def twist_structure(L: LInftyAlgebra, m) -> LInftyAlgebra:
    """``D^Pi_n(v) = sum_k 1/k! D_{n+k}(v, Pi^k)``."""
    value = _require_mc(L, m)
    if _is_zero(value):
        return L
    maps = _twisted_family(L.q, value, L.cutoff)
    dgla = None
    if L.is_dgla:
        d, br = L.dgla
        dgla = (lambda a: d(a) + br(value, a), br)
    out = LInftyAlgebra(L.space, maps, L.cutoff, dgla=dgla)
    out.twisted_by = value
    return out


def push_mc(F: LInftyMorphism, m) -> MCElement:
    """``F(Pi) = sum 1/n! F_n(Pi, ..., Pi)``; the result is re-verified in the target."""
    value = _require_mc(F.source, m)
    terms = []
    if not _is_zero(value):
        for n in range(1, F.cutoff + 1):
            v = F.f(n, (value,) * n)
            if not _is_zero(v):
                terms.append(v.scale(Fraction(1, factorial(n))))
    out = MCElement(F.target, _sum(F.target.space, terms))
    out.verify()
    return out


def twist_morphism(F: LInftyMorphism, m) -> LInftyMorphism:
    """``F^Pi_n(v) = sum_k 1/k! F_{n+k}(v, Pi^k)`` between the twisted algebras."""
    value = _require_mc(F.source, m)
    pushed = push_mc(F, value)
    if not pushed.verified:
        raise DomainError("pushed element is not Maurer-Cartan in the target")
    src = twist_structure(F.source, value)
    tgt = twist_structure(F.target, pushed)
    maps = _twisted_family(F.f, value, F.cutoff) if not _is_zero(value) else F.f.maps
    return LInftyMorphism(src, tgt, maps, F.cutoff)


# ----------------------------------------------------------------------------
# defects

def _check_arity(n: int, cutoff: int, args=None, expected=None):
    if args is not None and len(args) != (n if expected is None else expected):
        raise StructuralError(f"arity {n} given {len(args)} arguments")
    if n < 1:
        raise StructuralError("arity must be >= 1")
    if n > cutoff:
        raise DomainError(f"arity {n} exceeds cutoff {cutoff}")


def _unshift(space, t: tuple, value) -> object:
    """Shifted value on the homogeneous tuple ``t`` in unshifted normalization."""
    if _is_zero(value) or decalage_sign([space.degree(a) for a in t]) > 0:
        return value
    return -value


def jacobi_defect(L: LInftyAlgebra, n: int, args: Sequence) -> object:
    """Arity-n component of ``D o D``; zero for an L-infinity algebra.

    For a DGLA, ``n = 2`` gives ``d[a,b] - [da,b] - (-1)^a [a,db]`` and
    ``n = 3`` minus the Jacobiator.
    """
    _check_arity(n, L.cutoff, args)
    sp = L.space
    return _sum(sp, (_unshift(sp, t, _compose_taylor(L.q, L.q, t, sp)) for t in _homogeneous_tuples(sp, args)))


def morphism_defect(F: LInftyMorphism, n: int, args: Sequence) -> object:
    """``F o D_V - D_W o F`` in arity n."""
    _check_arity(n, F.cutoff, args)
    V, W = F.source, F.target
    total = []
    for t in _homogeneous_tuples(V.space, args):
        sgn = decalage_sign([V.space.degree(a) for a in t])
        total.append(_compose_taylor(F.f, V.q, t, V.space).scale(sgn))
        degs = [_sdeg(V.space, a) for a in t]
        for k in range(1, n + 1):
            if k > W.cutoff or k not in W.q.maps:
                continue
            scale = Fraction(1, factorial(k))
            for sizes in compositions(n, k):
                if any(s > F.cutoff or s not in F.f.maps for s in sizes):
                    continue
                for s in block_unshuffles(sizes):
                    outs = []
                    pos = 0
                    for size in sizes:
                        outs.append(F.f(size, tuple(t[j] for j in s[pos:pos + size])))
                        pos += size
                    if any(_is_zero(o) for o in outs):
                        continue
                    v = W.q(k, tuple(outs))
                    if _is_zero(v):
                        continue
                    v = v.scale(scale * sgn)
                    total.append(-v if sym_koszul_sign(s, degs) > 0 else v)
    return _sum(W.space, total)


def homotopy_defect(F: LInftyMorphism, G: LInftyMorphism, H: Dict[int, Callable], n: int, args: Sequence) -> object:
    """``F_n - G_n - (D H + H D)_n`` for endomorphism homotopies.

    ``H`` holds unshifted ``H_n`` of degree ``-n``.
    """
    if F.source is not G.source or F.target is not G.target:
        raise StructuralError("homotopic morphisms must share source and target")
    if F.source is not F.target and F.source.space is not F.target.space:
        raise StructuralError("homotopy defect is defined for maps of an algebra to itself")
    _check_arity(n, F.cutoff, args)
    _check_degrees(H, 0, "H")
    V = F.source
    W = F.target
    h = Family(V.space, W.space, {k: _shift_unshifted(V.space, m) for k, m in H.items()}, F.cutoff)
    total = []
    for t in _homogeneous_tuples(V.space, args):
        v = F.f(n, t) - G.f(n, t) - _compose_taylor(W.q, h, t, V.space) - _compose_taylor(h, V.q, t, V.space)
        total.append(_unshift(V.space, t, v))
    return _sum(W.space, total)


def derivation_defect(X: LInftyDerivation, n: int, args: Sequence) -> object:
    """``D o X - X o D`` on ``n + 1`` arguments ``a_0..a_n``; DGLA structures only.

    ``n = 0`` is the chain-map condition ``d X_1 - X_1 d``.
    """
    L = X.algebra
    if not L.is_dgla:
        raise DomainError("derivation checking is only supported for DG Lie algebras")
    if n < 0:
        raise StructuralError("derivation index must be >= 0")
    _check_arity(n + 1, X.cutoff, args)
    out = []
    for t in _homogeneous_tuples(L.space, args):
        v = _compose_taylor(L.q, X.x, t, L.space) - _compose_taylor(X.x, L.q, t, L.space)
        out.append(_unshift(L.space, t, v))
    return _sum(L.space, out)


def x_of_pi(X: LInftyDerivation, m) -> object:
    """``X(Pi) = sum 1/n! X_n(Pi, ..., Pi)``."""
    value = _require_mc(X.algebra, m)
    if _is_zero(value):
        return X.algebra.space.zero()
    out = []
    for n in range(1, X.cutoff + 1):
        v = X.x(n, (value,) * n)
        if not _is_zero(v):
            out.append(v.scale(Fraction(1, factorial(n))))
    return _sum(X.algebra.space, out)


def twisted_family(X: LInftyDerivation, m) -> Family:
    """Shifted family ``X_{Pi,n}(a) = sum_p 1/p! X_{n+p}(a, Pi^p)``."""
    value = _require_mc(X.algebra, m)
    if _is_zero(value):
        return X.x
    sp = X.algebra.space
    return Family(sp, sp, _twisted_family(X.x, value, X.cutoff), X.cutoff)


def x_pi(X: LInftyDerivation, m, n: int, args: Sequence) -> object:
    """Unshifted ``X_{Pi,n}(a_1..a_n)``; at ``n = 1`` this is ``X_Pi(a)``."""
    _check_arity(n, X.cutoff, args)
    fam = twisted_family(X, m)
    return _unshifted_eval(fam, X.algebra.space, len(args), args)


def twisted_derivation_defect(X: LInftyDerivation, m, args: Sequence) -> object:
    """``[D^Pi, X_Pi]_n(a) + D^Pi_{n+1}(X(Pi), a)``; zero for any derivation.

    This is the first-order part in ``t`` of ``exp(t X)^Pi`` intertwining
    ``D^Pi`` with ``D^{exp(tX)(Pi)}``.
    """
    L = X.algebra
    value = _require_mc(L, m)
    Lp = twist_structure(L, value)
    fam = twisted_family(X, value)
    xp = x_of_pi(X, value)
    out = []
    for t in _homogeneous_tuples(L.space, args):
        out.append(_compose_taylor(Lp.q, fam, t, L.space))
        out.append(-_compose_taylor(fam, Lp.q, t, L.space))
        for part in L.space.parts(xp):
            v = Lp.q(len(t) + 1, (part,) + tuple(t))
            if not _is_zero(v):
                out.append(v)
    return _sum(L.space, out)


def twisted_derivation_literal_defect(X: LInftyDerivation, m, a) -> object:
    """``X_Pi(d_Pi a) - d_{Pi + X(Pi)}(X_Pi a)``, the intertwining read literally.

    This is not an identity in general (it already fails for inner
    derivations); :func:`twisted_derivation_defect` and
    :func:`twisted_exp_defect` are the forms that hold.
    """
    L = X.algebra
    value = _require_mc(L, m)
    shifted_mc = value + x_of_pi(X, value)
    Lp = twist_structure(L, value)
    q_new = Family(L.space, L.space, _twisted_family(L.q, shifted_mc, L.cutoff), L.cutoff)
    fam = twisted_family(X, value)
    out = []
    for part in L.space.parts(a):
        out.append(fam(1, (Lp.q(1, (part,)),)))
        for xa in L.space.parts(fam(1, (part,))):
            out.append(-q_new(1, (xa,)))
    return _sum(L.space, out)


def twisted_exp_defect(X: LInftyDerivation, m, n: int, args: Sequence, t=1, order: int | None = None) -> object:
    """Morphism defect of ``exp(tX)`` twisted by ``Pi``.

    ``exp(tX)^Pi`` must be an L-infinity morphism from the ``Pi``-twisted
    structure to the one twisted by ``exp(tX)(Pi)``.
    """
    F = exp_derivation(X, t, order=order)
    return morphism_defect(twist_morphism(F, m), n, args)


# ----------------------------------------------------------------------------
# reports

@dataclass
class DefectReport:
    """Residuals of an identity check over a set of argument tuples."""

    name: str
    checked_arity: int
    truncation: Dict[str, object]
    residuals: List[Tuple[Tuple[str, ...], object]] = field(default_factory=list)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.residuals

    def add(self, labels: Tuple[str, ...], value) -> None:
        self.checked += 1
        if not _is_zero(value):
            self.residuals.append((tuple(labels), value))

    def merge(self, other: "DefectReport") -> None:
        self.checked += other.checked
        self.residuals.extend(other.residuals)
        self.checked_arity = max(self.checked_arity, other.checked_arity)

    def to_dict(self) -> dict:
        from .io import element_to_json

        return {
            "name": self.name,
            "checked_arity": self.checked_arity,
            "truncation": self.truncation,
            "checked": self.checked,
            "residuals": [{"tuple": list(t), "value": element_to_json(v)} for t, v in self.residuals],
            "pass": self.passed,
        }


def _tuples(probes: Sequence, n: int):
    return combinations_with_replacement(range(len(probes)), n)


def _truncation(cutoff: int, space) -> Dict[str, object]:
    out = {"arity_cutoff": cutoff}
    cap = getattr(space, "cap", None)
    if cap is not None:
        out["hbar_cap"] = cap
    return out


def jacobi_sweep(L: LInftyAlgebra, max_arity: int | None = None, probes=None) -> DefectReport:
    probes = list(probes) if probes is not None else L.space.probes()
    top = min(max_arity or L.cutoff, L.cutoff)
    rep = DefectReport("jacobi", top, _truncation(L.cutoff, L.space))
    for n in range(1, top + 1):
        for idx in _tuples(probes, n):
            args = tuple(probes[i] for i in idx)
            rep.add(tuple(L.space.label(a) for a in args), jacobi_defect(L, n, args))
    return rep


def morphism_sweep(F: LInftyMorphism, max_arity: int | None = None, probes=None) -> DefectReport:
    probes = list(probes) if probes is not None else F.source.space.probes()
    top = min(max_arity or F.cutoff, F.cutoff)
    rep = DefectReport("morphism", top, _truncation(F.cutoff, F.source.space))
    for n in range(1, top + 1):
        for idx in _tuples(probes, n):
            args = tuple(probes[i] for i in idx)
            rep.add(tuple(F.source.space.label(a) for a in args), morphism_defect(F, n, args))
    return rep


def derivation_sweep(X: LInftyDerivation, max_arity: int | None = None, probes=None) -> DefectReport:
    sp = X.algebra.space
    probes = list(probes) if probes is not None else sp.probes()
    top = min(max_arity or X.cutoff, X.cutoff)
    rep = DefectReport("derivation", top, _truncation(X.cutoff, sp))
    for n in range(1, top + 1):
        for idx in _tuples(probes, n):
            args = tuple(probes[i] for i in idx)
            rep.add(tuple(sp.label(a) for a in args), derivation_defect(X, n - 1, args))
    return rep


def homotopy_sweep(F, G, H, max_arity=None, probes=None) -> DefectReport:
    sp = F.source.space
    probes = list(probes) if probes is not None else sp.probes()
    top = min(max_arity or F.cutoff, F.cutoff)
    rep = DefectReport("homotopy", top, _truncation(F.cutoff, sp))
    for n in range(1, top + 1):
        for idx in _tuples(probes, n):
            args = tuple(probes[i] for i in idx)
            rep.add(tuple(sp.label(a) for a in args), homotopy_defect(F, G, H, n, args))
    return rep


def nijenhuis_defects(X: LInftyDerivation, m, max_arity: int | None = None, probes=None, arities=None) -> DefectReport:
    """Weak and strong Nijenhuis residuals with respect to the MC element.

    Strong defects are ``X_{Pi,n}(X(Pi), a_2..a_n)`` for every filling of the
    remaining slots from ``probes`` (the basis for finite spaces).  ``arities``
    restricts which ``n`` are checked; the report records the range used.
    """
    L = X.algebra
    value = _require_mc(L, m)
    sp = L.space
    top = min(max_arity or X.cutoff, X.cutoff)
    checked = sorted(set(arities) if arities is not None else range(1, top + 1))
    trunc = _truncation(X.cutoff, sp)
    trunc["arities"] = checked
    rep = DefectReport("nijenhuis", max(checked, default=0), trunc)
    xp = x_of_pi(X, value)
    rep.x_of_pi = xp
    if _is_zero(xp):
        rep.weak = sp.zero()
        return rep
    if probes is None:
        if not hasattr(sp, "probes"):
            raise DomainError("polynomial backends need an explicit probe list")
        probes = sp.probes()
    probes = list(probes)
    fam = twisted_family(X, value)
    rep.weak = _unshifted_eval(fam, sp, 1, (xp,))
    for n in checked:
        if n > X.cutoff:
            raise DomainError(f"arity {n} exceeds cutoff {X.cutoff}")
        for idx in _tuples(probes, n - 1):
            rest = tuple(probes[i] for i in idx)
            v = _unshifted_eval(fam, sp, n, (xp,) + rest)
            label = ("X(Pi)",) + tuple(sp.label(a) for a in rest)
            rep.add(label, v)
    return rep


# ----------------------------------------------------------------------------
# exponentials

def _coderivation_step(fam: Family, space, words: List[Tuple[Fraction, tuple]]) -> List[Tuple[Fraction, tuple]]:
    out = []
    for coef, w in words:
        m = len(w)
        degs = [_sdeg(space, a) for a in w]
        for i in range(1, m + 1):
            if i not in fam.maps or i > fam.cutoff:
                continue
            for s in unshuffles(i, m - i):
                v = fam(i, tuple(w[k] for k in s[:i]))
                if _is_zero(v):
                    continue
                sign = sym_koszul_sign(s, degs)
                rest = tuple(w[k] for k in s[i:])
                for part in space.parts(v):
                    out.append((coef * sign, (part,) + rest))
    return out


def exp_derivation(X: LInftyDerivation, t=1, order: int | None = None, max_order: int = 64) -> LInftyMorphism:
    """Taylor coefficients of ``exp(t X)`` as a coalgebra self-map.

    With ``order`` given the exponential series is truncated after ``t^order``.
    Otherwise the series must terminate on every evaluated argument within
    ``max_order`` steps, else :class:`ResourceError`.
    """
    t = as_fraction(t)
    L = X.algebra
    sp = L.space

    def taylor(n):
        def fn(args):
            words = [(Fraction(1), tuple(args))]
            total = []
            k = 0
            while words:
                if order is not None and k > order:
                    break
                if order is None and k > max_order:
                    raise ResourceError(f"exp(X) series did not terminate within {max_order} terms")
                w = t**k / factorial(k)
                for coef, word in words:
                    if len(word) == 1:
                        total.append(word[0].scale(coef * w))
                words = _coderivation_step(X.x, sp, words)
                k += 1
            return _sum(sp, total)

        return fn

    return LInftyMorphism(L, L, {n: taylor(n) for n in range(1, X.cutoff + 1)}, X.cutoff)


def lie_derivative_lift(alg: LInftyAlgebra, element) -> LInftyDerivation:
    """Inner derivation ``X_1 = [element, .]`` of a DGLA, ``X_{>=2} = 0``."""
    if not alg.is_dgla:
        raise DomainError("inner derivations need a DGLA")
    if alg.space.parts(element) and alg.space.degree(element) != 0:
        raise DomainError("inner derivations use a degree-0 element")
    _, br = alg.dgla
    return LInftyDerivation.from_unshifted(alg, {1: lambda a: br(element, a)})
