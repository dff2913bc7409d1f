"""Local Hochschild cochains (polydifferential operators) and star products.

A :class:`PolyDiffOp` of arity p is ``C(f1..fp) = sum c(x) d^{a1}f1 ... d^{ap}fp``
stored as ``{(a1, ..., ap): c}`` where each ``a_k`` is an exponent tuple.

Insertion sign: ``C o D = sum_i (-1)^{(q-1)(i-1)} C o_i D`` and
``[C, D] = C o D - (-1)^{(p-1)(q-1)} D o C``.  With this choice
``f*g - g*f = [f, [B, g]]`` holds verbatim for a star product ``mu + B``,
``[mu, mu] = 0``, and the Hochschild differential ``delta = [mu, .]``
equals ``(-1)^{p-1}`` times the textbook alternating sum on arity p.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from math import factorial
from typing import Dict, Iterator, List, Sequence, Tuple

from .errors import DomainError, StructuralError
from .exact import HbarPoly, Polynomial, as_fraction
from .polyvector import Polyvector, perm_sign

Multi = Tuple[int, ...]
Key = Tuple[Multi, ...]


class PolyDiffOp:
    """Polydifferential operator; immutable.  Shifted degree is ``arity - 1``."""

    __slots__ = ("vars", "arity", "_terms", "cap")

    def __init__(self, variables, arity: int, terms: Dict[Sequence[Sequence[int]], object] | None = None, cap=None):
        self.vars = tuple(variables)
        n = len(self.vars)
        if arity < 0:
            raise StructuralError("arity must be >= 0")
        self.arity = arity
        out: Dict[Key, object] = {}
        for key, c in (terms or {}).items():
            key = tuple(tuple(int(e) for e in m) for m in key)
            if len(key) != arity or any(len(m) != n or min(m, default=0) < 0 for m in key):
                raise StructuralError(f"bad multi-index {key} for arity {arity} on {n} variables")
            if isinstance(c, (int, Fraction, str)):
                c = Polynomial.const(self.vars, as_fraction(c))
            if c.vars != self.vars:
                raise StructuralError("coefficient variables differ from operator variables")
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
    def function(cls, f) -> "PolyDiffOp":
        return cls(f.vars, 0, {(): f})

    @classmethod
    def zero(cls, variables, arity: int, cap=None) -> "PolyDiffOp":
        return cls(variables, arity, {}, cap=cap)

    @classmethod
    def multiplication(cls, variables, cap=None) -> "PolyDiffOp":
        z = (0,) * len(tuple(variables))
        return cls(variables, 2, {(z, z): 1}, cap=cap)

    @property
    def degree(self) -> int:
        return self.arity - 1

    def terms(self):
        return sorted(self._terms.items())

    def coeff(self, key) -> object:
        key = tuple(tuple(m) for m in key)
        c = self._terms.get(key)
        if c is None:
            return HbarPoly(self.vars, self.cap) if self.cap is not None else Polynomial.zero(self.vars)
        return c

    def is_zero(self) -> bool:
        return not self._terms

    def max_order(self) -> int:
        return max((sum(map(sum, k)) for k in self._terms), default=-1)

    def __eq__(self, other):
        if not isinstance(other, PolyDiffOp):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return self.vars == other.vars
        return self.vars == other.vars and self.arity == other.arity and self._terms == other._terms

    def __hash__(self):
        return hash((self.vars, self.arity, frozenset(self._terms.items())))

    def _check(self, other):
        if not isinstance(other, PolyDiffOp):
            raise StructuralError("expected a PolyDiffOp")
        if self.vars != other.vars:
            raise StructuralError(f"variable lists differ: {self.vars} vs {other.vars}")

    def __add__(self, other):
        if not isinstance(other, PolyDiffOp):
            return NotImplemented
        self._check(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.arity != other.arity:
            raise StructuralError(f"cannot add arity {self.arity} and arity {other.arity}")
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out[k] + v if k in out else v
        return PolyDiffOp(self.vars, self.arity, out)

    def __neg__(self):
        return PolyDiffOp(self.vars, self.arity, {k: -v for k, v in self._terms.items()}, cap=self.cap)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    def scale(self, c) -> "PolyDiffOp":
        if isinstance(c, (int, Fraction, str)):
            c = as_fraction(c)
            return PolyDiffOp(self.vars, self.arity, {k: v.scale(c) for k, v in self._terms.items()}, cap=self.cap)
        cap = c.cap if isinstance(c, HbarPoly) else self.cap
        return PolyDiffOp(self.vars, self.arity, {k: c * v for k, v in self._terms.items()}, cap=cap)

    def hbar_component(self, k: int) -> "PolyDiffOp":
        """Coefficient of ``hbar^k`` as a plain-polynomial operator."""
        if self.cap is None:
            return self if k == 0 else PolyDiffOp.zero(self.vars, self.arity)
        return PolyDiffOp(self.vars, self.arity, {key: c[k] for key, c in self._terms.items()})

    def __call__(self, *args):
        return apply_op(self, list(args))

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for key, c in self.terms():
            slots = []
            for s, m in enumerate(key):
                d = "".join(f"d{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(m) if e)
                slots.append(f"{d}f{s + 1}" if d else f"f{s + 1}")
            parts.append(f"({c})" + ("*" + "*".join(slots) if slots else ""))
        return " + ".join(parts)

    def __repr__(self):
        return f"PolyDiffOp(arity={self.arity}, {str(self)})"


def _compositions(n: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def _split_multi(alpha: Multi, parts: int) -> Iterator[Tuple[int, Tuple[Multi, ...]]]:
    """Leibniz splittings of ``d^alpha`` over ``parts`` factors with multinomial weights."""
    per_var = []
    for a in alpha:
        opts = []
        for comp in _compositions(a, parts):
            w = factorial(a)
            for c in comp:
                w //= factorial(c)
            opts.append((w, comp))
        per_var.append(opts)

    def rec(v: int):
        if v == len(per_var):
            yield 1, [()] * parts
            return
        for w, comp in per_var[v]:
            for w2, acc in rec(v + 1):
                yield w * w2, [(comp[k],) + acc[k] for k in range(parts)]

    for w, acc in rec(0):
        yield w, tuple(acc)


def insert(C: PolyDiffOp, i: int, D: PolyDiffOp) -> PolyDiffOp:
    """``C o_i D``: feed ``D(f_i..f_{i+q-1})`` into slot ``i`` (1-based) of ``C``."""
    C._check(D)
    p, q = C.arity, D.arity
    if not 1 <= i <= p:
        raise StructuralError(f"slot {i} out of range for arity {p}")
    out: Dict[Key, object] = {}
    for ka, c in C._terms.items():
        alpha = ka[i - 1]
        for kb, d in D._terms.items():
            for w, split in _split_multi(alpha, q + 1):
                dd = d.diff(split[0])
                if dd.is_zero():
                    continue
                mid = tuple(tuple(x + y for x, y in zip(kb[k], split[k + 1])) for k in range(q))
                key = ka[: i - 1] + mid + ka[i:]
                v = c * dd
                if w != 1:
                    v = v.scale(w)
                out[key] = out[key] + v if key in out else v
    cap = C.cap if C.cap is not None else D.cap
    return PolyDiffOp(C.vars, p + q - 1, out, cap=cap)


def compose(C: PolyDiffOp, D: PolyDiffOp) -> PolyDiffOp:
    """Braided insertion sum ``C o D``."""
    p, q = C.arity, D.arity
    cap = C.cap if C.cap is not None else D.cap
    total = PolyDiffOp.zero(C.vars, max(p + q - 1, 0), cap=cap)
    for i in range(1, p + 1):
        term = insert(C, i, D)
        total = total + (term if ((q - 1) * (i - 1)) % 2 == 0 else -term)
    return total


def gerstenhaber_bracket(C: PolyDiffOp, D: PolyDiffOp) -> PolyDiffOp:
    C._check(D)
    p, q = C.arity, D.arity
    a = compose(C, D)
    b = compose(D, C)
    return a + b if ((p - 1) * (q - 1)) % 2 else a - b


def hochschild_delta(C: PolyDiffOp) -> PolyDiffOp:
    """``[mu, C]``; arity ``p + 1``."""
    return gerstenhaber_bracket(PolyDiffOp.multiplication(C.vars, cap=C.cap), C)


def hkr(psi: Polyvector) -> PolyDiffOp:
    """``chi(psi)(f1..fp) = <df1^...^dfp, psi>`` with the determinant convention."""
    n = len(psi.vars)
    p = psi.rank
    out: Dict[Key, object] = {}
    for I, c in psi.terms():
        for perm in permutations(range(p)):
            key = []
            for b in range(p):
                m = [0] * n
                m[I[perm[b]]] = 1
                key.append(tuple(m))
            key = tuple(key)
            v = c if perm_sign(perm) > 0 else -c
            out[key] = out[key] + v if key in out else v
    return PolyDiffOp(psi.vars, p, out, cap=psi.cap)


def apply_op(C: PolyDiffOp, args: List) -> object:
    if len(args) != C.arity:
        raise StructuralError(f"operator of arity {C.arity} given {len(args)} arguments")
    for a in args:
        if a.vars != C.vars:
            raise StructuralError("argument variables differ from operator variables")
    caps = {a.cap for a in args if isinstance(a, HbarPoly)}
    if C.cap is not None:
        caps.add(C.cap)
    if len(caps) > 1:
        raise StructuralError(f"mixed hbar caps {sorted(caps)}")
    cap = caps.pop() if caps else None
    total = HbarPoly(C.vars, cap) if cap is not None else Polynomial.zero(C.vars)
    cache = {}
    for key, c in C._terms.items():
        term = c
        for s, m in enumerate(key):
            ck = (s, m)
            if ck not in cache:
                cache[ck] = args[s].diff(m)
            d = cache[ck]
            if d.is_zero():
                term = None
                break
            term = term * d
        if term is not None:
            total = total + term
    return total


class StarProduct:
    """``f * g = fg + B(f, g)`` with ``B`` an arity-2 operator over hbar series.

    ``mc_verified`` is set by :func:`mc_defect_star` when the defect vanishes.
    """

    def __init__(self, B: PolyDiffOp, poisson: Polyvector | None = None):
        if B.arity != 2 and not B.is_zero():
            raise StructuralError("star product deformation must have arity 2")
        if B.cap is None:
            raise StructuralError("star product deformation needs hbar coefficients")
        if not B.hbar_component(0).is_zero():
            raise DomainError("deformation must vanish at hbar^0")
        if poisson is not None:
            expected = hkr(poisson).scale(Fraction(1, 2))
            if B.hbar_component(1) != expected:
                raise DomainError("hbar^1 part of B is not (1/2){,} of the attached Poisson structure")
        self.B = B
        self.poisson = poisson
        self.mc_verified = False

    @property
    def vars(self):
        return self.B.vars

    @property
    def hbar_cap(self) -> int:
        return self.B.cap

    def B_k(self, k: int) -> PolyDiffOp:
        return self.B.hbar_component(k)

    def __repr__(self):
        return f"StarProduct(cap={self.hbar_cap}, B={self.B})"


def _lift(f, cap):
    if isinstance(f, HbarPoly):
        if f.cap != cap:
            raise StructuralError(f"hbar caps differ: {f.cap} vs {cap}")
        return f
    return HbarPoly.lift(f, cap)


def star_mul(S: StarProduct, f, g) -> HbarPoly:
    f = _lift(f, S.hbar_cap)
    g = _lift(g, S.hbar_cap)
    return f * g + apply_op(S.B, [f, g])


def star_commutator(S: StarProduct, f, g) -> HbarPoly:
    return star_mul(S, f, g) - star_mul(S, g, f)


def mc_defect_star(S: StarProduct) -> PolyDiffOp:
    """``delta B + 1/2 [B, B]`` modulo ``hbar^{cap+1}``."""
    B = S.B
    defect = hochschild_delta(B) + gerstenhaber_bracket(B, B).scale(Fraction(1, 2))
    if defect.is_zero():
        S.mc_verified = True
    return defect


def associator(S: StarProduct, f, g, h) -> HbarPoly:
    return star_mul(S, star_mul(S, f, g), h) - star_mul(S, f, star_mul(S, g, h))


def residual_terms(op: PolyDiffOp):
    """Nonzero ``(hbar power, multi-index, coefficient)`` triples, canonical order."""
    out = []
    for key, c in op.terms():
        if isinstance(c, HbarPoly):
            for k, ck in enumerate(c.coeffs):
                if not ck.is_zero():
                    out.append((k, key, ck))
        else:
            out.append((0, key, c))
    out.sort(key=lambda t: (t[0], t[1]))
    return out


def moyal(pi_const: Polyvector, cap: int) -> StarProduct:
    """Moyal product ``B_k = (1/k!)(1/2)^k pi^{i1 j1}..pi^{ik jk} d_I f d_J g``."""
    if pi_const.rank != 2:
        raise StructuralError("Moyal product needs a bivector")
    for _, c in pi_const.terms():
        if not (c.is_constant() if isinstance(c, Polynomial) else all(x.is_constant() for x in c.coeffs)):
            raise DomainError("Moyal product needs constant coefficients")
        if isinstance(c, HbarPoly):
            raise DomainError("Moyal product takes an hbar-free bivector")
    variables = pi_const.vars
    n = len(variables)
    matrix = {}
    for (i, j), c in pi_const.terms():
        v = c.constant_term()
        matrix[(i, j)] = v
        matrix[(j, i)] = -v
    pairs = list(matrix.items())
    terms: Dict[Key, object] = {}
    layer = {((0,) * n, (0,) * n): Fraction(1)}
    for k in range(1, cap + 1):
        nxt: Dict[Tuple[Multi, Multi], Fraction] = {}
        for (a, b), w in layer.items():
            for (i, j), v in pairs:
                na = a[:i] + (a[i] + 1,) + a[i + 1:]
                nb = b[:j] + (b[j] + 1,) + b[j + 1:]
                nxt[(na, nb)] = nxt.get((na, nb), Fraction(0)) + w * v
        layer = {key: w for key, w in nxt.items() if w}
        scale = Fraction(1, factorial(k) * 2**k)
        for key, w in layer.items():
            terms[key] = HbarPoly.hbar(variables, cap, k, w * scale) + (terms[key] if key in terms else 0)
    B = PolyDiffOp(variables, 2, terms, cap=cap)
    return StarProduct(B, poisson=pi_const if cap >= 1 else None)
