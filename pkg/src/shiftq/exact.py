"""Exact rationals, sparse multivariate polynomials and hbar-truncated series.

Rationals are :class:`fractions.Fraction`.  Polynomials are immutable maps
from exponent tuples to nonzero Fractions over a fixed, ordered variable
list.  Iteration is graded-lex, highest term first, so every printed or
serialized form is deterministic.
"""
from __future__ import annotations

import contextlib
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Sequence, Tuple

from .errors import ResourceError, StructuralError

Exponent = Tuple[int, ...]

_DEGREE_CAP = [40]


def degree_cap() -> int:
    return _DEGREE_CAP[0]


@contextlib.contextmanager
def degree_cap_set(cap: int):
    """Temporarily change the total-degree guard."""
    old = _DEGREE_CAP[0]
    _DEGREE_CAP[0] = cap
    try:
        yield
    finally:
        _DEGREE_CAP[0] = old


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"not an exact rational: {value!r}")


def fraction_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _grlex_key(exp: Exponent):
    return (sum(exp), exp)


class Polynomial:
    """Sparse polynomial with rational coefficients.

    >>> x1, x2 = Polynomial.gens(("x1", "x2"))
    >>> str((x1 + 1) * (x1 - 1))
    'x1^2 - 1'
    """

    __slots__ = ("vars", "_terms", "_hash")

    def __init__(self, variables: Sequence[str], terms: Dict[Exponent, Fraction] | None = None):
        self.vars = tuple(variables)
        n = len(self.vars)
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != n or any(e < 0 for e in exp):
                raise StructuralError(f"bad exponent {exp} for variables {self.vars}")
            c = as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
        self._terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    # construction helpers
    @classmethod
    def const(cls, variables, c=1) -> "Polynomial":
        return cls(variables, {(0,) * len(tuple(variables)): as_fraction(c)})

    @classmethod
    def zero(cls, variables) -> "Polynomial":
        return cls(variables)

    @classmethod
    def var(cls, variables, name_or_index) -> "Polynomial":
        variables = tuple(variables)
        i = variables.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        exp = [0] * len(variables)
        exp[i] = 1
        return cls(variables, {tuple(exp): Fraction(1)})

    @classmethod
    def gens(cls, variables) -> Tuple["Polynomial", ...]:
        variables = tuple(variables)
        return tuple(cls.var(variables, i) for i in range(len(variables)))

    @classmethod
    def monomial(cls, variables, exp, c=1) -> "Polynomial":
        return cls(variables, {tuple(exp): as_fraction(c)})

    @classmethod
    def _raw(cls, variables, terms) -> "Polynomial":
        p = cls.__new__(cls)
        p.vars = variables
        p._terms = terms
        p._hash = None
        return p

    # inspection
    def terms(self) -> Iterator[Tuple[Exponent, Fraction]]:
        for e in sorted(self._terms, key=_grlex_key, reverse=True):
            yield e, self._terms[e]

    def coeff(self, exp: Exponent) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * len(self.vars), Fraction(0))

    def total_degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self._terms == ({(0,) * len(self.vars): Fraction(other)} if other else {})
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.vars == other.vars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, frozenset(self._terms.items())))
        return self._hash

    # arithmetic
    def _check(self, other: "Polynomial"):
        if self.vars != other.vars:
            raise StructuralError(f"variable lists differ: {self.vars} vs {other.vars}")

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.const(self.vars, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Polynomial._raw(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = as_fraction(c)
        if not c:
            return Polynomial._raw(self.vars, {})
        return Polynomial._raw(self.vars, {e: c * v for e, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        out: Dict[Exponent, Fraction] = {}
        cap = _DEGREE_CAP[0]
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if sum(e) > cap:
                    raise ResourceError(f"total degree {sum(e)} exceeds cap {cap}")
                v = out.get(e, 0) + c1 * c2
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return Polynomial._raw(self.vars, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        out = Polynomial.const(self.vars, 1)
        for _ in range(k):
            out = out * self
        return out

    def partial(self, i: int) -> "Polynomial":
        """Formal derivative in the ``i``-th variable (0-based)."""
        if not 0 <= i < len(self.vars):
            raise StructuralError(f"variable index {i} out of range for {self.vars}")
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                out[ne] = c * e[i]
        return Polynomial._raw(self.vars, out)

    def diff(self, multi: Sequence[int]) -> "Polynomial":
        """Apply ``prod_i d_i^{multi[i]}``."""
        if not any(multi):
            return self
        out = {}
        for e, c in self._terms.items():
            f = c
            for ei, ai in zip(e, multi):
                if ai > ei:
                    f = 0
                    break
                for t in range(ai):
                    f *= ei - t
            if f:
                ne = tuple(ei - ai for ei, ai in zip(e, multi))
                out[ne] = f
        return Polynomial._raw(self.vars, out)

    def evaluate(self, point: Sequence) -> Fraction:
        total = Fraction(0)
        for e, c in self._terms.items():
            t = c
            for x, k in zip(point, e):
                t *= as_fraction(x) ** k
            total += t
        return total

    # display
    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.terms():
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(self.vars, e) if k
            )
            mag = abs(c)
            if mono:
                body = mono if mag == 1 else f"{fraction_str(mag)}*{mono}"
            else:
                body = fraction_str(mag)
            parts.append(("-" if c < 0 else "+", body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"Polynomial({str(self)!r}, vars={self.vars})"

    def to_sympy(self):
        import sympy

        syms = sympy.symbols(self.vars) if self.vars else ()
        expr = sympy.Integer(0)
        for e, c in self._terms.items():
            t = sympy.Rational(c.numerator, c.denominator)
            for s, k in zip(syms, e):
                t *= s**k
            expr += t
        return expr


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    if not isinstance(p, Polynomial) or not isinstance(q, Polynomial):
        raise StructuralError("poly_mul expects two Polynomials")
    return p * q


def poly_partial(p: Polynomial, var_index: int) -> Polynomial:
    return p.partial(var_index)


class HbarPoly:
    """Polynomial series ``sum_k hbar^k c_k`` truncated above ``cap``.

    Arithmetic silently drops powers of hbar above the cap.  Mixing with a
    plain :class:`Polynomial` lifts it to hbar-degree zero.
    """

    __slots__ = ("vars", "cap", "coeffs")

    def __init__(self, variables, cap: int, coeffs: Iterable[Polynomial] = ()):
        self.vars = tuple(variables)
        if cap < 0:
            raise StructuralError("hbar cap must be non-negative")
        self.cap = cap
        cs = list(coeffs)[: cap + 1]
        for c in cs:
            if not isinstance(c, Polynomial) or c.vars != self.vars:
                raise StructuralError("hbar coefficients must be Polynomials on the same variables")
        zero = Polynomial.zero(self.vars)
        cs += [zero] * (cap + 1 - len(cs))
        self.coeffs = tuple(cs)

    @classmethod
    def lift(cls, p: Polynomial, cap: int) -> "HbarPoly":
        return cls(p.vars, cap, [p])

    @classmethod
    def hbar(cls, variables, cap: int, power: int = 1, c=1) -> "HbarPoly":
        """The series ``c * hbar^power``."""
        variables = tuple(variables)
        cs = [Polynomial.zero(variables)] * (cap + 1)
        if power <= cap:
            cs[power] = Polynomial.const(variables, c)
        return cls(variables, cap, cs)

    def __getitem__(self, k: int) -> Polynomial:
        if 0 <= k <= self.cap:
            return self.coeffs[k]
        return Polynomial.zero(self.vars)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def total_degree(self) -> int:
        return max(c.total_degree() for c in self.coeffs)

    def lowest_order(self) -> int | None:
        for k, c in enumerate(self.coeffs):
            if not c.is_zero():
                return k
        return None

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.vars == other.vars and self.coeffs[0] == other and all(
                c.is_zero() for c in self.coeffs[1:]
            )
        if isinstance(other, (int, Fraction)):
            return self.coeffs[0] == other and all(c.is_zero() for c in self.coeffs[1:])
        if not isinstance(other, HbarPoly):
            return NotImplemented
        return self.vars == other.vars and self.cap == other.cap and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.vars, self.cap, self.coeffs))

    def _coerce(self, other) -> "HbarPoly | None":
        if isinstance(other, HbarPoly):
            if other.vars != self.vars:
                raise StructuralError(f"variable lists differ: {self.vars} vs {other.vars}")
            if other.cap != self.cap:
                raise StructuralError(f"hbar caps differ: {self.cap} vs {other.cap}")
            return other
        if isinstance(other, Polynomial):
            if other.vars != self.vars:
                raise StructuralError(f"variable lists differ: {self.vars} vs {other.vars}")
            return HbarPoly.lift(other, self.cap)
        if isinstance(other, (int, Fraction)):
            return HbarPoly.lift(Polynomial.const(self.vars, other), self.cap)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return HbarPoly(self.vars, self.cap, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return HbarPoly(self.vars, self.cap, [-c for c in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "HbarPoly":
        return HbarPoly(self.vars, self.cap, [p.scale(c) for p in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = [Polynomial.zero(self.vars)] * (self.cap + 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j in range(self.cap + 1 - i):
                b = other.coeffs[j]
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return HbarPoly(self.vars, self.cap, out)

    __rmul__ = __mul__

    def partial(self, i: int) -> "HbarPoly":
        return HbarPoly(self.vars, self.cap, [c.partial(i) for c in self.coeffs])

    def diff(self, multi) -> "HbarPoly":
        return HbarPoly(self.vars, self.cap, [c.diff(multi) for c in self.coeffs])

    def truncate(self, n: int) -> "HbarPoly":
        """Drop powers above ``n`` (keeping the cap)."""
        zero = Polynomial.zero(self.vars)
        return HbarPoly(self.vars, self.cap, [c if k <= n else zero for k, c in enumerate(self.coeffs)])

    def __str__(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            if k == 0:
                parts.append(str(c))
            else:
                h = "hbar" if k == 1 else f"hbar^{k}"
                parts.append(f"{h}*({c})")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"HbarPoly({str(self)!r}, cap={self.cap})"


def hbar_mul(a: HbarPoly, b: HbarPoly) -> HbarPoly:
    if not isinstance(a, HbarPoly) or not isinstance(b, HbarPoly):
        raise StructuralError("hbar_mul expects two HbarPoly values")
    if a.cap != b.cap:
        raise StructuralError(f"hbar caps differ: {a.cap} vs {b.cap}")
    return a * b


def coefficient_one(like):
    """The unit of ``like``'s coefficient ring."""
    if isinstance(like, HbarPoly):
        return HbarPoly.lift(Polynomial.const(like.vars, 1), like.cap)
    return Polynomial.const(like.vars, 1)


def coefficient_zero(like):
    if isinstance(like, HbarPoly):
        return HbarPoly(like.vars, like.cap)
    return Polynomial.zero(like.vars)
