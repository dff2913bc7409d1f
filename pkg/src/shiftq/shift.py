"""Argument-shift engines: classical, binary-operation, and L-infinity deformed.

Every quantity the underlying theorems say must vanish is computed and
recorded; nothing is assumed.  Engines raise :class:`HypothesisError` when a
hypothesis fails, unless called with ``strict=False`` in which case the
failure is logged and the family is computed anyway.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Dict, List, Sequence, Tuple

import sympy

from .errors import DomainError, HypothesisError, ResourceError, StructuralError
from .exact import Polynomial, as_fraction
from .linfty import (
    FiniteSpace,
    GradedMap,
    LInftyAlgebra,
    LInftyDerivation,
    MCElement,
    Vec,
    derivation_sweep,
    exp_derivation,
    mc_defect,
    nijenhuis_defects,
    push_mc,
    twisted_family,
    x_of_pi,
    tpoly_dgla,
)
from .polyvector import (
    PoissonStructure,
    Polyvector,
    d_pi,
    lie_derivative,
    nijenhuis_defect,
    poisson_bracket,
)

DEFAULT_BUDGET = 100000


def default_budget() -> int:
    env = os.environ.get("SHIFTQ_BUDGET")
    if env is None:
        return DEFAULT_BUDGET
    try:
        value = int(env)
    except ValueError:
        raise StructuralError(f"SHIFTQ_BUDGET must be an integer, got {env!r}") from None
    if value <= 0:
        raise StructuralError("SHIFTQ_BUDGET must be positive")
    return value


@dataclass
class Check:
    name: str
    passed: bool
    residual: object = None
    detail: str = ""


@dataclass
class ShiftFamily:
    """Generators ``(label, element)`` and their pairwise brackets."""

    generators: List[Tuple[Tuple[int, int], object]]
    bracket_matrix: Dict[Tuple[int, int], object]
    log: List[Check] = field(default_factory=list)
    truncation: Dict[str, object] = field(default_factory=dict)

    @property
    def all_zero(self) -> bool:
        return all(v.is_zero() for v in self.bracket_matrix.values())

    @property
    def passed(self) -> bool:
        return self.all_zero and all(c.passed for c in self.log)

    def failures(self) -> List[str]:
        out = [c.name for c in self.log if not c.passed]
        for (i, j), v in sorted(self.bracket_matrix.items()):
            if not v.is_zero():
                out.append(f"bracket{self.generators[i][0]}{self.generators[j][0]}")
        return out

    def elements(self) -> list:
        return [g for _, g in self.generators]


def _pairs(n: int):
    return combinations_with_replacement(range(n), 2)


def _fail(strict: bool, log: List[Check], hypothesis: str, message: str, residual=None):
    log.append(Check(f"hypothesis:{hypothesis}", False, residual, message))
    if strict:
        raise HypothesisError(hypothesis, message, residual)


# ----------------------------------------------------------------------------
# classical

def _lie_on_function(xi: Polyvector, f: Polynomial) -> Polynomial:
    return lie_derivative(xi, Polyvector.function(f)).as_function()


def classical_shift(pi, xi: Polyvector, casimirs: Sequence[Polynomial], kmax: int = 3, strict: bool = True, recursion_depth: int = 3) -> ShiftFamily:
    """Family ``{L_xi^k f}`` for Casimirs ``f`` and a Nijenhuis field ``xi``.

    Besides every pairwise bracket, the intermediate quantities
    ``L_xi^k pi (d L_xi^l f, d L_xi^m g)`` with ``k + l + m <= recursion_depth``
    are computed and logged.
    """
    P = pi if isinstance(pi, PoissonStructure) else PoissonStructure(pi)
    biv = P.bivector
    if xi.rank != 1 or xi.vars != biv.vars:
        raise StructuralError("shift field must be a vector field on the Poisson variables")
    if kmax < 0:
        raise StructuralError("kmax must be >= 0")
    log: List[Check] = []
    if not P.jacobi_verified:
        _fail(strict, log, "poisson", "[pi, pi] != 0")
    else:
        log.append(Check("hypothesis:poisson", True))
    for c, f in enumerate(casimirs):
        r = d_pi(biv, Polyvector.function(f))
        if not r.is_zero():
            _fail(strict, log, "casimir", f"casimir #{c} ({f}) is not central", r)
        else:
            log.append(Check(f"hypothesis:casimir[{c}]", True))
    nd = nijenhuis_defect(xi, biv)
    if not nd.is_zero():
        _fail(strict, log, "nijenhuis", "L_xi^2 pi != 0", nd)
    else:
        log.append(Check("hypothesis:nijenhuis", True))

    gens = []
    for c, f in enumerate(casimirs):
        cur = f
        for k in range(kmax + 1):
            gens.append(((c, k), cur))
            if k < kmax:
                cur = _lie_on_function(xi, cur)
    matrix = {(i, j): poisson_bracket(biv, gens[i][1], gens[j][1]) for i, j in _pairs(len(gens))}

    lifts = [biv]
    for _ in range(recursion_depth):
        lifts.append(lie_derivative(xi, lifts[-1]))
    iters = []
    for f in casimirs:
        seq = [f]
        for _ in range(recursion_depth):
            seq.append(_lie_on_function(xi, seq[-1]))
        iters.append(seq)
    for a, b in _pairs(len(casimirs)):
        for k in range(recursion_depth + 1):
            for l in range(recursion_depth + 1 - k):
                for m in range(recursion_depth + 1 - k - l):
                    r = poisson_bracket(lifts[k], iters[a][l], iters[b][m])
                    log.append(Check(f"recursion[{a},{b}](k={k},l={l},m={m})", r.is_zero(), r))
    return ShiftFamily(gens, matrix, log, {"kmax": kmax, "recursion_depth": recursion_depth})


def recursion_quantity(pi: Polyvector, xi: Polyvector, f, g, k: int, l: int, m: int) -> Polynomial:
    """``L_xi^k pi (d L_xi^l f, d L_xi^m g)``."""
    biv = pi
    for _ in range(k):
        biv = lie_derivative(xi, biv)
    for _ in range(l):
        f = _lie_on_function(xi, f)
    for _ in range(m):
        g = _lie_on_function(xi, g)
    return poisson_bracket(biv, f, g)


# ----------------------------------------------------------------------------
# binary operations

class BinaryOpModel:
    """Bilinear ``m`` on ``Q^dim`` (``m[i][j]`` = coordinates of ``m(e_i, e_j)``) and linear ``xi``."""

    def __init__(self, dim: int, m, xi):
        self.dim = dim
        self.m = [[[as_fraction(c) for c in m[i][j]] for j in range(dim)] for i in range(dim)]
        self.xi = [[as_fraction(c) for c in row] for row in xi]
        for i in range(dim):
            for j in range(dim):
                if len(self.m[i][j]) != dim:
                    raise StructuralError("structure constants must have dim coordinates")
        if len(self.xi) != dim or any(len(r) != dim for r in self.xi):
            raise StructuralError("xi must be a dim x dim matrix")

    def apply_xi(self, v: Sequence[Fraction]) -> List[Fraction]:
        return [sum((self.xi[r][c] * v[c] for c in range(self.dim)), Fraction(0)) for r in range(self.dim)]

    def mul(self, a: Sequence[Fraction], b: Sequence[Fraction], table=None) -> List[Fraction]:
        table = table if table is not None else self.m
        out = [Fraction(0)] * self.dim
        for i, ai in enumerate(a):
            if not ai:
                continue
            for j, bj in enumerate(b):
                if not bj:
                    continue
                for k, c in enumerate(table[i][j]):
                    if c:
                        out[k] += ai * bj * c
        return out

    def xi_action(self, table) -> list:
        """``xi(m)(a, b) = xi(m(a, b)) - m(xi a, b) - m(a, xi b)`` as a table."""
        e = [[Fraction(int(r == c)) for c in range(self.dim)] for r in range(self.dim)]
        out = []
        for i in range(self.dim):
            row = []
            for j in range(self.dim):
                v = self.apply_xi(self.mul(e[i], e[j], table))
                w = self.mul(self.apply_xi(e[i]), e[j], table)
                u = self.mul(e[i], self.apply_xi(e[j]), table)
                row.append([v[k] - w[k] - u[k] for k in range(self.dim)])
            out.append(row)
        return out


@dataclass
class _Vector:
    coords: Tuple[Fraction, ...]

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def binary_shift_check(model: BinaryOpModel, centrals: Sequence[Sequence], kmax: int = 3, strict: bool = True) -> ShiftFamily:
    """``m(xi^k a, xi^l b)`` for central ``a, b`` when ``xi^2(m) = 0``."""
    n = model.dim
    log: List[Check] = []
    x2 = model.xi_action(model.xi_action(model.m))
    bad = [(i, j) for i in range(n) for j in range(n) if any(x2[i][j])]
    if bad:
        i, j = bad[0]
        _fail(strict, log, "xi-squared-kills-m", f"xi^2(m)(e{i}, e{j}) != 0", _Vector(tuple(x2[i][j])))
    else:
        log.append(Check("hypothesis:xi-squared-kills-m", True))
    cs = [[as_fraction(c) for c in a] for a in centrals]
    for c, a in enumerate(cs):
        if len(a) != n:
            raise StructuralError("central vectors must have dim coordinates")
        for y in range(n):
            e = [Fraction(int(k == y)) for k in range(n)]
            for label, v in (("m(a,e)", model.mul(a, e)), ("m(e,a)", model.mul(e, a))):
                if any(v):
                    _fail(strict, log, "central", f"central #{c}: {label} != 0 for e = e{y}", _Vector(tuple(v)))
                    break
            else:
                continue
            break
        else:
            log.append(Check(f"hypothesis:central[{c}]", True))
    gens = []
    for c, a in enumerate(cs):
        cur = a
        for k in range(kmax + 1):
            gens.append(((c, k), _Vector(tuple(cur))))
            cur = model.apply_xi(cur)
    matrix = {}
    for i in range(len(gens)):
        for j in range(len(gens)):
            matrix[(i, j)] = _Vector(tuple(model.mul(gens[i][1].coords, gens[j][1].coords)))
    return ShiftFamily(gens, matrix, log, {"kmax": kmax})


# ----------------------------------------------------------------------------
# L-infinity deformed shift

def lift_classical(xi: Polyvector, algebra: LInftyAlgebra | None = None) -> LInftyDerivation:
    """Derivation of the polyvector DGLA with ``X_1 = [xi, .]`` and ``X_{>=2} = 0``."""
    if xi.rank != 1:
        raise StructuralError("lift_classical needs a vector field")
    alg = algebra if algebra is not None else tpoly_dgla(xi.vars)
    if alg.space.kind != "tpoly":
        raise DomainError("lift_classical acts on the polyvector DGLA")
    if xi.is_zero():
        return LInftyDerivation.zero(alg)
    cap = getattr(alg.space, "cap", None)
    field_ = xi if cap is None else Polyvector(xi.vars, 1, dict(xi.terms()), cap=cap)
    return LInftyDerivation.from_unshifted(alg, {1: lambda a: lie_derivative(field_, a)})


def _mc(L: LInftyAlgebra, m):
    return m.value if isinstance(m, MCElement) else m


def _dgla_ops(L: LInftyAlgebra):
    if not L.is_dgla:
        raise DomainError("the deformed shift needs a DG Lie algebra")
    return L.dgla


def weak_nijenhuis_chain(X: LInftyDerivation, m, f, g) -> Dict[str, object]:
    """Every quantity of the weak Nijenhuis chain for central ``f, g``.

    Keys: ``d_pi X(pi)``, ``[X(pi),X(pi)]``, ``mc(pi+X(pi))``, ``weak``,
    the three intermediate identities and ``{X_pi f, X_pi g}``.
    """
    L = X.algebra
    d, br = _dgla_ops(L)
    pi = _mc(L, m)
    xp = x_of_pi(X, pi)
    fam = twisted_family(X, pi)
    Xpi = lambda a: _first(fam, L, a)
    dpi = lambda a: d(a) + br(pi, a)
    pb = lambda a, b: br(a, br(pi, b))
    xf, xg = Xpi(f), Xpi(g)
    return {
        "d_pi X(pi)": dpi(xp),
        "[X(pi),X(pi)]": br(xp, xp),
        "mc(pi+X(pi))": mc_defect(L, pi + xp),
        "weak": Xpi(xp),
        "{X_pi f, X_pi g} + [f,[X(pi),X_pi g]]": pb(xf, xg) + br(f, br(xp, xg)),
        "{X_pi f, X_pi g} + [g,[X(pi),X_pi f]]": pb(xf, xg) + br(g, br(xp, xf)),
        "[f,[X(pi),X_pi g]] + [g,[X(pi),X_pi f]]": br(f, br(xp, xg)) + br(g, br(xp, xf)),
        "{X_pi f, X_pi g}": pb(xf, xg),
    }


def _first(fam, L, a):
    from .linfty import _unshifted_eval

    return _unshifted_eval(fam, L.space, 1, (a,))


def lemma_residuals(X: LInftyDerivation, m, f, kmax: int = 4) -> Dict[int, Tuple[object, object]]:
    """For ``x_k = X_{pi,1}^k f``: ``(d_pi x_k + k[X(pi), x_{k-1}], d_pi x_k - [X(pi), x_{k-1}])``.

    The first entry is the form implied by ``exp(tX_{pi,1}) d_pi =
    d_{pi + tX(pi)} exp(tX_{pi,1})`` and vanishes; the second is the
    statement with coefficient one, kept as a witness.
    """
    L = X.algebra
    d, br = _dgla_ops(L)
    pi = _mc(L, m)
    xp = x_of_pi(X, pi)
    fam = twisted_family(X, pi)
    xs = [f]
    for _ in range(kmax):
        xs.append(_first(fam, L, xs[-1]))
    out = {}
    for k in range(1, kmax + 1):
        lhs = d(xs[k]) + br(pi, xs[k])
        r = br(xp, xs[k - 1])
        out[k] = (lhs + r.scale(k), lhs - r)
    return out


def shift_identities(X: LInftyDerivation, m, x, y) -> Tuple[object, object]:
    """Residuals of the two intertwining identities for ``X_{pi,1}``.

    ``X({x,y}) - {Xx,y} - {x,Xy} - [x,[X(pi),y]]`` and
    ``X([x,[X(pi),y]]) - [Xx,[X(pi),y]] - [x,[X(pi),Xy]]``.
    """
    L = X.algebra
    _, br = _dgla_ops(L)
    pi = _mc(L, m)
    xp = x_of_pi(X, pi)
    fam = twisted_family(X, pi)
    Xf = lambda a: _first(fam, L, a)
    pb = lambda a, b: br(a, br(pi, b))
    r1 = Xf(pb(x, y)) - pb(Xf(x), y) - pb(x, Xf(y)) - br(x, br(xp, y))
    inner = br(x, br(xp, y))
    r2 = Xf(inner) - br(Xf(x), br(xp, y)) - br(x, br(xp, Xf(y)))
    return r1, r2


def quantum_shift(L: LInftyAlgebra, m, X: LInftyDerivation, centrals: Sequence, kmax: int = 3, max_arity: int | None = None, probes=None, strict: bool = True) -> ShiftFamily:
    """Family ``{X_{pi,1}^k f}`` for a strong Nijenhuis derivation.

    Brackets are ``[x, [pi, y]]``.  The log records the Maurer-Cartan and
    strong Nijenhuis hypotheses, the exponential identity
    ``exp(X)(pi) = pi + X(pi)``, the lemma residuals for ``k <= kmax + 1``
    and both intertwining identities on every pair of generators.
    """
    d, br = _dgla_ops(L)
    if X.algebra is not L:
        raise StructuralError("derivation belongs to a different algebra")
    pi = _mc(L, m)
    log: List[Check] = []
    mcd = mc_defect(L, pi)
    if not mcd.is_zero():
        _fail(strict, log, "maurer-cartan", "pi is not a Maurer-Cartan element", mcd)
        return ShiftFamily([], {}, log)
    log.append(Check("hypothesis:maurer-cartan", True))
    for c, f in enumerate(centrals):
        if L.space.parts(f) and L.space.degree(f) != -1:
            raise DomainError(f"central #{c} must have degree -1")
        r = d(f) + br(pi, f)
        if not r.is_zero():
            _fail(strict, log, "central", f"central #{c} is not d_pi-closed", r)
        else:
            log.append(Check(f"hypothesis:central[{c}]", True))
    rep = nijenhuis_defects(X, pi, max_arity=max_arity, probes=probes)
    if not rep.weak.is_zero():
        _fail(strict, log, "weak-nijenhuis", "X_pi(X(pi)) != 0", rep.weak)
    elif not rep.passed:
        labels, value = rep.residuals[0]
        _fail(strict, log, "strong-nijenhuis", f"X_pi,{len(labels)}{labels} != 0", value)
    else:
        log.append(Check("hypothesis:strong-nijenhuis", True, detail=f"arities {rep.truncation['arities']}, {rep.checked} tuples"))
    xp = rep.x_of_pi
    try:
        pushed = push_mc(exp_derivation(X, 1), pi)
        r = pushed.value - (pi + xp)
        log.append(Check("exp(X)(pi) = pi + X(pi)", r.is_zero(), r))
    except ResourceError as exc:
        log.append(Check("exp(X)(pi) = pi + X(pi)", False, detail=str(exc)))

    fam = twisted_family(X, pi)
    gens = []
    for c, f in enumerate(centrals):
        cur = f
        for k in range(kmax + 1):
            gens.append(((c, k), cur))
            if k < kmax:
                cur = _first(fam, L, cur)
    for c, f in enumerate(centrals):
        for k, (good, _) in lemma_residuals(X, pi, f, kmax + 1).items():
            log.append(Check(f"lemma[{c}](k={k})", good.is_zero(), good))
    for i, j in _pairs(len(gens)):
        r1, r2 = shift_identities(X, pi, gens[i][1], gens[j][1])
        log.append(Check(f"identity1{gens[i][0]}{gens[j][0]}", r1.is_zero(), r1))
        log.append(Check(f"identity2{gens[i][0]}{gens[j][0]}", r2.is_zero(), r2))
    matrix = {(i, j): br(gens[i][1], br(pi, gens[j][1])) for i, j in _pairs(len(gens))}
    trunc = {"kmax": kmax, "arity_cutoff": X.cutoff}
    cap = getattr(L.space, "cap", None)
    if cap is not None:
        trunc["hbar_cap"] = cap
    return ShiftFamily(gens, matrix, log, trunc)


def families_coincide(classical: ShiftFamily, quantum: ShiftFamily) -> bool:
    """Generator-by-generator equality of a polynomial and a polyvector family."""
    if [lab for lab, _ in classical.generators] != [lab for lab, _ in quantum.generators]:
        return False
    for (_, a), (_, b) in zip(classical.generators, quantum.generators):
        bb = b.as_function() if isinstance(b, Polyvector) else b
        if not (a - bb).is_zero():
            return False
    return True


# ----------------------------------------------------------------------------
# scanner

@dataclass
class Slot:
    """One unknown coefficient: ``X_n(args)`` has ``value`` times ``target``."""

    arity: int
    args: Tuple[str, ...]
    target: str


@dataclass
class ScanResult:
    found: List[dict]
    examined: int
    total: int
    derivations: int
    truncation: Dict[str, object]

    def to_dict(self) -> dict:
        return {
            "examined": self.examined,
            "total": self.total,
            "derivations": self.derivations,
            "found": self.found,
            "truncation": self.truncation,
        }


def _build_maps(space: FiniteSpace, fixed: Dict[int, Dict[Tuple[str, ...], Vec]], slots: Sequence[Slot], values) -> Dict[int, GradedMap]:
    entries: Dict[int, Dict[Tuple[str, ...], Vec]] = {n: dict(e) for n, e in fixed.items()}
    for slot, v in zip(slots, values):
        if not v:
            continue
        e = entries.setdefault(slot.arity, {})
        key = tuple(slot.args)
        e[key] = e.get(key, Vec()) + Vec({slot.target: v})
    return {n: GradedMap(space, n, 1 - n, e) for n, e in entries.items()}


def is_inner(alg: LInftyAlgebra, X1: GradedMap | None) -> bool:
    """Whether ``X_1 = [z, .]`` for some degree-0 ``z`` (rational linear solve)."""
    space = alg.space
    d0 = [n for n, deg in space.basis if deg == 0]
    zs = sympy.symbols(f"z0:{len(d0)}") if d0 else ()
    eqs = []
    for name in space.names:
        e = space.vec(name)
        target = X1(e) if X1 is not None else Vec()
        combo: Dict[str, object] = {}
        for z, c in zip(zs, d0):
            for b, coef in alg.bracket(space.vec(c), e).items():
                combo[b] = combo.get(b, 0) + z * sympy.Rational(coef.numerator, coef.denominator)
        for b in space.names:
            t = target.coeff(b)
            eqs.append(combo.get(b, 0) - sympy.Rational(t.numerator, t.denominator))
    eqs = [q for q in eqs if q != 0]
    if not eqs:
        return True
    if not zs:
        return False
    return bool(sympy.linsolve(eqs, *zs))


def scan_strong_nijenhuis(alg: LInftyAlgebra, mc, slots: Sequence[Slot], values: Sequence, fixed: Dict[int, Dict[Tuple[str, ...], Vec]] | None = None, budget: int | None = None, max_arity: int | None = None) -> ScanResult:
    """Enumerate ``X_1, X_2`` over a rational grid and keep strong Nijenhuis derivations.

    Candidates beyond ``budget`` raise :class:`ResourceError` carrying the
    partial :class:`ScanResult`.
    """
    if alg.space.kind != "finite":
        raise DomainError("the scanner works on finite DGLAs only")
    if not alg.is_dgla:
        raise DomainError("the scanner needs a DG Lie algebra")
    for s in slots:
        if s.arity not in (1, 2) or len(s.args) != s.arity:
            raise StructuralError(f"slot {s} must describe X_1 or X_2")
        want = sum(alg.space.basis_degree(a) for a in s.args) + 1 - s.arity
        if alg.space.basis_degree(s.target) != want:
            raise StructuralError(f"slot {s} targets degree {alg.space.basis_degree(s.target)}, expected {want}")
    budget = budget if budget is not None else default_budget()
    fixed = fixed or {}
    values = [as_fraction(v) for v in values]
    pi = _mc(alg, mc)
    if not mc_defect(alg, pi).is_zero():
        raise DomainError("scanner needs a Maurer-Cartan element")
    top = min(max_arity or alg.cutoff, alg.cutoff)
    total = len(values) ** len(slots)
    result = ScanResult([], 0, total, 0, {"arity_cutoff": top, "budget": budget})
    for assignment in product(values, repeat=len(slots)):
        if result.examined >= budget:
            raise ResourceError(f"grid of {total} candidates exceeds budget {budget}", partial=result)
        result.examined += 1
        maps = _build_maps(alg.space, fixed, slots, assignment)
        X = LInftyDerivation.from_unshifted(alg, maps, cutoff=top)
        if not derivation_sweep(X, top).passed:
            continue
        result.derivations += 1
        rep = nijenhuis_defects(X, pi, max_arity=top)
        if not rep.passed or not rep.weak.is_zero():
            continue
        X1 = maps.get(1)
        X2 = maps.get(2)
        trivial = all(m.is_zero() for m in maps.values())
        genuine = (X2 is not None and not X2.is_zero()) or not is_inner(alg, X1)
        result.found.append({
            "assignment": [str(v) for v in assignment],
            "trivial": trivial,
            "genuine": genuine,
            "x_of_pi": rep.x_of_pi,
        })
    return result
