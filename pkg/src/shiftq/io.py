"""JSON problem parsing and canonical report serialization.

Rationals travel as strings (``"3/4"``), polynomials as expression strings
over declared variables (``"x1^2 - x2*x3"``), polyvectors as lists of
``{"wedge": [...], "coeff": ...}`` and operators as lists of
``{"orders": [{var: order}, ...], "coeff": ..., "hbar": k}``.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import sympy

from .errors import StructuralError
from .exact import HbarPoly, Polynomial, as_fraction, fraction_str
from .hochschild import PolyDiffOp, StarProduct, moyal
from .linfty import FiniteSpace, GradedMap, LInftyAlgebra, Vec
from .polyvector import Polyvector, gl2_bivector, lie_poisson, so3_bivector

SCHEMA = "shiftq/1"


# ----------------------------------------------------------------------------
# scalars and polynomials

def parse_polynomial(src, variables: Sequence[str]) -> Polynomial:
    """Polynomial from an expression string, a number, or ``{"terms": [...]}``."""
    variables = tuple(variables)
    if isinstance(src, Polynomial):
        return src
    if isinstance(src, (int, Fraction)):
        return Polynomial.const(variables, src)
    if isinstance(src, dict):
        terms = {}
        for t in src.get("terms", []):
            exp = tuple(int(e) for e in t["exp"])
            if len(exp) != len(variables):
                raise StructuralError(f"exponent {exp} does not match {len(variables)} variables")
            terms[exp] = terms.get(exp, Fraction(0)) + as_fraction(t["c"])
        return Polynomial(variables, terms)
    if not isinstance(src, str):
        raise StructuralError(f"cannot read a polynomial from {src!r}")
    syms = sympy.symbols(variables) if variables else ()
    if len(variables) == 1:
        syms = (syms,) if not isinstance(syms, tuple) else syms
    local = {v: s for v, s in zip(variables, syms)}
    try:
        expr = sympy.sympify(src.replace("^", "**"), locals=local, rational=True)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise StructuralError(f"cannot parse polynomial {src!r}: {exc}") from None
    extra = expr.free_symbols - set(syms)
    if extra:
        raise StructuralError(f"polynomial {src!r} uses undeclared symbols {sorted(map(str, extra))}")
    if not syms:
        return Polynomial.const(variables, as_fraction(str(sympy.nsimplify(expr))))
    try:
        poly = sympy.Poly(sympy.expand(expr), *syms, domain="QQ")
    except sympy.PolynomialError as exc:
        raise StructuralError(f"{src!r} is not a polynomial: {exc}") from None
    terms = {}
    for monom, c in poly.terms():
        terms[tuple(int(e) for e in monom)] = Fraction(int(c.p), int(c.q))
    return Polynomial(variables, terms)


def _coeff(src, variables, cap, hbar: int = 0):
    p = parse_polynomial(src, variables)
    if hbar:
        if cap is None:
            raise StructuralError("hbar powers need an hbar_cap")
        return HbarPoly(variables, cap, [Polynomial.zero(variables)] * hbar + [p])
    return p


# ----------------------------------------------------------------------------
# polyvectors and operators

def _var_index(variables, name) -> int:
    try:
        return variables.index(name)
    except ValueError:
        raise StructuralError(f"unknown variable {name!r}") from None


def parse_polyvector(src, variables: Sequence[str], cap=None) -> Polyvector:
    """Polyvector from term lists, ``{"preset": "so3"|"gl2"}`` or ``{"lie_poisson": ...}``."""
    variables = tuple(variables)
    if isinstance(src, dict):
        if "preset" in src:
            name = src["preset"]
            if name == "so3":
                return so3_bivector(variables)
            if name == "gl2":
                return gl2_bivector(variables)
            raise StructuralError(f"unknown preset {name!r}")
        if "lie_poisson" in src:
            consts = [(int(i), int(j), int(k), as_fraction(c)) for i, j, k, c in src["lie_poisson"]]
            return lie_poisson(len(variables), consts, variables)
        if "function" in src:
            return Polyvector(variables, 0, {(): parse_polynomial(src["function"], variables)}, cap=cap)
        src = src.get("terms", [])
    if not isinstance(src, list):
        raise StructuralError("polyvector must be a list of terms")
    ranks = {len(t.get("wedge", [])) for t in src}
    if len(ranks) > 1:
        raise StructuralError("polyvector terms of mixed rank")
    rank = ranks.pop() if ranks else 0
    terms: Dict[Tuple[int, ...], object] = {}
    for t in src:
        idx = tuple(_var_index(variables, v) for v in t.get("wedge", []))
        c = _coeff(t.get("coeff", "1"), variables, cap, int(t.get("hbar", 0)))
        terms[idx] = terms[idx] + c if idx in terms else c
    return Polyvector(variables, rank, terms, cap=cap)


def parse_operator(src, variables: Sequence[str], cap=None) -> PolyDiffOp:
    variables = tuple(variables)
    if isinstance(src, dict):
        src = src.get("terms", [])
    arities = {len(t["orders"]) for t in src}
    if len(arities) > 1:
        raise StructuralError("operator terms of mixed arity")
    arity = arities.pop() if arities else 0
    terms: Dict = {}
    for t in src:
        key = []
        for slot in t["orders"]:
            m = [0] * len(variables)
            for v, e in slot.items():
                m[_var_index(variables, v)] = int(e)
            key.append(tuple(m))
        key = tuple(key)
        c = _coeff(t.get("coeff", "1"), variables, cap, int(t.get("hbar", 0)))
        terms[key] = terms[key] + c if key in terms else c
    return PolyDiffOp(variables, arity, terms, cap=cap)


def operator_to_json(op: PolyDiffOp) -> List[dict]:
    out = []
    for key, c in op.terms():
        orders = [{op.vars[i]: e for i, e in enumerate(m) if e} for m in key]
        if isinstance(c, HbarPoly):
            for k, ck in enumerate(c.coeffs):
                if not ck.is_zero():
                    out.append({"orders": orders, "coeff": str(ck), "hbar": k})
        else:
            out.append({"orders": orders, "coeff": str(c)})
    return out


def parse_star(src: dict, cap_override: int | None = None) -> StarProduct:
    """``{"vars": [...], "hbar_cap": N, "moyal": polyvector}`` or ``... "B": operator``."""
    variables = tuple(src["vars"])
    cap = cap_override if cap_override is not None else int(src.get("hbar_cap", 4))
    poisson = parse_polyvector(src["poisson"], variables) if "poisson" in src else None
    if "moyal" in src:
        return moyal(parse_polyvector(src["moyal"], variables), cap)
    if "B" in src:
        B = parse_operator(src["B"], variables, cap)
        return StarProduct(B, poisson=poisson)
    raise StructuralError("star product needs 'moyal' or 'B'")


def star_to_json(S: StarProduct) -> dict:
    return {"vars": list(S.vars), "hbar_cap": S.hbar_cap, "B": operator_to_json(S.B)}


# ----------------------------------------------------------------------------
# finite L-infinity data

def parse_vec(src) -> Vec:
    if isinstance(src, str):
        return Vec.basis(src)
    out: Dict[str, Fraction] = {}
    for t in src:
        out[t["b"]] = out.get(t["b"], Fraction(0)) + as_fraction(t.get("c", "1"))
    return Vec(out)


def parse_space(src: dict) -> FiniteSpace:
    return FiniteSpace([(b["name"], int(b["deg"])) for b in src["basis"]])


def parse_maps(space: FiniteSpace, arr, degree_of) -> Dict[int, GradedMap]:
    maps = {}
    for block in arr or []:
        n = int(block["arity"])
        if n in maps:
            raise StructuralError(f"duplicate arity {n}")
        entries = {tuple(e["args"]): parse_vec(e["value"]) for e in block.get("entries", [])}
        for v in entries.values():
            space.check(v)
        maps[n] = GradedMap(space, n, degree_of(n), entries)
    return maps


def parse_finite_algebra(src: dict, cutoff: int | None = None) -> LInftyAlgebra:
    space = parse_space(src)
    maps = parse_maps(space, src.get("D", []), lambda n: 2 - n)
    return LInftyAlgebra.from_maps(space, maps, cutoff if cutoff is not None else int(src.get("cutoff", 4)))


# ----------------------------------------------------------------------------
# output

def element_to_json(v):
    if v is None:
        return None
    if isinstance(v, Vec):
        return [{"b": k, "c": fraction_str(c)} for k, c in v.items()]
    if isinstance(v, Polyvector):
        return {
            "rank": v.rank,
            "terms": [{"wedge": [v.vars[i] for i in idx], "coeff": str(c)} for idx, c in v.terms()],
        }
    if isinstance(v, PolyDiffOp):
        return {"arity": v.arity, "terms": operator_to_json(v)}
    if isinstance(v, (Polynomial, HbarPoly)):
        return str(v)
    if isinstance(v, Fraction):
        return fraction_str(v)
    if hasattr(v, "coords"):
        return [fraction_str(c) for c in v.coords]
    if isinstance(v, (int, str, bool)):
        return v
    if isinstance(v, dict):
        return {str(k): element_to_json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [element_to_json(x) for x in v]
    return str(v)


def dumps(report: dict) -> str:
    """Canonical, byte-stable JSON text."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def render_text(report: dict) -> str:
    """Plain-text rendering of a report dictionary."""
    lines = [f"schema: {report.get('schema')}", f"command: {report.get('command')}"]
    for key in sorted(report):
        if key in ("schema", "command", "checks"):
            continue
        lines.append(f"{key}: {json.dumps(report[key], sort_keys=True)}")
    for c in report.get("checks", []):
        mark = "PASS" if c["pass"] else "FAIL"
        tail = "" if c["pass"] or c.get("residual") is None else f"  residual={json.dumps(c['residual'], sort_keys=True)}"
        lines.append(f"{mark} {c['name']}{tail}")
    return "\n".join(lines) + "\n"
