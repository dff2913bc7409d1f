"""``shiftq`` command line: read a JSON problem, run an engine, write a report.

Exit codes: 0 every check passed, 1 a check failed, 2 usage or input error,
3 domain or structural error, 4 resource budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional

from . import io
from .errors import DomainError, HypothesisError, ResourceError, ShiftqError, StructuralError
from .hochschild import gerstenhaber_bracket, hkr, mc_defect_star, residual_terms, star_commutator
from .linfty import (
    LInftyDerivation,
    LInftyMorphism,
    derivation_sweep,
    dpoly_dgla,
    jacobi_sweep,
    mc_defect,
    morphism_sweep,
    nijenhuis_defects,
    tpoly_dgla,
    twist_structure,
)
from .polyvector import Polyvector
from .shift import (
    BinaryOpModel,
    ShiftFamily,
    Slot,
    binary_shift_check,
    classical_shift,
    families_coincide,
    lift_classical,
    quantum_shift,
    scan_strong_nijenhuis,
)

SUBCOMMANDS = (
    "classical",
    "quantum",
    "star-check",
    "linfty-check",
    "morphism-check",
    "derivation-check",
    "nijenhuis",
    "scan",
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN, EXIT_RESOURCE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class CommandConfig:
    subcommand: str
    input_path: str
    report_path: Optional[str] = None
    kmax: Optional[int] = None
    hbar_cap: Optional[int] = None
    arity_cutoff: Optional[int] = None
    output_format: str = "json"
    budget: Optional[int] = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shiftq", description="Exact checks for argument shift and L-infinity derivations.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--input", required=True, help="problem JSON file")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--kmax", type=_positive)
    p.add_argument("--hbar-cap", type=_positive)
    p.add_argument("--arity-cutoff", type=_positive)
    p.add_argument("--budget", type=_positive, help="candidate budget (default SHIFTQ_BUDGET or 100000)")
    p.add_argument("--format", choices=("json", "text"), default="json")
    return p


def parse_config(argv: List[str]) -> CommandConfig:
    """Validated config; raises :class:`UsageError` on bad arguments."""
    ns = _parser().parse_args(argv)
    if ns.arity_cutoff is not None and ns.arity_cutoff < 1:
        raise UsageError("--arity-cutoff must be >= 1")
    return CommandConfig(
        subcommand=ns.subcommand,
        input_path=ns.input,
        report_path=ns.report,
        kmax=ns.kmax,
        hbar_cap=ns.hbar_cap,
        arity_cutoff=ns.arity_cutoff,
        output_format=ns.format,
        budget=ns.budget,
    )


def _load(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path} must contain a JSON object")
    return data


def _check(name: str, value=None, passed: bool | None = None, detail: str = "") -> dict:
    if passed is None:
        passed = value is None or value.is_zero()
    out = {"name": name, "pass": bool(passed), "residual": None if passed else io.element_to_json(value)}
    if detail:
        out["detail"] = detail
    return out


def _family_report(fam: ShiftFamily) -> dict:
    labels = [f"{c}:{k}" for (c, k), _ in fam.generators]
    checks = [
        {
            "name": c.name,
            "pass": c.passed,
            "residual": None if c.passed else io.element_to_json(c.residual),
            **({"detail": c.detail} if c.detail else {}),
        }
        for c in fam.log
    ]
    matrix = [
        {"pair": [labels[i], labels[j]], "value": io.element_to_json(v), "zero": v.is_zero()}
        for (i, j), v in sorted(fam.bracket_matrix.items())
    ]
    return {
        "generators": [{"label": lab, "value": io.element_to_json(g)} for lab, (_, g) in zip(labels, fam.generators)],
        "bracket_matrix": matrix,
        "all_zero": fam.all_zero,
        "checks": checks,
        "truncation": fam.truncation,
    }


# ----------------------------------------------------------------------------
# commands

def _cmd_classical(data: dict, cfg: CommandConfig) -> dict:
    kmax = cfg.kmax if cfg.kmax is not None else int(data.get("kmax", 3))
    if "binary" in data:
        b = data["binary"]
        model = BinaryOpModel(int(b["dim"]), b["m"], b["xi"])
        return _family_report(binary_shift_check(model, b.get("centrals", []), kmax, strict=False))
    variables = tuple(data["vars"])
    pi = io.parse_polyvector(data["poisson"], variables)
    xi = io.parse_polyvector(data["shift_field"], variables)
    cas = [io.parse_polynomial(c, variables) for c in data.get("casimirs", [])]
    return _family_report(classical_shift(pi, xi, cas, kmax, strict=False))


def _derivation_for(alg, src, variables):
    if "lift" in src:
        xi = io.parse_polyvector(src["lift"], variables)
        if alg.space.kind == "tpoly":
            return lift_classical(xi, alg)
        chi = hkr(xi)
        return LInftyDerivation.from_unshifted(alg, {1: lambda a: gerstenhaber_bracket(chi, a)})
    raise StructuralError("polynomial-backend derivations are given as {'lift': vector field}")


def _cmd_quantum(data: dict, cfg: CommandConfig) -> dict:
    variables = tuple(data["vars"])
    kmax = cfg.kmax if cfg.kmax is not None else int(data.get("kmax", 3))
    cut = data.get("cutoffs", {})
    arity = cfg.arity_cutoff or int(cut.get("arity", 4))
    backend = data.get("backend", "tpoly")
    cap = cfg.hbar_cap if cfg.hbar_cap is not None else cut.get("hbar")
    if backend == "tpoly":
        alg = tpoly_dgla(variables, cap=cap, cutoff=arity)
        pi = io.parse_polyvector(data.get("mc_element", data.get("poisson")), variables, cap)
        deriv = data.get("derivation", {"lift": data.get("shift_field")})
        centrals = [Polyvector(variables, 0, {(): io.parse_polynomial(c, variables)}, cap=cap) for c in data.get("centrals", [])]
    elif backend == "dpoly":
        S = io.parse_star(data["mc_element"], cap)
        cap = S.hbar_cap
        alg = dpoly_dgla(variables, cap=cap, cutoff=arity)
        pi = S.B
        deriv = data["derivation"]
        from .hochschild import PolyDiffOp

        centrals = [PolyDiffOp(variables, 0, {(): io.parse_polynomial(c, variables)}, cap=cap) for c in data.get("centrals", [])]
    else:
        raise StructuralError(f"unknown backend {backend!r}")
    X = _derivation_for(alg, deriv, variables)
    fam = quantum_shift(alg, pi, X, centrals, kmax, max_arity=arity, strict=False)
    rep = _family_report(fam)
    if backend == "tpoly" and "poisson" in data and "shift_field" in data and "mc_element" not in data and "derivation" not in data:
        classical = classical_shift(
            io.parse_polyvector(data["poisson"], variables),
            io.parse_polyvector(data["shift_field"], variables),
            [io.parse_polynomial(c, variables) for c in data.get("centrals", [])],
            kmax,
            strict=False,
        )
        same = families_coincide(classical, fam) if cap is None else None
        if same is not None:
            rep["checks"].append(_check("coincides with classical family", passed=same))
    rep["truncation"]["arity_cutoff"] = arity
    return rep


def _cmd_star(data: dict, cfg: CommandConfig) -> dict:
    S = io.parse_star(data, cfg.hbar_cap)
    defect = mc_defect_star(S)
    checks = []
    for k, key, c in residual_terms(defect):
        orders = [{S.vars[i]: e for i, e in enumerate(m) if e} for m in key]
        checks.append({
            "name": f"mc_defect hbar^{k} {json.dumps(orders, sort_keys=True)}",
            "pass": False,
            "residual": str(c),
        })
    if not checks:
        checks.append({"name": f"mc_defect through hbar^{S.hbar_cap}", "pass": True, "residual": None})
    for spec in data.get("commutators", []):
        f = io.parse_polynomial(spec[0], S.vars)
        g = io.parse_polynomial(spec[1], S.vars)
        want = io._coeff(spec[2], S.vars, S.hbar_cap, int(spec[3]) if len(spec) > 3 else 0)
        got = star_commutator(S, f, g)
        diff = got - want
        checks.append({
            "name": f"[{spec[0]}, {spec[1]}]_star",
            "pass": diff.is_zero(),
            "residual": None if diff.is_zero() else str(got),
        })
    return {"checks": checks, "truncation": {"hbar_cap": S.hbar_cap}}


def _report_from(rep) -> dict:
    d = rep.to_dict()
    checks = [
        {"name": f"{d['name']}{list(r['tuple'])}", "pass": False, "residual": r["value"]} for r in d["residuals"]
    ]
    if not checks:
        checks.append({"name": f"{d['name']} ({d['checked']} tuples)", "pass": True, "residual": None})
    return {"checks": checks, "checked_arity": d["checked_arity"], "truncation": d["truncation"], "residuals": d["residuals"]}


def _algebra(data: dict, cfg: CommandConfig):
    src = data.get("algebra", data)
    if "tpoly" in src:
        t = src["tpoly"]
        return tpoly_dgla(tuple(t["vars"]), cap=cfg.hbar_cap, cutoff=cfg.arity_cutoff or int(t.get("cutoff", 4)))
    return io.parse_finite_algebra(src, cfg.arity_cutoff)


def _cmd_linfty(data: dict, cfg: CommandConfig) -> dict:
    alg = _algebra(data, cfg)
    rep = _report_from(jacobi_sweep(alg, data.get("max_arity")))
    if "mc" in data:
        m = io.parse_vec(data["mc"])
        d = mc_defect(alg, m)
        rep["checks"].append(_check("mc_defect", d))
        if d.is_zero():
            tw = twist_structure(alg, m)
            r = _report_from(jacobi_sweep(tw, data.get("max_arity")))
            for c in r["checks"]:
                c["name"] = "twisted " + c["name"]
            rep["checks"].extend(r["checks"])
            rep["twisted_differential"] = {
                name: io.element_to_json(tw.d(alg.space.vec(name))) for name in alg.space.names
            }
    return rep


def _cmd_morphism(data: dict, cfg: CommandConfig) -> dict:
    src = io.parse_finite_algebra(data["source"], cfg.arity_cutoff)
    tgt = io.parse_finite_algebra(data["target"], cfg.arity_cutoff) if "target" in data else src
    maps = io.parse_maps(src.space, data.get("F", []), lambda n: 1 - n)
    for m in maps.values():
        for _, v in m.entries():
            tgt.space.check(v)
    F = LInftyMorphism.from_unshifted(src, tgt, maps)
    return _report_from(morphism_sweep(F, data.get("max_arity")))


def _finite_derivation(alg, data):
    maps = io.parse_maps(alg.space, data.get("X", []), lambda n: 1 - n)
    return LInftyDerivation.from_unshifted(alg, maps)


def _cmd_derivation(data: dict, cfg: CommandConfig) -> dict:
    alg = _algebra(data, cfg)
    if alg.space.kind != "finite":
        raise DomainError("derivation-check sweeps finite bases; use 'nijenhuis' or 'quantum' for polyvectors")
    X = _finite_derivation(alg, data)
    return _report_from(derivation_sweep(X, data.get("max_arity")))


def _cmd_nijenhuis(data: dict, cfg: CommandConfig) -> dict:
    alg = _algebra(data, cfg)
    if alg.space.kind == "finite":
        X = _finite_derivation(alg, data)
        m = io.parse_vec(data["mc"])
        probes = None
    else:
        variables = alg.space.vars
        X = _derivation_for(alg, data["X"], variables)
        m = io.parse_polyvector(data["mc"], variables, alg.space.cap)
        probes = alg.space.probes(int(data.get("probe_degree", 1)))
    rep = nijenhuis_defects(X, m, data.get("max_arity"), probes=probes, arities=data.get("arities"))
    out = _report_from(rep)
    out["checks"].insert(0, _check("weak", rep.weak))
    out["x_of_pi"] = io.element_to_json(rep.x_of_pi)
    return out


def _cmd_scan(data: dict, cfg: CommandConfig) -> dict:
    alg = io.parse_finite_algebra(data["dgla"], cfg.arity_cutoff)
    grid = data["grid"]
    slots = []
    for s in grid["slots"]:
        name = s["map"]
        if name not in ("X1", "X2"):
            raise StructuralError(f"slot map must be X1 or X2, got {name!r}")
        slots.append(Slot(int(name[1]), tuple(s["args"]), s["target"]))
    fixed: Dict[int, Dict] = {}
    for block in data.get("fixed", []):
        n = int(block["arity"])
        for e in block.get("entries", []):
            fixed.setdefault(n, {})[tuple(e["args"])] = io.parse_vec(e["value"])
    budget = cfg.budget if cfg.budget is not None else data.get("budget")
    mc = io.parse_vec(data.get("mc", []))
    res = scan_strong_nijenhuis(alg, mc, slots, grid["values"], fixed, budget=budget)
    return _scan_report(res)


def _scan_report(res, complete: bool = True) -> dict:
    d = res.to_dict()
    d["found"] = [{**f, "x_of_pi": io.element_to_json(f["x_of_pi"])} for f in d["found"]]
    d["checks"] = [{"name": "scan completed", "pass": complete, "residual": None}]
    return d


COMMANDS = {
    "classical": _cmd_classical,
    "quantum": _cmd_quantum,
    "star-check": _cmd_star,
    "linfty-check": _cmd_linfty,
    "morphism-check": _cmd_morphism,
    "derivation-check": _cmd_derivation,
    "nijenhuis": _cmd_nijenhuis,
    "scan": _cmd_scan,
}


def run(cfg: CommandConfig) -> tuple:
    """Return ``(exit code, report dict)``."""
    base = {"schema": io.SCHEMA, "command": cfg.subcommand}
    try:
        data = _load(cfg.input_path)
    except UsageError as exc:
        return EXIT_USAGE, {**base, "error": str(exc), "pass": False, "checks": []}
    try:
        body = COMMANDS[cfg.subcommand](data, cfg)
    except ResourceError as exc:
        out = {**base, "error": f"resource: {exc}", "pass": False, "checks": []}
        if exc.partial is not None and hasattr(exc.partial, "to_dict"):
            out["partial"] = _scan_report(exc.partial, complete=False)
        return EXIT_RESOURCE, out
    except HypothesisError as exc:
        return EXIT_FAIL, {**base, "error": str(exc), "hypothesis": exc.hypothesis, "pass": False, "checks": []}
    except (DomainError, StructuralError, ShiftqError) as exc:
        return EXIT_DOMAIN, {**base, "error": f"{type(exc).__name__}: {exc}", "pass": False, "checks": []}
    except (KeyError, TypeError, ValueError) as exc:
        return EXIT_USAGE, {**base, "error": f"bad problem file: {type(exc).__name__}: {exc}", "pass": False, "checks": []}
    rep = {**base, **body}
    passed = all(c["pass"] for c in rep.get("checks", []))
    if "all_zero" in rep:
        passed = passed and rep["all_zero"]
    rep["pass"] = passed
    failed = [c["name"] for c in rep.get("checks", []) if not c["pass"]]
    if failed:
        rep["failed"] = failed
    return (EXIT_OK if passed else EXIT_FAIL), rep


def main(argv: List[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(f"shiftq: error: {exc}\n")
        sys.stderr.write(_parser().format_usage())
        return EXIT_USAGE
    code, rep = run(cfg)
    text = io.dumps(rep) if cfg.output_format == "json" else io.render_text(rep)
    if cfg.report_path:
        with open(cfg.report_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code != EXIT_OK and "error" in rep:
        sys.stderr.write(f"shiftq: {rep['error']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
