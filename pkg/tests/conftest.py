from fractions import Fraction
from itertools import combinations
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from shiftq.exact import Polynomial
from shiftq.hochschild import PolyDiffOp
from shiftq.polyvector import Polyvector

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PROBLEMS = Path(__file__).resolve().parent.parent / "demos" / "problems"

V2 = ("x", "y")
V3 = ("x1", "x2", "x3")

small = st.integers(-3, 3).map(Fraction)


def exponents(nvars, max_deg):
    return st.lists(st.integers(0, max_deg), min_size=nvars, max_size=nvars).filter(lambda e: sum(e) <= max_deg)


def polynomials(variables=V3, max_deg=2, max_terms=4):
    n = len(variables)
    return st.dictionaries(exponents(n, max_deg).map(tuple), small, max_size=max_terms).map(
        lambda d: Polynomial(variables, d)
    )


def polyvectors(variables=V3, rank=None, max_deg=2):
    n = len(variables)
    ranks = st.integers(0, n) if rank is None else st.just(rank)

    def build(r):
        idxs = list(combinations(range(n), r))
        return st.dictionaries(st.sampled_from(idxs), polynomials(variables, max_deg, 3), max_size=3).map(
            lambda d: Polyvector(variables, r, d)
        )

    return ranks.flatmap(build)


def operators(variables=V2, max_arity=2, max_order=2, max_deg=2):
    n = len(variables)

    def build(a):
        key = st.tuples(*[exponents(n, max_order).map(tuple) for _ in range(a)])
        return st.dictionaries(key, polynomials(variables, max_deg, 2), max_size=3).map(
            lambda d: PolyDiffOp(variables, a, d)
        )

    return st.integers(0, max_arity).flatmap(build)


@pytest.fixture
def problems():
    return PROBLEMS


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Time a block and record one pass/fail line for the terminal summary."""
    import time
    from contextlib import contextmanager

    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    @contextmanager
    def run(number, title, limit=None):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            took = time.perf_counter() - start
            ok = ok and (limit is None or took < limit)
            timing = f"{took:.2f}s" + (f" (limit {limit}s)" if limit else "")
            lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{timing}]")
        if limit is not None:
            assert took < limit, f"criterion {number} took {took:.2f}s, limit {limit}s"

    return run


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
