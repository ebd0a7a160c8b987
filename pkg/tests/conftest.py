"""Shared helpers: independent reference computations in ``fractions.Fraction``."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest


def frac_solve(A, b):
    """Gauss-Jordan over Fraction; ``None`` when singular."""
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def vertices(rows):
    """All vertices of ``{z : a^T z <= b}`` by brute-force d-subset enumeration."""
    rows = [([Fraction(x) for x in a], Fraction(b)) for a, b in rows]
    d = len(rows[0][0])
    out = set()
    for combo in itertools.combinations(rows, d):
        z = frac_solve([a for a, _ in combo], [b for _, b in combo])
        if z is None:
            continue
        if all(sum(ai * zi for ai, zi in zip(a, z)) <= b for a, b in rows):
            out.add(tuple(z))
    return out


def lex_min_vertex(rows, c):
    """Lex-min of ``(c^T z, z)`` over the vertices; ``None`` when empty."""
    vs = vertices(rows)
    if not vs:
        return None
    c = [Fraction(x) for x in c]
    return min(vs, key=lambda z: (sum(ci * zi for ci, zi in zip(c, z)), z))


def lattice_points(rows, d_Z, d, M):
    """Mixed-integer points of small boxes: integer prefixes times vertices of the continuous slice."""
    pts = []
    rng = range(-int(M), int(M) + 1)
    for prefix in itertools.product(rng, repeat=d_Z):
        if d_Z == d:
            z = tuple(Fraction(v) for v in prefix)
            if all(sum(Fraction(ai) * zi for ai, zi in zip(a, z)) <= Fraction(b) for a, b in rows):
                pts.append(z)
            continue
        # the slice is a polytope in the continuous coordinates; its vertices represent it
        sub = []
        for a, b in rows:
            a = [Fraction(x) for x in a]
            rest = a[d_Z:]
            bb = Fraction(b) - sum(ai * v for ai, v in zip(a[:d_Z], prefix))
            if any(rest):
                sub.append((rest, bb))
            elif bb < 0:
                sub = None
                break
        if sub is None:
            continue
        for v in vertices(sub):
            pts.append(tuple(Fraction(p) for p in prefix) + v)
    return pts


@pytest.fixture
def tiny_assignment():
    from dimilp.problems import AssignmentSpec

    return AssignmentSpec(
        targets=[1, 2],
        weights={1: 1, 2: 1},
        vehicles=[1, 2],
        paths=[
            {"vehicle": 1, "time": 5, "targets": [1]},
            {"vehicle": 2, "time": 3, "targets": [2]},
            {"vehicle": 2, "time": 4, "targets": [1, 2]},
        ],
    )


def mixed_points_int(A, b, d_Z, M):
    """Mixed-integer points of ``{A z <= b} ∩ [-M, M]^d`` as ``(numerators, denominator)`` pairs.

    Integer prefixes are enumerated; the continuous slice is represented by
    its vertices, which is enough to test any linear inequality on it.
    """
    import numpy as np

    d = len(A[0])
    M = int(M)
    rows = [(list(a), bi) for a, bi in zip(A, b)]
    for l in range(d):
        e = [0] * d
        e[l] = 1
        rows.append((list(e), M))
        e = [0] * d
        e[l] = -1
        rows.append((e, M))
    if d_Z == d:
        grid = np.array(list(itertools.product(range(-M, M + 1), repeat=d)), dtype=np.int64)
        An = np.array([a for a, _ in rows], dtype=np.int64)
        bn = np.array([bi for _, bi in rows], dtype=np.int64)
        ok = np.all(grid @ An.T <= bn, axis=1)
        return [(tuple(int(v) for v in z), 1) for z in grid[ok]]
    out = []
    for prefix in itertools.product(range(-M, M + 1), repeat=d_Z):
        sub = []
        dead = False
        for a, bi in rows:
            rest = a[d_Z:]
            bb = bi - sum(x * v for x, v in zip(a[:d_Z], prefix))
            if any(rest):
                sub.append((rest, bb))
            elif bb < 0:
                dead = True
                break
        if dead:
            continue
        for v in vertices(sub):
            den = 1
            for x in v:
                den = den * x.denominator // math.gcd(den, x.denominator)
            out.append((tuple(p * den for p in prefix) + tuple(int(x * den) for x in v), den))
    return out


def satisfies(a, b, point) -> bool:
    num, den = point
    return sum(int(x) * y for x, y in zip(a, num)) <= int(b) * den


def random_cut_pairs(count: int, seed: int = 0, max_d: int = 4, max_M: int = 5):
    """Yield ``(A, b, c, d_Z, M, result)`` for random LPs whose lex-optimum has a fractional integer coordinate."""
    import numpy as np

    from dimilp.lp import ConstraintSet, HalfSpace, bounding_box, lp_lex_solve

    rng = np.random.default_rng(seed)
    made = 0
    while made < count:
        d = int(rng.integers(1, max_d + 1))
        d_Z = int(rng.integers(1, d + 1))
        M = int(rng.integers(1, max_M + 1))
        n = int(rng.integers(1, 2 * d + 2))
        A = rng.integers(-5, 6, size=(n, d))
        A = [list(map(int, r)) for r in A if r.any()]
        if not A:
            continue
        b = [int(x) for x in rng.integers(-3, 13, size=len(A))]
        c = [int(x) for x in rng.integers(-5, 6, size=d)]
        cs = ConstraintSet([HalfSpace.make(a, bi, f"p{i}") for i, (a, bi) in enumerate(zip(A, b))]) | bounding_box(M, d)
        res = lp_lex_solve(cs, c)
        if not res.optimal or all(x.denominator == 1 for x in res.point[:d_Z]):
            continue
        made += 1
        yield A, b, c, d_Z, M, res


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion at the end of the run

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
