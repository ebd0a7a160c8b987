"""Centralized ground truth: exhaustive mixed-integer search, centralized Gomory, and certification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from .cuts import int_cost_cut, mig_oracle
from .lp import (
    ONE,
    ZERO,
    Basis,
    ConstraintSet,
    ContractViolation,
    HalfSpace,
    LexLpResult,
    dot,
    lp_lex_solve,
    qvec,
    to_q,
)
from .problems import MilpInstance

LATTICE_GUARD = 10**7


class EnumerationTooLarge(ContractViolation):
    pass


class InfeasibleInstance(ValueError):
    pass


@dataclass(frozen=True)
class MilpSolution:
    cost: mpq
    z: tuple
    lex_optimal: bool = True
    lattice_points: int = 0


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _integer_rows(rows: Sequence[HalfSpace]) -> tuple[list[list[int]], list[int]]:
    """Scale every row by the lcm of its denominators; the feasible set is unchanged."""
    A, b = [], []
    for h in rows:
        den = 1
        for x in (*h.a, h.b):
            den = _lcm(den, x.denominator)
        A.append([int(x * den) for x in h.a])
        b.append(int(h.b * den))
    return A, b


def _pure_integer(instance: MilpInstance, chunk: int = 1 << 18) -> MilpSolution:
    """Scan every lattice point of ``H_M`` in exact integer arithmetic (vectorized)."""
    d = instance.d
    lo, hi = -math.floor(instance.M), math.floor(instance.M)
    width = hi - lo + 1
    total = width**d
    if total > LATTICE_GUARD:
        raise EnumerationTooLarge(f"{total} lattice points exceed the guard of {LATTICE_GUARD}")
    A, b = _integer_rows(instance.rows)
    cden = 1
    for x in instance.c:
        cden = _lcm(cden, x.denominator)
    cint = [int(x * cden) for x in instance.c]
    bound = max([abs(v) for row in A for v in row] + [abs(v) for v in b] + [abs(v) for v in cint] + [1])
    exact_int64 = bound * max(abs(lo), abs(hi)) * (d + 1) < 2**62
    dtype = np.int64 if exact_int64 else object
    An = np.array(A, dtype=dtype)
    bn = np.array(b, dtype=dtype)
    cn = np.array(cint, dtype=dtype)
    best_cost = None
    best_z = None
    axes = np.arange(lo, hi + 1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        # row-major decode so that index order is lexicographic order of z
        Z = np.empty((idx.size, d), dtype=np.int64)
        rem = idx.copy()
        for k in range(d - 1, -1, -1):
            Z[:, k] = axes[rem % width]
            rem //= width
        Zt = Z.astype(dtype)
        ok = np.all(Zt @ An.T <= bn, axis=1)
        if not ok.any():
            continue
        Zf = Zt[ok]
        costs = Zf @ cn
        m = costs.min()
        if best_cost is not None and m > best_cost:
            continue
        first = int(np.flatnonzero(costs == m)[0])      # lexicographically smallest at this cost
        if best_cost is None or m < best_cost:
            best_cost, best_z = m, Zf[first]
    if best_z is None:
        raise InfeasibleInstance("no lattice point of H_M satisfies the rows")
    z = tuple(mpq(int(v)) for v in best_z)
    return MilpSolution(dot(instance.c, z), z, True, total)


def _mixed(instance: MilpInstance) -> MilpSolution:
    """Enumerate integer prefixes depth-first; relaxations prune subtrees that cannot beat the incumbent.

    The relaxation's lex-optimal ``(cost, z)`` is a lexicographic lower bound
    on every mixed-integer point below a node, so pruning with ``>=`` keeps
    the search exhaustive for the lex-optimal answer.
    """
    d, d_Z = instance.d, instance.d_Z
    base = instance.polyhedron()
    c = instance.c
    # the guard counts lattice points of the LP bounding box of the integer coordinates
    points = 1
    for k in range(d_Z):
        e = [ZERO] * d
        e[k] = ONE
        lo = lp_lex_solve(base, e)
        if not lo.optimal:
            raise InfeasibleInstance("the relaxation is empty")
        e[k] = -ONE
        hi = lp_lex_solve(base, e)
        points *= max(0, math.floor(hi.point[k]) - math.ceil(lo.point[k]) + 1)
    if points > LATTICE_GUARD:
        raise EnumerationTooLarge(f"{points} lattice points exceed the guard of {LATTICE_GUARD}")
    best: list = [None]  # (cost, z)
    visited = [0]

    def fix_rows(prefix):
        rows = []
        for k, v in enumerate(prefix):
            e = [ZERO] * d
            e[k] = ONE
            rows.append(HalfSpace.make(e, v, f"fix{k}+"))
            e = [ZERO] * d
            e[k] = -ONE
            rows.append(HalfSpace.make(e, -v, f"fix{k}-"))
        return rows

    def coord_range(cset, k, start):
        lo_res = lp_lex_solve(cset, [ONE if i == k else ZERO for i in range(d)], start=None)
        if not lo_res.optimal:
            return None
        hi_res = lp_lex_solve(cset, [-ONE if i == k else ZERO for i in range(d)], start=None)
        return math.ceil(lo_res.point[k]), math.floor(hi_res.point[k])

    def rec(prefix, relax: LexLpResult):
        visited[0] += 1
        key = (relax.cost, relax.point)
        if best[0] is not None and key >= best[0]:
            return
        k = len(prefix)
        if k == d_Z:
            best[0] = key
            return
        cset = ConstraintSet([*fix_rows(prefix), *base])
        rng = coord_range(cset, k, relax.basis)
        if rng is None:
            return
        lo, hi = rng
        centre = relax.point[k]
        values = sorted(range(lo, hi + 1), key=lambda v: (abs(v - centre), v))
        for v in values:
            sub = ConstraintSet([*fix_rows((*prefix, v)), *base])
            r = lp_lex_solve(sub, c)
            if r.optimal:
                rec((*prefix, v), r)

    root = lp_lex_solve(base, c)
    if not root.optimal:
        raise InfeasibleInstance("the relaxation is empty")
    rec((), root)
    if best[0] is None:
        raise InfeasibleInstance("no mixed-integer point in P ∩ H_M")
    cost, z = best[0]
    return MilpSolution(cost, z, True, visited[0])


def brute_force_milp(instance: MilpInstance) -> MilpSolution:
    """Exact lex-optimal solution of ``min c^T z`` over ``P ∩ H_M ∩ (Z^{d_Z} x R^{d_R})``.

    Pure-integer instances are settled by scanning every lattice point of the
    box with exact integer arithmetic and no LP at all; mixed instances fix
    the integer coordinates one at a time and solve the continuous remainder
    exactly.
    """
    if instance.d_Z == 0:
        r = lp_lex_solve(instance.polyhedron(), instance.c)
        if not r.optimal:
            raise InfeasibleInstance("the relaxation is empty")
        return MilpSolution(r.cost, r.point, True, 1)
    if instance.d_Z == instance.d:
        width = 2 * math.floor(instance.M) + 1
        if width**instance.d <= LATTICE_GUARD:
            return _pure_integer(instance)
    return _mixed(instance)


# ---------------------------------------------------------------------------
# centralized Gomory


class GomoryStatus(Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not-converged"
    INFEASIBLE = "infeasible"


@dataclass
class GomoryResult:
    status: GomoryStatus
    z: tuple | None
    cost: mpq | None
    iterations: int
    cuts: int
    cost_history: list = field(default_factory=list)


def centralized_gomory(instance: MilpInstance, max_iters: int = 10000, cost_cuts: bool = True) -> GomoryResult:
    """Cutting-plane loop: solve the relaxation, add the MIG cut and the ceiling cost cut, repeat.

    Cuts accumulate in the polyhedron.  Convergence is only guaranteed when
    the optimal cost is integer-valued.
    """
    P = list(instance.polyhedron())
    c = instance.c
    basis: Basis | None = None
    history = []
    ncuts = 0
    for it in range(1, max_iters + 1):
        res = lp_lex_solve(ConstraintSet(P), c, start=basis)
        if not res.optimal:
            return GomoryResult(GomoryStatus.INFEASIBLE, None, None, it, ncuts, history)
        z, basis = res.point, res.basis
        history.append(res.cost)
        cut = mig_oracle(z, basis, instance.d_Z, f"mig/c/{it}")
        if cut is None:
            return GomoryResult(GomoryStatus.CONVERGED, z, res.cost, it, ncuts, history)
        P.append(cut.halfspace)
        ncuts += 1
        if cost_cuts:
            P.append(int_cost_cut(c, z, f"cost/c/{it}").halfspace)
    return GomoryResult(GomoryStatus.NOT_CONVERGED, None, None, max_iters, ncuts, history)


def certify_eps(z: Sequence, instance: MilpInstance, epsilon, J_star) -> bool:
    """``z`` is feasible (integrality included) and ``0 <= c^T z - J* < eps``."""
    z = qvec(z)
    if not instance.is_feasible(z):
        return False
    gap = instance.cost(z) - to_q(J_star)
    return ZERO <= gap < to_q(epsilon)
