import math
from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from conftest import lattice_points
from dimilp import agent as ag
from dimilp.lp import HalfSpace, lp_lex_solve
from dimilp.oracle import (
    EnumerationTooLarge,
    GomoryStatus,
    InfeasibleInstance,
    _mixed,
    brute_force_milp,
    centralized_gomory,
    certify_eps,
)
from dimilp.problems import MilpInstance, build_assignment_milp, gen_random_milp


def hs(a, b, id=""):
    return HalfSpace.make(a, b, id)


@pytest.fixture
def triangle():
    rows = (hs([2, 2], 3, "p0"), hs([-1, 0], 0, "p1"), hs([0, -1], 0, "p2"))
    return MilpInstance((-1, -1), rows, 2, 10)


def test_triangle_brute_force(triangle):
    sol = brute_force_milp(triangle)
    assert sol.cost == -1
    assert sol.z == (0, 1)


def test_pure_lp_equals_solver():
    inst = gen_random_milp(2, 3, 0, 8, M=10)
    sol = brute_force_milp(inst)
    assert sol.z == lp_lex_solve(inst.polyhedron(), inst.c).point


def test_assignment_example(tiny_assignment):
    assert brute_force_milp(build_assignment_milp(tiny_assignment)).cost == 4


def test_infeasible_instance():
    inst = MilpInstance((1,), (hs([2], 1), hs([-2], -1)), 1, 5)   # z = 1/2 only
    with pytest.raises(InfeasibleInstance):
        brute_force_milp(inst)


def test_enumeration_guard():
    inst = MilpInstance((1,) * 8, (hs([1] * 8, 1),), 8, 50)
    with pytest.raises(EnumerationTooLarge):
        brute_force_milp(inst)


@st.composite
def small_milps(draw):
    d = draw(st.integers(1, 3))
    d_Z = draw(st.integers(0, d))
    n = draw(st.integers(1, 4))
    rows = []
    for i in range(n):
        a = draw(st.lists(st.integers(-3, 3), min_size=d, max_size=d).filter(any))
        rows.append((a, draw(st.integers(-2, 6))))
    c = draw(st.lists(st.integers(-3, 3), min_size=d, max_size=d))
    M = draw(st.integers(1, 3))
    return d, d_Z, rows, c, M


def _reference(d, d_Z, rows, c, M):
    box = [(a, b) for a, b in rows]
    for l in range(d):
        e = [0] * d
        e[l] = 1
        box.append((list(e), M))
        e[l] = -1
        box.append((list(e), M))
    pts = lattice_points(box, d_Z, d, M)
    if not pts:
        return None
    c = [Fraction(x) for x in c]
    return min((sum(ci * zi for ci, zi in zip(c, z)), z) for z in pts)


@settings(max_examples=150, deadline=None)
@given(small_milps())
def test_brute_force_matches_independent_enumeration(data):
    d, d_Z, rows, c, M = data
    inst = MilpInstance(tuple(c), tuple(hs(a, b, f"p{i}") for i, (a, b) in enumerate(rows)), d_Z, M)
    ref = _reference(d, d_Z, rows, c, M)
    if ref is None:
        with pytest.raises(InfeasibleInstance):
            brute_force_milp(inst)
        return
    sol = brute_force_milp(inst)
    assert Fraction(int(sol.cost.numerator), int(sol.cost.denominator)) == ref[0]
    assert tuple(Fraction(int(x.numerator), int(x.denominator)) for x in sol.z) == ref[1]
    if 0 < d_Z == d:
        # the pruned search and the lattice scan agree on pure-integer instances
        assert _mixed(inst).z == sol.z


def test_gomory_matches_brute_force(triangle):
    g = centralized_gomory(triangle)
    assert g.status is GomoryStatus.CONVERGED
    assert g.z == brute_force_milp(triangle).z
    assert g.cost_history == sorted(g.cost_history)


def test_gomory_lp_integral_instance():
    inst = MilpInstance((1, 1), (hs([-1, 0], 0), hs([0, -1], 0)), 2, 5)
    g = centralized_gomory(inst)
    assert g.status is GomoryStatus.CONVERGED
    assert (g.iterations, g.cuts) == (1, 0)


def test_gomory_tailing_off_reports_not_converged():
    # with MIG cuts alone the relaxation cost creeps towards -6 with ever
    # larger denominators; the cost cuts close the gap at once
    rows = (hs([1, 9], 7), hs([3, 3], 20), hs([-4, 2], 13))
    inst = MilpInstance((-1, -3), rows, 2, 10)
    g = centralized_gomory(inst, max_iters=40, cost_cuts=False)
    assert g.status is GomoryStatus.NOT_CONVERGED
    assert g.iterations == 40
    assert g.cost_history == sorted(g.cost_history)
    assert g.cost_history[-1] < -6
    full = centralized_gomory(inst)
    assert full.status is GomoryStatus.CONVERGED
    assert full.z == brute_force_milp(inst).z == (6, 0)


@pytest.mark.parametrize("seed", range(4))
def test_gomory_agrees_on_random_integer_cost_instances(seed):
    inst = gen_random_milp(seed, 3, 3, 10, M=6, integer_cost=True)
    g = centralized_gomory(inst)
    assert g.status is GomoryStatus.CONVERGED
    assert g.z == brute_force_milp(inst).z


def test_certify_eps(triangle):
    J = mpq(-1)
    assert certify_eps((0, 1), triangle, mpq(1, 1000), J)
    assert not certify_eps((mpq(1, 2), 1), triangle, 1, J)      # fractional
    assert not certify_eps((2, 2), triangle, 10, J)             # outside P
    assert not certify_eps((0, 0), triangle, 1, J)              # gap exactly eps
    assert certify_eps((0, 0), triangle, mpq(11, 10), J)


def _single_var(cost):
    # min cost*z over the integers 1 <= z <= 5
    return MilpInstance((cost,), (hs([-1], -1), hs([1], 5)), 1, 10)


@pytest.mark.parametrize("cost, rho", [("0.37", 4), ("0.4", 4)])
def test_epigraph_optimum(cost, rho):
    inst = _single_var(cost)
    J = brute_force_milp(inst).cost
    ext = ag.epigraph_transform(inst, "0.1").as_milp()
    assert brute_force_milp(ext).cost == rho
    g = centralized_gomory(ext)
    assert g.status is GomoryStatus.CONVERGED
    assert g.z[0] == rho == math.ceil(J / mpq(1, 10))
    assert certify_eps(g.z[1:], inst, "0.1", J)
    if cost == "0.4":
        assert inst.cost(g.z[1:]) == J
