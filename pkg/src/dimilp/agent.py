"""Per-agent state machine for the distributed cutting-plane / constraint-exchange scheme.

Each agent holds a lex-optimal point and a basis of ``d`` constraints.  In
every round it cuts off its own point (MIG cut plus a cost-based cut),
intersects the cuts with its fixed local constraints, its own basis and
every basis it received, and re-solves.  Two variants are provided:

* ``INT``: works directly on ``min c^T z``; requires an integer-valued
  optimal cost.
* ``EPS(eps)``: works on the epigraph approximation in ``(rho_I, z)``
  with ``c^T z <= eps * rho_I`` and ``rho_I`` integer; returns a point whose
  cost is within ``eps`` of optimal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

from gmpy2 import mpq

from .cuts import eps_cost_cut, int_cost_cut, mig_oracle, multi_mig
from .lp import (
    ONE,
    ZERO,
    Basis,
    ConstraintSet,
    ContractViolation,
    HalfSpace,
    alternative_bases,
    bounding_box,
    dot,
    is_integral,
    lp_lex_solve,
    qvec,
    to_q,
)
from .problems import MilpInstance


class ConfigurationError(ValueError):
    """An agent's local constraint set (with the box) is infeasible."""


class ProtocolError(RuntimeError):
    """A local LP became infeasible during the evolution."""


@dataclass(frozen=True)
class AlgoVariant:
    kind: str                      # "int" or "eps"
    epsilon: mpq | None = None

    def __post_init__(self):
        if self.kind not in ("int", "eps"):
            raise ContractViolation(f"unknown variant {self.kind!r}")
        if self.kind == "eps":
            if self.epsilon is None or to_q(self.epsilon) <= 0:
                raise ContractViolation("EPS variant needs epsilon > 0")
            object.__setattr__(self, "epsilon", to_q(self.epsilon))

    @property
    def is_eps(self) -> bool:
        return self.kind == "eps"

    def __str__(self) -> str:
        return "int" if self.kind == "int" else f"eps:{self.epsilon}"


INT = AlgoVariant("int")


def EPS(epsilon) -> AlgoVariant:
    return AlgoVariant("eps", to_q(epsilon))


def parse_variant(text: str) -> AlgoVariant:
    """``"int"`` or ``"eps:<value>"``."""
    if text == "int":
        return INT
    if text.startswith("eps:"):
        return EPS(text[4:])
    raise ContractViolation(f"bad variant {text!r}; expected 'int' or 'eps:<value>'")


# ---------------------------------------------------------------------------
# epigraph extension


def epigraph_box(instance: MilpInstance, epsilon) -> mpq:
    """Box radius for ``(rho_I, z)``, valid for every point of ``P`` inside ``H_M``.

    ``|c^T z| <= M * ||c||_1`` on ``H_M``, hence ``|rho_I| <= ceil(M ||c||_1 / eps)``
    at every feasible point; the original ``M`` is kept as a floor.
    """
    eps = to_q(epsilon)
    if eps <= 0:
        raise ContractViolation("epsilon must be positive")
    c1 = sum((abs(x) for x in instance.c), ZERO)
    return mpq(max(instance.M, mpq(math.ceil(instance.M * c1 / eps))))


@dataclass(frozen=True)
class EpigraphInstance:
    """``min rho_I  s.t.  a_i^T z <= b_i,  c^T z <= eps rho_I,  rho_I in Z`` in coordinates ``(rho_I, z)``."""

    base: MilpInstance
    epsilon: mpq
    M_ext: mpq
    coupling: HalfSpace
    box: ConstraintSet

    @property
    def d(self) -> int:
        return self.base.d + 1

    @property
    def d_Z(self) -> int:
        return self.base.d_Z + 1

    @property
    def cost(self) -> tuple:
        return (ONE,) + (ZERO,) * self.base.d

    def lift(self, h: HalfSpace) -> HalfSpace:
        return HalfSpace.make((ZERO, *h.a), h.b, h.id)

    def local_fixed(self, local_rows: Sequence[HalfSpace]) -> ConstraintSet:
        return ConstraintSet([*(self.lift(h) for h in local_rows), self.coupling, *self.box])

    def as_milp(self) -> MilpInstance:
        """The extended problem as a plain instance (rows include the coupling row and the z-box)."""
        rows = [self.lift(h) for h in self.base.rows] + [self.coupling]
        rows += [h for h in self.box if h.a[0] == 0]
        return MilpInstance(self.cost, tuple(rows), self.d_Z, self.M_ext,
                            {"generator": "epigraph", "epsilon": str(self.epsilon)})


def epigraph_transform(instance: MilpInstance, epsilon) -> EpigraphInstance:
    eps = to_q(epsilon)
    if eps <= 0:
        raise ContractViolation("epsilon must be positive")
    M_ext = epigraph_box(instance, eps)
    coupling = HalfSpace.make((-eps, *instance.c), ZERO, "epi")
    d = instance.d + 1
    # rho_I gets the extended radius, z keeps the instance box
    box = ConstraintSet([*bounding_box(M_ext, 1, 0, d), *bounding_box(instance.M, instance.d, 1, d)])
    return EpigraphInstance(instance, eps, M_ext, coupling, box)


# ---------------------------------------------------------------------------
# agent state


@dataclass(frozen=True)
class BasisMessage:
    sender_id: int
    basis: Basis

    @property
    def rows(self) -> tuple:
        return self.basis.rows


@dataclass(frozen=True)
class AgentState:
    agent_id: int
    z: tuple
    basis: Basis
    fixed_constraint: ConstraintSet
    variant: AlgoVariant
    lp_cost: tuple                  # c for INT, e_1 for EPS
    n_int: int                      # leading integer-constrained coordinates in LP space
    orig_cost: tuple                # c of the original problem
    multi_cuts: bool = False
    basis_unchanged_rounds: int = 0
    halted: bool = False
    last_round: int = 0

    @property
    def cost(self) -> mpq:
        """The local LP objective: ``c^T z`` (INT) or ``rho_I`` (EPS)."""
        return dot(self.lp_cost, self.z)

    @property
    def integral(self) -> bool:
        return all(is_integral(x) for x in self.z[: self.n_int])

    def message(self) -> BasisMessage:
        return BasisMessage(self.agent_id, self.basis)


def init(
    local_rows: Sequence[HalfSpace],
    M,
    cost: Sequence,
    variant: AlgoVariant,
    d_Z: int,
    agent_id: int = 0,
    multi_cuts: bool = False,
    epigraph: EpigraphInstance | None = None,
) -> AgentState:
    """Assemble ``h^[i] = h_i0 ∩ H_M`` and solve it.

    For the EPS variant pass the shared ``epigraph`` (built once per run) or
    let it be derived here from ``cost``/``M``.  ``local_rows`` are in the
    original coordinates either way.
    """
    cost = qvec(cost)
    d = len(cost)
    if variant.is_eps:
        if epigraph is None:
            rows = tuple(local_rows) or tuple(bounding_box(M, d))[:1]
            epigraph = epigraph_transform(MilpInstance(cost, rows, d_Z, M), variant.epsilon)
        fixed = epigraph.local_fixed(local_rows)
        lp_cost = epigraph.cost
        n_int = d_Z + 1
    else:
        fixed = ConstraintSet(local_rows) | bounding_box(M, d)
        lp_cost = cost
        n_int = d_Z
    res = lp_lex_solve(fixed, lp_cost)
    if not res.optimal:
        raise ConfigurationError(f"agent {agent_id}: local constraint set is empty")
    return AgentState(agent_id, res.point, res.basis, fixed, variant, lp_cost, n_int, cost,
                      multi_cuts)


def generate_cuts(state: AgentState, round: int) -> list[HalfSpace]:
    """Cost-based cut followed by the MIG cut(s) at the current point.

    At an integral point with integral cost nothing is cut off, so no cuts
    are generated.
    """
    if state.integral and is_integral(state.cost):
        return []
    tag = f"{state.agent_id}/{round}"
    if state.variant.is_eps:
        cost_cut = eps_cost_cut(state.z[0], len(state.z), f"cost/{tag}", round)
    else:
        cost_cut = int_cost_cut(state.lp_cost, state.z, f"cost/{tag}", round)
    if state.multi_cuts:
        migs = multi_mig(state.z, state.basis, state.n_int, f"mig/{tag}", round)
    else:
        one = mig_oracle(state.z, state.basis, state.n_int, f"mig/{tag}", round)
        migs = [one] if one is not None else []
    return [cost_cut.halfspace, *(m.halfspace for m in migs)]


def step(
    state: AgentState,
    inbox: Sequence[BasisMessage],
    round: int,
    halt_threshold: int | None = None,
) -> AgentState:
    """One evolution round: cut, collect bases, re-solve.

    The local LP is solved over ``h^[i]``, the own basis, the received
    bases, the cost cut and the MIG cut(s), in that row order.  Among the
    bases identifying the new point (the solver's, the old own one, the
    received ones) the agent keeps the smallest in a fixed global order, so
    agents sharing a point also end up sharing a basis.
    """
    if state.halted:
        return state
    cuts = generate_cuts(state, round)
    inbox = sorted(inbox, key=lambda m: m.sender_id)
    rows = [*state.fixed_constraint.rows, *state.basis.rows]
    for msg in inbox:
        if msg.basis.dim != len(state.z):
            raise ContractViolation(f"message from {msg.sender_id} has wrong dimension")
        rows.extend(msg.basis.rows)
    rows.extend(cuts)
    h_tmp = ConstraintSet(rows)
    res = lp_lex_solve(h_tmp, state.lp_cost, start=state.basis)
    if not res.optimal:
        raise ProtocolError(f"agent {state.agent_id}: local LP infeasible at round {round}")
    z = res.point
    best = res.basis
    rank = lambda b: (b.bit_size, b.order_key)
    for cand in (*alternative_bases(h_tmp, state.lp_cost, res), state.basis, *(m.basis for m in inbox)):
        if cand.point == z and rank(cand) < rank(best):
            best = cand
    unchanged = state.basis_unchanged_rounds + 1 if best.same_rows(state.basis) else 0
    halted = halt_threshold is not None and unchanged >= halt_threshold
    return replace(state, z=z, basis=best, basis_unchanged_rounds=unchanged, halted=halted,
                   last_round=round)


def halting_check(state: AgentState, threshold: int) -> bool:
    """True once the basis has been stable for ``threshold`` rounds (2*d_G+1 or 2*L*N+1)."""
    return state.basis_unchanged_rounds >= threshold


def halt_threshold_static(diameter: int) -> int:
    return 2 * diameter + 1


def halt_threshold_periodic(L: int, N: int) -> int:
    return 2 * L * N + 1


class Recovered(NamedTuple):
    z: tuple
    cost_bound: mpq
    provisional: bool


def recover_solution(state: AgentState) -> Recovered:
    """Strip ``rho_I`` and return ``(z, bound)``.

    For EPS the bound is ``eps * rho_I >= c^T z``; for INT it is ``c^T z``.
    ``provisional`` is set while integer coordinates are still fractional.
    """
    provisional = not state.integral
    if state.variant.is_eps:
        return Recovered(state.z[1:], state.variant.epsilon * state.z[0], provisional)
    return Recovered(state.z, dot(state.orig_cost, state.z), provisional)
