"""Slotted-time network simulator: digraph models, packet loss, the round scheduler and traces."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np
from gmpy2 import mpq

from . import agent as ag
from .lp import ConstraintSet
from .problems import MilpInstance


class GraphError(ValueError):
    pass


# ---------------------------------------------------------------------------
# graph models


class GraphModel:
    """A time-varying digraph on agents ``0 .. N-1``; edge ``(j, i)`` means j can send to i."""

    N: int
    static: bool = True

    def graph_at(self, t: int) -> nx.DiGraph:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


class StaticGraph(GraphModel):
    def __init__(self, graph: nx.DiGraph, label: str = "static"):
        self.graph = graph
        self.N = graph.number_of_nodes()
        self.label = label

    def graph_at(self, t: int) -> nx.DiGraph:
        return self.graph

    def describe(self) -> str:
        return self.label


class StaticCyclic(StaticGraph):
    """Directed ring ``i -> i+1 (mod N)``; diameter ``N - 1``."""

    def __init__(self, N: int):
        g = nx.DiGraph()
        g.add_nodes_from(range(N))
        if N > 1:
            g.add_edges_from((i, (i + 1) % N) for i in range(N))
        super().__init__(g, f"cyclic:{N}")


class Complete(StaticGraph):
    def __init__(self, N: int):
        super().__init__(nx.complete_graph(N, create_using=nx.DiGraph), f"complete:{N}")


class StaticErdosRenyi(StaticGraph):
    """Directed G(N, p) resampled (seed, seed+1, ...) until strongly connected with the required diameter.

    With ``edge_prob=None`` a probability is tuned so that the required
    diameter is likely: ``(N p)^diam ~ N`` is used as the starting guess and
    nudged after every failed batch of samples.
    """

    def __init__(self, N: int, edge_prob: float | None = None, seed: int = 0,
                 required_diameter: int | None = None, max_tries: int = 20000):
        p = edge_prob
        if p is None:
            if required_diameter is None:
                p = min(1.0, 2 * math.log(max(N, 2)) / N)
            else:
                p = min(1.0, 1.2 * N ** (1 / required_diameter) / N)
        s = seed
        tries = 0
        while True:
            g = nx.gnp_random_graph(N, p, seed=s, directed=True)
            tries += 1
            if nx.is_strongly_connected(g):
                dia = nx.diameter(g)
                if required_diameter is None or dia == required_diameter:
                    break
                if edge_prob is None and tries % 25 == 0:
                    p = min(1.0, p * (1.08 if dia > required_diameter else 0.93))
            elif edge_prob is None and tries % 25 == 0:
                p = min(1.0, p * 1.08)
            s += 1
            if tries >= max_tries:
                raise GraphError(f"no strongly connected G({N},{p:.3f}) with diameter {required_diameter}")
        self.edge_prob = p
        self.seed_used = s
        self.requested_seed = seed
        super().__init__(g, f"erdos:{N}:{p:.4f}:{required_diameter}")


class Proximity(StaticGraph):
    """Agents within ``radius`` of each other talk both ways."""

    def __init__(self, positions: Sequence[Sequence[float]], radius: float):
        pos = [tuple(map(float, p)) for p in positions]
        g = nx.DiGraph()
        g.add_nodes_from(range(len(pos)))
        for i in range(len(pos)):
            for j in range(len(pos)):
                if i != j and math.dist(pos[i], pos[j]) <= radius:
                    g.add_edge(i, j)
        self.positions = pos
        self.radius = radius
        super().__init__(g, f"proximity:{len(pos)}:{radius}")


class PeriodicUnion(GraphModel):
    """Cycles through ``graphs`` with period ``L = len(graphs)``: ``G_c(t) = graphs[t mod L]``."""

    static = False

    def __init__(self, graphs: Sequence[nx.DiGraph]):
        if not graphs:
            raise GraphError("need at least one graph")
        self.graphs = list(graphs)
        self.N = self.graphs[0].number_of_nodes()
        if any(g.number_of_nodes() != self.N for g in self.graphs):
            raise GraphError("all graphs must share the node set")

    @property
    def L(self) -> int:
        return len(self.graphs)

    def graph_at(self, t: int) -> nx.DiGraph:
        return self.graphs[t % self.L]

    def describe(self) -> str:
        return f"periodic:{self.N}:{self.L}"


def neighbors_in(model: GraphModel, i: int, t: int) -> set[int]:
    g = model.graph_at(t)
    if i not in g:
        raise GraphError(f"unknown agent {i}")
    return set(g.predecessors(i))


def diameter(model: GraphModel) -> int:
    """Directed diameter of a static model (all-pairs BFS)."""
    if not model.static:
        raise GraphError("diameter is defined for static models only")
    g = model.graph_at(0)
    if g.number_of_nodes() == 1:
        return 0
    if not nx.is_strongly_connected(g):
        raise GraphError("graph is not strongly connected")
    return nx.diameter(g)


def check_jointly_strongly_connected(model: GraphModel, window: int) -> bool:
    """Every union of ``window`` consecutive slots (starting anywhere in one period) is strongly connected."""
    period = model.L if isinstance(model, PeriodicUnion) else 1
    for s in range(period):
        u = nx.DiGraph()
        u.add_nodes_from(range(model.N))
        for t in range(s, s + window):
            u.add_edges_from(model.graph_at(t).edges)
        if not nx.is_strongly_connected(u):
            return False
    return True


def halt_threshold_for(model: GraphModel) -> int:
    """``2 d_G + 1`` for static digraphs, ``2 L N + 1`` for periodic ones."""
    if model.static:
        return ag.halt_threshold_static(diameter(model))
    return ag.halt_threshold_periodic(model.L, model.N)


# ---------------------------------------------------------------------------
# packet loss


class LossModel:
    """Independent per-(edge, round) drops with probability ``p``.

    Each edge owns its own RNG stream seeded from ``(seed, j, i)``, so the
    drop pattern on one edge never depends on the others.
    """

    def __init__(self, p: float = 0.0, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"loss probability must lie in [0, 1], got {p}")
        self.p = float(p)
        self.seed = int(seed)
        self._streams: dict = {}

    def lost(self, j: int, i: int) -> bool:
        if self.p == 0.0:
            return False
        rng = self._streams.get((j, i))
        if rng is None:
            rng = self._streams[(j, i)] = np.random.default_rng([self.seed, j, i])
        return rng.random() < self.p


# ---------------------------------------------------------------------------
# traces


class RunStatus(Enum):
    CONVERGED = "converged"
    NO_CONSENSUS = "no-consensus"
    NOT_CONVERGED = "not-converged"


@dataclass
class RoundRecord:
    round: int
    costs: tuple
    points: tuple
    basis_keys: tuple          # frozenset of canonical row keys per agent
    basis_ids: tuple
    halted: tuple
    delivered: tuple = ()
    lost: tuple = ()


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: RunStatus = RunStatus.NOT_CONVERGED
    final_states: list = field(default_factory=list)
    halt_rounds: dict = field(default_factory=dict)   # agent -> round at which it halted
    info: dict = field(default_factory=dict)

    @property
    def rounds_executed(self) -> int:
        return len(self.records) - 1

    @property
    def N(self) -> int:
        return len(self.records[0].costs)

    def costs_of(self, i: int) -> list:
        return [r.costs[i] for r in self.records]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "agent", "cost_num", "cost_den", "halted"])
            for r in self.records:
                for i, (c, h) in enumerate(zip(r.costs, r.halted)):
                    w.writerow([r.round, i, c.numerator, c.denominator, int(h)])

    def summary(self) -> dict:
        cr = consensus_round(self)
        return {
            "status": self.status.value,
            "consensus_round": cr,
            "rounds_executed": self.rounds_executed,
        }


def _snapshot(t: int, states: Sequence[ag.AgentState], delivered=(), lost=()) -> RoundRecord:
    return RoundRecord(
        t,
        tuple(s.cost for s in states),
        tuple(s.z for s in states),
        tuple(s.basis.keyset for s in states),
        tuple(tuple(h.id for h in s.basis.rows) for s in states),
        tuple(s.halted for s in states),
        tuple(delivered),
        tuple(lost),
    )


def _agree(rec: RoundRecord) -> bool:
    return len(set(rec.points)) == 1 and len(set(rec.costs)) == 1


def at_fixed_point(states: Sequence[ag.AgentState]) -> bool:
    """All agents share point and basis and the point is integral: no further change is possible."""
    s0 = states[0]
    return s0.integral and all(s.z == s0.z and s.basis.same_rows(s0.basis) for s in states)


def consensus_round(trace: RunTrace) -> int | None:
    """First round from which every agent holds the final common cost, point and basis.

    For a single agent this is the round at which its own state stops changing.
    """
    if trace.status is not RunStatus.CONVERGED or not trace.records:
        return None
    last = trace.records[-1]
    if not _agree(last) or len(set(last.basis_keys)) != 1:
        return None
    target = (last.costs[0], last.points[0], last.basis_keys[0])
    first = None
    for rec in reversed(trace.records):
        if all((c, p, k) == target for c, p, k in zip(rec.costs, rec.points, rec.basis_keys)):
            first = rec.round
        else:
            break
    return first


# ---------------------------------------------------------------------------
# the scheduler


def init_agents(
    instance: MilpInstance,
    parts: Sequence[ConstraintSet],
    variant: ag.AlgoVariant,
    multi_cuts: bool = False,
) -> list[ag.AgentState]:
    epi = ag.epigraph_transform(instance, variant.epsilon) if variant.is_eps else None
    return [
        ag.init(list(part), instance.M, instance.c, variant, instance.d_Z, i, multi_cuts, epi)
        for i, part in enumerate(parts)
    ]


def run(
    instance: MilpInstance,
    parts: Sequence[ConstraintSet],
    model: GraphModel,
    loss: LossModel | None = None,
    variant: ag.AlgoVariant = ag.INT,
    max_rounds: int = 5000,
    halt_threshold: int | None = None,
    multi_cuts: bool = False,
    stop_at_fixed_point: bool = True,
    states: list[ag.AgentState] | None = None,
) -> RunTrace:
    """Synchronous rounds of the distributed algorithm.

    In round ``t`` every agent (halted ones included, with their frozen
    basis) sends its basis along the out-edges of ``G_c(t)``; each delivery
    is dropped independently with the loss probability; then every
    non-halted agent steps on what arrived.  The run ends when all agents
    have halted (``halt_threshold`` given), when the network sits at a
    global fixed point (``stop_at_fixed_point``), or after ``max_rounds``.
    """
    if model.N != len(parts):
        raise GraphError(f"graph has {model.N} nodes but there are {len(parts)} parts")
    loss = loss or LossModel(0.0)
    if states is None:
        states = init_agents(instance, parts, variant, multi_cuts)
    trace = RunTrace()
    trace.records.append(_snapshot(0, states))
    status = None
    for t in range(1, max_rounds + 1):
        g = model.graph_at(t - 1)
        inboxes: list[list[ag.BasisMessage]] = [[] for _ in states]
        delivered, lost = [], []
        msgs = [s.message() for s in states]
        for j, i in sorted(g.edges):
            if loss.lost(j, i):
                lost.append((j, i))
            else:
                delivered.append((j, i))
                inboxes[i].append(msgs[j])
        new_states = []
        for s, inbox in zip(states, inboxes):
            ns = ag.step(s, inbox, t, halt_threshold)
            if ns.halted and not s.halted:
                trace.halt_rounds[s.agent_id] = t
            new_states.append(ns)
        states = new_states
        trace.records.append(_snapshot(t, states, delivered, lost))
        if halt_threshold is not None and all(s.halted for s in states):
            status = RunStatus.CONVERGED if at_fixed_point(states) else RunStatus.NO_CONSENSUS
            break
        if stop_at_fixed_point and at_fixed_point(states):
            status = RunStatus.CONVERGED
            break
    if status is None:
        status = RunStatus.CONVERGED if at_fixed_point(states) else RunStatus.NOT_CONVERGED
    trace.status = status
    trace.final_states = states
    return trace


def write_summary(path, summary: dict) -> None:
    def enc(o):
        if isinstance(o, (type(mpq(0)), Path)):
            return str(o)
        raise TypeError(type(o))

    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True, default=enc) + "\n")
