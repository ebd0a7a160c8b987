"""Experiment families at desk scale: scaling, epsilon and packet-loss sweeps.

Each family is a generator of per-run dictionaries; :func:`aggregate`
turns a column of them into box-plot statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import agent as ag
from . import netsim
from .oracle import EnumerationTooLarge, brute_force_milp
from .problems import (
    AssignmentSpec,
    MilpInstance,
    assignment_row_points,
    build_assignment_milp,
    gen_random_milp,
    partition,
    proximity_assignment,
    random_assignment_scenario,
)

# instance families (d, d_Z, n, M)
SCALING_FAMILY = (3, 3, 32, 10)
EPS_FAMILY = (6, 3, 24, 10)
EPS_SWEEP_SEED = 7
LOSS_SCENARIO = dict(seed=6, n_targets=7, n_vehicles=4, n_paths=10)

CYCLIC_SIZES = (4, 8, 16, 32)
ER_SIZES = (8, 16, 32)
ER_DIAMETER = 4
EPS_VALUES = ("1", "0.5", "0.1", "0.05")
LOSS_VALUES = (0.0, 0.1, 0.3, 0.5, 0.7)


# ---------------------------------------------------------------------------
# statistics


def aggregate(values: Sequence[float]) -> dict:
    """Quartiles, extremes and outliers beyond 1.5 IQR from the quartiles."""
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return {"count": 0}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    hi, lo = q3 + 1.5 * iqr, q1 - 1.5 * iqr
    return {
        "count": int(v.size),
        "min": float(v.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(v.max()),
        "outliers": [float(x) for x in v if x > hi or x < lo],
    }


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    from scipy.stats import spearmanr

    return float(spearmanr(x, y).statistic)


# ---------------------------------------------------------------------------
# assignment setup


def grid_positions(N: int, lo: Sequence[float], hi: Sequence[float]) -> tuple[list[tuple], float]:
    """``N`` agents on a near-square grid over the box ``[lo, hi]``, plus the grid spacing."""
    cols = math.ceil(math.sqrt(N))
    rows = math.ceil(N / cols)
    xs = np.linspace(lo[0], hi[0], cols) if cols > 1 else np.array([(lo[0] + hi[0]) / 2])
    ys = np.linspace(lo[1], hi[1], rows) if rows > 1 else np.array([(lo[1] + hi[1]) / 2])
    pts = [(float(x), float(y)) for y in ys for x in xs][:N]
    gaps = []
    if cols > 1:
        gaps.append(xs[1] - xs[0])
    if rows > 1:
        gaps.append(ys[1] - ys[0])
    return pts, float(max(gaps)) if gaps else 1.0


@dataclass
class AssignmentSetup:
    spec: AssignmentSpec
    instance: MilpInstance
    parts: list
    model: netsim.GraphModel
    positions: list
    radius: float
    data_radius: float


def assignment_setup(spec: AssignmentSpec, N: int = 9, radius: float | None = None,
                     data_radius: float | None = None, graph: str = "proximity") -> AssignmentSetup:
    """Place ``N`` agents on a grid over the scenario and wire rows and links by proximity.

    The communication radius defaults to 1.05 grid spacings (grid
    neighbours talk); the data radius defaults to the communication radius.
    With ``graph="cyclic"`` rows are dealt round-robin over a directed ring.
    """
    inst = build_assignment_milp(spec)
    pts = list(spec.target_pos.values()) + list(spec.vehicle_pos.values())
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    arr = np.asarray(pts, dtype=float)
    positions, spacing = grid_positions(N, arr.min(axis=0), arr.max(axis=0))
    radius = 1.05 * spacing if radius is None else float(radius)
    data_radius = radius if data_radius is None else float(data_radius)
    if graph == "cyclic":
        model = netsim.StaticCyclic(N)
        parts = partition(inst, N)
    elif graph == "proximity":
        model = netsim.Proximity(positions, radius)
        mapping = proximity_assignment(assignment_row_points(spec), positions, data_radius)
        parts = partition(inst, N, "proximity", mapping)
    else:
        raise ValueError(f"unknown graph {graph!r} for an assignment run")
    return AssignmentSetup(spec, inst, parts, model, positions, radius, data_radius)


def loss_scenario() -> AssignmentSpec:
    return random_assignment_scenario(**LOSS_SCENARIO)


# ---------------------------------------------------------------------------
# families


def _rounds(trace: netsim.RunTrace) -> int | None:
    return netsim.consensus_round(trace)


def scaling_cyclic(reps: int = 10, sizes: Sequence[int] = CYCLIC_SIZES,
                   family: tuple = SCALING_FAMILY, seed: int = 0) -> Iterator[dict]:
    """INT runs on directed rings of growing size, one random instance per repetition."""
    d, d_Z, n, M = family
    for N in sizes:
        for r in range(reps):
            inst = gen_random_milp(seed + r, d, d_Z, n, M=M, integer_cost=True)
            tr = netsim.run(inst, partition(inst, N), netsim.StaticCyclic(N))
            yield {"N": N, "rep": r, "seed": seed + r, "status": tr.status.value,
                   "rounds": _rounds(tr), "rounds_executed": tr.rounds_executed,
                   "final_cost": tr.final_states[0].cost}


def scaling_fixed_diameter(reps: int = 10, sizes: Sequence[int] = ER_SIZES, diameter: int = ER_DIAMETER,
                           family: tuple = SCALING_FAMILY, seed: int = 0) -> Iterator[dict]:
    """INT runs on random digraphs whose diameter is held fixed while ``N`` grows."""
    d, d_Z, n, M = family
    for N in sizes:
        for r in range(reps):
            inst = gen_random_milp(seed + r, d, d_Z, n, M=M, integer_cost=True)
            model = netsim.StaticErdosRenyi(N, seed=seed + r, required_diameter=diameter)
            tr = netsim.run(inst, partition(inst, N), model)
            yield {"N": N, "rep": r, "seed": seed + r, "status": tr.status.value,
                   "rounds": _rounds(tr), "rounds_executed": tr.rounds_executed,
                   "edge_prob": model.edge_prob, "final_cost": tr.final_states[0].cost}


def eps_sweep(reps: int = 1, eps_values: Sequence = EPS_VALUES, family: tuple = EPS_FAMILY,
              seed: int = EPS_SWEEP_SEED, N: int = 8) -> Iterator[dict]:
    """Epsilon runs on fixed instances; reports the final gap to the exact optimum."""
    d, d_Z, n, M = family
    for r in range(reps):
        inst = gen_random_milp(seed + r, d, d_Z, n, M=M)
        J = brute_force_milp(inst).cost
        for e in eps_values:
            v = ag.EPS(e)
            tr = netsim.run(inst, partition(inst, N), netsim.StaticCyclic(N), variant=v)
            z = ag.recover_solution(tr.final_states[0]).z
            yield {"eps": str(v.epsilon), "rep": r, "seed": seed + r, "status": tr.status.value,
                   "rounds": _rounds(tr), "rounds_executed": tr.rounds_executed,
                   "final_cost": inst.cost(z), "oracle_cost": J, "gap": inst.cost(z) - J}


def loss_sweep(reps: int = 10, p_values: Sequence[float] = LOSS_VALUES, spec: AssignmentSpec | None = None,
               N: int = 9, variant: ag.AlgoVariant | None = None, max_rounds: int = 5000,
               seed: int = 0) -> Iterator[dict]:
    """Assignment runs under i.i.d. packet loss; each repetition reseeds the loss streams."""
    setup = assignment_setup(spec or loss_scenario(), N)
    variant = variant or ag.EPS("0.1")
    try:
        J = brute_force_milp(setup.instance).cost
    except EnumerationTooLarge:
        J = None
    for p in p_values:
        for r in range(reps):
            tr = netsim.run(setup.instance, setup.parts, setup.model, loss=netsim.LossModel(p, seed + r),
                            variant=variant, multi_cuts=True, max_rounds=max_rounds)
            rec = ag.recover_solution(tr.final_states[0])
            yield {"p": p, "rep": r, "seed": seed + r, "status": tr.status.value,
                   "rounds": _rounds(tr), "rounds_executed": tr.rounds_executed,
                   "final_cost": setup.instance.cost(rec.z), "oracle_cost": J}


EXPERIMENTS = {
    "scaling-cyclic": ("N", scaling_cyclic),
    "scaling-fixed-diam": ("N", scaling_fixed_diameter),
    "eps-sweep": ("eps", eps_sweep),
    "loss-sweep": ("p", loss_sweep),
}


def summarize(rows: Sequence[dict], key: str, column: str = "rounds") -> list[dict]:
    """Group ``rows`` by ``key`` (first-seen order) and aggregate ``column``."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(row[key], []).append(row[column])
    return [{key: k, **aggregate([None if v is None else float(v) for v in vals])} for k, vals in groups.items()]
