"""Instance builders, constraint partitioning and the instance file format."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from gmpy2 import mpq

from .lp import ZERO, ONE, ConstraintSet, ContractViolation, HalfSpace, bounding_box, qvec, to_q

DEFAULT_M = 100
SNAP_DEN = 2**30


@dataclass
class MilpInstance:
    """``min c^T z  s.t.  a_i^T z <= b_i,  z in Z^{d_Z} x R^{d_R}``, intersected with ``H_M``.

    The first ``d_Z`` coordinates are the integer ones.
    """

    c: tuple
    rows: tuple
    d_Z: int
    M: mpq = mpq(DEFAULT_M)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = qvec(self.c)
        self.rows = tuple(self.rows)
        self.M = to_q(self.M)
        if not self.rows:
            raise ContractViolation("an instance needs at least one row")
        if any(h.dim != self.d for h in self.rows):
            raise ContractViolation("row dimension differs from the cost vector")
        if not 0 <= self.d_Z <= self.d:
            raise ContractViolation(f"d_Z={self.d_Z} outside [0, d={self.d}]")
        if self.M <= 0:
            raise ContractViolation("M must be positive")

    @property
    def d(self) -> int:
        return len(self.c)

    @property
    def d_R(self) -> int:
        return self.d - self.d_Z

    @property
    def n(self) -> int:
        return len(self.rows)

    def box(self) -> ConstraintSet:
        return bounding_box(self.M, self.d)

    def polyhedron(self) -> ConstraintSet:
        """All rows plus ``H_M``."""
        return ConstraintSet(self.rows) | self.box()

    def cost(self, z: Sequence) -> mpq:
        return sum((ci * zi for ci, zi in zip(self.c, qvec(z))), ZERO)

    def is_feasible(self, z: Sequence) -> bool:
        z = qvec(z)
        if len(z) != self.d:
            return False
        if any(x.denominator != 1 for x in z[: self.d_Z]):
            return False
        return all(h.contains(z) for h in self.polyhedron())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MilpInstance):
            return NotImplemented
        return (
            self.c == other.c
            and self.d_Z == other.d_Z
            and self.M == other.M
            and [h.key for h in self.rows] == [h.key for h in other.rows]
        )


def snap(x: float, den: int = SNAP_DEN) -> mpq:
    return mpq(round(float(x) * den), den)


def gen_random_milp(
    seed: int,
    d: int,
    d_Z: int,
    n: int,
    M=DEFAULT_M,
    integer_cost: bool = False,
) -> MilpInstance:
    """Random instance: ``a_i ~ N(0, I)``, ``b_i ~ U[0, 50]``, ``c = A^T c_hat`` with ``c_hat ~ U[0,1]^n``.

    Draws are made in double precision and snapped to multiples of 2^-30.
    With ``integer_cost`` the cost vector is rounded to the nearest integers
    so the optimal cost is integer-valued on pure-integer instances.
    """
    if not n >= d >= d_Z >= 0:
        raise ContractViolation(f"need n >= d >= d_Z >= 0, got n={n} d={d} d_Z={d_Z}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    b = rng.uniform(0.0, 50.0, n)
    c_hat = rng.uniform(0.0, 1.0, n)
    c = A.T @ c_hat
    rows = [HalfSpace.make([snap(x) for x in A[i]], snap(b[i]), f"p{i}") for i in range(n)]
    if integer_cost:
        cq = [mpq(int(np.rint(x))) for x in c]
    else:
        cq = [snap(x) for x in c]
    meta = {"generator": "random", "seed": int(seed), "integer_cost": bool(integer_cost)}
    return MilpInstance(tuple(cq), tuple(rows), d_Z, to_q(M), meta)


# ---------------------------------------------------------------------------
# multi-agent multi-task assignment


@dataclass
class AssignmentSpec:
    """Targets with required visit counts, vehicles, and candidate paths.

    ``paths[l]`` is a dict with keys ``vehicle``, ``time`` and ``targets``
    (target ids visited).  Optional geometry (``target_pos``,
    ``vehicle_pos``, per-path ``waypoints``) drives the proximity partition.
    """

    targets: list            # target ids
    weights: dict            # target id -> required visits w_theta
    vehicles: list           # vehicle ids
    paths: list              # list of dicts
    target_pos: dict = field(default_factory=dict)
    vehicle_pos: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, doc: dict | str | Path) -> "AssignmentSpec":
        if not isinstance(doc, dict):
            doc = json.loads(Path(doc).read_text())
        targets = [t["id"] for t in doc["targets"]]
        weights = {t["id"]: int(t.get("w", 1)) for t in doc["targets"]}
        tpos = {t["id"]: tuple(t["pos"]) for t in doc["targets"] if "pos" in t}
        vehicles, vpos = [], {}
        for v in doc["vehicles"]:
            if isinstance(v, dict):
                vehicles.append(v["id"])
                if "pos" in v:
                    vpos[v["id"]] = tuple(v["pos"])
            else:
                vehicles.append(v)
        return cls(targets, weights, vehicles, list(doc["paths"]), tpos, vpos)

    def to_json(self) -> dict:
        targets = []
        for t in self.targets:
            entry = {"id": t, "w": self.weights[t]}
            if t in self.target_pos:
                entry["pos"] = list(self.target_pos[t])
            targets.append(entry)
        vehicles = []
        for v in self.vehicles:
            vehicles.append({"id": v, "pos": list(self.vehicle_pos[v])} if v in self.vehicle_pos else {"id": v})
        return {"targets": targets, "vehicles": vehicles, "paths": self.paths}


class InfeasibleSpecError(ValueError):
    def __init__(self, target):
        super().__init__(f"target {target!r} is visited by fewer paths than its required count")
        self.target = target


def build_assignment_milp(spec: AssignmentSpec, M=None) -> MilpInstance:
    """Makespan assignment MILP over path-selection binaries ``x`` and makespan ``y``.

    Row families, in order: coverage ``-delta_theta^T x <= -w_theta``,
    vehicle ``delta_nu^T x <= 1``, completion ``tau_l x_l - y <= 0``, then the
    binary box ``0 <= x_l <= 1``.  Coordinates are ``(x_1..x_P, y)``.
    """
    P = len(spec.paths)
    if P == 0:
        raise ContractViolation("assignment spec has no paths")
    vset = set(spec.vehicles)
    for l, p in enumerate(spec.paths):
        if p["vehicle"] not in vset:
            raise ContractViolation(f"path {l} is owned by unknown vehicle {p['vehicle']!r}")
        if to_q(p["time"]) <= 0:
            raise ContractViolation(f"path {l} has non-positive completion time")
    for t in spec.targets:
        cover = sum(1 for p in spec.paths if t in p["targets"])
        if cover < spec.weights[t]:
            raise InfeasibleSpecError(t)
    d = P + 1
    rows = []
    for t in spec.targets:
        a = [-ONE if t in p["targets"] else ZERO for p in spec.paths] + [ZERO]
        rows.append(HalfSpace.make(a, -spec.weights[t], f"p{len(rows)}"))
    for v in spec.vehicles:
        a = [ONE if p["vehicle"] == v else ZERO for p in spec.paths] + [ZERO]
        if any(a):
            rows.append(HalfSpace.make(a, 1, f"p{len(rows)}"))
    for l, p in enumerate(spec.paths):
        a = [ZERO] * d
        a[l] = to_q(p["time"])
        a[-1] = -ONE
        rows.append(HalfSpace.make(a, 0, f"p{len(rows)}"))
    for l in range(P):
        a = [ZERO] * d
        a[l] = ONE
        rows.append(HalfSpace.make(a, 1, f"p{len(rows)}"))
        a = [ZERO] * d
        a[l] = -ONE
        rows.append(HalfSpace.make(a, 0, f"p{len(rows)}"))
    c = [ZERO] * P + [ONE]
    if M is None:
        tmax = max(to_q(p["time"]) for p in spec.paths)
        M = max(2, math.ceil(tmax) + 1)
    meta = {"generator": "assignment", "n_paths": P}
    return MilpInstance(tuple(c), tuple(rows), P, to_q(M), meta)


def random_assignment_scenario(
    seed: int,
    n_targets: int = 6,
    n_vehicles: int = 4,
    n_paths: int = 8,
    region: float = 40.0,
) -> AssignmentSpec:
    """A small planar scenario: vehicles, targets, and straight-line multi-target paths.

    The first ``min(n_paths, n_vehicles)`` paths split the targets among
    distinct vehicles, so a feasible plan always exists; the remaining paths
    are random alternatives visiting one to three targets.  Completion times
    are integer path lengths.
    """
    if n_targets < 1 or n_vehicles < 1 or n_paths < 1:
        raise ContractViolation("scenario needs at least one target, vehicle and path")
    rng = np.random.default_rng(seed)
    tpos = {t: tuple(np.round(rng.uniform(0, region, 2), 1)) for t in range(n_targets)}
    vpos = {v: tuple(np.round(rng.uniform(0, region, 2), 1)) for v in range(n_vehicles)}
    n_plan = min(n_paths, n_vehicles)
    order = [int(t) for t in rng.permutation(n_targets)]
    visits = [sorted(order[k::n_plan]) for k in range(n_plan)]
    for _ in range(n_plan, n_paths):
        k = int(rng.integers(1, min(3, n_targets) + 1))
        visits.append(sorted(int(t) for t in rng.choice(n_targets, size=k, replace=False)))
    paths = []
    for l, visit in enumerate(visits):
        v = l % n_vehicles if l < n_plan else int(rng.integers(n_vehicles))
        pts = [vpos[v], *(tpos[t] for t in visit)]
        length = sum(math.dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1))
        paths.append({
            "vehicle": v,
            "time": max(1, int(math.ceil(length))),
            "targets": visit,
            "waypoints": [list(map(float, p)) for p in pts],
        })
    return AssignmentSpec(list(range(n_targets)), {t: 1 for t in range(n_targets)},
                          list(range(n_vehicles)), paths, tpos, vpos)


def assignment_row_points(spec: AssignmentSpec) -> list[list[tuple]]:
    """For each MILP row (same order as :func:`build_assignment_milp`), the planar points it concerns."""
    out = []
    for t in spec.targets:
        pts = [spec.target_pos[t]] if t in spec.target_pos else []
        out.append(pts)
    for v in spec.vehicles:
        if any(p["vehicle"] == v for p in spec.paths):
            out.append([spec.vehicle_pos[v]] if v in spec.vehicle_pos else [])
    for p in spec.paths:
        out.append([tuple(w) for w in p.get("waypoints", [])])
    for p in spec.paths:
        pts = [tuple(w) for w in p.get("waypoints", [])]
        out.append(pts)
        out.append(pts)
    return out


def proximity_assignment(row_points: Sequence[Sequence], agent_pos: Sequence, radius: float) -> list[list[int]]:
    """Map each row to the agents within ``radius`` of any of its points (nearest agent as fallback)."""
    agent_pos = [tuple(p) for p in agent_pos]
    mapping = []
    for pts in row_points:
        if not pts:
            mapping.append([])
            continue
        near = [i for i, q in enumerate(agent_pos) if any(math.dist(q, p) <= radius for p in pts)]
        if not near:
            near = [min(range(len(agent_pos)), key=lambda i: min(math.dist(agent_pos[i], p) for p in pts))]
        mapping.append(near)
    return mapping


# ---------------------------------------------------------------------------
# partitioning


class PartitionError(ValueError):
    pass


def partition(instance: MilpInstance, N: int, policy: str = "round-robin",
              assignment: Sequence[Sequence[int]] | None = None) -> list[ConstraintSet]:
    """Distribute the instance rows among ``N`` agents.

    ``round-robin`` gives row ``i`` to agent ``i mod N``.  ``proximity`` takes
    ``assignment[i]``, the list of agents that know row ``i``; parts may
    overlap but every row must reach some agent.
    """
    if N < 1:
        raise PartitionError("need at least one agent")
    parts: list[list[HalfSpace]] = [[] for _ in range(N)]
    if policy == "round-robin":
        if N > instance.n:
            raise PartitionError(f"round-robin needs N <= n ({N} > {instance.n})")
        for i, h in enumerate(instance.rows):
            parts[i % N].append(h)
    elif policy == "proximity":
        if assignment is None or len(assignment) != instance.n:
            raise PartitionError("proximity policy needs one agent list per row")
        for i, (h, agents) in enumerate(zip(instance.rows, assignment)):
            if not agents:
                raise PartitionError(f"row {i} ({h.id}) is assigned to no agent")
            for a in agents:
                if not 0 <= a < N:
                    raise PartitionError(f"row {i} assigned to unknown agent {a}")
                parts[a].append(h)
    else:
        raise PartitionError(f"unknown partition policy {policy!r}")
    return [ConstraintSet(p) for p in parts]


# ---------------------------------------------------------------------------
# instance files


class InstanceParseError(ValueError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


MAGIC = "dimilp-instance 1"


def _fmt(x: mpq) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def write_instance(instance: MilpInstance, path) -> None:
    """Write the line-oriented text format (exact ``num/den`` tokens)."""
    lines = [MAGIC, f"d {instance.d}", f"dz {instance.d_Z}", f"n {instance.n}", f"M {_fmt(instance.M)}"]
    for k, v in sorted(instance.metadata.items()):
        if k == "M_defaulted":
            continue
        lines.append(f"meta {k} {json.dumps(v)}")
    lines.append("c " + " ".join(_fmt(x) for x in instance.c))
    for h in instance.rows:
        lines.append("row " + " ".join(_fmt(x) for x in (*h.a, h.b)))
    Path(path).write_text("\n".join(lines) + "\n")


def _tok(tok: str, line: int, col: int) -> mpq:
    try:
        return to_q(tok)
    except (ValueError, ZeroDivisionError):
        raise InstanceParseError(f"bad number {tok!r}", line, col) from None


def read_instance(path) -> MilpInstance:
    """Parse an instance file; a missing ``M`` defaults to 100 with a warning."""
    text = Path(path).read_text()
    header: dict = {}
    meta: dict = {}
    c = None
    rows = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.strip() == MAGIC:
            continue
        parts = line.split()
        cols = []
        pos = 0
        for p in parts:
            pos = line.index(p, pos)
            cols.append(pos + 1)
            pos += len(p)
        head = parts[0]
        if head in ("d", "dz", "n"):
            if len(parts) != 2 or not parts[1].lstrip("-").isdigit():
                raise InstanceParseError(f"expected '{head} <int>'", ln, cols[-1])
            header[head] = int(parts[1])
        elif head == "M":
            if len(parts) != 2:
                raise InstanceParseError("expected 'M <number>'", ln, 1)
            header["M"] = _tok(parts[1], ln, cols[1])
        elif head == "meta":
            if len(parts) < 3:
                raise InstanceParseError("expected 'meta <key> <json>'", ln, 1)
            raw_val = line[cols[2] - 1:]
            try:
                meta[parts[1]] = json.loads(raw_val)
            except json.JSONDecodeError:
                raise InstanceParseError("bad metadata value", ln, cols[2]) from None
        elif head == "c":
            c = [_tok(t, ln, col) for t, col in zip(parts[1:], cols[1:])]
        elif head == "row":
            vals = [_tok(t, ln, col) for t, col in zip(parts[1:], cols[1:])]
            if "d" in header and len(vals) != header["d"] + 1:
                raise InstanceParseError(f"row has {len(vals) - 1} coefficients, expected {header['d']}", ln, 1)
            try:
                rows.append(HalfSpace.make(vals[:-1], vals[-1], f"p{len(rows)}"))
            except ContractViolation as e:
                raise InstanceParseError(str(e), ln, 1) from None
        else:
            raise InstanceParseError(f"unknown record {head!r}", ln, 1)
    for k in ("d", "dz", "n"):
        if k not in header:
            raise InstanceParseError(f"missing header field {k!r}", 1, 1)
    if c is None:
        raise InstanceParseError("missing cost row", 1, 1)
    d, dz, n = header["d"], header["dz"], header["n"]
    if len(c) != d:
        raise InstanceParseError(f"cost row has {len(c)} entries, expected {d}", 1, 1)
    if dz > d or dz < 0:
        raise InstanceParseError(f"dz={dz} must lie in [0, d={d}]", 1, 1)
    if len(rows) != n:
        raise InstanceParseError(f"header says n={n} but found {len(rows)} rows", 1, 1)
    if "M" not in header:
        warnings.warn(f"{path}: no M given, using default {DEFAULT_M}", stacklevel=2)
        meta["M_defaulted"] = True
        header["M"] = mpq(DEFAULT_M)
    return MilpInstance(tuple(c), tuple(rows), dz, header["M"], meta)
