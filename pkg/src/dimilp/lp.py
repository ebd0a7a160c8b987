"""Exact half-space algebra and a lexicographic LP solver.

Every number handled here is a ``gmpy2.mpq``.  The solver minimizes the
lexicographic objective ``(c^T z, z_1, ..., z_d)`` over ``{z : A z <= b}``
with a dual simplex whose pivots are chosen by the lexicographic ratio
test.  Because the matrix ``[c | I]`` has full row rank the dual is
lexicographically nondegenerate, so every pivot strictly increases the
lexicographic objective and the method cannot cycle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)


class ContractViolation(ValueError):
    """A caller broke a documented precondition."""


class UnboundedError(ContractViolation):
    """The lexicographic objective is unbounded below on the constraint set."""


def to_q(x) -> mpq:
    """Convert ints, fractions, decimal strings or ``"p/q"`` tokens to ``mpq`` exactly."""
    if isinstance(x, type(ZERO)):
        return x
    if isinstance(x, (int, Fraction)):
        return mpq(x)
    if isinstance(x, str):
        return mpq(Fraction(x.strip()))
    if isinstance(x, float):
        return mpq(Fraction(x))
    # numpy scalars and other number-likes
    if hasattr(x, "item"):
        return to_q(x.item())
    return mpq(x)


def qvec(values: Iterable) -> tuple[mpq, ...]:
    return tuple(to_q(v) for v in values)


def dot(a: Sequence[mpq], z: Sequence[mpq]) -> mpq:
    s = ZERO
    for ai, zi in zip(a, z):
        if ai:
            s += ai * zi
    return s


def is_integral(x: mpq) -> bool:
    return x.denominator == 1


def floor_q(x: mpq) -> int:
    return math.floor(x)


def ceil_q(x: mpq) -> int:
    return math.ceil(x)


# ---------------------------------------------------------------------------
# lexicographic order


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def lex_compare(v: Sequence, w: Sequence) -> Ordering:
    """Compare two vectors in lexicographic order."""
    if len(v) != len(w):
        raise ContractViolation(f"length mismatch: {len(v)} vs {len(w)}")
    for vi, wi in zip(v, w):
        if vi > wi:
            return Ordering.GREATER
        if vi < wi:
            return Ordering.LESS
    return Ordering.EQUAL


# ---------------------------------------------------------------------------
# half-spaces


def _int_scale(values: Sequence) -> list[int]:
    """Positive multiple of ``values`` that is a primitive integer vector."""
    qs = [to_q(v) for v in values]
    den = 1
    for x in qs:
        d = int(x.denominator)
        if d != 1:
            den = den * d // math.gcd(den, d)
    ints = [int(x * den) for x in qs]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g > 1:
        ints = [v // g for v in ints]
    return ints


@dataclass(frozen=True)
class HalfSpace:
    """The half-space ``{z : a^T z <= b}`` in canonical scaling.

    Use :meth:`make` to build one; it rescales ``(a, b)`` by a positive
    factor into the unique primitive integer vector (integer entries with
    gcd one).  ``key`` identifies the geometric object and is what
    deduplication and basis comparison use; ``id`` records where the row
    came from (``"p12"``, ``"box3-"``, ``"mig/4/17/0"``, ...).
    """

    a: tuple
    b: int
    id: str = field(default="", compare=False)

    @classmethod
    def make(cls, a: Iterable, b, id: str = "") -> "HalfSpace":
        a = list(a)
        if not any(to_q(x) != 0 for x in a):
            raise ContractViolation(f"half-space {id!r} has a zero normal vector")
        ints = _int_scale([*a, b])
        return cls(tuple(ints[:-1]), ints[-1], id)

    @property
    def key(self) -> tuple:
        return (self.a, self.b)

    @property
    def dim(self) -> int:
        return len(self.a)

    @property
    def origin(self) -> str:
        return self.id.split("/", 1)[0].rstrip("0123456789+-")

    def contains(self, z: Sequence[mpq]) -> bool:
        return dot(self.a, z) <= self.b

    def value(self, z: Sequence[mpq]) -> mpq:
        return dot(self.a, z)

    def canonical(self) -> "HalfSpace":
        return HalfSpace.make(self.a, self.b, self.id)

    def with_id(self, id: str) -> "HalfSpace":
        return HalfSpace(self.a, self.b, id)

    def __repr__(self) -> str:
        terms = " ".join(f"{str(x)}" for x in self.a)
        return f"HalfSpace[{self.id}]({terms} <= {self.b})"


class ConstraintSet:
    """An ordered, deduplicated intersection of half-spaces.

    The first occurrence of a canonical row wins; later duplicates (same
    ``key``, any id) are dropped.  Row order never changes the feasible set,
    it only breaks ties inside the solver.
    """

    __slots__ = ("rows", "_keys")

    def __init__(self, rows: Iterable[HalfSpace] = ()):
        seen: set = set()
        kept = []
        for h in rows:
            if h.key in seen:
                continue
            seen.add(h.key)
            kept.append(h)
        if kept:
            d = kept[0].dim
            if any(h.dim != d for h in kept):
                raise ContractViolation("half-spaces of mixed dimension")
        self.rows: tuple[HalfSpace, ...] = tuple(kept)
        self._keys = frozenset(seen)

    @property
    def dim(self) -> int:
        if not self.rows:
            raise ContractViolation("empty constraint set has no dimension")
        return self.rows[0].dim

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __contains__(self, h: HalfSpace) -> bool:
        return h.key in self._keys

    def __or__(self, other: Iterable[HalfSpace]) -> "ConstraintSet":
        return ConstraintSet((*self.rows, *other))

    def __eq__(self, other) -> bool:
        return isinstance(other, ConstraintSet) and self._keys == other._keys

    def __hash__(self) -> int:
        return hash(self._keys)

    def __repr__(self) -> str:
        return f"ConstraintSet({len(self.rows)} rows)"


def contains(cset: Iterable[HalfSpace], z: Sequence) -> bool:
    """True iff ``z`` satisfies every row, decided in exact arithmetic."""
    z = qvec(z)
    for h in cset:
        if len(h.a) != len(z):
            raise ContractViolation("dimension mismatch between point and constraint")
        if dot(h.a, z) > h.b:
            return False
    return True


def bounding_box(M, dims: int, offset: int = 0, total: int | None = None) -> ConstraintSet:
    """Return the box ``-M <= z_l <= M`` for ``dims`` coordinates.

    ``offset``/``total`` place the box on coordinates ``offset .. offset+dims-1``
    of a ``total``-dimensional space (used for the epigraph extension).
    """
    M = to_q(M)
    if M <= 0:
        raise ContractViolation(f"bounding box needs M > 0, got {M}")
    total = dims + offset if total is None else total
    rows = []
    for l in range(offset, offset + dims):
        e = [ZERO] * total
        e[l] = ONE
        rows.append(HalfSpace.make(e, M, f"box{l}+"))
        e = [ZERO] * total
        e[l] = -ONE
        rows.append(HalfSpace.make(e, M, f"box{l}-"))
    return ConstraintSet(rows)


# ---------------------------------------------------------------------------
# small dense exact linear algebra


def solve_square(A: Sequence[Sequence[mpq]], b: Sequence[mpq]) -> list[mpq]:
    """Solve ``A x = b`` exactly; raises ContractViolation if singular."""
    n = len(A)
    M = [list(row) + [bi] for row, bi in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ContractViolation("singular system")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / p
                Mr, Mc = M[r], M[col]
                for k in range(col, n + 1):
                    if Mc[k]:
                        Mr[k] -= f * Mc[k]
    return [M[i][n] / M[i][i] for i in range(n)]


def inverse(A: Sequence[Sequence[mpq]]) -> list[list[mpq]]:
    """Exact inverse by Gauss-Jordan elimination."""
    n = len(A)
    M = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ContractViolation("singular matrix")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        if p != 1:
            M[col] = [x / p for x in M[col]]
        Mc = M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], Mc)]
    return [row[n:] for row in M]


def rank(rows: Sequence[Sequence[mpq]]) -> int:
    M = [list(r) for r in rows]
    if not M:
        return 0
    ncol = len(M[0])
    rk = 0
    for col in range(ncol):
        piv = next((r for r in range(rk, len(M)) if M[r][col] != 0), None)
        if piv is None:
            continue
        M[rk], M[piv] = M[piv], M[rk]
        for r in range(rk + 1, len(M)):
            if M[r][col] != 0:
                f = M[r][col] / M[rk][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[rk])]
        rk += 1
    return rk


# ---------------------------------------------------------------------------
# bases


def _adjugate(A: Sequence[Sequence[int]], D: int) -> list[list[int]]:
    """Integer ``P`` with ``P[m] = -D * A^{-1}[:, m]`` for ``D = |det A|``."""
    inv = inverse([[mpq(x) for x in row] for row in A])
    n = len(A)
    return [[int(-inv[i][m] * D) for i in range(n)] for m in range(n)]


def _det(A: Sequence[Sequence[int]]) -> int:
    """Integer determinant by fraction-free (Bareiss) elimination."""
    M = [list(map(int, row)) for row in A]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            piv = next((r for r in range(k + 1, n) if M[r][k] != 0), None)
            if piv is None:
                return 0
            M[k], M[piv] = M[piv], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


class Basis:
    """``d`` half-spaces with a nonsingular normal matrix.

    ``rays[m]`` is the m-th column of ``-A_B^{-1}``: moving along it keeps
    every other basis row tight and opens row ``m``.  Internally the rays are
    kept fraction-free as ``adj[m] / det`` with integer ``adj`` and
    ``det = |det A_B| > 0``.
    """

    __slots__ = ("rows", "adj", "det", "__dict__")

    def __init__(self, rows: Sequence[HalfSpace], adj: Sequence[Sequence[int]] | None = None,
                 det: int | None = None):
        self.rows: tuple[HalfSpace, ...] = tuple(rows)
        d = len(self.rows)
        if d == 0 or any(h.dim != d for h in self.rows):
            raise ContractViolation("a basis needs exactly d rows in dimension d")
        if adj is None:
            det = abs(_det([h.a for h in self.rows]))
            if det == 0:
                raise ContractViolation("basis rows are linearly dependent")
            adj = _adjugate([h.a for h in self.rows], det)
        self.adj = tuple(tuple(r) for r in adj)
        self.det = det

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def A(self) -> list[tuple]:
        return [h.a for h in self.rows]

    @property
    def b(self) -> list[int]:
        return [h.b for h in self.rows]

    @cached_property
    def rays(self) -> tuple[tuple, ...]:
        D = self.det
        return tuple(tuple(mpq(x, D) for x in r) for r in self.adj)

    @cached_property
    def point_num(self) -> tuple[int, ...]:
        """Integer numerator of the vertex; the vertex is ``point_num / det``."""
        return _vertex_num(self.b, self.adj)

    @cached_property
    def point(self) -> tuple[mpq, ...]:
        # z = A_B^{-1} b_B = -sum_m b_m r^m
        D = self.det
        return tuple(mpq(x, D) for x in self.point_num)

    @cached_property
    def keyset(self) -> frozenset:
        return frozenset(h.key for h in self.rows)

    @cached_property
    def bit_size(self) -> int:
        """Total bit length of the integer row coefficients; a proxy for arithmetic cost."""
        return sum(abs(x).bit_length() for h in self.rows for x in (*h.a, h.b))

    @cached_property
    def order_key(self) -> tuple:
        """Agent-independent total order used to pick among equivalent bases."""
        return tuple(sorted(h.key for h in self.rows))

    def same_rows(self, other: "Basis | None") -> bool:
        return other is not None and self.keyset == other.keyset

    def is_lex_dual_feasible(self, c: Sequence) -> bool:
        """Every ray increases ``(c^T z, z_1, ..., z_d)`` lexicographically."""
        ci = _int_scale(c) if any(to_q(x) != 0 for x in c) else [0] * len(c)
        for r in self.adj:
            if not _lex_positive((_idot(ci, r), *r)):
                return False
        return True

    def __repr__(self) -> str:
        return f"Basis({[h.id for h in self.rows]})"


def _idot(a: Sequence[int], z: Sequence[int]) -> int:
    s = 0
    for ai, zi in zip(a, z):
        if ai:
            s += ai * zi
    return s


def _vertex_num(b: Sequence[int], adj: Sequence[Sequence[int]]) -> tuple[int, ...]:
    d = len(adj)
    z = [0] * d
    for bm, r in zip(b, adj):
        if bm:
            for i in range(d):
                z[i] -= bm * r[i]
    return tuple(z)


def _lex_positive(v: Sequence[int]) -> bool:
    for x in v:
        if x:
            return x > 0
    return False


# ---------------------------------------------------------------------------
# the solver


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LexLpResult:
    status: LpStatus
    point: tuple | None = None
    basis: Basis | None = None
    cost: mpq | None = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _hadamard_radius(rows: Sequence[HalfSpace]) -> mpq:
    """A bound strictly exceeding every coordinate of every vertex of the row arrangement.

    After clearing denominators each vertex coordinate is a ratio of integer
    determinants with nonzero denominator, so Hadamard's inequality bounds it
    by the product of the d largest row norms of ``[a | b]``.
    """
    d = rows[0].dim
    norms = []
    for h in rows:
        den = 1
        for x in (*h.a, h.b):
            den = den * x.denominator // math.gcd(den, x.denominator)
        sq = sum(int(x * den) ** 2 for x in (*h.a, h.b))
        norms.append(math.isqrt(sq) + 1)
    norms.sort(reverse=True)
    bound = 1
    for n in norms[:d]:
        bound *= n
    return mpq(bound + 1)


def _box_start(rows: Sequence[HalfSpace], c: Sequence[mpq]) -> list[HalfSpace] | None:
    d = len(c)
    lower: dict[int, HalfSpace] = {}
    upper: dict[int, HalfSpace] = {}
    for h in rows:
        nz = [i for i, x in enumerate(h.a) if x != 0]
        if len(nz) != 1:
            continue
        l = nz[0]
        side = lower if h.a[l] < 0 else upper
        cur = side.get(l)
        if cur is None or h.b < cur.b:
            side[l] = h
    start = []
    for l in range(d):
        # c_l > 0 -> sit on the lower bound; c_l < 0 -> upper; c_l == 0 -> lower (lex-min z_l)
        pick = upper.get(l) if c[l] < 0 else lower.get(l)
        if pick is None:
            return None
        start.append(pick)
    return start


def lp_lex_solve(
    constraints: ConstraintSet | Sequence[HalfSpace],
    c: Sequence,
    start: Basis | None = None,
) -> LexLpResult:
    """Return the lex-optimal vertex of ``min c^T z`` over the constraints.

    The point minimizes ``c^T z`` and, among minimizers, is lexicographically
    smallest.  The returned basis consists of ``d`` tight rows from
    ``constraints`` whose cone has the same lex-optimum.

    ``start`` may name a basis (rows present in ``constraints``) that is
    already lexicographically dual feasible for ``c``; it is used as the
    warm start.  Otherwise the solver starts from a corner of the box rows
    when they exist, or from an artificial box guaranteed to contain every
    vertex of the arrangement.

    Raises:
        UnboundedError: the lexicographic minimum does not exist.
    """
    rows = constraints.rows if isinstance(constraints, ConstraintSet) else tuple(constraints)
    if not rows:
        raise ContractViolation("lp_lex_solve needs at least one constraint")
    keys = constraints._keys if isinstance(constraints, ConstraintSet) else {h.key for h in rows}
    c = qvec(c)
    d = len(c)
    if rows[0].dim != d:
        raise ContractViolation("cost vector and constraints differ in dimension")

    basis_rows: list[HalfSpace] | None = None
    P: list[list[int]] | None = None
    D = 1
    if (
        start is not None
        and start.dim == d
        and all(h.key in keys for h in start.rows)
        and start.is_lex_dual_feasible(c)
    ):
        basis_rows = list(start.rows)
        P, D = [list(r) for r in start.adj], start.det
    if basis_rows is None:
        basis_rows = _box_start(rows, c)
    if basis_rows is None:
        K = _hadamard_radius(rows)
        basis_rows = []
        for l in range(d):
            e = [0] * d
            e[l] = 1 if c[l] < 0 else -1
            basis_rows.append(HalfSpace(tuple(e), int(K), f"art{l}"))
    if P is None:
        start_basis = Basis(basis_rows)
        P, D = [list(r) for r in start_basis.adj], start_basis.det

    # Fraction-free dual simplex: the rays are P[m] / D with D = |det A_B|.
    # Replacing basis row j by a_k makes W_j = -(a_k . P[j]) the new
    # determinant, and the updated numerators are exact integer quotients.
    ci = _int_scale(c) if any(x != 0 for x in c) else [0] * d
    A = [h.a for h in rows]
    bvec = [h.b for h in rows]
    b_B = [h.b for h in basis_rows]
    zn = _vertex_num(b_B, P)
    cp = [_idot(ci, r) for r in P]
    pivots = 0
    while True:
        k = None
        for idx in range(len(A)):
            if _idot(A[idx], zn) > bvec[idx] * D:
                k = idx
                break
        if k is None:
            break
        a_k = A[k]
        W = [-_idot(a_k, r) for r in P]
        best = None
        for j in range(d):
            Wj = W[j]
            if Wj <= 0:
                continue
            if best is None or _ratio_less(cp[j], P[j], Wj, cp[best], P[best], W[best]):
                best = j
        if best is None:
            return LexLpResult(LpStatus.INFEASIBLE, pivots=pivots)
        j = best
        Wj = W[j]
        Pj = P[j]
        cpj = cp[j]
        for m in range(d):
            if m == j:
                continue
            Wm = W[m]
            Pm = P[m]
            if Wm:
                P[m] = [(x * Wj - Wm * y) // D for x, y in zip(Pm, Pj)]
                cp[m] = (cp[m] * Wj - Wm * cpj) // D
            else:
                P[m] = [(x * Wj) // D for x in Pm]
                cp[m] = (cp[m] * Wj) // D
        D = Wj
        basis_rows[j] = rows[k]
        b_B[j] = bvec[k]
        zn = _vertex_num(b_B, P)
        pivots += 1

    if any(h.origin == "art" for h in basis_rows):
        raise UnboundedError("lexicographic objective unbounded on the constraint set")
    basis = Basis(basis_rows, P, D)
    z = basis.point
    return LexLpResult(LpStatus.OPTIMAL, z, basis, dot(c, z), pivots)


def _ratio_less(cx: int, x: Sequence[int], wx: int, cy: int, y: Sequence[int], wy: int) -> bool:
    """``(cx, x) / wx  <_lex  (cy, y) / wy`` for positive ``wx``, ``wy``."""
    l, r = cx * wy, cy * wx
    if l != r:
        return l < r
    for xi, yi in zip(x, y):
        l, r = xi * wy, yi * wx
        if l != r:
            return l < r
    return False


def alternative_bases(constraints: ConstraintSet | Sequence[HalfSpace], c: Sequence, result: LexLpResult,
                      limit: int = 256) -> list[Basis]:
    """Every optimal basis at a primal-degenerate lex-optimum.

    A set of ``d`` independent rows tight at the lex-optimal point is an
    optimal basis iff it is lexicographically dual feasible.  When more than
    ``d`` rows are tight the choice is not unique; this enumerates the
    choices (or returns just the solver's basis if there are more than
    ``limit`` subsets to try).
    """
    if not result.optimal:
        raise ContractViolation("alternative bases need an optimal result")
    rows = constraints.rows if isinstance(constraints, ConstraintSet) else tuple(constraints)
    basis = result.basis
    d = basis.dim
    D = basis.det
    zn = basis.point_num
    active = [h for h in rows if _idot(h.a, zn) == h.b * D]
    if len(active) <= d or math.comb(len(active), d) > limit:
        return [basis]
    out = []
    for combo in itertools.combinations(active, d):
        det = abs(_det([h.a for h in combo]))
        if det == 0:
            continue
        cand = Basis(combo, _adjugate([h.a for h in combo], det), det)
        if cand.is_lex_dual_feasible(c):
            out.append(cand)
    return out
