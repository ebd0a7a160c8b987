"""Mixed-integer Gomory (intersection) cuts and cost-based cuts."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from gmpy2 import mpq

from .lp import ZERO, Basis, ContractViolation, HalfSpace, ceil_q, dot, is_integral, qvec, to_q


class CutKind(Enum):
    MIG = "mig"
    COST = "cost"


@dataclass(frozen=True)
class SplitDisjunction:
    """``{pi^T x <= pi0} U {pi^T x >= pi0 + 1}`` with integer ``pi``, ``pi0``."""

    pi: tuple
    pi0: int

    @classmethod
    def unit(cls, ell: int, dim: int, pi0: int) -> "SplitDisjunction":
        pi = [0] * dim
        pi[ell] = 1
        return cls(tuple(pi), int(pi0))

    def contains(self, z: Sequence) -> bool:
        v = dot(qvec(self.pi), qvec(z[: len(self.pi)]))
        return v <= self.pi0 or v >= self.pi0 + 1


@dataclass(frozen=True)
class Cut:
    halfspace: HalfSpace
    kind: CutKind
    born_round: int = 0
    component: int | None = None


def _check_identifies(z: Sequence[mpq], basis: Basis) -> None:
    if len(z) != basis.dim:
        raise ContractViolation("point and basis differ in dimension")
    if tuple(z) != basis.point:
        raise ContractViolation("basis does not identify the given point")


def intersection_cut(z: Sequence, basis: Basis, ell: int) -> HalfSpace:
    """Intersection cut for the split ``D(e_ell, floor(z_ell))`` and the cone of ``basis``.

    With ``r^m`` the m-th column of ``-A_B^{-1}``, the ray meets one of the
    two split hyperplanes at step ``lambda_m``; rays parallel to them get
    ``Lambda_m = 0``.  The cut is ``(Lambda^T A_B) z <= Lambda^T b_B - 1``.

    Computed fraction-free: with ``z_ell = n / D`` both split distances are
    ``delta = (floor * D - n) / D`` and ``delta + 1``; every ``Lambda_m`` is
    scaled by ``S = |delta_lo * delta_hi|`` (times ``D^2``) so the cut comes
    out with integer coefficients.
    """
    z = qvec(z)
    if is_integral(z[ell]):
        raise ContractViolation(f"component {ell} is already integral")
    D = basis.det
    n = basis.point_num[ell]
    lo = n // D
    d_lo = lo * D - n           # < 0
    d_hi = d_lo + D             # > 0
    S = -d_lo * d_hi
    lam = []
    for r in basis.adj:
        s = r[ell]
        if s < 0:
            lam.append(-s * d_hi)
        elif s > 0:
            lam.append(-s * d_lo)
        else:
            lam.append(0)
    d = basis.dim
    alpha = [0] * d
    beta = -S
    for L, h in zip(lam, basis.rows):
        if L:
            for i, x in enumerate(h.a):
                if x:
                    alpha[i] += L * x
            beta += L * h.b
    return HalfSpace.make(alpha, beta)


def fractional_components(z: Sequence, d_Z: int) -> list[int]:
    return [k for k in range(d_Z) if not is_integral(to_q(z[k]))]


def mig_oracle(z: Sequence, basis: Basis, d_Z: int, tag: str = "mig", round: int = 0) -> Cut | None:
    """MIG cut on the first fractional integer-constrained component, or ``None``."""
    _check_identifies(qvec(z), basis)
    if d_Z > basis.dim:
        raise ContractViolation("d_Z exceeds the dimension")
    frac = fractional_components(z, d_Z)
    if not frac:
        return None
    k = frac[0]
    h = intersection_cut(z, basis, k)
    return Cut(h.with_id(f"{tag}/{k}"), CutKind.MIG, round, k)


def multi_mig(z: Sequence, basis: Basis, d_Z: int, tag: str = "mig", round: int = 0) -> list[Cut]:
    """One intersection cut per fractional integer-constrained component."""
    _check_identifies(qvec(z), basis)
    if d_Z > basis.dim:
        raise ContractViolation("d_Z exceeds the dimension")
    out = []
    for k in fractional_components(z, d_Z):
        h = intersection_cut(z, basis, k)
        out.append(Cut(h.with_id(f"{tag}/{k}"), CutKind.MIG, round, k))
    return out


def int_cost_cut(c: Sequence, z: Sequence, tag: str = "cost", round: int = 0) -> Cut:
    """``c^T z' >= ceil(c^T z)`` written as ``-c^T z' <= -ceil(c^T z)``."""
    c = qvec(c)
    sigma = ceil_q(dot(c, qvec(z)))
    h = HalfSpace.make([-x for x in c], -sigma, tag)
    return Cut(h, CutKind.COST, round)


def eps_cost_cut(rho_value, dim: int, tag: str = "cost", round: int = 0) -> Cut:
    """``rho_I >= ceil(rho_value)`` in the extended ``(rho_I, z)`` space."""
    sigma = ceil_q(to_q(rho_value))
    a = [ZERO] * dim
    a[0] = mpq(-1)
    return Cut(HalfSpace.make(a, -sigma, tag), CutKind.COST, round)
