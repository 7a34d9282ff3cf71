"""Closed-form max-min fair degrees of freedom (MMF-DoF).

All values are exact :class:`fractions.Fraction` objects.  Group indices
are 0-based; ``L`` arguments are group *counts* (``1 <= L <= M``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .model import GroupLayout

__all__ = [
    "Regime",
    "DofReport",
    "n_l",
    "dof_designated",
    "dof_degraded",
    "m_d_star",
    "dof_rs",
    "dof_rs_ladder",
    "min_interfered_groups",
    "classify_regime",
    "dof_report",
]


class Regime(enum.Enum):
    INTERFERENCE_FREE = "interference-free"
    PARTIALLY_OVERLOADED = "partially-overloaded"
    FULLY_OVERLOADED = "fully-overloaded"


@dataclass(frozen=True)
class DofReport:
    designated: Fraction
    degraded: Fraction
    rs: Fraction
    m_d_star: int
    regime: Regime
    n_groups: int

    @property
    def m_c_star(self) -> int:
        """Groups left to the common stream in the DoF-optimal partition."""
        return self.n_groups - self.m_d_star


def n_l(layout: GroupLayout, L: int) -> int:
    """Antennas needed to serve the ``L`` smallest groups interference-free.

    ``N_L = 1 + G_2 + ... + G_L`` in 1-based group numbering, so ``N_1 = 1``.
    """
    if not 1 <= L <= layout.n_groups:
        raise ValueError(f"L must be in 1..{layout.n_groups}, got {L}")
    return 1 + sum(layout.group_sizes[1:L])


def dof_designated(layout: GroupLayout) -> Fraction:
    """MMF-DoF of classical designated beamforming."""
    M, N = layout.n_groups, layout.n_antennas
    if N >= n_l(layout, M):
        return Fraction(1)
    # here M >= 2 since N >= 1 = N_1
    if N >= n_l(layout, M - 1) + layout.group_sizes[0]:
        return Fraction(1, 2)
    return Fraction(0)


def dof_degraded(layout: GroupLayout) -> Fraction:
    """MMF-DoF of degraded beamforming: one DoF split over ``M`` groups."""
    return Fraction(1, layout.n_groups)


def m_d_star(layout: GroupLayout) -> int:
    """Largest number of groups servable interference-free, rest silenced."""
    M, N = layout.n_groups, layout.n_antennas
    if N >= n_l(layout, M):
        return M
    for L in range(1, M):
        if n_l(layout, L) <= N < n_l(layout, L + 1):
            return L
    raise AssertionError("unreachable: N >= 1 = N_1")


def dof_rs(layout: GroupLayout) -> Fraction:
    """MMF-DoF of rate-splitting beamforming, ``1 / (1 + M - M_D*)``."""
    return Fraction(1, 1 + layout.n_groups - m_d_star(layout))


def dof_rs_ladder(layout: GroupLayout) -> Fraction:
    """Rate-splitting MMF-DoF read off the antenna ladder.

    Walks down from ``N >= N_M`` (DoF 1) through ``N_{M-1} <= N < N_M``
    (DoF 1/2) to ``1 <= N < N_2`` (DoF 1/M).  Independent of
    :func:`m_d_star`; used to cross-check :func:`dof_rs`.
    """
    M, N = layout.n_groups, layout.n_antennas
    thresholds = [n_l(layout, L) for L in range(1, M + 1)]
    if N >= thresholds[-1]:
        return Fraction(1)
    for step in range(1, M):
        lower = thresholds[M - 1 - step]
        upper = thresholds[M - step]
        if lower <= N < upper:
            return Fraction(1, step + 1)
    raise AssertionError("unreachable: N >= 1 = N_1")


def min_interfered_groups(layout: GroupLayout, m: int) -> int:
    """Guaranteed number of groups beam ``m`` interferes with.

    Beam 0 (smallest group) interferes with at least ``M_c* = M - M_D*``
    groups under any designated design; every other beam with at least
    ``M_c* - 1`` (floored at zero).
    """
    if not 0 <= m < layout.n_groups:
        raise ValueError(f"group index must be in 0..{layout.n_groups - 1}, got {m}")
    m_c = layout.n_groups - m_d_star(layout)
    return m_c if m == 0 else max(m_c - 1, 0)


_REGIMES = {
    Fraction(1): Regime.INTERFERENCE_FREE,
    Fraction(1, 2): Regime.PARTIALLY_OVERLOADED,
    Fraction(0): Regime.FULLY_OVERLOADED,
}


def classify_regime(layout: GroupLayout) -> Regime:
    return _REGIMES[dof_designated(layout)]


def dof_report(layout: GroupLayout) -> DofReport:
    return DofReport(
        designated=dof_designated(layout),
        degraded=dof_degraded(layout),
        rs=dof_rs(layout),
        m_d_star=m_d_star(layout),
        regime=classify_regime(layout),
        n_groups=layout.n_groups,
    )
