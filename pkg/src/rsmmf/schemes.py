"""Constructive beamforming schemes that attain the closed-form MMF-DoF.

Beam directions depend on the channel only; powers follow fixed scaling laws
in ``P``.  Sweeping ``P`` for a fixed channel therefore traces the high-SNR
rate slope that :mod:`rsmmf.dof` predicts, which
:func:`empirical_dof_slope` measures.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from . import dof
from .model import (
    ChannelSet,
    GroupLayout,
    RateReport,
    RsPrecoder,
    common_rates,
    rates_degraded_sic,
    rates_designated,
    rates_rs,
    sample_channel,
    snr_db_to_power,
)

__all__ = [
    "NULL_TOL",
    "InfeasibleSchemeError",
    "SchemeKind",
    "SchemeSpec",
    "SuperpositionBeams",
    "null_space_basis",
    "build_matched_filter",
    "build_zf_full",
    "build_zf_partial",
    "build_degraded_superposition",
    "build_single_stream",
    "build_rs_partitioned",
    "build_scheme",
    "scheme_dof",
    "evaluate_scheme",
    "empirical_dof_slope",
]

# singular values below NULL_TOL * s_max count as zero
NULL_TOL = 1e-10


class InfeasibleSchemeError(ValueError):
    """The antenna count is too small for the requested nulling design."""


class SchemeKind(enum.Enum):
    ZF_FULL = "zf_full"
    ZF_PARTIAL = "zf_partial"
    DEGRADED_SUPERPOSITION = "degraded_superposition"
    SINGLE_STREAM = "single_stream"
    RS_PARTITIONED = "rs_partitioned"


@dataclass(frozen=True)
class SchemeSpec:
    """A constructive scheme and its free parameters.

    ``alpha`` is the power-partition exponent of ``RS_PARTITIONED`` (None
    selects the DoF-optimal value); ``order`` is the decoding order of
    ``DEGRADED_SUPERPOSITION``.
    """

    kind: SchemeKind
    alpha: Optional[float] = None
    order: Optional[tuple[int, ...]] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.order is not None:
            order = tuple(int(o) for o in self.order)
            if sorted(order) != list(range(len(order))):
                raise ValueError(f"order must be a permutation, got {order}")
            object.__setattr__(self, "order", order)


@dataclass(frozen=True)
class SuperpositionBeams:
    """Degraded beams (column ``m`` for group ``m``) and their decoding order."""

    beams: np.ndarray
    order: tuple[int, ...]

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.beams) ** 2))


def null_space_basis(A: np.ndarray, tol: float = NULL_TOL) -> np.ndarray:
    """Orthonormal basis of ``null(A^H)``.

    Columns ``w`` satisfy ``A^H w = 0``: they are orthogonal to every column
    of the ``N x c`` matrix ``A``.  For generic ``A`` the basis has
    ``max(N - c, 0)`` columns.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("null_space_basis needs a non-empty 2-D matrix")
    if not tol > 0:
        raise ValueError("tol must be positive")
    return scipy.linalg.null_space(A.conj().T, rcond=tol)


def _steer(channel: ChannelSet, layout: GroupLayout, m: int, silent_users: np.ndarray) -> np.ndarray:
    """Unit beam for group ``m`` orthogonal to the channels of ``silent_users``.

    The group's summed channel is projected onto the null space; if that
    projection vanishes the first basis vector is used instead.
    """
    target = channel.H[:, layout.members(m)].sum(axis=1)
    if silent_users.size == 0:
        w = target
    else:
        basis = null_space_basis(channel.H[:, silent_users])
        if basis.shape[1] == 0:
            raise InfeasibleSchemeError(
                f"no spatial dimension left for group {m} after nulling "
                f"{silent_users.size} users with N={channel.n_antennas}"
            )
        w = basis @ (basis.conj().T @ target)
        if np.linalg.norm(w) <= 1e-12 * np.linalg.norm(target):
            w = basis[:, 0]
    return w / np.linalg.norm(w)


def _random_direction(channel: ChannelSet, rng: np.random.Generator) -> np.ndarray:
    K = channel.n_users
    z = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) / np.sqrt(2.0)
    w = channel.H @ z
    return w / np.linalg.norm(w)


def build_matched_filter(channel: ChannelSet, layout: GroupLayout, P: float) -> RsPrecoder:
    """Designated beams along each group's summed channel, equal power."""
    channel.check_layout(layout)
    empty = np.array([], dtype=int)
    W = np.column_stack([_steer(channel, layout, m, empty) for m in range(layout.n_groups)])
    return RsPrecoder.designated(W * np.sqrt(P / layout.n_groups))


def build_zf_full(channel: ChannelSet, layout: GroupLayout, P: float) -> RsPrecoder:
    """Zero-forcing: every beam nulled at all users of other groups.

    Requires ``N >= 1 + K - G_0``; each beam gets power ``P / M``.
    """
    channel.check_layout(layout)
    M = layout.n_groups
    needed = dof.n_l(layout, M)
    if layout.n_antennas < needed:
        raise InfeasibleSchemeError(
            f"full zero-forcing needs N >= {needed}, have N={layout.n_antennas}"
        )
    W = np.column_stack(
        [_steer(channel, layout, m, layout.users_outside([m])) for m in range(M)]
    )
    return RsPrecoder.designated(W * np.sqrt(P / M))


def build_zf_partial(channel: ChannelSet, layout: GroupLayout, P: float) -> RsPrecoder:
    """Partial zero-forcing attaining MMF-DoF 1/2.

    Beams of groups ``0..M-2`` are nulled everywhere except at the largest
    group, which alone sees interference; the largest group's beam is nulled
    at all other users.  Powers are ``sqrt(P)/(M-1)`` for the small groups
    and ``P - sqrt(P)`` for the largest, so they sum to ``P``.
    """
    channel.check_layout(layout)
    M = layout.n_groups
    if M < 2:
        raise InfeasibleSchemeError("partial zero-forcing needs at least two groups")
    needed = dof.n_l(layout, M - 1) + layout.group_sizes[0]
    if layout.n_antennas < needed:
        raise InfeasibleSchemeError(
            f"partial zero-forcing needs N >= {needed}, have N={layout.n_antennas}"
        )
    if P < 1.0:
        raise ValueError("partial zero-forcing power split needs P >= 1")
    last = M - 1
    W = np.column_stack(
        [_steer(channel, layout, m, layout.users_outside([m, last])) for m in range(last)]
        + [_steer(channel, layout, last, layout.users_outside([last]))]
    )
    q = np.full(M, np.sqrt(P) / (M - 1))
    q[last] = P - np.sqrt(P)
    return RsPrecoder.designated(W * np.sqrt(q))


def build_degraded_superposition(
    channel: ChannelSet,
    layout: GroupLayout,
    P: float,
    order: Optional[Sequence[int]] = None,
    seed: int = 0,
    power_profile: str = "equal_rate",
) -> SuperpositionBeams:
    """Degraded superposition with power levels spaced by ``P^(1/M)``.

    All streams share one random direction in the span of the user channels
    (fixed by ``seed``).  The stream decoded ``j``-th (0-based) gets power
    of order ``P^((M - j)/M)``.

    ``power_profile`` fixes the constants in front of those powers:

    ``"uniform"``
        ``q = c * P^((M - j)/M)`` with one ``c`` making the total ``P``.
    ``"equal_rate"``
        the tail sums ``S_j = q_j + ... + q_{M-1}`` follow
        ``S_j + a = (P + a)^((M - j)/M) * a^(j/M)`` with
        ``a = noise / min_k |h_k^H w|^2``, so every stream carries
        ``log2(1 + P/a) / M`` at the weakest user.
    """
    channel.check_layout(layout)
    M = layout.n_groups
    order = tuple(range(M)) if order is None else tuple(int(o) for o in order)
    if sorted(order) != list(range(M)):
        raise ValueError(f"order must be a permutation of 0..{M - 1}, got {order}")
    rng = np.random.default_rng(seed)
    w = _random_direction(channel, rng)
    exponents = (M - np.arange(M)) / M
    if power_profile == "uniform":
        levels = P ** exponents
        by_position = levels * (P / levels.sum())
    elif power_profile == "equal_rate":
        a = channel.noise_variance / np.min(np.abs(channel.H.conj().T @ w) ** 2)
        tails = (P + a) ** exponents * a ** (1.0 - exponents) - a
        tails[0] = P
        by_position = tails - np.append(tails[1:], 0.0)
    else:
        raise ValueError(f"unknown power_profile {power_profile!r}")
    q = np.empty(M)
    q[list(order)] = by_position
    return SuperpositionBeams(np.outer(w, np.sqrt(q)), order)


def build_single_stream(
    channel: ChannelSet, layout: GroupLayout, P: float, seed: int = 0
) -> RsPrecoder:
    """One random full-power common beam, rate split equally over groups."""
    channel.check_layout(layout)
    M = layout.n_groups
    rng = np.random.default_rng(seed)
    pc = _random_direction(channel, rng) * np.sqrt(P)
    precoder = RsPrecoder.single_stream(pc, M)
    rc = common_rates(channel, precoder).min()
    return precoder.with_shares(np.full(M, rc / M))


def build_rs_partitioned(
    channel: ChannelSet,
    layout: GroupLayout,
    P: float,
    alpha: Optional[float] = None,
    seed: int = 0,
) -> RsPrecoder:
    """Partitioned rate-splitting scheme.

    The ``M_D*`` smallest groups get zero-forcing designated beams at power
    ``P^alpha / M_D*`` each, nulled at the other designated groups.  The
    remaining groups share a random common beam carrying the leftover power,
    its rate split equally among them.  ``alpha`` defaults to
    ``1 / (1 + M - M_D*)``.  With no groups left for the common stream this
    is :func:`build_zf_full`.
    """
    channel.check_layout(layout)
    M = layout.n_groups
    md = dof.m_d_star(layout)
    if md == M:
        return build_zf_full(channel, layout, P)
    if alpha is None:
        alpha = 1.0 / (1 + M - md)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if P < 1.0:
        raise ValueError("partitioned power split needs P >= 1")
    common_groups = list(range(md, M))
    W = np.zeros((layout.n_antennas, M), dtype=complex)
    for m in range(md):
        W[:, m] = _steer(channel, layout, m, layout.users_outside([m] + common_groups))
    q_designated = P ** alpha / md
    rng = np.random.default_rng(seed)
    pc = _random_direction(channel, rng) * np.sqrt(max(P - md * q_designated, 0.0))
    precoder = RsPrecoder(pc, W * np.sqrt(q_designated), np.zeros(M))
    rc = common_rates(channel, precoder).min()
    shares = np.zeros(M)
    shares[common_groups] = rc / len(common_groups)
    return precoder.with_shares(shares)


_BUILDERS = {
    SchemeKind.ZF_FULL: lambda ch, lay, P, spec: build_zf_full(ch, lay, P),
    SchemeKind.ZF_PARTIAL: lambda ch, lay, P, spec: build_zf_partial(ch, lay, P),
    SchemeKind.DEGRADED_SUPERPOSITION: lambda ch, lay, P, spec: build_degraded_superposition(
        ch, lay, P, spec.order, spec.seed
    ),
    SchemeKind.SINGLE_STREAM: lambda ch, lay, P, spec: build_single_stream(ch, lay, P, spec.seed),
    SchemeKind.RS_PARTITIONED: lambda ch, lay, P, spec: build_rs_partitioned(
        ch, lay, P, spec.alpha, spec.seed
    ),
}


def build_scheme(
    spec: SchemeSpec, channel: ChannelSet, layout: GroupLayout, P: float
) -> Union[RsPrecoder, SuperpositionBeams]:
    return _BUILDERS[spec.kind](channel, layout, P, spec)


def scheme_dof(spec: SchemeSpec, layout: GroupLayout) -> Fraction:
    """DoF the scheme is designed to attain on ``layout``."""
    kind = spec.kind
    if kind is SchemeKind.ZF_FULL:
        return dof.dof_designated(layout)
    if kind is SchemeKind.ZF_PARTIAL:
        return min(dof.dof_designated(layout), Fraction(1, 2))
    if kind in (SchemeKind.DEGRADED_SUPERPOSITION, SchemeKind.SINGLE_STREAM):
        return dof.dof_degraded(layout)
    md = dof.m_d_star(layout)
    M = layout.n_groups
    if md == M or spec.alpha is None:
        return dof.dof_rs(layout)
    alpha = Fraction(spec.alpha).limit_denominator(10**6)
    return min(alpha, (1 - alpha) / (M - md))


Builder = Callable[[ChannelSet, GroupLayout, float], Union[RsPrecoder, SuperpositionBeams]]


def evaluate_scheme(
    channel: ChannelSet, layout: GroupLayout, out, strategy: Optional[str] = None
) -> RateReport:
    """Rate report of a builder output under the matching rate model.

    ``strategy`` may force 'rs', 'designated' or 'degraded_sic'; by default
    superposition beams use SIC decoding and precoders the RS model (which
    coincides with the designated model for designated-only precoders).
    """
    if isinstance(out, SuperpositionBeams):
        if strategy not in (None, "degraded_sic"):
            raise ValueError(f"superposition beams need strategy 'degraded_sic', got {strategy!r}")
        return rates_degraded_sic(channel, layout, out.beams, out.order)
    if strategy == "degraded_sic":
        raise ValueError("strategy 'degraded_sic' needs SuperpositionBeams")
    if strategy == "designated":
        return rates_designated(channel, layout, out)
    if strategy not in (None, "rs"):
        raise ValueError(f"unknown strategy {strategy!r}")
    return rates_rs(channel, layout, out)


def empirical_dof_slope(
    builder: Builder,
    layout: GroupLayout,
    seed: int,
    snr_db: Sequence[float],
    strategy: Optional[str] = None,
    n_realizations: int = 20,
    noise_variance: float = 1.0,
) -> float:
    """Least-squares slope of the mean MMF rate against ``log2(P)``.

    Realization ``r`` uses channel seed ``seed + r``; the MMF rate is
    averaged over realizations at every SNR before fitting.

    Parameters
    ----------
    builder : callable
        ``builder(channel, layout, P)`` returning an :class:`RsPrecoder` or
        :class:`SuperpositionBeams`.
    strategy : {'rs', 'designated', 'degraded_sic'}, optional
        Rate model used for evaluation; inferred from the builder output
        when omitted.
    """
    snr_db = [float(s) for s in snr_db]
    if len(snr_db) < 2:
        raise ValueError("at least two SNR levels are needed to fit a slope")
    if any(b <= a for a, b in zip(snr_db, snr_db[1:])):
        raise ValueError("SNR levels must be strictly increasing")
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    powers = np.array([snr_db_to_power(s, noise_variance) for s in snr_db])
    mmf = np.zeros(len(powers))
    for r in range(n_realizations):
        channel = sample_channel(layout, seed + r, noise_variance)
        for i, P in enumerate(powers):
            mmf[i] += evaluate_scheme(channel, layout, builder(channel, layout, P), strategy).mmf
    mmf /= n_realizations
    slope, _ = np.polyfit(np.log2(powers), mmf, 1)
    return float(slope)
