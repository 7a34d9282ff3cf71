"""System model for multigroup multicast transmission.

A transmitter with ``N`` antennas serves ``K`` single-antenna users that are
partitioned into ``M`` multicast groups.  Users are indexed contiguously by
group (group 0 first) and groups are sorted by non-decreasing size.  All
rates are in bits/s/Hz (log base 2).

Three transmission strategies are evaluated here:

* designated beamforming: one beam per group, interference treated as noise;
* degraded beamforming with successive interference cancellation (SIC);
* rate-splitting (RS): a common stream decoded by every user and removed by
  SIC, plus one designated beam per group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "FEASIBILITY_TOL",
    "GroupLayout",
    "ChannelSet",
    "RsPrecoder",
    "RateReport",
    "snr_db_to_power",
    "sample_channel",
    "rates_designated",
    "rates_degraded_sic",
    "rate_single_stream",
    "rates_rs",
    "common_rates",
    "allocate_common_rate",
]

# Slack below which a common-rate allocation is still considered decodable.
FEASIBILITY_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GroupLayout:
    """Antenna count and multicast group sizes.

    Parameters
    ----------
    n_antennas : int
        Number of transmit antennas ``N``.
    group_sizes : sequence of int
        Sizes ``G_0 <= G_1 <= ... <= G_{M-1}`` of the groups.
    """

    n_antennas: int
    group_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(g) for g in self.group_sizes)
        object.__setattr__(self, "group_sizes", sizes)
        if int(self.n_antennas) < 1:
            raise ValueError(f"n_antennas must be >= 1, got {self.n_antennas}")
        object.__setattr__(self, "n_antennas", int(self.n_antennas))
        if len(sizes) < 1:
            raise ValueError("at least one group is required")
        if any(g < 1 for g in sizes):
            raise ValueError(f"group sizes must be positive, got {sizes}")
        if any(a > b for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"group sizes must be non-decreasing, got {sizes}")

    @property
    def n_users(self) -> int:
        return sum(self.group_sizes)

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def user_groups(self) -> np.ndarray:
        """Group index of every user (the map from users to groups)."""
        return np.repeat(np.arange(self.n_groups), self.group_sizes)

    def members(self, m: int) -> np.ndarray:
        """User indices belonging to group ``m``."""
        if not 0 <= m < self.n_groups:
            raise IndexError(f"group index {m} out of range")
        start = sum(self.group_sizes[:m])
        return np.arange(start, start + self.group_sizes[m])

    def users_outside(self, groups: Sequence[int]) -> np.ndarray:
        """User indices not belonging to any of ``groups``."""
        mask = ~np.isin(self.user_groups, list(groups))
        return np.flatnonzero(mask)

    def with_antennas(self, n_antennas: int) -> "GroupLayout":
        return GroupLayout(n_antennas, self.group_sizes)


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization.

    ``H`` is ``N x K`` with column ``k`` the channel of user ``k``; the
    received signal is ``y_k = h_k^H x + n_k``.
    """

    H: np.ndarray
    noise_variance: float = 1.0

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        if H.ndim != 2:
            raise ValueError("H must be a 2-D array (antennas x users)")
        object.__setattr__(self, "H", _frozen(H))
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def n_antennas(self) -> int:
        return self.H.shape[0]

    @property
    def n_users(self) -> int:
        return self.H.shape[1]

    def check_layout(self, layout: GroupLayout) -> None:
        if self.H.shape != (layout.n_antennas, layout.n_users):
            raise ValueError(
                f"channel shape {self.H.shape} does not match layout "
                f"(N={layout.n_antennas}, K={layout.n_users})"
            )


@dataclass(frozen=True)
class RsPrecoder:
    """Rate-splitting precoder.

    Attributes
    ----------
    p_common : ndarray, shape (N,)
        Beamformer of the common (degraded) stream; all-zero when unused.
    p_designated : ndarray, shape (N, M)
        Column ``m`` is the designated beamformer of group ``m``.
    common_shares : ndarray, shape (M,)
        Portion ``C_m`` of the common rate assigned to group ``m``.

    Designated-only precoders have a zero common beam and zero shares; the
    single-stream degraded precoder has all designated beams zero.
    """

    p_common: np.ndarray
    p_designated: np.ndarray
    common_shares: np.ndarray

    def __post_init__(self):
        pc = np.array(self.p_common, dtype=complex).reshape(-1)
        pd = np.array(self.p_designated, dtype=complex)
        if pd.ndim != 2 or pd.shape[0] != pc.shape[0]:
            raise ValueError(
                f"p_designated must be N x M with N={pc.shape[0]}, got {pd.shape}"
            )
        shares = np.array(self.common_shares, dtype=float).reshape(-1)
        if shares.shape[0] != pd.shape[1]:
            raise ValueError("common_shares must have one entry per group")
        if np.any(shares < 0):
            raise ValueError("common_shares must be non-negative")
        object.__setattr__(self, "p_common", _frozen(pc))
        object.__setattr__(self, "p_designated", _frozen(pd))
        object.__setattr__(self, "common_shares", _frozen(shares))

    @classmethod
    def designated(cls, beams: np.ndarray) -> "RsPrecoder":
        beams = np.asarray(beams, dtype=complex)
        n, m = beams.shape
        return cls(np.zeros(n, complex), beams, np.zeros(m))

    @classmethod
    def single_stream(
        cls, p_common: np.ndarray, n_groups: int, shares: Optional[np.ndarray] = None
    ) -> "RsPrecoder":
        p_common = np.asarray(p_common, dtype=complex).reshape(-1)
        if shares is None:
            shares = np.zeros(n_groups)
        return cls(p_common, np.zeros((p_common.shape[0], n_groups), complex), shares)

    @property
    def n_antennas(self) -> int:
        return self.p_common.shape[0]

    @property
    def n_groups(self) -> int:
        return self.p_designated.shape[1]

    @property
    def beams(self) -> np.ndarray:
        """All beams as an ``N x (M+1)`` matrix, common beam first."""
        return np.column_stack([self.p_common, self.p_designated])

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.p_common) ** 2) + np.sum(np.abs(self.p_designated) ** 2))

    def is_designated_only(self) -> bool:
        return not np.any(self.p_common) and not np.any(self.common_shares)

    def is_single_stream(self) -> bool:
        return not np.any(self.p_designated)

    def with_shares(self, shares: np.ndarray) -> "RsPrecoder":
        return RsPrecoder(self.p_common, self.p_designated, shares)

    def scaled(self, factor: float) -> "RsPrecoder":
        """Scale every beam amplitude by ``factor`` (shares unchanged)."""
        return RsPrecoder(self.p_common * factor, self.p_designated * factor, self.common_shares)


@dataclass(frozen=True)
class RateReport:
    """Rates achieved by one precoder on one channel.

    ``designated_parts[m]`` is the weakest designated rate in group ``m`` and
    ``group_rates[m] = common_shares[m] + designated_parts[m]`` (common
    shares are zero outside rate-splitting).  ``common_slack`` is
    ``min_k R_k^c - sum(common_shares)``; a negative slack marks an
    undecodable common-rate allocation, reported rather than clamped.
    """

    user_rates: np.ndarray
    common_user_rates: np.ndarray
    group_rates: np.ndarray
    mmf: float
    common_shares: np.ndarray = field(default_factory=lambda: np.zeros(0))
    designated_parts: np.ndarray = field(default_factory=lambda: np.zeros(0))
    common_slack: float = 0.0
    sic_rates: Optional[np.ndarray] = None

    @property
    def common_feasible(self) -> bool:
        return self.common_slack >= -FEASIBILITY_TOL


def snr_db_to_power(snr_db: float, noise_variance: float = 1.0) -> float:
    """Transmit power giving ``P / noise_variance`` equal to ``snr_db``."""
    return float(noise_variance * 10.0 ** (snr_db / 10.0))


def sample_channel(layout: GroupLayout, seed: int, noise_variance: float = 1.0) -> ChannelSet:
    """Draw an i.i.d. CN(0, 1) channel matrix for ``layout``."""
    rng = np.random.default_rng(seed)
    shape = (layout.n_antennas, layout.n_users)
    H = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelSet(H, noise_variance)


def _gains(channel: ChannelSet, beams: np.ndarray) -> np.ndarray:
    """``|h_k^H p_j|^2`` as a ``K x J`` matrix."""
    return np.abs(channel.H.conj().T @ beams) ** 2


def _check(channel: ChannelSet, layout: Optional[GroupLayout], precoder: RsPrecoder) -> None:
    if precoder.n_antennas != channel.n_antennas:
        raise ValueError(
            f"precoder has {precoder.n_antennas} antennas, channel has {channel.n_antennas}"
        )
    if layout is not None:
        channel.check_layout(layout)
        if precoder.n_groups != layout.n_groups:
            raise ValueError(
                f"precoder has {precoder.n_groups} designated beams, layout has "
                f"{layout.n_groups} groups"
            )


def _designated_user_rates(channel: ChannelSet, layout: GroupLayout, beams: np.ndarray) -> np.ndarray:
    gains = _gains(channel, beams)
    users = np.arange(layout.n_users)
    signal = gains[users, layout.user_groups]
    interference = gains.sum(axis=1) - signal
    return np.log2(1.0 + signal / (interference + channel.noise_variance))


def _group_min(layout: GroupLayout, user_values: np.ndarray) -> np.ndarray:
    return np.array([user_values[layout.members(m)].min() for m in range(layout.n_groups)])


def common_rates(channel: ChannelSet, precoder: RsPrecoder) -> np.ndarray:
    """Per-user rate of the common stream, all designated beams as noise."""
    _check(channel, None, precoder)
    signal = _gains(channel, precoder.p_common[:, None])[:, 0]
    interference = _gains(channel, precoder.p_designated).sum(axis=1)
    return np.log2(1.0 + signal / (interference + channel.noise_variance))


def rates_designated(channel: ChannelSet, layout: GroupLayout, precoder: RsPrecoder) -> RateReport:
    """Rates of classical designated beamforming.

    Each user decodes its group's stream treating all other beams as noise;
    a group's rate is that of its weakest member.
    """
    _check(channel, layout, precoder)
    if not precoder.is_designated_only():
        raise ValueError("rates_designated requires a zero common beam and zero shares")
    user_rates = _designated_user_rates(channel, layout, precoder.p_designated)
    group_rates = _group_min(layout, user_rates)
    M = layout.n_groups
    return RateReport(
        user_rates=user_rates,
        common_user_rates=np.zeros(layout.n_users),
        group_rates=group_rates,
        mmf=float(group_rates.min()),
        common_shares=np.zeros(M),
        designated_parts=group_rates.copy(),
    )


def rates_degraded_sic(
    channel: ChannelSet,
    layout: GroupLayout,
    beams: np.ndarray,
    order: Optional[Sequence[int]] = None,
) -> RateReport:
    """Rates of degraded beamforming with successive decoding.

    Parameters
    ----------
    beams : ndarray, shape (N, M)
        Column ``m`` carries the message of group ``m``.
    order : sequence of int, optional
        Decoding order; ``order[j]`` is the group whose stream is decoded
        ``j``-th.  Users of group ``order[j]`` decode streams
        ``order[0..j]`` in turn.  Defaults to the identity order.

    Returns
    -------
    RateReport
        ``sic_rates[k, m]`` is the rate at which user ``k`` can decode
        stream ``m`` (NaN if the user never reaches that stream).
        ``user_rates`` holds each user's rate on its own stream.
    """
    channel.check_layout(layout)
    beams = np.asarray(beams, dtype=complex)
    M = layout.n_groups
    if beams.shape != (layout.n_antennas, M):
        raise ValueError(f"beams must be {layout.n_antennas} x {M}, got {beams.shape}")
    order = list(range(M)) if order is None else [int(o) for o in order]
    if sorted(order) != list(range(M)):
        raise ValueError(f"order must be a permutation of 0..{M - 1}, got {order}")

    gains = _gains(channel, beams)
    position = np.empty(M, dtype=int)
    position[order] = np.arange(M)
    user_pos = position[layout.user_groups]
    sic = np.full((layout.n_users, M), np.nan)
    group_rates = np.empty(M)
    for j, m in enumerate(order):
        later = order[j + 1:]
        interference = gains[:, later].sum(axis=1)
        rate = np.log2(1.0 + gains[:, m] / (interference + channel.noise_variance))
        decoders = user_pos >= j
        sic[decoders, m] = rate[decoders]
        group_rates[m] = rate[decoders].min()
    own = sic[np.arange(layout.n_users), layout.user_groups]
    return RateReport(
        user_rates=own,
        common_user_rates=np.zeros(layout.n_users),
        group_rates=group_rates,
        mmf=float(group_rates.min()),
        common_shares=np.zeros(M),
        designated_parts=group_rates.copy(),
        sic_rates=sic,
    )


def rate_single_stream(channel: ChannelSet, p_common: np.ndarray, n_groups: int) -> float:
    """MMF rate of single-stream degraded beamforming.

    All messages ride on one stream decoded by every user; its rate is
    split equally over ``n_groups`` groups.
    """
    p_common = np.asarray(p_common, dtype=complex).reshape(-1, 1)
    gains = _gains(channel, p_common)[:, 0]
    return float(np.log2(1.0 + gains / channel.noise_variance).min() / n_groups)


def rates_rs(channel: ChannelSet, layout: GroupLayout, precoder: RsPrecoder) -> RateReport:
    """Rates of rate-splitting beamforming.

    Every user first decodes the common stream (designated beams as noise),
    removes it, then decodes its designated stream.  Group ``m`` gets
    ``C_m`` plus the weakest designated rate in the group.
    """
    _check(channel, layout, precoder)
    rc = common_rates(channel, precoder)
    user_rates = _designated_user_rates(channel, layout, precoder.p_designated)
    designated = _group_min(layout, user_rates)
    shares = np.array(precoder.common_shares)
    group_rates = shares + designated
    return RateReport(
        user_rates=user_rates,
        common_user_rates=rc,
        group_rates=group_rates,
        mmf=float(group_rates.min()),
        common_shares=shares,
        designated_parts=designated,
        common_slack=float(rc.min() - shares.sum()),
    )


def allocate_common_rate(designated_parts: np.ndarray, common_rate: float) -> np.ndarray:
    """Split ``common_rate`` over groups to maximize the minimum group rate.

    Water-filling: groups with the lowest designated rates are topped up to
    a common level ``t``; the shares sum exactly to ``common_rate``.
    """
    d = np.asarray(designated_parts, dtype=float)
    common_rate = max(float(common_rate), 0.0)
    if common_rate == 0.0:
        return np.zeros_like(d)
    ds = np.sort(d)
    # smallest j such that topping up the j+1 lowest groups to ds[j+1] overshoots
    level = ds[-1] + (common_rate - np.sum(ds[-1] - ds)) / len(ds)
    for j in range(len(ds) - 1):
        needed = np.sum(ds[j + 1] - ds[: j + 1])
        if needed >= common_rate:
            level = (common_rate + ds[: j + 1].sum()) / (j + 1)
            break
    shares = np.maximum(level - d, 0.0)
    total = shares.sum()
    if total > 0:
        shares *= common_rate / total
    return shares
