"""Rate-WMMSE alternating optimization for max-min fair rate-splitting.

For fixed equalizers ``g`` and weights ``u`` the augmented weighted MSEs are
convex quadratics in the beamformers, and ``c - xi`` is a rate surrogate
that matches the rate at the MMSE solution (``c`` depends on the weight
rule, see :data:`WEIGHT_RULES`).  The algorithm alternates

1. closed-form MMSE equalizer and weight updates (:func:`mmse_update`), and
2. the convex precoder subproblem (:func:`solve_subproblem`), an SOCP in
   real coordinates handed to Clarabel,

until the max-min objective stops improving.  Designated-only and
single-stream degraded beamforming are solved by the same machinery with the
corresponding variables pinned to zero.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import clarabel
import numpy as np
import scipy.sparse as sp

from .model import (
    ChannelSet,
    GroupLayout,
    RateReport,
    RsPrecoder,
    allocate_common_rate,
    common_rates,
    rates_designated,
    rates_rs,
)

__all__ = [
    "Mode",
    "WEIGHT_RULES",
    "ReceivedPowers",
    "MmseUpdate",
    "WmmseState",
    "AoOptions",
    "AoResult",
    "SubproblemError",
    "AoError",
    "received_powers",
    "mse",
    "mmse_update",
    "wmse",
    "solve_subproblem",
    "certified_floor",
    "initial_precoder",
    "finalize",
    "ao_run",
    "ao_solve",
]

log = logging.getLogger(__name__)

# statuses whose iterate is kept; the objective is re-certified afterwards
_USABLE = ("Solved", "AlmostSolved", "InsufficientProgress", "MaxIterations", "MaxTime")


class Mode(enum.Enum):
    RS = "rs"
    DESIGNATED = "designated"
    DEGRADED = "degraded_ss"


class SubproblemError(RuntimeError):
    """The convex subproblem did not reach the requested accuracy.

    ``best`` holds the precoder the subproblem started from, which is still
    feasible.
    """

    def __init__(self, message: str, best: Optional[RsPrecoder] = None, status: str = ""):
        super().__init__(message)
        self.best = best
        self.status = status


class AoError(RuntimeError):
    """Alternating optimization aborted; carries the trace so far."""

    def __init__(self, message: str, trace: Sequence[float], best: Optional[RsPrecoder]):
        super().__init__(message)
        self.trace = tuple(trace)
        self.best = best


@dataclass(frozen=True)
class ReceivedPowers:
    """Per-user received powers (arrays of length ``K``).

    ``common_total = |h^H p_c|^2 + total``, ``total = |h^H p_own|^2 +
    interference``, ``interference`` covers the other designated beams plus
    noise, and ``common_interference`` equals ``total``.
    """

    common_total: np.ndarray
    total: np.ndarray
    common_interference: np.ndarray
    interference: np.ndarray


# ``rate_offset - xi`` is the rate surrogate used by each weight rule
WEIGHT_RULES = {
    # u = 1/MMSE: xi = 1 - R exactly at the update point, but with log2 the
    # surrogate is not a global lower bound on the rate
    "reciprocal": 1.0,
    # u = 1/(MMSE ln 2), the true minimizer of u*eps - log2(u); the surrogate
    # then minorizes the rate everywhere
    "exact": 1.0 / np.log(2.0) + np.log2(np.log(2.0)),
}


@dataclass(frozen=True)
class MmseUpdate:
    """Equalizers, weights and minimum MSEs for every user.

    ``rate_offset - xi`` is the rate surrogate that the subproblem
    constrains; it equals the rate at the update point for either rule.
    """

    g_common: np.ndarray
    g: np.ndarray
    u_common: np.ndarray
    u: np.ndarray
    mse_common: np.ndarray
    mse: np.ndarray
    rate_offset: float = 1.0


@dataclass(frozen=True)
class WmmseState:
    """One solution of the precoder subproblem for fixed ``mmse``.

    ``rate_floor`` is the max-min objective ``r_g``; ``group_floors`` the
    designated rate lower bounds ``r_m`` and ``shares`` the common-rate
    shares ``C_m``.
    """

    mmse: MmseUpdate
    precoder: RsPrecoder
    rate_floor: float
    group_floors: np.ndarray
    shares: np.ndarray
    status: str = "Solved"
    kkt_residual: float = 0.0


def _received(channel: ChannelSet, layout: GroupLayout, precoder: RsPrecoder):
    channel.check_layout(layout)
    Hh = channel.H.conj().T
    hp_common = Hh @ precoder.p_common
    hp = Hh @ precoder.p_designated
    users = np.arange(layout.n_users)
    hp_own = hp[users, layout.user_groups]
    return hp_common, hp_own, np.abs(hp) ** 2


def received_powers(channel: ChannelSet, layout: GroupLayout, precoder: RsPrecoder) -> ReceivedPowers:
    hp_common, hp_own, gains = _received(channel, layout, precoder)
    total = gains.sum(axis=1) + channel.noise_variance
    interference = total - np.abs(hp_own) ** 2
    common_total = total + np.abs(hp_common) ** 2
    return ReceivedPowers(common_total, total, total.copy(), interference)


def mse(
    channel: ChannelSet,
    layout: GroupLayout,
    precoder: RsPrecoder,
    g_common: np.ndarray,
    g: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Common and designated MSEs for arbitrary equalizers."""
    hp_common, hp_own, _ = _received(channel, layout, precoder)
    T = received_powers(channel, layout, precoder)
    g_common = np.asarray(g_common, dtype=complex)
    g = np.asarray(g, dtype=complex)
    eps_c = np.abs(g_common) ** 2 * T.common_total - 2 * np.real(g_common * hp_common) + 1
    eps = np.abs(g) ** 2 * T.total - 2 * np.real(g * hp_own) + 1
    return eps_c, eps


def mmse_update(
    channel: ChannelSet, layout: GroupLayout, precoder: RsPrecoder, rule: str = "reciprocal"
) -> MmseUpdate:
    """MMSE equalizers ``g = (h^H p)^* / T`` and weights.

    ``rule='reciprocal'`` sets ``u = 1 / MMSE``; ``rule='exact'`` sets
    ``u = 1 / (MMSE ln 2)``.  See :data:`WEIGHT_RULES`.
    """
    if rule not in WEIGHT_RULES:
        raise ValueError(f"unknown weight rule {rule!r}; choose from {sorted(WEIGHT_RULES)}")
    hp_common, hp_own, _ = _received(channel, layout, precoder)
    T = received_powers(channel, layout, precoder)
    g_common = np.conj(hp_common) / T.common_total
    g = np.conj(hp_own) / T.total
    mse_common = T.common_interference / T.common_total
    mse_ = T.interference / T.total
    scale = 1.0 if rule == "reciprocal" else 1.0 / np.log(2.0)
    return MmseUpdate(
        g_common, g, scale / mse_common, scale / mse_, mse_common, mse_, WEIGHT_RULES[rule]
    )


def wmse(
    channel: ChannelSet,
    layout: GroupLayout,
    precoder: RsPrecoder,
    g_common: np.ndarray,
    g: np.ndarray,
    u_common: np.ndarray,
    u: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Augmented WMSEs ``xi = u * eps - log2(u)`` for the common and designated streams."""
    u_common = np.asarray(u_common, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(u_common <= 0) or np.any(u <= 0):
        raise ValueError("weights must be strictly positive")
    eps_c, eps = mse(channel, layout, precoder, g_common, g)
    return u_common * eps_c - np.log2(u_common), u * eps - np.log2(u)


def _realify_rows(H: np.ndarray) -> np.ndarray:
    """``K x 2 x 2N`` maps from ``[Re p; Im p]`` to ``(Re h^H p, Im h^H p)``."""
    hr, hi = H.real.T, H.imag.T
    return np.stack([np.hstack([hr, hi]), np.hstack([-hi, hr])], axis=1)


def _settings(tol: float, variant: int = 0) -> clarabel.DefaultSettings:
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.tol_gap_abs = tol
    st.tol_gap_rel = tol
    st.tol_feas = tol
    st.max_iter = 100
    st.max_threads = 1
    if variant == 1:
        st.equilibrate_enable = False
    elif variant == 2:
        st.static_regularization_constant = 1e-10
    elif variant == 3:
        st.tol_gap_abs = st.tol_gap_rel = st.tol_feas = 10 * tol
    return st


# default settings first; near an AO fixed point Clarabel occasionally
# stalls just short of the residual target, and these variants recover it
_VARIANTS = (0, 1, 2, 3)


def solve_subproblem(
    channel: ChannelSet,
    layout: GroupLayout,
    P: float,
    mmse: MmseUpdate,
    mode: Mode = Mode.RS,
    tol: float = 1e-8,
    max_residual: float = 1e-7,
    start: Optional[RsPrecoder] = None,
) -> WmmseState:
    """Maximize the max-min rate floor over precoders for fixed ``g`` and ``u``.

    Constraints: ``C_m + r_m >= r_g``, ``c - xi_i >= r_m`` for users of
    group ``m``, ``c - xi_c,k >= sum(C)`` for every user (``c`` is
    ``mmse.rate_offset``), ``C >= 0`` and the
    total power ``<= P``.  Beamformers are scaled by ``sqrt(P)`` internally
    so the power constraint is a unit ball.

    Raises
    ------
    SubproblemError
        If Clarabel stops without reaching ``max_residual``.
    """
    mode = Mode(mode)
    channel.check_layout(layout)
    N, K, M = layout.n_antennas, layout.n_users, layout.n_groups
    if np.any(mmse.u_common <= 0) or np.any(mmse.u <= 0):
        raise ValueError("weights must be strictly positive")
    has_common = mode is not Mode.DESIGNATED
    has_designated = mode is not Mode.DEGRADED
    beams = ([0] if has_common else []) + (list(range(1, M + 1)) if has_designated else [])
    n = 2 * N
    col = {b: i * n for i, b in enumerate(beams)}
    nx = n * len(beams)
    i_rg = nx
    i_r = nx + 1
    n_r = M if has_designated else 0
    i_c = i_r + n_r
    n_c = {Mode.RS: M, Mode.DESIGNATED: 0, Mode.DEGRADED: 1}[mode]
    nz = i_c + n_c

    R = _realify_rows(channel.H) * np.sqrt(P)
    sigma2 = channel.noise_variance
    groups = layout.user_groups

    rows, rhs, cones = [], [], []

    # max-min coupling and share non-negativity
    lin = []
    for m in range(M if mode is not Mode.DEGRADED else 1):
        row = np.zeros(nz)
        row[i_rg] = 1.0
        if mode is Mode.RS:
            row[i_c + m] = -1.0
            row[i_r + m] = -1.0
        elif mode is Mode.DESIGNATED:
            row[i_r + m] = -1.0
        else:
            row[i_c] = -1.0
        lin.append(row)
    for j in range(n_c):
        row = np.zeros(nz)
        row[i_c + j] = -1.0
        lin.append(row)
    rows.append(np.array(lin))
    rhs.append(np.zeros(len(lin)))
    cones.append(clarabel.NonnegativeConeT(len(lin)))

    # power ball
    block = np.zeros((1 + nx, nz))
    block[1:, :nx] = -np.eye(nx)
    b = np.zeros(1 + nx)
    b[0] = 1.0
    rows.append(block)
    rhs.append(b)
    cones.append(clarabel.SecondOrderConeT(1 + nx))

    def quad_block(k, g, u, own_beam, quad_beams, rate_cols, rate_coef):
        # u * eps in completed-square form, ||F z - f||^2 + a^T z <= beta,
        # written as a rotated cone in standard SOC form
        rot = np.array([[g.real, -g.imag], [g.imag, g.real]]) @ R[k]
        F = np.zeros((2 * len(quad_beams), nz))
        f = np.zeros(2 * len(quad_beams))
        for i, bm in enumerate(quad_beams):
            F[2 * i: 2 * i + 2, col[bm]: col[bm] + n] = np.sqrt(u) * rot
            if bm == own_beam:
                f[2 * i] = np.sqrt(u)
        a = np.zeros(nz)
        a[rate_cols] = rate_coef
        beta = mmse.rate_offset - u * abs(g) ** 2 * sigma2 + np.log2(u)
        blk = np.vstack([a, -a, -2 * F])
        bb = np.concatenate([[1.0 + beta, 1.0 - beta], -2 * f])
        rows.append(blk)
        rhs.append(bb)
        cones.append(clarabel.SecondOrderConeT(blk.shape[0]))

    designated_beams = [b for b in beams if b != 0]
    for k in range(K):
        if has_designated:
            quad_block(k, mmse.g[k], mmse.u[k], groups[k] + 1, designated_beams,
                       [i_r + groups[k]], 1.0)
        if has_common:
            if mode is Mode.RS:
                quad_block(k, mmse.g_common[k], mmse.u_common[k], 0, beams,
                           list(range(i_c, i_c + M)), 1.0)
            else:
                quad_block(k, mmse.g_common[k], mmse.u_common[k], 0, beams, [i_c], float(M))

    A = sp.csc_matrix(np.vstack(rows))
    bvec = np.concatenate(rhs)
    q = np.zeros(nz)
    q[i_rg] = -1.0
    P_quad = sp.csc_matrix((nz, nz))
    best = None
    for variant in _VARIANTS:
        solver = clarabel.DefaultSolver(P_quad, q, A, bvec, cones, _settings(tol, variant))
        sol = solver.solve()
        status = str(sol.status)
        info = solver.get_info()
        gap = info.gap_rel if np.isfinite(info.gap_rel) else 0.0
        residual = float(max(sol.r_prim, sol.r_dual, gap, 0.0))
        z = np.asarray(sol.x)
        if status not in _USABLE or not np.all(np.isfinite(z)):
            continue
        if best is None or residual < best[2]:
            best = (z, status, residual)
        if residual <= max_residual:
            break
    if best is None or best[2] > max_residual:
        detail = f"residual {best[2]:.2e}" if best else "no usable iterate"
        raise SubproblemError(
            f"subproblem stopped with status {status} ({detail})",
            best=start,
            status=status,
        )
    z, status, residual = best
    X = np.sqrt(P) * z[:nx].reshape(len(beams), n).T
    P_all = np.zeros((N, M + 1), dtype=complex)
    P_all[:, beams] = X[:N] + 1j * X[N:]
    power = np.sum(np.abs(P_all) ** 2)
    if power > P:
        P_all *= np.sqrt(P / power)
    precoder = RsPrecoder(P_all[:, 0], P_all[:, 1:], np.zeros(M))
    floor, floors, shares = certified_floor(channel, layout, precoder, mmse, mode)
    return WmmseState(
        mmse=mmse,
        precoder=precoder,
        rate_floor=floor,
        group_floors=floors,
        shares=shares,
        status=status,
        kkt_residual=residual,
    )


def certified_floor(
    channel: ChannelSet,
    layout: GroupLayout,
    precoder: RsPrecoder,
    mmse: MmseUpdate,
    mode: Mode = Mode.RS,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Best subproblem objective attainable with ``precoder`` held fixed.

    Evaluates ``rate_offset - xi`` exactly and optimizes the auxiliary variables in
    closed form (water-filling for RS), so the value does not inherit the
    solver's tolerances.  Returns ``(r_g, r, C)``.
    """
    mode = Mode(mode)
    M = layout.n_groups
    xi_c, xi = wmse(channel, layout, precoder, mmse.g_common, mmse.g, mmse.u_common, mmse.u)
    c0 = mmse.rate_offset
    common_budget = max(float(np.min(c0 - xi_c)), 0.0)
    if mode is Mode.DEGRADED:
        c = common_budget / M
        return c, np.zeros(M), np.full(M, c)
    floors = np.array([np.min(c0 - xi[layout.members(m)]) for m in range(M)])
    if mode is Mode.DESIGNATED:
        return float(floors.min()), floors, np.zeros(M)
    shares = allocate_common_rate(floors, common_budget)
    return float(np.min(floors + shares)), floors, shares


@dataclass(frozen=True)
class AoOptions:
    """Alternating-optimization controls.

    ``restarts`` counts the default start plus ``restarts - 1`` seeded
    random starts; ``common_fraction`` is the share of power the RS start
    puts on the common beam.  ``weight_rule`` picks the weight update,
    ``"reciprocal"`` or ``"exact"`` (see :data:`WEIGHT_RULES`).
    """

    max_iters: int = 200
    tol: float = 1e-4
    restarts: int = 3
    seed: int = 0
    common_fraction: float = 0.5
    subproblem_tol: float = 1e-8
    weight_rule: str = "reciprocal"
    max_residual: float = 1e-7

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not 0.0 <= self.common_fraction <= 1.0:
            raise ValueError("common_fraction must lie in [0, 1]")
        if self.weight_rule not in WEIGHT_RULES:
            raise ValueError(f"unknown weight rule {self.weight_rule!r}")


@dataclass(frozen=True)
class AoResult:
    """Outcome of alternating optimization.

    ``trace`` lists the subproblem objective ``r_g`` per accepted iteration.
    ``rejected_drop`` is how far below the last accepted value a rejected
    final step fell (0 when none was rejected); it measures subproblem
    inaccuracy.
    """

    mode: Mode
    precoder: RsPrecoder
    report: RateReport
    trace: tuple[float, ...]
    iterations: int
    converged: bool
    start: int = 0
    rejected_drop: float = 0.0
    starts: tuple = field(default=(), repr=False)

    @property
    def mmf(self) -> float:
        return self.report.mmf


def _pin(precoder: RsPrecoder, mode: Mode, P: float) -> RsPrecoder:
    pc, pd = np.array(precoder.p_common), np.array(precoder.p_designated)
    if mode is Mode.DESIGNATED:
        pc[:] = 0
    elif mode is Mode.DEGRADED:
        pd[:] = 0
    out = RsPrecoder(pc, pd, np.zeros(precoder.n_groups))
    power = out.total_power()
    if power > P:
        out = out.scaled(np.sqrt(P / power))
    return out


def initial_precoder(
    channel: ChannelSet,
    layout: GroupLayout,
    P: float,
    mode: Mode = Mode.RS,
    common_fraction: float = 0.5,
    rng: Optional[np.random.Generator] = None,
) -> RsPrecoder:
    """Starting point of the alternating optimization.

    Without ``rng``: designated beams along each group's summed channel and
    the common beam along the dominant left singular vector of ``H``.  With
    ``rng``: random complex Gaussian directions.  Powers are split equally
    over designated beams; in RS mode ``common_fraction`` of ``P`` goes to
    the common beam.
    """
    mode = Mode(mode)
    N, M = layout.n_antennas, layout.n_groups
    if rng is None:
        sums = np.column_stack([channel.H[:, layout.members(m)].sum(axis=1) for m in range(M)])
        common = np.linalg.svd(channel.H, full_matrices=False)[0][:, 0]
    else:
        shape = (N, M + 1)
        draw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        common, sums = draw[:, 0], draw[:, 1:]
    W = sums / np.linalg.norm(sums, axis=0, keepdims=True)
    w_c = common / np.linalg.norm(common)
    frac = {Mode.RS: common_fraction, Mode.DESIGNATED: 0.0, Mode.DEGRADED: 1.0}[mode]
    pc = w_c * np.sqrt(frac * P)
    pd = W * np.sqrt((1.0 - frac) * P / M)
    return RsPrecoder(pc, pd, np.zeros(M))


def finalize(channel: ChannelSet, layout: GroupLayout, precoder: RsPrecoder, mode: Mode) -> tuple[RsPrecoder, RateReport]:
    """Attach the best common-rate shares for ``mode`` and evaluate rates.

    RS water-fills the common rate over groups; the degraded single stream
    splits it equally; designated beamforming uses no common stream.
    """
    mode = Mode(mode)
    M = layout.n_groups
    if mode is Mode.DESIGNATED:
        precoder = precoder.with_shares(np.zeros(M))
        return precoder, rates_designated(channel, layout, precoder)
    rc = float(common_rates(channel, precoder).min())
    if mode is Mode.DEGRADED:
        shares = np.full(M, rc / M)
    else:
        designated = rates_rs(channel, layout, precoder.with_shares(np.zeros(M))).designated_parts
        shares = allocate_common_rate(designated, rc)
    precoder = precoder.with_shares(shares)
    return precoder, rates_rs(channel, layout, precoder)


def ao_run(
    channel: ChannelSet,
    layout: GroupLayout,
    P: float,
    mode: Mode,
    init: RsPrecoder,
    options: Optional[AoOptions] = None,
) -> AoResult:
    """Alternating optimization from a single starting precoder.

    Stops when consecutive objectives differ by less than ``options.tol``,
    after ``options.max_iters`` subproblems, or when a subproblem returns a
    lower objective than the last accepted one (possible only through
    solver inaccuracy); that step is discarded.
    """
    mode = Mode(mode)
    options = options or AoOptions()
    precoder = _pin(init, mode, P)
    trace: list[float] = []
    converged = False
    rejected = 0.0
    it = 0
    for it in range(1, options.max_iters + 1):
        upd = mmse_update(channel, layout, precoder, options.weight_rule)
        try:
            state = solve_subproblem(
                channel, layout, P, upd, mode,
                tol=options.subproblem_tol, max_residual=options.max_residual, start=precoder,
            )
        except SubproblemError as exc:
            raise AoError(f"iteration {it}: {exc}", trace, precoder) from exc
        if trace and state.rate_floor < trace[-1]:
            rejected = trace[-1] - state.rate_floor
            converged = True
            break
        precoder = state.precoder
        trace.append(state.rate_floor)
        if len(trace) >= 2 and trace[-1] - trace[-2] < options.tol:
            converged = True
            break
    precoder, report = finalize(channel, layout, precoder, mode)
    return AoResult(mode, precoder, report, tuple(trace), len(trace), converged,
                    rejected_drop=rejected)


def ao_solve(
    channel: ChannelSet,
    layout: GroupLayout,
    P: float,
    mode: Mode = Mode.RS,
    options: Optional[AoOptions] = None,
    warm_starts: Sequence[RsPrecoder] = (),
) -> AoResult:
    """Best-of-restarts alternating optimization.

    Starts are the deterministic default, ``options.restarts - 1`` random
    starts seeded by ``options.seed``, then every precoder in
    ``warm_starts`` (projected onto the variables ``mode`` allows).  The
    result with the highest max-min rate is returned; ties go to the
    earlier start.
    """
    mode = Mode(mode)
    options = options or AoOptions()
    channel.check_layout(layout)
    rng = np.random.default_rng(options.seed)
    inits = [initial_precoder(channel, layout, P, mode, options.common_fraction)]
    inits += [
        initial_precoder(channel, layout, P, mode, options.common_fraction, rng)
        for _ in range(options.restarts - 1)
    ]
    inits += list(warm_starts)
    best: Optional[AoResult] = None
    results = []
    for i, init in enumerate(inits):
        res = ao_run(channel, layout, P, mode, init, options)
        results.append(res.mmf)
        if best is None or res.mmf > best.mmf:
            best = AoResult(res.mode, res.precoder, res.report, res.trace, res.iterations,
                            res.converged, start=i, rejected_drop=res.rejected_drop)
    log.debug("ao_solve %s: start rates %s, picked %d", mode.value, results, best.start)
    return AoResult(best.mode, best.precoder, best.report, best.trace, best.iterations,
                    best.converged, start=best.start, rejected_drop=best.rejected_drop,
                    starts=tuple(results))
