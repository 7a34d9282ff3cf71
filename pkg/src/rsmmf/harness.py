"""Seeded Monte-Carlo experiments over SNR, strategies and layouts.

Realization ``r`` of a sweep draws its channel with seed ``base_seed + r``
and every strategy is evaluated on that same channel, so comparisons between
strategies are paired.  Results are reduced in realization order, which keeps
CSV output byte-identical for identical configurations.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import dof
from .model import GroupLayout, RateReport, RsPrecoder, sample_channel, snr_db_to_power
from .schemes import (
    InfeasibleSchemeError,
    SchemeKind,
    SchemeSpec,
    build_matched_filter,
    build_scheme,
    empirical_dof_slope,
    evaluate_scheme,
    scheme_dof,
)
from .wmmse import AoOptions, Mode, ao_solve

__all__ = [
    "OPTIMIZED",
    "CONSTRUCTIVE",
    "STRATEGIES",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "CellOutcome",
    "CellSummary",
    "SweepResult",
    "ContributionRow",
    "DofCheckRow",
    "run_realization",
    "run_sweep",
    "run_contributions",
    "run_dof_check",
    "write_rows",
]

log = logging.getLogger(__name__)

OPTIMIZED = {"designated": Mode.DESIGNATED, "degraded_ss": Mode.DEGRADED, "rs": Mode.RS}
CONSTRUCTIVE = ("zf_full", "zf_partial", "degraded_superposition", "rs_partitioned")
STRATEGIES = tuple(OPTIMIZED) + CONSTRUCTIVE

CSV_COLUMNS = (
    "strategy",
    "snr_db",
    "mean_mmf_bps_hz",
    "stderr",
    "group_index",
    "mean_group_rate",
    "mean_common_share",
    "mean_designated_part",
    "failures",
)

# a designated part counts as contributing above this rate (bits/s/Hz)
POSITIVE_RATE = 1e-3

DOF_CHECK_SNR_DB = (30.0, 40.0, 50.0)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".12g")
    return str(x)


def write_rows(rows: Sequence[Sequence], header: Sequence[str], path=None) -> str:
    """Write a UTF-8 CSV with a header row; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a layout, SNR grid, strategies and solver controls.

    ``solver_opts.seed`` is ignored; each realization seeds its restarts
    with its channel seed.
    """

    layout: GroupLayout
    snr_db_list: tuple[float, ...]
    realizations: int = 100
    base_seed: int = 0
    strategies: tuple[str, ...] = ("designated", "degraded_ss", "rs")
    solver_opts: AoOptions = field(default_factory=AoOptions)
    output_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not self.snr_db_list:
            raise ValueError("snr_db_list must not be empty")
        if not self.strategies:
            raise ValueError("strategies must not be empty")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown:
            raise ValueError(f"unknown strategies {unknown}; choose from {list(STRATEGIES)}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValueError("strategies must be distinct")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        lay = d.pop("layout")
        layout = GroupLayout(int(lay["n_antennas"]), tuple(int(g) for g in lay["group_sizes"]))
        opts = AoOptions(**d.pop("solver_opts", {}))
        return cls(layout=layout, solver_opts=opts, **d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "layout": {
                "n_antennas": self.layout.n_antennas,
                "group_sizes": list(self.layout.group_sizes),
            },
            "snr_db_list": list(self.snr_db_list),
            "realizations": self.realizations,
            "base_seed": self.base_seed,
            "strategies": list(self.strategies),
            "solver_opts": asdict(self.solver_opts),
            "output_path": self.output_path,
            "workers": self.workers,
        }


@dataclass(frozen=True)
class CellOutcome:
    """One (strategy, SNR, realization) evaluation."""

    report: Optional[RateReport]
    precoder: Optional[object] = None
    iterations: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _optimize(channel, layout, P, mode, opts, warm, prev, prev_P) -> tuple[CellOutcome, Optional[RsPrecoder]]:
    starts = list(warm)
    if prev is not None:
        # continuation from the previous SNR point
        starts.append(prev.scaled(math.sqrt(P / prev_P)))
    try:
        res = ao_solve(channel, layout, P, mode, opts, warm_starts=starts)
    except Exception as exc:  # recorded per cell; the sweep continues
        log.warning("%s at P=%g failed: %s", mode.value, P, exc)
        return CellOutcome(None, error=f"{type(exc).__name__}: {exc}"), None
    return CellOutcome(res.report, res.precoder, res.iterations), res.precoder


def run_realization(config: ExperimentConfig, r: int) -> dict[str, tuple[CellOutcome, ...]]:
    """Evaluate every strategy at every SNR on realization ``r``.

    RS is warm-started from the designated and degraded single-stream
    solutions at the same SNR (computed even when those strategies are not
    requested), and every optimized strategy also from its own solution at
    the previous SNR of the list.
    """
    layout = config.layout
    seed = config.base_seed + r
    channel = sample_channel(layout, seed)
    opts = replace(config.solver_opts, seed=seed)
    wanted = set(config.strategies)
    needed = [s for s in OPTIMIZED if s in wanted or ("rs" in wanted and s != "rs")]
    cells: dict[str, list[CellOutcome]] = {s: [] for s in config.strategies}
    prev: dict[str, Optional[RsPrecoder]] = {s: None for s in OPTIMIZED}
    prev_P = None
    for snr in config.snr_db_list:
        P = snr_db_to_power(snr)
        solved: dict[str, CellOutcome] = {}
        for name in needed:
            warm = []
            if name == "rs":
                warm = [solved[s].precoder for s in ("designated", "degraded_ss") if solved[s].ok]
            solved[name], prev[name] = _optimize(
                channel, layout, P, OPTIMIZED[name], opts, warm, prev[name], prev_P
            )
        prev_P = P
        for name in config.strategies:
            if name in OPTIMIZED:
                cells[name].append(solved[name])
                continue
            try:
                out = build_scheme(SchemeSpec(SchemeKind(name), seed=seed), channel, layout, P)
                cells[name].append(CellOutcome(evaluate_scheme(channel, layout, out), out))
            except InfeasibleSchemeError as exc:
                cells[name].append(CellOutcome(None, error=f"{type(exc).__name__}: {exc}"))
    return {s: tuple(v) for s, v in cells.items()}


@dataclass(frozen=True)
class CellSummary:
    """Realization averages for one (strategy, SNR) cell; failures excluded."""

    strategy: str
    snr_db: float
    mean_mmf: float
    stderr: float
    group_rates: np.ndarray
    common_shares: np.ndarray
    designated_parts: np.ndarray
    mean_iterations: float
    failures: int

    @classmethod
    def from_outcomes(cls, strategy, snr_db, outcomes: Sequence[CellOutcome], n_groups: int):
        ok = [o for o in outcomes if o.ok]
        if not ok:
            nan = np.full(n_groups, np.nan)
            return cls(strategy, snr_db, math.nan, math.nan, nan, nan, nan, math.nan, len(outcomes))
        mmf = np.array([o.report.mmf for o in ok])
        stderr = float(mmf.std(ddof=1) / math.sqrt(len(mmf))) if len(mmf) > 1 else 0.0
        return cls(
            strategy,
            snr_db,
            float(mmf.mean()),
            stderr,
            np.mean([o.report.group_rates for o in ok], axis=0),
            np.mean([o.report.common_shares for o in ok], axis=0),
            np.mean([o.report.designated_parts for o in ok], axis=0),
            float(np.mean([o.iterations for o in ok])),
            len(outcomes) - len(ok),
        )


@dataclass(frozen=True)
class SweepResult:
    """Per-cell summaries plus every per-realization outcome.

    ``outcomes[strategy][i]`` lists the realizations at ``snr_db_list[i]``.
    """

    config: ExperimentConfig
    cells: tuple[CellSummary, ...]
    outcomes: dict

    def cell(self, strategy: str, snr_db: float) -> CellSummary:
        for c in self.cells:
            if c.strategy == strategy and c.snr_db == float(snr_db):
                return c
        raise KeyError((strategy, snr_db))

    def reports(self, strategy: str, snr_db: float) -> list[Optional[RateReport]]:
        i = self.config.snr_db_list.index(float(snr_db))
        return [o.report for o in self.outcomes[strategy][i]]

    def failures(self) -> list[tuple[str, float, int, str]]:
        """``(strategy, snr_db, realization, message)`` for every failed cell."""
        out = []
        for s in self.config.strategies:
            for i, snr in enumerate(self.config.snr_db_list):
                for r, o in enumerate(self.outcomes[s][i]):
                    if not o.ok:
                        out.append((s, snr, r, o.error))
        return out

    def rows(self) -> list[tuple]:
        rows = []
        for c in self.cells:
            for m in range(len(c.group_rates)):
                rows.append((
                    c.strategy, c.snr_db, c.mean_mmf, c.stderr, m, float(c.group_rates[m]),
                    float(c.common_shares[m]), float(c.designated_parts[m]), c.failures,
                ))
        return rows

    def to_csv(self, path=None) -> str:
        return write_rows(self.rows(), CSV_COLUMNS, path)


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Run all realizations and aggregate; writes ``config.output_path`` if set."""
    R = config.realizations
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_real = list(pool.map(run_realization, [config] * R, range(R)))
    else:
        per_real = [run_realization(config, r) for r in range(R)]
    outcomes = {
        s: tuple(tuple(per_real[r][s][i] for r in range(R)) for i in range(len(config.snr_db_list)))
        for s in config.strategies
    }
    M = config.layout.n_groups
    cells = tuple(
        CellSummary.from_outcomes(s, snr, outcomes[s][i], M)
        for s in config.strategies
        for i, snr in enumerate(config.snr_db_list)
    )
    result = SweepResult(config, cells, outcomes)
    if config.output_path:
        result.to_csv(config.output_path)
    return result


CONTRIBUTION_COLUMNS = (
    "strategy",
    "snr_db",
    "group_index",
    "mean_common_share",
    "mean_designated_part",
    "mean_group_rate",
    "max_accounting_error",
    "designated_positive",
    "realizations",
)


@dataclass(frozen=True)
class ContributionRow:
    """Common/designated split of one group's rate, averaged over realizations.

    ``designated_positive`` counts realizations whose designated part exceeds
    :data:`POSITIVE_RATE`; ``max_accounting_error`` is the largest
    ``|C_m + designated_m - r_m|`` over the individual solutions.
    """

    strategy: str
    snr_db: float
    group_index: int
    mean_common_share: float
    mean_designated_part: float
    mean_group_rate: float
    max_accounting_error: float
    designated_positive: int
    realizations: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in CONTRIBUTION_COLUMNS)


def run_contributions(config: ExperimentConfig, sweep: Optional[SweepResult] = None) -> list[ContributionRow]:
    """Per-group common and designated contributions for each optimized strategy.

    Runs the sweep unless a finished one for the same config is passed.
    """
    if "rs" not in config.strategies:
        raise ValueError("contributions need 'rs' among the strategies")
    if sweep is None:
        sweep = run_sweep(config)
    rows = []
    for s in config.strategies:
        if s not in OPTIMIZED:
            continue
        for snr in config.snr_db_list:
            reports = [rep for rep in sweep.reports(s, snr) if rep is not None]
            if not reports:
                continue
            C = np.array([rep.common_shares for rep in reports])
            D = np.array([rep.designated_parts for rep in reports])
            G = np.array([rep.group_rates for rep in reports])
            err = np.abs(C + D - G).max(axis=0)
            for m in range(config.layout.n_groups):
                rows.append(ContributionRow(
                    s, snr, m, float(C[:, m].mean()), float(D[:, m].mean()),
                    float(G[:, m].mean()), float(err[m]), int(np.sum(D[:, m] > POSITIVE_RATE)),
                    len(reports),
                ))
    return rows


DOF_CHECK_COLUMNS = (
    "group_sizes", "n_antennas", "strategy", "scheme", "theory", "theory_value", "measured",
    "flagged", "note",
)


@dataclass(frozen=True)
class DofCheckRow:
    group_sizes: tuple[int, ...]
    n_antennas: int
    strategy: str
    scheme: str
    theory: Fraction
    measured: float
    flagged: bool
    note: str = ""

    def as_tuple(self) -> tuple:
        return (
            " ".join(map(str, self.group_sizes)), self.n_antennas, self.strategy, self.scheme,
            str(self.theory), float(self.theory), self.measured, int(self.flagged), self.note,
        )


def _dof_scheme(strategy: str, layout: GroupLayout):
    """Constructive builder and theory DoF standing in for ``strategy``."""
    if strategy == "designated":
        regime = dof.classify_regime(layout)
        if regime is dof.Regime.INTERFERENCE_FREE:
            strategy = "zf_full"
        elif regime is dof.Regime.PARTIALLY_OVERLOADED:
            strategy = "zf_partial"
        else:
            return "matched_filter", build_matched_filter, dof.dof_designated(layout)
    elif strategy == "degraded_ss":
        strategy = SchemeKind.SINGLE_STREAM.value
    elif strategy == "rs":
        strategy = "rs_partitioned"
    spec = SchemeSpec(SchemeKind(strategy))

    def builder(channel, lay, P):
        return build_scheme(spec, channel, lay, P)

    return strategy, builder, scheme_dof(spec, layout)


def run_dof_check(
    layouts: Sequence[GroupLayout],
    strategies: Sequence[str] = ("designated", "degraded_ss", "rs"),
    seed: int = 0,
    n_realizations: int = 20,
    snr_db: Sequence[float] = DOF_CHECK_SNR_DB,
    tolerance: float = 0.1,
) -> list[DofCheckRow]:
    """Closed-form DoF against the measured high-SNR slope of a constructive scheme.

    Optimized strategies map to the scheme attaining their DoF: designated
    to ZF (full or partial by regime, matched filter when fully
    overloaded), degraded_ss to the single-stream scheme and rs to the
    partitioned RS scheme.  Rows whose scheme is infeasible on the layout
    are flagged with a note.
    """
    rows = []
    for layout in layouts:
        for strategy in strategies:
            if strategy not in STRATEGIES:
                raise ValueError(f"unknown strategy {strategy!r}")
            scheme, builder, theory = _dof_scheme(strategy, layout)
            try:
                measured = empirical_dof_slope(builder, layout, seed, snr_db, n_realizations=n_realizations)
            except InfeasibleSchemeError as exc:
                rows.append(DofCheckRow(layout.group_sizes, layout.n_antennas, strategy, scheme,
                                        theory, math.nan, True, f"infeasible: {exc}"))
                continue
            flagged = abs(float(theory) - measured) > tolerance
            rows.append(DofCheckRow(layout.group_sizes, layout.n_antennas, strategy, scheme,
                                    theory, measured, flagged))
    return rows
