"""Command-line entry point: ``rsmmf {sweep,contributions,dof-check,dof}``.

Exit status is 0 on success and 1 when any cell failed (sweeps) or any
row was flagged (dof-check); failures are listed on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from . import dof
from .harness import (
    CONTRIBUTION_COLUMNS,
    DOF_CHECK_COLUMNS,
    DOF_CHECK_SNR_DB,
    STRATEGIES,
    ExperimentConfig,
    run_contributions,
    run_dof_check,
    run_sweep,
    write_rows,
)
from .model import GroupLayout


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _names(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in STRATEGIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown strategies {bad}; choose from {list(STRATEGIES)}")
    return names


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--snr", type=_floats, help="comma-separated SNR list in dB")
    p.add_argument("--realizations", type=int)
    p.add_argument("--strategy", type=_names, help="comma-separated strategies")
    p.add_argument("--groups", type=_ints, help="comma-separated group sizes")
    p.add_argument("--antennas", type=_ints, help="antenna count (list for dof/dof-check)")


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        if not args.groups or not args.antennas:
            raise SystemExit("either --config or both --groups and --antennas are required")
        cfg = ExperimentConfig(
            GroupLayout(args.antennas[0], tuple(args.groups)),
            snr_db_list=(0.0, 10.0, 20.0, 30.0),
            realizations=20,
        )
    changes = {}
    if args.groups and args.antennas and args.config:
        changes["layout"] = GroupLayout(args.antennas[0], tuple(args.groups))
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.snr:
        changes["snr_db_list"] = tuple(args.snr)
    if args.realizations is not None:
        changes["realizations"] = args.realizations
    if args.strategy:
        changes["strategies"] = tuple(args.strategy)
    if args.out:
        changes["output_path"] = args.out
    return replace(cfg, **changes) if changes else cfg


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)


def _report_failures(failures) -> int:
    for strategy, snr, r, msg in failures:
        print(f"failed: strategy={strategy} snr_db={snr:g} realization={r}: {msg}", file=sys.stderr)
    return 1 if failures else 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    result = run_sweep(cfg)
    _emit(result.to_csv(cfg.output_path), cfg.output_path)
    return _report_failures(result.failures())


def cmd_contributions(args) -> int:
    cfg = _config(args)
    out, cfg = cfg.output_path, replace(cfg, output_path=None)
    sweep = run_sweep(cfg)
    rows = run_contributions(cfg, sweep)
    _emit(write_rows([r.as_tuple() for r in rows], CONTRIBUTION_COLUMNS, out), out)
    return _report_failures(sweep.failures())


def _layouts(args) -> list[GroupLayout]:
    if args.config and not args.groups:
        base = ExperimentConfig.load(args.config).layout
        antennas = args.antennas or [base.n_antennas]
        return [base.with_antennas(n) for n in antennas]
    if not args.groups or not args.antennas:
        raise SystemExit("--groups and --antennas (or --config) are required")
    return [GroupLayout(n, tuple(args.groups)) for n in args.antennas]


def cmd_dof_check(args) -> int:
    strategies = args.strategy or ["designated", "degraded_ss", "rs"]
    rows = run_dof_check(
        _layouts(args),
        strategies,
        seed=args.seed or 0,
        n_realizations=args.realizations or 20,
        snr_db=args.snr or DOF_CHECK_SNR_DB,
    )
    _emit(write_rows([r.as_tuple() for r in rows], DOF_CHECK_COLUMNS, args.out), args.out)
    flagged = [r for r in rows if r.flagged]
    for r in flagged:
        print(f"flagged: groups={r.group_sizes} N={r.n_antennas} {r.strategy}: theory {r.theory}, "
              f"measured {r.measured:.3f} {r.note}", file=sys.stderr)
    return 1 if flagged else 0


def cmd_dof(args) -> int:
    rows = []
    for layout in _layouts(args):
        rep = dof.dof_report(layout)
        rows.append((
            " ".join(map(str, layout.group_sizes)), layout.n_antennas, str(rep.designated),
            str(rep.degraded), str(rep.rs), rep.m_d_star, rep.regime.value,
        ))
    header = ("group_sizes", "n_antennas", "designated", "degraded", "rs", "m_d_star", "regime")
    _emit(write_rows(rows, header, args.out), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsmmf", description="Max-min fair multigroup multicast beamforming")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("sweep", cmd_sweep, "Monte-Carlo MMF rate sweep over SNR"),
        ("contributions", cmd_contributions, "per-group common/designated rate split"),
        ("dof-check", cmd_dof_check, "closed-form DoF against measured slopes"),
        ("dof", cmd_dof, "closed-form DoF only"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.set_defaults(func=fn)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
