"""Acceptance gate: nine end-to-end criteria at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line; the lines are also
repeated in the pytest terminal summary (see ``conftest.py``).  Running the
file directly executes all criteria without pytest.
"""

import time
from fractions import Fraction as F

import numpy as np
import pytest

from rsmmf import dof
from rsmmf.harness import ExperimentConfig, run_contributions, run_dof_check, run_sweep
from rsmmf.model import ChannelSet, GroupLayout, RsPrecoder, rates_designated, rates_rs, sample_channel, snr_db_to_power
from rsmmf.schemes import null_space_basis
from rsmmf.wmmse import Mode, ao_run, ao_solve, initial_precoder, mmse_update, wmse

RESULTS: list[str] = []


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def g123(N):
    return GroupLayout(N, (1, 2, 3))


@pytest.fixture(scope="module")
def sweep_n2():
    cfg = ExperimentConfig(g123(2), snr_db_list=(10, 20, 30, 40), realizations=20)
    return run_sweep(cfg)


@pytest.fixture(scope="module")
def sweep_n4():
    cfg = ExperimentConfig(g123(4), snr_db_list=(10, 20, 30), realizations=20)
    return cfg, run_sweep(cfg)


def test_c1_dof_table():
    t0 = time.perf_counter()
    got = {}
    for N in (2, 4, 6):
        r = dof.dof_report(g123(N))
        got[(1, 2, 3), N] = (r.designated, r.degraded, r.rs)
    for sizes in ((2, 2, 2), (2, 2, 2, 2)):
        r = dof.dof_report(GroupLayout(4, sizes))
        got[sizes, 4] = (r.designated, r.degraded, r.rs)
    expect = {
        ((1, 2, 3), 2): (0, F(1, 3), F(1, 3)),
        ((1, 2, 3), 4): (F(1, 2), F(1, 3), F(1, 2)),
        ((1, 2, 3), 6): (1, F(1, 3), 1),
        ((2, 2, 2), 4): (0, F(1, 3), F(1, 2)),
        ((2, 2, 2, 2), 4): (0, F(1, 4), F(1, 3)),
    }
    dt = time.perf_counter() - t0
    exact = all(isinstance(v, F) for vals in got.values() for v in vals)
    record(1, got == expect and exact and dt < 1.0, f"{len(expect)} layouts exact, {dt:.3f} s")


def _partitions(k, smallest=1):
    if k == 0:
        yield ()
        return
    for first in range(smallest, k + 1):
        for rest in _partitions(k - first, first):
            yield (first,) + rest


def test_c2_exhaustive_dof():
    t0 = time.perf_counter()
    n, bad = 0, []
    regimes = {1: dof.Regime.INTERFERENCE_FREE, F(1, 2): dof.Regime.PARTIALLY_OVERLOADED,
               0: dof.Regime.FULLY_OVERLOADED}
    for K in range(1, 9):
        for sizes in _partitions(K):
            for N in range(1, K + 3):
                lay = GroupLayout(N, sizes)
                r = dof.dof_report(lay)
                ok = (r.rs == dof.dof_rs_ladder(lay) and r.rs >= max(r.designated, r.degraded)
                      and r.regime is regimes[r.designated])
                n += 1
                if not ok:
                    bad.append((sizes, N))
    dt = time.perf_counter() - t0
    record(2, not bad and dt < 5.0, f"{n} layouts, {len(bad)} violations, {dt:.2f} s")


def test_c3_achievability_slopes():
    t0 = time.perf_counter()
    checks = [
        (g123(6), "zf_full", F(1)),
        (g123(4), "zf_partial", F(1, 2)),
        (g123(2), "degraded_superposition", F(1, 3)),
        (g123(4), "degraded_superposition", F(1, 3)),
        (g123(6), "degraded_superposition", F(1, 3)),
        (g123(2), "rs_partitioned", F(1, 3)),
        (g123(4), "rs_partitioned", F(1, 2)),
    ]
    details, ok = [], True
    for lay, strategy, theory in checks:
        (row,) = run_dof_check([lay], [strategy], seed=0, n_realizations=20)
        good = row.theory == theory and abs(row.measured - float(theory)) <= 0.1
        ok &= good
        details.append(f"{strategy}@N={lay.n_antennas}:{row.measured:.3f}/{theory}")
    dt = time.perf_counter() - t0
    record(3, ok and dt < 60.0, ", ".join(details) + f", {dt:.1f} s")


def test_c4_rate_wmmse_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(100):
        N = int(rng.integers(1, 7))
        sizes = tuple(sorted(int(g) for g in rng.integers(1, 4, size=int(rng.integers(1, 4)))))
        lay = GroupLayout(N, sizes)
        ch = sample_channel(lay, 10_000 + i, noise_variance=float(10 ** rng.uniform(-1, 1)))
        M = lay.n_groups
        P = 10 ** rng.uniform(-1, 4)
        x = rng.standard_normal((N, M + 1)) + 1j * rng.standard_normal((N, M + 1))
        x *= np.sqrt(P / np.sum(np.abs(x) ** 2))
        pre = RsPrecoder(x[:, 0], x[:, 1:], np.zeros(M))
        upd = mmse_update(ch, lay, pre)
        xi_c, xi = wmse(ch, lay, pre, upd.g_common, upd.g, upd.u_common, upd.u)
        rep = rates_rs(ch, lay, pre)
        worst = max(worst, np.max(np.abs(xi - (1 - rep.user_rates))),
                    np.max(np.abs(xi_c - (1 - rep.common_user_rates))))
    dt = time.perf_counter() - t0
    record(4, worst <= 1e-9 and dt < 5.0, f"max |xi - (1 - R)| = {worst:.1e}, {dt:.2f} s")


def test_c5_ao_correctness():
    modes = list(Mode)
    worst_drop, worst_verify, runs = 0.0, 0.0, 0
    for i, (N, snr, seed) in enumerate((N, snr, s) for N in (2, 4) for snr in (0, 10, 20, 30, 40) for s in range(5)):
        lay = g123(N)
        ch = sample_channel(lay, seed)
        P = snr_db_to_power(snr)
        mode = modes[i % 3]
        res = ao_run(ch, lay, P, mode, initial_precoder(ch, lay, P, mode))
        runs += 1
        if len(res.trace) > 1:
            worst_drop = max(worst_drop, float(-np.min(np.diff(res.trace))))
        recheck = (rates_designated if mode is Mode.DESIGNATED else rates_rs)(ch, lay, res.precoder)
        worst_verify = max(worst_verify, abs(recheck.mmf - res.mmf))
    h = np.array([[0.6 + 0.8j], [0.3 - 0.1j]])
    awgn = ao_solve(ChannelSet(h), GroupLayout(2, (1,)), 40.0, Mode.RS)
    target = np.log2(1 + 40.0 * np.sum(np.abs(h) ** 2))
    awgn_err = abs(awgn.mmf - target)
    ok = runs == 50 and worst_drop <= 1e-8 and worst_verify <= 1e-6 and awgn_err <= 1e-4
    record(5, ok, f"{runs} runs, max trace drop {max(worst_drop, 0.0):.1e}, "
                  f"max re-verify error {worst_verify:.1e}, AWGN error {awgn_err:.1e}")


def _dominance(sweep):
    worst = np.inf
    for snr in (10, 20, 30):
        rs = [r.mmf for r in sweep.reports("rs", snr)]
        for other in ("designated", "degraded_ss"):
            base = [r.mmf for r in sweep.reports(other, snr)]
            worst = min(worst, min(a - b for a, b in zip(rs, base)))
    return worst


def test_c6_dominance(sweep_n2, sweep_n4):
    fails = len(sweep_n2.failures()) + len(sweep_n4[1].failures())
    w2, w4 = _dominance(sweep_n2), _dominance(sweep_n4[1])
    ok = fails == 0 and min(w2, w4) >= -1e-6
    record(6, ok, f"min RS margin N=2 {w2:.2e}, N=4 {w4:.2e}, {fails} failed cells")


def test_c7_saturation(sweep_n2):
    des = sweep_n2.cell("designated", 40).mean_mmf - sweep_n2.cell("designated", 30).mean_mmf
    rs = sweep_n2.cell("rs", 40).mean_mmf - sweep_n2.cell("rs", 30).mean_mmf
    record(7, des < 0.25 and rs > 1.0, f"30->40 dB gain designated {des:.3f}, RS {rs:.3f} bits/s/Hz")


def test_c8_contributions(sweep_n4):
    cfg, sweep = sweep_n4
    rows = run_contributions(cfg, sweep)
    rs20 = [r for r in rows if r.strategy == "rs" and r.snr_db == 20]
    accounting = max(r.max_accounting_error for r in rows)
    g3 = next(r for r in rs20 if r.group_index == 2)
    ok = accounting <= 1e-12 and g3.realizations == 20 and g3.designated_positive >= 15
    record(8, ok, f"max |C + D - r| = {accounting:.1e}, group 3 designated > 0 in "
                  f"{g3.designated_positive}/{g3.realizations} at 20 dB")


def test_c9_null_space():
    rng = np.random.default_rng(9)
    bad, worst = 0, 0.0
    for _ in range(1000):
        N, c = int(rng.integers(1, 17)), int(rng.integers(1, 21))
        A = rng.standard_normal((N, c)) + 1j * rng.standard_normal((N, c))
        B = null_space_basis(A)
        if B.shape != (N, max(N - c, 0)):
            bad += 1
            continue
        if B.shape[1]:
            res = max(np.linalg.norm(A.conj().T @ B) / np.linalg.norm(A),
                      np.linalg.norm(B.conj().T @ B - np.eye(B.shape[1])))
            worst = max(worst, res)
    record(9, bad == 0 and worst <= 1e-10, f"1000 pairs, {bad} wrong dimensions, max residual {worst:.1e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
