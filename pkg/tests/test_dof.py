from fractions import Fraction

import pytest

from rsmmf.dof import (
    Regime,
    classify_regime,
    dof_degraded,
    dof_designated,
    dof_report,
    dof_rs,
    dof_rs_ladder,
    m_d_star,
    min_interfered_groups,
    n_l,
)
from rsmmf.model import GroupLayout


def lay(N, *sizes):
    return GroupLayout(N, tuple(sizes))


def sorted_partitions(k, smallest=1):
    """Non-decreasing positive size vectors summing to k."""
    if k == 0:
        yield ()
        return
    for first in range(smallest, k + 1):
        for rest in sorted_partitions(k - first, first):
            yield (first,) + rest


def all_layouts(max_users=8, extra_antennas=2):
    for K in range(1, max_users + 1):
        for sizes in sorted_partitions(K):
            for N in range(1, K + extra_antennas + 1):
                yield GroupLayout(N, sizes)


def test_partition_enumeration_counts():
    # partition numbers p(1..8)
    assert [sum(1 for _ in sorted_partitions(k)) for k in range(1, 9)] == [1, 2, 3, 5, 7, 11, 15, 22]


@pytest.mark.parametrize("sizes, L, expect", [((1, 2, 3), 1, 1), ((1, 2, 3), 3, 6), ((2, 2, 2), 2, 3)])
def test_n_l(sizes, L, expect):
    assert n_l(lay(1, *sizes), L) == expect


@pytest.mark.parametrize("L", [0, 4])
def test_n_l_out_of_range(L):
    with pytest.raises(ValueError):
        n_l(lay(1, 1, 2, 3), L)


@pytest.mark.parametrize("N, sizes, expect", [
    (6, (1, 2, 3), Fraction(1)),
    (4, (1, 2, 3), Fraction(1, 2)),
    (4, (2, 2, 2), Fraction(0)),
    (2, (1, 2, 3), Fraction(0)),
])
def test_dof_designated(N, sizes, expect):
    assert dof_designated(lay(N, *sizes)) == expect


@pytest.mark.parametrize("sizes, expect", [((1, 2, 3), Fraction(1, 3)), ((5,), Fraction(1)), ((2, 2, 2, 2), Fraction(1, 4))])
def test_dof_degraded(sizes, expect):
    for N in (1, 3, 10):
        assert dof_degraded(lay(N, *sizes)) == expect


@pytest.mark.parametrize("N, expect", [(4, 2), (2, 1), (6, 3), (9, 3)])
def test_m_d_star(N, expect):
    assert m_d_star(lay(N, 1, 2, 3)) == expect


@pytest.mark.parametrize("N, sizes, expect", [
    (2, (1, 2, 3), Fraction(1, 3)),
    (4, (2, 2, 2), Fraction(1, 2)),
    (4, (2, 2, 2, 2), Fraction(1, 3)),
    (4, (1, 2, 3), Fraction(1, 2)),
    (6, (1, 2, 3), Fraction(1)),
])
def test_dof_rs(N, sizes, expect):
    layout = lay(N, *sizes)
    assert dof_rs(layout) == expect
    assert dof_rs_ladder(layout) == expect


@pytest.mark.parametrize("N, m, expect", [(4, 0, 1), (4, 2, 0), (4, 1, 0), (2, 0, 2), (2, 1, 1), (2, 2, 1)])
def test_min_interfered_groups(N, m, expect):
    assert min_interfered_groups(lay(N, 1, 2, 3), m) == expect


def test_min_interfered_groups_interference_free_and_range():
    layout = lay(6, 1, 2, 3)
    assert [min_interfered_groups(layout, m) for m in range(3)] == [0, 0, 0]
    with pytest.raises(ValueError):
        min_interfered_groups(layout, 3)


@pytest.mark.parametrize("N, regime", [
    (6, Regime.INTERFERENCE_FREE),
    (4, Regime.PARTIALLY_OVERLOADED),
    (2, Regime.FULLY_OVERLOADED),
])
def test_classify_regime(N, regime):
    assert classify_regime(lay(N, 1, 2, 3)) is regime


def test_single_group_always_full_dof():
    for N in range(1, 5):
        r = dof_report(lay(N, 3))
        assert r.m_d_star == 1 and r.rs == 1 and r.designated == 1


def test_equal_groups_designated_collapses():
    # with equal sizes N_{M-1} + G_1 = N_M, so there is no 1/2 branch
    layout = lay(1, 2, 2, 2)
    values = [dof_designated(layout.with_antennas(N)) for N in range(1, 9)]
    assert values == [0, 0, 0, 0, 1, 1, 1, 1]  # N_M = 5


def test_rs_half_at_n_m_minus_one():
    # at N = N_{M-1} designated has nothing, RS gets 1/2
    for sizes in [(1, 2, 3), (2, 3, 3, 4), (1, 1, 1, 5)]:
        base = lay(1, *sizes)
        M = len(sizes)
        layout = base.with_antennas(n_l(base, M - 1))
        assert dof_designated(layout) == 0
        assert dof_rs(layout) == Fraction(1, 2) > dof_degraded(layout)


def test_report_fields():
    r = dof_report(lay(4, 1, 2, 3))
    assert (r.designated, r.degraded, r.rs, r.m_d_star, r.m_c_star) == (
        Fraction(1, 2), Fraction(1, 3), Fraction(1, 2), 2, 1)
    assert r.regime is Regime.PARTIALLY_OVERLOADED


def oracle_rs(sizes, N):
    """RS DoF by brute force: serve the largest feasible prefix of groups."""
    M = len(sizes)
    best = Fraction(0)
    for L in range(1, M + 1):
        if N >= 1 + sum(sizes[1:L]):
            best = max(best, Fraction(1, 1 + M - L))
    return best


def oracle_designated(sizes, N):
    M, K = len(sizes), sum(sizes)
    if N >= 1 + K - sizes[0]:
        return Fraction(1)
    if M >= 2 and N >= 1 + sum(sizes[1:M - 1]) + sizes[0]:
        return Fraction(1, 2)
    return Fraction(0)


def test_exhaustive_small_layouts():
    count = 0
    for layout in all_layouts():
        sizes, N = layout.group_sizes, layout.n_antennas
        r = dof_report(layout)
        assert isinstance(r.rs, Fraction)
        assert r.rs == dof_rs_ladder(layout) == oracle_rs(sizes, N)
        assert r.designated == oracle_designated(sizes, N)
        assert r.rs >= max(r.designated, r.degraded)
        assert all(0 <= v <= 1 for v in (r.designated, r.degraded, r.rs))
        if N >= n_l(layout, layout.n_groups):
            assert r.rs == r.designated == 1
        assert r.regime is {1: Regime.INTERFERENCE_FREE, Fraction(1, 2): Regime.PARTIALLY_OVERLOADED,
                            0: Regime.FULLY_OVERLOADED}[r.designated]
        assert 1 <= r.m_d_star <= layout.n_groups
        count += 1
    assert count == sum(sum(1 for _ in sorted_partitions(K)) * (K + 2) for K in range(1, 9))
