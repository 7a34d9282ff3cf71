"""Closed-form degrees of freedom across antenna counts.

Sweeps N for a few group layouts and prints the max-min fair DoF of
designated beamforming, the degraded single stream and rate-splitting,
together with the regime label.  RS keeps a positive DoF when designated
beamforming collapses to zero.
"""

from rsmmf.dof import dof_report
from rsmmf.model import GroupLayout

for sizes in [(1, 2, 3), (2, 2, 2), (2, 2, 2, 2)]:
    print(f"group sizes {sizes}")
    print(f"  {'N':>2}  {'designated':>10}  {'degraded':>8}  {'rs':>4}  regime")
    for N in range(1, sum(sizes) + 2):
        r = dof_report(GroupLayout(N, sizes))
        print(f"  {N:>2}  {str(r.designated):>10}  {str(r.degraded):>8}  {str(r.rs):>4}  {r.regime.value}")
    print()
