"""Strong convergence in time and space for the stochastic Allen-Cahn equation.

The desk presets use 100 samples and take several minutes each.  By default
this script runs 10 samples so it finishes quickly; pass a sample count on
the command line for the full study, e.g. ``python 04_convergence_study.py 100``.
Expect temporal orders near 1/2 and spatial orders near 2.
"""

import sys

from randspde import convergence_table
from randspde.presets import space_desk, time_desk

samples = int(sys.argv[1]) if len(sys.argv) > 1 else 10

for name, make in (("time", time_desk), ("space", space_desk)):
    cfg = make("half_one_minus_sq", samples=samples)
    res = convergence_table(cfg)
    print(f"\n{name} study, G(u) = (1 - u^2)/2, {samples} samples "
          f"({res.meta['wall_time_s']:.0f} s, padding M = {res.config.padding}, J = {res.config.J})")
    print(res.table.format())
    print(f"mean order {res.table.mean_order:.2f}")
