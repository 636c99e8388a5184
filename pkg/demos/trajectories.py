"""
Vertical trajectories of the leminiscate differential
======================================================

(z/(1-z^2))^2 dz^2 has closed vertical trajectories z(t) = sqrt(1 + r^2 e^{4it})
around each pole, all of H-length pi.  Past r = 1 they wrap both poles.
Writes ``leminiscate.svg`` into the directory given on the command line.
"""

import math
import sys
from pathlib import Path

import numpy as np

from innervar import io as rio
from innervar import quad_diff as q
from innervar.domain import PlanarDomain

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
out.mkdir(parents=True, exist_ok=True)

qd = q.leminiscate()
trajs = []
for r in (0.2, 0.4, 0.6, 0.8, 0.95, 1.05, 1.2):
    for s in (1, -1):
        if r > 1 and s < 0:
            continue
        tr = q.trace_vertical(qd, s * complex(math.sqrt(1 + r * r)))
        trajs.append(tr)
        print(f"r={r:4.2f} seed {s * math.sqrt(1 + r * r):+.4f}: {tr.kind:8s} "
              f"H-length {tr.h_length:.6f}  verticality {q.verticality_residual(qd, tr):.1e}")

(out / "leminiscate.svg").write_text(
    rio.trajectories_svg(trajs, critical=qd.critical_points, box=(-1.7, -1.0, 1.7, 1.0)))

# a larger catalog member: four double poles, every sampled trajectory closes or exits
fp = q.four_pole()
dom = PlanarDomain.disk(0, 6)
for p, _ in fp.poles:
    dom = dom - PlanarDomain.disk(p, 0.05)
seeds = [1 + 0.5j, -2.5 + 1j, 3.5 + 0.3j, 0.5 + 3j, -5 + 0.5j, 2 + 4j]
dec = q.classify_configuration(fp, dom, seeds)
print()
print("four-pole counts:", dec.counts, " Strebel type on the sample:", dec.strebel_type)
(out / "four_pole.svg").write_text(rio.trajectories_svg(dec.trajectories, dom, fp.critical_points))
