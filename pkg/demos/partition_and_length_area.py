"""
Rectangles, square-root branches and the length-area comparison
================================================================

Cut a square into rectangles with a corner at the zero of H, pick an arbitrary
branch of sqrt(H) on each, and the Jacobian integrals of sqrt(H)*eta still sum
to zero.  Then compare H-lengths and H-areas on a ring of closed trajectories.
"""

import math

import numpy as np

from innervar import partition as part
from innervar import quad_diff as q
from innervar.domain import PlanarDomain
from innervar.field import build_grid
from innervar.testfunc import bump

D = PlanarDomain.disk(0, 1.0)
K = PlanarDomain.rectangle(-0.5, -0.5, 0.5, 0.5)
P = part.build_partition(D, K, [0j], 0.1)
eta = bump(0.1 + 0.05j, 0.3, 1 + 0.5j)
rng = np.random.default_rng(0)
for name, H, dH in [("z", lambda z: z, lambda z: np.ones_like(z)),
                    ("z^2", lambda z: z ** 2, lambda z: 2 * z)]:
    for _ in range(2):
        br = part.assign_branches(P, H, rng=rng)
        rep = part.jacobian_sum_check(P, H, eta, dH, br)
        print(f"H = {name:3s}  {len(P)} rectangles  sum J = {rep.total:+.2e}  "
              f"(relative {rep.relative:.1e}, {int(np.sum(br.signs < 0))} flipped)")

# length-area on the ring of trajectories 0.3 < r < 0.9 around +1
qd = q.leminiscate()
ring = q.leminiscate_ring(0.3, 0.9)
g = build_grid(ring, 192)
w = bump(1.25, 0.08)
eps = 0.02
trajs = [q.trace_vertical(qd, complex(math.sqrt(1 + r * r))) for r in np.linspace(0.35, 0.85, 6)]
G = q.distortion_weight(qd, w, eps)
rep = q.length_area_check(qd, trajs, lambda z: np.ones(np.shape(z)), G, g)
for line in rep.lines:
    print(f"  loop {line['index']}: H-length {line['line_f']:.6f} -> image {line['line_g']:.6f}")
print(f"area: {rep.area_f:.5f} <= {rep.area_g:.5f}  (pi ln 3 = {math.pi * math.log(3):.5f})")
