"""
Inner variations and the energy expansion
=========================================

Compose a map with the inverse of xi -> xi + eps*eta and watch the energy as
eps moves through the admissible range.  A Hopf-harmonic map has no linear
term; |z|^2 has one.
"""

import numpy as np

from innervar import gallery, variation as var
from innervar.domain import PlanarDomain
from innervar.field import SampledMap, build_grid
from innervar.testfunc import bump, random_battery

ph = gallery.perturbed_harmonic(0.15)
m = ph.sample(192)
eta = bump(0.2 - 0.1j, 0.3, 1 + 0.5j, "z")

sw = var.variation_sweep(m, eta)
print(f"eps_max = {sw.eps_max:.4f}")
for e, E in zip(sw.epsilons, sw.energies):
    print(f"  eps {e:+.5f}   E - E0 = {E - sw.c0:+.3e}")
print(f"fit  c1 = {sw.c1:+.3e}   c2 = {sw.c2:.5f}")
print(f"exact c1 = {sw.c1_analytic:+.3e}   c2 = {sw.c2_analytic:.5f}")

# not Hopf harmonic: the slope at eps = 0 is visible
g = build_grid(PlanarDomain.disk(0, 1.0), 192)
sq = SampledMap.from_function(g, lambda z: np.abs(z) ** 2, lambda z: (np.conj(z), z))
sw2 = var.variation_sweep(sq, bump(0.3 + 0.1j, 0.35, 1.0, "z"))
print()
print(f"|z|^2: fitted c1 = {sw2.c1:+.5f}, exact c1 = {sw2.c1_analytic:+.5f}")

# J > 0 everywhere, so every nonzero eps raises the energy strictly
etas = random_battery(np.random.default_rng(1), 4, ph.domain)
rep = var.check_strict_increase(m, etas)
print()
print("strict increase:", rep.passed,
      " smallest gain", f"{min(min(e['differences']) for e in rep.entries):.2e}")
