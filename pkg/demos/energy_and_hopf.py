"""
Energy and Hopf product of two maps of an annulus
=================================================

The radial squeeze z/|z| flattens 0.5 < |z| < 1 onto the unit circle.  Its
Hopf product -1/(4 z^2) is holomorphic, so inner variations cannot lower its
energy, yet the harmonic map with the same boundary values has less energy.
"""

import math

import numpy as np

from innervar import gallery
from innervar.energy import dirichlet_energy, hopf_product, is_hopf_harmonic

squeeze = gallery.radial_squeeze(0.5)
competitor = gallery.harmonic_competitor(0.5)

for n in (64, 128, 256):
    m = squeeze.sample(n)
    hf = hopf_product(m)
    g = m.grid
    far = g.mask & (g.domain.sdf(g.nodes) > 4 * g.spacing) & np.isfinite(hf.values)
    err = np.max(np.abs(hf.values[far] + 1 / (4 * g.nodes[far] ** 2)))
    print(f"n={n:4d}  energy {dirichlet_energy(m).energy:.6f}  "
          f"max |H + 1/(4z^2)| {err:.2e}  holomorphic: {is_hopf_harmonic(m)[0]}")

print()
print(f"pi ln 2            = {math.pi * math.log(2):.6f}")
e_c = dirichlet_energy(competitor.sample(256)).energy
print(f"harmonic competitor: {e_c:.6f}  (2 pi / 3 = {2 * math.pi / 3:.6f})")

# the competitor still has a holomorphic Hopf product, but its Jacobian changes sign
z = np.array([0.55, 0.9]) + 0j
a, b = competitor.derivatives(z)
print("competitor Jacobian at |z| = 0.55, 0.9:", np.round(np.abs(a) ** 2 - np.abs(b) ** 2, 4))
