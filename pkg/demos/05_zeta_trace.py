"""Tr(M_f^{2z} (1-Δ)^{-z/2}) against its closed form, for real and complex z."""

import math

import numpy as np

from subspectra.operators import GridSpec, euclidean_laplacian
from subspectra.spectral import euclidean_constant, zeta_trace

grid = GridSpec((1024,), (20.0,))
lap = euclidean_laplacian(grid, "spectral")
f = np.exp(-grid.points[:, 0] ** 2 / 6)

for z in (3.0, 3.0 + 1.5j, 5.0 - 2.0j):
    out = zeta_trace(f, z, lap, c_group=euclidean_constant(1))
    print(f"z={z}: trace {out['trace']:.6f}  predicted {out['predicted']:.6f}"
          f"  |dev| {abs(out['deviation']):.1e}")
print(f"z=3 closed form: 1/sqrt(pi) = {1 / math.sqrt(math.pi):.6f}")

try:
    zeta_trace(f, 1.0, lap)
except ValueError as exc:
    print("Re z <= d is rejected:", exc)
