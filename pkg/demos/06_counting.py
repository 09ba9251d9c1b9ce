"""Birman-Schwinger exactness and semiclassical eigenvalue counting on R^3."""

import numpy as np

from subspectra.algebra import get_preset
from subspectra.counting import birman_schwinger_check, negative_count, schrodinger_operator, semiclassical_sweep
from subspectra.operators import GridSpec, assemble_sublaplacian
from subspectra.spectral import euclidean_constant

rng = np.random.default_rng(7)
equal = 0
for _ in range(50):
    n = int(rng.integers(2, 40))
    b = rng.standard_normal((n, n))
    v = rng.standard_normal((n, n))
    equal += birman_schwinger_check(b @ b.T / n, (v + v.T) / 2, rng.uniform(0.1, 2), rng).equal
print(f"Birman-Schwinger: {equal}/50 trials with equal counts")

# -h^2 Δ + V with a gaussian well; h^3 N(h) approaches c_R3 ∫ V_-^{3/2}
grid = GridSpec((20, 20, 20), (3.0, 3.0, 3.0))
lap = assemble_sublaplacian(get_preset("r3"), grid)
v = -np.exp(-np.sum(grid.points**2, axis=1))
rep = semiclassical_sweep(lap, v, [0.5, 0.35, 0.25], euclidean_constant(3))
for h, n, s in zip(rep.h_list, rep.counts, rep.scaled):
    print(f"h={h:.2f}  N={n:3d}  h^3 N={s:.4f}")
print(f"target {rep.target:.4f}")

# three independent counting routes agree
op = schrodinger_operator(lap, v, 0.25)
print({m: negative_count(op, 0.0, m) for m in ("inertia", "lanczos")})
