"""Group law, dilations and the homogeneous quasi-norm on the Heisenberg group."""

import numpy as np

from subspectra.algebra import (
    QuasiMetric,
    get_preset,
    group_product,
    homogeneous_dimension,
    left_invariant_field,
    monte_carlo_ball_volume,
    validate_stratification,
)

h1 = get_preset("h1")
print("layers", h1.layer_dims, "d_hom", homogeneous_dimension(h1))
print("problems:", validate_stratification(h1) or "none")

# exp(X) exp(Y) picks up the central correction 2(xy' - yx')
print("(1,0,0)(0,1,0) =", group_product([1, 0, 0], [0, 1, 0], h1))

# the generating fields as polynomial coefficients per coordinate axis
for i, name in enumerate(h1.labels()[:2]):
    print(name, "=", left_invariant_field(h1, i))

# ball volumes scale like r^4, not r^3: the homogeneous dimension shows up
metric = QuasiMetric(h1)
est = monte_carlo_ball_volume(metric, [0.5, 1.0, 2.0], 200_000, rng=0)
for r, v in zip(est.radii, est.volumes):
    print(f"r={r:4.1f}  volume={v:8.3f}  exact={metric.ball_volume(r):8.3f}")
print(f"fitted exponent {est.exponent:.3f}")

# the Bony-type group has a three-step filtration and d_hom = 7
bony = get_preset("bony2")
print("bony2 d_hom", homogeneous_dimension(bony))
rng = np.random.default_rng(1)
g = rng.standard_normal((3, 4))
err = np.abs(group_product(group_product(g[0], g[1], bony), g[2], bony)
             - group_product(g[0], group_product(g[1], g[2], bony), bony)).max()
print(f"associativity defect {err:.1e}")
