"""Heat trace on a Heisenberg nilmanifold: the exponent is d_hom/2 = 2, not 3/2."""

import numpy as np

from subspectra.algebra import get_preset
from subspectra.operators import GridSpec, fourier_block_decompose, heat_trace_slope
from subspectra.spectral import heat_constant_hn, heat_kernel_hn_origin

h1 = get_preset("h1")
c = heat_constant_hn(1)
print(f"c_H1 = {c:.10f}  (1/128 = {1 / 128:.10f})")
print(f"via Landau levels: {1.0**2 * heat_kernel_hn_origin(1, 1.0) / 2:.10f}")

# the quotient needs 4 L^2 / L_t to be an integer; L = L_t = 4 gives 16
s = np.geomspace(0.05, 0.4, 8)
for n in (16, 24, 32):
    grid = GridSpec((n, n, n), (4.0, 4.0, 4.0))
    lap, _ = fourier_block_decompose(h1, grid, scheme="group", order=4)
    slope, _, c_hat = heat_trace_slope(lap, s)
    print(f"{n}^3: slope {slope:+.3f}  c_hat*128 in [{128 * c_hat.min():.2f}, {128 * c_hat.max():.2f}]")
