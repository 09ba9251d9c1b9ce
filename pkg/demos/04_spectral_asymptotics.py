"""Singular values of (1-Δ)^{-k/4} M_f (1-Δ)^{-k/4} decay like (c ∫ f^p / n)^{1/p}."""

import math

import numpy as np

from subspectra.algebra import get_preset
from subspectra.operators import GridSpec, euclidean_laplacian, fourier_block_decompose
from subspectra.spectral import (
    asymptotic_fit,
    euclidean_constant,
    heat_constant_hn,
    product_convolution,
    singular_values,
    weyl_target,
)

# the line: k = 1, p = 1, target c_R1 ∫ e^{-x^2} = 1/sqrt(pi).  The window index
# n ~ 100 probes frequencies near sqrt(pi) n ~ 180, so the grid must resolve them:
# N = 1024 (Nyquist 80) misses, N = 2048 (Nyquist 160) is close enough
for n in (1024, 2048):
    grid = GridSpec((n,), (20.0,))
    lap = euclidean_laplacian(grid, "spectral")
    f = np.exp(-grid.points[:, 0] ** 2)
    mu = singular_values(product_convolution(f, 1.0, "bessel", lap))
    fit = asymptotic_fit(mu, 1.0, (20, 100), weyl_target(f, lap, euclidean_constant(1), 1.0))
    print(f"R^1 N={n}: fitted {fit.fitted_constant:.4f} target {1 / math.sqrt(math.pi):.4f}"
          f" slope {fit.slope:.3f}")

# the Heisenberg group: k = 2 gives p = d_hom / k = 2, target c_H1 ∫ f^2.
# 16^2 spatial points are coarse; the A5 preset uses 32^2 and 64^2
h1 = get_preset("h1")
grid = GridSpec((16, 16, 16), (4.0, 4.0, 4.0))
lap, mult = fourier_block_decompose(h1, grid, lambda p: np.exp(-p[:, 0] ** 2 - p[:, 1] ** 2), "group")
f = mult.blocks[0].diagonal()
op = product_convolution(f, 2.0, "bessel", lap)
fit = asymptotic_fit(singular_values(op, count=200), 2.0, (50, 150),
                     weyl_target(f, lap, heat_constant_hn(1), 2.0))
print(f"H^1 (16^3): fitted {fit.fitted_constant:.4f} target {fit.expected_constant:.4f}"
      f" deviation {fit.deviation:+.3f}")
