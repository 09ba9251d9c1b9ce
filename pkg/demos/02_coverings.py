"""Separated coverings by quasi-balls and the mixed norms they define."""

import numpy as np

from subspectra.algebra import QuasiMetric, get_preset
from subspectra.covering import (
    SampledFunction,
    build_covering,
    covering_equivalence_check,
    function_family,
    mixed_norm,
    mixed_norm_log,
)

# greedy 1-separated set in a box of the Heisenberg group
metric = QuasiMetric(get_preset("h1"))
cover = build_covering(([-2.0] * 3, [2.0] * 3), metric, separation=1.0, spacing=0.5)
report = cover.check()
print(f"{report['n_centers']} centres, multiplicity {report['multiplicity']}"
      f" (proved bound {report['multiplicity_bound']:.0f})")

# on the line, the integer covering gives a concrete l_1(L_2) norm of an indicator
line = QuasiMetric(get_preset("r1"))
integers = build_covering(([0.0], [10.0]), line, 1.0)
chi = SampledFunction.on_box(function_family("indicator", lo=0.0, hi=3.0), 0.0, 10.0, 0.01)
print("l1(L2) norm of 1_[0,3]:", mixed_norm(chi, integers, 1.0, 2.0), "= 2 + 2 sqrt 2")
print("log-weighted l2(L2):", mixed_norm_log(chi, integers, 2.0, 2.0))

# two different coverings give equivalent norms: the ratios stay bounded
halves = build_covering(([0.0], [10.0]), line, 0.5)
rng = np.random.default_rng(0)
family = [
    SampledFunction.on_box(function_family("bump", center=rng.uniform(1, 9), width=rng.uniform(0.3, 3)),
                           0.0, 10.0, 0.01)
    for _ in range(20)
]
eq = covering_equivalence_check(family, integers, halves, 1.0, 2.0)
print(f"ratio range [{eq.min_ratio:.3f}, {eq.max_ratio:.3f}], constant {eq.constant:.3f}")
