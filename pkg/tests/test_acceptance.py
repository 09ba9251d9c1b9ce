"""Acceptance criteria A1-A8 at their stated tolerances.

Each test records one pass/fail line (collected in the terminal summary)
before asserting, so a failing criterion still reports its measured values.
"""

import math

import numpy as np
import pytest

from subspectra.algebra import (
    PRESETS,
    QuasiMetric,
    get_preset,
    group_product,
    homogeneous_dimension,
    monte_carlo_ball_volume,
    validate_stratification,
)
from subspectra.config import ExperimentConfig
from subspectra.counting import negative_count, schrodinger_operator
from subspectra.covering import (
    SampledFunction,
    build_covering,
    covering_equivalence_check,
    function_family,
    mixed_norm,
    mixed_norm_log,
)
from subspectra.experiments import EXPERIMENT_PRESETS, run_experiment
from subspectra.operators import (
    GridSpec,
    assemble_sublaplacian,
    fourier_block_decompose,
)
from subspectra.spectral import fan_inequality_check, holder_check, singular_values

INV_SQRT_PI = 0.5641895835477563
C_H1 = 1 / 128


def run_preset(name, **overrides):
    kind, values, _ = EXPERIMENT_PRESETS[name]
    cfg = ExperimentConfig(kind)
    for key, value in {**values, **overrides}.items():
        cfg.set(key, value)
    return run_experiment(cfg)


def test_a1_structure_suite(acceptance):
    names = ["r1", "r2", "r3", "h1", "bony2"]
    valid = all(validate_stratification(get_preset(n)) == [] for n in names)
    dims = [homogeneous_dimension(get_preset(n)) for n in names]
    rng = np.random.default_rng(0)
    assoc = 0.0
    for name in PRESETS:
        a = get_preset(name)
        g = rng.standard_normal((3, 1000, a.dimension))
        left = group_product(group_product(g[0], g[1], a), g[2], a)
        right = group_product(g[0], group_product(g[1], g[2], a), a)
        assoc = max(assoc, float(np.max(np.abs(left - right))))
    h1 = get_preset("h1")
    metric = QuasiMetric(h1)
    g1, g2 = rng.uniform(-3, 3, (2, 10**5, 3))
    ratio = float(np.max(metric.norm(group_product(g1, g2, h1)) / (metric.norm(g1) + metric.norm(g2))))
    exponent = monte_carlo_ball_volume(metric, [0.5, 1.0, 2.0], 10**6, rng=1).exponent
    passed = (
        valid and dims == [1, 2, 3, 4, 7] and assoc < 1e-10 and ratio <= 2 and abs(exponent - 4) <= 0.1
    )
    acceptance(
        "A1", passed,
        f"valid={valid} d_hom={dims} assoc={assoc:.1e} triangle={ratio:.3f} exponent={exponent:.3f}",
    )
    assert passed


def test_a2_line_sandwich_asymptotic(acceptance):
    res = run_preset("A2")
    fitted = res.value("fitted_constant")
    dev = res.value("deviation")
    fine = res.value("refined.deviation")
    target_ok = abs(res.value("target") - INV_SQRT_PI) < 1e-10
    passed = target_ok and abs(fitted - INV_SQRT_PI) <= 0.12 * INV_SQRT_PI and abs(fine) <= abs(dev) + 0.02
    acceptance("A2", passed, f"fitted={fitted:.5f} target={INV_SQRT_PI:.5f} dev={dev:+.4f} dev(2N)={fine:+.4f}")
    assert passed


def test_a3_heisenberg_heat_trace(acceptance):
    res = run_preset("A3")
    slope = res.value("slope")
    lo, hi = res.value("c_hat_ratio_min"), res.value("c_hat_ratio_max")
    passed = abs(slope + 2) <= 0.15 and lo >= 1 / 1.5 and hi <= 1.5
    acceptance("A3", passed, f"16^3 slope={slope:.3f} (need -2.00±0.15) c_hat*128 in [{lo:.2f}, {hi:.2f}]")
    assert passed


@pytest.mark.slow
def test_a3_refinement_trend():
    coarse = run_preset("A3")
    fine = run_preset("A3", **{"grid.n": [32], "grid.nt": 32})
    c_lo, c_hi = coarse.value("c_hat_ratio_min"), coarse.value("c_hat_ratio_max")
    f_lo, f_hi = fine.value("c_hat_ratio_min"), fine.value("c_hat_ratio_max")
    assert abs(fine.value("slope") + 2) <= 0.15
    assert f_lo >= 1 / 1.5 and f_hi <= 1.5
    # the c_hat band tightens around 1/128 under refinement
    assert max(abs(math.log(f_lo)), abs(math.log(f_hi))) < max(abs(math.log(c_lo)), abs(math.log(c_hi)))


def test_a4_birman_schwinger(acceptance):
    res = run_preset("A4")
    equal, trials = res.value("equal"), res.value("trials")
    passed = equal == trials == 100
    acceptance("A4", passed, f"{equal}/{trials} equal")
    assert passed


def test_a5_heisenberg_sandwich_asymptotic(acceptance):
    res = run_preset("A5")
    # c_H1 times the integral of exp(-2(x^2+y^2)) over R^2 times the t-period 8
    target = C_H1 * (math.pi / 2) * 8
    dev = res.value("deviation")
    fine = res.value("refined.deviation")
    passed = (
        abs(res.value("target") - target) < 1e-9 * target
        and abs(dev) <= 0.25
        and abs(fine) <= abs(dev)
    )
    acceptance(
        "A5", passed,
        f"fitted={res.value('fitted_constant'):.5f} target={target:.5f} dev={dev:+.4f} dev(64^2)={fine:+.4f}",
    )
    assert passed


def test_a6_zeta_trace(acceptance):
    res = run_preset("A6")
    trace = res.value("trace")
    value = complex(trace["re"], trace["im"])
    dev = abs(value - INV_SQRT_PI) / INV_SQRT_PI
    fine = res.value("refined.deviation")
    passed = dev <= 0.02 and fine <= res.value("deviation") and abs(value.imag) < 1e-12
    acceptance("A6", passed, f"trace={value.real:.6f} dev={dev:.2e} dev(4096)={fine:.2e}")
    assert passed


@pytest.fixture(scope="module")
def a7_result():
    return run_preset("A7")


def test_a7_semiclassical_trend(acceptance, a7_result):
    dev = np.array(a7_result.value("deviations"))
    counts = a7_result.value("counts")
    monotone = bool(np.all(np.diff(dev) < 0))
    passed = monotone and dev[-1] <= 0.2
    acceptance(
        "A7", passed,
        f"N={counts} dev={np.round(dev, 3).tolist()} monotone={monotone} end<=0.2={dev[-1] <= 0.2}",
    )
    assert passed


def test_a7_endpoint_within_tolerance(a7_result):
    assert a7_result.value("target") == pytest.approx(
        (1 / (6 * math.pi**2)) * (2 / 3) ** 1.5 * math.pi**1.5, rel=1e-6
    )
    assert a7_result.value("deviations")[-1] <= 0.2


@pytest.mark.slow
def test_a7_lanczos_count_matches_inertia(a7_result):
    grid = GridSpec((32, 32, 32), (3.0, 3.0, 3.0))
    lap = assemble_sublaplacian(get_preset("r3"), grid)
    v = -np.exp(-np.sum(grid.points**2, axis=1))
    count = negative_count(schrodinger_operator(lap, v, 0.18), 0.0, "inertia")
    assert count == a7_result.value("counts")[-1]


def test_a8_property_suites(acceptance):
    rng = np.random.default_rng(8)
    checks = {}

    squaring = 0.0
    fan_ok = holder_ok = True
    for _ in range(50):
        t = rng.standard_normal((12, 12))
        s = rng.standard_normal((12, 12))
        mu = singular_values(t).singular_values
        squaring = max(squaring, float(np.max(np.abs(singular_values(t.T @ t).singular_values - mu**2))))
        a, b = rng.uniform(-1, 1, 2)
        left, right = fan_inequality_check((t + t.T) / 2, (s + s.T) / 2, a, b)
        fan_ok &= left <= right
        p, q = rng.choice([1.0, 2.0, 3.0, 4.0], 2)
        lhs, rhs = holder_check(t, s, p, q)
        holder_ok &= lhs <= rhs * (1 + 1e-12)
    checks["mu_squaring"] = squaring <= 1e-9
    checks["fan"] = fan_ok
    checks["holder"] = holder_ok

    grid = GridSpec((8, 8, 8), (2.0, 2.0, 2.0))
    h1 = get_preset("h1")
    block_err = 0.0
    for scheme in ("central", "forward", "spectral"):
        full = assemble_sublaplacian(h1, grid, scheme).eigenvalues()
        blocks, _ = fourier_block_decompose(h1, grid, scheme=scheme)
        block_err = max(block_err, float(np.max(np.abs(blocks.eigenvalues() - full))))
    checks["blocks"] = block_err <= 1e-8

    coverings = [
        build_covering(([0.0], [10.0]), QuasiMetric(get_preset("r1")), 1.0),
        build_covering(([0.0], [10.0]), QuasiMetric(get_preset("r1")), 0.5),
        build_covering(([-2.0] * 3, [2.0] * 3), QuasiMetric(h1), 1.0, 0.5),
        build_covering(([-1.0] * 4, [1.0] * 4), QuasiMetric(get_preset("bony2")), 1.0, 0.5),
    ]
    reports = [c.check() for c in coverings]
    checks["coverings"] = all(r["separated"] and r["covered"] and r["bounded"] for r in reports)

    bumps = [
        SampledFunction.on_box(
            function_family("bump", center=rng.uniform(1, 9), width=rng.uniform(0.3, 3)), 0.0, 10.0, 0.01
        )
        for _ in range(50)
    ]
    eq = covering_equivalence_check(bumps, coverings[0], coverings[1], 1.0, 2.0)
    checks["equivalence"] = bool(np.all(np.isfinite(eq.ratios)) and eq.constant < 10)

    f = bumps[0]
    homog = 0.0
    for c in (0.3, 2.0, 7.5):
        g = f.with_values(c * f.values)
        for norm in (mixed_norm, mixed_norm_log):
            base = norm(f, coverings[0], 2.0, 3.0)
            homog = max(homog, abs(norm(g, coverings[0], 2.0, 3.0) - c * base) / (c * base))
    checks["homogeneity"] = homog <= 1e-13

    preset = run_preset("A8")
    checks["preset"] = bool(preset.passed)

    passed = all(checks.values())
    multiplicities = [r["multiplicity"] for r in reports]
    acceptance(
        "A8", passed,
        f"{sum(checks.values())}/{len(checks)} suites; squaring={squaring:.1e} blocks={block_err:.1e} "
        f"multiplicities={multiplicities} equivalence C={eq.constant:.3f}",
    )
    assert passed, checks
