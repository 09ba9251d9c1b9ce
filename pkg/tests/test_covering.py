import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspectra.algebra import QuasiMetric, get_preset
from subspectra.covering import (
    SampledFunction,
    build_covering,
    covering_equivalence_check,
    function_family,
    log_weighted_norm,
    mixed_norm,
    mixed_norm_log,
    multiplicity,
    read_centers_csv,
    tile_norms,
)

R1 = QuasiMetric(get_preset("r1"))
H1 = QuasiMetric(get_preset("h1"))


@pytest.fixture(scope="module")
def line_cover():
    return build_covering(([0.0], [10.0]), R1, separation=1.0)


@pytest.fixture(scope="module")
def heis_cover():
    return build_covering(([-2.0] * 3, [2.0] * 3), H1, separation=1.0, spacing=0.5)


def test_line_covering_centers(line_cover):
    np.testing.assert_allclose(line_cover.centers[:, 0], np.arange(11.0))
    report = line_cover.check()
    assert report["separated"] and report["covered"]
    assert report["min_separation"] == pytest.approx(1.0)


def test_line_multiplicity(line_cover):
    assert multiplicity(line_cover, [[0.5]])[0] == 2
    assert multiplicity(line_cover, [[1.0]])[0] == 1
    assert line_cover.check()["multiplicity"] == 2
    assert line_cover.multiplicity_bound == pytest.approx((2 * 1) / (2 * 0.25))


def test_multiplicity_needs_points(line_cover):
    with pytest.raises(ValueError):
        multiplicity(line_cover, np.empty((0, 1)))


def test_mixed_norm_of_indicator(line_cover):
    f = SampledFunction.on_box(function_family("indicator", lo=0.0, hi=3.0), 0.0, 10.0, 0.01)
    np.testing.assert_allclose(
        tile_norms(f, line_cover, 2.0)[:5], [1, math.sqrt(2), math.sqrt(2), 1, 0], atol=1e-9
    )
    assert mixed_norm(f, line_cover, 1.0, 2.0) == pytest.approx(2 + 2 * math.sqrt(2), rel=1e-9)


def test_log_weighted_norm_examples():
    assert log_weighted_norm([1.0], 3.0) == pytest.approx(math.log(2) ** (1 / 3))
    assert log_weighted_norm([1.0, 1.0], 2.0) == pytest.approx(math.sqrt(math.log(2) + math.log(3)))
    # ordering is by decreasing rearrangement
    assert log_weighted_norm([0.0, 2.0], 1.0) == pytest.approx(2 * math.log(2))
    with pytest.raises(ValueError):
        log_weighted_norm([1.0], 0.0)


def test_heisenberg_covering_invariants(heis_cover):
    report = heis_cover.check()
    assert report["separated"]
    assert report["covered"]
    assert report["bounded"]
    assert report["multiplicity_bound"] == pytest.approx(65536)
    assert report["multiplicity"] <= 30


def test_partition_identity_for_disjoint_tiles():
    # with base radius 1/2 the tiles of the integer lattice in R are disjoint up to
    # measure zero, so the l_q(L_q) norm equals the L_q norm
    cover = build_covering(([0.0], [10.0]), R1, separation=1.0, base_radius=0.5)
    f = SampledFunction.on_box(lambda x: np.exp(-((x[:, 0] - 5) ** 2)), -0.5, 10.5, 0.01)
    for q in (1.0, 2.0, 3.5):
        assert mixed_norm(f, cover, q, q) == pytest.approx(f.lp_norm(q), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0), st.sampled_from([1.0, 2.0, 4.0]), st.sampled_from([1.0, 2.0]))
def test_mixed_norm_homogeneity(c, p, q):
    cover = build_covering(([0.0], [6.0]), R1, separation=1.0)
    f = SampledFunction.on_box(function_family("gaussian", center=3.0, width=0.7), 0.0, 6.0, 0.05)
    base = mixed_norm(f, cover, p, q)
    assert mixed_norm(f.with_values(c * f.values), cover, p, q) == pytest.approx(c * base, rel=1e-12)
    base_log = mixed_norm_log(f, cover, p, q)
    assert mixed_norm_log(f.with_values(c * f.values), cover, p, q) == pytest.approx(c * base_log, rel=1e-12)


def test_equivalence_of_two_coverings():
    a = build_covering(([0.0], [10.0]), R1, separation=1.0)
    b = build_covering(([0.0], [10.0]), R1, separation=0.5)
    rng = np.random.default_rng(0)
    funcs = [
        SampledFunction.on_box(
            function_family("gaussian", center=rng.uniform(2, 8), width=rng.uniform(0.2, 2)),
            0.0, 10.0, 0.02,
        )
        for _ in range(10)
    ]
    report = covering_equivalence_check(funcs, a, b, 1.0, 2.0)
    assert 1.0 <= report.constant < 10.0
    assert np.all(np.isfinite(report.ratios))


def test_sampled_function_csv_roundtrip():
    f = SampledFunction.on_box(function_family("bump", center=[0.5, 0.5], width=0.4), [0, 0], [1, 1], 0.25)
    back = SampledFunction.from_csv(f.to_csv())
    np.testing.assert_array_equal(back.values, f.values)
    for a, b in zip(back.axes, f.axes):
        np.testing.assert_array_equal(a, b)


def test_sampled_function_rejects_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        SampledFunction((np.arange(3.0),), np.zeros(4))


def test_centers_csv_roundtrip(heis_cover):
    np.testing.assert_array_equal(read_centers_csv(heis_cover.to_csv()), heis_cover.centers)


@pytest.mark.parametrize("kwargs", [{"separation": 0.0}, {"separation": -1.0}])
def test_bad_separation(kwargs):
    with pytest.raises(ValueError):
        build_covering(([0.0], [1.0]), R1, **kwargs)


def test_empty_region():
    with pytest.raises(ValueError, match="empty"):
        build_covering(([1.0], [0.0]), R1)


def test_unknown_function_kind():
    with pytest.raises(ValueError):
        function_family("sawtooth")
