"""Separated coverings of coordinate boxes and the mixed norms built on them."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import QuasiMetric

SEPARATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function at the midpoints of a rectangular lattice.

    ``axes[k]`` holds the cell-centre coordinates along axis k; ``values`` has
    shape ``tuple(len(a) for a in axes)``.
    """

    axes: tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        values = np.asarray(self.values)
        shape = tuple(len(a) for a in axes)
        if values.shape != shape:
            raise ValueError(f"values have shape {values.shape}, lattice is {shape}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([a[1] - a[0] if len(a) > 1 else 1.0 for a in self.axes])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def integral(self, power: float = 1.0) -> float:
        """Midpoint-rule integral of |f|**power."""
        return float(np.sum(np.abs(self.values) ** power) * self.cell_volume)

    def lp_norm(self, p: float) -> float:
        return self.integral(p) ** (1.0 / p)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.axes, np.asarray(values).reshape(self.values.shape))

    @classmethod
    def on_box(cls, func, lo, hi, spacing) -> "SampledFunction":
        """Sample ``func(points)`` at cell midpoints of the box [lo, hi]."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        spacing = np.broadcast_to(np.asarray(spacing, dtype=float), lo.shape)
        axes = []
        for a, b, h in zip(lo, hi, spacing):
            n = max(1, int(round((b - a) / h)))
            axes.append(a + (np.arange(n) + 0.5) * (b - a) / n)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return cls(tuple(axes), np.asarray(func(pts)).reshape(mesh[0].shape))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = len(self.axes)
        w.writerow([f"x{k + 1}" for k in range(d)] + ["value"])
        for pt, v in zip(self.points, self.values.ravel()):
            w.writerow([f"{c:.17g}" for c in pt] + [f"{v:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledFunction":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(c) for c in r] for r in rows[1:] if r])
        pts, vals = data[:, :-1], data[:, -1]
        axes = tuple(np.unique(pts[:, k]) for k in range(pts.shape[1]))
        shape = tuple(len(a) for a in axes)
        if np.prod(shape) != len(vals):
            raise ValueError("CSV points do not form a full rectangular lattice")
        idx = tuple(np.searchsorted(a, pts[:, k]) for k, a in enumerate(axes))
        values = np.empty(shape)
        values[idx] = vals
        return cls(axes, values)


def function_family(kind: str, **params):
    """Analytic test functions ``f(points)`` by name: gaussian, bump, indicator."""
    center = np.asarray(params.get("center", 0.0), dtype=float)
    width = float(params.get("width", 1.0))
    amplitude = float(params.get("amplitude", 1.0))
    axes = params.get("axes")

    def radius2(pts):
        sel = pts if axes is None else pts[:, list(axes)]
        return np.sum(((sel - center) / width) ** 2, axis=-1)

    if kind == "gaussian":
        return lambda pts: amplitude * np.exp(-radius2(pts))
    if kind == "bump":

        def bump(pts):
            r2 = radius2(pts)
            out = np.zeros_like(r2)
            inside = r2 < 1
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
            return amplitude * out

        return bump
    if kind == "indicator":
        lo = np.asarray(params.get("lo", -1.0), dtype=float)
        hi = np.asarray(params.get("hi", 1.0), dtype=float)
        return lambda pts: amplitude * np.all((pts >= lo) & (pts <= hi), axis=-1).astype(float)
    raise ValueError(f"unknown function kind {kind!r}")


@dataclass(eq=False)
class Covering:
    """Centres Γ of a separated set and the translated quasi-balls γ·B(0, base_radius)."""

    centers: np.ndarray
    metric: QuasiMetric
    region: tuple[np.ndarray, np.ndarray]
    separation: float
    base_radius: float = 1.0
    lattice: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.centers)

    def membership(self, points, chunk: int = 4096) -> np.ndarray:
        """Boolean matrix [center, point]: point lies in the open ball around center."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((len(self.centers), len(points)), dtype=bool)
        for start in range(0, len(points), chunk):
            block = points[start : start + chunk]
            d = self.metric.dist(self.centers[:, None, :], block[None, :, :])
            out[:, start : start + chunk] = d < self.base_radius
        return out

    @property
    def multiplicity_bound(self) -> float:
        c = self.metric.triangle_constant
        return self.metric.ball_volume(2 * c) / self.metric.ball_volume(1 / (2 * c))

    def min_separation(self) -> float:
        if len(self.centers) < 2:
            return float("inf")
        d = self.metric.dist(self.centers[:, None, :], self.centers[None, :, :])
        np.fill_diagonal(d, np.inf)
        return float(d.min())

    def check(self, points=None) -> dict:
        """Evaluate the separation, coverage and multiplicity invariants on sample points."""
        points = self.lattice if points is None else points
        counts = self.membership(points).sum(axis=0)
        sep = self.min_separation()
        return {
            "n_centers": len(self.centers),
            "min_separation": sep,
            "separated": bool(sep >= self.separation - SEPARATION_TOL),
            "covered": bool(np.all(counts >= 1)),
            "multiplicity": int(counts.max()),
            "multiplicity_bound": self.multiplicity_bound,
            "bounded": bool(counts.max() <= self.multiplicity_bound),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.metric.algebra.labels())
        for c in self.centers:
            w.writerow([f"{v:.17g}" for v in c])
        return buf.getvalue()


def read_centers_csv(source: str | Path) -> np.ndarray:
    text = Path(source).read_text() if isinstance(source, Path) else source
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    return np.array([[float(v) for v in r] for r in rows[1:]])


def candidate_lattice(lo, hi, spacing) -> np.ndarray:
    """Lattice points lo + i*spacing inside [lo, hi], in lexicographic order."""
    axes = []
    for a, b, h in zip(lo, hi, spacing):
        n = int(np.floor((b - a) / h + 1e-9))
        axes.append(a + h * np.arange(n + 1))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def build_covering(
    region,
    metric: QuasiMetric,
    separation: float = 1.0,
    spacing=None,
    base_radius: float = 1.0,
) -> Covering:
    """Greedy maximal ``separation``-separated subset of a candidate lattice.

    Candidates are scanned lexicographically; a candidate is taken unless it
    is within ``separation`` of an earlier centre.  ``region`` is a pair
    ``(lo, hi)`` of coordinate vectors; the lattice spacing defaults to
    ``separation / 4`` on every axis.
    """
    if not separation > 0:
        raise ValueError("separation must be positive")
    d = metric.algebra.dimension
    lo = np.broadcast_to(np.asarray(region[0], dtype=float), (d,)).copy()
    hi = np.broadcast_to(np.asarray(region[1], dtype=float), (d,)).copy()
    if np.any(hi < lo):
        raise ValueError(f"empty region: lo={lo}, hi={hi}")
    if spacing is None:
        spacing = separation / 4
    spacing = np.broadcast_to(np.asarray(spacing, dtype=float), (d,))
    lattice = candidate_lattice(lo, hi, spacing)
    blocked = np.zeros(len(lattice), dtype=bool)
    chosen = []
    for i in range(len(lattice)):
        if blocked[i]:
            continue
        chosen.append(i)
        near = metric.dist(lattice[i], lattice[i:]) < separation - SEPARATION_TOL
        blocked[i:] |= near
    return Covering(lattice[chosen], metric, (lo, hi), float(separation), float(base_radius), lattice)


def multiplicity(covering: Covering, sample_points) -> tuple[int, np.ndarray]:
    """Maximum cover count over the samples and the histogram of counts."""
    pts = np.asarray(sample_points, dtype=float)
    if pts.size == 0:
        raise ValueError("no sample points")
    counts = covering.membership(pts).sum(axis=0)
    return int(counts.max()), np.bincount(counts)


def tile_norms(f: SampledFunction, covering: Covering, q: float) -> np.ndarray:
    """‖f‖_{L_q(γU)} for every centre γ, by midpoint quadrature."""
    if not q > 0:
        raise ValueError("q must be positive")
    mass = np.abs(f.values.ravel()) ** q * f.cell_volume
    inside = covering.membership(f.points)
    return (inside.astype(float) @ mass) ** (1.0 / q)


def mixed_norm(f: SampledFunction, covering: Covering, p: float, q: float) -> float:
    """ℓ_p sum over tiles of the local L_q norms."""
    if not p > 0:
        raise ValueError("p must be positive")
    a = tile_norms(f, covering, q)
    return float(np.sum(a**p) ** (1.0 / p))


def log_weighted_norm(a, p: float) -> float:
    """(Σ_n log(n+2) a*_n^p)^{1/p} over the decreasing rearrangement a*."""
    if not p > 0:
        raise ValueError("p must be positive")
    a = np.sort(np.abs(np.asarray(a, dtype=float)))[::-1]
    w = np.log(np.arange(len(a)) + 2.0)
    return float(np.sum(w * a**p) ** (1.0 / p))


def mixed_norm_log(f: SampledFunction, covering: Covering, p: float, q: float) -> float:
    return log_weighted_norm(tile_norms(f, covering, q), p)


@dataclass
class EquivalenceReport:
    ratios: np.ndarray
    min_ratio: float
    max_ratio: float

    @property
    def constant(self) -> float:
        """Smallest C with all ratios in [1/C, C]."""
        return float(max(self.max_ratio, 1.0 / self.min_ratio))


def covering_equivalence_check(
    functions, covering_a: Covering, covering_b: Covering, p: float, q: float
) -> EquivalenceReport:
    """Ratios ‖f‖_A / ‖f‖_B of the ℓ_p(L_q) norms over a family of functions."""
    ratios = []
    for f in functions:
        na = mixed_norm(f, covering_a, p, q)
        nb = mixed_norm(f, covering_b, p, q)
        ratios.append(na / nb if nb > 0 else np.nan)
    ratios = np.array(ratios)
    finite = ratios[np.isfinite(ratios)]
    return EquivalenceReport(ratios, float(finite.min()), float(finite.max()))

