"""Negative-eigenvalue counting, Birman-Schwinger checks and semiclassical sweeps."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import DiscreteOperator, _dense
from .spectral import SpectralReport, asymptotic_fit

COLLISION_TOL = 1e-12
THRESHOLD_SHIFT = 1e-10
DENSE_LIMIT = 6000


@dataclass(frozen=True, eq=False)
class PotentialSplit:
    """V = V_+ - V_- with V_- = (|V| - V)/2."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise TypeError("potential must be real")
        object.__setattr__(self, "values", np.asarray(v, dtype=float).ravel())

    @property
    def plus(self) -> np.ndarray:
        return (np.abs(self.values) + self.values) / 2

    @property
    def minus(self) -> np.ndarray:
        return (np.abs(self.values) - self.values) / 2


# -- counting -------------------------------------------------------------------------


def _inertia_negative(a: sp.spmatrix) -> int | None:
    """Negative pivots of a symmetric LU without off-diagonal pivoting.

    Returns -1 for a (numerically) zero pivot and None when the factorisation
    is unusable.
    """
    try:
        lu = spla.splu(
            sp.csc_matrix(a),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
    except RuntimeError as exc:
        # an exactly zero pivot means the threshold sits on an eigenvalue
        return -1 if "singular" in str(exc).lower() else None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    d = lu.U.diagonal()
    scale = max(1.0, float(np.max(np.abs(d))))
    if np.max(np.abs(np.imag(d)), initial=0.0) > 1e-8 * scale:
        return None
    d = np.real(d)
    if np.min(np.abs(d)) <= COLLISION_TOL * scale:
        return -1
    return int(np.sum(d < 0))


def _lanczos_negative(a, threshold: float) -> int:
    """Count eigenvalues below threshold from the bottom of the spectrum upwards."""
    n = a.shape[0]
    k = 16
    while True:
        k = min(k, n - 2)
        vals = spla.eigsh(a, k=k, which="SA", return_eigenvectors=False, tol=1e-12)
        below = int(np.sum(vals < threshold))
        if below < k or k >= n - 2:
            return below
        k *= 2


def _dense_negative(a, threshold: float) -> tuple[int, bool]:
    w = np.linalg.eigvalsh(_dense(a))
    collision = bool(np.any(np.abs(w - threshold) < COLLISION_TOL))
    return int(np.sum(w < threshold)), collision


def negative_count(op, threshold: float = 0.0, method: str = "auto") -> int:
    """Number of eigenvalues of a hermitian operator strictly below ``threshold``.

    ``method``: ``inertia`` (sparse symmetric factorisation of op - threshold),
    ``dense`` (full eigensolve), ``lanczos`` (extreme eigenvalues from below),
    or ``auto`` (inertia for sparse input, dense otherwise).  A threshold
    within 1e-12 of an eigenvalue (or a numerically zero pivot) is moved up
    by 1e-10 with a warning.  A failed factorisation falls back to an
    eigensolve with a warning.
    """
    parts = op.parts if isinstance(op, DiscreteOperator) else [op]
    return sum(_count_one(b, threshold, method) for b in parts)


def _count_one(a, threshold: float, method: str) -> int:
    if method == "auto":
        method = "inertia" if sp.issparse(a) else "dense"
    if method == "dense":
        count, collision = _dense_negative(a, threshold)
        if collision:
            warnings.warn("threshold is an eigenvalue; shifted by +1e-10", stacklevel=3)
            count, _ = _dense_negative(a, threshold + THRESHOLD_SHIFT)
        return count
    if method == "lanczos":
        return _lanczos_negative(sp.csr_matrix(a), threshold)
    if method != "inertia":
        raise ValueError(f"unknown method {method!r}")
    shifted = sp.csc_matrix(a) - threshold * sp.eye(a.shape[0], format="csc")
    count = _inertia_negative(shifted)
    if count == -1:
        warnings.warn("threshold is (numerically) an eigenvalue; shifted by +1e-10", stacklevel=3)
        count = _inertia_negative(shifted - THRESHOLD_SHIFT * sp.eye(a.shape[0], format="csc"))
    if count is None or count == -1:
        warnings.warn("symmetric factorisation failed; falling back to an eigensolve", stacklevel=3)
        if a.shape[0] <= DENSE_LIMIT:
            return _dense_negative(a, threshold)[0]
        return _lanczos_negative(sp.csr_matrix(a), threshold)
    return count


# -- Birman-Schwinger ----------------------------------------------------------------------


@dataclass
class BirmanSchwingerResult:
    lhs: int
    rhs: int
    lam: float
    retries: int = 0

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def birman_schwinger_check(t, v, lam: float, rng=None, max_retries: int = 20):
    """Count eigenvalues of T+V below -λ and of -(T+λ)^{-1/2} V (T+λ)^{-1/2} above 1.

    The two counts are computed from independent eigensolves.  If either
    spectrum has an eigenvalue within 1e-12 of its threshold, λ is redrawn
    uniformly from [0.9λ, 1.1λ] using ``rng``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    rng = np.random.default_rng(rng)
    t = np.asarray(_dense(t))
    v = np.asarray(_dense(v))
    wt, ut = np.linalg.eigh(t)
    if wt.min() < -1e-10:
        raise ValueError("T must be positive semidefinite")
    wtv = np.linalg.eigvalsh(t + v)
    for retry in range(max_retries + 1):
        root = (ut / np.sqrt(wt + lam)) @ ut.conj().T
        bs = -root @ v @ root
        wbs = np.linalg.eigvalsh((bs + bs.conj().T) / 2)
        collide = np.any(np.abs(wtv + lam) < COLLISION_TOL) or np.any(
            np.abs(wbs - 1) < COLLISION_TOL
        )
        if not collide:
            return BirmanSchwingerResult(
                int(np.sum(wtv < -lam)), int(np.sum(wbs > 1)), float(lam), retry
            )
        lam = float(lam * rng.uniform(0.9, 1.1))
    raise RuntimeError("could not avoid threshold collisions")


# -- semiclassical sweep ---------------------------------------------------------------------


@dataclass
class CountReport:
    h_list: np.ndarray
    counts: np.ndarray
    d_hom: int
    target: float | None
    applicable: bool = True
    scaled: np.ndarray = field(init=False)

    def __post_init__(self):
        self.h_list = np.asarray(self.h_list, dtype=float)
        self.counts = np.asarray(self.counts, dtype=int)
        self.scaled = self.h_list**self.d_hom * self.counts

    @property
    def deviations(self) -> np.ndarray:
        if not self.target:
            return np.full(len(self.h_list), np.nan)
        return np.abs(self.scaled - self.target) / self.target

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "N", "h^d_hom N", "target", "deviation"])
        for h, n, s, dev in zip(self.h_list, self.counts, self.scaled, self.deviations):
            w.writerow([f"{h:.17g}", n, f"{s:.17g}", f"{self.target or float('nan'):.17g}", f"{dev:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        d = asdict(self)
        d.update(h_list=self.h_list.tolist(), counts=self.counts.tolist(),
                 scaled=self.scaled.tolist(), deviations=self.deviations.tolist())
        return json.dumps(d, indent=2)


def schrodinger_operator(lap: DiscreteOperator, v, h: float) -> DiscreteOperator:
    """-h² Δ + M_V as a plain matrix sum (blockwise for block families)."""
    v = np.asarray(v, dtype=float).ravel()
    diag = sp.diags(v)
    if lap.is_block:
        blocks = [(-(h**2) * sp.csr_matrix(b) + diag).tocsr() for b in lap.blocks]
        return DiscreteOperator(grid=lap.grid, label="-h²Δ+V", blocks=blocks, modes=lap.modes,
                                d_hom=lap.d_hom)
    m = lap.matrix
    m = -(h**2) * (sp.csr_matrix(m) if sp.issparse(m) else m) + (diag if sp.issparse(m) else np.diag(v))
    return DiscreteOperator(m, lap.grid, True, "-h²Δ+V", d_hom=lap.d_hom)


def semiclassical_sweep(
    lap: DiscreteOperator,
    v,
    h_list,
    c_group: float | None = None,
    method: str = "auto",
    exploratory: bool = False,
) -> CountReport:
    """N(h) = #{negative eigenvalues of -h²Δ_h + V} along ``h_list``.

    The target c_G ∫ V_-^{d/2} is computed by the grid quadrature.  The
    comparison is flagged as applicable only when d_hom > 2 and the sweep is
    not marked exploratory.
    """
    split = v if isinstance(v, PotentialSplit) else PotentialSplit(v)
    d = lap.d_hom
    counts = [negative_count(schrodinger_operator(lap, split.values, h), 0.0, method) for h in h_list]
    target = None
    if c_group is not None:
        if lap.is_block:
            cell = float(np.prod(lap.grid.spacing[:-1])) * 2 * lap.grid.box[-1]
        else:
            cell = lap.grid.cell_volume
        target = float(c_group * np.sum(split.minus ** (d / 2)) * cell)
    return CountReport(h_list, counts, d, target, applicable=d > 2 and not exploratory)


# -- counting function versus singular values --------------------------------------------


@dataclass
class CountingConsistency:
    h_values: np.ndarray
    counting_estimates: np.ndarray
    fitted_constant: float
    residual_spread: float

    @property
    def max_relative_difference(self) -> float:
        return float(np.max(np.abs(self.counting_estimates / self.fitted_constant - 1)))

    @property
    def relative_difference(self) -> float:
        """Median counting estimate against the fitted constant."""
        return float(abs(np.median(self.counting_estimates) / self.fitted_constant - 1))


def counting_vs_singular_values(values, p: float, window=(20, 100)) -> CountingConsistency:
    """Compare h^p #{μ > h} with the window fit of (n+1) μ(n)^p.

    The levels h are the geometric midpoints between consecutive singular
    values in the window, so #{μ > h} = n + 1 exactly.
    """
    report = values if isinstance(values, SpectralReport) else SpectralReport(values)
    fit = asymptotic_fit(report, p, window)
    mu = report.singular_values
    lo, hi = fit.fit_window
    n = np.arange(lo, hi + 1)
    h = np.sqrt(mu[n] * mu[n + 1])
    counts = np.array([np.sum(mu > level) for level in h])
    est = h**p * counts
    return CountingConsistency(h, est, fit.fitted_constant, fit.residual_spread)
