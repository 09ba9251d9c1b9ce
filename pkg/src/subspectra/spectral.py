"""Singular values, Schatten norms, asymptotic constants and trace identities."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad
from scipy.special import gamma

from .covering import mixed_norm, mixed_norm_log
from .errors import ConfigError, FitError, SingularityError
from .operators import DiscreteOperator, _dense, bessel_power, riesz_power

DENSE_BLOCK_LIMIT = 1500


@dataclass
class SpectralReport:
    """Decreasing singular values with an optional asymptotic fit."""

    singular_values: np.ndarray
    operator_label: str = ""
    p: float | None = None
    fit_window: tuple[int, int] | None = None
    fitted_constant: float | None = None
    slope: float | None = None
    residual_spread: float | None = None
    expected_constant: float | None = None
    deviation: float | None = None

    def __post_init__(self):
        mu = np.asarray(self.singular_values, dtype=float)
        if mu.size and (np.any(np.diff(mu) > 0) or mu[-1] < 0):
            raise ValueError("singular values must be nonnegative and decreasing")
        self.singular_values = mu

    def profile(self, p: float | None = None) -> np.ndarray:
        """(n+1) μ(n)^p for every n."""
        p = self.p if p is None else p
        n = np.arange(len(self.singular_values))
        return (n + 1) * self.singular_values**p

    def to_json(self) -> str:
        d = asdict(self)
        d["singular_values"] = self.singular_values.tolist()
        return json.dumps(d, indent=2, default=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mu", "n1_mu_p"])
        prof = self.profile() if self.p is not None else np.full(len(self.singular_values), np.nan)
        for n, (m, v) in enumerate(zip(self.singular_values, prof)):
            w.writerow([n, f"{m:.17g}", f"{v:.17g}"])
        return buf.getvalue()


# -- singular values and norms -----------------------------------------------------


def singular_values(op, count: int | None = None, label: str | None = None) -> SpectralReport:
    """μ(0) >= μ(1) >= ... of a matrix, DiscreteOperator or block family.

    Hermitian inputs use |eigenvalues|.  For block families with implicit
    (LinearOperator) blocks only the ``count`` largest are computed, with a
    per-block Lanczos solve whose depth grows until every block has resolved
    all of its eigenvalues above the global count-th value.
    """
    if isinstance(op, DiscreteOperator):
        label = op.label if label is None else label
        hermitian, parts = op.hermitian, op.parts
    else:
        m = op
        hermitian = _is_hermitian(m)
        parts = [m]
    dim = sum(b.shape[0] for b in parts)
    if count is not None and count > dim:
        warnings.warn(f"count {count} exceeds dimension {dim}; clipped", stacklevel=2)
        count = dim
    implicit = any(isinstance(b, spla.LinearOperator) for b in parts)
    if implicit and count is not None and count < dim:
        mu = _top_eigenvalues_blocks(parts, count)
    elif hermitian:
        mu = np.concatenate([np.abs(np.linalg.eigvalsh(_dense(b))) for b in parts])
    else:
        mu = np.concatenate([np.linalg.svd(_dense(b), compute_uv=False) for b in parts])
    mu = np.sort(mu)[::-1]
    if count is not None:
        mu = mu[:count]
    return SpectralReport(np.maximum(mu, 0.0), label or "")


def _is_hermitian(m) -> bool:
    if sp.issparse(m):
        d = abs(m - m.conj().T)
        return d.nnz == 0 or d.max() < 1e-12
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=1e-12, rtol=0)


def _top_eigenvalues_blocks(blocks, count: int) -> np.ndarray:
    """Largest ``count`` eigenvalues of a positive block-diagonal family."""
    nb = len(blocks)
    depth = [min(b.shape[0] - 2, 2 * count // nb + 16) for b in blocks]
    found = [None] * nb
    while True:
        for i, b in enumerate(blocks):
            if found[i] is None or len(found[i]) < depth[i]:
                found[i] = _block_top(b, depth[i])
        pooled = np.sort(np.concatenate(found))[::-1]
        threshold = pooled[min(count, len(pooled)) - 1]
        short = [
            i for i in range(nb)
            if found[i].min() >= threshold and depth[i] < blocks[i].shape[0] - 2
        ]
        if not short:
            return pooled[:count]
        for i in short:
            depth[i] = min(blocks[i].shape[0] - 2, 2 * depth[i])


def _block_top(b, k: int) -> np.ndarray:
    if b.shape[0] <= DENSE_BLOCK_LIMIT:
        return np.sort(np.linalg.eigvalsh(_dense(b)))[::-1][:k]
    vals = spla.eigsh(b, k=k, which="LA", return_eigenvectors=False, tol=1e-10)
    return np.sort(vals.real)[::-1]


def schatten_norms(values, p: float) -> tuple[float, float]:
    """(‖T‖_p, ‖T‖_{p,∞}) from singular values or a SpectralReport."""
    if not p > 0:
        raise ValueError("p must be positive")
    mu = values.singular_values if isinstance(values, SpectralReport) else np.asarray(values)
    mu = np.sort(np.abs(mu))[::-1]
    n = np.arange(len(mu))
    strong = float(np.sum(mu**p) ** (1 / p))
    weak = float(np.max((n + 1) ** (1 / p) * mu, initial=0.0))
    return strong, weak


def holder_check(t, s, p: float, q: float) -> tuple[float, float]:
    """(‖TS‖_r, ‖T‖_p ‖S‖_q) with 1/r = 1/p + 1/q."""
    r = 1 / (1 / p + 1 / q)
    lhs = schatten_norms(np.linalg.svd(t @ s, compute_uv=False), r)[0]
    rhs = schatten_norms(np.linalg.svd(t, compute_uv=False), p)[0] * schatten_norms(
        np.linalg.svd(s, compute_uv=False), q
    )[0]
    return lhs, rhs


def count_above(a, threshold: float) -> int:
    """Tr χ_(threshold, ∞)(A) for a hermitian matrix."""
    return int(np.sum(np.linalg.eigvalsh(a) > threshold))


def fan_inequality_check(t, s, a: float, b: float) -> tuple[int, int]:
    """(N_{a+b}(T+S), N_a(T) + N_b(S)) where N_c counts eigenvalues above c."""
    return count_above(t + s, a + b), count_above(t, a) + count_above(s, b)


# -- product-convolution operators -------------------------------------------------------

VARIANTS = ("bessel", "riesz-deflated", "riesz", "left-multiplier")


def product_convolution(
    f, k: float, variant: str, lap: DiscreteOperator, implicit: bool | None = None
) -> DiscreteOperator:
    """Operators built from M_f and (1-Δ)^{-k/4} (or (-Δ)^{-k/4}).

    ``bessel``          (1-Δ)^{-k/4} M_f (1-Δ)^{-k/4}
    ``riesz-deflated``  (-Δ)^{-k/4} M_f (-Δ)^{-k/4} on the complement of the kernel
    ``riesz``           as above without deflation; raises SingularityError
    ``left-multiplier`` M_f (1-Δ)^{-k/4}

    ``f`` is given in the flattened order of the grid (for block families,
    of the spatial blocks).  For block families with k/2 an integer and
    f >= 0 the bessel sandwich is represented implicitly by the isospectral
    operator f^{1/2} (1-Δ_θ)^{-k/2} f^{1/2}, applied through a sparse LU
    factorisation; ``implicit`` forces or forbids that form.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if not k > 0:
        raise ValueError("k must be positive")
    f = np.asarray(f)
    if variant == "riesz":
        raise SingularityError("(-Δ)^{-k/4} is singular on the constant mode; use riesz-deflated")
    nonneg = np.isrealobj(f) and np.all(f >= 0)
    can_implicit = lap.is_block and variant == "bessel" and nonneg and float(k / 2).is_integer()
    if implicit is None:
        implicit = can_implicit and max(b.shape[0] for b in lap.blocks) > DENSE_BLOCK_LIMIT
    if implicit:
        if not can_implicit:
            raise ValueError("implicit form needs a block family, bessel variant, f >= 0, even k")
        blocks = [_implicit_sandwich(b, f, int(k // 2)) for b in lap.blocks]
        return DiscreteOperator(
            grid=lap.grid, label=f"(1-Δ)^-{k / 4:g} M_f (1-Δ)^-{k / 4:g}", blocks=blocks,
            modes=lap.modes, d_hom=lap.d_hom, volume=lap.volume,
        )
    if variant == "riesz-deflated":
        j = riesz_power(lap, k / 4, deflate=True)
    else:
        j = bessel_power(lap, k / 4)
    out = []
    for jb in j.parts:
        jb = _dense(jb)
        if variant == "left-multiplier":
            out.append(f[:, None] * jb)
        else:
            m = jb @ (f[:, None] * jb)
            out.append((m + m.conj().T) / 2 if np.isrealobj(f) else m)
    hermitian = variant != "left-multiplier" and np.isrealobj(f)
    label = {
        "bessel": f"(1-Δ)^-{k / 4:g} M_f (1-Δ)^-{k / 4:g}",
        "riesz-deflated": f"(-Δ)^-{k / 4:g} M_f (-Δ)^-{k / 4:g}",
        "left-multiplier": f"M_f (1-Δ)^-{k / 4:g}",
    }[variant]
    kw = dict(grid=lap.grid, hermitian=hermitian, label=label, d_hom=lap.d_hom, volume=lap.volume)
    if lap.is_block:
        return DiscreteOperator(blocks=out, modes=lap.modes, **kw)
    return DiscreteOperator(out[0], **kw)


def _implicit_sandwich(block, f, power: int) -> spla.LinearOperator:
    n = block.shape[0]
    shifted = (sp.eye(n, format="csc") - sp.csc_matrix(block)).astype(complex)
    lu = spla.splu(shifted)
    root = np.sqrt(f).astype(float)

    def apply(v):
        w = root * np.ravel(v)
        for _ in range(power):
            w = lu.solve(w)
        return root * w

    return spla.LinearOperator((n, n), matvec=apply, rmatvec=apply, dtype=complex)


# -- asymptotic fit ------------------------------------------------------------------------

MIN_FIT_POINTS = 20
MIN_VALUES = 50
TOP_FRACTION = 0.95


def asymptotic_fit(
    values, p: float, window=(20, 100), expected_constant: float | None = None
) -> SpectralReport:
    """Median of (n+1) μ(n)^p over a window of indices.

    The window is clipped to the first 95% of the available values; fewer
    than 20 remaining indices raise :class:`FitError`.  The slope is the
    least-squares slope of log μ(n) against log(n+1) on the window, and the
    residual spread is the 10-90 percentile half-width of the profile
    relative to the median.
    """
    report = values if isinstance(values, SpectralReport) else SpectralReport(values)
    mu = report.singular_values
    if len(mu) < MIN_VALUES:
        raise FitError(f"need at least {MIN_VALUES} singular values, got {len(mu)}")
    lo, hi = int(window[0]), int(window[1])
    hi = min(hi, int(TOP_FRACTION * len(mu)) - 1)
    if lo < 0 or hi - lo + 1 < MIN_FIT_POINTS:
        raise FitError(f"fit window [{window[0]}, {window[1]}] leaves {max(0, hi - lo + 1)} points")
    n = np.arange(lo, hi + 1)
    prof = (n + 1) * mu[n] ** p
    fitted = float(np.median(prof))
    positive = mu[n] > 0
    slope = float("nan")
    if positive.sum() >= 2:
        slope = float(np.polyfit(np.log(n[positive] + 1), np.log(mu[n][positive]), 1)[0])
    spread = 0.0
    if fitted > 0:
        q10, q90 = np.percentile(prof, [10, 90])
        spread = float((q90 - q10) / (2 * fitted))
    deviation = None
    if expected_constant is not None:
        deviation = float((fitted - expected_constant) / expected_constant)
    return SpectralReport(
        mu, report.operator_label, p, (lo, hi), fitted, slope, spread, expected_constant, deviation
    )


# -- constants ----------------------------------------------------------------------------


def euclidean_constant(d: int) -> float:
    """Vol(S^{d-1}) / (d (2π)^d)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return sphere / (d * (2 * math.pi) ** d)


def _sinhc_power(lam, n):
    lam = np.asarray(lam, dtype=float)
    small = np.abs(lam) < 1e-8
    safe = np.where(small, 1.0, lam)
    # λ/sinh λ = 2λ e^{-λ} / (1 - e^{-2λ}), stable for large λ
    val = np.where(small, 1.0, 2 * safe * np.exp(-safe) / -np.expm1(-2 * safe))
    return val**n


def heat_constant_hn(n: int, method: str = "scipy") -> float:
    """(n+1)!^{-1} (4π)^{-n-1} ∫_0^∞ (λ / sinh λ)^n dλ.

    ``method`` selects the quadrature: adaptive Gauss-Kronrod (scipy) or
    tanh-sinh in extended precision (mpmath).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if method == "scipy":
        integral, _ = quad(lambda x: float(_sinhc_power(x, n)), 0, np.inf, epsabs=0, epsrel=1e-13,
                           limit=200)
    elif method == "mpmath":
        with mpmath.workdps(30):
            integral = float(
                mpmath.quad(lambda x: (x / mpmath.sinh(x)) ** n if x else mpmath.mpf(1), [0, 1, mpmath.inf])
            )
    else:
        raise ValueError(f"unknown method {method!r}")
    return integral / (math.factorial(n + 1) * (4 * math.pi) ** (n + 1))


def group_constant(algebra) -> float:
    """c_G for the shipped groups (ℝ^d and Heisenberg presets)."""
    name = getattr(algebra, "name", "")
    if name.startswith("r") and name[1:].isdigit():
        return euclidean_constant(int(name[1:]))
    if name.startswith("h") and name[1:].isdigit():
        return heat_constant_hn(int(name[1:]))
    raise ValueError(f"no closed-form constant for group {name!r}")


@dataclass
class ConstantEntry:
    name: str
    value: float
    provenance: str


def constant_table(max_d: int = 3, max_n: int = 2) -> list[ConstantEntry]:
    rows = [
        ConstantEntry(f"c_R{d}", euclidean_constant(d), "FORMULA: Vol(S^(d-1))/(d (2pi)^d)")
        for d in range(1, max_d + 1)
    ]
    rows += [
        ConstantEntry(f"c_H{n}", heat_constant_hn(n), "QUADRATURE: (lambda/sinh lambda)^n")
        for n in range(1, max_n + 1)
    ]
    return rows


def trace_constant(c_group: float, d_hom: int) -> float:
    """C in τ(g(-Δ)) = C ∫_0^∞ g(t) t^{d/2-1} dt.

    The counting function per unit volume is c_G λ^{d/2}; its derivative
    gives C = c_G d/2.
    """
    return c_group * d_hom / 2


def heat_kernel_hn_origin(n: int, s: float) -> float:
    """h_s(0) on ℍ^n for Δ = Σ X_j² + Y_j² with [X_j, Y_j] = 4T.

    Independent of :func:`heat_constant_hn`: after a Fourier transform in t
    the mode τ sees Landau levels 4|τ|(2k_1 + ... + 2k_n + n) with
    degeneracy (2|τ|/π)^n per unit area.
    """

    def integrand(tau):
        if tau <= 0:
            return 0.0
        return (2 * tau / math.pi) ** n * math.exp(-4 * n * s * tau) / (-math.expm1(-8 * s * tau)) ** n

    value, _ = quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    return 2 * value / (2 * math.pi)


# -- trace identities ------------------------------------------------------------------------


def hilbert_schmidt_identity(f, lap: DiscreteOperator, g) -> dict:
    """Both sides of ‖M_f g(-Δ)‖_2² = Tr(M_{|f|²} g(-Δ)²) and its translation-invariant form.

    ``invariant_rhs`` = ‖f‖²_{L_2} · Tr(g(-Δ)²) / vol, which equals the other
    two exactly when g(-Δ) has constant diagonal (translation invariance).
    """
    f = np.asarray(f).ravel()
    w, v = np.linalg.eigh(lap.to_dense())
    gw = np.asarray(g(-w))
    gm = (v * gw) @ v.conj().T
    lhs = float(np.sum(np.abs(f[:, None] * gm) ** 2))
    trace_form = float(np.real(np.sum(np.abs(f) ** 2 * np.diagonal(gm @ gm.conj().T))))
    cell = lap.grid.cell_volume
    l2 = float(np.sum(np.abs(f) ** 2) * cell)
    invariant = l2 * float(np.sum(np.abs(gw) ** 2)) / lap.domain_volume
    return {"lhs": lhs, "trace_form": trace_form, "invariant_rhs": invariant}


def zeta_trace(f, z: complex, lap: DiscreteOperator, d_hom: int | None = None,
               c_group: float | None = None) -> dict:
    """Tr(M_f^{2z} (1-Δ)^{-z/2}) and its predicted value.

    The prediction is c_G Γ(d/2 + 1) Γ((z-d)/2) / Γ(z/2) ∫ f^{2z}; powers are
    principal branches of positive reals.
    """
    d = d_hom if d_hom is not None else lap.d_hom
    z = complex(z)
    if not z.real > d:
        raise ValueError(f"Re z = {z.real} must exceed the homogeneous dimension {d}")
    f = np.asarray(f, dtype=float).ravel()
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    fz = np.zeros(len(f), dtype=complex)
    pos = f > 0
    fz[pos] = np.exp(2 * z * np.log(f[pos]))
    total = 0j
    for b, block_f in _split_blocks(lap, fz):
        w, v = np.linalg.eigh(_dense(b))
        gw = np.exp(-z / 2 * np.log1p(-w))
        diag = np.einsum("ij,j,ij->i", v, gw, v.conj())
        total += np.sum(block_f * diag)
    result = {"trace": total}
    if c_group is not None:
        integral = np.sum(fz) * _cell(lap) * _block_multiplicity(lap)
        predicted = c_group * gamma(d / 2 + 1) * gamma((z - d) / 2) / gamma(z / 2) * integral
        result["predicted"] = complex(predicted)
        result["deviation"] = complex((total - predicted) / predicted) if predicted != 0 else 0j
    return result


def _split_blocks(lap: DiscreteOperator, values):
    if not lap.is_block:
        return [(lap.matrix, values)]
    return [(b, values) for b in lap.blocks]


def _cell(lap: DiscreteOperator) -> float:
    if lap.is_block:
        return float(np.prod(lap.grid.spacing[:-1]))
    return lap.grid.cell_volume


def _block_multiplicity(lap: DiscreteOperator) -> float:
    # a block family over t-independent f integrates over the full t-period
    return 2 * lap.grid.box[-1] if lap.is_block else 1.0


# -- experiments -------------------------------------------------------------------------


def weyl_target(f, lap: DiscreteOperator, c_group: float, p: float) -> float:
    """c_G ∫ f^p over the discretised domain."""
    f = np.asarray(f, dtype=float).ravel()
    return float(c_group * np.sum(np.abs(f) ** p) * _cell(lap) * _block_multiplicity(lap))


def connes_trace_check(f, lap: DiscreteOperator, c_group: float, window=(50, 500),
                       count: int | None = None) -> SpectralReport:
    """Fit of (1-Δ)^{-d/4} M_f (1-Δ)^{-d/4} at p = 1 against c_G ∫ f."""
    d = lap.d_hom
    target = weyl_target(f, lap, c_group, 1.0)
    if not np.any(np.asarray(f)):
        return SpectralReport(np.zeros(1), "connes", 1.0, tuple(window), 0.0,
                              expected_constant=target, deviation=None)
    op = product_convolution(f, d, "bessel", lap)
    rep = singular_values(op, count=count or int(window[1] / TOP_FRACTION) + 2)
    return asymptotic_fit(rep, 1.0, window, target)


@dataclass
class CwikelRow:
    lhs: float
    rhs: float
    ratio: float


@dataclass
class CwikelTable:
    case: str
    p: float
    q: float | None
    rows: list[CwikelRow] = field(default_factory=list)

    @property
    def sup_ratio(self) -> float:
        return float(max((r.ratio for r in self.rows), default=0.0))


def cwikel_ratio_experiment(functions, p: float, lap: DiscreteOperator, case: str = "i",
                            covering=None, q: float | None = None) -> CwikelTable:
    """Ratios ‖M_f J‖_{p,∞} / ‖f‖ for the three Cwikel-type estimates.

    case ``i``:   J = (-Δ)^{-d/2p} (deflated), norm L_p, needs p > 2
    case ``ii``:  J = (1-Δ)^{-d/2p}, norm ℓ_p(L_q), needs p < 2 < q
    case ``iii``: J = (1-Δ)^{-d/2p}, norm ℓ_{2,log}(L_q), needs p = 2 < q

    ``functions`` are SampledFunction objects on the operator grid points.
    """
    d = lap.d_hom
    if case == "i":
        if not p > 2:
            raise ConfigError("case i needs p > 2")
        j = riesz_power(lap, d / (2 * p))
    elif case in ("ii", "iii"):
        if q is None or not q > 2:
            raise ConfigError(f"case {case} needs q > 2")
        if case == "ii" and not p < 2:
            raise ConfigError("case ii needs p < 2")
        if case == "iii" and p != 2:
            raise ConfigError("case iii needs p = 2")
        if covering is None:
            raise ConfigError(f"case {case} needs a covering")
        j = bessel_power(lap, d / (2 * p))
    else:
        raise ConfigError(f"unknown case {case!r}")
    jd = j.to_dense()
    table = CwikelTable(case, p, q)
    for fn in functions:
        vals = np.asarray(fn.values).ravel()
        if case == "i":
            rhs = fn.lp_norm(p)
        elif case == "ii":
            rhs = mixed_norm(fn, covering, p, q)
        else:
            rhs = mixed_norm_log(fn, covering, 2.0, q)
        if rhs == 0:
            table.rows.append(CwikelRow(0.0, 0.0, 0.0))
            continue
        mu = np.linalg.svd(vals[:, None] * jd, compute_uv=False)
        lhs = schatten_norms(mu, p)[1]
        table.rows.append(CwikelRow(lhs, rhs, lhs / rhs))
    return table
