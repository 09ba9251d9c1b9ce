"""Discretised vector fields, sub-Laplacians and functions of them on periodic boxes.

Grid points along axis k are ``-L_k + h_k * j`` for ``j = 0..N_k-1`` and the
flattened index is row-major (C order), so the last axis varies fastest.

Three finite-difference schemes are available for first derivatives:

``central``   (u[j+1] - u[j-1]) / 2h, exactly antisymmetric
``forward``   (u[j+1] - u[j]) / h
``spectral``  Fourier differentiation with symbol i*xi (complex)

Sub-Laplacians are always built as -Σ X_kᴴ X_k, which is negative
semidefinite by construction and equals Σ X_k² for the central scheme.
With forward differences on ℝ^d this is the standard second difference.
For ℍ¹ the ``group`` scheme differentiates along the group action on a
compact nilmanifold instead of along coordinate lines (see
:func:`heisenberg_nilmanifold_blocks`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.special import gamma

from .algebra import StratifiedAlgebra, homogeneous_dimension, left_invariant_field
from .covering import SampledFunction
from .errors import DecompositionError, SingularityError, StencilError

SCHEMES = ("central", "forward", "spectral")
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Periodic box prod_k [-L_k, L_k) with N_k points per axis."""

    dims: tuple[int, ...]
    box: tuple[float, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in np.atleast_1d(self.dims))
        box = tuple(float(b) for b in np.broadcast_to(np.atleast_1d(self.box), (len(dims),)))
        if any(n < 4 or n % 2 for n in dims):
            raise ValueError(f"grid point counts must be even and >= 4, got {dims}")
        if any(not b > 0 for b in box):
            raise ValueError(f"box half-widths must be positive, got {box}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "box", box)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def spacing(self) -> np.ndarray:
        return 2 * np.asarray(self.box) / np.asarray(self.dims)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(2 * np.asarray(self.box)))

    def axis(self, k: int) -> np.ndarray:
        return -self.box[k] + self.spacing[k] * np.arange(self.dims[k])

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*(self.axis(k) for k in range(self.ndim)), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(points)`` and return values in flattened grid order."""
        return np.asarray(func(self.points)).ravel()

    def sub(self, axes) -> "GridSpec":
        axes = list(axes)
        return GridSpec(tuple(self.dims[k] for k in axes), tuple(self.box[k] for k in axes))


@dataclass(eq=False)
class DiscreteOperator:
    """A matrix, or a block-diagonal family of matrices, on a grid.

    ``matrix`` may be dense, sparse or a ``scipy.sparse.linalg.LinearOperator``.
    For block families ``blocks[i]`` acts on Fourier mode ``modes[i]`` of the
    last grid axis and ``matrix`` is None.
    """

    matrix: object = None
    grid: GridSpec | None = None
    hermitian: bool = True
    label: str = ""
    blocks: list | None = None
    modes: np.ndarray | None = None
    d_hom: int | None = None
    volume: float | None = None
    _eigs: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_block(self) -> bool:
        return self.blocks is not None

    @property
    def parts(self) -> list:
        return self.blocks if self.is_block else [self.matrix]

    @property
    def shape(self) -> tuple[int, int]:
        n = sum(b.shape[0] for b in self.parts)
        return (n, n)

    @property
    def domain_volume(self) -> float:
        if self.volume is not None:
            return self.volume
        return self.grid.volume

    def to_dense(self) -> np.ndarray:
        mats = [_dense(b) for b in self.parts]
        return mats[0] if len(mats) == 1 else sla.block_diag(*mats)

    def hermitian_defect(self) -> float:
        worst = 0.0
        for b in self.parts:
            if sp.issparse(b):
                diff = abs(b - b.conj().T)
                worst = max(worst, diff.max() if diff.nnz else 0.0)
            else:
                m = _dense(b)
                worst = max(worst, float(np.max(np.abs(m - m.conj().T), initial=0.0)))
        return float(worst)

    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues (hermitian operators), ascending; cached."""
        if self._eigs is None:
            if not self.hermitian:
                raise ValueError("eigenvalues() needs a hermitian operator")
            vals = [np.linalg.eigvalsh(_dense(b)) for b in self.parts]
            self._eigs = np.sort(np.concatenate(vals))
        return self._eigs

    def block_eigenvalues(self) -> list[np.ndarray]:
        return [np.linalg.eigvalsh(_dense(b)) for b in self.parts]

    def write_coo(self, path: str | Path) -> None:
        """Write the (full, block-diagonal if needed) matrix as 'row col value' text."""
        m = sp.coo_matrix(self.to_dense() if self.is_block or not sp.issparse(self.matrix) else self.matrix)
        is_complex = np.iscomplexobj(m.data) and np.any(m.data.imag != 0)
        with open(path, "w") as fh:
            fh.write(f"# {self.label or 'operator'} shape {m.shape[0]} {m.shape[1]} nnz {m.nnz}\n")
            for r, c, v in zip(m.row, m.col, m.data):
                if is_complex:
                    fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")
                else:
                    fh.write(f"{r} {c} {np.real(v):.17g}\n")


def read_coo(path: str | Path) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    shape = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            parts = line.split()
            shape = (int(parts[parts.index("shape") + 1]), int(parts[parts.index("shape") + 2]))
            continue
        parts = line.split()
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
        vals.append(float(parts[2]) + (1j * float(parts[3]) if len(parts) > 3 else 0))
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)


def _dense(m) -> np.ndarray:
    if sp.issparse(m):
        return m.toarray()
    if isinstance(m, np.ndarray):
        return m
    # LinearOperator
    return m @ np.eye(m.shape[1], dtype=m.dtype)


# -- vector fields -----------------------------------------------------------------


@dataclass(frozen=True)
class VectorFieldStencil:
    """X = Σ_a c_a(x) ∂_a with polynomial coefficients ``{exponents: coefficient}``."""

    coefficients: tuple[dict, ...]
    label: str = ""

    @classmethod
    def from_algebra(cls, algebra: StratifiedAlgebra, i: int) -> "VectorFieldStencil":
        return cls(tuple(left_invariant_field(algebra, i)), algebra.labels()[i])

    @property
    def ndim(self) -> int:
        return len(self.coefficients)

    def evaluate(self, axis: int, points: np.ndarray) -> np.ndarray:
        out = np.zeros(len(points))
        for mono, c in self.coefficients[axis].items():
            out += c * np.prod(points ** np.asarray(mono), axis=-1)
        return out

    def depends_on(self, axis: int, coordinate: int) -> bool:
        return any(mono[coordinate] for mono in self.coefficients[axis])


def derivative_matrix(n: int, h: float, scheme: str = "central"):
    """Periodic first-derivative matrix on n points with spacing h."""
    if scheme == "central":
        s = sp.diags([np.ones(n - 1), [1.0]], [1, -(n - 1)], shape=(n, n))
        return ((s - s.T) / (2 * h)).tocsr()
    if scheme == "forward":
        s = sp.diags([np.ones(n - 1), [1.0]], [1, -(n - 1)], shape=(n, n))
        return ((s - sp.eye(n)) / h).tocsr()
    if scheme == "spectral":
        xi = 2 * np.pi * np.fft.fftfreq(n, d=h)
        return np.fft.ifft(1j * xi[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def derivative_symbol(theta, h: float, scheme: str):
    """Eigenvalue of :func:`derivative_matrix` on the mode exp(i theta x)."""
    theta = np.asarray(theta, dtype=float)
    if scheme == "central":
        return 1j * np.sin(theta * h) / h
    if scheme == "forward":
        return (np.exp(1j * theta * h) - 1) / h
    if scheme == "spectral":
        return 1j * theta
    raise ValueError(f"unknown scheme {scheme!r}")


def fourier_modes(n: int, h: float) -> np.ndarray:
    """Angular frequencies of the n-point periodic grid, in FFT order."""
    return 2 * np.pi * np.fft.fftfreq(n, d=h)


def _axis_operator(d1, grid: GridSpec, axis: int):
    before = int(np.prod(grid.dims[:axis]))
    after = int(np.prod(grid.dims[axis + 1 :]))
    d1 = sp.csr_matrix(d1)
    return sp.kron(sp.eye(before), sp.kron(d1, sp.eye(after)), format="csr")


def _check_stencil(field: VectorFieldStencil):
    for axis in range(field.ndim):
        if field.depends_on(axis, axis):
            raise StencilError(
                f"coefficient of d/dx{axis + 1} in {field.label or 'field'} depends on x{axis + 1}"
            )


def assemble_vector_field(
    field: VectorFieldStencil, grid: GridSpec, scheme: str = "central", axes=None
) -> DiscreteOperator:
    """Sparse matrix of X = Σ_a M_{c_a} D_a on the grid.

    ``axes`` restricts assembly to a subset of derivative axes (the others
    are dropped); it is used by the Fourier block decomposition.
    """
    if field.ndim != grid.ndim:
        raise ValueError(f"field has {field.ndim} axes, grid has {grid.ndim}")
    _check_stencil(field)
    pts = grid.points
    total = sp.csr_matrix((grid.size, grid.size))
    for a in range(grid.ndim) if axes is None else axes:
        if not field.coefficients[a]:
            continue
        d = _axis_operator(derivative_matrix(grid.dims[a], grid.spacing[a], scheme), grid, a)
        c = field.evaluate(a, pts)
        total = total + sp.diags(c) @ d
    return DiscreteOperator(total.tocsr(), grid, hermitian=False, label=f"{field.label}_h")


def _nsd_sum(fields) -> sp.csr_matrix:
    lap = None
    for x in fields:
        term = -(x.conj().T @ x)
        lap = term if lap is None else lap + term
    lap = ((lap + lap.conj().T) / 2).tocsr()
    if np.iscomplexobj(lap.data) and lap.nnz:
        if np.max(np.abs(lap.data.imag)) <= 1e-12 * max(1.0, np.max(np.abs(lap.data))):
            lap = lap.real.tocsr()
    lap.eliminate_zeros()
    return lap


def assemble_sublaplacian(
    algebra: StratifiedAlgebra, grid: GridSpec, scheme: str = "forward"
) -> DiscreteOperator:
    """Δ_h = -Σ_k X_{k,h}ᴴ X_{k,h} over the layer-1 fields."""
    fields = [
        assemble_vector_field(VectorFieldStencil.from_algebra(algebra, i), grid, scheme).matrix
        for i in algebra.generators
    ]
    return DiscreteOperator(
        _nsd_sum(fields), grid, True, "Δ_h", d_hom=homogeneous_dimension(algebra)
    )


def assemble_multiplier(f, grid: GridSpec | None = None, label: str = "M_f") -> DiscreteOperator:
    """Diagonal multiplication operator from samples in flattened grid order."""
    values = np.asarray(f).ravel()
    if grid is not None and values.size != grid.size:
        raise ValueError(f"{values.size} samples for a grid of {grid.size} points")
    hermitian = not (np.iscomplexobj(values) and np.any(values.imag != 0))
    return DiscreteOperator(sp.diags(values).tocsr(), grid, hermitian, label)


# -- functional calculus ------------------------------------------------------------


def _kernel_tol(w) -> float:
    return 1e-10 * max(1.0, float(np.max(np.abs(w), initial=0.0)))


def operator_function(
    op: DiscreteOperator, g, deflate: bool = False, label: str | None = None
) -> DiscreteOperator:
    """g(op) by dense eigendecomposition (per block for block families).

    With ``deflate=True`` the kernel of ``op`` is projected out: g is not
    evaluated there and the result vanishes on it.  Non-finite values of g
    on the (remaining) spectrum raise :class:`SingularityError`.
    """
    if not op.hermitian:
        raise ValueError("operator_function needs a hermitian operator")
    out = []
    for b in op.parts:
        w, v = np.linalg.eigh(_dense(b))
        keep = np.abs(w) > _kernel_tol(w) if deflate else np.ones_like(w, dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            gw = np.asarray(g(w[keep]), dtype=complex if _is_complex_func(g, w) else float)
        if not np.all(np.isfinite(gw)):
            raise SingularityError(
                "function is not finite on the spectrum"
                + ("" if deflate else " (use deflate=True to project out the kernel)")
            )
        vals = np.zeros(len(w), dtype=gw.dtype)
        vals[keep] = gw
        m = (v * vals) @ v.conj().T
        if not np.iscomplexobj(_dense(b)) and not np.iscomplexobj(vals):
            m = m.real
        out.append(m)
    real_valued = all(not np.iscomplexobj(m) or np.allclose(np.diagonal(m).imag, 0) for m in out)
    kw = dict(grid=op.grid, hermitian=real_valued, label=label or f"g({op.label})",
              d_hom=op.d_hom, volume=op.volume)
    if op.is_block:
        return DiscreteOperator(blocks=out, modes=op.modes, **kw)
    return DiscreteOperator(out[0], **kw)


def _is_complex_func(g, w) -> bool:
    with np.errstate(all="ignore"):
        probe = np.asarray(g(np.abs(w[:1]) + 1.0))
    return np.iscomplexobj(probe)


def bessel_power(lap: DiscreteOperator, s: float) -> DiscreteOperator:
    """(1 - Δ)^{-s} for a negative semidefinite Δ."""
    return operator_function(_negate(lap), lambda t: (1.0 + t) ** (-s), label=f"(1-Δ)^-{s:g}")


def riesz_power(lap: DiscreteOperator, s: float, deflate: bool = True) -> DiscreteOperator:
    """(-Δ)^{-s}; the kernel must be deflated."""
    return operator_function(
        _negate(lap), lambda t: np.where(t > 0, t, 0.0) ** (-s), deflate=deflate,
        label=f"(-Δ)^-{s:g}",
    )


def _negate(op: DiscreteOperator) -> DiscreteOperator:
    kw = dict(grid=op.grid, hermitian=op.hermitian, label=f"-{op.label}", d_hom=op.d_hom,
              volume=op.volume)
    if op.is_block:
        return DiscreteOperator(blocks=[-b for b in op.blocks], modes=op.modes, **kw)
    return DiscreteOperator(-op.matrix, **kw)


# -- Fourier decomposition in the last (central) coordinate -----------------------------


def fourier_block_decompose(
    algebra: StratifiedAlgebra,
    grid: GridSpec,
    f=None,
    scheme: str = "forward",
    order: int = 4,
) -> tuple[DiscreteOperator, DiscreteOperator | None]:
    """Block-diagonalise the sub-Laplacian along the last grid axis.

    Returns ``(Δ blocks, M_f blocks)``.  Each block acts on functions of the
    remaining axes; block ``i`` corresponds to the Fourier mode
    ``modes[i]`` of the last axis.  ``f`` (samples in full grid order or a
    callable) must be constant along the last axis, and no field coefficient
    may depend on the last coordinate.

    ``scheme="group"`` selects the nilmanifold discretisation for ℍ¹
    (:func:`heisenberg_nilmanifold_blocks`).
    """
    last = grid.ndim - 1
    f_blocks = None
    if f is not None:
        values = grid.sample(f) if callable(f) else np.asarray(f).ravel()
        cube = values.reshape(grid.dims)
        if np.max(np.abs(cube - cube[..., :1])) > 1e-12 * max(1.0, np.max(np.abs(cube))):
            raise DecompositionError("multiplier varies along the decomposed axis")
        f_blocks = cube[..., 0].ravel()
    if scheme == "group":
        lap = heisenberg_nilmanifold_blocks(algebra, grid, order)
    else:
        fields = [VectorFieldStencil.from_algebra(algebra, i) for i in algebra.generators]
        for fld in fields:
            _check_stencil(fld)
            if any(fld.depends_on(a, last) for a in range(grid.ndim)):
                raise DecompositionError(
                    f"coefficients of {fld.label} depend on the last coordinate"
                )
        sub = grid.sub(range(last))
        pts = sub.points
        modes = fourier_modes(grid.dims[last], grid.spacing[last])
        parts = []
        for fld in fields:
            spatial = assemble_vector_field(
                VectorFieldStencil(
                    tuple({m[:last]: c for m, c in fld.coefficients[a].items()} for a in range(last)),
                    fld.label,
                ),
                sub, scheme,
            ).matrix
            coef = np.zeros(sub.size)
            for mono, c in fld.coefficients[last].items():
                coef += c * np.prod(pts ** np.asarray(mono[:last]), axis=-1)
            parts.append((spatial, coef))
        blocks = []
        for theta in modes:
            sym = derivative_symbol(theta, grid.spacing[last], scheme)
            xs = [sp.csr_matrix(s, dtype=complex) + sp.diags(sym * c) for s, c in parts]
            blocks.append(_nsd_sum(xs))
        lap = DiscreteOperator(
            grid=grid, label="Δ_h", blocks=blocks, modes=modes,
            d_hom=homogeneous_dimension(algebra),
        )
    mult = None
    if f_blocks is not None:
        mult = DiscreteOperator(
            grid=grid, label="M_f", blocks=[sp.diags(f_blocks).tocsr()] * len(lap.blocks),
            modes=lap.modes, hermitian=not np.iscomplexobj(f_blocks),
        )
    return lap, mult


def _magnetic_hop(n: int, box: float, tau: float, axis: int, step: int) -> sp.csr_matrix:
    """Translation by exp(step*h*X) (axis 0) or exp(step*h*Y) (axis 1) on mode tau.

    The phases implement the twisted periodicity of the nilmanifold:
    u(x+2L, y) = exp(-4i tau L y) u(x, y) and u(x, y+2L) = exp(4i tau L x) u(x, y).
    """
    h = 2 * box / n
    x = -box + h * np.arange(n)
    size = n * n
    ix, iy = np.divmod(np.arange(size), n)
    if axis == 0:
        jx = ix + step
        target = (jx % n) * n + iy
        phase = np.exp(-2j * tau * x[iy] * h * step)
        phase = phase * np.where(jx >= n, np.exp(-4j * tau * box * x[iy]), 1.0)
    else:
        jy = iy + step
        target = ix * n + (jy % n)
        phase = np.exp(2j * tau * x[ix] * h * step)
        phase = phase * np.where(jy >= n, np.exp(4j * tau * box * x[ix]), 1.0)
    return sp.csr_matrix((phase, (np.arange(size), target)), shape=(size, size))


def heisenberg_nilmanifold_blocks(
    algebra: StratifiedAlgebra, grid: GridSpec, order: int = 4
) -> DiscreteOperator:
    """Sub-Laplacian of ℍ¹ on the nilmanifold Γ\\ℍ¹, block-diagonal in t.

    Γ is generated by (2L_x, 0, 0), (0, 2L_y, 0) and (0, 0, 2L_t), which is a
    lattice subgroup when 4 L_x L_y / L_t is an integer.  Second derivatives
    along X and Y are central differences of the group translations
    u(g exp(hX)); ``order`` 2 or 4 selects the difference formula.
    Block i acts on the t-mode exp(i tau t) with tau = modes[i].
    """
    if algebra.layer_dims != (2, 1) or not np.allclose(
        algebra.structure_constants, _heisenberg_constants()
    ):
        raise DecompositionError("the group scheme is implemented for h1 only")
    n, n2, nt = grid.dims
    box, box2, box_t = grid.box
    if n != n2 or box != box2:
        raise ValueError("the group scheme needs a square (x, y) grid")
    ratio = 4 * box * box / box_t
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError(f"4 L^2 / L_t = {ratio} must be an integer for a lattice quotient")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    h = 2 * box / n
    modes = fourier_modes(nt, grid.spacing[2])
    eye = sp.eye(n * n, format="csr")
    blocks = []
    for tau in modes:
        lap = None
        for axis in (0, 1):
            s1 = _magnetic_hop(n, box, tau, axis, 1)
            d1 = (s1 + s1.conj().T - 2 * eye) / h**2
            if order == 4:
                s2 = _magnetic_hop(n, box, tau, axis, 2)
                d2 = (s2 + s2.conj().T - 2 * eye) / (4 * h**2)
                d1 = (4 / 3) * d1 - (1 / 3) * d2
            lap = d1 if lap is None else lap + d1
        blocks.append(lap.tocsr())
    return DiscreteOperator(
        grid=grid, label="Δ_h (nilmanifold)", blocks=blocks, modes=modes, d_hom=4
    )


def _heisenberg_constants() -> np.ndarray:
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = 4.0, -4.0
    return c


# -- heat trace ----------------------------------------------------------------------


def heat_trace(lap: DiscreteOperator, s: float, d_hom: int | None = None) -> tuple[float, float]:
    """Tr exp(sΔ_h) and c_hat(s) = s^{d/2} Tr / (vol Γ(d/2 + 1))."""
    if not s > 0:
        raise ValueError("s must be positive")
    d = d_hom if d_hom is not None else lap.d_hom
    if d is None:
        raise ValueError("homogeneous dimension unknown; pass d_hom")
    trace = float(np.sum(np.exp(s * lap.eigenvalues())))
    c_hat = s ** (d / 2) * trace / (lap.domain_volume * gamma(d / 2 + 1))
    return trace, float(c_hat)


def heat_trace_slope(lap: DiscreteOperator, s_values) -> tuple[float, np.ndarray, np.ndarray]:
    """Log-log slope of the heat trace over ``s_values`` with traces and c_hat."""
    s_values = np.asarray(s_values, dtype=float)
    res = np.array([heat_trace(lap, s) for s in s_values])
    slope = float(np.polyfit(np.log(s_values), np.log(res[:, 0]), 1)[0])
    return slope, res[:, 0], res[:, 1]


def euclidean_laplacian(grid: GridSpec, scheme: str = "forward") -> DiscreteOperator:
    """Periodic Laplacian on ℝ^d as -Σ D_aᴴ D_a (sparse unless spectral)."""
    lap = None
    for a in range(grid.ndim):
        d1 = derivative_matrix(grid.dims[a], grid.spacing[a], scheme)
        one = -(d1.conj().T @ d1)
        if not sp.issparse(one):
            one = one.real if np.max(np.abs(one.imag)) < 1e-12 * np.max(np.abs(one)) else one
            one = (one + one.conj().T) / 2
        term = _axis_operator(one, grid, a) if grid.ndim > 1 else one
        lap = term if lap is None else lap + term
    if sp.issparse(lap):
        lap = lap.tocsr()
    return DiscreteOperator(lap, grid, True, "Δ_h", d_hom=grid.ndim)


def sampled_function(grid: GridSpec, func):
    """SampledFunction of ``func`` on the grid nodes (cell volume = spacing product)."""
    values = np.asarray(func(grid.points)).reshape(grid.dims)
    return SampledFunction(tuple(grid.axis(k) for k in range(grid.ndim)), values)
