"""Stratified Lie algebras and their groups in exponential coordinates.

A group element is stored as its coordinate vector in the basis of the
algebra (exponential coordinates of the first kind), so the inverse of ``g``
is ``-g`` and Haar measure is Lebesgue measure on coordinates.  All routines
accept batches: the last axis of an array is the coordinate axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import bernoulli, gamma

STRUCTURE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StratifiedAlgebra:
    """Finite-dimensional graded Lie algebra with a fixed basis.

    ``structure_constants[i, j, k]`` is the coefficient of ``e_k`` in
    ``[e_i, e_j]``.  Basis vectors are ordered layer by layer.
    """

    layer_dims: tuple[int, ...]
    structure_constants: np.ndarray
    basis_labels: tuple[str, ...] | None = None
    name: str = ""

    def __post_init__(self):
        dims = tuple(int(n) for n in self.layer_dims)
        if not dims or any(n <= 0 for n in dims):
            raise ValueError(f"layer dimensions must be positive, got {self.layer_dims}")
        c = np.asarray(self.structure_constants)
        if np.iscomplexobj(c):
            if np.any(c.imag != 0):
                raise TypeError("structure constants must be real")
            c = c.real
        try:
            c = np.array(c, dtype=float)
        except (TypeError, ValueError) as exc:
            raise TypeError("structure constants must be real numbers") from exc
        d = sum(dims)
        if c.shape != (d, d, d):
            raise ValueError(
                f"structure constants have shape {c.shape}, expected {(d, d, d)} "
                f"for layers {dims}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("structure constants must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "structure_constants", c)
        if self.basis_labels is not None:
            labels = tuple(self.basis_labels)
            if len(labels) != d:
                raise ValueError(f"expected {d} basis labels, got {len(labels)}")
            object.__setattr__(self, "basis_labels", labels)

    @property
    def dimension(self) -> int:
        return sum(self.layer_dims)

    @property
    def steps(self) -> int:
        return len(self.layer_dims)

    @property
    def layer_index(self) -> np.ndarray:
        """1-based layer number of each basis vector."""
        return np.repeat(np.arange(1, self.steps + 1), self.layer_dims)

    def layer_slice(self, k: int) -> slice:
        """Coordinate slice of layer ``k`` (1-based)."""
        start = sum(self.layer_dims[: k - 1])
        return slice(start, start + self.layer_dims[k - 1])

    @property
    def generators(self) -> range:
        """Indices of the layer-1 basis vectors."""
        return range(self.layer_dims[0])

    def bracket(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return np.einsum("...i,...j,ijk->...k", a, b, self.structure_constants)

    def labels(self) -> tuple[str, ...]:
        if self.basis_labels is not None:
            return self.basis_labels
        return tuple(f"e{i + 1}" for i in range(self.dimension))

    def __repr__(self):
        name = self.name or "algebra"
        return f"StratifiedAlgebra({name!r}, layers={self.layer_dims})"


def abelian(d: int, name: str | None = None) -> StratifiedAlgebra:
    return StratifiedAlgebra((d,), np.zeros((d, d, d)), name=name or f"r{d}")


def algebra_from_brackets(layer_dims, brackets, labels=None, name="") -> StratifiedAlgebra:
    """Build an algebra from ``(i, j, k, value)`` entries meaning [e_i, e_j] += value e_k.

    Indices are 0-based.  The antisymmetric partner of each entry is filled in.
    """
    d = sum(layer_dims)
    c = np.zeros((d, d, d))
    for i, j, k, value in brackets:
        c[i, j, k] += value
        c[j, i, k] -= value
    return StratifiedAlgebra(tuple(layer_dims), c, labels, name)


def heisenberg(n: int = 1) -> StratifiedAlgebra:
    """Heisenberg algebra with [X_j, Y_j] = 4T.

    With this normalisation the left-invariant fields of ``h1`` are
    X = d/dx - 2y d/dt and Y = d/dy + 2x d/dt.
    """
    labels = [f"X{j + 1}" for j in range(n)] + [f"Y{j + 1}" for j in range(n)] + ["T"]
    if n == 1:
        labels = ["X", "Y", "T"]
    brackets = [(j, n + j, 2 * n, 4.0) for j in range(n)]
    return algebra_from_brackets((2 * n, 1), brackets, labels, name=f"h{n}")


def bony(n_extra: int = 2) -> StratifiedAlgebra:
    """Algebra of the fields d/dt and d/ds + t d/dx1 + ... + t^N d/dxN.

    Basis (T, S, X1, ..., XN) with [T, S] = X1 and [T, X_j] = (j + 1) X_{j+1}.
    """
    d = 2 + n_extra
    brackets = [(0, 1, 2, 1.0)]
    brackets += [(0, 2 + j, 3 + j, float(j + 2)) for j in range(n_extra - 1)]
    labels = ["T", "S"] + [f"X{j + 1}" for j in range(n_extra)]
    layers = (2,) + (1,) * n_extra
    assert sum(layers) == d
    return algebra_from_brackets(layers, brackets, labels, name=f"bony{n_extra}")


PRESETS = {
    "r1": lambda: abelian(1),
    "r2": lambda: abelian(2),
    "r3": lambda: abelian(3),
    "h1": lambda: heisenberg(1),
    "h2": lambda: heisenberg(2),
    "bony2": lambda: bony(2),
}


def get_preset(name: str) -> StratifiedAlgebra:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown group preset {name!r}; known: {sorted(PRESETS)}") from None


# -- validation -----------------------------------------------------------------


def bracket_closure(algebra: StratifiedAlgebra, tol: float = 1e-9) -> list[int]:
    """Dimensions of V_1 ⊂ V_2 ⊂ ... with V_1 = layer 1 and V_{k+1} = V_k + [V_1, V_k].

    Iteration stops when the dimension stabilises; the last entry is the
    dimension of the subalgebra generated by the first layer.
    """
    d = algebra.dimension
    gens = np.eye(d)[list(algebra.generators)]
    basis = _row_basis(gens, tol)
    dims = [basis.shape[0]]
    while True:
        new = algebra.bracket(gens[:, None, :], basis[None, :, :]).reshape(-1, d)
        grown = _row_basis(np.vstack([basis, new]), tol)
        if grown.shape[0] == basis.shape[0]:
            return dims
        basis = grown
        dims.append(basis.shape[0])


def _row_basis(rows: np.ndarray, tol: float) -> np.ndarray:
    if rows.size == 0:
        return rows
    _, s, vt = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return vt[:rank]


def validate_stratification(algebra: StratifiedAlgebra) -> list[str]:
    """Return a list of violated constraints; empty means the algebra is stratified."""
    c = algebra.structure_constants
    problems = []
    asym = np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0)
    if asym > STRUCTURE_TOL:
        problems.append(f"antisymmetry violated (max |c_ijk + c_jik| = {asym:.3g})")
    # [e_i,[e_j,e_k]] + [e_j,[e_k,e_i]] + [e_k,[e_i,e_j]]
    inner = np.einsum("jkl,ilm->ijkm", c, c)
    jacobi = inner + inner.transpose(1, 2, 0, 3) + inner.transpose(2, 0, 1, 3)
    jac = np.max(np.abs(jacobi), initial=0.0)
    if jac > STRUCTURE_TOL:
        problems.append(f"Jacobi identity violated (max defect {jac:.3g})")
    layer = algebra.layer_index
    target = layer[:, None, None] + layer[None, :, None]
    off_grade = (np.abs(c) > STRUCTURE_TOL) & (target != layer[None, None, :])
    if np.any(off_grade):
        i, j, k = np.argwhere(off_grade)[0]
        labels = algebra.labels()
        problems.append(
            f"grading violated: [{labels[i]}, {labels[j]}] has a component along "
            f"{labels[k]} (layer {layer[k]}, expected layer {layer[i] + layer[j]})"
        )
    dims = bracket_closure(algebra)
    if dims[-1] != algebra.dimension:
        problems.append(
            f"generation failed: layer 1 generates a subalgebra of dimension {dims[-1]} "
            f"< {algebra.dimension} (filtration {dims})"
        )
    return problems


def homogeneous_dimension(algebra: StratifiedAlgebra) -> int:
    return sum(n * dim for n, dim in enumerate(algebra.layer_dims, start=1))


# -- group law --------------------------------------------------------------------


@lru_cache(maxsize=None)
def _psi_coefficients(order: int) -> tuple[float, ...]:
    # Taylor coefficients of u / (1 - exp(-u))
    b = bernoulli(order)
    return tuple(float((-1) ** n * b[n] / math.factorial(n)) for n in range(order + 1))


def group_product(g1, g2, algebra: StratifiedAlgebra) -> np.ndarray:
    """Product of group elements in exponential coordinates (batched).

    Computes Z = log(exp X exp Y) exactly.  Z(t) = log(exp X exp tY) solves
    Z' = psi(ad Z) Y with psi(u) = u / (1 - e^{-u}); nilpotency makes Z a
    polynomial in t of degree <= steps, so Picard iteration on its
    coefficients terminates after ``steps`` rounds.
    """
    x = np.asarray(g1, dtype=float)
    y = np.asarray(g2, dtype=float)
    if x.shape[-1] != algebra.dimension or y.shape[-1] != algebra.dimension:
        raise ValueError(
            f"coordinate length mismatch: {x.shape[-1]}, {y.shape[-1]} vs {algebra.dimension}"
        )
    x, y = np.broadcast_arrays(x, y)
    s = algebra.steps
    if s == 1 or not np.any(algebra.structure_constants):
        return x + y
    psi = _psi_coefficients(s)
    zero = np.zeros_like(x)
    z = [x] + [zero] * s  # coefficients of t^0 .. t^s
    for _ in range(s):
        term = [y] + [zero] * (s - 1)
        acc = [psi[0] * t for t in term]
        for n in range(1, s):
            term = _ad_poly(z, term, algebra, s - 1)
            acc = [a + psi[n] * t for a, t in zip(acc, term)]
        z = [x] + [acc[m] / (m + 1) for m in range(s)]
    return np.sum(z, axis=0)


def _ad_poly(z, w, algebra, degree):
    out = []
    for m in range(degree + 1):
        total = 0.0
        for a in range(m + 1):
            if a < len(z) and m - a < len(w):
                total = total + algebra.bracket(z[a], w[m - a])
        out.append(np.broadcast_to(total, w[0].shape) if np.isscalar(total) else total)
    return out


def group_inverse(g) -> np.ndarray:
    return -np.asarray(g, dtype=float)


def dilation(g, r: float, algebra: StratifiedAlgebra) -> np.ndarray:
    """Graded dilation: layer-k coordinates scaled by r**k."""
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    return np.asarray(g, dtype=float) * float(r) ** algebra.layer_index


# -- homogeneous quasi-metric -------------------------------------------------------


LAYER_NORMS = ("max", "euclidean")


@dataclass(frozen=True)
class QuasiMetric:
    """Homogeneous gauge rho(g) = max_k |p_k(g)|^(1/k) and dist(a, b) = rho(a^-1 b).

    ``layer_norm`` selects the norm of the layer projection p_k(g): ``"max"``
    (absolute coordinates, the default; unit ball is a coordinate box) or
    ``"euclidean"``.
    """

    algebra: StratifiedAlgebra
    layer_norm: str = "max"

    def __post_init__(self):
        if self.layer_norm not in LAYER_NORMS:
            raise ValueError(f"layer_norm must be one of {LAYER_NORMS}")

    @property
    def steps(self) -> int:
        return self.algebra.steps

    @property
    def triangle_constant(self) -> int:
        """Constant c with rho(gh) <= c (rho(g) + rho(h))."""
        return self.steps

    def norm(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        parts = []
        for k in range(1, self.steps + 1):
            block = g[..., self.algebra.layer_slice(k)]
            if self.layer_norm == "max":
                size = np.max(np.abs(block), axis=-1)
            else:
                size = np.linalg.norm(block, axis=-1)
            parts.append(size ** (1.0 / k))
        return np.max(parts, axis=0)

    def dist(self, g1, g2) -> np.ndarray:
        return self.norm(group_product(group_inverse(g1), g2, self.algebra))

    def ball_volume(self, r: float) -> float:
        """Exact Haar volume of B(0, r)."""
        vol = 1.0
        for k, dim in enumerate(self.algebra.layer_dims, start=1):
            radius = float(r) ** k
            if self.layer_norm == "max":
                vol *= (2.0 * radius) ** dim
            else:
                vol *= math.pi ** (dim / 2) / gamma(dim / 2 + 1) * radius**dim
        return vol

    def bounding_box(self, r: float) -> np.ndarray:
        """Half-widths of the smallest coordinate box containing B(0, r)."""
        return float(r) ** self.algebra.layer_index.astype(float)


def quasi_norm(g, algebra: StratifiedAlgebra, layer_norm: str = "max") -> np.ndarray:
    return QuasiMetric(algebra, layer_norm).norm(g)


def dist(g1, g2, algebra: StratifiedAlgebra, layer_norm: str = "max") -> np.ndarray:
    return QuasiMetric(algebra, layer_norm).dist(g1, g2)


@dataclass
class BallVolumeEstimate:
    radii: np.ndarray
    volumes: np.ndarray
    stderr: np.ndarray
    exponent: float = field(default=float("nan"))


def monte_carlo_ball_volume(
    metric: QuasiMetric, radii, n_samples: int = 10**6, rng=None
) -> BallVolumeEstimate:
    """Estimate ball volumes by uniform sampling in one box containing every ball.

    The fitted log-log slope of volume against radius estimates the
    homogeneous dimension.
    """
    rng = np.random.default_rng(rng)
    radii = np.asarray(radii, dtype=float)
    half = metric.bounding_box(radii.max())
    box_volume = float(np.prod(2 * half))
    samples = rng.uniform(-half, half, size=(n_samples, metric.algebra.dimension))
    rho = metric.norm(samples)
    frac = np.array([np.mean(rho < r) for r in radii])
    volumes = box_volume * frac
    stderr = box_volume * np.sqrt(frac * (1 - frac) / n_samples)
    exponent = float("nan")
    if len(radii) >= 2 and np.all(frac > 0):
        exponent = float(np.polyfit(np.log(radii), np.log(volumes), 1)[0])
    return BallVolumeEstimate(radii, volumes, stderr, exponent)


# -- left-invariant vector fields -------------------------------------------------


def left_invariant_field(algebra: StratifiedAlgebra, i: int) -> list[dict[tuple, float]]:
    """Polynomial coefficients of the left-invariant field generated by e_i.

    Returns one polynomial per coordinate axis, as ``{exponents: coefficient}``.
    The field is d/de [g exp(e e_i)] at e = 0, i.e. psi(ad_g) e_i.
    """
    d = algebra.dimension
    psi = _psi_coefficients(algebra.steps)
    term = {(0,) * d: np.eye(d)[i]}
    total = {mono: psi[0] * vec for mono, vec in term.items()}
    for n in range(1, algebra.steps):
        nxt: dict[tuple, np.ndarray] = {}
        for mono, vec in term.items():
            for j in range(d):
                v = algebra.bracket(np.eye(d)[j], vec)
                if not np.any(v):
                    continue
                key = tuple(e + (a == j) for a, e in enumerate(mono))
                nxt[key] = nxt.get(key, 0.0) + v
        term = nxt
        for mono, vec in term.items():
            total[mono] = total.get(mono, 0.0) + psi[n] * vec
    coefficients = [dict() for _ in range(d)]
    for mono, vec in total.items():
        for axis in range(d):
            if abs(vec[axis]) > STRUCTURE_TOL:
                coefficients[axis][mono] = float(vec[axis])
    return coefficients


# -- algebra definition files -----------------------------------------------------


def parse_algebra(text: str) -> StratifiedAlgebra:
    """Parse the plain-text algebra format.

    Lines (``#`` starts a comment)::

        name h1
        dimension 3
        layers 2 1
        labels X Y T
        bracket 1 2 3 4      # [e_1, e_2] = 4 e_3, 1-based indices

    Only one of each antisymmetric pair needs to be listed.
    """
    fields: dict[str, list[str]] = {}
    brackets = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "bracket":
            if len(rest) != 4:
                raise ValueError(f"line {lineno}: bracket needs 'i j k value'")
            i, j, k = (int(v) - 1 for v in rest[:3])
            brackets.append((i, j, k, float(rest[3])))
        elif key in ("name", "dimension", "layers", "labels"):
            fields[key] = rest
        else:
            raise ValueError(f"line {lineno}: unknown field {key!r}")
    if "dimension" not in fields or "layers" not in fields:
        raise ValueError("algebra file needs 'dimension' and 'layers'")
    dim = int(fields["dimension"][0])
    layers = tuple(int(v) for v in fields["layers"])
    if sum(layers) != dim:
        raise ValueError(f"layers {layers} do not sum to dimension {dim}")
    for i, j, k, _ in brackets:
        if not all(0 <= idx < dim for idx in (i, j, k)):
            raise ValueError(f"bracket index out of range 1..{dim}")
    c = np.zeros((dim, dim, dim))
    for i, j, k, value in brackets:
        c[i, j, k] = value
        if (j, i, k) not in {(a, b, e) for a, b, e, _ in brackets}:
            c[j, i, k] = -value
    labels = tuple(fields["labels"]) if "labels" in fields else None
    name = fields.get("name", [""])[0]
    return StratifiedAlgebra(layers, c, labels, name)


def format_algebra(algebra: StratifiedAlgebra) -> str:
    lines = []
    if algebra.name:
        lines.append(f"name {algebra.name}")
    lines.append(f"dimension {algebra.dimension}")
    lines.append("layers " + " ".join(str(n) for n in algebra.layer_dims))
    lines.append("labels " + " ".join(algebra.labels()))
    c = algebra.structure_constants
    for i, j, k in np.argwhere(np.abs(c) > 0):
        if i < j:
            lines.append(f"bracket {i + 1} {j + 1} {k + 1} {c[i, j, k]:.17g}")
    return "\n".join(lines) + "\n"


def load_algebra(source: str | Path) -> StratifiedAlgebra:
    """Load a preset by name or an algebra definition file by path."""
    if str(source) in PRESETS:
        return get_preset(str(source))
    return parse_algebra(Path(source).read_text())
