"""Numerical laboratory for spectral asymptotics of sub-Laplacians on stratified groups."""

__version__ = "0.1.0"

from .algebra import (
    QuasiMetric,
    StratifiedAlgebra,
    bracket_closure,
    dilation,
    dist,
    get_preset,
    group_inverse,
    group_product,
    homogeneous_dimension,
    load_algebra,
    monte_carlo_ball_volume,
    quasi_norm,
    validate_stratification,
)
from .counting import (
    PotentialSplit,
    birman_schwinger_check,
    counting_vs_singular_values,
    negative_count,
    semiclassical_sweep,
)
from .covering import (
    Covering,
    SampledFunction,
    build_covering,
    covering_equivalence_check,
    mixed_norm,
    mixed_norm_log,
    multiplicity,
)
from .errors import (
    ConfigError,
    DecompositionError,
    FitError,
    SingularityError,
    StencilError,
    SubspectraError,
)
from .operators import (
    DiscreteOperator,
    GridSpec,
    VectorFieldStencil,
    assemble_multiplier,
    assemble_sublaplacian,
    assemble_vector_field,
    fourier_block_decompose,
    heat_trace,
    operator_function,
)
from .spectral import (
    SpectralReport,
    asymptotic_fit,
    connes_trace_check,
    cwikel_ratio_experiment,
    euclidean_constant,
    heat_constant_hn,
    product_convolution,
    schatten_norms,
    singular_values,
    zeta_trace,
)

__all__ = [
    "ConfigError",
    "Covering",
    "DecompositionError",
    "DiscreteOperator",
    "FitError",
    "GridSpec",
    "PotentialSplit",
    "QuasiMetric",
    "SampledFunction",
    "SingularityError",
    "SpectralReport",
    "StencilError",
    "StratifiedAlgebra",
    "SubspectraError",
    "VectorFieldStencil",
    "assemble_multiplier",
    "assemble_sublaplacian",
    "assemble_vector_field",
    "asymptotic_fit",
    "birman_schwinger_check",
    "bracket_closure",
    "build_covering",
    "connes_trace_check",
    "counting_vs_singular_values",
    "covering_equivalence_check",
    "cwikel_ratio_experiment",
    "dilation",
    "dist",
    "euclidean_constant",
    "fourier_block_decompose",
    "get_preset",
    "group_inverse",
    "group_product",
    "heat_constant_hn",
    "heat_trace",
    "homogeneous_dimension",
    "load_algebra",
    "mixed_norm",
    "mixed_norm_log",
    "monte_carlo_ball_volume",
    "multiplicity",
    "negative_count",
    "operator_function",
    "product_convolution",
    "quasi_norm",
    "schatten_norms",
    "semiclassical_sweep",
    "singular_values",
    "validate_stratification",
    "zeta_trace",
]
