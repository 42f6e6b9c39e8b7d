"""Numerical verification of translation generated frame systems on the
Heisenberg group: bracket maps, orthogonality and reproducing-formula
verdicts, and fiberwise dual classification, at desk scale.
"""

from .bracket import (
    CheckReport,
    OmegaSet,
    TorusFunction,
    bessel_bound,
    bessel_sum_check,
    bracket,
    check_biorthogonality,
    check_orthogonality,
    check_reproducing,
    decomposition_parseval_check,
    gabor_application_scan,
    omega_set,
    translated_bracket,
)
from .errors import (
    ConfigError,
    DimensionCapError,
    DimensionMismatchError,
    EngineError,
    GridMismatchError,
    HypothesisError,
    InvalidDilationError,
    InvalidFrequencyError,
    NormalizationError,
    ParameterError,
    UndefinedBoundsError,
    UnsupportedDimensionError,
)
from .fiberframes import (
    DualReport,
    FiberCoefficient,
    FiberSystem,
    RangeBasis,
    build_fiber_system,
    canonical_dual,
    check_fiber_dual,
    classify_dual_type,
    fiber_coefficients,
    fiber_frame_bounds,
    fiber_gram,
    range_basis,
)
from .fields import (
    FiberElement,
    OperatorField,
    ScaleSpec,
    build_Ht,
    dense_field,
    field_norm2,
    fiberize,
    hs_inner,
    pfaffian_weight,
)
from .grid import (
    LatticeSpec,
    QuadratureRule,
    SampledWindow,
    TorusGrid,
    inner_product,
    window_preset,
)
from .schrodinger import (
    GroupElement,
    PlaneFrequency,
    ambiguity,
    dilate,
    dilation_invariant_inner,
    gabor_inner,
    gabor_inner_direct,
    schrodinger_apply,
)

__version__ = "0.1.0"
