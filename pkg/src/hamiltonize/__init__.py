"""Symbolic/numeric toolkit for hamiltonizing vector fields.

Builds Poisson structures (volume-form correspondences, decomposable
brackets, torus-action sums) that turn a given vector field into a
Hamiltonian one, and certifies every claimed identity either by exact
rational normalization or by seeded sampling with tri-state verdicts.
"""

from .expr import (
    Chart,
    EvalError,
    Expr,
    ExprError,
    ParseError,
    RationalMatrix,
    TriState,
    diff,
    evaluate,
    exact_linalg,
    is_zero,
    normalize,
    parse,
    to_string,
)
from .exterior import (
    ExteriorError,
    Metric,
    Tensor,
    VolumeForm,
    d,
    divergence,
    interior,
    lie_bracket,
    lie_derivative,
    pairing,
    rank_at,
    schouten,
    sharp,
    vol_correspondence,
    wedge,
)
from .poisson import (
    Certificate,
    casimir_check,
    conformal_identity_check,
    hamiltonian_vf,
    hamiltonization_check,
    jacobi_check,
    modular_vf,
    poisson_vf_check,
)
from .constructions import (
    CONSTRUCTIONS,
    ConstructionError,
    HamiltonizationResult,
    decomposable,
    flaschka_ratiu,
    foliated_build,
    hojman,
    integrable_family,
    integrating_factor,
    linear_fr,
    metric_normal,
    normal_class_check,
    primitive,
    torus2,
    unimodularize,
)
from .verify import (
    FlowReport,
    SamplerConfig,
    default_sampler,
    flow_conservation,
    residual_stats,
    sample_points,
)

__version__ = "0.1.0"
