"""Numerical Nevanlinna theory on model Kähler manifolds.

Two exhaustions drive everything: a Green-function weight on non-parabolic
models and a heat-kernel weight on parabolic ones.  The usual entry points::

    from nevanlab import ExpMap, DivisorData, ExhaustionWeight, euclidean, build_table

    M = euclidean(1)
    tab = build_table(ExpMap(M), DivisorData.points([0, 1, "inf"]),
                      [ExhaustionWeight(M, "auto", r) for r in (5.0, 10.0)], renormalize=True)
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    NevanlabError,
    PoleError,
    PreconditionError,
    UnsupportedOperation,
)
from .exhaustion import ExhaustionWeight, Mode, default_constants, resolve_mode
from .maps import CallableMap, ConstantMap, ExpMap, MeromorphicMap, ProjectionMap, RationalMap, map_from_config
from .models import (
    CylinderFactor,
    EuclideanFactor,
    LiYauConstants,
    ModelManifold,
    ProjectiveFactor,
    PuncturedFactor,
    TorusFactor,
    cylinder_torus,
    euclidean,
    manifold_from_config,
)
from .nevanlinna import (
    NevanlinnaTable,
    admissible,
    build_table,
    characteristic,
    counting,
    defect_estimate,
    fmt_residual,
    is_bounded,
    proximity,
    residual,
)
from .quad import QuadratureSpec
from .target import DivisorData, SingularVolumeForm, TargetSpace

__version__ = "0.1.0"

__all__ = [
    "CallableMap",
    "ConfigError",
    "ConstantMap",
    "ConvergenceError",
    "CylinderFactor",
    "DivisorData",
    "DomainError",
    "EuclideanFactor",
    "ExhaustionWeight",
    "ExpMap",
    "LiYauConstants",
    "MeromorphicMap",
    "Mode",
    "ModelManifold",
    "NevanlabError",
    "NevanlinnaTable",
    "PoleError",
    "PreconditionError",
    "ProjectionMap",
    "ProjectiveFactor",
    "PuncturedFactor",
    "QuadratureSpec",
    "RationalMap",
    "SingularVolumeForm",
    "TargetSpace",
    "TorusFactor",
    "UnsupportedOperation",
    "admissible",
    "build_table",
    "characteristic",
    "counting",
    "cylinder_torus",
    "default_constants",
    "defect_estimate",
    "euclidean",
    "fmt_residual",
    "is_bounded",
    "manifold_from_config",
    "map_from_config",
    "proximity",
    "residual",
    "resolve_mode",
]
