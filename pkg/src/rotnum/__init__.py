"""Rotation numbers of circle maps, random compositions, random matrix
products and sampled linear cocycles. Angles are measured in turns."""

from ._version import __version__
from .circle import (
    NotHomeomorphismError,
    RotationEstimate,
    RotnumError,
    classical_rotation_number,
    conjugate,
    lift_compose,
    normalize_lift,
    orbit_rotation_number,
    ordered_lifted_orbit,
    wrap_turn,
)
from .composition import (
    EmpiricalMeasure,
    compose_rotation_number,
    ergodic_rotation_via_occupation,
    invariant_average_check,
    pointwise_rotation,
)
from .flows import (
    DtFloorError,
    SdeConfig,
    angular_drift,
    continuous_rotation_number,
    flow_deterministic,
    integrate_real_noise,
    integrate_sde,
)
from .kernels import BACKEND_NAME
from .projective import (
    eigen_rotation_number,
    matrix_lift,
    product_rotation_number,
    projective_action,
    stationary_measure_estimate,
)
from .sampling import (
    SamplingStudy,
    beta_T_samples,
    convergence_study,
    erratum_identity_check,
    nyquist_check,
    sample_matrices,
    sampled_rotation_number,
    winding_counts,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
