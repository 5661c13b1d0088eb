"""Riesz energies of point configurations on spheres.

Energy and its variations along normalization-retraction curves, Riemannian
descent with Hessian classification, and certificates that a configuration
is not a local maximum when ``alpha >= d - 2``.
"""

from .certifier import (
    Certificate,
    CertificateKind,
    certify_not_max,
    eq4_terms,
    find_ascent_direction,
    theorem_condition,
    verify_certificate,
)
from .energy import (
    EnergyValue,
    Perturbation,
    RieszParams,
    averaged_second_variation,
    curve_energy,
    directional_derivative,
    energy,
    kernel,
    riemannian_gradient,
    second_variation,
    single_point_second_variation,
)
from .errors import (
    CertificateMismatchError,
    KernelSingularityError,
    NoPositiveDirectionError,
    NotCriticalError,
)
from .manifold import (
    Configuration,
    TangentVector,
    project_tangent,
    random_configuration,
    retract,
    sample_equator,
    sample_uniform_sphere,
)
from .optimizer import (
    Classification,
    CriticalPointReport,
    OptimizerSettings,
    classify,
    hessian,
    minimize,
    tangent_basis,
)

__version__ = "0.1.0"
