"""Non-stationary quasi-Hermitian quantum dynamics in factorized interaction pictures."""

from .errors import (
    ConfigError,
    DimMismatch,
    HermitianityViolated,
    MissingSample,
    NoConvergence,
    NonConstantDeterminant,
    NotHermitian,
    SingularMatrix,
    StepLimitExceeded,
)
from .evolution import (
    IntegratorSpec,
    OperatorTrajectory,
    StateTrajectory,
    evolve_ket,
    evolve_observable,
    expectation,
    map_initial_state,
    propagator,
)
from .matrix_core import (
    Spectrum,
    conj_transpose,
    eigenvalues,
    expm,
    fro_norm,
    inverse,
    is_positive_definite,
    op_norm_estimate,
)
from .pictures import (
    DysonFactorization,
    PictureModel,
    PictureTag,
    coriolis,
    full_dyson,
    generator,
    hamiltonian_h1,
    metric_of,
    observable_hip,
    observable_tilde,
    omega21,
)
from .polytime import CPoly, PolyMatrix, Sampled
from .toy_model import ToyParams, toy_dyson, toy_hamiltonian, toy_model, toy_printed, toy_s

__version__ = "0.1.0"
