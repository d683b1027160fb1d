"""Operator algebra of the factorized (hybrid) interaction picture.

A Dyson map is supplied as two factors, ``omega = omega2 @ omega1``.  From
the factors and an auxiliary-space Hamiltonian ``H(t)`` this module derives

* metrics ``Theta = Omega^H Omega`` and ``Theta2 = Omega2^H Omega2``,
* Coriolis operators ``Sigma = i Omega^-1 dOmega/dt`` (and ``Sigma2``),
* the transformed Hamiltonians ``H1 = Omega1 H Omega1^-1`` and
  ``H_S = Omega H Omega^-1``,
* ket generators for every picture (``H - Sigma``, ``H1 - Sigma2``, ...),
* the transported observables ``A~ = Omega^-1 A_S Omega`` and
  ``A~1 = Omega2^-1 A_S Omega2``.

Every derived object is a time function: a :class:`PolyMatrix` when the
inputs allow an exact result, otherwise a :class:`Sampled` evaluated
pointwise.  Nothing is cached across times.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, NonConstantDeterminant
from .matrix_core import check_hermitian, fro_norm, identity, inverse
from .polytime import (
    PolyMatrix,
    Sampled,
    TimeMatrixFn,
    as_time_fn,
    derivative_at,
    poly_inverse_2x2,
)

DEFAULT_TOL = 1e-10
TOL_ENV = "HIPDYN_TOL"


def default_tolerance() -> float:
    """Residual tolerance, overridable through the HIPDYN_TOL variable."""
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_TOL
    value = float(raw)
    if not value > 0:
        raise ValueError(f"{TOL_ENV} must be positive, got {raw!r}")
    return value


class PictureTag(str, enum.Enum):
    SP_textbook = "SP_textbook"
    NSP_auxiliary = "NSP_auxiliary"
    NIP_auxiliary = "NIP_auxiliary"
    HIP_Kphysical = "HIP_Kphysical"
    HIP_dual = "HIP_dual"

    @classmethod
    def parse(cls, value) -> "PictureTag":
        if isinstance(value, cls):
            return value
        aliases = {"SP": cls.SP_textbook, "NSP": cls.NSP_auxiliary,
                   "NIP": cls.NIP_auxiliary, "HIP": cls.HIP_Kphysical,
                   "DUAL": cls.HIP_dual}
        try:
            return cls(value)
        except ValueError:
            key = str(value).upper()
            if key in aliases:
                return aliases[key]
            raise ValueError(f"unknown picture tag {value!r}") from None


@dataclass(frozen=True)
class DysonFactorization:
    omega1: TimeMatrixFn
    omega2: TimeMatrixFn

    def __post_init__(self):
        object.__setattr__(self, "omega1", as_time_fn(self.omega1))
        object.__setattr__(self, "omega2", as_time_fn(self.omega2))
        if self.omega1.dim != self.omega2.dim:
            raise DimMismatch(f"omega1 is {self.omega1.dim}x, omega2 is {self.omega2.dim}x")

    @property
    def dim(self) -> int:
        return self.omega1.dim


@dataclass(frozen=True)
class PictureModel:
    """A Hamiltonian acting in the auxiliary space, bound to a Dyson factorization."""

    dyson: DysonFactorization
    hamiltonian: TimeMatrixFn
    window: tuple = (0.0, 1.0)
    tol: float = field(default_factory=default_tolerance)

    def __post_init__(self):
        object.__setattr__(self, "hamiltonian", as_time_fn(self.hamiltonian))
        if self.hamiltonian.dim != self.dyson.dim:
            raise DimMismatch(f"H is {self.hamiltonian.dim}x, Dyson map is {self.dyson.dim}x")
        lo, hi = (float(x) for x in self.window)
        if not (np.isfinite(lo) and np.isfinite(hi)) or not hi > lo:
            raise ValueError(f"window must satisfy t_min < t_max, got {self.window}")
        object.__setattr__(self, "window", (lo, hi))

    @property
    def dim(self) -> int:
        return self.dyson.dim


# -- generic combinators on time functions ---------------------------------

def _both_poly(*fs) -> bool:
    return all(isinstance(f, PolyMatrix) for f in fs)


def product(a: TimeMatrixFn, b: TimeMatrixFn) -> TimeMatrixFn:
    if a.dim != b.dim:
        raise DimMismatch(f"dims {a.dim} and {b.dim}")
    if _both_poly(a, b):
        return a @ b
    return Sampled(lambda t: a(t) @ b(t), a.dim,
                   deriv=lambda t: derivative_at(a, t) @ b(t) + a(t) @ derivative_at(b, t))


def adjoint(a: TimeMatrixFn) -> TimeMatrixFn:
    if isinstance(a, PolyMatrix):
        return a.conj_transpose()
    return Sampled(lambda t: a(t).conj().T, a.dim,
                   deriv=lambda t: derivative_at(a, t).conj().T)


def difference(a: TimeMatrixFn, b: TimeMatrixFn) -> TimeMatrixFn:
    if a.dim != b.dim:
        raise DimMismatch(f"dims {a.dim} and {b.dim}")
    if _both_poly(a, b):
        return a - b
    return Sampled(lambda t: a(t) - b(t), a.dim,
                   deriv=lambda t: derivative_at(a, t) - derivative_at(b, t))


def exact_inverse(a: TimeMatrixFn) -> PolyMatrix | None:
    """Polynomial inverse when one exists cheaply, else None."""
    if not isinstance(a, PolyMatrix):
        return None
    if a.is_constant():
        return PolyMatrix.constant(inverse(a(0.0)))
    if a.dim == 2:
        try:
            return poly_inverse_2x2(a)
        except NonConstantDeterminant:
            return None
    return None


def inverse_fn(a: TimeMatrixFn) -> TimeMatrixFn:
    inv = exact_inverse(a)
    if inv is not None:
        return inv

    def deriv(t):
        ai = inverse(a(t))
        return -ai @ derivative_at(a, t) @ ai

    return Sampled(lambda t: inverse(a(t)), a.dim, deriv=deriv)


def similarity(s: TimeMatrixFn, m: TimeMatrixFn) -> TimeMatrixFn:
    """s(t) m(t) s(t)^-1."""
    if s.dim != m.dim:
        raise DimMismatch(f"dims {s.dim} and {m.dim}")
    inv = exact_inverse(s)
    if inv is not None and isinstance(m, PolyMatrix):
        return s @ m @ inv
    return Sampled(lambda t: s(t) @ m(t) @ inverse(s(t)), m.dim)


def inverse_similarity(s: TimeMatrixFn, m: TimeMatrixFn) -> TimeMatrixFn:
    """s(t)^-1 m(t) s(t)."""
    if s.dim != m.dim:
        raise DimMismatch(f"dims {s.dim} and {m.dim}")
    inv = exact_inverse(s)
    if inv is not None and isinstance(m, PolyMatrix):
        return inv @ m @ s
    return Sampled(lambda t: inverse(s(t)) @ m(t) @ s(t), m.dim)


# -- the operator zoo -------------------------------------------------------

def full_dyson(d: DysonFactorization) -> TimeMatrixFn:
    """Omega(t) = Omega2(t) Omega1(t)."""
    return product(d.omega2, d.omega1)


def metric_of(omega: TimeMatrixFn) -> TimeMatrixFn:
    """Theta(t) = Omega(t)^H Omega(t)."""
    return product(adjoint(omega), omega)


def coriolis(omega: TimeMatrixFn) -> TimeMatrixFn:
    """Sigma(t) = i Omega(t)^-1 dOmega/dt."""
    if isinstance(omega, PolyMatrix):
        dot = omega.derivative()
        if not np.any(dot.coeffs):
            return PolyMatrix.zeros(omega.dim)
        inv = exact_inverse(omega)
        if inv is not None:
            return (inv @ dot) * 1j
    return Sampled(lambda t: 1j * (inverse(omega(t)) @ derivative_at(omega, t)), omega.dim)


def omega21(d: DysonFactorization) -> TimeMatrixFn:
    """Omega21(t) = Omega2 Omega1 Omega2^-1."""
    return similarity(d.omega2, d.omega1)


def theta(model: PictureModel) -> TimeMatrixFn:
    return metric_of(full_dyson(model.dyson))


def theta2(model: PictureModel) -> TimeMatrixFn:
    return metric_of(model.dyson.omega2)


def sigma(model: PictureModel) -> TimeMatrixFn:
    return coriolis(full_dyson(model.dyson))


def sigma1(model: PictureModel) -> TimeMatrixFn:
    return coriolis(model.dyson.omega1)


def sigma2(model: PictureModel) -> TimeMatrixFn:
    return coriolis(model.dyson.omega2)


def hamiltonian_h1(model: PictureModel) -> TimeMatrixFn:
    """H1(t) = Omega1 H Omega1^-1, the Hamiltonian of the hybrid picture."""
    return similarity(model.dyson.omega1, model.hamiltonian)


def hamiltonian_textbook(model: PictureModel) -> TimeMatrixFn:
    """H_S(t) = Omega H Omega^-1; Hermitian when H is quasi-Hermitian."""
    return similarity(full_dyson(model.dyson), model.hamiltonian)


def generator(model: PictureModel, tag) -> TimeMatrixFn:
    """Ket generator ``G`` with ``i d|psi>/dt = G |psi>`` in the given picture."""
    tag = PictureTag.parse(tag)
    if tag is PictureTag.SP_textbook:
        return hamiltonian_textbook(model)
    if tag in (PictureTag.NSP_auxiliary, PictureTag.NIP_auxiliary):
        return difference(model.hamiltonian, sigma(model))
    g1 = difference(hamiltonian_h1(model), sigma2(model))
    if tag is PictureTag.HIP_Kphysical:
        return g1
    # dual kets: conjugate transpose of the stored G1, no new construction
    return adjoint(g1)


def metric_for(model: PictureModel, tag) -> TimeMatrixFn:
    """Metric defining the physical norm of the picture's ket.

    Identity for SP, Theta for NSP/NIP, Theta2 for HIP kets and Theta2^-1
    for dual kets (a dual ket is Theta2 |psi]).
    """
    tag = PictureTag.parse(tag)
    if tag is PictureTag.SP_textbook:
        return PolyMatrix.identity(model.dim)
    if tag in (PictureTag.NSP_auxiliary, PictureTag.NIP_auxiliary):
        return theta(model)
    if tag is PictureTag.HIP_Kphysical:
        return theta2(model)
    return inverse_fn(theta2(model))


def observable_tilde(model: PictureModel, a_s) -> TimeMatrixFn:
    """A~(t) = Omega^-1 A_S Omega for a stationary Hermitian A_S."""
    a = PolyMatrix.constant(check_hermitian(a_s))
    return inverse_similarity(full_dyson(model.dyson), a)


def observable_hip(model: PictureModel, a_s) -> TimeMatrixFn:
    """A~1(t) = Omega1 A~ Omega1^-1, computed as Omega2^-1 A_S Omega2."""
    a = PolyMatrix.constant(check_hermitian(a_s))
    return inverse_similarity(model.dyson.omega2, a)


def observable_for(model: PictureModel, tag, a_s) -> TimeMatrixFn:
    """The representative of A_S that pairs with the picture's metric."""
    tag = PictureTag.parse(tag)
    if tag is PictureTag.SP_textbook:
        return PolyMatrix.constant(check_hermitian(a_s))
    if tag in (PictureTag.NSP_auxiliary, PictureTag.NIP_auxiliary):
        return observable_tilde(model, a_s)
    return observable_hip(model, a_s)


def state_map(model: PictureModel, tag) -> TimeMatrixFn:
    """Map sending an auxiliary ket |psi> to the picture's representative."""
    tag = PictureTag.parse(tag)
    d = model.dyson
    if tag is PictureTag.SP_textbook:
        return full_dyson(d)
    if tag in (PictureTag.NSP_auxiliary, PictureTag.NIP_auxiliary):
        return PolyMatrix.identity(model.dim)
    if tag is PictureTag.HIP_Kphysical:
        return d.omega1
    return product(theta2(model), d.omega1)


# -- residuals --------------------------------------------------------------

def relative_residual(lhs, rhs) -> float:
    """||lhs - rhs||_F scaled by the larger operand (absolute below unit scale)."""
    scale = max(fro_norm(lhs), fro_norm(rhs), 1.0)
    return fro_norm(np.asarray(lhs) - np.asarray(rhs)) / scale


def quasi_hermiticity_residual(h, metric) -> float:
    """||H^H Theta - Theta H||_F / ||Theta H||_F."""
    h = np.asarray(h, dtype=np.complex128)
    metric = np.asarray(metric, dtype=np.complex128)
    th = metric @ h
    denom = fro_norm(th)
    diff = fro_norm(h.conj().T @ metric - th)
    return diff / denom if denom > 0 else diff


def omega1_distance(model: PictureModel, t: float) -> float:
    """||Omega1(t) - I||_F, how far the model is from the Omega1 ~ I regime."""
    return fro_norm(model.dyson.omega1(t) - identity(model.dim))
