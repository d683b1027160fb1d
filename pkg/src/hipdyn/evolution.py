"""Propagation of kets, dual kets, observables and propagators.

All evolution equations here are linear, ``i dy/dt = L(t, y)``, and share
one stepper: classical RK4 with a fixed step, or the Dormand-Prince 5(4)
embedded pair with step-size control.  Matrix-valued states are stepped
as whole arrays by the same stepper, so one error model covers vector and
matrix ODEs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimMismatch, MissingSample, StepLimitExceeded
from .matrix_core import identity
from .pictures import (
    PictureModel,
    PictureTag,
    adjoint,
    generator,
    hamiltonian_textbook,
    metric_for,
    observable_for,
    observable_hip,
    sigma,
    sigma2,
    state_map,
    theta2,
)
from .polytime import TimeMatrixFn

RK4 = "RK4_fixed"
DP54 = "DP54_adaptive"


@dataclass(frozen=True)
class IntegratorSpec:
    method: str = RK4
    step: float | None = 1e-3
    rtol: float | None = None
    atol: float | None = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method == RK4:
            if self.step is None or not self.step > 0:
                raise ValueError("RK4_fixed needs step > 0")
        elif self.method == DP54:
            if self.rtol is None or self.atol is None or not (self.rtol > 0 and self.atol > 0):
                raise ValueError("DP54_adaptive needs rtol > 0 and atol > 0")
        else:
            raise ValueError(f"unknown integrator method {self.method!r}")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be >= 1")

    @classmethod
    def rk4(cls, step: float, max_steps: int = 10_000_000) -> "IntegratorSpec":
        return cls(RK4, step=step, max_steps=max_steps)

    @classmethod
    def dp54(cls, rtol: float, atol: float, max_steps: int = 1_000_000) -> "IntegratorSpec":
        return cls(DP54, step=None, rtol=rtol, atol=atol, max_steps=max_steps)

    @property
    def tolerance(self) -> float:
        """Nominal accuracy used to scale invariant checks."""
        if self.method == RK4:
            return self.step**4
        return max(self.rtol, self.atol)


@dataclass
class IntegrationInfo:
    steps: int = 0
    rejected: int = 0
    max_error_norm: float = 0.0


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dp54_step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(f(t + _C[i] * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b)
    err = h * sum(e * k for e, k in zip(_E, ks) if e)
    return y5, err, ks[6]


def integrate(f: Callable, t0: float, y0: np.ndarray, times: Sequence[float],
              spec: IntegratorSpec) -> tuple[list[np.ndarray], IntegrationInfo]:
    """Integrate ``dy/dt = f(t, y)`` from ``t0`` and return y at each of ``times``.

    ``times`` must be non-decreasing and not earlier than ``t0``.  Sample
    times are hit exactly: the fixed-step method splits every interval
    into equal sub-steps no longer than ``spec.step``.
    """
    y = np.array(y0, dtype=np.complex128)
    t = float(t0)
    info = IntegrationInfo()
    out = []
    if spec.method == RK4:
        for target in times:
            span = float(target) - t
            if span < 0:
                raise ValueError("sample times must be ascending and >= t0")
            nsub = int(math.ceil(span / spec.step - 1e-9)) if span > 0 else 0
            if info.steps + nsub > spec.max_steps:
                raise StepLimitExceeded(f"more than {spec.max_steps} RK4 steps")
            for k in range(nsub):
                ta = t + span * k / nsub
                tb = t + span * (k + 1) / nsub
                y = _rk4_step(f, ta, y, tb - ta)
            info.steps += nsub
            t = float(target)
            out.append(y.copy())
        return out, info

    total = (float(times[-1]) - t) if len(times) else 0.0
    h = total / 100.0 if total > 0 else 0.0
    k1 = f(t, y)
    for target in times:
        target = float(target)
        if target < t:
            raise ValueError("sample times must be ascending and >= t0")
        while t < target:
            if info.steps + info.rejected >= spec.max_steps:
                raise StepLimitExceeded(f"more than {spec.max_steps} DP54 steps")
            h = min(h, target - t)
            if target - t - h < 1e-12 * max(1.0, abs(target)):
                h = target - t
            y_new, err, k_last = _dp54_step(f, t, y, h, k1)
            scale = spec.atol + spec.rtol * np.maximum(np.abs(y), np.abs(y_new))
            enorm = float(np.max(np.abs(err) / scale))
            if enorm <= 1.0:
                t = target if h == target - t else t + h
                y = y_new
                k1 = k_last
                info.steps += 1
                info.max_error_norm = max(info.max_error_norm, enorm)
            else:
                info.rejected += 1
            factor = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
            h_next = h * factor
            if h_next < 1e-14 * max(1.0, abs(t)):
                raise StepLimitExceeded("adaptive step size underflow")
            h = h_next
        out.append(y.copy())
    return out, info


def _linear_rhs(gen: TimeMatrixFn):
    def f(t, y):
        return -1j * (gen(t) @ y)
    return f


def _commutator_rhs(gen: TimeMatrixFn):
    # i dA/dt = A K - K A
    def f(t, a):
        k = gen(t)
        return -1j * (a @ k - k @ a)
    return f


def _check_times(model: PictureModel, times, t0: float) -> np.ndarray:
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("sample_times must be a non-empty list")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    lo, hi = model.window
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if ts[0] < t0 - slack or ts[-1] > hi + slack or t0 < lo - slack:
        raise ValueError(f"sample_times must lie within the window [{lo}, {hi}] and >= t0")
    return ts


@dataclass(frozen=True)
class StateTrajectory:
    tag: PictureTag
    times: np.ndarray
    kets: np.ndarray
    physical_norms: np.ndarray
    dual_kets: np.ndarray | None = None
    expectations: np.ndarray | None = None
    info: IntegrationInfo = field(default_factory=IntegrationInfo, compare=False)

    def index_of(self, t: float) -> int:
        idx = np.flatnonzero(np.abs(self.times - t) <= 1e-12 * max(1.0, abs(t)))
        if idx.size == 0:
            raise MissingSample(f"no sample at t={t}")
        return int(idx[0])

    def ket_at(self, t: float) -> np.ndarray:
        return self.kets[self.index_of(t)]

    def dual_at(self, t: float) -> np.ndarray:
        if self.dual_kets is None:
            raise MissingSample("trajectory carries no dual kets")
        return self.dual_kets[self.index_of(t)]


@dataclass(frozen=True)
class OperatorTrajectory:
    times: np.ndarray
    matrices: np.ndarray

    def at(self, t: float) -> np.ndarray:
        idx = np.flatnonzero(np.abs(self.times - t) <= 1e-12 * max(1.0, abs(t)))
        if idx.size == 0:
            raise MissingSample(f"no sample at t={t}")
        return self.matrices[int(idx[0])]


def map_initial_state(model: PictureModel, tag, psi_aux, t0: float | None = None) -> np.ndarray:
    """Send an auxiliary-space ket at t0 to the picture's representative."""
    t0 = model.window[0] if t0 is None else t0
    return state_map(model, tag)(t0) @ np.asarray(psi_aux, dtype=np.complex128)


def _picture_expectation(tag, metric, obs, psi_bra, psi_ket) -> complex:
    if tag is PictureTag.HIP_dual:
        # kets are duals chi = Theta2 psi; metric is Theta2^-1
        return complex(np.vdot(psi_bra, obs @ (metric @ psi_ket)))
    return complex(np.vdot(psi_bra, metric @ (obs @ psi_ket)))


def evolve_ket(model: PictureModel, tag, psi0, spec: IntegratorSpec,
               sample_times, *, t0: float | None = None, observables=(),
               with_dual: bool = False) -> StateTrajectory:
    """Integrate ``i d|psi>/dt = G_tag(t) |psi>`` and sample the trajectory.

    ``psi0`` is the picture's own ket at ``t0`` (default: window start); use
    :func:`map_initial_state` to start from an auxiliary-space ket.  With
    ``with_dual`` (hybrid picture only) the dual ket ``Theta2 |psi]`` is
    integrated independently with ``G1^H``.
    """
    tag = PictureTag.parse(tag)
    t0 = model.window[0] if t0 is None else float(t0)
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if psi0.shape != (model.dim,):
        raise DimMismatch(f"psi0 has shape {psi0.shape}, model dim is {model.dim}")
    if not np.linalg.norm(psi0) > 0:
        raise ValueError("psi0 must be nonzero")
    ts = _check_times(model, sample_times, t0)
    gen = generator(model, tag)
    kets, info = integrate(_linear_rhs(gen), t0, psi0, ts, spec)
    kets = np.array(kets)

    duals = None
    if with_dual:
        if tag is not PictureTag.HIP_Kphysical:
            raise ValueError("dual kets are defined for the HIP_Kphysical picture")
        chi0 = theta2(model)(t0) @ psi0
        d, dinfo = integrate(_linear_rhs(adjoint(gen)), t0, chi0, ts, spec)
        duals = np.array(d)
        info.steps += dinfo.steps

    metric = metric_for(model, tag)
    mats = [metric(t) for t in ts]
    norms = np.array([np.vdot(k, m @ k).real for k, m in zip(kets, mats)])

    expectations = None
    if len(observables):
        obs_fns = [observable_for(model, tag, a) for a in observables]
        expectations = np.array([
            [_picture_expectation(tag, m, o(t), k, k) for o in obs_fns]
            for t, k, m in zip(ts, kets, mats)
        ])
    return StateTrajectory(tag, ts, kets, norms, duals, expectations, info)


def evolve_observable(model: PictureModel, tag, a0, spec: IntegratorSpec,
                      sample_times, *, t0: float | None = None) -> OperatorTrajectory:
    """Integrate ``i dA/dt = A K(t) - K(t) A``.

    ``K`` is the picture's observable generator: Sigma for NSP/NIP,
    Sigma2 for both hybrid tags and H_S for the textbook picture (the
    Heisenberg equation, exact when H_S is stationary).
    """
    tag = PictureTag.parse(tag)
    t0 = model.window[0] if t0 is None else float(t0)
    a0 = np.asarray(a0, dtype=np.complex128)
    if a0.shape != (model.dim, model.dim):
        raise DimMismatch(f"a0 has shape {a0.shape}, model dim is {model.dim}")
    ts = _check_times(model, sample_times, t0)
    if tag is PictureTag.SP_textbook:
        k = hamiltonian_textbook(model)
    elif tag in (PictureTag.NSP_auxiliary, PictureTag.NIP_auxiliary):
        k = sigma(model)
    else:
        k = sigma2(model)
    mats, _ = integrate(_commutator_rhs(k), t0, a0, ts, spec)
    return OperatorTrajectory(ts, np.array(mats))


@dataclass(frozen=True)
class Expectation:
    """A picture expectation value; hybrid picture also carries the dual-ket form."""

    value: complex
    dual_value: complex | None = None

    @property
    def discrepancy(self) -> float | None:
        if self.dual_value is None:
            return None
        return abs(self.value - self.dual_value)


def expectation(model: PictureModel, tag, bra_state: StateTrajectory, observable,
                ket_state: StateTrajectory, t: float) -> Expectation:
    """Matrix element of the stationary observable ``A_S`` at time ``t``.

    SP: <psi|A_S|phi>; NIP: <psi|Theta A~|phi>; HIP: [psi|Theta2 A~1|phi]
    together with the dual-ket form <<psi|A~1|phi] when the bra trajectory
    carries dual kets.
    """
    tag = PictureTag.parse(tag)
    psi = bra_state.ket_at(t)
    phi = ket_state.ket_at(t)
    obs = observable_for(model, tag, observable)(t)
    metric = metric_for(model, tag)(t)
    value = _picture_expectation(tag, metric, obs, psi, phi)
    dual_value = None
    if tag is PictureTag.HIP_Kphysical and bra_state.dual_kets is not None:
        chi = bra_state.dual_at(t)
        dual_value = complex(np.vdot(chi, observable_hip(model, observable)(t) @ phi))
    return Expectation(value, dual_value)


def propagate_generator(gen: TimeMatrixFn, spec: IntegratorSpec, t0: float,
                        times) -> list[np.ndarray]:
    """U(t, t0) at each of ``times`` for ``i dU/dt = G(t) U``."""
    mats, _ = integrate(_linear_rhs(gen), t0, identity(gen.dim), times, spec)
    return mats


def propagator(model: PictureModel, tag, spec: IntegratorSpec, t0: float, t1: float) -> np.ndarray:
    """U_tag(t1, t0), integrated column-stack from the identity."""
    if t1 < t0:
        raise ValueError("propagator needs t0 <= t1")
    if t1 == t0:
        return identity(model.dim)
    return propagate_generator(generator(model, tag), spec, t0, [t1])[0]
