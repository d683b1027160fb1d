"""The non-stationary two-state model with a factorized metric.

With ``s(t) = a t + b t^2 / 2`` the Dyson map factors into unit-triangular
pieces ``Omega2 = [[1, 0], [s, 1]]`` and ``Omega1 = [[1, r], [0, 1]]``.
Everything is polynomial in ``t`` once ``(r, a, b)`` are fixed, so the
reference matrices below are exact :class:`PolyMatrix` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pictures import DysonFactorization, PictureModel
from .polytime import CPoly, PolyMatrix

DEFAULT_GRID = {
    "r": (0.0, 0.5, 1.0, 2.0),
    "a": (0.0, 1.0),
    "b": (0.0, 0.5),
    "t": (0.0, 0.25, 0.5, 1.0),
}


@dataclass(frozen=True)
class ToyParams:
    r: float = 0.5
    a: float = 1.0
    b: float = 0.5
    window: tuple = (0.0, 1.0)

    def __post_init__(self):
        for name in ("r", "a", "b"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        lo, hi = (float(x) for x in self.window)
        if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
            raise ValueError(f"window must satisfy t_min < t_max, got {self.window}")
        object.__setattr__(self, "window", (lo, hi))


def toy_s(p: ToyParams) -> CPoly:
    return CPoly([0.0, p.a, p.b / 2.0])


def toy_dyson(p: ToyParams) -> DysonFactorization:
    s = toy_s(p)
    omega2 = PolyMatrix.from_entries([[1.0, 0.0], [s, 1.0]])
    omega1 = PolyMatrix.from_entries([[1.0, p.r], [0.0, 1.0]])
    return DysonFactorization(omega1=omega1, omega2=omega2)


def toy_hamiltonian(p: ToyParams) -> PolyMatrix:
    """H(t) solving H^H Theta = Theta H for the two-parameter metric."""
    r = p.r
    s = toy_s(p)
    t = CPoly.t()
    st = s * t
    return PolyMatrix.from_entries([
        [-r * s + r * st + 1 + t, -(r**2) * s + r**2 * st - r + r * t],
        [s - st, r * s - r * st + 2],
    ])


def toy_model(p: ToyParams | None = None) -> PictureModel:
    p = ToyParams() if p is None else p
    return PictureModel(toy_dyson(p), toy_hamiltonian(p), window=p.window)


@dataclass(frozen=True)
class PrintedObjects:
    """Reference closed forms of the toy objects, kept verbatim for comparison."""

    theta: PolyMatrix
    theta2: PolyMatrix
    h1: PolyMatrix
    sigma: PolyMatrix
    sigma2: PolyMatrix
    g1: PolyMatrix
    g: PolyMatrix
    params: ToyParams

    def g_doublet(self, t: float) -> tuple[complex, complex]:
        """Closed-form eigenvalues of ``g`` (= H - sigma) at time t."""
        r, a, b = self.params.r, self.params.a, self.params.b
        return (complex(1.0 + t),
                complex(2.0, -b * t + b * t * r - a + a * r))


def toy_printed(p: ToyParams) -> PrintedObjects:
    r = p.r
    s = toy_s(p)
    sdot = s.derivative()
    t = CPoly.t()
    theta = PolyMatrix.from_entries([
        [1 + s * s, r + r * s * s + s],
        [r + r * s * s + s, r**2 + r**2 * s * s + 2 * r * s + 1],
    ])
    theta2 = PolyMatrix.from_entries([[1 + s * s, s], [s, 1.0]])
    h1 = PolyMatrix.from_entries([[1 + t, 0.0], [s - t * s, 2.0]])
    sigma = PolyMatrix.from_entries([
        [-1j * r * sdot, -1j * r * sdot],
        [1j * sdot, 1j * sdot],
    ])
    sigma2 = PolyMatrix.from_entries([[0.0, 0.0], [1j * sdot, 0.0]])
    a, b = p.a, p.b
    g1_21 = CPoly([0.0, a, -a + b / 2.0, -b / 2.0]) - 1j * CPoly([a, b])
    g1 = PolyMatrix.from_entries([[1 + t, 0.0], [g1_21, 2.0]])
    g = toy_hamiltonian(p) - sigma
    return PrintedObjects(theta, theta2, h1, sigma, sigma2, g1, g, p)


def toy_textbook_solution(p: ToyParams, psi0_aux, t: float) -> np.ndarray:
    """Closed-form textbook ket: H_S(t) = diag(1 + t, 2) for every (r, a, b)."""
    t0 = p.window[0]
    omega0 = toy_dyson(p)
    psi_s0 = (omega0.omega2(t0) @ omega0.omega1(t0)) @ np.asarray(psi0_aux, dtype=np.complex128)
    phase0 = (t - t0) + 0.5 * (t * t - t0 * t0)
    phase1 = 2.0 * (t - t0)
    return np.array([np.exp(-1j * phase0), np.exp(-1j * phase1)]) * psi_s0


def parameter_grid(r=None, a=None, b=None, window=(0.0, 1.0)):
    """All ToyParams over the (r, a, b) product grid, r varying slowest."""
    rs = DEFAULT_GRID["r"] if r is None else r
    as_ = DEFAULT_GRID["a"] if a is None else a
    bs = DEFAULT_GRID["b"] if b is None else b
    return [ToyParams(ri, ai, bi, window) for ri in rs for ai in as_ for bi in bs]
