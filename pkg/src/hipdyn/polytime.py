"""Time-dependent matrices with polynomial entries.

A :class:`PolyMatrix` stores an ``(n, n, K)`` coefficient cube where
``coeffs[i, j, k]`` multiplies ``t**k`` in entry ``(i, j)``.  Products,
sums and derivatives are carried out on the coefficients, so identities
between such matrices can be checked coefficient by coefficient.

Anything that is not polynomial in ``t`` goes through :class:`Sampled`, a
thin wrapper around a callable with a finite-difference derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DimMismatch, NonConstantDeterminant
from .matrix_core import as_cmatrix

DEGREE_OF_ZERO = float("-inf")


def _trim(c: np.ndarray, axis: int = -1) -> np.ndarray:
    """Drop trailing all-zero coefficient slices, keeping at least one."""
    k = c.shape[axis]
    while k > 1:
        last = np.take(c, k - 1, axis=axis)
        if np.any(last != 0):
            break
        k -= 1
    return np.take(c, range(k), axis=axis)


class CPoly:
    """Complex-coefficient polynomial in one real variable ``t``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(0.0,)):
        c = np.atleast_1d(np.array(coeffs, dtype=np.complex128))
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if c.size == 0:
            c = np.zeros(1, dtype=np.complex128)
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        self.coeffs = _trim(c)
        self.coeffs.flags.writeable = False

    @classmethod
    def const(cls, value) -> "CPoly":
        return cls([value])

    @classmethod
    def t(cls) -> "CPoly":
        return cls([0.0, 1.0])

    @property
    def degree(self):
        if self.coeffs.size == 1 and self.coeffs[0] == 0:
            return DEGREE_OF_ZERO
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.degree == DEGREE_OF_ZERO

    def __call__(self, t):
        acc = 0j
        for c in self.coeffs[::-1]:
            acc = acc * t + c
        return acc

    def derivative(self) -> "CPoly":
        if self.coeffs.size == 1:
            return CPoly()
        return CPoly(self.coeffs[1:] * np.arange(1, self.coeffs.size))

    def conj(self) -> "CPoly":
        return CPoly(self.coeffs.conj())

    @staticmethod
    def _lift(x) -> "CPoly":
        return x if isinstance(x, CPoly) else CPoly.const(x)

    def __add__(self, other):
        o = self._lift(other).coeffs
        n = max(o.size, self.coeffs.size)
        out = np.zeros(n, dtype=np.complex128)
        out[: self.coeffs.size] += self.coeffs
        out[: o.size] += o
        return CPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return CPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, CPoly):
            return CPoly(np.convolve(self.coeffs, other.coeffs))
        return CPoly(self.coeffs * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return CPoly(self.coeffs / complex(scalar))

    def __pow__(self, k: int):
        out = CPoly.const(1.0)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, (CPoly, int, float, complex)):
            return NotImplemented
        o = self._lift(other)
        return o.coeffs.shape == self.coeffs.shape and bool(np.all(o.coeffs == self.coeffs))

    __hash__ = None

    def compose(self, inner: "CPoly") -> "CPoly":
        """Return self(inner(t))."""
        acc = CPoly()
        for c in self.coeffs[::-1]:
            acc = acc * inner + c
        return acc

    def __repr__(self):
        return f"CPoly({self.coeffs.tolist()!r})"


class PolyMatrix:
    """Square matrix whose entries are :class:`CPoly` in ``t``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=np.complex128)
        if c.ndim == 2:
            c = c[:, :, None]
        if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise DimMismatch(f"coefficient cube must be (n, n, K), got {c.shape}")
        if c.shape[2] == 0:
            c = np.zeros(c.shape[:2] + (1,), dtype=np.complex128)
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        self.coeffs = _trim(c, axis=2)
        self.coeffs.flags.writeable = False

    @classmethod
    def constant(cls, m) -> "PolyMatrix":
        return cls(as_cmatrix(m)[:, :, None])

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls(np.eye(n, dtype=np.complex128)[:, :, None])

    @classmethod
    def zeros(cls, n: int) -> "PolyMatrix":
        return cls(np.zeros((n, n, 1), dtype=np.complex128))

    @classmethod
    def from_entries(cls, rows) -> "PolyMatrix":
        """Build from a nested list of CPoly or scalars."""
        n = len(rows)
        polys = [[CPoly._lift(x) for x in row] for row in rows]
        if any(len(row) != n for row in polys):
            raise DimMismatch("rows must form a square matrix")
        k = max(p.coeffs.size for row in polys for p in row)
        c = np.zeros((n, n, k), dtype=np.complex128)
        for i, row in enumerate(polys):
            for j, p in enumerate(row):
                c[i, j, : p.coeffs.size] = p.coeffs
        return cls(c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self):
        if not np.any(self.coeffs):
            return DEGREE_OF_ZERO
        return self.coeffs.shape[2] - 1

    def entry(self, i: int, j: int) -> CPoly:
        return CPoly(self.coeffs[i, j])

    def is_constant(self) -> bool:
        return self.coeffs.shape[2] == 1

    def __call__(self, t) -> np.ndarray:
        c = self.coeffs
        acc = c[:, :, -1].copy()
        for k in range(c.shape[2] - 2, -1, -1):
            acc *= t
            acc += c[:, :, k]
        return acc

    def derivative(self) -> "PolyMatrix":
        c = self.coeffs
        if c.shape[2] == 1:
            return PolyMatrix.zeros(self.dim)
        return PolyMatrix(c[:, :, 1:] * np.arange(1, c.shape[2]))

    def conj_transpose(self) -> "PolyMatrix":
        """Adjoint for real t: transpose and conjugate every coefficient."""
        return PolyMatrix(np.conj(self.coeffs).transpose(1, 0, 2))

    @property
    def H(self) -> "PolyMatrix":
        return self.conj_transpose()

    def _check(self, other: "PolyMatrix"):
        if not isinstance(other, PolyMatrix):
            raise TypeError(f"expected PolyMatrix, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimMismatch(f"dims {self.dim} and {other.dim}")

    def _padded(self, k: int) -> np.ndarray:
        c = self.coeffs
        if c.shape[2] == k:
            return c
        out = np.zeros(c.shape[:2] + (k,), dtype=np.complex128)
        out[:, :, : c.shape[2]] = c
        return out

    def __add__(self, other):
        self._check(other)
        k = max(self.coeffs.shape[2], other.coeffs.shape[2])
        return PolyMatrix(self._padded(k) + other._padded(k))

    def __sub__(self, other):
        self._check(other)
        k = max(self.coeffs.shape[2], other.coeffs.shape[2])
        return PolyMatrix(self._padded(k) - other._padded(k))

    def __neg__(self):
        return PolyMatrix(-self.coeffs)

    def __matmul__(self, other):
        self._check(other)
        a, b = self.coeffs, other.coeffs
        out = np.zeros((self.dim, self.dim, a.shape[2] + b.shape[2] - 1), dtype=np.complex128)
        for p in range(a.shape[2]):
            out[:, :, p : p + b.shape[2]] += np.einsum("ik,kjq->ijq", a[:, :, p], b)
        return PolyMatrix(out)

    def __mul__(self, scalar):
        """Scale by a number or a CPoly (entrywise polynomial scaling)."""
        if isinstance(scalar, CPoly):
            s = scalar.coeffs
            c = self.coeffs
            out = np.zeros(c.shape[:2] + (c.shape[2] + s.size - 1,), dtype=np.complex128)
            for q, sq in enumerate(s):
                out[:, :, q : q + c.shape[2]] += sq * c
            return PolyMatrix(out)
        return PolyMatrix(self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def compose(self, inner: CPoly) -> "PolyMatrix":
        """Substitute ``t -> inner(t)`` in every entry."""
        n = self.dim
        return PolyMatrix.from_entries(
            [[self.entry(i, j).compose(inner) for j in range(n)] for i in range(n)]
        )

    def max_coeff_diff(self, other: "PolyMatrix") -> float:
        self._check(other)
        k = max(self.coeffs.shape[2], other.coeffs.shape[2])
        return float(np.max(np.abs(self._padded(k) - other._padded(k))))

    def allclose(self, other: "PolyMatrix", tol: float = 1e-12) -> bool:
        return self.max_coeff_diff(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(np.all(self.coeffs == other.coeffs))

    __hash__ = None

    def __repr__(self):
        return f"PolyMatrix(dim={self.dim}, degree={self.degree})"


def default_fd_step(t: float) -> float:
    return 1e-6 * max(1.0, abs(t))


@dataclass(frozen=True)
class Sampled:
    """A time-dependent matrix known only through evaluation.

    ``h`` fixes the central-difference step; ``None`` selects
    ``1e-6 * max(1, |t|)`` per call.  ``deriv`` may supply an analytic
    derivative, in which case no differencing is done.
    """

    fn: Callable[[float], np.ndarray]
    dim: int
    h: float | None = None
    deriv: Callable[[float], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.h is not None and not self.h > 0:
            raise ValueError("finite-difference step h must be positive")

    def __call__(self, t) -> np.ndarray:
        return np.asarray(self.fn(t), dtype=np.complex128)

    def step_at(self, t: float) -> float:
        return self.h if self.h is not None else default_fd_step(t)


TimeMatrixFn = Union[PolyMatrix, Sampled]


def dim_of(f: TimeMatrixFn) -> int:
    return f.dim


def poly_eval(pm: PolyMatrix, t: float) -> np.ndarray:
    return pm(t)


def poly_derivative(pm: PolyMatrix) -> PolyMatrix:
    return pm.derivative()


def poly_mul(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    return a @ b


def poly_add(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    return a + b


def poly_sub(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    return a - b


def poly_det_2x2(pm: PolyMatrix) -> CPoly:
    if pm.dim != 2:
        raise DimMismatch("2x2 determinant of a non-2x2 matrix")
    e = pm.entry
    return e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0)


def poly_inverse_2x2(pm: PolyMatrix) -> PolyMatrix:
    """Exact inverse of a 2x2 PolyMatrix with constant nonzero determinant."""
    det = poly_det_2x2(pm)
    if det.degree != 0:
        raise NonConstantDeterminant(f"determinant has degree {det.degree}")
    d = det.coeffs[0]
    e = pm.entry
    adj = PolyMatrix.from_entries([[e(1, 1), -e(0, 1)], [-e(1, 0), e(0, 0)]])
    return adj * (1.0 / d)


def fd_derivative(f: TimeMatrixFn, t: float, h: float | None = None) -> np.ndarray:
    """Central difference (f(t+h) - f(t-h)) / 2h."""
    if h is None:
        h = f.step_at(t) if isinstance(f, Sampled) else default_fd_step(t)
    if not h > 0:
        raise ValueError("h must be positive")
    return (np.asarray(f(t + h)) - np.asarray(f(t - h))) / (2.0 * h)


def derivative_at(f: TimeMatrixFn, t: float) -> np.ndarray:
    """d/dt f at t: exact for PolyMatrix or when Sampled carries ``deriv``."""
    if isinstance(f, PolyMatrix):
        return f.derivative()(t)
    if f.deriv is not None:
        return np.asarray(f.deriv(t), dtype=np.complex128)
    return fd_derivative(f, t)


def as_time_fn(x) -> TimeMatrixFn:
    """Accept a PolyMatrix, Sampled, constant matrix or plain callable."""
    if isinstance(x, (PolyMatrix, Sampled)):
        return x
    if callable(x):
        probe = np.asarray(x(0.0))
        return Sampled(x, probe.shape[0])
    return PolyMatrix.constant(x)
