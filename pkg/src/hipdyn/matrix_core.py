"""Dense complex matrix algebra for small (n <= ~16) operators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The routines
here carry their own pivoting and convergence rules so that failure modes
(singular pivots, non-Hermitian input, stalled QR sweeps) surface as the
exceptions in :mod:`hipdyn.errors` rather than as silent NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, HermitianityViolated, NoConvergence, SingularMatrix

SINGULAR_RTOL = 1e-13
HERMITIAN_TOL = 1e-10


def as_cmatrix(m) -> np.ndarray:
    """Coerce ``m`` to a finite square complex128 array."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def conj_transpose(m) -> np.ndarray:
    return np.conj(np.asarray(m, dtype=np.complex128)).T.copy()


def fro_norm(m) -> float:
    a = np.asarray(m, dtype=np.complex128)
    return float(math.sqrt(np.sum(a.real**2 + a.imag**2)))


def op_norm_estimate(m, rtol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on m^H m."""
    a = np.asarray(m, dtype=np.complex128)
    g = a.conj().T @ a
    n = g.shape[0]
    if not np.any(g):
        return 0.0
    # fixed non-symmetric start so the dominant direction is not missed by symmetry
    v = np.linspace(1.0, 2.0, n).astype(np.complex128) + 0.1j * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = g @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector hit the null space; fall back to the largest column
            j = int(np.argmax(np.linalg.norm(g, axis=0)))
            v = np.zeros(n, dtype=np.complex128)
            v[j] = 1.0
            continue
        new = float(np.real(np.vdot(v, w)))
        v = w / nw
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return math.sqrt(max(lam, 0.0))


def inverse(m) -> np.ndarray:
    """Gauss-Jordan inverse with partial pivoting.

    Raises SingularMatrix when a pivot drops below 1e-13 * max|entry|.
    """
    a = as_cmatrix(m)
    n = a.shape[0]
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    thresh = SINGULAR_RTOL * scale
    aug = np.hstack([a, identity(n)])
    for k in range(n):
        p = k + int(np.argmax(np.abs(aug[k:, k])))
        if abs(aug[p, k]) < thresh:
            raise SingularMatrix(f"pivot {k} has magnitude {abs(aug[p, k]):.3e} < {thresh:.3e}")
        if p != k:
            aug[[k, p]] = aug[[p, k]]
        aug[k] /= aug[k, k]
        col = aug[:, k].copy()
        col[k] = 0.0
        aug -= np.outer(col, aug[k])
    return aug[:, n:].copy()


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted lexicographically by (real, imag)."""

    eigenvalues: tuple

    @classmethod
    def from_values(cls, values) -> "Spectrum":
        vals = [complex(v) for v in values]
        vals.sort(key=lambda z: (z.real, z.imag))
        return cls(tuple(vals))

    def __len__(self):
        return len(self.eigenvalues)

    def __iter__(self):
        return iter(self.eigenvalues)

    def __getitem__(self, i):
        return self.eigenvalues[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.eigenvalues, dtype=np.complex128)

    @property
    def max_abs_imag(self) -> float:
        return max((abs(z.imag) for z in self.eigenvalues), default=0.0)

    def distance(self, other) -> float:
        """Max pointwise gap after sorting both sides."""
        if not isinstance(other, Spectrum):
            other = Spectrum.from_values(other)
        if len(other) != len(self):
            raise DimMismatch("spectra of different length")
        return max((abs(x - y) for x, y in zip(self, other)), default=0.0)


def _eig2(a, b, c, d):
    """Roots of z^2 - (a+d) z + (ad - bc), avoiding cancellation."""
    if b == 0 or c == 0:
        return complex(a), complex(d)
    tr = a + d
    det = a * d - b * c
    half = 0.5 * (a - d)
    root = np.sqrt(complex(half * half + b * c))
    mid = 0.5 * tr
    # pick the branch that adds magnitudes, recover the other root from det
    if (mid.conjugate() * root).real < 0:
        root = -root
    z1 = mid + root
    z2 = det / z1 if z1 != 0 else mid - root
    return complex(z1), complex(z2)


def _is_triangular(a) -> bool:
    return not np.any(np.tril(a, -1)) or not np.any(np.triu(a, 1))


def _hessenberg(a: np.ndarray) -> np.ndarray:
    h = a.copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0 or np.linalg.norm(x[1:]) == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


def _givens(x, y):
    r = math.hypot(abs(x), abs(y))
    if r == 0.0:
        return 1.0, 0.0
    return x / r, y / r


def _qr_sweep(h: np.ndarray, mu: complex) -> None:
    """One shifted QR step on an upper Hessenberg block, in place."""
    m = h.shape[0]
    for i in range(m):
        h[i, i] -= mu
    rots = []
    for k in range(m - 1):
        c, s = _givens(h[k, k], h[k + 1, k])
        g = np.array([[np.conj(c), np.conj(s)], [-s, c]])
        h[k:k + 2, k:] = g @ h[k:k + 2, k:]
        rots.append(g)
    for k, g in enumerate(rots):
        h[:k + 2, k:k + 2] = h[:k + 2, k:k + 2] @ g.conj().T
    for i in range(m):
        h[i, i] += mu


def _qr_eigenvalues(a: np.ndarray, cap: int) -> list:
    h = _hessenberg(a)
    eps = np.finfo(float).eps
    out = []
    hi = h.shape[0] - 1
    iters = 0
    since_deflation = 0
    while hi >= 0:
        if hi == 0:
            out.append(h[0, 0])
            break
        lo = hi
        while lo > 0:
            if abs(h[lo, lo - 1]) <= eps * (abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            out.append(h[hi, hi])
            hi -= 1
            since_deflation = 0
            continue
        if hi - lo == 1:
            out.extend(_eig2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi]))
            hi -= 2
            since_deflation = 0
            continue
        iters += 1
        if iters > cap:
            raise NoConvergence(f"QR iteration exceeded cap {cap}")
        since_deflation += 1
        if since_deflation % 11 == 0:
            # exceptional shift to break cycles
            mu = h[hi, hi] + 1.5 * abs(h[hi, hi - 1])
        else:
            z1, z2 = _eig2(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
            mu = z1 if abs(z1 - h[hi, hi]) < abs(z2 - h[hi, hi]) else z2
        block = h[lo:hi + 1, lo:hi + 1].copy()
        _qr_sweep(block, mu)
        h[lo:hi + 1, lo:hi + 1] = block
    return out


def eigenvalues(m) -> Spectrum:
    """Eigenvalues of a square matrix.

    Closed form for 2x2, exact diagonal for triangular input, otherwise
    Hessenberg reduction followed by single-shift QR (cap 100 * n sweeps).
    """
    a = as_cmatrix(m)
    n = a.shape[0]
    if n == 1 or _is_triangular(a):
        return Spectrum.from_values(np.diag(a))
    if n == 2:
        return Spectrum.from_values(_eig2(a[0, 0], a[0, 1], a[1, 0], a[1, 1]))
    return Spectrum.from_values(_qr_eigenvalues(a, 100 * n))


def hermiticity_residual(m) -> float:
    a = np.asarray(m, dtype=np.complex128)
    return fro_norm(a - a.conj().T)


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_cmatrix(m)
    res = hermiticity_residual(a)
    if res > tol * max(1.0, fro_norm(a)):
        raise HermitianityViolated(f"||m - m^H||_F = {res:.3e} exceeds {tol:g}")
    return a


@dataclass(frozen=True)
class PositivityResult:
    """Outcome of a Cholesky positivity test.

    ``min_pivot`` is the smallest pivot d_j = L[j, j]**2 on success; on
    failure ``failed_index`` is the 0-based row where the pivot was not
    strictly positive and ``failed_pivot`` its value.
    """

    positive: bool
    min_pivot: float | None = None
    failed_index: int | None = None
    failed_pivot: float | None = None

    def __bool__(self):
        return self.positive


def is_positive_definite(m, tol: float = HERMITIAN_TOL) -> PositivityResult:
    a = check_hermitian(m, tol)
    n = a.shape[0]
    low = np.zeros_like(a)
    pivots = []
    for j in range(n):
        d = (a[j, j] - np.vdot(low[j, :j], low[j, :j])).real
        if not d > 0.0:
            return PositivityResult(False, failed_index=j, failed_pivot=float(d))
        pivots.append(float(d))
        ljj = math.sqrt(d)
        low[j, j] = ljj
        for i in range(j + 1, n):
            low[i, j] = (a[i, j] - low[i, :j] @ low[j, :j].conj()) / ljj
    return PositivityResult(True, min_pivot=min(pivots))


_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
# 1-norm bounds below which the degree-m approximant meets double precision
_THETA = ((3, 1.495585217958292e-2), (5, 2.539398330063230e-1),
          (7, 9.504178996162932e-1), (9, 2.097847961257068e0))
_THETA13 = 5.371920351148152e0


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring with diagonal Pade approximants."""
    a = as_cmatrix(m)
    n = a.shape[0]
    eye = identity(n)
    norm1 = float(np.max(np.sum(np.abs(a), axis=0)))
    if norm1 == 0.0:
        return eye
    for deg, theta in _THETA:
        if norm1 <= theta:
            b = _PADE[deg]
            powers = [eye, a @ a]
            for _ in range(deg // 2 - 1):
                powers.append(powers[-1] @ powers[1])
            u = a @ sum(b[2 * k + 1] * powers[k] for k in range(deg // 2 + 1))
            v = sum(b[2 * k] * powers[k] for k in range(deg // 2 + 1))
            return np.linalg.solve(v - u, v + u)
    squarings = max(0, int(math.ceil(math.log2(norm1 / _THETA13))))
    a = a / 2.0**squarings
    b = _PADE[13]
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r
