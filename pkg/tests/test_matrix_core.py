import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from hipdyn.errors import HermitianityViolated, SingularMatrix
from hipdyn.matrix_core import (
    Spectrum,
    conj_transpose,
    eigenvalues,
    expm,
    fro_norm,
    identity,
    inverse,
    is_positive_definite,
    op_norm_estimate,
)


def test_conj_transpose_examples():
    assert np.array_equal(conj_transpose(identity(2)), identity(2))
    assert np.array_equal(conj_transpose([[0, 1], [0, 0]]), [[0, 0], [1, 0]])
    sigma2 = np.array([[0, 0], [1j, 0]])
    assert np.array_equal(conj_transpose(sigma2), [[0, -1j], [0, 0]])


def test_inverse_examples():
    assert np.allclose(inverse(identity(3)), identity(3), atol=0)
    assert np.array_equal(inverse([[1, 0], [1, 1]]), [[1, 0], [-1, 1]])
    with pytest.raises(SingularMatrix):
        inverse(np.zeros((2, 2)))
    with pytest.raises(SingularMatrix):
        inverse([[1, 2], [2, 4]])


def test_inverse_residual_bound(rng):
    for n in range(1, 9):
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
        assert fro_norm(m @ inverse(m) - np.eye(n)) <= 1e-12 * n


def test_inverse_threshold_is_scale_invariant():
    m = np.array([[1e-20, 0], [0, 2e-20]])
    assert np.allclose(inverse(m) @ m, np.eye(2))


def test_eigenvalues_examples():
    t = 0.5
    assert eigenvalues(np.diag([1 + t, 2])).eigenvalues == (1.5, 2.0)
    assert eigenvalues(identity(2)).eigenvalues == (1.0, 1.0)


def test_eigenvalues_triangular_similarity(rng):
    # oracle: conjugating a triangular matrix keeps its diagonal as the spectrum
    tri = np.triu(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    p = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    m = p @ tri @ np.linalg.inv(p)
    assert eigenvalues(m).distance(np.diag(tri)) < 1e-10


@pytest.mark.parametrize("n", [3, 4, 5, 8, 12, 16])
def test_qr_path_against_lapack(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ours = eigenvalues(m)
    ref = Spectrum.from_values(np.linalg.eigvals(m))
    assert ours.distance(ref) < 1e-9 * max(1.0, np.abs(ref.as_array()).max())


@pytest.mark.parametrize("n", [2, 3, 4])
def test_eigenvalues_are_characteristic_roots(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    for lam in eigenvalues(m):
        det = np.linalg.det(m - lam * np.eye(n))
        assert abs(det) < 1e-9 * max(1.0, np.linalg.norm(m) ** n)


def test_real_nonsymmetric_with_complex_pair():
    # rotation block plus a real eigenvalue
    m = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 3.0]])
    p = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]])
    spec = eigenvalues(p @ m @ np.linalg.inv(p))
    assert spec.distance([-1j, 1j, 3.0]) < 1e-10


def test_two_by_two_stable_branch():
    # nearly equal-magnitude cancellation case
    m = np.array([[1e8, 1.0], [1.0, 1e-8]])
    spec = eigenvalues(m)
    ref = np.linalg.eigvalsh(m)
    assert abs(spec[0] - ref[0]) < 1e-20
    assert abs(spec[1] - ref[1]) / ref[1] < 1e-15


def test_triangular_spectrum_is_exact_diagonal(rng):
    for n in (2, 3, 5):
        tri = np.tril(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        expected = sorted(np.diag(tri), key=lambda z: (z.real, z.imag))
        assert list(eigenvalues(tri)) == expected


def test_positive_definite_examples():
    res = is_positive_definite([[2, 1], [1, 1]])
    assert res and res.min_pivot == pytest.approx(0.5)
    assert is_positive_definite(identity(3))
    bad = is_positive_definite([[1, 2], [2, 1]])
    # eigenvalues {3, -1}; second pivot 1 - 4 = -3
    assert not bad
    assert bad.failed_index == 1
    assert bad.failed_pivot == pytest.approx(-3.0)
    with pytest.raises(HermitianityViolated):
        is_positive_definite([[1, 1], [0, 1]])


def test_expm_examples():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    got = expm(-1j * math.pi * np.diag([1.0, 2.0]))
    assert np.allclose(got, np.diag([-1.0, 1.0]), atol=1e-14)
    n = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(expm(n), np.eye(2) + n, atol=1e-15)


@pytest.mark.parametrize("norm", [1e-3, 0.1, 0.9, 2.0, 5.0, 10.0])
def test_expm_against_scipy(rng, norm):
    for n in (2, 3, 5):
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        m *= norm / np.linalg.norm(m, 2)
        ref = scipy.linalg.expm(m)
        assert np.linalg.norm(expm(m) - ref) / np.linalg.norm(ref) < 1e-12


def test_norm_examples():
    assert fro_norm(identity(2)) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert fro_norm(np.zeros((2, 2))) == 0.0
    assert op_norm_estimate(np.zeros((2, 2))) == 0.0
    assert op_norm_estimate([[3, 0], [4, 0]]) == pytest.approx(5.0, rel=1e-6)


def test_op_norm_against_svd(rng):
    for n in (2, 3, 4, 6):
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert op_norm_estimate(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-6)


_entries = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def _square(max_n=4):
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(st.lists(_entries, min_size=n, max_size=n), min_size=n, max_size=n))


@given(_square())
def test_conj_transpose_involution(rows):
    m = np.array(rows, dtype=complex)
    assert np.array_equal(conj_transpose(conj_transpose(m)), m)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_similarity_invariance(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    p = q @ np.diag(rng.uniform(0.5, 2.0, n))  # well conditioned
    a = eigenvalues(p @ m @ inverse(p))
    b = eigenvalues(m)
    assert a.distance(b) < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_gram_matrix_is_positive(seed, n):
    rng = np.random.default_rng(seed)
    omega = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 2 * np.eye(n)
    assert is_positive_definite(omega.conj().T @ omega)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(0.0, 5.0))
def test_expm_inverse_pair(seed, n, norm):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m *= norm / max(np.linalg.norm(m, 2), 1e-300)
    assert fro_norm(expm(m) @ expm(-m) - np.eye(n)) < 1e-10
