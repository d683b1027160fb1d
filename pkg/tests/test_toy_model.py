import numpy as np
import pytest
import sympy as sp

from hipdyn import pictures as pic
from hipdyn.matrix_core import eigenvalues, is_positive_definite
from hipdyn.polytime import PolyMatrix
from hipdyn.toy_model import (
    DEFAULT_GRID,
    ToyParams,
    parameter_grid,
    toy_dyson,
    toy_hamiltonian,
    toy_model,
    toy_printed,
)


def _sympy_objects(r, a, b):
    """Derive the toy objects symbolically in t, independent of the package."""
    t = sp.symbols("t", real=True)
    s = a * t + b * t**2 / 2
    o2 = sp.Matrix([[1, 0], [s, 1]])
    o1 = sp.Matrix([[1, r], [0, 1]])
    om = o2 * o1
    hs = sp.diag(1 + t, 2)
    h = sp.simplify(om.inv() * hs * om)
    sigma = sp.simplify(sp.I * om.inv() * om.diff(t))
    sigma2 = sp.simplify(sp.I * o2.inv() * o2.diff(t))
    h1 = sp.simplify(o1 * h * o1.inv())
    return t, {"h": h, "theta": sp.expand(om.T * om), "theta2": sp.expand(o2.T * o2),
               "sigma": sigma, "sigma2": sigma2, "h1": h1, "g1": sp.expand(h1 - sigma2)}


def _to_poly(expr_matrix, t):
    rows = []
    for i in range(expr_matrix.rows):
        row = []
        for j in range(expr_matrix.cols):
            coeffs = sp.Poly(sp.expand(expr_matrix[i, j]), t).all_coeffs()[::-1]
            row.append([complex(c) for c in coeffs])
        rows.append(row)
    k = max(len(c) for row in rows for c in row)
    cube = np.zeros((expr_matrix.rows, expr_matrix.cols, k), dtype=complex)
    for i, row in enumerate(rows):
        for j, c in enumerate(row):
            cube[i, j, :len(c)] = c
    return PolyMatrix(cube)


@pytest.mark.parametrize("r,a,b", [(0.5, 1.0, 0.5), (2.0, 1.0, 0.0), (0.0, 0.0, 0.5)])
def test_against_symbolic_derivation(r, a, b):
    rr, aa, bb = sp.Rational(str(r)), sp.Rational(str(a)), sp.Rational(str(b))
    t, ref = _sympy_objects(rr, aa, bb)
    p = ToyParams(r, a, b)
    m = toy_model(p)
    ours = {"h": m.hamiltonian, "theta": pic.theta(m), "theta2": pic.theta2(m),
            "sigma": pic.sigma(m), "sigma2": pic.sigma2(m), "h1": pic.hamiltonian_h1(m),
            "g1": pic.generator(m, "HIP")}
    for name, got in ours.items():
        assert got.max_coeff_diff(_to_poly(ref[name], t)) < 1e-12, name


def test_printed_hip_objects_match_derivation():
    for p in parameter_grid():
        m = toy_model(p)
        pr = toy_printed(p)
        assert pic.theta(m).max_coeff_diff(pr.theta) <= 1e-12
        assert pic.theta2(m).max_coeff_diff(pr.theta2) <= 1e-12
        assert pic.hamiltonian_h1(m).max_coeff_diff(pr.h1) <= 1e-12
        assert pic.sigma2(m).max_coeff_diff(pr.sigma2) <= 1e-12
        assert pic.generator(m, "HIP").max_coeff_diff(pr.g1) <= 1e-12


def test_printed_sigma_mismatch_vanishes_only_at_r_one():
    for r in (0.0, 0.5, 1.0, 2.0):
        p = ToyParams(r, 1.0, 0.5)
        m = toy_model(p)
        diff = pic.sigma(m) - toy_printed(p).sigma
        for t in (0.0, 0.5, 1.0):
            sdot = p.a + p.b * t
            expected = 1j * sdot * np.array([[0.0, r - r * r], [0.0, r - 1.0]])
            assert np.abs(diff(t) - expected).max() < 1e-12


def test_printed_doublet_at_consistency_point():
    p = ToyParams(1.0, 1.0, 0.5)
    g = pic.generator(toy_model(p), "NIP")
    for t in (0.0, 0.3, 1.0):
        assert eigenvalues(g(t)).distance(toy_printed(p).g_doublet(t)) < 1e-12


def test_hamiltonian_at_origin():
    p = ToyParams(r=0.0, a=1.0, b=0.0)
    assert np.array_equal(toy_hamiltonian(p)(0.0), [[1, 0], [0, 2]])
    assert np.array_equal(toy_dyson(p).omega2(1.0), [[1, 0], [1, 1]])


def test_metric_determinant_and_positivity():
    for p in parameter_grid():
        th, th2 = pic.theta(toy_model(p)), pic.theta2(toy_model(p))
        for t in DEFAULT_GRID["t"]:
            assert abs(np.linalg.det(th(t)) - 1) < 1e-12
            assert is_positive_definite(th(t))
            assert is_positive_definite(th2(t))


def test_theta2_spectrum_at_unit_s():
    # s = 1 gives Theta2 = [[2, 1], [1, 1]] with eigenvalues (3 -+ sqrt 5) / 2
    th2 = pic.theta2(toy_model(ToyParams(0.0, 1.0, 0.0)))
    root5 = np.sqrt(5.0)
    assert eigenvalues(th2(1.0)).distance([(3 - root5) / 2, (3 + root5) / 2]) < 1e-14


def test_grid_order_and_size():
    pts = parameter_grid()
    assert len(pts) == 4 * 2 * 2
    assert [p.r for p in pts[:4]] == [0.0] * 4
    assert pts[-1] == ToyParams(2.0, 1.0, 0.5)
