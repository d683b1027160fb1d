import numpy as np
import pytest

from hipdyn.matrix_core import inverse
from hipdyn.pictures import DysonFactorization, PictureModel
from hipdyn.polytime import PolyMatrix, Sampled


def random_poly_factor(rng, n, degree=2, scale=0.5):
    """I + E(t) with ||E(t)||_inf <= scale on [0, 1], hence invertible there."""
    bound = scale / (n * (degree + 1))
    mag = rng.uniform(0, bound, size=(n, n, degree + 1))
    phase = np.exp(2j * np.pi * rng.uniform(size=(n, n, degree + 1)))
    c = mag * phase
    c[:, :, 0] += np.eye(n)
    return PolyMatrix(c)


def random_hermitian(rng, n, scale=1.0):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (x + x.conj().T) / 2


def random_quasi_hermitian_model(rng, n, degree=2):
    """Random polynomial Dyson factors and H = Omega^-1 h Omega with Hermitian h(t)."""
    o1 = random_poly_factor(rng, n, degree)
    o2 = random_poly_factor(rng, n, degree)
    h = PolyMatrix(np.stack([random_hermitian(rng, n), random_hermitian(rng, n, 0.5)], axis=2))
    omega = o2 @ o1
    ham = Sampled(lambda t: inverse(omega(t)) @ h(t) @ omega(t), n)
    return PictureModel(DysonFactorization(o1, o2), ham, window=(0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance summary: one line per criterion --------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    for n in range(1, 12):
        config.addinivalue_line("markers", f"criterion_{n}: acceptance criterion {n}")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key in report.keywords:
        if key.startswith("criterion_"):
            _ACCEPTANCE[key] = (report.outcome, report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k.split("_")[1])):
        outcome, nodeid = _ACCEPTANCE[key]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {key.replace('_', ' ')}  ({nodeid.split('::')[-1]})")
