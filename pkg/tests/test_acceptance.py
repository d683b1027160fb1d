"""Acceptance criteria 1 to 11, each with its tolerance and wall-clock budget.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion.
"""
import time
from contextlib import contextmanager

import numpy as np
import pytest

from hipdyn import pictures as pic
from hipdyn.evolution import IntegratorSpec
from hipdyn.matrix_core import check_hermitian, eigenvalues, is_positive_definite
from hipdyn.toy_model import DEFAULT_GRID, ToyParams, parameter_grid, toy_model, toy_printed
from hipdyn.verify import (
    Status,
    dual_consistency,
    dual_overlap_drift,
    hip_dual_form_expectations,
    matched_trajectories,
    residual_coriolis_composition,
    residual_metric_compatibility,
    residual_metric_factorization,
    residual_quasi_hermiticity_transport,
    rk4_order_slope,
    run_toy_suite,
    toy_conditioning,
)

from conftest import random_quasi_hermitian_model

A_S = np.diag([1.0, 0.0])
PSI0 = np.array([1.0, 0.0])
RUN = ToyParams(r=0.5, a=1.0, b=0.5)
RK4 = IntegratorSpec.rk4(1e-3)
GRID_T = DEFAULT_GRID["t"]


@contextmanager
def budget(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f} s, budget {seconds} s"


@pytest.fixture(scope="module")
def matched_run():
    start = time.perf_counter()
    m = toy_model(RUN)
    run = matched_trajectories(m, PSI0, RK4, np.linspace(0.0, 1.0, 101), [A_S])
    return m, run, time.perf_counter() - start


@pytest.mark.criterion_1
def test_printed_objects_reproduced():
    with budget(1.0):
        worst = 0.0
        for p in parameter_grid():
            m, pr = toy_model(p), toy_printed(p)
            for derived, printed in ((pic.theta(m), pr.theta), (pic.theta2(m), pr.theta2),
                                     (pic.hamiltonian_h1(m), pr.h1), (pic.sigma2(m), pr.sigma2),
                                     (pic.generator(m, "HIP"), pr.g1)):
                worst = max(worst, derived.max_coeff_diff(printed))
    assert worst <= 1e-12


@pytest.mark.criterion_2
def test_quasi_hermiticity():
    with budget(1.0):
        worst = max(pic.quasi_hermiticity_residual(m.hamiltonian(t), pic.theta(m)(t))
                    for m in map(toy_model, parameter_grid()) for t in GRID_T)
    assert worst < 1e-12


@pytest.mark.criterion_3
def test_isospectrality():
    probes = np.linspace(0.0, 1.0, 20)
    with budget(1.0):
        worst_spec = worst_herm = 0.0
        for m in map(toy_model, parameter_grid()):
            h, h1, hs = m.hamiltonian, pic.hamiltonian_h1(m), pic.hamiltonian_textbook(m)
            for t in probes:
                expected = (1.0 + t, 2.0)
                for op in (h, h1, hs):
                    worst_spec = max(worst_spec, eigenvalues(op(t)).distance(expected))
                m_hs = hs(t)
                worst_herm = max(worst_herm, np.linalg.norm(m_hs - m_hs.conj().T))
                check_hermitian(m_hs, 1e-10)
    assert worst_spec < 1e-10
    assert worst_herm < 1e-10


@pytest.mark.criterion_4
def test_metric_positivity():
    with budget(1.0):
        worst_det = 0.0
        for m in map(toy_model, parameter_grid()):
            th, th2 = pic.theta(m), pic.theta2(m)
            for t in GRID_T:
                assert is_positive_definite(th(t))
                assert is_positive_definite(th2(t))
                worst_det = max(worst_det, abs(np.linalg.det(th(t)) - 1.0))
    assert worst_det <= 1e-12


@pytest.mark.criterion_5
def test_consistency_point():
    with budget(1.0):
        m1, pr1 = toy_model(ToyParams(1.0, 1.0, 0.5)), toy_printed(ToyParams(1.0, 1.0, 0.5))
        sig = pic.sigma(m1)
        g = pic.generator(m1, "NIP")
        sig_res = max(np.abs(sig(t) - pr1.sigma(t)).max() for t in GRID_T)
        doublet_res = max(eigenvalues(g(t)).distance(pr1.g_doublet(t)) for t in GRID_T)
        rep = run_toy_suite(r=[0.0, 0.5, 1.0, 2.0], a=[1.0], b=[0.5], dynamics=False)
    assert sig_res <= 1e-12
    assert doublet_res <= 1e-12
    for name in ("printed_sigma", "printed_g_doublet"):
        for c in rep.by_name(name):
            if c.context["r"] == 1.0:
                assert c.status is Status.PASS
            else:
                assert c.status is Status.RECORDED


@pytest.mark.criterion_6
def test_picture_equivalence(matched_run):
    m, run, elapsed = matched_run
    sp = run.sp.expectations[:, 0]
    gaps = [np.abs(run.nip.expectations[:, 0] - sp).max(),
            np.abs(run.hip.expectations[:, 0] - sp).max(),
            np.abs(hip_dual_form_expectations(m, run.hip, A_S) - sp).max()]
    assert elapsed < 10.0
    assert max(gaps) < 1e-7


@pytest.mark.criterion_7
def test_unitarity(matched_run):
    _, run, elapsed = matched_run
    drift = max(np.abs(tr.physical_norms - tr.physical_norms[0]).max()
                for tr in (run.sp, run.nip, run.hip))
    assert elapsed < 10.0
    assert drift < 1e-7


@pytest.mark.criterion_8
def test_dual_ket_machinery(matched_run):
    m, run, elapsed = matched_run
    assert elapsed < 10.0
    assert dual_overlap_drift(run.hip) < 1e-7
    assert dual_consistency(m, run.hip) < 1e-7


@pytest.mark.criterion_9
def test_property_suite_on_random_models():
    checks = (residual_metric_factorization, residual_coriolis_composition,
              residual_metric_compatibility, residual_quasi_hermiticity_transport)
    with budget(60.0):
        worst = 0.0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            m = random_quasi_hermitian_model(rng, 1 + seed % 4)
            for t in rng.uniform(0.0, 1.0, 5):
                worst = max(worst, *(fn(m, t) for fn in checks))
    assert worst < 1e-9


@pytest.mark.criterion_10
def test_conditioning_direction():
    ts = np.linspace(0.0, 1.0, 21)
    with budget(30.0):
        for p in parameter_grid():
            m, pr = toy_model(p), toy_printed(p)
            g1 = pic.generator(m, "HIP")
            for t in ts:
                assert eigenvalues(g1(t)).max_abs_imag == 0.0
                expected = abs((p.a + p.b * t) * (1.0 - p.r))
                assert abs(eigenvalues(pr.g(t)).max_abs_imag - expected) <= 1e-12
        rep = toy_conditioning(ToyParams(0.0, 1.0, 0.0, window=(0.0, 2.0)), RK4)
    nip, hip = rep.series["NIP_auxiliary"], rep.series["HIP_Kphysical"]
    assert hip.growth_op <= nip.growth_op
    assert hip.growth_fro <= nip.growth_fro


@pytest.mark.criterion_11
def test_integrator_order():
    with budget(30.0):
        slope = rk4_order_slope(toy_model(RUN), PSI0)
    assert abs(slope - 4.0) <= 0.3
