import numpy as np
import pytest

from reflector_ot.analysis import (
    constraint_stats,
    decay_fit,
    energy_report,
    errors_from_arrays,
    reflector_errors,
)
from reflector_ot.analytic import rho_exact, z_exact
from reflector_ot.errors import InsufficientData
from reflector_ot.refine import build_meshes, DEFAULT_ANCHOR, solve_simple

# Reference run at C = 1.7, a = 1 on finer meshes: points per reflector and max errors.
REF_M = [284, 455, 724, 1148, 1824, 2882, 4536]
REF_N = [278, 450, 721, 1146, 1810, 2879, 4525]
REF_R1 = [0.0048, 0.0022, 0.00148, 0.0012, 0.00060, 0.00059, 0.00045]
REF_R2 = [0.008, 0.0047, 0.0039, 0.00185, 0.0013, 0.00069, 0.00067]


@pytest.fixture(scope="module")
def sol(dataset):
    return solve_simple(dataset, dataset.config, 0.2)


def test_errors_vanish_on_exact_samples(dataset):
    cap, disk = build_meshes(dataset, 0.2, DEFAULT_ANCHOR)
    rep = errors_from_arrays(rho_exact(dataset.pair, cap.lifted), z_exact(dataset.pair, disk.samples),
                             cap, disk, dataset.pair)
    assert rep.max_err_r1 == 0 and rep.max_err_r2 == 0
    assert rep.l2_err_r1 == 0 and rep.l2_err_r2 == 0


def test_error_report_invariants(sol, dataset):
    rep = reflector_errors(sol, dataset.pair)
    assert 0 < rep.l2_err_r1 <= rep.max_err_r1
    assert 0 < rep.l2_err_r2 <= rep.max_err_r2
    assert rep.max_err_r1 == np.abs(sol.rho - rho_exact(dataset.pair, sol.cap.lifted)).max()
    assert rep.err_r1.shape == (sol.M,) and rep.err_r2.shape == (sol.N,)
    assert set(rep.summary()) == {"max_err_r1", "l2_err_r1", "max_err_r2", "l2_err_r2"}


def test_l2_is_weighted_rms():
    class Mesh:
        def __init__(self, w, lifted=None, samples=None):
            self.weights, self.lifted, self.samples = np.asarray(w, float), lifted, samples

    from reflector_ot.analytic import EllipsoidParaboloidPair

    pair = EllipsoidParaboloidPair()
    m = np.array([[0.0, 0.6, -0.8], [0.6, 0.0, -0.8]])
    x = np.array([[0.0, 0.0], [1.0, 0.0]])
    rho = rho_exact(pair, m) + np.array([0.1, 0.0])
    zs = z_exact(pair, x) + np.array([0.0, 0.2])
    rep = errors_from_arrays(rho, zs, Mesh([3.0, 1.0], lifted=m), Mesh([1.0, 1.0], samples=x), pair)
    assert rep.l2_err_r1 == pytest.approx(np.sqrt(3 * 0.01 / 4))
    assert rep.l2_err_r2 == pytest.approx(np.sqrt(0.04 / 2))


def test_decay_fit():
    n = np.array([100.0, 400.0, 1600.0, 6400.0])
    assert decay_fit(1.0 / n, n) == pytest.approx(-1.0)
    assert decay_fit(7.5 / n, n) == pytest.approx(-1.0)
    with pytest.raises(InsufficientData):
        decay_fit([1.0, 0.5], [1.0, 2.0])
    with pytest.raises(InsufficientData):
        decay_fit([1.0, 0.5, 0.2], [1.0, 2.0])


def test_decay_fit_on_reference_columns():
    n_tot = np.add(REF_M, REF_N)
    assert decay_fit(REF_R1, n_tot) == pytest.approx(-0.82, abs=0.1)
    assert decay_fit(REF_R2, n_tot) == pytest.approx(-0.95, abs=0.1)


def test_energy_report(sol, dataset):
    rep = energy_report(sol, dataset)
    assert rep.imbalance.shape == (sol.N,)
    # Whole cells are assigned, but the totals still balance.
    assert rep.imbalance.sum() == pytest.approx(0.0, abs=1e-10)
    assert rep.mean_rel <= rep.max_rel
    assert rep.mean_rel < 1.0


def test_constraint_stats():
    reports = [{"level": 1, "M": 10, "N": 20, "constraints": 200},
               {"level": 2, "M": 20, "N": 40, "constraints": 200}]
    assert constraint_stats(reports) == [(1, 200, 100.0), (2, 200, 25.0)]
