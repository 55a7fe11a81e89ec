"""Acceptance suite for the reference problem.

Each test prints one ``ACCEPT <n> PASS|FAIL`` line with the measured values,
so ``pytest tests/test_acceptance.py -v`` doubles as a report.  The shared
C = 1.7 run through four levels takes a couple of minutes; the whole module
runs in roughly ten.
"""

import numpy as np
import pytest
from conftest import random_cap_directions, random_disk_points
from lp_oracle import enumerate_optimum
from test_transport_lp import random_instance

from reflector_ot import transport_lp as tlp
from reflector_ot.analysis import decay_fit
from reflector_ot.analytic import gamma, gamma_planar, jacobian, rho_exact, z_exact
from reflector_ot.geometry import cost_K, log_cost, rho_tilde, z_tilde
from reflector_ot.meshgen import cap_mesh, disk_mesh, integrate, integrate_on_aperture
from reflector_ot.refine import (
    DEFAULT_ANCHOR,
    RefinementConfig,
    build_meshes,
    covered_at,
    find_critical_epsilon,
    interpolate,
    interpolate_planar,
    refine_once,
    run,
    select_constraints,
    slack_extremes,
    solve_simple,
)

pytestmark = pytest.mark.slow

SEED = 20240611


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPT {n} {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


@pytest.fixture(scope="module")
def run17(dataset):
    res = run(RefinementConfig(C=1.7, a=1.0, n_levels=4), dataset)
    assert res.status == "completed"
    return res


@pytest.fixture(scope="module")
def run20(dataset):
    res = run(RefinementConfig(C=2.0, a=1.0, n_levels=4), dataset)
    assert res.status == "completed"
    return res


def test_1_oracle_identity(dataset, report):
    rng = np.random.default_rng(SEED)
    pair, cfg = dataset.pair, dataset.config
    m = random_cap_directions(rng, 1000)
    x = gamma(pair, m)
    lhs = rho_tilde(cfg, rho_exact(pair, m), m) * z_tilde(cfg, z_exact(pair, x), x)
    rel = np.max(np.abs(lhs - cost_K(cfg, m, x)) / np.abs(cost_K(cfg, m, x)))
    xs = random_disk_points(rng, 1000)
    feas = (np.log(rho_tilde(cfg, rho_exact(pair, m), m))
            + np.log(z_tilde(cfg, z_exact(pair, xs), xs)) - log_cost(cfg, m, xs))
    ok = rel <= 1e-9 and feas.min() >= -1e-9
    report(1, ok, f"max rel identity error {rel:.2e} (<= 1e-9), min slack {feas.min():.3e} (>= -1e-9)")
    assert ok


def test_2_jacobian(dataset, report):
    rng = np.random.default_rng(SEED + 1)
    pair = dataset.pair
    # Stay off the pole, where the planar chart of the cap is singular.
    m = random_cap_directions(rng, 50, radius=0.79, rmin=0.01)
    step = 1e-5
    worst = 0.0
    for p in m[:, :2]:
        cols = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = step
            cols.append((gamma_planar(pair, p + e) - gamma_planar(pair, p - e)) / (2 * step))
        fd = abs(np.linalg.det(np.column_stack(cols)))
        worst = max(worst, abs(jacobian(pair, p) - fd) / fd)
    ok = worst <= 1e-5
    report(2, ok, f"max rel deviation from central differences {worst:.2e} (<= 1e-5)")
    assert ok


def test_3_energy_balance(dataset, report):
    target = 11.2089
    e_in = integrate_on_aperture(cap_mesh(0.8, 0.05), dataset.I)
    e_out = integrate(disk_mesh(17 / 9, 0.05), dataset.L)
    d_in, d_out = abs(e_in / target - 1), abs(e_out / target - 1)
    ok = d_in <= 1e-4 and d_out <= 1e-4
    report(3, ok, f"int I = {e_in:.6f} (rel {d_in:.1e}), int L = {e_out:.6f} (rel {d_out:.1e})")
    assert ok


def test_4_lp_oracle_equivalence(dataset, report):
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    count = 0
    while count < 50:
        M, N = (int(v) for v in rng.integers(1, 7, size=2))
        lp = random_instance(rng, M, N, extra=int(rng.integers(0, 5)))
        try:
            ref, _, _ = enumerate_optimum(lp.r_weights, lp.z_weights, lp.rows, lp.cols, lp.rhs,
                                          lp.anchor_value)
        except ValueError:
            continue  # too many vertex candidates for exhaustive search
        worst = max(worst, abs(tlp.solve(lp).objective - ref))
        count += 1

    coarse = solve_simple(dataset, dataset.config, 0.3)
    h = 0.26
    simple = solve_simple(dataset, dataset.config, h)
    scheme2 = refine_once(coarse, h, np.inf, dataset, dataset.config)
    dev = max(np.abs(scheme2.r - simple.r).max(), np.abs(scheme2.z - simple.z).max())
    ok = worst <= 1e-8 and dev <= 1e-6
    report(4, ok, f"50 instances: max |obj - enumeration| {worst:.1e} (<= 1e-8); "
                  f"M={simple.M}, N={simple.N}: max |scheme2 - scheme1| {dev:.1e} (<= 1e-6)")
    assert ok


def test_5_error_levels(run17, report):
    errs = [rep.max_err_r1 for rep in run17.reports[:3]]
    limits = [0.01, 0.005, 0.0045]
    within = all(e <= t for e, t in zip(errs, limits))
    strict = all(b < a for a, b in zip(errs, errs[1:]))
    ok = within and strict
    report(5, ok, "max_err_r1 " + " / ".join(f"{e:.5f}" for e in errs)
           + f" (limits 0.01 / 0.005 / 0.0045: {'met' if within else 'missed'}); "
           + f"strictly decreasing: {strict}")
    assert within, "error magnitudes"
    assert strict, "errors not strictly decreasing"


def test_6_decay_exponent(run17, report):
    reps = run17.reports
    n_tot = [r.M + r.N for r in reps]
    a1 = decay_fit([r.max_err_r1 for r in reps], n_tot)
    a2 = decay_fit([r.max_err_r2 for r in reps], n_tot)
    ok = -1.3 <= a1 <= -0.4 and -1.3 <= a2 <= -0.4
    report(6, ok, f"alpha_r1 = {a1:.3f}, alpha_r2 = {a2:.3f} over levels 1-4 (in [-1.3, -0.4])")
    assert ok


def test_7_constraint_economy(run17, run20, dataset, report):
    # Counting iterations from 0, "level 3" is the 1148-point mesh, which is
    # level 4 here.  The previous solutions agree for every C,
    # so the selection count for C in [1, 2] is measured from one of them.
    cfg = dataset.config
    prev = run20.solutions[2]
    h = run20.reports[3].h
    cap, disk = build_meshes(dataset, h, DEFAULT_ANCHOR)
    r = interpolate(prev, cap.lifted, cfg, "surface")
    z = interpolate_planar(prev, disk.samples, cfg, "surface")
    pct = {}
    for C in np.linspace(1.0, 2.0, 5):
        rows, _, _ = select_constraints(r, z, cap, disk, cfg, C * h)
        pct[C] = 100.0 * len(rows) / (len(cap) * len(disk))
    ran = {1.7: run17.reports[3].pct_full, 2.0: run20.reports[3].pct_full}
    ok = max(pct.values()) <= 35.0 and max(ran.values()) <= 35.0
    report(7, ok, f"M={len(cap)}, N={len(disk)}: kept "
           + ", ".join(f"C={c:g}: {p:.1f}%" for c, p in pct.items())
           + f"; runs C=1.7 {ran[1.7]:.1f}%, C=2 {ran[2.0]:.1f}% (<= 35%)")
    assert ok


def test_8_unboundedness(run17, dataset, report):
    trail = []
    C = 0.8
    found = None
    while C > 1e-3:
        res = run(RefinementConfig(C=C, a=1.0, n_levels=4), dataset)
        trail.append(f"C={C:g}: {res.status}")
        if res.status == "unbounded" and res.unbounded.uncovered > 0:
            found = (C, res.unbounded)
            break
        C /= 2
    # Coverage is a threshold predicate in epsilon, so bisection must bracket it.
    rng = np.random.default_rng(SEED + 3)
    cfg = dataset.config
    brackets = 0
    for _ in range(5):
        prev = run17.solutions[int(rng.integers(0, 3))]
        h_next = prev.h * rng.uniform(0.75, 0.9)
        eps = find_critical_epsilon(prev, h_next, dataset, cfg)
        cap, disk = build_meshes(dataset, h_next, DEFAULT_ANCHOR)
        rmin, cmin = slack_extremes(interpolate(prev, cap.lifted, cfg, "surface"),
                                    interpolate_planar(prev, disk.samples, cfg, "surface"),
                                    cap, disk, cfg)
        grid = np.linspace(0.0, 2 * eps, 41)
        flags = [covered_at(rmin, cmin, e) for e in grid]
        monotone = flags == sorted(flags)
        brackets += monotone and covered_at(rmin, cmin, eps) and not covered_at(rmin, cmin, 0.99 * eps)
    ok = found is not None and found[1].level <= 4 and run17.status == "completed" and brackets == 5
    detail = "; ".join(trail)
    if found:
        detail += (f" -> level {found[1].level}, {len(found[1].uncovered_inputs)} inputs and "
                   f"{len(found[1].uncovered_outputs)} outputs uncovered")
    report(8, ok, f"{detail}; C=1.7 {run17.status}; bisection bracketed {brackets}/5")
    assert ok


def test_9_gauge_invariance(dataset, report):
    rng = np.random.default_rng(SEED + 4)
    sol = solve_simple(dataset, dataset.config, 0.2)
    cap, disk = sol.cap, sol.disk
    lp = tlp.assemble(cap, disk, dataset.I, dataset.L, dataset.config, sol.r[0])
    base = lp.objective(sol.r, sol.z)
    worst = max(abs(lp.objective(sol.r + c, sol.z - c) - base) / abs(base)
                for c in rng.uniform(-10, 10, 10))
    ok = worst <= 1e-12
    report(9, ok, f"max rel objective change {worst:.1e} over 10 shifts (<= 1e-12)")
    assert ok
