import numpy as np
import pytest

from reflector_ot.meshgen import (
    cap_mesh,
    disk_mesh,
    estimate_point_count,
    integrate,
    integrate_on_aperture,
    is_delaunay,
    nearest_sample,
    pick_anchor,
    reference_layout,
    triangle_areas,
)

CAP_AREA = 2 * np.pi * 0.4


@pytest.mark.parametrize("h", [0.12, 0.0768])
def test_disk_mesh_counts_and_weights(h):
    m = disk_mesh(17 / 9, h)
    lo, hi = {0.12: (240, 340), 0.0768: (620, 830)}[h]
    assert lo <= len(m) <= hi
    assert np.all(m.weights > 0)
    assert m.weights.sum() == pytest.approx(np.pi * (17 / 9) ** 2, rel=1e-12)
    assert m.kind == "disk" and m.lifted is None


def test_small_disk():
    m = disk_mesh(1.0, 0.9)
    assert m.weights.sum() == pytest.approx(np.pi, rel=0.005)
    assert len(m) >= 3


@pytest.mark.parametrize("h,tol", [(0.3, 1e-4), (0.12, 1e-6), (0.05, 1e-8)])
def test_cap_weights_sum_to_cap_area(h, tol):
    m = cap_mesh(0.8, h)
    assert np.all(m.weights > 0)
    assert m.weights.sum() == pytest.approx(CAP_AREA, rel=0.005)
    # Lumping with high-order quadrature does much better than the bound.
    assert m.weights.sum() == pytest.approx(CAP_AREA, rel=tol)
    np.testing.assert_allclose(np.linalg.norm(m.lifted, axis=1), 1.0, atol=1e-12)
    assert np.all(m.lifted[:, 2] < 0)


def test_cap_counts():
    assert 240 <= len(cap_mesh(0.8, 0.12)) <= 340
    assert 1500 <= len(cap_mesh(0.8, 0.049152)) <= 2200


def test_cap_has_no_pole_sample():
    m = cap_mesh(0.8, 0.12)
    assert np.linalg.norm(m.samples, axis=1).min() > 0.01


def test_tiny_cap_weights_are_planar_areas():
    m = cap_mesh(0.05, 0.9)
    planar = m.weights * np.abs(m.lifted[:, 2])
    assert m.weights.sum() == pytest.approx(np.pi * 0.05**2, rel=2e-3)
    # |mz| varies by about 1e-3 over such a small cap.
    assert planar.sum() == pytest.approx(np.pi * 0.05**2, rel=2e-3)


@pytest.mark.parametrize("h", [0.2, 0.12, 0.08])
def test_mean_edge_length_and_coverage(h):
    for m in (disk_mesh(17 / 9, h), cap_mesh(0.8, h)):
        assert m.mean_edge_length() == pytest.approx(h, rel=0.2)
        assert len(np.unique(m.triangles)) == len(m)
        # Triangles tile the inscribed polygon: their area plus the segments is the disk.
        assert triangle_areas(m.samples, m.triangles).sum() < np.pi * m.radius**2
        assert is_delaunay(m)


def test_estimate_point_count():
    assert estimate_point_count(0.12) == 284
    assert estimate_point_count(0.24) == pytest.approx(estimate_point_count(0.12) / 4, abs=1)
    assert estimate_point_count(0.12, area=2 * np.pi) == 568
    with pytest.raises(ValueError):
        estimate_point_count(0.0)


def test_reference_layout_starts_ring_at_angle_zero():
    pts = reference_layout(0.12)
    assert np.allclose(pts[0], 0.0)
    on_ring = np.isclose(np.linalg.norm(pts, axis=1), 1.0)
    assert np.allclose(pts[on_ring][0], [1.0, 0.0])


def test_pick_anchor():
    m = cap_mesh(0.8, 0.12)
    k, moved = pick_anchor(m, (0.8, 0.0, -0.6))
    np.testing.assert_allclose(moved.lifted[0], [0.8, 0.0, -0.6], atol=1e-12)
    np.testing.assert_allclose(m.lifted[k], moved.lifted[0])
    assert moved.weights.sum() == pytest.approx(m.weights.sum(), rel=1e-14)
    # The swap keeps every triangle geometrically identical.
    np.testing.assert_allclose(np.sort(triangle_areas(moved.samples, moved.triangles)),
                               np.sort(triangle_areas(m.samples, m.triangles)))
    j = 17
    k2, _ = pick_anchor(m, m.lifted[j])
    assert k2 == j
    d = disk_mesh(1.0, 0.2)
    assert nearest_sample(d, np.zeros(2)) == 0


def test_argument_checks():
    with pytest.raises(ValueError):
        disk_mesh(1.0, 1.5)
    with pytest.raises(ValueError):
        cap_mesh(1.2, 0.1)


def test_integrate_is_exact_for_polynomials_and_curved_boundary():
    m = disk_mesh(2.0, 0.2)
    assert integrate(m, lambda q: np.ones(len(q))) == pytest.approx(4 * np.pi, rel=1e-12)
    assert integrate(m, lambda q: q[:, 0] ** 2) == pytest.approx(np.pi * 16 / 4, rel=1e-10)


def test_integrate_on_cap(dataset):
    m = cap_mesh(0.8, 0.1)
    area = integrate_on_aperture(m, lambda d: np.ones(len(d)))
    assert area == pytest.approx(CAP_AREA, rel=1e-7)
    e = integrate_on_aperture(m, dataset.I)
    assert e == pytest.approx(dataset.input_energy_exact(), rel=1e-6)
