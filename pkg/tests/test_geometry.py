import numpy as np
import pytest

from contact_pinn.errors import ConfigurationError
from contact_pinn.geometry import (Arc, Line, QuadratureCloud, RefineBands,
                                   boundary_samples, export_cloud_csv,
                                   gauss_disc, gauss_half_disc,
                                   gauss_rectangle, gauss_ring_segment,
                                   min_distance_to_boundary)


def integrate(cloud, fn):
    return float(np.sum(fn(cloud.points) * cloud.weights))


# -- rectangle ---------------------------------------------------------------

def test_rectangle_unit_square_area():
    cloud = gauss_rectangle((0, 1), (0, 1), 4, 4)
    assert cloud.area == pytest.approx(1.0, abs=1e-14)


def test_rectangle_polynomial_exactness():
    cloud = gauss_rectangle((0, 1), (0, 1), 4, 4)
    val = integrate(cloud, lambda p: p[:, 0] ** 2 * p[:, 1] ** 2)
    assert val == pytest.approx(1.0 / 9.0, abs=1e-14)
    # degree 2n-1 = 7 monomial is still exact
    val = integrate(cloud, lambda p: p[:, 0] ** 7 * p[:, 1] ** 5)
    assert val == pytest.approx((1.0 / 8.0) * (1.0 / 6.0), rel=1e-12)


def test_rectangle_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        gauss_rectangle((0, 1), (0, 1), 0, 4)
    with pytest.raises(ConfigurationError):
        gauss_rectangle((1, 1), (0, 1), 2, 2)


# -- half disc ----------------------------------------------------------------

def test_half_disc_area():
    cloud = gauss_half_disc(1.0, 12, 24)
    assert cloud.area == pytest.approx(np.pi / 2.0, abs=1e-10)


def test_half_disc_first_moment():
    cloud = gauss_half_disc(1.0, 16, 32)
    assert integrate(cloud, lambda p: p[:, 1]) == pytest.approx(-2.0 / 3.0,
                                                               abs=1e-10)


def test_half_disc_center_and_upper():
    cloud = gauss_half_disc(0.5, 10, 20, center=(1.0, 3.0), upper=True)
    assert cloud.area == pytest.approx(np.pi * 0.25 / 2.0, abs=1e-12)
    assert np.all(cloud.points[:, 1] >= 3.0)
    r = np.linalg.norm(cloud.points - [1.0, 3.0], axis=1)
    assert np.all(r <= 0.5)


def test_half_disc_refinement_density_and_area():
    base = gauss_half_disc(1.0, 10, 20)
    refined = gauss_half_disc(1.0, 10, 20, refine=RefineBands())
    assert refined.area == pytest.approx(np.pi / 2.0, abs=1e-10)
    assert len(refined) > len(base)

    def nn_spacing(cloud, mask):
        pts = cloud.points[mask]
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        return d.min(axis=1)

    near_pole = lambda c: (np.abs(c.points[:, 0]) < 0.15) & (c.points[:, 1] < -0.9)
    refined_min = nn_spacing(refined, near_pole(refined)).min()
    base_spacing = nn_spacing(base, near_pole(base)).mean()
    assert refined_min < 0.2 * base_spacing


# -- ring segment ----------------------------------------------------------------

def test_full_ring_area():
    cloud = gauss_ring_segment(0.3, 0.35, 0.0, 2.0 * np.pi, 4, 64)
    assert cloud.area == pytest.approx(np.pi * (0.35 ** 2 - 0.3 ** 2), rel=1e-12)


def test_half_ring_area():
    cloud = gauss_ring_segment(0.3, 0.35, 0.0, np.pi, 4, 32)
    assert cloud.area == pytest.approx(np.pi * (0.35 ** 2 - 0.3 ** 2) / 2.0,
                                       rel=1e-12)


def test_ring_area_independent_of_resolution():
    vals = [gauss_ring_segment(0.4, 0.5, 0.3, 2.1, nr, nt).area
            for nr, nt in [(2, 2), (3, 7), (8, 5), (20, 40)]]
    assert np.ptp(vals) < 1e-12 * vals[0]


def test_ring_rejects_bad_radii():
    with pytest.raises(ConfigurationError):
        gauss_ring_segment(0.5, 0.3, 0.0, 1.0, 2, 2)
    with pytest.raises(ConfigurationError):
        gauss_ring_segment(0.0, 0.3, 0.0, 1.0, 2, 2)


def test_disc_area():
    cloud = gauss_disc(0.5, 8, 16, center=(0.0, 0.5))
    assert cloud.area == pytest.approx(np.pi * 0.25, abs=1e-10)


# -- boundary sampling --------------------------------------------------------------

def test_line_samples_exact_division():
    surf = boundary_samples(Line((0, 0), (1, 0), outward=(0, 1)), 0.1)
    assert len(surf) == 10
    assert surf.segment_length.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(surf.outward_normal, [0.0, 1.0])


def test_line_samples_adjusted_last_segment():
    surf = boundary_samples(Line((0, 0), (1, 0), outward=(0, 1)), 0.3)
    assert len(surf) == 4
    assert surf.segment_length[:-1] == pytest.approx(0.3)
    assert surf.segment_length.sum() == pytest.approx(1.0, abs=1e-12)


def test_arc_samples_half_circle():
    surf = boundary_samples(Arc((0, 0), 1.0, 0.0, np.pi), np.pi / 100.0)
    assert len(surf) == 100
    assert surf.segment_length.sum() == pytest.approx(np.pi, abs=1e-12)
    # normals radial
    radial = surf.points / np.linalg.norm(surf.points, axis=1, keepdims=True)
    assert np.allclose(surf.outward_normal, radial, atol=1e-12)


def test_length_preserved_under_respacing(rng):
    arc = Arc((2.0, -1.0), 0.7, -0.3, 2.4)
    for spacing in (0.01, 0.037, 0.2):
        surf = boundary_samples(arc, spacing)
        assert surf.segment_length.sum() == pytest.approx(arc.length(),
                                                          abs=1e-12)


def test_normals_point_out_of_body():
    # lower arc of a disc centered at origin: outward means away from centroid
    surf = boundary_samples(Arc((0, 0), 1.0, -2.0, -1.0), 0.05)
    centroid = np.zeros(2)
    s = np.sum((surf.points - centroid) * surf.outward_normal, axis=1)
    assert np.all(s > 0.0)
    # inner surface of a ring: orientation -1 flips the normal inward
    inner = boundary_samples(Arc((0, 0), 0.3, 0.0, np.pi, orientation=-1), 0.05)
    s = np.sum(inner.points * inner.outward_normal, axis=1)
    assert np.all(s < 0.0)


def test_spacing_larger_than_curve_rejected():
    with pytest.raises(ConfigurationError):
        boundary_samples(Line((0, 0), (0.1, 0), outward=(0, 1)), 0.5)


# -- distance utilities ----------------------------------------------------------------

def test_distance_zero_on_boundary():
    line = Line((0, 0), (4, 0), outward=(0, 1))
    assert min_distance_to_boundary(np.array([2.0, 0.0]), [line]) == 0.0


def test_distance_to_horizontal_line():
    line = Line((-10, 0), (10, 0), outward=(0, 1))
    assert min_distance_to_boundary(np.array([3.0, 2.0]), [line]) == \
        pytest.approx(2.0)


def test_distance_brute_force_oracle(rng):
    curves = [Line((0, 0), (1, 0), outward=(0, 1)),
              Arc((2.0, 1.0), 0.5, 0.0, 1.5 * np.pi)]
    dense = []
    t = np.linspace(0, 1, 20001)
    dense.append(np.stack([t, np.zeros_like(t)], axis=1))
    th = np.linspace(0, 1.5 * np.pi, 30001)
    dense.append(np.stack([2.0 + 0.5 * np.cos(th), 1.0 + 0.5 * np.sin(th)],
                          axis=1))
    dense = np.concatenate(dense)
    for _ in range(25):
        x = rng.uniform(-1, 3, size=2)
        exact = min_distance_to_boundary(x, curves)
        brute = np.min(np.linalg.norm(dense - x, axis=1))
        assert exact == pytest.approx(brute, abs=1e-8)


def test_empty_boundary_rejected():
    with pytest.raises(ConfigurationError):
        min_distance_to_boundary(np.zeros(2), [])


# -- export -------------------------------------------------------------------------------

def test_cloud_csv_export(tmp_path):
    cloud = gauss_rectangle((0, 1), (0, 2), 2, 2, body_id=3)
    path = tmp_path / "cloud.csv"
    export_cloud_csv(path, cloud)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,y,w,body_id"
    assert len(lines) == 1 + len(cloud)
    x, y, w, b = lines[1].split(",")
    assert int(b) == 3
    assert float(w) > 0


def test_positive_weights_enforced():
    with pytest.raises(ConfigurationError):
        QuadratureCloud(np.zeros((1, 2)), np.array([-1.0]))
