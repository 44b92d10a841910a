import numpy as np
import pytest

from contact_pinn.contact import (PP, PS, ContactSpec, RigidLine,
                                  contact_energy_pp, contact_energy_ps,
                                  contact_force_density, contact_pressure,
                                  export_pressure_csv, pairwise_distances,
                                  ps_gaps)
from contact_pinn.errors import ConfigurationError, EvaluationError
from contact_pinn.geometry import ContactSurface


def point_surface(points, lengths=None, normals=None, body_id=0):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    lengths = np.ones(n) if lengths is None else np.asarray(lengths, float)
    if normals is None:
        normals = np.tile([0.0, -1.0], (n, 1))
    return ContactSurface(points, lengths, np.asarray(normals, float),
                          body_id=body_id, spacing=float(lengths[0]))


def brute_force_pp(p1, p2, l1, l2, spec):
    total = 0.0
    for i in range(len(p1)):
        for j in range(len(p2)):
            r = np.hypot(*(p1[i] - p2[j]))
            total += spec.beta1 * spec.beta2 * spec.phi0 * \
                np.exp(-r / spec.r0) * l1[i] * l2[j]
    return total


# -- distance matrix -----------------------------------------------------------

def test_pairwise_single_pair():
    dm = pairwise_distances([[0.0, 0.0]], [[3.0, 4.0]])
    assert dm.r[0, 0] == pytest.approx(5.0)
    assert dm.du[0, 0] == pytest.approx(-3.0)
    assert dm.dv[0, 0] == pytest.approx(-4.0)


def test_pairwise_coincident_point():
    dm = pairwise_distances([[1.0, 2.0]], [[1.0, 2.0]])
    assert dm.r[0, 0] == 0.0


def test_pairwise_matches_brute_force(rng):
    P1 = rng.normal(size=(7, 2))
    P2 = rng.normal(size=(5, 2))
    dm = pairwise_distances(P1, P2)
    for i in range(7):
        for j in range(5):
            assert dm.r[i, j] == pytest.approx(
                np.linalg.norm(P1[i] - P2[j]), abs=1e-14)
    assert np.max(np.abs(dm.r ** 2 - (dm.du ** 2 + dm.dv ** 2))) < 1e-12


# -- PP energy ------------------------------------------------------------------

def test_pp_energy_single_pair_at_effective_radius():
    spec = ContactSpec(phi0=2.0, r0=0.5, model=PP)
    s1 = point_surface([[0.0, 0.0]])
    s2 = point_surface([[0.5, 0.0]])
    e = contact_energy_pp(s1, s2, np.zeros((1, 2)), np.zeros((1, 2)), spec)
    assert e == pytest.approx(2.0 / np.e)


def test_pp_energy_decays_with_separation():
    spec = ContactSpec(phi0=1.0, r0=0.01, model=PP)
    s1 = point_surface([[0.0, 0.0], [0.1, 0.0]], lengths=[0.1, 0.1])
    s2 = point_surface([[0.0, 0.5], [0.1, 0.5]], lengths=[0.1, 0.1])
    e = contact_energy_pp(s1, s2, np.zeros((2, 2)), np.zeros((2, 2)), spec)
    assert e < 1.0 * (0.2 * 0.2) * np.exp(-50.0)


def test_pp_energy_matches_double_loop(rng):
    spec = ContactSpec(phi0=3.0, r0=0.3, model=PP, beta1=0.7, beta2=1.3)
    p1 = rng.normal(size=(3, 2))
    p2 = rng.normal(size=(2, 2)) + [0.5, 0.0]
    l1 = rng.uniform(0.1, 0.5, 3)
    l2 = rng.uniform(0.1, 0.5, 2)
    s1 = point_surface(p1, l1)
    s2 = point_surface(p2, l2)
    u1 = rng.normal(size=(3, 2)) * 0.1
    u2 = rng.normal(size=(2, 2)) * 0.1
    e = contact_energy_pp(s1, s2, u1, u2, spec)
    assert e == pytest.approx(brute_force_pp(p1 + u1, p2 + u2, l1, l2, spec),
                              rel=1e-13)


def test_pp_energy_translation_invariant(rng):
    spec = ContactSpec(phi0=1.0, r0=0.2, model=PP)
    p1 = rng.normal(size=(4, 2))
    p2 = rng.normal(size=(3, 2))
    s1, s2 = point_surface(p1), point_surface(p2)
    shift = np.array([1.7, -2.2])
    e0 = contact_energy_pp(s1, s2, np.zeros((4, 2)), np.zeros((3, 2)), spec)
    e1 = contact_energy_pp(s1, s2, np.tile(shift, (4, 1)),
                           np.tile(shift, (3, 1)), spec)
    assert e1 == pytest.approx(e0, abs=1e-12 * max(1.0, abs(e0)))


def test_pp_energy_monotone_in_gap():
    spec = ContactSpec(phi0=1.0, r0=0.1, model=PP)
    s1 = point_surface([[0.0, 0.0], [0.1, 0.0]], lengths=[0.1, 0.1])
    s2 = point_surface([[0.0, 0.2], [0.1, 0.2]], lengths=[0.1, 0.1])
    gaps = np.linspace(0.0, 1.0, 11)
    energies = [contact_energy_pp(
        s1, s2, np.zeros((2, 2)),
        np.tile([0.0, g], (2, 1)), spec) for g in gaps]
    assert np.all(np.diff(energies) < 0.0)


def test_pp_energy_rejects_nonfinite_displacement():
    spec = ContactSpec(phi0=1.0, r0=0.1, model=PP)
    s1 = point_surface([[0.0, 0.0]])
    s2 = point_surface([[1.0, 0.0]])
    with pytest.raises(EvaluationError):
        contact_energy_pp(s1, s2, np.array([[np.nan, 0.0]]),
                          np.zeros((1, 2)), spec)


def test_pp_requires_matching_model():
    spec = ContactSpec(phi0=1.0, r0=0.1, model=PS,
                       line=RigidLine((0, 0), (0, 1)))
    s = point_surface([[0.0, 1.0]])
    with pytest.raises(ConfigurationError):
        contact_energy_pp(s, s, np.zeros((1, 2)), np.zeros((1, 2)), spec)


# -- PS energy ---------------------------------------------------------------------

def plane_spec(phi0=1.0, r0=0.1, beta1=1.0):
    return ContactSpec(phi0=phi0, r0=r0, model=PS, beta1=beta1,
                       line=RigidLine((0.0, 0.0), (0.0, 1.0)))


def test_ps_energy_point_at_effective_radius():
    spec = plane_spec(phi0=4.0, r0=0.25)
    s = point_surface([[0.3, 0.25]])
    assert contact_energy_ps(s, np.zeros((1, 2)), spec) == \
        pytest.approx(4.0 / np.e)


def test_ps_energy_point_on_plane():
    spec = plane_spec(phi0=2.0, r0=0.1)
    s = point_surface([[0.0, 0.0]], lengths=[0.37])
    assert contact_energy_ps(s, np.zeros((1, 2)), spec) == \
        pytest.approx(2.0 * 0.37)


def test_ps_energy_grows_under_penetration():
    spec = plane_spec(phi0=1.0, r0=0.1)
    s = point_surface([[0.0, 0.1]])
    e_above = contact_energy_ps(s, np.zeros((1, 2)), spec)
    e_below = contact_energy_ps(s, np.array([[0.0, -0.3]]), spec)
    assert e_below > e_above


def test_pp_against_dense_line_reaches_its_limit(rng):
    """Refinement study: PP vs a sampled line is converged (2%) at
    counter-surface spacing <= r0/5."""
    r0 = 0.05
    pts = np.stack([rng.uniform(-0.2, 0.2, 6),
                    rng.uniform(0.3 * r0, 3.0 * r0, 6)], axis=1)
    lengths = np.full(6, 0.01)
    surf = point_surface(pts, lengths)
    pp = ContactSpec(phi0=1.0, r0=r0, model=PP)

    def pp_vs_line(spacing):
        xs = np.arange(-3.0, 3.0, spacing) + spacing / 2.0
        line_pts = np.stack([xs, np.zeros_like(xs)], axis=1)
        line = point_surface(line_pts, np.full(len(xs), spacing))
        return contact_energy_pp(surf, line, np.zeros((6, 2)),
                                 np.zeros((len(xs), 2)), pp)

    coarse = pp_vs_line(r0 / 5.0)
    limit = pp_vs_line(r0 / 100.0)
    assert coarse == pytest.approx(limit, rel=0.02)

    # and the PS closed form orders the energies the same way in the gap
    ps = plane_spec(phi0=1.0, r0=r0)
    e_ps = contact_energy_ps(surf, np.zeros((6, 2)), ps)
    assert e_ps > 0.0


# -- forces -------------------------------------------------------------------------

def test_force_closed_form_at_effective_radius():
    spec = ContactSpec(phi0=2.0, r0=0.5, model=PP)
    s1 = point_surface([[0.0, 0.0]])
    s2 = point_surface([[0.5, 0.0]])
    f1, f2 = contact_force_density(s1, s2, np.zeros((1, 2)), np.zeros((1, 2)),
                                   spec)
    mag = spec.phi0 / spec.r0 * np.exp(-1.0)
    assert f1[0] == pytest.approx([-mag, 0.0])
    assert f2[0] == pytest.approx([mag, 0.0])


def test_newtons_third_law(rng):
    spec = ContactSpec(phi0=5.0, r0=0.2, model=PP, beta1=0.8, beta2=1.1)
    s1 = point_surface(rng.normal(size=(6, 2)), rng.uniform(0.05, 0.2, 6))
    s2 = point_surface(rng.normal(size=(4, 2)), rng.uniform(0.05, 0.2, 4))
    f1, f2 = contact_force_density(s1, s2, np.zeros((6, 2)), np.zeros((4, 2)),
                                   spec)
    assert np.allclose(f1.sum(axis=0), -f2.sum(axis=0), atol=1e-12)


def test_pp_force_matches_energy_gradient(rng):
    spec = ContactSpec(phi0=2.0, r0=0.15, model=PP)
    p1 = rng.normal(size=(3, 2)) * 0.2
    p2 = rng.normal(size=(4, 2)) * 0.2 + [0.0, 0.3]
    s1 = point_surface(p1, rng.uniform(0.05, 0.2, 3))
    s2 = point_surface(p2, rng.uniform(0.05, 0.2, 4))
    u1 = np.zeros((3, 2))
    u2 = np.zeros((4, 2))
    f1, f2 = contact_force_density(s1, s2, u1, u2, spec)
    h = 1e-7
    for (surf_idx, forces, u) in ((0, f1, u1), (1, f2, u2)):
        for i in range(len(forces)):
            for c in range(2):
                up, um = u.copy(), u.copy()
                up[i, c] += h
                um[i, c] -= h
                if surf_idx == 0:
                    ep = contact_energy_pp(s1, s2, up, u2, spec)
                    em = contact_energy_pp(s1, s2, um, u2, spec)
                else:
                    ep = contact_energy_pp(s1, s2, u1, up, spec)
                    em = contact_energy_pp(s1, s2, u1, um, spec)
                fd = -(ep - em) / (2 * h)
                assert forces[i, c] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_ps_force_matches_energy_gradient(rng):
    spec = plane_spec(phi0=3.0, r0=0.1)
    pts = np.stack([rng.uniform(-0.3, 0.3, 5),
                    rng.uniform(0.01, 0.3, 5)], axis=1)
    s = point_surface(pts, rng.uniform(0.05, 0.2, 5))
    u = np.zeros((5, 2))
    f, none = contact_force_density(s, None, u, None, spec)
    assert none is None
    h = 1e-7
    for i in range(5):
        for c in range(2):
            up, um = u.copy(), u.copy()
            up[i, c] += h
            um[i, c] -= h
            fd = -(contact_energy_ps(s, up, spec)
                   - contact_energy_ps(s, um, spec)) / (2 * h)
            assert f[i, c] == pytest.approx(fd, rel=1e-6, abs=1e-12)


def test_coincident_pair_gives_zero_force(caplog):
    spec = ContactSpec(phi0=1.0, r0=0.1, model=PP)
    s1 = point_surface([[0.0, 0.0]])
    s2 = point_surface([[0.0, 0.0]])
    with caplog.at_level("WARNING"):
        f1, f2 = contact_force_density(s1, s2, np.zeros((1, 2)),
                                       np.zeros((1, 2)), spec)
    assert np.all(f1 == 0.0) and np.all(f2 == 0.0)
    assert any("coincident" in r.message for r in caplog.records)


# -- pressure --------------------------------------------------------------------------

def test_zero_forces_zero_pressure():
    s = point_surface([[0.0, 0.0], [0.1, 0.0]], lengths=[0.1, 0.1])
    assert np.all(contact_pressure(s, np.zeros((2, 2))) == 0.0)


def test_uniform_normal_force_pressure():
    s = point_surface([[0.0, 0.0], [0.1, 0.0]], lengths=[0.2, 0.2],
                      normals=[[0.0, -1.0], [0.0, -1.0]])
    forces = np.tile([0.0, 0.5], (2, 1))  # pushing up on a bottom surface
    p = contact_pressure(s, forces)
    assert np.allclose(p, 0.5 / 0.2)
    assert np.all(p > 0.0)  # compression reported positive


def test_ps_gap_diagnostic():
    line = RigidLine((0.0, -1.0), (0.0, 1.0))
    s = point_surface([[0.2, -0.9], [0.0, -1.05]])
    gaps = ps_gaps(s, np.zeros((2, 2)), line)
    assert gaps[0] == pytest.approx(0.1)
    assert gaps[1] == pytest.approx(-0.05)  # penetration is negative


def test_pressure_csv_export(tmp_path):
    s = point_surface([[0.0, 0.0], [0.1, 0.0]], lengths=[0.1, 0.1],
                      body_id=1)
    forces = np.tile([0.0, 1.0], (2, 1))
    path = tmp_path / "pressure.csv"
    export_pressure_csv(path, [(s, forces)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "arc_coordinate,x,y,pressure,body_id"
    assert len(lines) == 3


def test_contact_spec_validation():
    with pytest.raises(ConfigurationError):
        ContactSpec(phi0=-1.0, r0=0.1)
    with pytest.raises(ConfigurationError):
        ContactSpec(phi0=1.0, r0=0.0)
    with pytest.raises(ConfigurationError):
        ContactSpec(phi0=1.0, r0=0.1, model=PS)  # missing line
    with pytest.raises(ConfigurationError):
        ContactSpec(phi0=1.0, r0=0.1, model="mortar")
