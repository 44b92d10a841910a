"""Built-in benchmark scenes, the line-contact oracle and field export.

Each scene ships with the reference parameters of its source experiment
as defaults, a ``desk`` preset sized so the full run finishes in minutes
on a CPU, a heavier ``paper`` preset with the original schedules, and
tiny ``gradcheck`` / ``smoke`` presets for verification.  Every value can
be overridden individually.

Scene geometry notes:

* hertz: half cylinder, flat side up, uniform pressure on top, rigid
  plane under the pole.  The plane is placed at the penalty standoff
  ``r0 * ln(phi0 / (r0 * p_ref))`` below the touching position: the free
  vertical mode then starts near force balance.  The standoff uses only
  scene constants, and the pressure profile is invariant under vertical
  translation of the pair, so this costs no generality.
* cantilever: horizontal beam clamped at x = 0, parabolic end load.
* ironing: half cylinder pressed into a soft slab and (paper preset)
  dragged sideways; both bodies deformable, PP contact.
* ring: half ring arch pressed onto a very soft slab until it inverts.
* two_rings: two rings in a rigid sink compressed by a rigid cap; ring
  to ring is PP, ring to sink/cap walls is PS.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field

import numpy as np

from .assembly import (Body, ContactPair, DrivenBc, RigidSurface, SceneState,
                       TractionLoad, WallContact, field_values,
                       field_with_gradients)
from .contact import (PP, PS, ContactSpec, RigidLine, contact_force_density,
                      contact_pressure)
from .errors import ConfigurationError
from .geometry import (Arc, Line, RefineBands, boundary_samples, gauss_disc,
                       gauss_half_disc, gauss_rectangle, gauss_ring_segment,
                       gauss_segment)
from .materials import (LINEAR_ELASTIC, NEO_HOOKEAN, MaterialSpec,
                        cauchy_stress, first_pk_stress, out_of_plane_stress,
                        von_mises)
from .network import BcComposition, init_params
from .train import LoadStep, TrainSchedule

SCENE_NAMES = ["hertz", "cantilever", "ironing", "ring", "two_rings"]
PRESETS = ("desk", "paper", "gradcheck", "smoke")


@dataclass
class SceneConfig:
    """Fully populated scene settings; every entry can be overridden."""

    name: str
    preset: str = "desk"
    seed: int = 0
    out_dir: str = "out"
    params: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


def _const2(vx, vy):
    return lambda pts: np.tile([vx, vy], (len(pts), 1))


def _gx(pts):
    return pts[:, 0]


def _dgx(pts):
    return np.tile([1.0, 0.0], (len(pts), 1))


def _gy(pts):
    return pts[:, 1]


def _dgy(pts):
    return np.tile([0.0, 1.0], (len(pts), 1))


def _gy_minus(c):
    return (lambda pts: pts[:, 1] - c), _dgy


_DEFAULTS = {
    "hertz": dict(
        E=200.0, nu=0.3, material=LINEAR_ELASTIC, radius=1.0, line_load=0.5,
        xi=1e-3, net_sizes=(2, 30, 30, 30, 1),
        contact_model="ps", phi0=1e4, r0=1e-4, spacing_floor=1e-4,
        psi_c=0.2, plane_margin=1.1, plane_spacing_floor=2.5e-5,
        window_mult=80, standoff=True, p_ref_width=0.2,
        n_r=18, n_theta=36,
        bands=((0.30, 0.18, 0.09), (0.70, 0.85, 0.93)),
        top_gauss_n=48,
        eta_schedule=((3000, 1e-3), (2000, 1e-4)),
        optimizer="adam", lr_guard=False,
    ),
    "cantilever": dict(
        length=1.0, height=0.25, E=1e4, nu=0.3, material=LINEAR_ELASTIC,
        load=10.0, xi=1.0, net_sizes=(2, 5, 5, 5, 1),
        n_x=24, n_y=8, tip_gauss_n=10,
        eta=1e-4, epochs=3000, optimizer="adam",
    ),
    "ironing": dict(
        cyl_radius=1.0, cyl_top_y=3.0, slab_x=(-2.0, 2.0), slab_height=2.0,
        E_cyl=300.0, E_slab=100.0, nu=0.3, material=NEO_HOOKEAN, xi=1.0,
        net_sizes=(2, 30, 30, 30, 1),
        phi0=1e2, r0=1e-2, spacing_floor=1e-2, kappa=1e4,
        psi_c=0.7, slab_contact_x=(-1.6, 1.6),
        v_target=-0.5, compression_steps=5,
        u_target=2.5, sliding_steps=0,
        sessions=3, epochs_per_session=600, eta=1e-4, optimizer="adam",
        relax_epochs=400,
        n_r=12, n_theta=24, slab_nx=26, slab_ny=12, ebc_spacing=0.05,
        lr_guard=False,
    ),
    "ring": dict(
        ring_center=(0.0, 1.2), r_out=0.5, thickness=0.1,
        slab_x=(-1.2, 1.2), slab_height=0.5,
        E_ring=100.0, E_slab=1.0, nu=0.3, material=NEO_HOOKEAN, xi=1.0,
        net_sizes=(2, 30, 30, 30, 1),
        phi0=1e5, r0=3e-3, spacing_floor=1e-2, kappa=1e6,
        v_target=-0.8, steps=8,
        sessions=2, epochs_per_session=700, eta=1e-4, optimizer="adam",
        relax_epochs=300,
        ring_nr=4, ring_ntheta=40, slab_nx=30, slab_ny=8, ebc_spacing=0.02,
        lr_guard=False,
    ),
    "two_rings": dict(
        r_in=0.3, thickness=0.05, centers=((0.35, 0.35), (0.9, 0.8)),
        sink_width=1.25, cap_y=1.15,
        E=100.0, nu=0.3, material=NEO_HOOKEAN, xi=1.0,
        net_sizes=(2, 30, 30, 30, 1),
        phi0_pp=1e-2, phi0_ps=1e1, r0=1e-3, spacing_floor=8e-3, kappa=0.0,
        v_target=-0.6, steps=12,
        sessions=2, epochs_per_session=400, eta=1e-4, optimizer="adam",
        relax_epochs=300, fine_tune=(2, 1500),
        ring_nr=3, ring_ntheta=48,
        lr_guard=False,
    ),
}

_PAPER_ADJUST = {
    "hertz": dict(n_r=28, n_theta=56, eta_schedule=((2000, 1e-4),),
                  spacing_floor=0.0, plane_spacing_floor=0.0),
    "cantilever": dict(epochs=20000),
    "ironing": dict(sessions=10, epochs_per_session=2000, eta=1e-5,
                    relax_epochs=2000, sliding_steps=25, slab_x=(-2.0, 4.0),
                    slab_contact_x=(-1.6, 4.0), n_r=16, n_theta=32,
                    slab_nx=48, slab_ny=16),
    "ring": dict(net_sizes=(2, 50, 50, 50, 1), r0=3e-4, spacing_floor=3e-4,
                 sessions=5, epochs_per_session=50000, eta=1e-5,
                 relax_epochs=2000, ring_nr=6, ring_ntheta=80,
                 slab_nx=48, slab_ny=12),
    "two_rings": dict(net_sizes=(2, 50, 50, 50, 1), spacing_floor=1e-3,
                      sessions=20, epochs_per_session=2000, eta=1e-5,
                      relax_epochs=2000, fine_tune=None,
                      ring_nr=5, ring_ntheta=96),
}

# Gradient checks verify the derivative chain, so the reduced configs scale
# xi / phi0 into well-conditioned ranges: fields stay small enough that
# det F > 0 everywhere, while the contact terms remain active.
_GRADCHECK_ADJUST = {
    "hertz": dict(net_sizes=(2, 8, 1), n_r=4, n_theta=8, bands=None,
                  r0=5e-2, spacing_floor=8e-2, psi_c=0.4, top_gauss_n=4,
                  plane_spacing_floor=8e-2, xi=0.3, phi0=10.0,
                  standoff=False),
    "cantilever": dict(net_sizes=(2, 8, 1), n_x=4, n_y=3, tip_gauss_n=3,
                       xi=0.3),
    "ironing": dict(net_sizes=(2, 6, 1), n_r=3, n_theta=6, slab_nx=4,
                    slab_ny=3, r0=8e-2, spacing_floor=0.3, psi_c=0.5,
                    ebc_spacing=0.4, kappa=10.0, xi=0.25, phi0=10.0),
    "ring": dict(net_sizes=(2, 6, 1), ring_nr=2, ring_ntheta=8, slab_nx=4,
                 slab_ny=2, r0=8e-2, spacing_floor=0.25, ebc_spacing=0.05,
                 kappa=10.0, xi=0.25, phi0=10.0),
    "two_rings": dict(net_sizes=(2, 6, 1), ring_nr=2, ring_ntheta=8,
                      r0=8e-2, spacing_floor=0.3, xi=0.25, phi0_pp=2.0,
                      phi0_ps=2.0),
}

_SMOKE_ADJUST = {
    "hertz": dict(net_sizes=(2, 10, 1), n_r=6, n_theta=12, bands=None,
                  r0=1e-3, spacing_floor=5e-3,
                  eta_schedule=((1, 1e-4),)),
    "cantilever": dict(net_sizes=(2, 10, 1), n_x=8, n_y=4, epochs=1),
    "ironing": dict(net_sizes=(2, 10, 1), n_r=5, n_theta=10, slab_nx=8,
                    slab_ny=4, spacing_floor=5e-2, sessions=1,
                    epochs_per_session=1, relax_epochs=1,
                    compression_steps=1),
    "ring": dict(net_sizes=(2, 10, 1), ring_nr=2, ring_ntheta=14,
                 slab_nx=8, slab_ny=3, spacing_floor=5e-2, sessions=1,
                 epochs_per_session=1, relax_epochs=1, steps=1),
    "two_rings": dict(net_sizes=(2, 10, 1), ring_nr=2, ring_ntheta=16,
                      spacing_floor=4e-2, sessions=1, epochs_per_session=1,
                      relax_epochs=1, steps=1, fine_tune=None),
}


def build_scene(name, overrides=None, preset="desk", seed=0, out_dir="out"):
    """Scene settings with reference defaults; every field overridable."""
    if name not in _DEFAULTS:
        raise ConfigurationError(
            f"unknown scene {name!r}; available: {', '.join(SCENE_NAMES)}")
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}")
    params = copy.deepcopy(_DEFAULTS[name])
    adjust = {"desk": {}, "paper": _PAPER_ADJUST, "gradcheck":
              _GRADCHECK_ADJUST, "smoke": _SMOKE_ADJUST}[preset] if preset \
        != "desk" else {}
    params.update(copy.deepcopy(adjust.get(name, {})) if adjust else {})
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigurationError(
                f"unknown override {key!r} for scene {name!r}")
        params[key] = value
    config = SceneConfig(name=name, preset=preset, seed=int(seed),
                         out_dir=out_dir, params=params)
    _validate(config)
    return config


def _validate(config):
    p = config.params
    for key in ("E", "E_cyl", "E_slab", "E_ring", "radius", "r_out", "r_in",
                "thickness", "xi", "phi0", "phi0_pp", "phi0_ps", "r0",
                "line_load", "height", "length"):
        if key in p and p[key] is not None and p[key] <= 0:
            raise ConfigurationError(f"{key} must be positive, got {p[key]}")
    if "nu" in p and not -1.0 < p["nu"] < 0.5:
        raise ConfigurationError("nu must lie in (-1, 0.5)")
    if "net_sizes" in p and (len(p["net_sizes"]) < 2 or p["net_sizes"][0] != 2):
        raise ConfigurationError("net_sizes must start with 2 inputs")


def list_scenes():
    return list(SCENE_NAMES)


# -- instantiation -------------------------------------------------------------

@dataclass
class RunSetup:
    """Materialized scene: state, schedule and scene-specific probes."""

    config: SceneConfig
    state: SceneState
    schedule: TrainSchedule
    aux: dict = field(default_factory=dict)


def _spacing(p):
    return max(p["r0"], p.get("spacing_floor", 0.0) or 0.0)


def _nets(sizes, seed, count=2):
    return tuple(init_params(sizes, seed + 1000 * k) for k in range(count))


def instantiate(config):
    builders = {"hertz": _make_hertz, "cantilever": _make_cantilever,
                "ironing": _make_ironing, "ring": _make_ring,
                "two_rings": _make_two_rings}
    return builders[config.name](config)


def _make_hertz(config):
    p = config.params
    R = p["radius"]
    bands = RefineBands(*p["bands"]) if p["bands"] else None
    cloud = gauss_half_disc(R, p["n_r"], p["n_theta"], refine=bands)
    xi = p["xi"]
    comp_u = BcComposition(mode="hard", scale=xi, g=_gx, grad_g=_dgx)
    comp_v = BcComposition(mode="free", scale=xi)
    q = p["line_load"] / (2.0 * R)
    top = gauss_segment(Line((-R, 0.0), (R, 0.0), outward=(0, 1)),
                        p["top_gauss_n"])
    arc = Arc((0.0, 0.0), R, -np.pi / 2 - p["psi_c"], -np.pi / 2 + p["psi_c"])
    surf = boundary_samples(arc, _spacing(p), body_id=0)
    nets = _nets(p["net_sizes"], config.seed)
    body = Body(name="cyl", cloud=cloud,
                material=MaterialSpec(p["material"], E=p["E"], nu=p["nu"]),
                nets=nets, comps=(comp_u, comp_v),
                tractions=[TractionLoad(top, (0.0, -q))],
                surfaces={"arc": surf})

    p_ref = p["line_load"] / (p["p_ref_width"] * R)
    d0 = p["r0"] * np.log(p["phi0"] / (p["r0"] * p_ref)) if p["standoff"] \
        else 0.0
    y_plane = -R - d0
    pairs, walls = [], []
    if p["contact_model"] == PS:
        spec = ContactSpec(phi0=p["phi0"], r0=p["r0"], model=PS,
                           line=RigidLine((0.0, y_plane), (0.0, 1.0)))
        walls.append(WallContact(body="cyl", surface="arc", spec=spec,
                                 name="plane"))
    else:
        spec = ContactSpec(phi0=p["phi0"], r0=p["r0"], model=PP)
        ps_ = max(p["r0"], p["plane_spacing_floor"] or 0.0)
        xmax = np.sin(p["psi_c"]) * R * p["plane_margin"]
        plane = boundary_samples(Line((-xmax, y_plane), (xmax, y_plane),
                                      outward=(0, 1)), ps_, body_id=-1)
        window = int(np.ceil(p["window_mult"] * p["r0"] / ps_)) + 2
        pairs.append(ContactPair(body1="cyl", surface1="arc",
                                 side2=RigidSurface(plane), spec=spec,
                                 window=window if window < len(plane)
                                 else None))
    state = SceneState(bodies={"cyl": body}, pairs=pairs, walls=walls,
                       kappa=0.0, name="hertz", seed=config.seed)
    schedule = TrainSchedule(relax_epochs=0, steps=[], eta=p["eta_schedule"][0][1],
                             optimizer=p["optimizer"], lr_guard=p["lr_guard"])
    aux = dict(surface=surf, spec=spec, y_plane=y_plane,
               eta_schedule=tuple(p["eta_schedule"]),
               analytic=dict(E=p["E"], nu=p["nu"], R=R,
                             P_line=p["line_load"]))
    return RunSetup(config, state, schedule, aux)


def _make_cantilever(config):
    p = config.params
    L, H = p["length"], p["height"]
    cloud = gauss_rectangle((0.0, L), (-H / 2, H / 2), p["n_x"], p["n_y"])
    xi = p["xi"]
    comps = (BcComposition(mode="hard", scale=xi, g=_gx, grad_g=_dgx),
             BcComposition(mode="hard", scale=xi, g=_gx, grad_g=_dgx))
    tip = gauss_segment(Line((L, -H / 2), (L, H / 2), outward=(1, 0)),
                        p["tip_gauss_n"])
    total = p["load"]

    def parabolic(pts):
        s = pts[:, 1]
        q = 6.0 * total / H ** 3 * (H * H / 4.0 - s * s)
        return np.stack([np.zeros_like(q), -q], axis=1)

    body = Body(name="beam", cloud=cloud,
                material=MaterialSpec(p["material"], E=p["E"], nu=p["nu"]),
                nets=_nets(p["net_sizes"], config.seed), comps=comps,
                tractions=[TractionLoad(tip, parabolic)])
    state = SceneState(bodies={"beam": body}, name="cantilever",
                       seed=config.seed)
    schedule = TrainSchedule(
        relax_epochs=0,
        steps=[LoadStep(targets={}, sessions=1,
                        epochs_per_session=p["epochs"])],
        eta=p["eta"], optimizer=p["optimizer"])
    aux = dict(tip=tip, probes=cloud.points)
    return RunSetup(config, state, schedule, aux)


def _make_ironing(config):
    p = config.params
    R = p["cyl_radius"]
    top_y = p["cyl_top_y"]
    center = (0.0, top_y)
    pole_y = top_y - R
    sx = p["slab_x"]
    slab_top = p["slab_height"]
    if abs(pole_y - slab_top) > 1e-12:
        raise ConfigurationError("cylinder pole must touch the slab top")

    bands = RefineBands((0.9, 0.7), (0.6, 0.8), factor=2.0) \
        if config.preset in ("desk", "paper") else None
    cyl_cloud = gauss_half_disc(R, p["n_r"], p["n_theta"], refine=bands,
                                center=center)
    slab_cloud = gauss_rectangle(sx, (0.0, slab_top), p["slab_nx"],
                                 p["slab_ny"], body_id=1)
    xi = p["xi"]
    g_cyl, dg_cyl = _gy_minus(top_y)
    hard_cyl = (BcComposition(mode="hard", scale=xi, g=g_cyl, grad_g=dg_cyl),
                BcComposition(mode="hard", scale=xi, g=g_cyl, grad_g=dg_cyl))
    soft_cyl = (BcComposition(mode="soft", scale=xi),
                BcComposition(mode="soft", scale=xi))
    slab_comps = (BcComposition(mode="hard", scale=xi, g=_gy, grad_g=_dgy),
                  BcComposition(mode="hard", scale=xi, g=_gy, grad_g=_dgy))

    spacing = _spacing(p)
    arc = Arc(center, R, -np.pi / 2 - p["psi_c"], -np.pi / 2 + p["psi_c"])
    cyl_surf = boundary_samples(arc, spacing, body_id=0)
    scx = p["slab_contact_x"]
    slab_surf = boundary_samples(Line((scx[0], slab_top), (scx[1], slab_top),
                                      outward=(0, 1)), spacing, body_id=1)
    n_ebc = max(5, int(2 * R / p["ebc_spacing"]))
    ebc_pts = np.stack([np.linspace(-R, R, n_ebc), np.full(n_ebc, top_y)],
                       axis=1)

    mat_c = MaterialSpec(p["material"], E=p["E_cyl"], nu=p["nu"])
    mat_s = MaterialSpec(p["material"], E=p["E_slab"], nu=p["nu"])
    cyl = Body(name="cyl", cloud=cyl_cloud, material=mat_c,
               nets=_nets(p["net_sizes"], config.seed), comps=soft_cyl,
               surfaces={"arc": cyl_surf},
               driven=DrivenBc(points=ebc_pts, soft_comps=soft_cyl,
                               hard_comps=hard_cyl))
    slab = Body(name="slab", cloud=slab_cloud, material=mat_s,
                nets=_nets(p["net_sizes"], config.seed + 5000),
                comps=slab_comps, surfaces={"top": slab_surf})
    pair = ContactPair(body1="cyl", surface1="arc", side2=("slab", "top"),
                       spec=ContactSpec(phi0=p["phi0"], r0=p["r0"], model=PP))
    state = SceneState(bodies={"cyl": cyl, "slab": slab}, pairs=[pair],
                       walls=[], kappa=p["kappa"], name="ironing",
                       seed=config.seed)

    steps = []
    n_c = p["compression_steps"]
    for k in range(1, n_c + 1):
        steps.append(LoadStep(targets={"cyl": (0.0, p["v_target"] * k / n_c)},
                              sessions=p["sessions"],
                              epochs_per_session=p["epochs_per_session"]))
    n_s = p["sliding_steps"]
    for k in range(1, n_s + 1):
        steps.append(LoadStep(
            targets={"cyl": (p["u_target"] * k / n_s, p["v_target"])},
            sessions=p["sessions"],
            epochs_per_session=p["epochs_per_session"]))
    schedule = TrainSchedule(relax_epochs=p["relax_epochs"], steps=steps,
                             eta=p["eta"], kappa=p["kappa"],
                             optimizer=p["optimizer"],
                             lr_guard=p["lr_guard"])
    rf_top = gauss_segment(Line((-R, top_y), (R, top_y), outward=(0, 1)), 40)
    rf_bottom = gauss_segment(Line((sx[0], 0.0), (sx[1], 0.0),
                                   outward=(0, -1)), 40)
    aux = dict(cyl_surf=cyl_surf, slab_surf=slab_surf, pair=pair,
               rf_top=rf_top, rf_bottom=rf_bottom)
    return RunSetup(config, state, schedule, aux)


def _make_ring(config):
    p = config.params
    cx, cy = p["ring_center"]
    r_out = p["r_out"]
    r_in = r_out - p["thickness"]
    ring_cloud = gauss_ring_segment(r_in, r_out, np.pi, 2.0 * np.pi,
                                    p["ring_nr"], p["ring_ntheta"],
                                    center=(cx, cy))
    sx = p["slab_x"]
    slab_cloud = gauss_rectangle(sx, (0.0, p["slab_height"]), p["slab_nx"],
                                 p["slab_ny"], body_id=1)
    xi = p["xi"]
    g_ring, dg_ring = _gy_minus(cy)
    hard_ring = (BcComposition(mode="hard", scale=xi, g=g_ring,
                               grad_g=dg_ring),
                 BcComposition(mode="hard", scale=xi, g=g_ring,
                               grad_g=dg_ring))
    soft_ring = (BcComposition(mode="soft", scale=xi),
                 BcComposition(mode="soft", scale=xi))
    slab_comps = (BcComposition(mode="hard", scale=xi, g=_gy, grad_g=_dgy),
                  BcComposition(mode="hard", scale=xi, g=_gy, grad_g=_dgy))

    spacing = _spacing(p)
    outer = Arc((cx, cy), r_out, np.pi, 2.0 * np.pi)
    ring_surf = boundary_samples(outer, spacing, body_id=0)
    slab_surf = boundary_samples(Line((sx[0], p["slab_height"]),
                                      (sx[1], p["slab_height"]),
                                      outward=(0, 1)), spacing, body_id=1)
    xs = np.concatenate([np.arange(-r_out, -r_in + 1e-12, p["ebc_spacing"]),
                         np.arange(r_in, r_out + 1e-12, p["ebc_spacing"])])
    ebc_pts = np.stack([cx + xs, np.full(xs.shape, cy)], axis=1)

    ring = Body(name="ring", cloud=ring_cloud,
                material=MaterialSpec(p["material"], E=p["E_ring"],
                                      nu=p["nu"]),
                nets=_nets(p["net_sizes"], config.seed), comps=soft_ring,
                surfaces={"outer": ring_surf},
                driven=DrivenBc(points=ebc_pts, soft_comps=soft_ring,
                                hard_comps=hard_ring))
    slab = Body(name="slab", cloud=slab_cloud,
                material=MaterialSpec(p["material"], E=p["E_slab"],
                                      nu=p["nu"]),
                nets=_nets(p["net_sizes"], config.seed + 5000),
                comps=slab_comps, surfaces={"top": slab_surf})
    pair = ContactPair(body1="ring", surface1="outer", side2=("slab", "top"),
                       spec=ContactSpec(phi0=p["phi0"], r0=p["r0"], model=PP))
    state = SceneState(bodies={"ring": ring, "slab": slab}, pairs=[pair],
                       kappa=p["kappa"], name="ring", seed=config.seed)
    steps = [LoadStep(targets={"ring": (0.0, p["v_target"] * k / p["steps"])},
                      sessions=p["sessions"],
                      epochs_per_session=p["epochs_per_session"])
             for k in range(1, p["steps"] + 1)]
    schedule = TrainSchedule(relax_epochs=p["relax_epochs"], steps=steps,
                             eta=p["eta"], kappa=p["kappa"],
                             optimizer=p["optimizer"], lr_guard=p["lr_guard"])
    aux = dict(ring_surf=ring_surf, slab_surf=slab_surf, pair=pair)
    return RunSetup(config, state, schedule, aux)


def _make_two_rings(config):
    p = config.params
    r_in = p["r_in"]
    r_out = r_in + p["thickness"]
    spacing = _spacing(p)
    bodies = {}
    surfs = {}
    for k, center in enumerate(p["centers"]):
        name = f"ring{k + 1}"
        cloud = gauss_ring_segment(r_in, r_out, 0.0, 2.0 * np.pi,
                                   p["ring_nr"], p["ring_ntheta"],
                                   center=center, body_id=k)
        surf = boundary_samples(Arc(center, r_out, 0.0, 2.0 * np.pi), spacing,
                                body_id=k)
        comps = (BcComposition(mode="free", scale=p["xi"]),
                 BcComposition(mode="free", scale=p["xi"]))
        bodies[name] = Body(
            name=name, cloud=cloud,
            material=MaterialSpec(p["material"], E=p["E"], nu=p["nu"]),
            nets=_nets(p["net_sizes"], config.seed + 5000 * k), comps=comps,
            surfaces={"outer": surf})
        surfs[name] = surf
    pair = ContactPair(body1="ring1", surface1="outer",
                       side2=("ring2", "outer"),
                       spec=ContactSpec(phi0=p["phi0_pp"], r0=p["r0"],
                                        model=PP))
    W = p["sink_width"]

    def wall(name, body, point, normal):
        return WallContact(body=body, surface="outer", name=name,
                           spec=ContactSpec(phi0=p["phi0_ps"], r0=p["r0"],
                                            model=PS,
                                            line=RigidLine(point, normal)))

    walls = [wall("floor1", "ring1", (0.0, 0.0), (0.0, 1.0)),
             wall("floor2", "ring2", (0.0, 0.0), (0.0, 1.0)),
             wall("left", "ring1", (0.0, 0.0), (1.0, 0.0)),
             wall("right", "ring2", (W, 0.0), (-1.0, 0.0)),
             wall("cap1", "ring1", (0.0, p["cap_y"]), (0.0, -1.0)),
             wall("cap2", "ring2", (0.0, p["cap_y"]), (0.0, -1.0))]
    state = SceneState(bodies=bodies, pairs=[pair], walls=walls,
                       kappa=p["kappa"], name="two_rings", seed=config.seed)
    steps = []
    for k in range(1, p["steps"] + 1):
        y = p["cap_y"] + p["v_target"] * k / p["steps"]
        steps.append(LoadStep(targets={}, sessions=p["sessions"],
                              epochs_per_session=p["epochs_per_session"],
                              rigid_targets={"cap1": (0.0, y),
                                             "cap2": (0.0, y)}))
    schedule = TrainSchedule(relax_epochs=p["relax_epochs"], steps=steps,
                             eta=p["eta"], kappa=p["kappa"],
                             optimizer=p["optimizer"],
                             fine_tune=p["fine_tune"],
                             lr_guard=p["lr_guard"])
    aux = dict(surfaces=surfs, pair=pair)
    return RunSetup(config, state, schedule, aux)


def build_two_circles(seed=0, radius=0.5, E=100.0, nu=0.3, xi=1.0,
                      net_sizes=(2, 16, 16, 1), n_r=8, n_theta=16,
                      surf_spacing=0.02, r0=1e-3):
    """Two touching circles with free displacement networks.

    The relaxation demonstration: random initialization overlaps the
    bodies, training with the contact term disabled restores the
    undeformed states.  Returns (state, aux)."""
    centers = [(0.0, radius), (0.0, -radius)]
    bodies = {}
    for k, c in enumerate(centers):
        cloud = gauss_disc(radius, n_r, n_theta, center=c, body_id=k)
        surf = boundary_samples(Arc(c, radius, 0.0, 2.0 * np.pi),
                                surf_spacing, body_id=k)
        comps = (BcComposition(mode="free", scale=xi),
                 BcComposition(mode="free", scale=xi))
        bodies[f"circle{k + 1}"] = Body(
            name=f"circle{k + 1}", cloud=cloud,
            material=MaterialSpec(LINEAR_ELASTIC, E=E, nu=nu),
            nets=_nets(net_sizes, seed + 5000 * k), comps=comps,
            surfaces={"boundary": surf})
    pair = ContactPair(body1="circle1", surface1="boundary",
                       side2=("circle2", "boundary"),
                       spec=ContactSpec(phi0=1.0, r0=r0, model=PP))
    state = SceneState(bodies=bodies, pairs=[pair], name="two_circles",
                       seed=seed)
    return state, dict(centers=centers, radius=radius, r0=r0)


# -- analytic oracle ---------------------------------------------------------

def hertz_half_width(E, nu, R, P_line):
    """Contact half-width of the cylinder-on-plane line-contact solution."""
    e_star = E / (1.0 - nu ** 2)
    return 2.0 * np.sqrt(P_line * R / (np.pi * e_star))


def hertz_analytic_pressure(x, E, nu, R, P_line):
    """Classical line-contact pressure profile; zero outside the contact."""
    b = hertz_half_width(E, nu, R, P_line)
    x = np.asarray(x, dtype=np.float64)
    p = np.zeros_like(x)
    inside = np.abs(x) < b
    p[inside] = 2.0 * P_line / (np.pi * b) * np.sqrt(1.0 - (x[inside] / b) ** 2)
    return p


# -- measurements ---------------------------------------------------------------

def hertz_pressures(setup):
    """Deformed station, pressure, force and gap per contact point."""
    state = setup.state
    surf = setup.aux["surface"]
    spec = setup.aux["spec"]
    body = state.bodies["cyl"]
    comps = body.active_comps()
    u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                        surf.points, comps[0], comps[1])
    disp = np.stack([u, v], axis=1)
    if spec.model == PS:
        forces, _ = contact_force_density(surf, None, disp, None, spec)
    else:
        plane = state.pairs[0].side2.surface
        forces, _ = contact_force_density(surf, plane, disp,
                                          np.zeros_like(plane.points), spec)
    pressure = contact_pressure(surf, forces)
    x_def = surf.points[:, 0] + disp[:, 0]
    gap = (surf.points[:, 1] + disp[:, 1]) - setup.aux["y_plane"]
    return x_def, pressure, forces, gap


def hertz_errors(setup, band=0.9, stations=101):
    """MAPE / RMAE of the predicted pressure against the analytic oracle.

    Errors are evaluated on uniform stations inside ``band`` times the
    analytic half-width (the outermost sliver is excluded because the
    percentage error is unbounded where the exact pressure crosses zero).
    """
    a = setup.aux["analytic"]
    b = hertz_half_width(a["E"], a["nu"], a["R"], a["P_line"])
    x_def, pressure, forces, gap = hertz_pressures(setup)
    xs = np.linspace(-band * b, band * b, stations)
    order = np.argsort(x_def)
    p_pred = np.interp(xs, x_def[order], pressure[order])
    p_exact = hertz_analytic_pressure(xs, **a)
    mape = float(np.mean(np.abs(p_pred - p_exact) / p_exact) * 100.0)
    rmae = float(np.sum(np.abs(p_pred - p_exact)) / np.sum(p_exact) * 100.0)
    total = float(np.sum(pressure * setup.aux["surface"].segment_length))
    return dict(mape=mape, rmae=rmae, integrated_load=total,
                min_gap=float(gap.min()), half_width=float(b))


def reaction_force(segment, body, state=None):
    """First Piola-Kirchhoff traction integrated over a reference boundary."""
    comps = body.active_comps()
    _, _, gu, gv = field_with_gradients(body.nets[0].layers,
                                        body.nets[1].layers, segment.points,
                                        comps[0], comps[1])
    n = len(segment.points)
    F = np.empty((n, 2, 2))
    F[:, 0, 0] = 1.0 + gu[:, 0]
    F[:, 0, 1] = gu[:, 1]
    F[:, 1, 0] = gv[:, 0]
    F[:, 1, 1] = 1.0 + gv[:, 1]
    P = first_pk_stress(F, body.material)
    t = np.einsum("nij,nj->ni", P, segment.normals)
    return (t * segment.weights[:, None]).sum(axis=0)


# -- field export ------------------------------------------------------------------

def evaluation_grid(config, resolution=40):
    """Reference-domain evaluation grids per body for field export."""
    p = config.params
    grids = {}
    if config.name == "hertz":
        R = p["radius"]
        g = gauss_rectangle((-R, R), (-R, 0.0), resolution, resolution // 2)
        mask = np.linalg.norm(g.points, axis=1) <= R
        grids["cyl"] = g.points[mask]
    elif config.name == "cantilever":
        grids["beam"] = gauss_rectangle(
            (0, p["length"]), (-p["height"] / 2, p["height"] / 2),
            resolution, max(4, resolution // 4)).points
    elif config.name == "ironing":
        R = p["cyl_radius"]
        cy = p["cyl_top_y"]
        g = gauss_rectangle((-R, R), (cy - R, cy), resolution,
                            resolution // 2)
        mask = np.linalg.norm(g.points - [0.0, cy], axis=1) <= R
        grids["cyl"] = g.points[mask]
        grids["slab"] = gauss_rectangle(p["slab_x"], (0, p["slab_height"]),
                                        resolution, resolution // 2).points
    elif config.name == "ring":
        cx, cy = p["ring_center"]
        r_out = p["r_out"]
        g = gauss_rectangle((cx - r_out, cx + r_out), (cy - r_out, cy),
                            resolution, resolution // 2)
        r = np.linalg.norm(g.points - [cx, cy], axis=1)
        grids["ring"] = g.points[(r <= r_out) & (r >= r_out - p["thickness"])]
        grids["slab"] = gauss_rectangle(p["slab_x"], (0, p["slab_height"]),
                                        resolution, resolution // 3).points
    elif config.name == "two_rings":
        r_out = p["r_in"] + p["thickness"]
        for k, c in enumerate(p["centers"]):
            g = gauss_rectangle((c[0] - r_out, c[0] + r_out),
                                (c[1] - r_out, c[1] + r_out),
                                resolution, resolution)
            r = np.linalg.norm(g.points - list(c), axis=1)
            grids[f"ring{k + 1}"] = g.points[(r <= r_out)
                                             & (r >= p["r_in"])]
    return grids


@dataclass
class FieldSnapshot:
    """Displacements and Cauchy stresses evaluated on a body grid."""

    body: str
    points: np.ndarray
    u: np.ndarray
    v: np.ndarray
    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray
    von_mises: np.ndarray
    step: int = 0


def snapshot_fields(state, grids, step=0):
    """Evaluate displacement and stress fields on per-body grids."""
    out = []
    for name, pts in grids.items():
        body = state.bodies[name]
        comps = body.active_comps()
        u, v, gu, gv = field_with_gradients(
            body.nets[0].layers, body.nets[1].layers, pts, comps[0], comps[1])
        n = len(pts)
        F = np.empty((n, 2, 2))
        F[:, 0, 0] = 1.0 + gu[:, 0]
        F[:, 0, 1] = gu[:, 1]
        F[:, 1, 0] = gv[:, 0]
        F[:, 1, 1] = 1.0 + gv[:, 1]
        sigma = cauchy_stress(F, body.material)
        szz = out_of_plane_stress(F, body.material)
        vm = von_mises(sigma, szz)
        if not np.all(np.isfinite(vm)):
            raise ConfigurationError(f"non-finite field values on {name}")
        out.append(FieldSnapshot(body=name, points=pts, u=u, v=v,
                                 sxx=sigma[:, 0, 0], syy=sigma[:, 1, 1],
                                 sxy=0.5 * (sigma[:, 0, 1] + sigma[:, 1, 0]),
                                 von_mises=vm, step=step))
    return out


def export_fields(state, grids, out_dir, scene="scene", step=0, seed=0,
                  formats=("csv", "vtk")):
    """Write field snapshots as CSV and legacy-ASCII VTK point clouds."""
    os.makedirs(out_dir, exist_ok=True)
    snaps = snapshot_fields(state, grids, step=step)
    written = []
    for snap in snaps:
        stem = f"{scene}_step{step:03d}_seed{seed}_{snap.body}"
        if "csv" in formats:
            path = os.path.join(out_dir, stem + ".csv")
            _write_fields_csv(path, snap)
            written.append(path)
        if "vtk" in formats:
            path = os.path.join(out_dir, stem + ".vtk")
            _write_fields_vtk(path, snap)
            written.append(path)
    return written


def _write_fields_csv(path, snap):
    with open(path, "w") as f:
        f.write("x,y,u,v,sigma_xx,sigma_yy,sigma_xy,von_mises,body\n")
        for i in range(len(snap.points)):
            f.write(",".join(f"{val:.17g}" for val in (
                snap.points[i, 0], snap.points[i, 1], snap.u[i], snap.v[i],
                snap.sxx[i], snap.syy[i], snap.sxy[i], snap.von_mises[i]))
                + f",{snap.body}\n")


def _write_fields_vtk(path, snap):
    n = len(snap.points)
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"{snap.body} fields step {snap.step}\n")
        f.write("ASCII\nDATASET POLYDATA\n")
        f.write(f"POINTS {n} double\n")
        for x, y in snap.points:
            f.write(f"{x:.17g} {y:.17g} 0\n")
        f.write(f"POINT_DATA {n}\n")
        f.write("VECTORS displacement double\n")
        for i in range(n):
            f.write(f"{snap.u[i]:.17g} {snap.v[i]:.17g} 0\n")
        for label, arr in (("sigma_xx", snap.sxx), ("sigma_yy", snap.syy),
                           ("sigma_xy", snap.sxy),
                           ("von_mises", snap.von_mises)):
            f.write(f"SCALARS {label} double 1\nLOOKUP_TABLE default\n")
            for val in arr:
                f.write(f"{val:.17g}\n")


# -- running and verification -------------------------------------------------

def run_scene(config, export=True):
    """Train one scene per its schedule; writes history, fields, pressures.

    Returns a result dict with the trained state, history and headline
    diagnostics (scene dependent).
    """
    from . import train as T
    from .assembly import write_history_csv
    from .contact import export_pressure_csv
    from .network import save_checkpoint

    setup = instantiate(config)
    state = setup.state
    out = os.path.join(config.out_dir, f"{config.name}_{config.preset}"
                       f"_seed{config.seed}")
    os.makedirs(out, exist_ok=True)
    result = dict(config=config, state=state, out_dir=out)

    if config.name == "hertz":
        trainer = T.Trainer(state=state, opt=T.OptimizerState(
            kind=config["optimizer"], eta=setup.aux["eta_schedule"][0][1]),
            lr_guard=config["lr_guard"])
        for epochs, eta in setup.aux["eta_schedule"]:
            trainer.opt = T.OptimizerState(kind=config["optimizer"], eta=eta)
            trainer.run_epochs(epochs, phase=f"load_eta{eta:g}")
        history = trainer.history
        result["errors"] = hertz_errors(setup)
        x_def, pressure, forces, gap = hertz_pressures(setup)
        if export:
            export_pressure_csv(os.path.join(out, "contact_pressure.csv"),
                                [(setup.aux["surface"], forces)])
    else:
        state, history = T.run_schedule(state, setup.schedule,
                                        outdir=out if export else None)
    result["history"] = history

    if export:
        write_history_csv(os.path.join(out, "history.csv"), history,
                          list(state.bodies.keys()))
        save_checkpoint(os.path.join(out, "params_final.txt"), state.nets(),
                        scene=config.name, seed=config.seed)
        grids = evaluation_grid(config)
        if grids:
            export_fields(state, grids, out, scene=config.name,
                          step=len(setup.schedule.steps), seed=config.seed)
    return result


def gradcheck_scene(name, draws=20, h=1e-6, tol=1e-5, floor=1e-10, seed=0):
    """Loss gradient vs central finite differences on a reduced scene.

    Returns (worst_relative_error, draws); the caller compares against
    ``tol``.  Each draw resamples the network initialization.  Entries
    whose disagreement sits below the central-difference roundoff scale
    ``eps |loss| / 2h`` (or the absolute ``floor``) are uninformative and
    excluded.
    """
    from . import autodiff as ad
    from .assembly import loss_and_grad, total_loss
    from .network import pack_parameters, unpack_parameters

    worst = 0.0
    for k in range(draws):
        config = build_scene(name, preset="gradcheck", seed=seed + 31 * k)
        setup = instantiate(config)
        state = setup.state
        nets = state.nets()
        theta0 = pack_parameters(nets)
        breakdown, grad = loss_and_grad(state)

        def f(theta):
            unpack_parameters(nets, theta)
            return total_loss(state).total

        fd = ad.finite_difference_gradient(f, theta0.copy(), h=h)
        noise = 50.0 * np.finfo(float).eps * max(1.0, abs(breakdown.total))             / (2.0 * h)
        diff = np.abs(grad - fd)
        rel = diff / np.maximum(np.abs(fd), 1e-300)
        rel[diff < max(floor, noise)] = 0.0
        worst = max(worst, float(rel.max()))
    return worst, draws


def hertz_cell(r0, phi0, model, seed=0, preset="desk", overrides=None):
    """Train one Hertz sweep cell and return its error report."""
    ov = dict(r0=r0, phi0=phi0, contact_model=model)
    ov.update(overrides or {})
    config = build_scene("hertz", overrides=ov, preset=preset, seed=seed)
    setup = instantiate(config)
    from . import train as T
    trainer = T.Trainer(state=setup.state, opt=T.OptimizerState(
        kind=config["optimizer"], eta=setup.aux["eta_schedule"][0][1]))
    for epochs, eta in setup.aux["eta_schedule"]:
        trainer.opt = T.OptimizerState(kind=config["optimizer"], eta=eta)
        trainer.run_epochs(epochs, phase=f"load_eta{eta:g}")
    return hertz_errors(setup)


def hertz_report(seeds=(0, 1, 2, 3, 4), preset="desk", cells=None,
                 overrides=None, printer=print):
    """The benchmark sweep: median errors per (r0, phi0, model) cell."""
    cells = cells or [
        (1e-3, 1e4, PS), (1e-4, 1e4, PS), (1e-5, 1e4, PS),
        (1e-3, 1e4, PP), (1e-4, 1e4, PP), (1e-5, 1e4, PP),
        (1e-5, 1e2, PS), (1e-5, 1e6, PS),
    ]
    rows = []
    printer(f"{'model':5s} {'r0':>8s} {'phi0':>8s} {'median MAPE':>12s} "
            f"{'median RMAE':>12s} {'load':>8s}")
    for r0, phi0, model in cells:
        reports = [hertz_cell(r0, phi0, model, seed=s, preset=preset,
                              overrides=overrides) for s in seeds]
        med = dict(
            r0=r0, phi0=phi0, model=model,
            mape=float(np.median([r["mape"] for r in reports])),
            rmae=float(np.median([r["rmae"] for r in reports])),
            load=float(np.median([r["integrated_load"] for r in reports])),
            min_gap=float(np.min([r["min_gap"] for r in reports])),
            reports=reports)
        rows.append(med)
        printer(f"{model:5s} {r0:8.0e} {phi0:8.0e} {med['mape']:11.2f}% "
                f"{med['rmae']:11.2f}% {med['load']:8.4f}")
    return rows
