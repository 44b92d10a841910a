"""Hertz bring-up prototype (not part of the package)."""
import time

import numpy as np

from contact_pinn.assembly import (Body, ContactPair, RigidSurface,
                                   SceneState, TractionLoad, WallContact)
from contact_pinn.contact import (PP, PS, ContactSpec, RigidLine,
                                  contact_force_density, contact_pressure)
from contact_pinn.geometry import (Arc, Line, RefineBands, boundary_samples,
                                   gauss_half_disc, gauss_segment)
from contact_pinn.materials import LINEAR_ELASTIC, MaterialSpec
from contact_pinn.network import BcComposition, init_params
from contact_pinn.train import LoadStep, OptimizerState, TrainSchedule, Trainer

E, NU, R, P_LINE, XI = 200.0, 0.3, 1.0, 0.5, 1e-3


def hertz_analytic(x, E=E, nu=NU, R=R, P=P_LINE):
    Es = E / (1.0 - nu ** 2)
    b = 2.0 * np.sqrt(P * R / (np.pi * Es))
    p = np.zeros_like(x)
    m = np.abs(x) < b
    p[m] = 2.0 * P / (np.pi * b) * np.sqrt(1.0 - (x[m] / b) ** 2)
    return p, b


def build_state(seed, r0, phi0, model=PS, spacing=None, sizes=(2, 30, 30, 30, 1),
                n_r=24, n_theta=48, bands=RefineBands(), psi_c=0.2,
                plane_spacing=None, window_mult=80, standoff=True):
    cloud = gauss_half_disc(R, n_r, n_theta, refine=bands)
    # place the plane at the penalty equilibrium gap below the pole so the
    # free vertical mode starts near balance (profile is translation-invariant)
    p_bar = P_LINE / (0.2 * R)
    d0 = r0 * np.log(phi0 / (r0 * p_bar)) if standoff else 0.0
    comp_u = BcComposition(mode="hard", scale=XI, g=lambda x: x[:, 0],
                           grad_g=lambda x: np.tile([1.0, 0.0], (len(x), 1)))
    comp_v = BcComposition(mode="free", scale=XI)
    top = gauss_segment(Line((-R, 0.0), (R, 0.0), outward=(0, 1)), 60)
    arc = Arc((0.0, 0.0), R, -np.pi / 2 - psi_c, -np.pi / 2 + psi_c)
    spacing = spacing or r0
    surf = boundary_samples(arc, spacing, body_id=0)
    q = P_LINE / (2.0 * R)
    body = Body(name="cyl", cloud=cloud,
                material=MaterialSpec(LINEAR_ELASTIC, E=E, nu=NU),
                nets=(init_params(sizes, seed), init_params(sizes, seed + 1000)),
                comps=(comp_u, comp_v),
                tractions=[TractionLoad(top, (0.0, -q))],
                surfaces={"arc": surf})
    pairs, walls = [], []
    if model == PS:
        spec = ContactSpec(phi0=phi0, r0=r0, model=PS,
                           line=RigidLine((0.0, -R - d0), (0.0, 1.0)))
        walls.append(WallContact(body="cyl", surface="arc", spec=spec))
    else:
        ps_ = plane_spacing or r0
        xmax = np.sin(psi_c) * R * 1.1
        plane = boundary_samples(Line((-xmax, -R - d0), (xmax, -R - d0),
                                      outward=(0, 1)), ps_, body_id=-1)
        spec = ContactSpec(phi0=phi0, r0=r0, model=PP)
        window = int(np.ceil(window_mult * r0 / ps_)) + 2
        pairs.append(ContactPair(body1="cyl", surface1="arc",
                                 side2=RigidSurface(plane), spec=spec,
                                 window=window if window < len(plane) else None))
    return SceneState(bodies={"cyl": body}, pairs=pairs, walls=walls,
                      kappa=0.0, name="hertz", seed=seed), (spec, surf)


def pressures(state, spec, surf):
    from contact_pinn.assembly import field_values
    body = state.bodies["cyl"]
    comps = body.active_comps()
    u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                        surf.points, comps[0], comps[1])
    disp = np.stack([u, v], axis=1)
    if spec.model == PS:
        f, _ = contact_force_density(surf, None, disp, None, spec)
    else:
        pair = state.pairs[0]
        plane = pair.side2.surface
        f, _ = contact_force_density(surf, plane, disp,
                                     np.zeros_like(plane.points), spec)
    p = contact_pressure(surf, f)
    x_def = surf.points[:, 0] + disp[:, 0]
    if spec.model == PS:
        y_plane = spec.line.point[1]
    else:
        y_plane = None
    gap = (surf.points[:, 1] + disp[:, 1]) - (y_plane if y_plane is not None else -R)
    return x_def, p, f, gap


def mape_rmae(x_def, p, band=0.9):
    _, b = hertz_analytic(np.zeros(1))
    xs = np.linspace(-band * b, band * b, 101)
    order = np.argsort(x_def)
    p_interp = np.interp(xs, x_def[order], p[order])
    p_exact, _ = hertz_analytic(xs)
    mape = np.mean(np.abs(p_interp - p_exact) / p_exact) * 100.0
    rmae = np.sum(np.abs(p_interp - p_exact)) / np.sum(p_exact) * 100.0
    return mape, rmae


def run(seed=0, r0=1e-3, phi0=1e4, model=PS, epochs=2000, eta=1e-4, **kw):
    t0 = time.time()
    state, (spec, surf) = build_state(seed, r0, phi0, model=model, **kw)
    trainer = Trainer(state=state, opt=OptimizerState(kind="adam", eta=eta))
    trainer.run_epochs(epochs, phase="load")
    x_def, p, f, gap = pressures(state, spec, surf)
    mape, rmae = mape_rmae(x_def, p)
    fy = f[:, 1].sum()
    p_int = np.sum(p * surf.segment_length)
    dt = time.time() - t0
    bd = trainer.history[-1]["breakdown"]
    print(f"seed={seed} r0={r0:g} phi0={phi0:g} {spec.model} "
          f"N={len(surf)} cloud={len(state.bodies['cyl'].cloud)} "
          f"epochs={epochs}: MAPE={mape:.2f}% RMAE={rmae:.2f}% "
          f"sum_p*l={p_int:.4f} sum_fy={fy:.4f} min_gap={gap.min():.2e} "
          f"({gap.min()/r0:+.1f} r0)  loss={bd.total:.6e} [{dt:.1f}s]")
    return mape, rmae, p_int, gap.min(), dt


if __name__ == "__main__":
    import sys
    which = sys.argv[1] if len(sys.argv) > 1 else "quick"
    if which == "quick":
        run(seed=0, r0=1e-3, phi0=1e4, model=PS, epochs=2000)
    elif which == "r4":
        run(seed=0, r0=1e-4, phi0=1e4, model=PS, epochs=2000)
    elif which == "pp":
        run(seed=0, r0=1e-3, phi0=1e4, model=PP, epochs=2000)
