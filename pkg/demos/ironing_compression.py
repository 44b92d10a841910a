"""Rubber ironing, compression phase: a stiff half cylinder is pressed
into a softer slab in uniform displacement steps.

Reports the vertical and horizontal reaction forces after each step (the
horizontal component stays near zero by symmetry) and compares the
contact pressure seen from the cylinder and from the slab.
"""
import sys

import numpy as np

from contact_pinn.assembly import field_values
from contact_pinn.contact import contact_force_density, contact_pressure
from contact_pinn.scenes import build_scene, instantiate, reaction_force
from contact_pinn.train import run_schedule


def surface_pressures(state, pair):
    b1 = state.bodies[pair.body1]
    s1 = b1.surfaces[pair.surface1]
    b2 = state.bodies[pair.side2[0]]
    s2 = b2.surfaces[pair.side2[1]]

    def disp(body, surf):
        comps = body.active_comps()
        u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                            surf.points, comps[0], comps[1])
        return np.stack([u, v], axis=1)

    u1, u2 = disp(b1, s1), disp(b2, s2)
    f1, f2 = contact_force_density(s1, s2, u1, u2, pair.spec)
    return ((s1.points[:, 0] + u1[:, 0], contact_pressure(s1, f1)),
            (s2.points[:, 0] + u2[:, 0], contact_pressure(s2, f2)))


def main():
    # a reduced two-step compression so the demo stays in the minutes range
    config = build_scene("ironing", overrides={
        "compression_steps": 2, "v_target": -0.2,
        "sessions": 2, "epochs_per_session": 500, "relax_epochs": 200,
    }, seed=0)
    setup = instantiate(config)
    state = setup.state
    print("half cylinder E=300 Pa pressed into slab E=100 Pa "
          f"({config['compression_steps']} steps to "
          f"{config['v_target']} m)")

    def report(step, state, history):
        rf_c = reaction_force(setup.aux["rf_top"], state.bodies["cyl"])
        rf_s = reaction_force(setup.aux["rf_bottom"], state.bodies["slab"])
        print(f"step {step + 1}: cylinder RF = ({rf_c[0]:+.4f}, "
              f"{rf_c[1]:+.4f}) N/m, slab RF = ({rf_s[0]:+.4f}, "
              f"{rf_s[1]:+.4f}) N/m")

    state, history = run_schedule(state, setup.schedule, on_step=report)
    (xc, pc), (xs, ps) = surface_pressures(state, setup.aux["pair"])
    active = pc > 0.05 * pc.max()
    print(f"cylinder-side contact pressure: peak {pc.max():.3f} Pa over "
          f"x in [{xc[active].min():+.3f}, {xc[active].max():+.3f}] m")
    grid = np.linspace(xc[active].min(), xc[active].max(), 25)
    pci = np.interp(grid, xc[np.argsort(xc)], pc[np.argsort(xc)])
    psi = np.interp(grid, xs[np.argsort(xs)], ps[np.argsort(xs)])
    diff = np.mean(np.abs(pci - psi)) / np.mean(np.abs(pci))
    print(f"cylinder vs slab pressure, relative mean abs difference: "
          f"{100 * diff:.1f}%")
    return 0


if __name__ == "__main__":
    sys.exit(main())
