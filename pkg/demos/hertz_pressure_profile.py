"""Hertz benchmark: train the point-to-surface model and compare the
contact pressure against the classical line-contact solution.

Runs a shortened desk configuration (one seed, the soft r0 = 1e-3 cell)
so it finishes in about a minute on a laptop CPU; pass --full for the
default desk cell (r0 = 1e-4, tighter but slower).  Writes the pressure
profile CSV next to this script.
"""
import argparse
import os
import sys
import time

import numpy as np

from contact_pinn.scenes import (build_scene, instantiate, hertz_errors,
                                 hertz_pressures, hertz_analytic_pressure)
from contact_pinn.train import Trainer, OptimizerState


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--full", action="store_true",
                    help="run the r0=1e-4 desk cell instead of r0=1e-3")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    overrides = {} if args.full else {"r0": 1e-3}
    config = build_scene("hertz", overrides=overrides, seed=args.seed)
    setup = instantiate(config)
    print(f"half cylinder R={config['radius']} m, E={config['E']} Pa, "
          f"load {config['line_load']} N/m, potential r0={config['r0']:g} m")
    print(f"training {sum(e for e, _ in setup.aux['eta_schedule'])} epochs...")

    t0 = time.time()
    trainer = Trainer(state=setup.state, opt=OptimizerState(
        kind="adam", eta=setup.aux["eta_schedule"][0][1]))
    for epochs, eta in setup.aux["eta_schedule"]:
        trainer.opt = OptimizerState(kind="adam", eta=eta)
        trainer.run_epochs(epochs, phase=f"eta{eta:g}")
    print(f"done in {time.time() - t0:.0f} s, "
          f"final loss {trainer.history[-1]['breakdown'].total:.4e}")

    errors = hertz_errors(setup)
    print(f"pressure MAPE vs analytic: {errors['mape']:.2f}%  "
          f"(integrated load {errors['integrated_load']:.4f} N/m, "
          f"applied {config['line_load']} N/m)")

    x, p, _, gap = hertz_pressures(setup)
    a = setup.aux["analytic"]
    path = os.path.join(os.path.dirname(__file__) or ".",
                        "hertz_pressure_profile.csv")
    order = np.argsort(x)
    with open(path, "w") as f:
        f.write("x,pressure,analytic\n")
        for i in order:
            f.write(f"{x[i]:.8g},{p[i]:.8g},"
                    f"{hertz_analytic_pressure(np.array([x[i]]), **a)[0]:.8g}\n")
    print(f"profile written to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
