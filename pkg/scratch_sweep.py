"""Schedule/band calibration sweep for the Hertz desk preset."""
import sys
import time

import numpy as np

from scratch_hertz import build_state, pressures, mape_rmae
from contact_pinn.geometry import RefineBands
from contact_pinn.train import Trainer, OptimizerState

BANDS = RefineBands((0.30, 0.18, 0.09), (0.70, 0.85, 0.93))


def run_cell(r0, phi0, schedule, model="ps", seed=0, spacing=None,
             bands=BANDS, n_r=18, n_theta=36, label="", **kw):
    t0 = time.time()
    state, (spec, surf) = build_state(seed, r0, phi0, model=model,
                                      spacing=spacing, bands=bands,
                                      n_r=n_r, n_theta=n_theta, **kw)
    trainer = Trainer(state=state, opt=OptimizerState(kind="adam",
                                                      eta=schedule[0][1]))
    for epochs, eta in schedule:
        trainer.opt = OptimizerState(kind="adam", eta=eta)
        trainer.run_epochs(epochs, phase=f"eta{eta:g}")
    x_def, p, f, gap = pressures(state, spec, surf)
    mape, rmae = mape_rmae(x_def, p)
    tot = float(np.sum(p * surf.segment_length))
    print(f"[{label}] r0={r0:g} phi0={phi0:g} {model} seed={seed} "
          f"cloud={len(state.bodies['cyl'].cloud)} surf={len(surf)}: "
          f"MAPE={mape:.2f}% RMAE={rmae:.2f}% sum_pl={tot:.4f} "
          f"gap/r0={gap.min()/r0:+.1f} [{time.time()-t0:.0f}s]", flush=True)
    return mape, rmae, tot


if __name__ == "__main__":
    which = sys.argv[1]
    if which == "A":
        run_cell(1e-4, 1e4, [(3000, 1e-3), (2000, 1e-4)], label="A")
    elif which == "B":
        run_cell(1e-4, 1e4, [(5000, 1e-3), (2000, 1e-4)], label="B")
    elif which == "C":
        run_cell(1e-4, 1e4, [(3000, 1e-3), (1000, 3e-4), (1000, 1e-4)],
                 label="C")
    elif which == "D":
        run_cell(1e-3, 1e4, [(3000, 1e-3), (2000, 1e-4)], label="D")
    elif which == "E":
        run_cell(1e-5, 1e4, [(3000, 1e-3), (2000, 1e-4)], spacing=1e-4,
                 label="E")
    elif which == "F":  # larger nets sanity at the same schedule
        run_cell(1e-4, 1e4, [(3000, 1e-3), (2000, 1e-4)],
                 sizes=(2, 30, 30, 30, 30, 1), label="F")
    elif which == "G":
        run_cell(1e-4, 1e4, [(3000, 1e-3), (2000, 3e-4), (2000, 1e-4)],
                 label="G")
    elif which == "H":
        run_cell(1e-4, 1e4, [(5000, 1e-3), (3000, 1e-4)], label="H")
    elif which == "I":
        from contact_pinn.geometry import RefineBands
        run_cell(1e-4, 1e4, [(3000, 1e-3), (2000, 1e-4)], n_theta=48,
                 bands=RefineBands((0.30, 0.16, 0.08), (0.72, 0.86, 0.94)),
                 label="I")
