"""Sequential calibration batch: schedule choice for each Hertz cell."""
import time

import numpy as np

from scratch_hertz import build_state, pressures, mape_rmae, hertz_analytic
from scratch_sweep import BANDS, run_cell
from contact_pinn.train import Trainer, OptimizerState


def binned_mape(x_def, p, lengths, band=0.9, bins=60):
    _, b = hertz_analytic(np.zeros(1))
    edges = np.linspace(-band * b, band * b, bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    idx = np.digitize(x_def, edges) - 1
    pb = np.zeros(bins)
    ok = np.zeros(bins, bool)
    for k in range(bins):
        m = idx == k
        if m.any():
            pb[k] = np.sum(p[m] * lengths[m]) / np.sum(lengths[m])
            ok[k] = True
    pe, _ = hertz_analytic(centers)
    return float(np.mean(np.abs(pb[ok] - pe[ok]) / pe[ok]) * 100)


def refine_study(r0, spacing, phases, seed=0, n_r=18, n_theta=36, tag=""):
    t0 = time.time()
    state, (spec, surf) = build_state(seed, r0, 1e4, spacing=spacing,
                                      bands=BANDS, n_r=n_r, n_theta=n_theta)
    trainer = Trainer(state=state,
                      opt=OptimizerState(kind="adam", eta=phases[0][1]))
    for epochs, eta in phases:
        trainer.opt = OptimizerState(kind="adam", eta=eta)
        trainer.run_epochs(epochs, phase=f"eta{eta:g}")
        x_def, p, f, gap = pressures(state, spec, surf)
        mape, rmae = mape_rmae(x_def, p)
        bm = binned_mape(x_def, p, surf.segment_length)
        print(f"[{tag}] ep{trainer.epoch} eta={eta:g}: MAPE={mape:.2f}% "
              f"binned={bm:.2f}% sum={np.sum(p*surf.segment_length):.4f} "
              f"gap/r0={gap.min()/spec.r0:+.1f} [{time.time()-t0:.0f}s]",
              flush=True)


if __name__ == "__main__":
    # G: mid-rate bridge for the 1e-4 cell
    refine_study(1e-4, None, [(3000, 1e-3), (2000, 3e-4), (2000, 1e-4)],
                 tag="G-1e4")
    # long refine for the 1e-5 cell
    refine_study(1e-5, 1e-4, [(3000, 1e-3), (2000, 1e-4), (2000, 1e-4),
                              (2000, 3e-5), (2000, 3e-5), (2000, 1e-5)],
                 tag="R-1e5")
