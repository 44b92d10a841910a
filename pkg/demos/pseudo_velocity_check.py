"""Pseudo-dynamics of energy training: during plain gradient descent the
field moves by eta times the pseudo-velocity -(dF/dtheta)^T (dPi/dtheta)
per epoch.  After warming up a linear cantilever, this script compares
the predicted and actual displacement increments for one VGD epoch and
shows the first-order error shrinking as eta is halved.
"""
import sys

import numpy as np

from contact_pinn.assembly import field_values, loss_and_grad
from contact_pinn.network import pack_parameters, unpack_parameters
from contact_pinn.scenes import build_scene, instantiate
from contact_pinn.train import (OptimizerState, Trainer, pseudo_velocity,
                                vgd_step)


def beam_fields(state, probes):
    body = state.bodies["beam"]
    comps = body.active_comps()
    u, v = field_values(body.nets[0].layers, body.nets[1].layers, probes,
                        comps[0], comps[1])
    return np.stack([u, v], axis=1)


def main():
    config = build_scene("cantilever", overrides={"epochs": 2500}, seed=1)
    setup = instantiate(config)
    state = setup.state
    print("cantilever 1.0 x 0.25 m, E = 1e4 Pa, parabolic end load 10 N")
    print("warming up with Adam so the energy landscape is stabilized...")
    trainer = Trainer(state=state, opt=OptimizerState(kind="adam", eta=1e-3))
    trainer.run_epochs(2500, phase="warmup")

    probes = state.bodies["beam"].cloud.points
    body = state.bodies["beam"]
    _, grad = loss_and_grad(state)
    vel = pseudo_velocity(list(body.nets), list(body.active_comps()),
                          probes, grad)
    theta = pack_parameters(state.nets())
    before = beam_fields(state, probes)
    print(f"{'eta':>10s} {'rel L2 error':>14s}")
    prev = None
    for eta in (1e-4, 5e-5, 2.5e-5):
        unpack_parameters(state.nets(), vgd_step(theta, grad, eta))
        actual = beam_fields(state, probes) - before
        rel = np.linalg.norm(actual - eta * vel) / np.linalg.norm(actual)
        note = "" if prev is None else f"  (ratio {rel / prev:.3f})"
        print(f"{eta:10.1e} {rel:14.3e}{note}")
        prev = rel
        unpack_parameters(state.nets(), theta)
    print("the error is first order in eta: halving eta halves the error")
    return 0


if __name__ == "__main__":
    sys.exit(main())
