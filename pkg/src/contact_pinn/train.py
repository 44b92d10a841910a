"""Optimizers and the relaxation / loading-step state machine.

Training minimizes the recorded energy loss with plain gradient descent
(VGD) or Adam.  Displacement loading runs in steps: inside a step the
essential-boundary target ramps linearly over the first session under the
soft penalty; once the boundary residual is small and the loss stable at
a session boundary, the remaining sessions of the step use the hard
composition.  The pseudo-velocity diagnostic predicts per-epoch
displacement increments and backs an optional learning-rate guard that
keeps boundary motion below the contact radius.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assembly import SceneState, build_loss, loss_and_grad, write_history_csv
from .autodiff import network_param_tangent
from .errors import ConfigurationError, EvaluationError, NumericalError
from .network import (compose_output, pack_parameters, save_checkpoint,
                      unpack_parameters)

VGD = "vgd"
ADAM = "adam"


@dataclass
class OptimizerState:
    """Optimizer kind, learning rate and (for Adam) moment buffers."""

    kind: str = ADAM
    eta: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in (VGD, ADAM):
            raise ConfigurationError(f"unknown optimizer {self.kind!r}")
        if self.eta <= 0.0:
            raise ConfigurationError("learning rate must be positive")


def vgd_step(theta, g, eta):
    """Plain gradient-descent update ``theta - eta * g``."""
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        bad = int(np.argmax(~np.isfinite(g)))
        raise NumericalError(f"non-finite gradient entry at index {bad}")
    return np.asarray(theta, dtype=np.float64) - eta * g


def adam_step(theta, g, state):
    """Bias-corrected Adam update; returns (theta', state)."""
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        bad = int(np.argmax(~np.isfinite(g)))
        raise NumericalError(f"non-finite gradient entry at index {bad}")
    if state.m is None:
        state.m = np.zeros_like(g)
        state.v = np.zeros_like(g)
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    update = state.eta * m_hat / (np.sqrt(v_hat) + state.eps)
    return np.asarray(theta, dtype=np.float64) - update, state


def propose_step(theta, g, opt):
    """The optimizer's parameter increment for this epoch (not applied)."""
    if opt.kind == VGD:
        return vgd_step(theta, g, opt.eta) - theta
    new_theta, _ = adam_step(theta, g, opt)
    return new_theta - theta


# -- pseudo-velocity ----------------------------------------------------------

def pseudo_velocity(nets, comps, probes, loss_grad):
    """Displacement rate ``-(dF/dtheta)^T (dPi/dtheta)`` at probe points.

    ``loss_grad`` is the flat gradient over exactly these networks in
    packing order; the composed field's chain rule (output scaling and
    distance factors) is included.  The predicted per-epoch increment
    under plain gradient descent is ``eta`` times this field.
    """
    probes = np.asarray(probes, dtype=np.float64)
    out = np.zeros((probes.shape[0], len(nets)))
    off = 0
    for k, (net, comp) in enumerate(zip(nets, comps)):
        direction = -np.asarray(loss_grad[off:off + net.size],
                                dtype=np.float64)
        off += net.size
        raw_dot = network_param_tangent(net, probes, direction)[:, 0]
        out[:, k] = compose_output(raw_dot, probes, _rate_comp(comp))
    return out


def _rate_comp(comp):
    """Composition applied to a field *rate*: offsets drop out."""
    from .network import BcComposition
    return BcComposition(mode=comp.mode, scale=comp.scale, g=comp.g,
                         grad_g=comp.grad_g, offset=0.0)


def boundary_increment_estimate(state, dtheta):
    """Max predicted boundary-point displacement increment for ``dtheta``."""
    worst = 0.0
    slices = state.net_slices()
    for name, body in state.bodies.items():
        if not body.surfaces:
            continue
        probes = np.concatenate([s.points for s in body.surfaces.values()])
        piece = dtheta[slices[name]]
        comps = body.active_comps()
        out = np.zeros((probes.shape[0], 2))
        off = 0
        for k, (net, comp) in enumerate(zip(body.nets, comps)):
            direction = piece[off:off + net.size]
            off += net.size
            raw_dot = network_param_tangent(net, probes, direction)[:, 0]
            out[:, k] = compose_output(raw_dot, probes, _rate_comp(comp))
        worst = max(worst, float(np.max(np.linalg.norm(out, axis=1))))
    return worst


def min_contact_radius(state):
    specs = [p.spec for p in state.pairs] + [w.spec for w in state.walls]
    return min((s.r0 for s in specs), default=np.inf)


# -- training loops ------------------------------------------------------------

@dataclass
class LoadStep:
    """One displacement increment: cumulative targets per driven body.

    ``rigid_targets`` optionally moves named rigid walls (PS lines) to new
    anchor points, ramped alongside the soft boundary targets.
    """

    targets: dict
    sessions: int = 1
    epochs_per_session: int = 1000
    rigid_targets: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sessions < 1 or self.epochs_per_session < 1:
            raise ConfigurationError("session and epoch counts must be >= 1")


@dataclass
class TrainSchedule:
    relax_epochs: int = 0
    steps: list = field(default_factory=list)
    eta: float = 1e-4
    kappa: float = 0.0
    optimizer: str = ADAM
    fine_tune: Optional[tuple] = None  # (sessions, epochs_per_session)
    lr_guard: bool = False
    switch_to_hard: bool = True
    residual_tol: float = 1e-3
    stability_tol: float = 1e-4


@dataclass
class Trainer:
    """Sequential training state machine over a scene."""

    state: SceneState
    opt: OptimizerState
    history: list = field(default_factory=list)
    epoch: int = 0
    lr_guard: bool = False
    max_guard_halvings: int = 40

    def run_epochs(self, epochs, phase):
        nets = self.state.nets()
        theta = pack_parameters(nets)
        guard_r0 = min_contact_radius(self.state)
        breakdown = None
        for _ in range(epochs):
            breakdown, grad = loss_and_grad(self.state)
            dtheta = propose_step(theta, grad, self.opt)
            eta_used = self.opt.eta
            est = None
            if self.state.contact_enabled and self.lr_guard \
                    and np.isfinite(guard_r0):
                est = boundary_increment_estimate(self.state, dtheta)
                halvings = 0
                while est > guard_r0 and halvings < self.max_guard_halvings:
                    dtheta = 0.5 * dtheta
                    est *= 0.5
                    eta_used *= 0.5
                    halvings += 1
            theta = theta + dtheta
            unpack_parameters(nets, theta)
            self.epoch += 1
            self.history.append({"epoch": self.epoch, "breakdown": breakdown,
                                 "eta": eta_used, "phase": phase,
                                 "bc_increment_est": est})
        return breakdown


def relax(state, epochs, opt, history=None, lr_guard=False):
    """Preliminary training with the contact term disabled.

    Drives randomly initialized displacement mappings back toward the
    undeformed state; aborts (with history attached) if the loss rises
    tenfold above its starting value.
    """
    trainer = Trainer(state=state, opt=opt,
                      history=history if history is not None else [],
                      lr_guard=lr_guard)
    was_enabled = state.contact_enabled
    state.contact_enabled = False
    try:
        start, _, _ = build_loss(state, record=False)
        floor = max(abs(start.total), 1e-30)
        done = 0
        chunk = max(1, min(25, epochs))
        while done < epochs:
            n = min(chunk, epochs - done)
            try:
                bd = trainer.run_epochs(n, phase="relax")
            except (EvaluationError, NumericalError) as exc:
                err = NumericalError(f"relaxation diverged: {exc}")
                err.history = trainer.history
                raise err from exc
            done += n
            if bd.total > 10.0 * floor and bd.total > start.total:
                err = NumericalError(
                    f"relaxation diverged: loss {bd.total:.3e} vs start "
                    f"{start.total:.3e}")
                err.history = trainer.history
                raise err
    finally:
        state.contact_enabled = was_enabled
    report = {"final_loss": trainer.history[-1]["breakdown"].total
              if trainer.history else start.total,
              "mean_abs_u": mean_abs_displacement(state)}
    return trainer.history, report


def mean_abs_displacement(state):
    """Mean |u| over each body's cloud (diagnostic)."""
    from .assembly import field_values
    out = {}
    for name, body in state.bodies.items():
        comps = body.active_comps()
        u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                            body.cloud.points, comps[0], comps[1])
        out[name] = float(np.mean(np.hypot(u, v)))
    return out


def max_abs_displacement(state):
    from .assembly import field_values
    out = {}
    for name, body in state.bodies.items():
        comps = body.active_comps()
        u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                            body.cloud.points, comps[0], comps[1])
        out[name] = float(np.max(np.hypot(u, v)))
    return out


def _bc_residual(state, body):
    """RMS deviation of the driven boundary from its full step target."""
    from .assembly import field_values
    d = body.driven
    comps = body.active_comps()
    u, v = field_values(body.nets[0].layers, body.nets[1].layers,
                        d.points, comps[0], comps[1])
    du = u - d.target[0]
    dv = v - d.target[1]
    return float(np.sqrt(np.mean(du * du + dv * dv)))


def run_schedule(state, schedule, opt=None, outdir=None, on_step=None):
    """Drive the scene through relaxation, loading steps and fine-tuning.

    Inside each step the soft target ramps over the first session from the
    previous step's target to the new one; at later session boundaries the
    soft-to-hard switch rule is evaluated.  Emits checkpoints per loading
    step when ``outdir`` is given and aborts on a non-finite loss after
    checkpointing the last good parameters.
    """
    opt = opt or OptimizerState(kind=schedule.optimizer, eta=schedule.eta)
    state.kappa = schedule.kappa
    trainer = Trainer(state=state, opt=opt, lr_guard=schedule.lr_guard)

    if schedule.relax_epochs > 0:
        relax(state, schedule.relax_epochs, opt, history=trainer.history,
              lr_guard=schedule.lr_guard)
        trainer.epoch = len(trainer.history)

    driven = {n: b for n, b in state.bodies.items() if b.driven is not None}
    prev_targets = {n: np.zeros(2) for n in driven}
    walls = {w.name: w for w in state.walls if getattr(w, "name", None)}
    prev_wall = {n: np.asarray(w.spec.line.point, dtype=np.float64)
                 for n, w in walls.items()}

    def checkpoint(tag):
        if outdir is None:
            return
        os.makedirs(outdir, exist_ok=True)
        labels = []
        for bname, body in state.bodies.items():
            labels += [f"{bname}.u", f"{bname}.v"]
        save_checkpoint(os.path.join(outdir, f"params_{tag}.txt"),
                        state.nets(), scene=state.name, seed=state.seed,
                        labels=labels)

    def run_guarded(epochs, phase):
        try:
            return trainer.run_epochs(epochs, phase)
        except (NumericalError, FloatingPointError):
            checkpoint("last_good")
            raise

    for k, step in enumerate(schedule.steps):
        for name, body in driven.items():
            tgt = np.asarray(step.targets.get(name, prev_targets[name]),
                             dtype=np.float64)
            body.driven.target = tgt
            body.driven.phase = "soft"
            _set_hard_offsets(body, tgt)
        wall_tgt = {n: np.asarray(step.rigid_targets.get(n, prev_wall[n]),
                                  dtype=np.float64) for n in walls}
        total_ramp = step.epochs_per_session
        ramp_needed = bool(driven) and not _all_hard(driven) or any(
            np.any(wall_tgt[n] != prev_wall[n]) for n in walls)
        for s in range(step.sessions):
            phase = f"step{k + 1}s{s + 1}" + (
                "h" if driven and _all_hard(driven) else "")
            if s == 0 and ramp_needed:
                # gradual loading: ramp targets across this session
                for e in range(step.epochs_per_session):
                    frac = (e + 1.0) / total_ramp
                    for name, body in driven.items():
                        body.driven.ramped_target = (
                            prev_targets[name]
                            + frac * (body.driven.target - prev_targets[name]))
                    for n, w in walls.items():
                        w.spec.line.point = tuple(
                            prev_wall[n] + frac * (wall_tgt[n] - prev_wall[n]))
                    run_guarded(1, phase)
            else:
                for name, body in driven.items():
                    body.driven.ramped_target = body.driven.target.copy()
                loss_before = trainer.history[-1]["breakdown"].total \
                    if trainer.history else None
                run_guarded(step.epochs_per_session, phase)
                loss_after = trainer.history[-1]["breakdown"].total
                if schedule.switch_to_hard and s < step.sessions - 1 \
                        and loss_before is not None:
                    _maybe_switch(state, driven, schedule,
                                  loss_before, loss_after)
        for name in driven:
            prev_targets[name] = driven[name].driven.target.copy()
        for n in walls:
            walls[n].spec.line.point = tuple(wall_tgt[n])
            prev_wall[n] = wall_tgt[n].copy()
        checkpoint(f"step{k + 1:02d}")
        if on_step is not None:
            on_step(k, state, trainer.history)

    if schedule.fine_tune is not None:
        sessions, epochs = schedule.fine_tune
        for s in range(sessions):
            run_guarded(epochs, phase=f"finetune_s{s + 1}")
    checkpoint("final")
    return state, trainer.history


def _set_hard_offsets(body, target):
    hard_u, hard_v = body.driven.hard_comps
    hard_u.offset = float(target[0])
    hard_v.offset = float(target[1])


def _all_hard(driven):
    return all(b.driven.phase == "hard" for b in driven.values())


def _maybe_switch(state, driven, schedule, loss_before, loss_after):
    """Soft-to-hard switch rule, evaluated at session boundaries."""
    denom = max(abs(loss_before), 1e-30)
    stable = abs(loss_after - loss_before) / denom < schedule.stability_tol
    if not stable:
        return
    for name, body in driven.items():
        if body.driven.phase != "soft":
            continue
        tgt_norm = float(np.linalg.norm(body.driven.target))
        if tgt_norm == 0.0:
            continue
        if _bc_residual(state, body) < schedule.residual_tol * tgt_norm:
            body.driven.phase = "hard"


def save_history(path, history, state):
    write_history_csv(path, history, list(state.bodies.keys()))
