"""Total training loss: internal energy - external work + contact + penalty.

A :class:`SceneState` bundles bodies (quadrature cloud, networks,
composition recipes, material), contact pairs against deformable or rigid
counter-surfaces, traction loads and the essential-boundary penalty for
displacement loading.  :func:`loss_and_grad` records one epoch's loss on a
gradient tape and returns the breakdown together with the flat parameter
gradient.

The same field evaluation helpers run on plain arrays (for oracles and
post-processing) and on tape variables (for training); only the parameter
containers differ.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import autodiff as ad
from .contact import (PP, PS, ContactSpec, cutoff_window, pp_energy_terms,
                      pp_energy_windowed, ps_energy_terms)
from .errors import ConfigurationError, EvaluationError
from .geometry import BoundarySegment, ContactSurface, QuadratureCloud
from .materials import MaterialSpec, strain_energy_components
from .network import (BcComposition, NetworkParams, compose_gradient,
                      compose_output)


# -- field evaluation (arrays or tape Vars) ---------------------------------

def field_values(layers_u, layers_v, X, comp_u, comp_v):
    """Composed displacement components (u, v) at points ``X``."""
    n = X.shape[0]
    raw_u = ad.mlp_batch(layers_u, X).reshape(n)
    raw_v = ad.mlp_batch(layers_v, X).reshape(n)
    return (compose_output(raw_u, X, comp_u),
            compose_output(raw_v, X, comp_v))


def field_with_gradients(layers_u, layers_v, X, comp_u, comp_v):
    """Composed components plus their spatial gradients at ``X``."""
    n = X.shape[0]
    au, Ju = ad.mlp_batch(layers_u, X, want_jac=True)
    av, Jv = ad.mlp_batch(layers_v, X, want_jac=True)
    ru, rv = au.reshape(n), av.reshape(n)
    u = compose_output(ru, X, comp_u)
    v = compose_output(rv, X, comp_v)
    gu = compose_gradient(ru, Ju.reshape(n, 2), X, comp_u)
    gv = compose_gradient(rv, Jv.reshape(n, 2), X, comp_v)
    return u, v, gu, gv


def deformation_components(gu, gv):
    """F = I + grad(u) as four componentwise arrays/Vars."""
    return 1.0 + gu[:, 0], gu[:, 1], gv[:, 0], 1.0 + gv[:, 1]


# -- scene state --------------------------------------------------------------

@dataclass
class TractionLoad:
    """Dead surface load on the reference configuration."""

    segment: BoundarySegment
    traction: Callable  # (N, 2) points -> (N, 2) tractions [Pa]


@dataclass
class DrivenBc:
    """Displacement loading of one body: penalty samples and recipes.

    ``soft_comps`` apply while the penalty ramps the target in; once the
    boundary residual is small and the loss stable, the trainer swaps in
    ``hard_comps`` whose offsets carry the full step target.
    """

    points: np.ndarray
    soft_comps: tuple
    hard_comps: tuple
    target: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ramped_target: np.ndarray = field(default_factory=lambda: np.zeros(2))
    phase: str = "soft"


@dataclass
class Body:
    name: str
    cloud: QuadratureCloud
    material: MaterialSpec
    nets: tuple
    comps: tuple
    tractions: list = field(default_factory=list)
    surfaces: dict = field(default_factory=dict)
    driven: Optional[DrivenBc] = None

    def active_comps(self):
        if self.driven is not None:
            return (self.driven.soft_comps if self.driven.phase == "soft"
                    else self.driven.hard_comps)
        return self.comps


@dataclass
class RigidSurface:
    """Sampled rigid counter-surface (zero displacement, no parameters)."""

    surface: ContactSurface


@dataclass
class ContactPair:
    """PP contact between two surfaces; side2 may be rigid.

    ``window`` activates the pair cutoff against a rigid side2: each
    deformable point interacts only with its ``window`` nearest rigid
    samples (sorted along x), refreshed every epoch from detached
    positions.
    """

    body1: str
    surface1: str
    side2: object  # (body_name, surface_name) or RigidSurface
    spec: ContactSpec
    window: Optional[int] = None


@dataclass
class WallContact:
    """PS contact of one surface against the spec's rigid line.

    Named walls can be driven by a loading schedule (the line's anchor
    point moves between steps)."""

    body: str
    surface: str
    spec: ContactSpec
    name: str = ""


@dataclass
class LossBreakdown:
    """Per-term energies [J] making up the scalar training loss."""

    e_in: dict
    e_ex: float
    e_c: float
    pi_ebc: float
    kappa: float
    total: float

    def check(self):
        ref = sum(self.e_in.values()) - self.e_ex + self.e_c \
            + self.kappa * self.pi_ebc
        if abs(self.total - ref) > 1e-12 * max(1.0, abs(ref)):
            raise EvaluationError("loss breakdown does not add up")
        return self


@dataclass
class SceneState:
    bodies: dict
    pairs: list = field(default_factory=list)
    walls: list = field(default_factory=list)
    kappa: float = 0.0
    contact_enabled: bool = True
    guard_j: bool = True
    name: str = ""
    seed: int = 0

    def nets(self):
        out = []
        for body in self.bodies.values():
            out.extend(body.nets)
        return out

    def net_slices(self):
        """Flat-vector slice per body, in parameter order."""
        slices, off = {}, 0
        for name, body in self.bodies.items():
            size = sum(n.size for n in body.nets)
            slices[name] = slice(off, off + size)
            off += size
        return slices


# -- public energy operations ---------------------------------------------------

def internal_energy(cloud, nets, comps, mat, guard_j=False):
    """Strain energy of one body's displacement field over its cloud."""
    u, v, gu, gv = field_with_gradients(nets[0].layers, nets[1].layers,
                                        cloud.points, comps[0], comps[1])
    fxx, fxy, fyx, fyy = deformation_components(gu, gv)
    psi = strain_energy_components(fxx, fxy, fyx, fyy, mat, guard_j=guard_j)
    return float((psi * cloud.weights).sum())


def external_work(segment, traction, nets, comps):
    """Work of a dead traction over the reference boundary segment."""
    pts = segment.points
    u, v = field_values(nets[0].layers, nets[1].layers, pts,
                        comps[0], comps[1])
    t = traction(pts) if callable(traction) else \
        np.broadcast_to(np.asarray(traction, dtype=np.float64), (len(pts), 2))
    return float(((t[:, 0] * u + t[:, 1] * v) * segment.weights).sum())


def ebc_penalty(preds, targets, t, t_max):
    """Mean squared deviation from the ramped essential-boundary target.

    ``preds`` is (n, 2) and may hold tape Vars per column as a tuple
    ``(u, v)``; ``targets`` is the full step target, ramped by t/t_max.
    """
    if t_max <= 0:
        raise ConfigurationError("t_max must be positive")
    ramp = min(max(float(t) / float(t_max), 0.0), 1.0)
    targets = np.asarray(targets, dtype=np.float64)
    if isinstance(preds, tuple):
        u, v = preds
        n = np.shape(u)[0] if not isinstance(u, ad.Var) else u.shape[0]
        du = u - ramp * targets[..., 0]
        dv = v - ramp * targets[..., 1]
        return (du * du + dv * dv).sum() / float(n)
    preds = np.asarray(preds, dtype=np.float64)
    d = preds - ramp * targets
    return float(np.sum(d * d) / preds.shape[0])


# -- taped loss ---------------------------------------------------------------------

def _pair_energy(state, pair, fields):
    s1 = state.bodies[pair.body1].surfaces[pair.surface1]
    p1x, p1y = fields[(pair.body1, pair.surface1)]
    if isinstance(pair.side2, RigidSurface):
        s2 = pair.side2.surface
        if pair.window is not None and pair.window < len(s2):
            order = np.argsort(s2.points[:, 0], kind="stable")
            sx = s2.points[order, 0]
            sy = s2.points[order, 1]
            sl = s2.segment_length[order]
            px_now = p1x.value if isinstance(p1x, ad.Var) else p1x
            idx = cutoff_window(px_now, sx, pair.window)
            return pp_energy_windowed(p1x, p1y, s1.segment_length,
                                      sx[idx], sy[idx], sl[idx], pair.spec)
        return pp_energy_terms(p1x, p1y, s2.points[:, 0], s2.points[:, 1],
                               s1.segment_length, s2.segment_length, pair.spec)
    body2, surf2 = pair.side2
    s2 = state.bodies[body2].surfaces[surf2]
    p2x, p2y = fields[(body2, surf2)]
    return pp_energy_terms(p1x, p1y, p2x, p2y,
                           s1.segment_length, s2.segment_length, pair.spec)


def build_loss(state, record=True):
    """Evaluate the total loss; returns (breakdown, loss, tape).

    With ``record`` the evaluation runs on a fresh gradient tape with all
    network parameters watched, and ``loss`` is a tape Var whose flat
    gradient the caller can take; otherwise everything stays plain numpy.
    """
    if record:
        tape = ad.GradientTape()
        watched = tape.watch_params(state.nets())
    else:
        tape = None
        watched = None

    # composed fields per body at each point group
    e_in = {}
    e_ex_total = 0.0
    pi_ebc_total = 0.0
    surface_fields = {}
    widx = 0
    for name, body in state.bodies.items():
        comps = body.active_comps()
        if watched is not None:
            layers_u, layers_v = watched[widx], watched[widx + 1]
        else:
            layers_u, layers_v = body.nets[0].layers, body.nets[1].layers
        widx += 2

        u, v, gu, gv = field_with_gradients(layers_u, layers_v,
                                            body.cloud.points,
                                            comps[0], comps[1])
        fxx, fxy, fyx, fyy = deformation_components(gu, gv)
        psi = strain_energy_components(fxx, fxy, fyx, fyy, body.material,
                                       guard_j=state.guard_j)
        e_in[name] = (psi * body.cloud.weights).sum()

        for load in body.tractions:
            pts = load.segment.points
            tu, tv = field_values(layers_u, layers_v, pts, comps[0], comps[1])
            t = load.traction(pts) if callable(load.traction) else \
                np.broadcast_to(np.asarray(load.traction, dtype=np.float64),
                                (len(pts), 2))
            e_ex_total = e_ex_total + \
                ((t[:, 0] * tu + t[:, 1] * tv) * load.segment.weights).sum()

        for sname, surf in body.surfaces.items():
            su, sv = field_values(layers_u, layers_v, surf.points,
                                  comps[0], comps[1])
            surface_fields[(name, sname)] = (surf.points[:, 0] + su,
                                             surf.points[:, 1] + sv)

        if body.driven is not None and body.driven.phase == "soft":
            pts = body.driven.points
            pu, pv = field_values(layers_u, layers_v, pts, comps[0], comps[1])
            tgt = body.driven.ramped_target
            du = pu - tgt[0]
            dv = pv - tgt[1]
            pi_ebc_total = pi_ebc_total + \
                (du * du + dv * dv).sum() / float(len(pts))

    e_c_total = 0.0
    if state.contact_enabled:
        for pair in state.pairs:
            e_c_total = e_c_total + _pair_energy(state, pair, surface_fields)
        for wall in state.walls:
            surf = state.bodies[wall.body].surfaces[wall.surface]
            px, py = surface_fields[(wall.body, wall.surface)]
            e_c_total = e_c_total + ps_energy_terms(
                px, py, surf.segment_length, wall.spec)

    total = sum(e_in.values()) - e_ex_total + e_c_total \
        + state.kappa * pi_ebc_total

    def scalar(x):
        return float(x.value) if isinstance(x, ad.Var) else float(x)

    breakdown = LossBreakdown(
        e_in={k: scalar(v) for k, v in e_in.items()},
        e_ex=scalar(e_ex_total),
        e_c=scalar(e_c_total),
        pi_ebc=scalar(pi_ebc_total),
        kappa=state.kappa,
        total=scalar(total))
    for label, value in (("E_in", sum(breakdown.e_in.values())),
                         ("E_ex", breakdown.e_ex), ("E_c", breakdown.e_c),
                         ("Pi_EBC", breakdown.pi_ebc)):
        if not np.isfinite(value):
            raise EvaluationError(f"loss component {label} is not finite")
    return breakdown, total, tape


def total_loss(state):
    """Loss breakdown of the current state (no tape, no gradient)."""
    breakdown, _, _ = build_loss(state, record=False)
    return breakdown.check()


def loss_and_grad(state):
    """One recorded evaluation: breakdown plus flat parameter gradient."""
    breakdown, total, tape = build_loss(state)
    grad = tape.param_gradient(total)
    return breakdown.check(), grad


def write_history_csv(path, history, body_names):
    """Loss-history CSV: epoch, E_in per body, E_ex, E_c, Pi_EBC, total,
    learning rate and training phase."""
    cols = ["epoch"] + [f"e_in_{b}" for b in body_names] + \
        ["e_ex", "e_c", "pi_ebc", "total", "learning_rate", "phase"]
    with open(path, "w") as f:
        f.write(",".join(cols) + "\n")
        for row in history:
            bd = row["breakdown"]
            vals = [f"{row['epoch']}"]
            vals += [f"{bd.e_in[b]:.17g}" for b in body_names]
            vals += [f"{bd.e_ex:.17g}", f"{bd.e_c:.17g}",
                     f"{bd.pi_ebc:.17g}", f"{bd.total:.17g}",
                     f"{row['eta']:.17g}", row["phase"]]
            f.write(",".join(vals) + "\n")
