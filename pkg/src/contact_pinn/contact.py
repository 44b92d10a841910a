"""Exponential surface contact potential and its discretizations.

The repulsive pair potential ``phi(r) = phi_0 * exp(-r / r_0)`` acts
between candidate contact surfaces.  Two discretizations are provided:

* point-to-point (PP): both surfaces carry sample points and the energy is
  a double sum weighted by segment lengths,
* point-to-surface (PS): one surface's points interact with an analytic
  rigid line through their perpendicular distance.

Energies are evaluated at deformed positions ``X + u`` so the contact
zone can slide and grow during training.  Penetration is not an error:
the potential simply keeps growing, which is exactly its penalty role.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .errors import ConfigurationError, EvaluationError

log = logging.getLogger(__name__)

PP = "pp"
PS = "ps"

#: Exponent cap for the C1 linear continuation of the potential under deep
#: penetration (exp(30) ~ 1e13 keeps energies finite and gradients restoring).
EXP_CAP = 30.0


@dataclass
class RigidLine:
    """Analytic rigid counter-surface for the PS model.

    ``normal`` points from the line toward the deformable body, so the
    signed gap of a point ``p`` is ``(p - point) . normal`` (negative means
    penetration).  ``point`` may be moved between loading steps to model a
    driven rigid wall.
    """

    point: tuple
    normal: tuple

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        self.normal = tuple(n / np.linalg.norm(n))
        self.point = (float(self.point[0]), float(self.point[1]))

    def gap(self, px, py):
        nx, ny = self.normal
        return (px - self.point[0]) * nx + (py - self.point[1]) * ny


@dataclass
class ContactSpec:
    """Potential constant, effective radius and discretization choice."""

    phi0: float
    r0: float
    model: str = PP
    beta1: float = 1.0
    beta2: float = 1.0
    line: Optional[RigidLine] = None
    cutoff: Optional[float] = None  # pair cutoff distance; None disables

    def __post_init__(self):
        if self.phi0 <= 0.0 or self.r0 <= 0.0:
            raise ConfigurationError("phi0 and r0 must be positive")
        if self.model not in (PP, PS):
            raise ConfigurationError(f"unknown contact model {self.model!r}")
        if self.model == PS and self.line is None:
            raise ConfigurationError("PS model needs an analytic counter line")


@dataclass
class DistanceMatrix:
    """Pairwise deformed-position offsets and distances, shape (n, m)."""

    r: np.ndarray
    du: np.ndarray
    dv: np.ndarray


def pairwise_distances(P1, P2):
    """Distance matrix between two current (deformed) point sets.

    ``du[i, j] = x1_i - x2_j`` and likewise for ``dv``; the same outer
    broadcasting runs inside the training loss where the coordinates are
    tape variables.
    """
    P1 = np.asarray(P1, dtype=np.float64)
    P2 = np.asarray(P2, dtype=np.float64)
    du = P1[:, 0][:, None] - P2[:, 0][None, :]
    dv = P1[:, 1][:, None] - P2[:, 1][None, :]
    return DistanceMatrix(np.sqrt(du * du + dv * dv), du, dv)


def potential(r, spec):
    """Pair potential phi(r); accepts Vars or arrays."""
    return spec.phi0 * ad.capped_exp(-(r / spec.r0), cap=EXP_CAP)


def _deformed(surface, u):
    u = np.asarray(u, dtype=np.float64) if not isinstance(u, tuple) else u
    return surface.points + u


# -- energies (dual use: ndarray or tape Vars through the helpers) ----------

def pp_energy_terms(p1x, p1y, p2x, p2y, l1, l2, spec):
    """Double-sum PP energy from coordinate vectors (Var or ndarray)."""
    n, m = np.shape(l1)[0], np.shape(l2)[0]
    du = p1x.reshape(n, 1) - p2x.reshape(1, m)
    dv = p1y.reshape(n, 1) - p2y.reshape(1, m)
    r = ad.sqrt(du * du + dv * dv)
    phi = potential(r, spec)
    lw = spec.beta1 * spec.beta2 * np.outer(l1, l2)
    return (phi * lw).sum()


def contact_energy_pp(S1, S2, u1, u2, spec):
    """PP contact energy [J] of two sampled surfaces under displacements."""
    if spec.model != PP:
        raise ConfigurationError("spec.model must be 'pp'")
    for name, u, S in (("body 1", u1, S1), ("body 2", u2, S2)):
        uv = np.asarray(u, dtype=np.float64)
        if not np.all(np.isfinite(uv)):
            idx = int(np.argmax(~np.isfinite(uv).all(axis=1)))
            raise EvaluationError(
                f"non-finite displacement on {name} contact point {idx}",
                point_index=idx)
    p1 = _deformed(S1, u1)
    p2 = _deformed(S2, u2)
    return float(pp_energy_terms(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1],
                                 S1.segment_length, S2.segment_length, spec))


def ps_energy_terms(px, py, lengths, spec):
    """Single-sum PS energy from coordinate vectors (Var or ndarray)."""
    d = spec.line.gap(px, py)
    phi = potential(d, spec)
    return (phi * (spec.beta1 * lengths)).sum()


def contact_energy_ps(S, u, spec):
    """PS contact energy [J] of a sampled surface against a rigid line."""
    if spec.model != PS:
        raise ConfigurationError("spec.model must be 'ps'")
    p = _deformed(S, u)
    return float(ps_energy_terms(p[:, 0], p[:, 1], S.segment_length, spec))


def pp_energy_windowed(p1x, p1y, l1, rigid_window_x, rigid_window_y,
                       rigid_window_l, spec):
    """PP energy of a deformable surface against windowed rigid samples.

    ``rigid_window_*`` are constant ``(n, K)`` arrays holding, per
    deformable point, its K nearest rigid counter-surface samples (a pair
    cutoff); only the deformable coordinates carry gradients.
    """
    n = np.shape(l1)[0]
    du = p1x.reshape(n, 1) - rigid_window_x
    dv = p1y.reshape(n, 1) - rigid_window_y
    r = ad.sqrt(du * du + dv * dv)
    phi = potential(r, spec)
    lw = spec.beta1 * spec.beta2 * (l1[:, None] * rigid_window_l)
    return (phi * lw).sum()


def cutoff_window(px, rigid_x_sorted, count):
    """Per-point index window of the ``count`` nearest rigid samples in x.

    Implements the pair cutoff for large rigid counter-surfaces; windows
    are recomputed between epochs from detached positions, and the window
    width is chosen so omitted pairs sit beyond ~40 r0 where the potential
    is numerically zero.
    """
    m = rigid_x_sorted.shape[0]
    count = min(count, m)
    centers = np.searchsorted(rigid_x_sorted, px)
    start = np.clip(centers - count // 2, 0, m - count)
    return start[:, None] + np.arange(count)[None, :]


# -- forces and pressure -----------------------------------------------------

def _phi_deriv_factor(z):
    """d/dz of the capped exponential at z (= -r/r0)."""
    return np.where(z <= EXP_CAP, np.exp(np.minimum(z, EXP_CAP)), np.exp(EXP_CAP))


def contact_force_density(S1, S2, u1, u2, spec):
    """Per-point contact forces, the analytic derivative of the energy.

    Returns ``(f1, f2)`` with ``f2 = None`` for the PS model.  Forces are
    exactly ``-dE_c/d(point position)``, so they satisfy Newton's third law
    and match finite differences of the discrete energy.  Coincident point
    pairs (r = 0) have no defined direction and contribute zero force.
    """
    if spec.model == PS:
        p = _deformed(S1, u1)
        d = spec.line.gap(p[:, 0], p[:, 1])
        mag = (spec.beta1 * spec.phi0 / spec.r0) * _phi_deriv_factor(-d / spec.r0)
        f = mag[:, None] * np.asarray(spec.line.normal)[None, :] * \
            S1.segment_length[:, None]
        return f, None
    p1 = _deformed(S1, u1)
    p2 = _deformed(S2, u2)
    dm = pairwise_distances(p1, p2)
    if np.any(dm.r == 0.0):
        log.warning("coincident contact points (r=0): zero force assigned, "
                    "max overlap pair count %d", int((dm.r == 0.0).sum()))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(dm.r > 0.0, 1.0 / np.where(dm.r > 0, dm.r, 1.0), 0.0)
    coeff = (spec.beta1 * spec.beta2 * spec.phi0 / spec.r0) * \
        np.exp(-dm.r / spec.r0) * np.outer(S1.segment_length, S2.segment_length)
    fx = coeff * dm.du * inv_r
    fy = coeff * dm.dv * inv_r
    f1 = np.stack([fx.sum(axis=1), fy.sum(axis=1)], axis=1)
    f2 = -np.stack([fx.sum(axis=0), fy.sum(axis=0)], axis=1)
    return f1, f2


def contact_pressure(S, forces):
    """Contact pressure per sample point, compression positive [Pa].

    ``p_i = -(f_i . n_i) / l_i`` with the body's outward normal ``n_i``.
    """
    forces = np.asarray(forces, dtype=np.float64)
    return -(forces * S.outward_normal).sum(axis=1) / S.segment_length


def ps_gaps(S, u, line):
    """Signed perpendicular gaps of deformed points to a rigid line."""
    p = _deformed(S, u)
    return line.gap(p[:, 0], p[:, 1])


def export_pressure_csv(path, surfaces_forces):
    """Write (arc_coordinate, x, y, pressure, body_id) rows per surface."""
    with open(path, "w") as f:
        f.write("arc_coordinate,x,y,pressure,body_id\n")
        for S, forces in surfaces_forces:
            p = contact_pressure(S, np.zeros_like(S.points)) if forces is None \
                else contact_pressure(S, forces)
            arc = np.cumsum(S.segment_length) - 0.5 * S.segment_length
            for s, (x, y), pr in zip(arc, S.points, p):
                f.write(f"{s:.17g},{x:.17g},{y:.17g},{pr:.17g},{S.body_id}\n")
