"""Constitutive models under plane strain.

Strain energy densities drive the training loss; stress measures (first
Piola-Kirchhoff, Cauchy, von Mises) serve post-processing such as reaction
forces and contour export.  The componentwise energy entry points accept
either tape variables or plain arrays, so the same formulas back both the
differentiable loss and the numpy oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ConfigurationError, EvaluationError

LINEAR_ELASTIC = "linear_elastic"
NEO_HOOKEAN = "neo_hookean"


@dataclass
class MaterialSpec:
    """Constitutive choice with Young's modulus [Pa] and Poisson's ratio."""

    model: str
    E: float
    nu: float
    lam: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        if self.model not in (LINEAR_ELASTIC, NEO_HOOKEAN):
            raise ConfigurationError(f"unknown material model {self.model!r}")
        if self.E <= 0.0:
            raise ConfigurationError("Young's modulus must be positive")
        if not -1.0 < self.nu < 0.5:
            raise ConfigurationError("Poisson's ratio must lie in (-1, 0.5)")
        # plane-strain Lame constants
        self.lam = self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
        self.mu = self.E / (2.0 * (1.0 + self.nu))


@dataclass
class DeformationGradient:
    """Local deformation gradient ``F = I + du/dX`` with its determinant."""

    F: np.ndarray
    J: float = field(init=False)

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=np.float64)
        self.J = float(np.linalg.det(self.F))

    @property
    def inverted(self):
        """True when the local state is inadmissible (det F <= 0)."""
        return self.J <= 0.0


def deformation_gradient(j_spatial):
    """Build ``F = I + du/dX`` from a displacement :class:`DualVector`."""
    grad_u = np.asarray(j_spatial.input_jacobian, dtype=np.float64)
    if grad_u.shape != (2, 2):
        raise ConfigurationError("expected a 2x2 displacement gradient")
    return DeformationGradient(np.eye(2) + grad_u)


# -- strain energy densities ----------------------------------------------

def strain_energy_components(fxx, fxy, fyx, fyy, mat, guard_j=False):
    """Strain energy density from deformation-gradient components.

    Accepts tape Vars or ndarrays (the training path records this through
    the tape).  With ``guard_j`` the neo-Hookean log is given a linear
    continuation below a small floor so transiently inverted sample points
    yield a finite, restoring energy instead of an abort.
    """
    if mat.model == LINEAR_ELASTIC:
        exx = fxx - 1.0
        eyy = fyy - 1.0
        exy = 0.5 * (fxy + fyx)
        tr = exx + eyy
        return 0.5 * mat.lam * tr * tr + mat.mu * (
            exx * exx + eyy * eyy + 2.0 * exy * exy)
    i1 = fxx * fxx + fxy * fxy + fyx * fyx + fyy * fyy
    detf = fxx * fyy - fxy * fyx
    det_val = detf.value if isinstance(detf, ad.Var) else np.asarray(detf)
    if not guard_j:
        bad = np.asarray(det_val <= 0.0)
        if bad.any():
            idx = int(np.argmax(bad.ravel()))
            raise EvaluationError(
                f"det F <= 0 at sample point {idx} (value {np.ravel(det_val)[idx]:.3e})",
                point_index=idx)
        lnj = ad.log(detf)
    else:
        lnj = ad.log_floored(detf)
    return 0.5 * mat.mu * (i1 - 2.0) - mat.mu * lnj + 0.5 * mat.lam * lnj * lnj


def strain_energy_density(F, mat):
    """Strain energy density [Pa] of a single deformation state."""
    F = F.F if isinstance(F, DeformationGradient) else np.asarray(F, dtype=np.float64)
    psi = strain_energy_components(F[..., 0, 0], F[..., 0, 1],
                                   F[..., 1, 0], F[..., 1, 1], mat)
    return float(psi) if np.ndim(psi) == 0 else psi


# -- stress measures --------------------------------------------------------

def first_pk_stress(F, mat):
    """First Piola-Kirchhoff stress ``P = dPsi/dF`` [Pa], analytic per model."""
    F = F.F if isinstance(F, DeformationGradient) else np.asarray(F, dtype=np.float64)
    if mat.model == LINEAR_ELASTIC:
        eps = 0.5 * (F + np.swapaxes(F, -1, -2)) - np.eye(2)
        tr = np.trace(eps, axis1=-2, axis2=-1)
        return (mat.lam * tr)[..., None, None] * np.eye(2) + 2.0 * mat.mu * eps
    J = np.linalg.det(F)
    if np.any(J <= 0.0):
        idx = int(np.argmax(np.ravel(J <= 0.0)))
        raise EvaluationError(f"det F <= 0 at sample point {idx}", point_index=idx)
    Finv_T = np.swapaxes(np.linalg.inv(F), -1, -2)
    return mat.mu * (F - Finv_T) + (mat.lam * np.log(J))[..., None, None] * Finv_T


def cauchy_stress(F, mat):
    """Cauchy stress ``sigma = J^-1 P F^T`` [Pa]."""
    F = F.F if isinstance(F, DeformationGradient) else np.asarray(F, dtype=np.float64)
    J = np.linalg.det(F)
    if np.any(J <= 0.0):
        idx = int(np.argmax(np.ravel(J <= 0.0)))
        raise EvaluationError(f"det F <= 0 at sample point {idx}", point_index=idx)
    P = first_pk_stress(F, mat)
    return (P @ np.swapaxes(F, -1, -2)) / J[..., None, None]


def out_of_plane_stress(F, mat):
    """Plane-strain sigma_zz consistent with the in-plane Cauchy stress."""
    F = F.F if isinstance(F, DeformationGradient) else np.asarray(F, dtype=np.float64)
    if mat.model == LINEAR_ELASTIC:
        sigma = cauchy_stress(F, mat)
        return mat.nu * (sigma[..., 0, 0] + sigma[..., 1, 1])
    J = np.linalg.det(F)
    return mat.lam * np.log(J) / J


def von_mises(sigma, sigma_zz=0.0):
    """Von Mises stress from in-plane Cauchy components plus sigma_zz."""
    sigma = np.asarray(sigma, dtype=np.float64)
    sxx = sigma[..., 0, 0]
    syy = sigma[..., 1, 1]
    sxy = 0.5 * (sigma[..., 0, 1] + sigma[..., 1, 0])
    szz = np.asarray(sigma_zz, dtype=np.float64)
    # difference form: exactly zero for hydrostatic states
    vm2 = 0.5 * ((sxx - syy) ** 2 + (syy - szz) ** 2 + (szz - sxx) ** 2) \
        + 3.0 * sxy * sxy
    return np.sqrt(np.maximum(vm2, 0.0))


def von_mises_from_F(F, mat):
    """Convenience: von Mises stress straight from a deformation state."""
    return von_mises(cauchy_stress(F, mat), out_of_plane_stress(F, mat))
