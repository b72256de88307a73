"""Weighted divergence-form solve in the velocity variable at fixed (x, t).

The velocity potential U solves, per x-slice,

    d/dv ( rho_t(x, v) dU/dv ) = R(x, v),      R = f(x, v) - g(x + v, v),

with either zero-flux ends (truncated window) or periodicity in v, under
the weighted normalization int rho_t U dv = 0.  In one velocity dimension
this never needs a linear solver: integrating once gives the face flux

    flux(v) = F(v) + c0,      F(v) = int_{v_min}^{v} R(x, s) ds,

where c0 = 0 for zero-flux ends (compatibility makes F vanish at both
ends) and, for the periodic case, c0 is fixed by single-valuedness of U:

    c0 = - (int F / rho_t dv) / (int 1 / rho_t dv).

F is accumulated by cumulative midpoint sums at faces, so the discrete
divergence identity (flux_{j+1} - flux_j)/dv = R_j holds to roundoff by
construction.  dU at a cell center is the face-averaged flux divided by
the center weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .grid import V_HI, V_LO
from .densities import (
    TRANSPORT_WINDOW,
    DensitySpec,
    GaussianProduct,
    Interpolant,
)


class CompatibilityError(ValueError):
    """The marginal compatibility condition fails beyond tolerance."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class PositivityError(ValueError):
    """The interpolated weight is not strictly positive on the grid."""


@dataclass(frozen=True)
class VelocityPotentialProfile:
    """Discrete solution of the weighted solve on one x-slice.

    flux lives on the nv+1 faces, U and dU on the nv cell centers.
    """

    x: float
    t: float
    bc: str
    v: np.ndarray = field(repr=False)
    v_faces: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    dU: np.ndarray = field(repr=False)
    flux: np.ndarray = field(repr=False)
    c0: float = 0.0

    @property
    def dv(self) -> float:
        return float(self.v_faces[1] - self.v_faces[0])


def solve_profile(
    f: DensitySpec,
    g: DensitySpec,
    x: float,
    t: float,
    nv: int,
    bc: str = "periodic",
    v_window: tuple[float, float] | None = None,
) -> VelocityPotentialProfile:
    """Exact 1D flux-integration solve at fixed (x, t).

    bc="periodic" uses the canonical velocity interval; bc="neumann" uses
    the truncated window (defaults to the Gaussian pair's window).
    """
    if bc not in ("periodic", "neumann"):
        raise ValueError(f"solve_profile: unknown bc {bc!r}")
    if bc == "periodic":
        lo, hi = (V_LO, V_HI) if v_window is None else v_window
    else:
        lo, hi = TRANSPORT_WINDOW if v_window is None else v_window
    dv = (hi - lo) / nv
    v_faces = lo + np.arange(nv + 1) * dv
    v = lo + (np.arange(nv) + 0.5) * dv

    path = Interpolant(f, g, t)
    R = np.asarray(path.residual(x, v), float)
    rho = np.asarray(path.rho(x, v), float)

    rho_min = rho.min()
    if rho_min <= 0.0:
        raise PositivityError(f"solve_profile: min rho_t = {rho_min:.3e} at x={x:.6g}, t={t:.6g}")
    total = float(R.sum()) * dv
    l1 = float(np.abs(R).sum()) * dv
    # a drive term at the roundoff floor of the weight is an exact zero
    if abs(total) > 1e-8 * l1 and l1 > 1e-13 * float(rho.sum()) * dv:
        raise CompatibilityError(
            f"solve_profile: right-hand side has nonzero mean {total:.3e} "
            f"(tolerance {1e-8 * l1:.3e}) at x={x:.6g}"
        )

    F = np.empty(nv + 1)
    F[0] = 0.0
    np.cumsum(R * dv, out=F[1:])

    F_c = 0.5 * (F[:-1] + F[1:])
    if bc == "periodic":
        c0 = -float((F_c / rho).sum() / (1.0 / rho).sum())
    else:
        c0 = 0.0
    flux = F + c0
    dU = (F_c + c0) / rho

    U = np.empty(nv)
    U[0] = 0.0
    np.cumsum(0.5 * (dU[:-1] + dU[1:]) * dv, out=U[1:])
    U -= float((rho * U).sum() / rho.sum())

    return VelocityPotentialProfile(
        x=float(x), t=float(t), bc=bc, v=v, v_faces=v_faces, U=U, dU=dU, flux=flux, c0=c0
    )


def elliptic_residual(profile: VelocityPotentialProfile, f: DensitySpec, g: DensitySpec) -> float:
    """Max defect of the discrete divergence identity against the drive term."""
    path = Interpolant(f, g, profile.t)
    R = np.asarray(path.residual(profile.x, profile.v), float)
    div = (profile.flux[1:] - profile.flux[:-1]) / profile.dv
    return float(np.abs(div - R).max())


def closed_form_torus_dU(x, v, t, eps: float, eta: float):
    """dU/dv for the trigonometric pair:

        -(eta/2) sin(2v) / (1 + eps cos x + t eta cos 2v).
    """
    if not abs(eps) + abs(eta) < 1.0:
        raise ValueError("closed_form_torus_dU: |eps| + |eta| < 1 required")
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    denom = 1.0 + eps * np.cos(x) + t * eta * np.cos(2.0 * v)
    out = -(eta / 2.0) * np.sin(2.0 * v) / denom
    if out.ndim == 0:
        return float(out)
    return out


# Below this weight the force is evaluated as zero: no mass lives there,
# and dividing two sub-denormal Gaussians is noise.
DEEP_TAIL = 1e-300


def _check_transport_constraints(f: GaussianProduct, g: GaussianProduct) -> None:
    if abs(g.mu_x - (f.mu_x + g.mu_v)) > 1e-12:
        raise ValueError("gaussian pair: need mu_x^g = mu_x^f + mu_v^g")
    if abs(f.sigma_x**2 - (g.sigma_x**2 + g.sigma_v**2)) > 1e-12:
        raise ValueError("gaussian pair: need (sigma_x^f)^2 = (sigma_x^g)^2 + (sigma_v^g)^2")


def gaussian_antiderivative(f: GaussianProduct, g: GaussianProduct, x, v):
    """F(x, v) = int_{-inf}^{v} (f(x,s) - g(x+s,s)) ds via normal CDF calls.

    Both terms of the integrand are Gaussian in s once the square in the
    g-argument is completed, so F splits into two CDF evaluations.
    """
    _check_transport_constraints(f, g)
    x = np.asarray(x, float)
    v = np.asarray(v, float)

    f_part = f.velocity_marginal(x) * ndtr((v - f.mu_v) / f.sigma_v)

    a = 1.0 / g.sigma_x**2 + 1.0 / g.sigma_v**2
    b = (x - g.mu_x) / g.sigma_x**2 - g.mu_v / g.sigma_v**2
    c = (x - g.mu_x) ** 2 / g.sigma_x**2 + g.mu_v**2 / g.sigma_v**2
    s0 = -b / a
    mass = (
        math.sqrt(2.0 * math.pi / a)
        / (2.0 * math.pi * g.sigma_x * g.sigma_v)
        * np.exp(-0.5 * (c - b * b / a))
    )
    g_part = mass * ndtr(math.sqrt(a) * (v - s0))
    return f_part - g_part


def closed_form_gaussian_dU(x, v, t, f: GaussianProduct, g: GaussianProduct,
                            return_tail_mask: bool = False):
    """dU/dv = F(x, v) / rho_t(x, v) for the matched Gaussian pair.

    Deep in the tails (rho_t below DEEP_TAIL) the value is reported as 0;
    the optional mask flags those points.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    F = gaussian_antiderivative(f, g, x, v)
    rho = (1.0 - t) * f.eval(x, v) + t * g.eval(x + v, v)
    tail = rho < DEEP_TAIL
    out = np.where(tail, 0.0, F / np.where(tail, 1.0, rho))
    if out.ndim == 0:
        out = float(out)
        tail = bool(tail)
    if return_tail_mask:
        return out, tail
    return out
