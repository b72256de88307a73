"""Acceleration fields in original phase-space variables.

A field built from a compatible pair (f, g) evaluates

    a(x, v, t) = dU_t(x - t*v, v),

where dU_t is the velocity-potential gradient from the comoving solve.
Closed-form variants exist for the built-in pairs; the grid-backed variant
solves velocity profiles at every x-center on demand per time level and
interpolates.  Construction refuses pairs whose marginal compatibility
residual exceeds tolerance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .grid import V_LO, PhaseGrid, wrap_v, wrap_x
from .densities import (
    CompatReport,
    DensitySpec,
    FreeTransport,
    GaussianProduct,
    Interpolant,
    TorusTrigF,
    TorusTrigG,
    TRANSPORT_WINDOW,
    check_compatibility,
)
from .elliptic import (
    CompatibilityError,
    _check_transport_constraints,
    closed_form_gaussian_dU,
    closed_form_torus_dU,
    solve_profile,
)

COMPAT_TOL = 1e-8


def _check_time(t: float) -> None:
    if not -1e-12 <= t <= 1.0 + 1e-12:
        raise ValueError(f"field evaluation time t={t} outside [0, 1]")


class AccelerationField:
    """Base interface: eval(x, v, t) plus a cached magnitude bound."""

    max_abs: float = 0.0

    def eval(self, x, v, t):
        _check_time(t)
        return self._eval(np.asarray(x, float), np.asarray(v, float), float(t))

    def _eval(self, x, v, t):
        raise NotImplementedError


class ZeroField(AccelerationField):
    """Free transport: the connecting force vanishes identically."""

    max_abs = 0.0

    def _eval(self, x, v, t):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(v)))


@dataclass
class TorusClosedFormField(AccelerationField):
    """a(x,v,t) = -(eta/2) sin 2v / (1 + eps cos(x - t v) + t eta cos 2v)."""

    eps: float
    eta: float

    def __post_init__(self) -> None:
        self.max_abs = abs(self.eta) / (2.0 * (1.0 - abs(self.eps) - abs(self.eta)))

    def _eval(self, x, v, t):
        return closed_form_torus_dU(wrap_x(x - t * v), v, t, self.eps, self.eta)


@dataclass
class GaussianClosedFormField(AccelerationField):
    """Closed-form field for the matched Gaussian pair on the real line."""

    f: GaussianProduct
    g: GaussianProduct

    def __post_init__(self) -> None:
        _check_transport_constraints(self.f, self.g)
        self.max_abs = 1.05 * self._probe_sup()

    def _probe_sup(self, n: int = 1024, nt: int = 9) -> float:
        lo, hi = TRANSPORT_WINDOW
        x = np.linspace(lo, hi, n)[:, None]
        v = np.linspace(lo, hi, n)[None, :]
        sup = 0.0
        for t in np.linspace(0.0, 1.0, nt):
            a = closed_form_gaussian_dU(x - t * v, v, t, self.f, self.g)
            sup = max(sup, float(np.abs(a).max()))
        return sup

    def _eval(self, x, v, t):
        return closed_form_gaussian_dU(x - t * v, v, t, self.f, self.g)


class GridBackedField(AccelerationField):
    """Field interpolated from per-x velocity profiles on a periodic grid.

    Profiles are solved lazily at each requested time level and cached by
    t; two concurrent fills of the same key compute identical entries, so
    the cache is idempotent.  The gradient is stored on velocity faces and
    evaluated with periodic linear interpolation in the shifted x-argument
    and linear interpolation in v.
    """

    def __init__(self, f: DensitySpec, g: DensitySpec, grid: PhaseGrid):
        self.f = f
        self.g = g
        self.grid = grid
        self._cache: dict[float, np.ndarray] = {}
        self.max_abs = 1.05 * max(
            float(np.abs(self._profiles_at(float(t))).max())
            for t in np.linspace(0.0, 1.0, 9)
        )

    def _profiles_at(self, t: float) -> np.ndarray:
        """dU on the (x-center, v-face) lattice at time t, shape (nx, nv+1)."""
        cached = self._cache.get(t)
        if cached is not None:
            return cached
        g = self.grid
        path = Interpolant(self.f, self.g, t)
        dU = np.empty((g.nx, g.nv + 1))
        for i, xi in enumerate(g.x_centers):
            prof = solve_profile(self.f, self.g, xi, t, g.nv, bc="periodic")
            rho_faces = np.asarray(path.rho(xi, prof.v_faces), float)
            dU[i] = prof.flux / rho_faces
        self._cache[t] = dU
        return dU

    def _eval(self, x, v, t):
        g = self.grid
        dU = self._profiles_at(t)
        x_shift = np.asarray(wrap_x(np.asarray(x, float) - t * np.asarray(v, float)))
        v = np.asarray(wrap_v(v))

        fx = x_shift / g.dx - 0.5
        i0 = np.floor(fx).astype(int)
        wxf = fx - i0
        i0 %= g.nx
        i1 = (i0 + 1) % g.nx

        fv = (v - V_LO) / g.dv
        j0 = np.clip(np.floor(fv).astype(int), 0, g.nv - 1)
        wvf = fv - j0

        out = (1.0 - wxf) * ((1.0 - wvf) * dU[i0, j0] + wvf * dU[i0, j0 + 1]) + wxf * (
            (1.0 - wvf) * dU[i1, j0] + wvf * dU[i1, j0 + 1]
        )
        return out


def build_field(
    f: DensitySpec,
    g: DensitySpec,
    method: str = "closed-form",
    grid: PhaseGrid | None = None,
    compat_tol: float = COMPAT_TOL,
) -> AccelerationField:
    """Construct the connecting field, refusing incompatible pairs.

    method="closed-form" recognizes the built-in pairs; method="numeric"
    precomputes velocity profiles on the given periodic grid.
    """
    report = _compat_report(f, g, grid)
    if report.max_residual > compat_tol:
        raise CompatibilityError(
            f"incompatible pair: max marginal residual {report.max_residual:.6e} "
            f"exceeds {compat_tol:.1e}",
            report=report,
        )

    if method == "closed-form":
        if isinstance(g, FreeTransport) and g.t == 1.0 and g.base == f:
            return ZeroField()
        if isinstance(f, TorusTrigF) and isinstance(g, TorusTrigG):
            return TorusClosedFormField(f.eps, g.eta)
        if isinstance(f, GaussianProduct) and isinstance(g, GaussianProduct):
            return GaussianClosedFormField(f, g)
        raise ValueError("no closed form known for this pair; use method='numeric'")
    if method == "numeric":
        if grid is None:
            raise ValueError("build_field: numeric method needs a grid")
        return GridBackedField(f, g, grid)
    raise ValueError(f"build_field: unknown method {method!r}")


def _compat_report(f: DensitySpec, g: DensitySpec, grid: PhaseGrid | None) -> CompatReport:
    if isinstance(f, GaussianProduct) and isinstance(g, GaussianProduct):
        lo, hi = TRANSPORT_WINDOW
        x = np.linspace(lo, hi, 257)
        return check_compatibility(f, g, x_points=x, nv=2048, v_window=TRANSPORT_WINDOW)
    if grid is None:
        grid = PhaseGrid(256, 256)
    return check_compatibility(f, g, grid)


def eval_a(field: AccelerationField, x, v, t):
    """Field value a(x, v, t); t must lie in [0, 1]."""
    return field.eval(x, v, t)


def max_abs_bound(field: AccelerationField) -> float:
    """Upper bound for |a| used by the time-step control."""
    return field.max_abs


def sample_field(field: AccelerationField, t: float,
                 x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Field samples on the tensor grid of the given coordinates."""
    return np.broadcast_to(
        field.eval(np.asarray(x, float)[:, None], np.asarray(v, float)[None, :], t),
        (len(x), len(v)),
    ).copy()


def write_field_csv(path, field: AccelerationField, times,
                    x: np.ndarray, v: np.ndarray) -> None:
    """Long-format CSV of samples with columns x, v, t, a (round-trip floats)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "v", "t", "a"])
        for t in times:
            a = sample_field(field, float(t), x, v)
            for i, xi in enumerate(x):
                for j, vj in enumerate(v):
                    writer.writerow([repr(float(xi)), repr(float(vj)),
                                     repr(float(t)), repr(float(a[i, j]))])
