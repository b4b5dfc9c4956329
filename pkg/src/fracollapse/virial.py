"""Radial virial weights and the localized virial functional.

The base weight has φ'(r) = r χ(r), with χ ≡ 1 on [0, 1], χ ≡ 0 on [10, ∞)
and a quintic smoothstep in between, so that φ is C³ and φ'' <= 1.  φ is a
piecewise polynomial, so every derived field is evaluated in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DataError, GeometryError
from .spectral import Field, Grid, gradient

INNER, OUTER = 1.0, 10.0

# smoothstep S(t) = 10t^3 - 15t^4 + 6t^5 in t = (r - 1)/9
_S = Polynomial([0, 0, 0, 10, -15, 6])
_T = Polynomial([-INNER / (OUTER - INNER), 1 / (OUTER - INNER)])
_CHI = 1 - _S(_T)
_DPHI = Polynomial([0, 1]) * _CHI
_PHI = _DPHI.integ(lbnd=INNER, k=0.5 * INNER**2)
_D2PHI = _DPHI.deriv()
PHI_OUTER = float(_PHI(OUTER))


def chi(r):
    r = np.asarray(r, dtype=float)
    return np.where(r <= INNER, 1.0, np.where(r >= OUTER, 0.0, _CHI(np.clip(r, INNER, OUTER))))


def phi(r):
    r = np.asarray(r, dtype=float)
    return np.where(r <= INNER, 0.5 * r**2, np.where(r >= OUTER, PHI_OUTER, _PHI(np.clip(r, INNER, OUTER))))


def phi_dd(r):
    r = np.asarray(r, dtype=float)
    return np.where(r <= INNER, 1.0, np.where(r >= OUTER, 0.0, _D2PHI(np.clip(r, INNER, OUTER))))


@dataclass(frozen=True)
class VirialWeight:
    R: float
    grid: Grid
    phi: Field
    grad_phi: tuple
    lap_phi: Field
    psi1: np.ndarray
    psi2: np.ndarray


def make_weight(R: float, grid: Grid) -> VirialWeight:
    """φ_R(r) = R² φ(r/R) sampled on ``grid``, centred at the origin."""
    if not R > 0:
        raise GeometryError("R must be positive")
    if OUTER * R > grid.half_length - 2 * grid.dx:
        raise GeometryError(
            f"cutoff radius {OUTER * R:g} does not fit in half-length {grid.half_length:g} with a 2dx margin"
        )
    r = grid.radius / R
    c = chi(r)
    d2 = phi_dd(r)
    n = grid.dim
    return VirialWeight(
        R=R,
        grid=grid,
        phi=Field(grid, R**2 * phi(r)),
        grad_phi=tuple(Field(grid, x * c) for x in grid.coords()),
        lap_phi=Field(grid, d2 + (n - 1) * c),
        psi1=1.0 - d2,
        psi2=(1.0 - d2) + (n - 1) * (1.0 - c),
    )


def localized_virial(f: Field, w: VirialWeight) -> float:
    """2 Im ∫ ū ∇φ_R·∇u dx with spectral derivatives of u."""
    if f.grid != w.grid:
        raise GeometryError("field and weight live on different grids")
    acc = np.zeros(f.grid.shape, dtype=complex)
    for g, dphi in zip(gradient(f), w.grad_phi):
        acc += dphi.values.real * g.values
    return 2.0 * float(np.sum(np.imag(np.conj(f.values) * acc))) * f.grid.cell_volume


def virial_rate(traj) -> list:
    """Finite-difference dM/dt of the virial column: centred inside, one-sided at the ends."""
    records = getattr(traj, "diagnostics", traj)
    rows = [(r.t, r.virial) for r in records if r.virial is not None]
    if len(rows) < 3:
        raise DataError(f"need at least 3 diagnostics rows with a virial value, got {len(rows)}")
    t = np.array([r[0] for r in rows])
    m = np.array([r[1] for r in rows])
    return list(zip(t.tolist(), np.gradient(m, t).tolist()))
