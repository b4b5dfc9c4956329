"""Blow-up diagnostics: windowed L² concentration, rate fitting, and the
rescaled comparison of a collapsing solution with the ground state."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as sfft
from scipy.optimize import least_squares, minimize_scalar

from .errors import DataError, DependencyError, DomainError, FitError
from .groundstate import GroundState
from .spectral import Field, Grid, evaluate_on_axes, hs_seminorm, l2_norm

TIE_RTOL = 1e-12
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ConcentrationSample:
    t: float
    a: float
    center: tuple
    window_mass: float
    clamped: bool = False


@dataclass(frozen=True)
class ProfileDistance:
    t: float
    rho: float
    theta: float
    l2_dist: float
    hs_dist: float


@dataclass(frozen=True)
class RateFit:
    t_star: float
    kappa: float
    r_squared: float
    amplitude: float
    not_blowup: bool


def _ball(grid: Grid, a: float) -> np.ndarray:
    """Indicator of the periodic ball of radius ``a`` about index 0, in FFT order."""
    off = sfft.fftfreq(grid.n, d=1.0 / grid.n) * grid.dx
    d2 = sum(o * o for o in np.meshgrid(*([off] * grid.dim), indexing="ij", sparse=True))
    return (d2 <= a * a * (1 + 1e-12)).astype(float)


def window_masses(f: Field, a: float) -> np.ndarray:
    """∫_{|x-y|<=a} |f|² for every grid centre y (circular convolution)."""
    g = f.grid
    if not 0 < a <= g.half_length:
        raise DomainError(f"window radius {a} outside (0, {g.half_length}]")
    conv = sfft.ifftn(sfft.fftn(f.abs2) * sfft.fftn(_ball(g, a))).real
    return conv * g.cell_volume


def _refine(values: np.ndarray, idx: tuple, grid: Grid) -> tuple:
    center = []
    for ax in range(grid.dim):
        sl = list(idx)
        n = grid.n
        i = idx[ax]
        sl[ax] = (i - 1) % n
        ym = values[tuple(sl)]
        sl[ax] = (i + 1) % n
        yp = values[tuple(sl)]
        y0 = values[idx]
        den = ym - 2 * y0 + yp
        off = 0.0 if den >= 0 else float(np.clip(0.5 * (ym - yp) / den, -0.5, 0.5))
        center.append(float(grid.axis[i] + off * grid.dx))
    return tuple(center)


def concentration_mass(f: Field, a: float, t: float = 0.0, clamped: bool = False) -> ConcentrationSample:
    """Maximal windowed mass over grid centres; ties go to the smallest flat index."""
    w = window_masses(f, a)
    top = w.max()
    flat = int(np.flatnonzero(w >= top - TIE_RTOL * abs(top))[0])
    idx = np.unravel_index(flat, w.shape)
    return ConcentrationSample(t, a, _refine(w, idx, f.grid), float(w[idx]), clamped)


def window_radius(hs: float, s: float, delta: float, grid: Grid) -> tuple:
    """a = hs^{-(1/s - δ)} clamped to [2dx, L]; returns (a, clamped)."""
    if not 0 < delta < 1.0 / s:
        raise DomainError(f"delta must lie in (0, 1/s), got {delta}")
    a = hs ** (-(1.0 / s - delta))
    lo, hi = 2 * grid.dx, grid.half_length
    clamped = not lo <= a <= hi
    return float(min(max(a, lo), hi)), clamped


def concentration_series(traj, delta: float, s: float) -> list:
    if not traj.snapshots:
        raise DataError("trajectory has no snapshots")
    out = []
    for t, f in traj.snapshots:
        a, clamped = window_radius(hs_seminorm(f, s), s, delta, f.grid)
        out.append(concentration_mass(f, a, t, clamped))
    return out


def spectral_tail(f: Field) -> float:
    """Fraction of spectral power beyond 2/3 of the Nyquist wavenumber."""
    g = f.grid
    kmax = np.pi / g.dx
    p = f.hat.real**2 + f.hat.imag**2
    total = p.sum()
    return float(p[g.ksq > (2.0 * kmax / 3.0) ** 2].sum() / total) if total > 0 else 0.0


def is_resolved(f: Field, tol: float = 1e-6) -> bool:
    return spectral_tail(f) <= tol


def _linear_fit(x, y):
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef, float(resid @ resid)


def fit_power_law(t, hs, window: float = 1.0) -> RateFit:
    """Fit hs ≈ A (T* - t)^{-κ} on the last ``window`` fraction of samples.

    T* is profiled by bounded Brent over z = log(T* - t_last) and then polished
    jointly with (log A, κ) by nonlinear least squares.  ``not_blowup`` flags
    r² < 0.9 or T* pinned at the upper search bound.
    """
    t = np.asarray(t, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if not 0 < window <= 1:
        raise FitError("window must lie in (0, 1]")
    k = max(4, int(np.ceil(window * t.size)))
    if t.size < 4:
        raise FitError("need at least 4 samples")
    t, y = t[-k:], hs[-k:]
    if np.any(np.diff(t) <= 0) or np.any(np.diff(y) <= 0) or np.any(y <= 0):
        raise FitError("hs is not strictly increasing over the fit window")
    logy = np.log(y)
    span = t[-1] - t[0]
    t_last = t[-1]

    def rss(z):
        return _linear_fit(np.log(t_last + np.exp(z) - t), logy)[1]

    z_lo, z_hi = np.log(1e-9 * span), np.log(1e3 * span)
    zs = np.linspace(z_lo, z_hi, 121)
    vals = [rss(z) for z in zs]
    j = int(np.argmin(vals))
    res = minimize_scalar(rss, bounds=(zs[max(j - 1, 0)], zs[min(j + 1, zs.size - 1)]), method="bounded",
                          options={"xatol": 1e-12})
    z = float(res.x)
    (c0, c1), _ = _linear_fit(np.log(t_last + np.exp(z) - t), logy)

    def resid(q):
        return q[0] - q[1] * np.log(t_last + np.exp(q[2]) - t) - logy

    pol = least_squares(resid, [c0, -c1, z], xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    c0, kappa, z = pol.x
    sse = float(pol.fun @ pol.fun)
    sst = float(((logy - logy.mean()) ** 2).sum())
    r2 = 1.0 - sse / sst if sst > 0 else 0.0
    pinned = z >= z_hi - 1e-6
    with np.errstate(over="ignore"):
        t_star, amp = float(t_last + np.exp(z)), float(np.exp(c0))
    return RateFit(t_star, float(kappa), r2, amp, bool(r2 < 0.9 or pinned or not np.isfinite(amp)))


def blowup_rate_fit(traj, window: float = 0.3) -> RateFit:
    """Rate fit over the late-time fraction ``window`` of the diagnostics rows."""
    return fit_power_law(traj.column("t"), traj.column("hs"), window)


def limiting_profile(f: Field, gs: GroundState, s: float, t: float = 0.0) -> ProfileDistance:
    """Distance from Q of v(x) = ρ^{N/2} f(ρx + x_c) e^{iθ}, with ρ^s = ‖Q‖_{Ḣ^s}/‖f‖_{Ḣ^s}.

    x_c maximises the window mass over a ball of radius ρ (the unit scale of
    Q), and θ minimises the L² distance over phases.
    """
    dim = f.grid.dim
    if not gs.matches(s, dim, 2.0 * s / dim):
        raise DependencyError(f"ground state does not match (s={s:g}, N={dim}, p={2 * s / dim:g})")
    if l2_norm(f) == 0:
        raise DomainError("zero field")
    q = gs.profile
    hs_q = np.sqrt(gs.grad_sq)
    rho = (hs_q / hs_seminorm(f, s)) ** (1.0 / s)
    a = min(max(rho, 2 * f.grid.dx), f.grid.half_length)
    xc = concentration_mass(f, a).center
    pts = [rho * q.grid.axis + xc[j] for j in range(dim)]
    v = rho ** (dim / 2) * evaluate_on_axes(f, pts)
    z = np.sum(q.values.conj() * v)
    theta = float(np.mod(-np.angle(z), TWO_PI))
    if TWO_PI - theta < 1e-12:
        theta = 0.0
    diff = Field(q.grid, v * np.exp(1j * theta) - q.values)
    return ProfileDistance(t, float(rho), theta, l2_norm(diff), hs_seminorm(diff, s))


def profile_series(traj, gs: GroundState, s: float, resolved_tol: float | None = 1e-6) -> list:
    out = []
    for t, f in traj.snapshots:
        if resolved_tol is not None and not is_resolved(f, resolved_tol):
            continue
        out.append(limiting_profile(f, gs, s, t))
    return out


def write_concentration_csv(path, samples) -> Path:
    path = Path(path)
    dim = len(samples[0].center) if samples else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "a", *[f"c{j}" for j in range(dim)], "window_mass", "clamped"])
        for c in samples:
            w.writerow([repr(c.t), repr(c.a), *[repr(x) for x in c.center], repr(c.window_mass), int(c.clamped)])
    return path


def write_profile_csv(path, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "rho", "theta", "l2_dist", "hs_dist"])
        for r in rows:
            w.writerow([repr(r.t), repr(r.rho), repr(r.theta), repr(r.l2_dist), repr(r.hs_dist)])
    return path
