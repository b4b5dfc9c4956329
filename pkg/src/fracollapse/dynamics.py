"""Strang-split time stepping of the fractional NLS with conservation monitoring.

Both substeps are exact maps: the nonlinear one is a pointwise phase rotation
and the linear one a Fourier multiplier.  The splitting error is the only
discretisation error, and the discrete mass is conserved to rounding.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, FracCollapseError
from .groundstate import GroundState
from .spectral import Field, Grid, ModelParams, hs_seminorm, lp_power

log = logging.getLogger(__name__)


class StopReason(enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    GRADIENT_BLOWUP = "GradientBlowupStop"
    MASS_DRIFT = "MassDriftAbort"


class BlowupSignal(FracCollapseError, FloatingPointError):
    """Raised by a step whose nonlinear phase overflowed."""


@dataclass
class SimConfig:
    dt: float
    t_end: float
    snapshot_every: int = 0
    diag_every: int = 1
    stop_gradient_factor: float = 10.0
    stop_mass_drift: float = 1e-8
    adapt: bool = False
    adapt_growth: float = 2.0
    dt_min: float = 1e-9

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if not self.stop_gradient_factor > 1:
            raise ConfigError("stop_gradient_factor must exceed 1")
        if self.diag_every < 1 or self.snapshot_every < 0:
            raise ConfigError("diag_every must be >= 1 and snapshot_every >= 0")
        if not self.adapt_growth > 1:
            raise ConfigError("adapt_growth must exceed 1")
        if not self.stop_mass_drift > 0 or not self.dt_min > 0:
            raise ConfigError("stop_mass_drift and dt_min must be positive")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    hs: float
    lp1: float
    lp2: float
    virial: float | None = None
    conc_mass: float | None = None
    dt: float = float("nan")


DIAGNOSTICS_COLUMNS = ("t", "mass", "energy", "hs", "lp1", "lp2", "virial", "conc_mass")


@dataclass
class TrajectoryResult:
    final_field: Field
    stop_reason: StopReason
    t_stop: float
    diagnostics: list
    snapshots: list = field(default_factory=list)  # (t, Field)
    params: ModelParams | None = None
    steps: int = 0
    notes: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.diagnostics])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


def _phase_step(u: np.ndarray, tau: float, params: ModelParams) -> np.ndarray:
    a2 = u.real**2 + u.imag**2
    with np.errstate(over="ignore", invalid="ignore"):
        pot = params.lambda2 * a2**params.p2
        if params.lambda1:
            pot = pot + params.lambda1 * a2**params.p1
    if not np.isfinite(pot).all():
        raise BlowupSignal("nonlinear potential overflowed")
    return u * np.exp(1j * tau * pot)


def _strang(u: np.ndarray, dt: float, params: ModelParams, propagator: np.ndarray) -> np.ndarray:
    u = _phase_step(u, 0.5 * dt, params)
    u = sfft.ifftn(propagator * sfft.fftn(u))
    return _phase_step(u, 0.5 * dt, params)


def linear_propagator(grid: Grid, s: float, dt: float) -> np.ndarray:
    return np.exp(-1j * dt * grid.multiplier(2.0 * s))


def step_strang(f: Field, dt: float, params: ModelParams) -> Field:
    """One Strang step: half nonlinear phase, exact linear flow, half nonlinear phase."""
    if dt == 0:
        return f
    u = _strang(f.values, dt, params, linear_propagator(f.grid, params.s, dt))
    return Field(f.grid, u)


def _diagnostics(u, grid, t, dt, params, weight, conc_delta):
    f = Field(grid, u)
    hs = hs_seminorm(f, params.s)
    lp1 = lp_power(f, params.p1)
    lp2 = lp_power(f, params.p2)
    mass = float(np.sum(f.abs2) * grid.cell_volume)
    e = 0.5 * hs**2 - params.lambda1 / (2 * params.p1 + 2) * lp1 - params.lambda2 / (2 * params.p2 + 2) * lp2
    vir = None
    if weight is not None:
        from .virial import localized_virial

        vir = localized_virial(f, weight)
    conc = None
    if conc_delta is not None:
        from .blowup import concentration_mass, window_radius

        a, _ = window_radius(hs, params.s, conc_delta, grid)
        conc = concentration_mass(f, a).window_mass
    return DiagnosticsRecord(t, mass, e, hs, lp1, lp2, vir, conc, dt)


def run(
    u0: Field,
    params: ModelParams,
    config: SimConfig,
    weight=None,
    *,
    conc_delta: float | None = None,
) -> TrajectoryResult:
    """Evolve ``u0`` until ``t_end`` or a stop condition.

    Stops with GradientBlowupStop once the Ḣ^s seminorm exceeds
    ``stop_gradient_factor`` times its initial value, when the adaptive step
    would fall below ``dt_min``, or when the nonlinear phase overflows.  The
    relative mass drift is checked after every step.
    """
    grid = u0.grid
    s = params.s
    u = u0.values.copy()
    dv = grid.cell_volume
    mass0 = float(np.sum(u.real**2 + u.imag**2) * dv)
    hs0 = hs_seminorm(u0, s)
    mult = grid.multiplier(2.0 * s)
    dt = config.dt
    prop = np.exp(-1j * dt * mult)
    hs_ref = hs0
    t = 0.0
    step = 0
    records = [_diagnostics(u, grid, t, dt, params, weight, conc_delta)]
    snapshots = [(t, Field(grid, u))] if config.snapshot_every else []
    reason = StopReason.REACHED_T_END
    notes = []
    t_tol = 1e-12 * config.t_end

    while t < config.t_end - t_tol:
        h = min(dt, config.t_end - t)
        step_prop = prop if h == dt else np.exp(-1j * h * mult)
        try:
            u_new = _strang(u, h, params, step_prop)
        except BlowupSignal as exc:
            reason = StopReason.GRADIENT_BLOWUP
            notes.append(f"t={t:.12g}: {exc}")
            break
        uhat = sfft.fftn(u_new)
        ah = uhat.real**2 + uhat.imag**2
        hs = float(np.sqrt(np.sum(mult * ah) * dv / grid.size))
        mass = float(np.sum(u_new.real**2 + u_new.imag**2) * dv)
        if not (np.isfinite(hs) and np.isfinite(mass)):
            reason = StopReason.GRADIENT_BLOWUP
            notes.append(f"t={t:.12g}: non-finite state")
            break
        u = u_new
        t += h
        step += 1
        drift = abs(mass - mass0) / mass0
        if drift > config.stop_mass_drift:
            reason = StopReason.MASS_DRIFT
            notes.append(f"relative mass drift {drift:.3e} exceeds {config.stop_mass_drift:.1e}")
            break
        if hs > config.stop_gradient_factor * hs0:
            reason = StopReason.GRADIENT_BLOWUP
            break
        if step % config.diag_every == 0:
            records.append(_diagnostics(u, grid, t, h, params, weight, conc_delta))
        if config.snapshot_every and step % config.snapshot_every == 0:
            snapshots.append((t, Field(grid, u)))
        if config.adapt and hs > config.adapt_growth * hs_ref:
            dt *= 0.5
            hs_ref = hs
            if dt < config.dt_min:
                reason = StopReason.GRADIENT_BLOWUP
                notes.append(f"adaptive step fell below dt_min={config.dt_min:g}")
                break
            prop = np.exp(-1j * dt * mult)
            log.debug("t=%.6g hs=%.6g: dt halved to %.3g", t, hs, dt)

    if records[-1].t < t:
        records.append(_diagnostics(u, grid, t, dt, params, weight, conc_delta))
    if config.snapshot_every and snapshots[-1][0] < t:
        snapshots.append((t, Field(grid, u)))
    log.info("run stopped at t=%.6g after %d steps: %s", t, step, reason.value)
    return TrajectoryResult(
        final_field=Field(grid, u),
        stop_reason=reason,
        t_stop=t,
        diagnostics=records,
        snapshots=snapshots,
        params=params,
        steps=step,
        notes=notes,
    )


def write_diagnostics_csv(path, records) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTICS_COLUMNS)
        for r in records:
            w.writerow(["" if getattr(r, c) is None else repr(float(getattr(r, c))) for c in DIAGNOSTICS_COLUMNS])
    return path


def read_diagnostics_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {k: (None if row[k] == "" else float(row[k])) for k in DIAGNOSTICS_COLUMNS}
            out.append(DiagnosticsRecord(**vals))
    return out


# initial data -----------------------------------------------------------


def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 1.0, center=None, chirp: float = 0.0) -> Field:
    """amplitude * exp(-|x-c|^2/width^2) * exp(-i chirp |x-c|^2 / 2); chirp > 0 focuses."""
    c = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
    r2 = sum((x - cj) ** 2 for x, cj in zip(grid.coords(), c))
    return Field(grid, amplitude * np.exp(-r2 / width**2) * np.exp(-0.5j * chirp * r2))


def ring(grid: Grid, amplitude: float = 1.0, radius: float = 2.0, width: float = 0.5) -> Field:
    return Field(grid, amplitude * np.exp(-((grid.radius - radius) ** 2) / width**2))


def scaled_ground_state(gs: GroundState, c: complex = 1.0, rho: float = 1.0) -> Field:
    """c ρ^{N/2} Q(ρx), sampled exactly on the ground-state grid shrunk by ρ."""
    grid = gs.grid.scaled(rho)
    return Field(grid, c * rho ** (gs.dim / 2) * gs.profile.values)


def random_bumps(grid: Grid, seed: int, count: int = 3, spread: float | None = None) -> Field:
    """Sum of randomly placed, randomly phased Gaussians; deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    spread = 0.3 * grid.half_length if spread is None else spread
    coords = grid.coords()
    u = np.zeros(grid.shape, dtype=complex)
    for _ in range(count):
        c = rng.uniform(-spread, spread, grid.dim)
        w = rng.uniform(0.5, 2.0)
        amp = rng.uniform(0.2, 2.0) * np.exp(2j * np.pi * rng.uniform())
        k = rng.normal(0.0, 1.0, grid.dim)
        r2 = sum((x - cj) ** 2 for x, cj in zip(coords, c))
        phase = sum(kj * x for kj, x in zip(k, coords))
        u += amp * np.exp(-r2 / w**2 + 1j * phase)
    return Field(grid, u)
