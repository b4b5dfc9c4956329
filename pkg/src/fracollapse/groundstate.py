"""Ground states of (-Δ)^s Q + Q = |Q|^{2p} Q and the sharp Gagliardo-Nirenberg constant."""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import ConvergenceError, DegenerateSolutionError, DomainError
from .spectral import (
    Field,
    Grid,
    energy_critical_bound,
    hs_seminorm,
    l2_norm,
    lp_power,
    read_snapshot,
    write_snapshot,
)

log = logging.getLogger(__name__)

CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class GroundState:
    profile: Field
    s: float
    dim: int
    p: float
    mass_sq: float
    grad_sq: float
    lp_power: float
    c_opt: float
    residual: float
    iterations: int = 0
    residual_history: tuple = field(default=(), repr=False)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    @property
    def mass(self) -> float:
        return float(np.sqrt(self.mass_sq))

    @property
    def is_mass_critical(self) -> bool:
        return abs(self.p * self.dim - 2 * self.s) <= CRITICAL_TOL

    def expected_ratios(self) -> tuple:
        """(grad_sq/mass_sq, lp_power/mass_sq) predicted by the Pohozaev relations."""
        d = 2 * self.s * (self.p + 1) - self.p * self.dim
        return self.p * self.dim / d, 2 * self.s * (self.p + 1) / d

    def relation_errors(self) -> tuple:
        """Relative violation of the two Pohozaev relations."""
        a, b = self.expected_ratios()
        return (
            abs(self.grad_sq / self.mass_sq / a - 1.0),
            abs(self.lp_power / self.mass_sq / b - 1.0),
        )

    def matches(self, s: float, dim: int, p: float, tol: float = 1e-9) -> bool:
        return self.dim == dim and abs(self.s - s) <= tol and abs(self.p - p) <= tol


def _check_exponent(s, dim, p):
    if not 0.0 < s <= 1.0:
        raise DomainError(f"s must lie in (0, 1], got {s}")
    if p <= 0 or p >= energy_critical_bound(s, dim):
        raise DomainError(f"p={p} outside (0, 2s/(N-2s)) for s={s}, N={dim}")


def _symmetrize(u: np.ndarray) -> np.ndarray:
    """Average over the grid's reflections and axis permutations about the box centre."""
    dim = u.ndim
    acc = np.zeros_like(u)
    count = 0
    for perm in itertools.permutations(range(dim)):
        v = np.transpose(u, perm)
        for flips in itertools.product((False, True), repeat=dim):
            w = v
            for ax, flip in enumerate(flips):
                if flip:
                    # x -> -x maps index j to (n - j) mod n
                    w = np.roll(np.flip(w, ax), 1, ax)
            acc += w
            count += 1
    return acc / count


def sharp_constant_from(s: float, dim: int, p: float, mass_sq: float) -> float:
    pn = p * dim
    if abs(pn - 2 * s) <= CRITICAL_TOL:
        return (p + 1) / mass_sq**p
    d = 2 * s * (p + 1) - pn
    return (d / pn) ** (pn / (2 * s)) * 2 * s * (p + 1) / (d * mass_sq**p)


def sharp_constant(gs: GroundState) -> float:
    """Optimal constant of ∫|u|^{2p+2} <= C ||(-Δ)^{s/2}u||^{pN/s} ||u||^{2p+2-pN/s}."""
    return sharp_constant_from(gs.s, gs.dim, gs.p, gs.mass_sq)


def gn_quotient(f: Field, s: float, p: float) -> float:
    """Gagliardo-Nirenberg quotient; bounded above by the sharp constant."""
    m = l2_norm(f)
    if m == 0.0:
        raise DomainError("Gagliardo-Nirenberg quotient of the zero field")
    h = hs_seminorm(f, s)
    if h == 0.0:
        raise DomainError("field has vanishing H^s seminorm")
    pn_s = p * f.grid.dim / s
    return lp_power(f, p) / (h**pn_s * m ** (2 * p + 2 - pn_s))


def _petviashvili(s, p, grid, amplitude, width, tol, max_iter, symmetrize_every):
    sym = grid.multiplier(2.0 * s) + 1.0
    alpha = (2 * p + 1) / (2 * p)
    u = amplitude * np.exp(-(grid.radius**2) / width**2)
    u0_norm = np.linalg.norm(u)
    history = []
    for it in range(1, max_iter + 1):
        nu = np.abs(u) ** (2 * p) * u
        uh = sfft.fftn(u)
        nh = sfft.fftn(nu)
        unorm = np.linalg.norm(u)
        if unorm == 0.0:
            raise DegenerateSolutionError("iterate vanished", np.inf, it)
        # residual of the current iterate, reusing the transforms
        res = np.linalg.norm(sfft.ifftn(sym * uh).real - nu) / unorm
        history.append(float(res))
        if res <= tol:
            return u, history
        num = np.sum(sym * (uh.real**2 + uh.imag**2))
        den = np.sum(nh.real * uh.real + nh.imag * uh.imag)
        gamma = num / den if den > 0 else np.nan
        if not np.isfinite(gamma) or gamma <= 0:
            raise DegenerateSolutionError("stabilising factor lost positivity", res, it)
        u = np.abs(sfft.ifftn(gamma**alpha * nh / sym).real)
        if symmetrize_every and grid.dim >= 2 and it % symmetrize_every == 0:
            u = _symmetrize(u)
        norm = np.linalg.norm(u)
        if not np.isfinite(norm) or norm < 1e-12 * u0_norm or norm > 1e12 * u0_norm:
            raise DegenerateSolutionError("iterate collapsed to zero or diverged", res, it)
    raise ConvergenceError(
        f"ground state not converged in {max_iter} iterations (residual {history[-1]:.3e})",
        history[-1],
        max_iter,
    )


def solve_ground_state(
    s: float,
    dim: int,
    p: float,
    grid: Grid,
    tol: float = 1e-10,
    max_iter: int = 5000,
    *,
    width: float = 1.0,
    amplitude: float = 1.0,
    symmetrize_every: int = 20,
    max_retries: int = 4,
) -> GroundState:
    """Petviashvili iteration for the positive radial ground state on ``grid``.

    A collapse to zero or a blow-up of the iterate triggers a restart with the
    initial amplitude rescaled (x2, x1/2, x4, x1/4).  Running out of
    iterations raises :class:`ConvergenceError` without retrying.
    """
    _check_exponent(s, dim, p)
    if grid.dim != dim:
        raise DomainError(f"grid dimension {grid.dim} does not match dim={dim}")
    factors = [1.0, 2.0, 0.5, 4.0, 0.25][: max_retries + 1]
    last = None
    for factor in factors:
        try:
            u, history = _petviashvili(
                s, p, grid, amplitude * factor, width, tol, max_iter, symmetrize_every
            )
            break
        except DegenerateSolutionError as exc:
            log.info("ground state attempt with amplitude x%g degenerated: %s", factor, exc)
            last = exc
    else:
        raise last

    profile = Field(grid, u)
    mass_sq = l2_norm(profile) ** 2
    gs = GroundState(
        profile=profile,
        s=s,
        dim=dim,
        p=p,
        mass_sq=mass_sq,
        grad_sq=hs_seminorm(profile, s) ** 2,
        lp_power=lp_power(profile, p),
        c_opt=sharp_constant_from(s, dim, p, mass_sq),
        residual=history[-1],
        iterations=len(history),
        residual_history=tuple(history),
    )
    log.info(
        "ground state s=%g N=%d p=%g: %d iterations, residual %.2e, mass %.10g",
        s, dim, p, gs.iterations, gs.residual, mass_sq,
    )
    return gs


def ground_state_from_field(profile: Field, s: float, p: float, residual: float = float("nan")) -> GroundState:
    mass_sq = l2_norm(profile) ** 2
    dim = profile.grid.dim
    return GroundState(
        profile=profile,
        s=s,
        dim=dim,
        p=p,
        mass_sq=mass_sq,
        grad_sq=hs_seminorm(profile, s) ** 2,
        lp_power=lp_power(profile, p),
        c_opt=sharp_constant_from(s, dim, p, mass_sq),
        residual=residual,
    )


CERTIFICATE_COLUMNS = ("s", "dim", "p", "mass_sq", "grad_sq", "lp_power", "c_opt", "residual",
                       "relation_grad_err", "relation_lp_err", "iterations")


def save_ground_state(gs: GroundState, path) -> tuple:
    """Writes the profile (extended snapshot header) and a one-row certificate CSV."""
    path = Path(path)
    write_snapshot(path, gs.profile, 0.0, ground_state=(gs.s, gs.p, gs.c_opt, gs.residual))
    cert = path.with_suffix(".csv")
    e23, e24 = gs.relation_errors()
    row = (gs.s, gs.dim, gs.p, gs.mass_sq, gs.grad_sq, gs.lp_power, gs.c_opt, gs.residual, e23, e24, gs.iterations)
    with open(cert, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CERTIFICATE_COLUMNS)
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path, cert


def load_ground_state(path) -> GroundState:
    profile, _, extra = read_snapshot(path)
    if extra is None:
        raise DomainError(f"{path} is a plain snapshot, not a ground state")
    return ground_state_from_field(profile, extra["s"], extra["p"], extra["residual"])
