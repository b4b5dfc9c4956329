"""Threshold curves, their roots, and hypothesis matching for initial data.

``classify`` only reports which blow-up/global-existence criterion has its
hypotheses met by the sampled data.  It never asserts that a blow-up actually
happens; :mod:`fracollapse.dynamics` is the empirical check.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DependencyError, DomainError, PreconditionError, RootBracketError
from .groundstate import GroundState
from .spectral import Field, ModelParams, energy, evaluate_on_axes, hs_seminorm, l2_norm, lp_power

SLACK = 1e-12
PARAM_TOL = 1e-12


class Regime(enum.Enum):
    MASS_CRITICAL_P1 = "MassCritical_p1Critical"
    SUPERCRITICAL_BOTH = "Supercritical_both"
    SHARP_MASS = "SharpMass"
    ENERGY_CRITERION = "EnergyCriterion"


class Classification(enum.Enum):
    GLOBAL = "GlobalExistence"
    FINITE_TIME_BLOWUP = "FiniteTimeBlowupCandidate"
    INFINITE_TIME_GROWTH = "InfiniteTimeGrowthCandidate"
    UNDETERMINED = "Undetermined"


REPORT_COLUMNS = (
    "regime", "classification", "criterion", "mass", "mass_sq", "energy", "hs",
    "y0", "h_at_y0", "y1", "g_at_y1", "energy_threshold", "case3_constant",
)


@dataclass
class ThresholdReport:
    classification: Classification
    regime: Regime | None = None
    criterion: str = ""
    mass: float = float("nan")
    energy: float = float("nan")
    hs: float = float("nan")
    y0: float | None = None
    h_at_y0: float | None = None
    y1: float | None = None
    g_at_y1: float | None = None
    energy_threshold: float | None = None
    case3_constant: float | None = None
    notes: list = field(default_factory=list)

    @property
    def mass_sq(self) -> float:
        return self.mass**2

    def as_dict(self) -> dict:
        return {
            "regime": self.regime.value if self.regime else "",
            "classification": self.classification.value,
            "criterion": self.criterion,
            "mass": self.mass,
            "mass_sq": self.mass_sq,
            "energy": self.energy,
            "hs": self.hs,
            "y0": self.y0,
            "h_at_y0": self.h_at_y0,
            "y1": self.y1,
            "g_at_y1": self.g_at_y1,
            "energy_threshold": self.energy_threshold,
            "case3_constant": self.case3_constant,
        }

    def to_text(self) -> str:
        lines = []
        for key, val in self.as_dict().items():
            lines.append(f"{key}={_fmt(val)}")
        for i, note in enumerate(self.notes):
            lines.append(f"note{i}={note}")
        return "\n".join(lines) + "\n"

    def to_csv_row(self) -> list:
        d = self.as_dict()
        return [_fmt(d[c]) for c in REPORT_COLUMNS]


def _fmt(val) -> str:
    if val is None:
        return ""
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _lt(a: float, b: float) -> bool:
    return a < b + SLACK * max(abs(a), abs(b))


def _gt(a: float, b: float) -> bool:
    return a > b - SLACK * max(abs(a), abs(b))


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= PARAM_TOL * max(1.0, abs(a), abs(b))


def _check_y(y):
    if np.any(np.asarray(y) < 0):
        raise DomainError("y must be nonnegative")


def h_curve(y, mass: float, C1: float, C2: float, params: ModelParams):
    """Lower bound E >= h(||(-Δ)^{s/2}u||) when p1 = 2s/N; ``mass`` is ||u0||_{L^2}."""
    if not _close(params.p1 * params.dim, 2 * params.s):
        raise PreconditionError("h_curve needs p1 = 2s/N")
    _check_y(y)
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    e2 = p2 * n / s
    y = np.asarray(y, dtype=float)
    return (
        0.5 * y**2
        - C1 / (2 * p1 + 2) * mass ** (2 * p1) * y**2
        - C2 / (2 * p2 + 2) * mass ** (2 * p2 + 2 - e2) * y**e2
    )


def _h_parts(mass, C1, C2, params):
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    e2 = p2 * n / s
    num = 1.0 - C1 * mass ** (2 * p1) / (p1 + 1)
    den = e2 * C2 / (2 * p2 + 2) * mass ** (2 * p2 + 2 - e2)
    return num, den


def y0_root(mass: float, C1: float, C2: float, params: ModelParams) -> float:
    """Positive critical point of h."""
    if not _close(params.p1 * params.dim, 2 * params.s):
        raise PreconditionError("y0_root needs p1 = 2s/N")
    num, den = _h_parts(mass, C1, C2, params)
    if num <= 0:
        raise PreconditionError(
            f"1 - C1 m^(2p1)/(p1+1) = {num:.6g} <= 0: mass at or above the p1 ground-state mass"
        )
    s, n, p2 = params.s, params.dim, params.p2
    return float((num / den) ** (s / (p2 * n - 2 * s)))


def h_max(mass: float, C1: float, C2: float, params: ModelParams) -> float:
    """Closed form of h(y0)."""
    num, _ = _h_parts(mass, C1, C2, params)
    y0 = y0_root(mass, C1, C2, params)
    n, s, p2 = params.dim, params.s, params.p2
    return float((n * p2 - 2 * s) / (2 * n * p2) * num * y0**2)


def f_curve(y, mass: float, C1: float, C2: float, params: ModelParams):
    """g'(y)/y for the case p1 > 2s/N; decreasing from f(0) = 1."""
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    if not p1 * n > 2 * s:
        raise PreconditionError("f_curve needs p1 > 2s/N")
    _check_y(y)
    e1, e2 = p1 * n / s, p2 * n / s
    y = np.asarray(y, dtype=float)
    return (
        1.0
        - C1 / (2 * p1 + 2) * e1 * mass ** (2 * p1 + 2 - e1) * y ** (e1 - 2)
        - C2 / (2 * p2 + 2) * e2 * mass ** (2 * p2 + 2 - e2) * y ** (e2 - 2)
    )


def g_curve(y, mass: float, C1: float, C2: float, params: ModelParams):
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    _check_y(y)
    e1, e2 = p1 * n / s, p2 * n / s
    y = np.asarray(y, dtype=float)
    return (
        0.5 * y**2
        - C1 / (2 * p1 + 2) * mass ** (2 * p1 + 2 - e1) * y**e1
        - C2 / (2 * p2 + 2) * mass ** (2 * p2 + 2 - e2) * y**e2
    )


def y1_root(mass: float, C1: float, C2: float, params: ModelParams) -> float:
    """Unique positive zero of f by bracket doubling then bisection."""
    f = lambda y: float(f_curve(y, mass, C1, C2, params))  # noqa: E731
    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        lo, hi = hi, 2.0 * hi
        if hi > 2.0**60:
            raise RootBracketError("no sign change of f below 2^60; inputs inconsistent")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fm > 0:
            lo = mid
        else:
            hi = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def energy_threshold_case2(y1: float, params: ModelParams) -> float:
    p1, n, s = params.p1, params.dim, params.s
    return (p1 * n - 2 * s) / (2 * p1 * n) * y1**2


def scaled_data_energy(c: complex, rho: float, gs: GroundState, params: ModelParams) -> float:
    """Closed-form E(c ρ^{N/2} Q(ρx)) using the Pohozaev identity of Q."""
    _require_sharp_mass_regime(params)
    if not gs.matches(params.s, params.dim, params.p2):
        raise DependencyError("ground state does not match (s, N, p2)")
    a = abs(c)
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    q_p1 = lp_power(gs.profile, p1)
    return float(
        -(a**2 * rho ** (2 * s) / 2) * (a ** (2 * p2) - 1) * gs.grad_sq
        + a ** (2 * p1 + 2) * rho ** (n * p1) / (2 * p1 + 2) * q_p1
    )


def negative_energy_rho(c: complex, gs: GroundState, params: ModelParams) -> float:
    """Smallest ρ with E(c ρ^{N/2} Q(ρx)) < 0 (strictly above it the energy is negative)."""
    _require_sharp_mass_regime(params)
    a = abs(c)
    if a <= 1:
        raise PreconditionError("negative energy needs |c| > 1")
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    ratio = a ** (2 * p1) * lp_power(gs.profile, p1) / ((p1 + 1) * (a ** (2 * p2) - 1) * gs.grad_sq)
    return float(ratio ** (1.0 / (2 * s - n * p1)))


def _require_sharp_mass_regime(params: ModelParams):
    if not _sharp_mass_hypotheses(params):
        raise PreconditionError("requires λ1 = -1, λ2 = 1, 0 < p1 < 2s/N, p2 = 2s/N")


def _sharp_mass_hypotheses(params: ModelParams) -> bool:
    crit = params.mass_critical_p
    return (
        _close(params.lambda1, -1.0)
        and _close(params.lambda2, 1.0)
        and params.p1 < crit
        and _close(params.p2, crit)
    )


def default_case3_constant(params: ModelParams) -> float:
    """Constant C of the criterion E(u0) + C M(u0) < 0.

    Follows the proof chain: θ is taken midway in (2s/(p2 N), 1), δ at the
    boundary of its smallness condition, C(δ) the optimal Young constant in
    a^{2p1+2} <= C(δ) a^2 + δ a^{2p2+2}; the coefficient of M is then
    normalised by that of E.
    """
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    l1, l2 = params.lambda1, params.lambda2
    if not (l1 > 0 and l2 > 0 and p2 * n > 2 * s):
        raise PreconditionError("case-3 constant needs λ1, λ2 > 0 and p2 > 2s/N")
    theta = 0.5 * (1.0 + 2 * s / (p2 * n))
    delta = l2 * p2 * (1 - theta) * (p1 + 1) / (theta * l1 * (p2 - p1) * (p2 + 1))
    c_delta = (1 - p1 / p2) * (p1 / (delta * p2)) ** (p1 / (p2 - p1))
    return float(c_delta * l1 * (p2 - p1) / (2 * p2 * (p1 + 1)))


def find_ground_state(library, s: float, dim: int, p: float) -> GroundState:
    for gs in library:
        if gs.matches(s, dim, p):
            return gs
    raise DependencyError(f"missing ground state for (s={s:g}, N={dim}, p={p:g})")


def _quadratic_peak(values: np.ndarray, idx: int) -> float:
    n = values.size
    ym, y0, yp = values[(idx - 1) % n], values[idx], values[(idx + 1) % n]
    den = ym - 2 * y0 + yp
    return 0.0 if den == 0 else 0.5 * (ym - yp) / den


def peak_center(f: Field) -> np.ndarray:
    """Location of max |f|, refined per axis by a three-point parabola."""
    g = f.grid
    a = f.abs2
    idx = np.unravel_index(int(np.argmax(a)), a.shape)
    center = []
    for ax in range(g.dim):
        sl = list(idx)
        sl[ax] = slice(None)
        offset = _quadratic_peak(a[tuple(sl)], idx[ax])
        center.append(g.axis[idx[ax]] + offset * g.dx)
    return np.array(center)


def scaled_family_fit(u0: Field, gs: GroundState):
    """Best fit of u0 by c ρ^{N/2} Q(ρ(x - x0)); returns (c, rho, x0, relative mismatch)."""
    s, n = gs.s, gs.dim
    m = l2_norm(u0)
    h = hs_seminorm(u0, s)
    c_abs = m / gs.mass
    rho = (h / (c_abs * np.sqrt(gs.grad_sq))) ** (1.0 / s)
    x0 = peak_center(u0)
    pts = [rho * (u0.grid.axis - x0[j]) for j in range(n)]
    cand = rho ** (n / 2) * evaluate_on_axes(gs.profile, pts)
    norm_c = np.sum(np.abs(cand) ** 2)
    c = np.sum(np.conj(cand) * u0.values) / norm_c
    mismatch = np.linalg.norm(u0.values - c * cand) / np.linalg.norm(u0.values)
    return complex(c), float(rho), x0, float(mismatch)


def classify(
    u0: Field,
    params: ModelParams,
    gs_library,
    *,
    case3_constant: float | None = None,
    family_tol: float = 1e-6,
) -> ThresholdReport:
    """Match the data against the sharp-mass, sharp-energy and negative-energy criteria, in that order."""
    s, n, p1, p2 = params.s, params.dim, params.p1, params.p2
    l1, l2 = params.lambda1, params.lambda2
    mass = l2_norm(u0)
    mass_sq = mass**2
    e0 = energy(u0, params)
    hs = hs_seminorm(u0, s)
    rep = ThresholdReport(Classification.UNDETERMINED, mass=mass, energy=e0, hs=hs)
    crit = params.mass_critical_p
    if not params.in_proven_regime:
        rep.notes.append("parameters outside the proven regime (needs N >= 2, 1/2 < s < 1)")
    rep.notes.append("the criteria assume radial H^{2s} data; sampled data is not certified")

    # sharp threshold mass
    if _sharp_mass_hypotheses(params):
        rep.regime = Regime.SHARP_MASS
        q = find_ground_state(gs_library, s, n, p2)
        if mass < q.mass:
            rep.classification = Classification.GLOBAL
            rep.criterion = "sharp_mass_below"
            return rep
        c, rho, _, mismatch = scaled_family_fit(u0, q)
        if mismatch <= family_tol and abs(c) >= 1.0 - SLACK:
            rep.criterion = "sharp_mass_scaled_Q"
            if e0 < 0:
                rep.classification = Classification.FINITE_TIME_BLOWUP
                rep.notes.append("finite-time blow-up or infinite-time growth >= C t^s")
            else:
                rep.classification = Classification.INFINITE_TIME_GROWTH
                rep.notes.append("scaled ground-state data with E(u0) >= 0; negative-energy step not met")
            rep.notes.append(f"fitted |c|={abs(c):.12g} rho={rho:.12g} mismatch={mismatch:.3e}")
        return rep

    # sharp energy thresholds
    sharp_energy = (
        _close(l1, 1.0) and _close(l2, 1.0)
        and p1 * n >= 2 * s * (1 - PARAM_TOL)
        and p2 < 2 * s
    )
    if sharp_energy:
        q1 = find_ground_state(gs_library, s, n, p1)
        q2 = find_ground_state(gs_library, s, n, p2)
        if _close(p1 * n, 2 * s):
            rep.regime = Regime.MASS_CRITICAL_P1
            if mass < q1.mass:
                rep.y0 = y0_root(mass, q1.c_opt, q2.c_opt, params)
                rep.h_at_y0 = h_max(mass, q1.c_opt, q2.c_opt, params)
                if _lt(e0, rep.h_at_y0):
                    if _lt(hs, rep.y0) and hs < rep.y0:
                        rep.classification, rep.criterion = Classification.GLOBAL, "sharp_energy_critical_p1"
                        return rep
                    if _gt(hs, rep.y0) and hs > rep.y0:
                        rep.classification, rep.criterion = Classification.FINITE_TIME_BLOWUP, "sharp_energy_critical_p1"
                        return rep
            else:
                rep.notes.append("mass not below the p1 ground-state mass; critical-p1 energy criterion inapplicable")
        else:
            rep.regime = Regime.SUPERCRITICAL_BOTH
            rep.y1 = y1_root(mass, q1.c_opt, q2.c_opt, params)
            rep.g_at_y1 = float(g_curve(rep.y1, mass, q1.c_opt, q2.c_opt, params))
            rep.energy_threshold = energy_threshold_case2(rep.y1, params)
            if _lt(e0, rep.energy_threshold):
                if hs < rep.y1:
                    rep.classification, rep.criterion = Classification.GLOBAL, "sharp_energy_supercritical"
                    return rep
                if hs > rep.y1:
                    rep.classification, rep.criterion = Classification.FINITE_TIME_BLOWUP, "sharp_energy_supercritical"
                    return rep

    # negative-energy criteria
    if l2 > 0 and p2 * n > 2 * s and p2 < 2 * s:
        if rep.regime is None:
            rep.regime = Regime.ENERGY_CRITERION
        fired = None
        if l1 > 0 and p1 * n > 2 * s and e0 < 0:
            fired = "negative_energy_focusing"
        elif l1 < 0 and e0 < 0:
            fired = "negative_energy_defocusing_p1"
        elif l1 > 0 and p1 * n <= 2 * s * (1 + PARAM_TOL):
            cst = default_case3_constant(params) if case3_constant is None else case3_constant
            rep.case3_constant = cst
            rep.notes.append("case-3 constant C is a configured choice, not fixed by the criterion")
            if e0 + cst * mass_sq < 0:
                fired = "negative_energy_shifted"
        if fired:
            rep.regime = Regime.ENERGY_CRITERION
            rep.classification, rep.criterion = Classification.FINITE_TIME_BLOWUP, fired
    return rep
