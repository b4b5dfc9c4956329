"""Simulation and analysis toolkit for the fractional NLS with combined powers

    i u_t - (-Δ)^s u + λ1|u|^{2p1}u + λ2|u|^{2p2}u = 0

on periodic boxes: ground states and sharp constants, threshold
classification of initial data, split-step evolution, and blow-up diagnostics.
"""

__version__ = "0.1.0"

from .errors import FracCollapseError  # noqa: E402
from .spectral import Field, Grid, ModelParams, energy, frac_laplacian, hs_seminorm, l2_norm  # noqa: E402
from .groundstate import GroundState, gn_quotient, sharp_constant, solve_ground_state  # noqa: E402
from .thresholds import Classification, ThresholdReport, classify  # noqa: E402
from .dynamics import SimConfig, StopReason, TrajectoryResult, run, step_strang  # noqa: E402
from .virial import VirialWeight, localized_virial, make_weight, virial_rate  # noqa: E402
from .blowup import blowup_rate_fit, concentration_mass, concentration_series, limiting_profile  # noqa: E402

__all__ = [
    "FracCollapseError", "Field", "Grid", "ModelParams", "energy", "frac_laplacian", "hs_seminorm",
    "l2_norm", "GroundState", "gn_quotient", "sharp_constant", "solve_ground_state", "Classification",
    "ThresholdReport", "classify", "SimConfig", "StopReason", "TrajectoryResult", "run", "step_strang",
    "VirialWeight", "localized_virial", "make_weight", "virial_rate", "blowup_rate_fit",
    "concentration_mass", "concentration_series", "limiting_profile",
]
