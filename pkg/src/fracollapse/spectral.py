"""Periodic grids, sampled fields and the Fourier-multiplier calculus on them.

The physical box is ``[-L, L)^dim`` sampled with ``n`` points per axis; the
origin sits at index ``n // 2``.  All transforms are unnormalised FFTs, so
discrete Plancherel reads ``sum |u|^2 dx^N = sum |u_hat|^2 dx^N / n^N``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import DataError, DomainError, InvalidFieldError

SNAPSHOT_MAGIC = b"FNLS"
SNAPSHOT_VERSION = 1
GROUND_STATE_VERSION = 2
_HEADER = struct.Struct("<4sIIIdd")
_GS_EXTRA = struct.Struct("<dddd")


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of i u_t - (-Δ)^s u + λ1|u|^{2p1}u + λ2|u|^{2p2}u = 0."""

    s: float
    dim: int
    p1: float
    p2: float
    lambda1: float = 0.0
    lambda2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise DomainError(f"s must lie in (0, 1], got {self.s}")
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not 0.0 < self.p1 < self.p2:
            raise DomainError(f"need 0 < p1 < p2, got p1={self.p1}, p2={self.p2}")
        if self.dim > 2 * self.s and self.p2 >= energy_critical_bound(self.s, self.dim):
            raise DomainError(
                f"p2={self.p2} is not below 2s/(N-2s)={energy_critical_bound(self.s, self.dim):.6g}"
            )

    @property
    def mass_critical_p(self) -> float:
        return 2.0 * self.s / self.dim

    @property
    def in_proven_regime(self) -> bool:
        """False for the validation-only modes (s = 1, s <= 1/2, or N = 1)."""
        return self.dim >= 2 and 0.5 < self.s < 1.0


def energy_critical_bound(s: float, dim: int) -> float:
    if dim <= 2 * s:
        return np.inf
    return 2.0 * s / (dim - 2.0 * s)


@dataclass(frozen=True)
class Grid:
    dim: int
    n: int
    half_length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 2 or self.n & (self.n - 1):
            raise DomainError(f"n must be a power of two, got {self.n}")
        if not self.half_length > 0:
            raise DomainError("half_length must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k = π m / L in FFT order; m = -n/2 is the Nyquist mode."""
        return 2.0 * np.pi * sfft.fftfreq(self.n, d=self.dx)

    def coords(self) -> tuple:
        """Sparse (broadcastable) coordinate arrays, one per axis."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij", sparse=True))

    def freqs(self) -> tuple:
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coords())) * np.ones(self.shape)

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(k * k for k in self.freqs()) * np.ones(self.shape)

    @lru_cache(maxsize=16)
    def multiplier(self, power: float) -> np.ndarray:
        """|ξ|^power, with the zero mode set to 0."""
        m = self.ksq ** (0.5 * power)
        m.flat[0] = 0.0
        m.setflags(write=False)
        return m

    def scaled(self, factor: float) -> "Grid":
        """Same sampling with the box shrunk by ``factor`` (x -> x / factor)."""
        return Grid(self.dim, self.n, self.half_length / factor)


class Field:
    """Complex samples on a :class:`Grid`, with a lazily computed spectrum.

    Values are copied on construction and exposed read-only.
    """

    __slots__ = ("grid", "_values", "_hat")

    def __init__(self, grid: Grid, values, *, _hat=None):
        arr = np.array(values, dtype=np.complex128, copy=True)
        if arr.shape != grid.shape:
            try:
                arr = np.broadcast_to(arr, grid.shape).copy()
            except ValueError:
                raise InvalidFieldError(f"values of shape {arr.shape} do not fit grid {grid.shape}")
        if not np.isfinite(arr).all():
            raise InvalidFieldError("field contains non-finite samples")
        arr.setflags(write=False)
        self.grid = grid
        self._values = arr
        self._hat = _hat

    @classmethod
    def from_hat(cls, grid: Grid, hat) -> "Field":
        hat = np.array(hat, dtype=np.complex128, copy=True)
        hat.setflags(write=False)
        return cls(grid, sfft.ifftn(hat), _hat=hat)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        return cls(grid, func(*grid.coords()))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            h = sfft.fftn(self._values)
            h.setflags(write=False)
            self._hat = h
        return self._hat

    @property
    def abs2(self) -> np.ndarray:
        v = self._values
        return v.real**2 + v.imag**2

    def integrate(self, density) -> float:
        return float(np.sum(density) * self.grid.cell_volume)

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise InvalidFieldError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values + other._values)
        return Field(self.grid, self._values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values - other._values)
        return Field(self.grid, self._values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values * other._values)
        return Field(self.grid, self._values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self._values)

    def conj(self) -> "Field":
        return Field(self.grid, self._values.conj())

    def shifted(self, shift) -> "Field":
        """Circular shift by whole grid cells along each axis."""
        shift = tuple(int(k) for k in np.broadcast_to(shift, (self.grid.dim,)))
        return Field(self.grid, np.roll(self._values, shift, axis=tuple(range(self.grid.dim))))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self._values.imag), initial=0.0) <= tol)

    def __repr__(self):
        return f"Field(grid={self.grid}, mass={l2_norm(self) ** 2:.6g})"


def _spectral_apply(f: Field, mult) -> Field:
    return Field.from_hat(f.grid, f.hat * mult)


def frac_laplacian(f: Field, s: float) -> Field:
    """(-Δ)^s f as the Fourier multiplier |ξ|^{2s}."""
    if not 0.0 < s <= 1.0:
        raise DomainError(f"s must lie in (0, 1], got {s}")
    return _spectral_apply(f, f.grid.multiplier(2.0 * s))


def apply_multiplier(f: Field, power: float) -> Field:
    """Generic |ξ|^power multiplier (power > 0)."""
    if power <= 0:
        raise DomainError("multiplier power must be positive")
    return _spectral_apply(f, f.grid.multiplier(power))


def hs_seminorm(f: Field, s: float) -> float:
    """||(-Δ)^{s/2} f||_{L^2} via Plancherel."""
    g = f.grid
    dens = g.multiplier(2.0 * s) * (f.hat.real**2 + f.hat.imag**2)
    return float(np.sqrt(np.sum(dens) * g.cell_volume / g.size))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(f.abs2) * f.grid.cell_volume))


def l2_norm_spectral(f: Field) -> float:
    g = f.grid
    return float(np.sqrt(np.sum(f.hat.real**2 + f.hat.imag**2) * g.cell_volume / g.size))


def lq_norm(f: Field, q: float) -> float:
    """Rectangle-rule L^q norm."""
    if not q >= 1.0:
        raise DomainError(f"q must be >= 1, got {q}")
    if q == 2.0:
        return l2_norm(f)
    return float((np.sum(f.abs2 ** (0.5 * q)) * f.grid.cell_volume) ** (1.0 / q))


def lp_power(f: Field, p: float) -> float:
    """∫|f|^{2p+2} dx, the potential-energy integrand used throughout."""
    return float(np.sum(f.abs2 ** (p + 1.0)) * f.grid.cell_volume)


def gradient(f: Field) -> tuple:
    """Spectral gradient; the Nyquist mode is dropped so real input stays real."""
    g = f.grid
    k = g.wavenumbers.copy()
    k[g.n // 2] = 0.0
    out = []
    for j in range(g.dim):
        shape = [1] * g.dim
        shape[j] = g.n
        out.append(_spectral_apply(f, 1j * k.reshape(shape)))
    return tuple(out)


def energy(f: Field, params: ModelParams) -> float:
    kinetic = 0.5 * hs_seminorm(f, params.s) ** 2
    pot1 = params.lambda1 / (2 * params.p1 + 2) * lp_power(f, params.p1) if params.lambda1 else 0.0
    pot2 = params.lambda2 / (2 * params.p2 + 2) * lp_power(f, params.p2) if params.lambda2 else 0.0
    return kinetic - pot1 - pot2


def evaluate_on_axes(f: Field, points) -> np.ndarray:
    """Trigonometric interpolation of ``f`` on a tensor product of 1-D point sets.

    ``points`` holds one coordinate array per axis.  The Nyquist mode enters as
    a cosine so real data interpolates to real values.  Exact at grid nodes.
    """
    g = f.grid
    if len(points) != g.dim:
        raise DomainError("need one coordinate array per axis")
    k = g.wavenumbers
    nyq = g.n // 2
    out = f.hat / g.size
    for axis, pts in enumerate(points):
        y = np.asarray(pts, dtype=float) + g.half_length
        basis = np.exp(1j * np.outer(y, k))
        basis[:, nyq] = np.cos(k[nyq] * y)
        out = np.moveaxis(np.tensordot(basis, out, axes=([1], [axis])), 0, axis)
    return out


def write_snapshot(path, field: Field, time: float = 0.0, ground_state=None) -> Path:
    """Binary snapshot; ``ground_state=(s, p, c_opt, residual)`` selects the extended header."""
    path = Path(path)
    g = field.grid
    version = SNAPSHOT_VERSION if ground_state is None else GROUND_STATE_VERSION
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, version, g.dim, g.n, g.half_length, float(time)))
        if ground_state is not None:
            fh.write(_GS_EXTRA.pack(*(float(v) for v in ground_state)))
        fh.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())
    return path


def read_snapshot(path):
    """Returns ``(field, time, extra)``; ``extra`` is None for plain snapshots."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    magic, version, dim, n, half_length, time = _HEADER.unpack_from(raw, 0)
    if magic != SNAPSHOT_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    offset = _HEADER.size
    extra = None
    if version == GROUND_STATE_VERSION:
        s, p, c_opt, residual = _GS_EXTRA.unpack_from(raw, offset)
        extra = {"s": s, "p": p, "c_opt": c_opt, "residual": residual}
        offset += _GS_EXTRA.size
    elif version != SNAPSHOT_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    grid = Grid(dim, n, half_length)
    payload = np.frombuffer(raw, dtype="<c16", offset=offset)
    if payload.size != grid.size:
        raise DataError(f"{path}: payload has {payload.size} samples, expected {grid.size}")
    return Field(grid, payload.reshape(grid.shape)), time, extra


def export_slice_csv(path, field: Field, axis: int = 0) -> Path:
    """1-D cut through the box centre along ``axis``: columns x, re, im, abs2."""
    g = field.grid
    idx = [g.n // 2] * g.dim
    idx[axis] = slice(None)
    line = field.values[tuple(idx)]
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im", "abs2"])
        for x, v in zip(g.axis, line):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v) ** 2))])
    return path
