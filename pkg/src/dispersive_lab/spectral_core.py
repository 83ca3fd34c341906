"""Periodic grids, Fourier transforms and Sobolev-type norms.

The real line is truncated to the torus ``[-L, L)`` sampled at ``n`` points.
Transforms follow the continuous convention ``f_hat(xi) = int e^{-i x xi} f(x) dx``
in discrete form: the forward transform is the unnormalized sum
``F_k = sum_j f_j exp(-i xi_k x_j)`` and the inverse carries ``1/n``.  With this
choice ``dx * F_k`` approximates the continuous transform and discrete Parseval
reads ``dx * sum |f_j|^2 = (dx / n) * sum |F_k|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, InvalidInputError, InvalidParameterError

__all__ = [
    "Grid",
    "RealField",
    "SpectrumField",
    "NormReport",
    "forward_transform",
    "inverse_transform",
    "zs_norm",
    "mean_zero_project",
    "parseval_weight",
]

# relative size of the zero mode below which a field counts as mean-zero
MEAN_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-half_length, half_length)``."""

    num_points: int
    half_length: float

    def __post_init__(self):
        n = self.num_points
        if not isinstance(n, (int, np.integer)) or n < 2 or n & (n - 1):
            raise InvalidParameterError(f"num_points must be a power of two >= 2, got {n!r}")
        if not (np.isfinite(self.half_length) and self.half_length > 0):
            raise InvalidParameterError(f"half_length must be positive, got {self.half_length!r}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.num_points

    @property
    def dk(self) -> float:
        """Spacing of the wavenumber lattice, ``pi / L``."""
        return np.pi / self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.num_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Wavenumbers ``pi k / L`` for ``k = -n/2 .. n/2 - 1`` in ascending order."""
        n = self.num_points
        return self.dk * np.arange(-n // 2, n // 2)

    @cached_property
    def rfft_wavenumbers(self) -> np.ndarray:
        """Nonnegative wavenumbers in ``numpy.fft.rfft`` order (last one is Nyquist)."""
        return self.dk * np.arange(self.num_points // 2 + 1)

    @property
    def nyquist(self) -> float:
        return self.dk * self.num_points / 2

    def field(self, samples) -> "RealField":
        return RealField(self, samples)

    def from_function(self, func) -> "RealField":
        return RealField(self, func(self.x))


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.grid.num_points,):
            raise InvalidInputError(
                f"expected {self.grid.num_points} samples, got shape {s.shape}"
            )
        if not np.all(np.isfinite(s)):
            raise InvalidInputError("field contains non-finite samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __add__(self, other):
        _check_same_grid(self, other)
        return RealField(self.grid, self.samples + other.samples)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return RealField(self.grid, self.samples - other.samples)

    def __mul__(self, c):
        return RealField(self.grid, self.samples * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.samples)

    def l2(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(self.samples**2)))

    def inner(self, other) -> float:
        """Discrete ``L^2`` inner product ``int f g dx``."""
        _check_same_grid(self, other)
        return float(self.grid.dx * np.dot(self.samples, other.samples))

    def mean(self) -> float:
        return float(np.mean(self.samples))


@dataclass(frozen=True, eq=False)
class SpectrumField:
    """Complex coefficients aligned with ``grid.wavenumbers`` (ascending order)."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.num_points,):
            raise InvalidInputError(
                f"expected {self.grid.num_points} coefficients, got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    @property
    def zero_mode(self) -> complex:
        return complex(self.coeffs[self.grid.num_points // 2])


@dataclass(frozen=True)
class NormReport:
    l2: float
    hs: float
    antideriv_l2: float
    zs: float
    s: float


def _check_same_grid(f, g):
    if f.grid != g.grid:
        raise InvalidInputError("fields live on different grids")


def _phase(grid: Grid) -> np.ndarray:
    # exp(-i xi_k x_0) with x_0 = -L gives (-1)^k
    k = np.arange(-grid.num_points // 2, grid.num_points // 2)
    return np.where(k % 2 == 0, 1.0, -1.0)


def parseval_weight(grid: Grid) -> float:
    """Weight ``w`` with ``||f||_{L^2}^2 = w * sum_k |F_k|^2``."""
    return grid.dx / grid.num_points


def forward_transform(f: RealField) -> SpectrumField:
    if not np.all(np.isfinite(f.samples)):
        raise InvalidInputError("field contains non-finite samples")
    raw = np.fft.fftshift(np.fft.fft(f.samples))
    return SpectrumField(f.grid, raw * _phase(f.grid))


def inverse_transform(F: SpectrumField) -> RealField:
    """Inverse transform; the imaginary part (roundoff for symmetric spectra) is dropped."""
    raw = F.coeffs * _phase(F.grid)
    return RealField(F.grid, np.fft.ifft(np.fft.ifftshift(raw)).real)


def _rfft_power(f: RealField) -> tuple[np.ndarray, np.ndarray]:
    """Per-wavenumber ``|F|^2`` summed over +/-xi, on the nonnegative half-line."""
    F = np.fft.rfft(f.samples)
    n = f.grid.num_points
    mult = np.full(F.shape, 2.0)
    mult[0] = 1.0
    mult[-1] = 1.0
    return f.grid.rfft_wavenumbers, mult * np.abs(F) ** 2 * (f.grid.dx / n)


def is_mean_zero(f: RealField, tol: float = MEAN_ZERO_TOL) -> bool:
    """True when the zero mode carries at most ``tol`` of the ``L^2`` norm."""
    mean_part = abs(f.mean()) * np.sqrt(2.0 * f.grid.half_length)
    return mean_part <= tol * f.l2()


def require_mean_zero(f: RealField, what: str = "operation") -> None:
    if not is_mean_zero(f):
        raise DomainError(f"{what} requires a mean-zero field (zero mode = {f.mean():.3e})")


def zs_norm(f: RealField, s: float) -> NormReport:
    """``H^s`` norm, ``L^2`` norm of the antiderivative, and their sum."""
    require_mean_zero(f, "zs_norm")
    xi, power = _rfft_power(f)
    l2 = float(np.sqrt(power.sum()))
    hs = float(np.sqrt(np.sum((1.0 + xi**2) ** s * power)))
    anti = float(np.sqrt(np.sum(power[1:] / xi[1:] ** 2)))
    return NormReport(l2=l2, hs=hs, antideriv_l2=anti, zs=hs + anti, s=float(s))


def mean_zero_project(f: RealField) -> RealField:
    F = np.fft.rfft(f.samples)
    F[0] = 0.0
    return RealField(f.grid, np.fft.irfft(F, n=f.grid.num_points))
