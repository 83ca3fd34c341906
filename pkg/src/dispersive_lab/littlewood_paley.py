"""Smooth dyadic frequency projectors and square-function checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, OutOfBandError, UndefinedRatioError
from .multiplier_ops import apply_symbol
from .spectral_core import Grid, RealField, require_mean_zero

__all__ = [
    "eta",
    "phi",
    "phi_n",
    "DyadicDecomposition",
    "project",
    "decompose",
    "square_function_ratio",
    "resolved_band",
    "covering_dyadics",
]


def _glue(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def eta(xi):
    """Smooth even cutoff: 1 on ``[-1, 1]``, 0 outside ``(-2, 2)``."""
    a = np.abs(np.asarray(xi, dtype=float))
    up = _glue(2.0 - a)
    down = _glue(a - 1.0)
    return up / (up + down)


def phi(xi):
    return eta(xi) - eta(2.0 * np.asarray(xi, dtype=float))


def phi_n(n_dyadic, xi):
    return phi(np.asarray(xi, dtype=float) / n_dyadic)


def _check_dyadic(n):
    if not (n > 0 and np.isfinite(n)) or not float(np.log2(n)).is_integer():
        raise InvalidParameterError(f"{n} is not a dyadic number 2^k")


def resolved_band(grid: Grid) -> tuple[float, float]:
    """Smallest and largest dyadic N whose shell ``[N/2, 2N]`` meets the grid
    and stays below Nyquist."""
    lo = 2.0 ** np.ceil(np.log2(grid.dk / 2))
    hi = 2.0 ** np.floor(np.log2(grid.nyquist / 2))
    return float(lo), float(hi)


def covering_dyadics(grid: Grid) -> np.ndarray:
    """Dyadic N whose shells cover every nonzero resolved wavenumber."""
    lo = np.floor(np.log2(grid.dk)) - 1
    hi = np.ceil(np.log2(grid.nyquist)) + 1
    return 2.0 ** np.arange(lo, hi + 1)


@dataclass(frozen=True)
class DyadicDecomposition:
    pieces: list  # list of (N, RealField), ascending in N
    low_remainder: RealField
    high_remainder: RealField

    def reconstruct(self) -> RealField:
        out = self.low_remainder + self.high_remainder
        for _, piece in self.pieces:
            out = out + piece
        return out


def project(f: RealField, n_dyadic: float) -> RealField:
    """``P_N f``: multiply the spectrum by ``phi(xi / N)``."""
    _check_dyadic(n_dyadic)
    lo, hi = resolved_band(f.grid)
    if not lo <= n_dyadic <= hi:
        raise OutOfBandError(f"N = {n_dyadic} outside resolved band [{lo}, {hi}]")
    return apply_symbol(f, phi_n(n_dyadic, f.grid.rfft_wavenumbers))


def decompose(f: RealField, n_min: float, n_max: float) -> DyadicDecomposition:
    _check_dyadic(n_min)
    _check_dyadic(n_max)
    if n_min > n_max:
        raise InvalidParameterError(f"empty band: n_min = {n_min} > n_max = {n_max}")
    ns = 2.0 ** np.arange(np.log2(n_min), np.log2(n_max) + 1)
    pieces = [(float(n), project(f, n)) for n in ns]
    xi = f.grid.rfft_wavenumbers
    # sum_{N=n_min}^{n_max} phi_N telescopes to eta(xi/n_max) - eta(2 xi/n_min)
    low = apply_symbol(f, eta(2.0 * xi / n_min))
    high = apply_symbol(f, 1.0 - eta(xi / n_max))
    return DyadicDecomposition(pieces, low, high)


def square_function_ratio(f: RealField, s: float) -> float:
    """``sum_N <N>^{2s} ||P_N f||^2 / ||f||_{H^s}^2`` over shells covering the grid."""
    require_mean_zero(f, "square_function_ratio")
    grid = f.grid
    F = np.fft.rfft(f.samples)
    F[-1] = 0.0
    xi = grid.rfft_wavenumbers
    mult = np.full(xi.shape, 2.0)
    mult[0] = 1.0
    power = mult * np.abs(F) ** 2
    denom = np.sum((1.0 + xi**2) ** s * power)
    if denom == 0.0:
        raise UndefinedRatioError("square function ratio of the zero field")
    num = 0.0
    for n in covering_dyadics(grid):
        num += (1.0 + n**2) ** s * np.sum(phi_n(n, xi) ** 2 * power)
    return float(num / denom)
