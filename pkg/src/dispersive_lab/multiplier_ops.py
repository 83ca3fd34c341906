"""Fourier multipliers: Hilbert transform, antiderivative, T_delta, Riesz
potentials, dispersion symbols and the linear propagators built from them.

Two symbols are kept apart on purpose.  ``dispersion_symbol`` is the printed
symbol ``p(xi) - gamma/xi`` used by the resonance analysis.  ``linear_symbol``
is the symbol the PDE itself generates,

    u_t + (dispersive part) + u u_x = gamma * d_x^{-1} u
    ==>  u_hat(t) = exp(-i t (p(xi) + gamma/xi)) u_hat(0),

and it drives every propagator and time integrator.  The two differ only in
the sign of the rotation term.  For the ILW kinds the dispersive part is
``p_delta(xi) = xi^2 coth(delta xi) - xi/delta``, which is the only form that
behaves like ``xi^3/3`` at small ``xi`` and tends to ``xi|xi|`` as ``delta``
grows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidInputError, InvalidParameterError
from .spectral_core import Grid, RealField, require_mean_zero

__all__ = [
    "DispersionFamily",
    "MultiplierSymbol",
    "dispersion_symbol",
    "dispersive_part",
    "linear_symbol",
    "apply_multiplier",
    "apply_symbol",
    "hilbert",
    "antiderivative",
    "derivative",
    "riesz",
    "t_delta_symbol",
    "t_delta",
    "linear_propagator",
    "linear_operator",
    "coth_gap",
]

KINDS = ("BO", "RMBO", "ILW", "RMILW", "FracBO")


@dataclass(frozen=True)
class DispersionFamily:
    """Model descriptor.  ``gamma`` is the rotation strength (0 for BO/ILW),
    ``delta`` the depth of the ILW kinds, ``alpha`` the FracBO order."""

    kind: str
    gamma: float = 0.0
    delta: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown family kind {self.kind!r}; expected one of {KINDS}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise InvalidParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.kind in ("BO", "ILW") and self.gamma != 0:
            raise InvalidParameterError(f"{self.kind} has no rotation term; gamma must be 0")
        if self.kind in ("ILW", "RMILW") and not (np.isfinite(self.delta) and self.delta > 0):
            raise InvalidParameterError(f"delta must be finite and > 0, got {self.delta}")
        if self.kind == "FracBO" and not (1.0 <= self.alpha <= 2.0):
            raise InvalidParameterError(f"alpha must lie in [1, 2], got {self.alpha}")

    @classmethod
    def bo(cls):
        return cls("BO")

    @classmethod
    def rmbo(cls, gamma):
        return cls("RMBO", gamma=gamma)

    @classmethod
    def ilw(cls, delta=1.0):
        return cls("ILW", delta=delta)

    @classmethod
    def rmilw(cls, delta=1.0, gamma=0.0):
        return cls("RMILW", gamma=gamma, delta=delta)

    @classmethod
    def frac_bo(cls, alpha, gamma=0.0):
        return cls("FracBO", gamma=gamma, alpha=alpha)

    @property
    def is_ilw(self) -> bool:
        return self.kind in ("ILW", "RMILW")

    def with_gamma(self, gamma):
        kind = self.kind
        if gamma > 0 and kind == "BO":
            kind = "RMBO"
        if gamma > 0 and kind == "ILW":
            kind = "RMILW"
        return DispersionFamily(kind, gamma=gamma, delta=self.delta, alpha=self.alpha)


@dataclass(frozen=True)
class MultiplierSymbol:
    evaluator: Callable[[np.ndarray], np.ndarray]
    zero_mode_policy: complex = 0.0
    requires_mean_zero: bool = False
    name: str = field(default="multiplier", compare=False)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape, dtype=complex)
        nz = xi != 0
        out[nz] = self.evaluator(xi[nz])
        out[~nz] = self.zero_mode_policy
        return out


def _xcothx_minus_one(x):
    """``x coth(x) - 1`` without cancellation near 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    xs = x[small] ** 2
    out[small] = xs / 3 - xs**2 / 45 + 2 * xs**3 / 945 - xs**4 / 4725
    xl = x[~small]
    out[~small] = xl / np.tanh(xl) - 1.0
    return out


def dispersive_part(fam: DispersionFamily, xi):
    """Rotation-free part of the symbol (real and odd in ``xi``)."""
    xi = np.asarray(xi, dtype=float)
    if fam.kind in ("BO", "RMBO"):
        return xi * np.abs(xi)
    if fam.kind == "FracBO":
        return xi * np.abs(xi) ** fam.alpha
    # xi^2 coth(delta xi) - xi/delta = (xi/delta) * (x coth x - 1), x = delta xi
    return xi / fam.delta * _xcothx_minus_one(fam.delta * xi)


def _with_rotation(fam, xi, sign):
    xi = np.asarray(xi, dtype=float)
    scalar = xi.ndim == 0
    xi = np.atleast_1d(xi)
    out = np.zeros_like(xi)
    nz = xi != 0
    out[nz] = dispersive_part(fam, xi[nz]) + sign * fam.gamma / xi[nz]
    return float(out[0]) if scalar else out


def dispersion_symbol(fam: DispersionFamily, xi):
    """Printed symbol ``p(xi) - gamma/xi``; 0 at ``xi = 0``."""
    return _with_rotation(fam, xi, -1.0)


def linear_symbol(fam: DispersionFamily, xi):
    """Symbol generated by the PDE, ``p(xi) + gamma/xi``; 0 at ``xi = 0``."""
    return _with_rotation(fam, xi, +1.0)


def hilbert() -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: -1j * np.sign(xi), name="hilbert")


def antiderivative() -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: -1j / xi, requires_mean_zero=True, name="antiderivative")


def derivative(order: int = 1) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: (1j * xi) ** order, name=f"d^{order}")


def riesz(alpha: float) -> MultiplierSymbol:
    """``D^alpha`` with symbol ``|xi|^alpha``."""
    return MultiplierSymbol(lambda xi: np.abs(xi) ** alpha + 0j, name=f"D^{alpha}")


def t_delta_symbol(delta: float) -> MultiplierSymbol:
    if not (np.isfinite(delta) and delta > 0):
        raise InvalidParameterError(f"delta must be > 0, got {delta}")
    return MultiplierSymbol(lambda xi: -1j / np.tanh(delta * xi), name=f"T_{delta}")


def apply_symbol(f: RealField, values: np.ndarray) -> RealField:
    """Multiply the spectrum by ``values`` given on ``grid.rfft_wavenumbers``.

    Values must come from a Hermitian symbol (even real part, odd imaginary part)
    for the output to be the exact image of a real field.  Nyquist is zeroed.
    """
    F = np.fft.rfft(f.samples) * values
    F[-1] = 0.0
    return RealField(f.grid, np.fft.irfft(F, n=f.grid.num_points))


def apply_multiplier(f: RealField, m: MultiplierSymbol) -> RealField:
    if m.requires_mean_zero:
        require_mean_zero(f, m.name)
    return apply_symbol(f, m(f.grid.rfft_wavenumbers))


def t_delta(f: RealField, delta: float) -> RealField:
    return apply_multiplier(f, t_delta_symbol(delta))


def coth_gap(delta: float, xi) -> np.ndarray:
    """``|coth(delta xi) - sgn(xi)|``, computed as ``2 e^{-2x} / (1 - e^{-2x})``."""
    x = delta * np.abs(np.asarray(xi, dtype=float))
    e = np.exp(-2.0 * x)
    return 2.0 * e / -np.expm1(-2.0 * x)


def linear_operator(fam: DispersionFamily) -> Callable[[RealField], RealField]:
    """Spatial operator ``A`` with ``u_t + A u = 0`` the linearized equation,
    assembled from ``apply_multiplier`` pieces (not from the symbol)."""

    def op(f: RealField) -> RealField:
        if fam.kind in ("BO", "RMBO"):
            out = apply_multiplier(apply_multiplier(f, derivative(2)), hilbert())
        elif fam.kind == "FracBO":
            out = apply_multiplier(apply_multiplier(f, derivative(1)), riesz(fam.alpha))
        else:
            out = apply_multiplier(apply_multiplier(f, derivative(2)), t_delta_symbol(fam.delta))
            out = out - apply_multiplier(f, derivative(1)) * (1.0 / fam.delta)
        if fam.gamma:
            out = out - apply_multiplier(f, antiderivative()) * fam.gamma
        return out

    return op


def propagator_factor(fam: DispersionFamily, grid: Grid, t: float) -> np.ndarray:
    """``exp(-i t omega(xi))`` on the rfft wavenumbers, Nyquist zeroed."""
    fac = np.exp(-1j * t * linear_symbol(fam, grid.rfft_wavenumbers))
    fac[-1] = 0.0
    return fac


def linear_propagator(f: RealField, fam: DispersionFamily, t: float) -> RealField:
    if fam.gamma > 0:
        require_mean_zero(f, "linear_propagator with rotation")
    if not np.isfinite(t):
        raise InvalidInputError("t must be finite")
    return apply_symbol(f, propagator_factor(fam, f.grid, t))
