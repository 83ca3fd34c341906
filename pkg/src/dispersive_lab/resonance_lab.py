"""Resonance functions, bound scans, pseudoproducts and the space-time
trilinear vanishing check.

All resonance computations use the printed symbol ``p(xi) - gamma/xi``
(see :func:`dispersion_symbol`); the bounds only involve ``|Omega|`` and are
insensitive to the sign convention of the rotation term.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, SingularPointError
from .multiplier_ops import DispersionFamily, dispersion_symbol, dispersive_part
from .spectral_core import RealField

__all__ = [
    "ResonanceSample",
    "PseudoproductKernel",
    "resonance",
    "resonance_values",
    "omega_good",
    "omega_bad",
    "lemma_bound",
    "sample_region",
    "bound_scan",
    "write_scan_csv",
    "pseudoproduct",
    "TrilinearSetup",
    "trilinear_setup",
    "trilinear_vanishing_check",
    "min_resonance_on_support",
    "LEMMA_THRESHOLD_BELOW",
    "LEMMA_THRESHOLD_ABOVE",
]

# safety factors bracketing the vanishing threshold N1 N2^2 + N1^-2 N2
LEMMA_THRESHOLD_BELOW = 1.0 / 8.0
LEMMA_THRESHOLD_ABOVE = 8.0

# |xi1 + xi2| below this is treated as the singular ridge itself
RIDGE_FLOOR = 1e-6


@dataclass(frozen=True)
class ResonanceSample:
    xi1: float
    xi2: float
    omega_value: float
    bound_value: float
    ratio: float
    omega_g: float | None = None
    omega_b: float | None = None


@dataclass(frozen=True)
class PseudoproductKernel:
    """Bounded symbol ``psi(xi, zeta)`` of a pseudoproduct (vectorized)."""

    psi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sup_norm: float

    @classmethod
    def identity(cls):
        return cls(lambda xi, zeta: np.ones(np.broadcast(xi, zeta).shape), 1.0)

    @classmethod
    def zero(cls):
        return cls(lambda xi, zeta: np.zeros(np.broadcast(xi, zeta).shape), 0.0)


def omega_good(xi1, xi2):
    s = xi1 + xi2
    return s * np.abs(s) - xi1 * np.abs(xi1) - xi2 * np.abs(xi2)


def omega_bad(xi1, xi2):
    return 1.0 / (xi1 + xi2) - 1.0 / xi1 - 1.0 / xi2


def lemma_bound(xi1, xi2):
    """``|xi|_max^2 |xi|_min + |xi|_max |xi|_min^{-2}`` over ``(xi1, xi2, xi1 + xi2)``."""
    a = np.abs(np.stack(np.broadcast_arrays(xi1, xi2, np.add(xi1, xi2))))
    hi = a.max(axis=0)
    lo = a.min(axis=0)
    return hi**2 * lo + hi / lo**2


def resonance_values(fam: DispersionFamily, xi1, xi2):
    """Vectorized ``Omega(xi1, xi2) = phi(xi1 + xi2) - phi(xi1) - phi(xi2)``."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    return (
        dispersion_symbol(fam, xi1 + xi2)
        - dispersion_symbol(fam, xi1)
        - dispersion_symbol(fam, xi2)
    )


def resonance(fam: DispersionFamily, xi1: float, xi2: float) -> ResonanceSample:
    if xi1 == 0 or xi2 == 0 or xi1 + xi2 == 0:
        raise SingularPointError(f"resonance undefined at ({xi1}, {xi2})")
    om = float(resonance_values(fam, np.array([xi1]), np.array([xi2]))[0])
    bound = float(lemma_bound(xi1, xi2))
    og = ob = None
    if fam.kind in ("BO", "RMBO"):
        og = float(omega_good(xi1, xi2))
        ob = float(omega_bad(xi1, xi2))
    return ResonanceSample(xi1, xi2, om, bound, abs(om) / bound, og, ob)


def sample_region(min_abs: float, box: float, samples: int, seed: int = 0):
    """Sample ``min(|xi1|, |xi2|) >= min_abs``, ``|xi_i| <= box``.

    One third of the points sit on the ridge ``xi2 = -xi1 + eps`` with
    ``eps`` log-uniform in ``[1e-3, min_abs]``; the rest are log-uniform in
    both magnitudes with independent random signs, which covers both the
    ``|xi2| << |xi1|`` and the comparable same-sign regimes.
    """
    if min_abs < 1 or box <= min_abs or samples < 3:
        raise InvalidParameterError(
            f"need min_abs >= 1, box > min_abs and samples >= 3 (got {min_abs}, {box}, {samples})"
        )
    rng = np.random.default_rng(seed)
    n_ridge = samples // 3
    n_gen = samples - n_ridge
    lo, hi = np.log(min_abs), np.log(box)
    a1 = np.exp(rng.uniform(lo, hi, n_gen)) * rng.choice([-1.0, 1.0], n_gen)
    a2 = np.exp(rng.uniform(lo, hi, n_gen)) * rng.choice([-1.0, 1.0], n_gen)

    r1 = np.exp(rng.uniform(lo, hi, n_ridge)) * rng.choice([-1.0, 1.0], n_ridge)
    eps = np.exp(rng.uniform(np.log(1e-3), np.log(min_abs), n_ridge))
    eps *= rng.choice([-1.0, 1.0], n_ridge)
    r2 = -r1 + eps
    xi1 = np.concatenate([a1, r1])
    xi2 = np.concatenate([a2, r2])
    keep = (
        (np.minimum(np.abs(xi1), np.abs(xi2)) >= min_abs)
        & (np.maximum(np.abs(xi1), np.abs(xi2)) <= box)
        & (np.abs(xi1 + xi2) >= RIDGE_FLOOR)
    )
    return xi1[keep], xi2[keep]


def bound_scan(
    fam: DispersionFamily,
    min_abs: float,
    box: float,
    samples: int,
    seed: int = 0,
    return_samples: bool = False,
):
    """Largest ``|Omega| / bound`` over :func:`sample_region`."""
    xi1, xi2 = sample_region(min_abs, box, samples, seed)
    om = resonance_values(fam, xi1, xi2)
    bound = lemma_bound(xi1, xi2)
    ratio = np.abs(om) / bound
    best = float(ratio.max())
    if return_samples:
        return best, (xi1, xi2, om, bound, ratio)
    return best


def write_scan_csv(path, rows) -> None:
    xi1, xi2, om, bound, ratio = rows
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi1", "xi2", "omega", "bound", "ratio"])
        for r in zip(xi1, xi2, om, bound, ratio):
            w.writerow([repr(float(v)) for v in r])


def pseudoproduct(f: RealField, g: RealField, k: PseudoproductKernel) -> RealField:
    """Discrete ``Pi_psi(f, g)``: spectrum ``(1/n) sum_m F(zeta_m) G(xi - zeta_m) psi(xi, zeta_m)``.

    Indices are taken modulo ``n`` (periodic grid); with ``psi = 1`` this is
    exactly the transform of the pointwise product.  Output is real when
    ``psi(-xi, -zeta) = conj(psi(xi, zeta))``.
    """
    if f.grid != g.grid:
        raise InvalidInputError("pseudoproduct fields must share a grid")
    n = f.grid.num_points
    F = np.fft.fft(f.samples)
    G = np.fft.fft(g.samples)
    kk = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    wav = f.grid.dk * kk
    out_idx = np.arange(n)[:, None]
    in_idx = np.arange(n)[None, :]
    weights = k.psi(wav[:, None], wav[None, :])
    conv = F[None, :] * G[(out_idx - in_idx) % n] * weights
    P = conv.sum(axis=1) / n
    return RealField(f.grid, np.fft.ifft(P).real)


# --- space-time trilinear check -------------------------------------------------


@dataclass(frozen=True)
class TrilinearSetup:
    """Space-time lattice: ``xi = dk * k``, ``tau = dtau * m`` on an FFT grid of
    ``(n_t, n_x)`` points, large enough that products of three localized fields
    do not alias."""

    dk: float
    dtau: float
    n_x: int
    n_t: int
    supports: tuple  # three boolean masks over (tau, xi) in FFT order


def _next_pow2(m):
    return int(2 ** np.ceil(np.log2(max(m, 2))))


def _shell_mask(xi, n_dyadic):
    a = np.abs(xi)
    return (a >= n_dyadic / 2) & (a <= 2 * n_dyadic)


def trilinear_setup(fam, ns, ls, dk=0.25, dtau=1.0) -> TrilinearSetup:
    ns = [float(v) for v in ns]
    ls = [float(v) for v in ls]
    kmax = int(np.ceil(2 * max(ns) / dk))
    xi_max = kmax * dk
    tau_max = float(np.max(np.abs(dispersion_symbol(fam, np.linspace(dk, xi_max, 4 * kmax))))) + 2 * max(ls)
    mmax = int(np.ceil(tau_max / dtau))
    n_x = _next_pow2(3 * kmax + 2)
    n_t = _next_pow2(3 * mmax + 2)
    xi = dk * np.fft.fftfreq(n_x, d=1.0 / n_x)
    tau = dtau * np.fft.fftfreq(n_t, d=1.0 / n_t)
    sym = dispersion_symbol(fam, xi)
    masks = []
    for n_dyadic, l_dyadic in zip(ns, ls):
        mod = np.abs(tau[:, None] - sym[None, :])
        m = _shell_mask(xi, n_dyadic)[None, :] & (mod >= l_dyadic / 2) & (mod <= 2 * l_dyadic)
        if not m.any():
            raise InvalidParameterError(
                f"localization |xi|~{n_dyadic}, |tau - phi|~{l_dyadic} contains no lattice point"
            )
        masks.append(m)
    return TrilinearSetup(dk, dtau, n_x, n_t, tuple(masks))


def _random_localized(setup, mask, rng):
    coeff = np.zeros(mask.shape, dtype=complex)
    idx = np.nonzero(mask)
    coeff[idx] = rng.normal(size=idx[0].size) + 1j * rng.normal(size=idx[0].size)
    # Hermitian symmetrization keeps the field real; the mask is symmetric
    # under (tau, xi) -> (-tau, -xi) because the symbol is odd
    flipped = np.conj(np.roll(np.flip(coeff), 1, axis=(0, 1)))
    coeff = 0.5 * (coeff + flipped)
    return np.fft.ifft2(coeff).real


def min_resonance_on_support(fam, ns, dk=0.25) -> float:
    """Smallest ``|Omega(xi1, xi2)|`` over lattice triples with ``xi_i`` in the
    three shells and ``xi1 + xi2 + xi3 = 0``."""
    shells = []
    for n_dyadic in ns:
        k = np.arange(1, int(np.ceil(2 * n_dyadic / dk)) + 1) * dk
        k = k[_shell_mask(k, n_dyadic)]
        shells.append(np.concatenate([-k[::-1], k]))
    x1, x2 = np.meshgrid(shells[0], shells[1], indexing="ij")
    x3 = -(x1 + x2)
    ok = _shell_mask(x3, ns[2]) & (x3 != 0)
    if not ok.any():
        return np.inf
    return float(np.min(np.abs(resonance_values(fam, x1[ok], x2[ok]))))


def trilinear_vanishing_check(ns, ls, fam, trials=20, seed=0, kernel="identity", dk=0.25, dtau=1.0):
    """Max over random trials of ``|int int Pi(f1, f2) f3 dx dt|`` normalized by
    the product of the space-time ``L^2`` norms.

    ``f_i`` have lattice support in ``{|xi| ~ N_i} x {|tau - phi(xi)| ~ L_i}``
    (hard cutoffs).  ``kernel='separable'`` draws a fresh bounded symbol
    ``psi(xi, zeta) = a(zeta) b(xi - zeta) c(xi)`` per trial.
    """
    n1, n2, n3 = (float(v) for v in ns)
    if not (0 < n1 <= n2 <= n3 <= 2 * n2):
        raise InvalidParameterError("need 0 < N1 <= N2 <= N3 <= 2 N2")
    if min(ls) < 1:
        raise InvalidParameterError("modulation scales L_i must be >= 1")
    setup = trilinear_setup(fam, ns, ls, dk, dtau)
    rng = np.random.default_rng(seed)
    xi = setup.dk * np.fft.fftfreq(setup.n_x, d=1.0 / setup.n_x)
    cell = (2 * np.pi / setup.dk) * (2 * np.pi / setup.dtau) / (setup.n_x * setup.n_t)
    worst = 0.0
    for _ in range(trials):
        f1, f2, f3 = (_random_localized(setup, m, rng) for m in setup.supports)
        norms = [np.sqrt(cell * np.sum(f**2)) for f in (f1, f2, f3)]
        denom = norms[0] * norms[1] * norms[2]
        if denom == 0:
            continue
        if kernel == "separable":
            # real even multipliers keep the fields real and |psi| <= 1
            a, b, c = (np.cos(w * np.abs(xi)) for w in rng.uniform(0.0, 3.0, 3))
            g1 = np.fft.ifft(np.fft.fft(f1, axis=1) * a, axis=1).real
            g2 = np.fft.ifft(np.fft.fft(f2, axis=1) * b, axis=1).real
            prod = np.fft.ifft(np.fft.fft(g1 * g2, axis=1) * c, axis=1).real
        elif kernel == "identity":
            prod = f1 * f2
        else:
            raise InvalidParameterError(f"unknown kernel {kernel!r}")
        integral = cell * np.sum(prod * f3)
        worst = max(worst, abs(integral) / denom)
    return float(worst)
