"""Integrating-factor RK4 time integration with conserved-quantity diagnostics.

The state is kept in ``rfft`` space.  The linear part is applied exactly through
``exp(-i t omega)`` with ``omega`` the PDE symbol (:func:`linear_symbol`); only
the nonlinear term ``-(1/2) d_x(u^2)`` is advanced by classical RK4 (the Lawson
scheme).
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BlowupError, InvalidInputError, InvalidParameterError
from .multiplier_ops import DispersionFamily, linear_symbol
from .spectral_core import Grid, RealField, require_mean_zero, zs_norm

__all__ = [
    "EvolutionConfig",
    "DiagnosticsRow",
    "RunResult",
    "default_dt",
    "rhs_nonlinear",
    "step",
    "run",
    "psi4",
    "phi4",
    "invariant",
    "psi4_drift_rate",
    "phi4_drift_rate",
    "verify_scaling",
    "deep_water_compare",
    "duhamel_second_iterate",
    "write_diagnostics_csv",
    "write_run_metadata",
]

DRIFT_EPS = 1e-30


@dataclass(frozen=True)
class EvolutionConfig:
    family: DispersionFamily
    grid: Grid
    dt: float
    t_end: float
    dealias: float = 2.0 / 3.0
    diag_stride: int = 1
    s: float = 1.0
    nonlinear: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise InvalidParameterError(f"t_end must be >= 0, got {self.t_end}")
        if not 0.5 < self.dealias <= 1.0:
            raise InvalidParameterError(f"dealias must lie in (1/2, 1], got {self.dealias}")
        if int(self.diag_stride) != self.diag_stride or self.diag_stride < 1:
            raise InvalidParameterError(f"diag_stride must be a positive integer, got {self.diag_stride}")


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    l2: float
    mean_abs: float
    zs: float
    invariant: float  # psi4 for the BO kinds, phi4 for the ILW kinds
    drift_rel: float


@dataclass
class RunResult:
    final: RealField
    rows: list
    steps: int
    dt: float
    wall_time_s: float
    termination: str = "completed"
    meta: dict = field(default_factory=dict)

    def __iter__(self):
        # allows ``final, rows = run(...)``
        return iter((self.final, self.rows))


def default_dt(u0: RealField) -> float:
    """``min(dx / (4 max|u0|), 1e-3)``."""
    peak = float(np.max(np.abs(u0.samples)))
    if peak == 0.0:
        return 1e-3
    return min(u0.grid.dx / (4.0 * peak), 1e-3)


def _dealias_mask(grid: Grid, frac: float) -> np.ndarray:
    k = np.arange(grid.num_points // 2 + 1)
    return (k <= frac * grid.num_points / 2) & (k < grid.num_points // 2)


class _Stepper:
    """Precomputed factors for one (family, grid, dt)."""

    def __init__(self, fam: DispersionFamily, grid: Grid, dt: float, dealias: float, nonlinear=True):
        self.n = grid.num_points
        xi = grid.rfft_wavenumbers
        omega = linear_symbol(fam, xi)
        self.e_half = np.exp(-0.5j * dt * omega)
        self.e_full = self.e_half**2
        self.e_half[-1] = self.e_full[-1] = 0.0
        self.mask = _dealias_mask(grid, dealias)
        self.dx_half = -0.5j * xi * self.mask
        self.dt = dt
        self.nonlinear = nonlinear

    def nl(self, U):
        if not self.nonlinear:
            return np.zeros_like(U)
        u = np.fft.irfft(U * self.mask, n=self.n)
        return self.dx_half * np.fft.rfft(u * u)

    def __call__(self, U):
        dt, E, E2 = self.dt, self.e_full, self.e_half
        if not self.nonlinear:
            return E * U
        k1 = self.nl(U)
        k2 = self.nl(E2 * (U + 0.5 * dt * k1))
        k3 = self.nl(E2 * U + 0.5 * dt * k2)
        k4 = self.nl(E * U + dt * E2 * k3)
        return E * U + dt / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def rhs_nonlinear(u: RealField, dealias: float = 2.0 / 3.0) -> RealField:
    """``-(1/2) d_x(u^2)`` with modes above ``dealias * n/2`` removed before and after squaring."""
    require_mean_zero(u, "rhs_nonlinear")
    mask = _dealias_mask(u.grid, dealias)
    n = u.grid.num_points
    v = np.fft.irfft(np.fft.rfft(u.samples) * mask, n=n)
    out = -0.5j * u.grid.rfft_wavenumbers * mask * np.fft.rfft(v * v)
    return RealField(u.grid, np.fft.irfft(out, n=n))


def step(u: RealField, cfg: EvolutionConfig) -> RealField:
    """Advance ``u`` by one ``cfg.dt``."""
    require_mean_zero(u, "step")
    stepper = _Stepper(cfg.family, cfg.grid, cfg.dt, cfg.dealias, cfg.nonlinear)
    U = stepper(np.fft.rfft(u.samples))
    if not np.all(np.isfinite(U)):
        raise BlowupError("non-finite state after one step", 0.0)
    return RealField(u.grid, np.fft.irfft(U, n=u.grid.num_points))


# --- conserved functionals ------------------------------------------------------


def _padded(u: RealField, factor: int = 2):
    """Samples of ``u`` and the operator images needed by the invariants on a
    grid ``factor`` times finer, so that products up to degree 4 integrate exactly."""
    n = u.grid.num_points
    m = factor * n
    U = np.fft.rfft(u.samples)
    U[-1] = 0.0
    xi = u.grid.rfft_wavenumbers

    def up(V):
        W = np.zeros(m // 2 + 1, dtype=complex)
        W[: n // 2 + 1] = V
        return np.fft.irfft(W, n=m) * factor

    return U, xi, up, u.grid.dx / factor


def psi4(u: RealField) -> float:
    """``2 int u_x^2 + (3/2) int u^2 H u_x + (1/4) int u^4``."""
    U, xi, up, dx = _padded(u)
    v = up(U)
    ux = up(1j * xi * U)
    hux = up(np.abs(xi) * U)  # H d_x has symbol |xi|
    return float(dx * np.sum(2.0 * ux**2 + 1.5 * v**2 * hux + 0.25 * v**4))


def phi4(u: RealField, delta: float = 1.0) -> float:
    """ILW fourth invariant with the printed coefficients, ``T = T_delta``:
    ``1/2 u_x^2 + 3/2 u^2 T u_x + 3/2 (T u_x)^2 + 9/2 u T u_x + 3/2 u^3 + 3/2 u^2 + 1/4 u^4``."""
    U, xi, up, dx = _padded(u)
    v = up(U)
    ux = up(1j * xi * U)
    tsym = np.zeros_like(xi)
    tsym[1:] = xi[1:] / np.tanh(delta * xi[1:])  # T d_x has symbol xi coth(delta xi)
    tux = up(tsym * U)
    integrand = (
        0.5 * ux**2
        + 1.5 * v**2 * tux
        + 1.5 * tux**2
        + 4.5 * v * tux
        + 1.5 * v**3
        + 1.5 * v**2
        + 0.25 * v**4
    )
    return float(dx * np.sum(integrand))


def invariant(u: RealField, fam: DispersionFamily) -> float:
    """``phi4`` for the ILW kinds, ``psi4`` otherwise."""
    return phi4(u, fam.delta) if fam.is_ilw else psi4(u)


def psi4_drift_rate(u: RealField, gamma: float, form: str = "exact") -> float:
    """Instantaneous ``d psi4 / dt`` along the rotating flow.

    ``form='exact'`` integrates
    ``gamma (3 u Hu_x d^{-1}u + (3/2) u^2 Hu + u^3 d^{-1}u)``, obtained by
    differentiating :func:`psi4` along the rotation term.  ``form='printed'``
    uses the coefficients ``(-1, -3/2, +1)`` of the same three terms.
    """
    if gamma == 0:
        return 0.0
    require_mean_zero(u, "psi4_drift_rate")
    coef = {"exact": (3.0, 1.5, 1.0), "printed": (-1.0, -1.5, 1.0)}.get(form)
    if coef is None:
        raise InvalidParameterError(f"unknown form {form!r}")
    U, xi, up, dx = _padded(u)
    v = up(U)
    hux = up(np.abs(xi) * U)
    hu = up(-1j * np.sign(xi) * U)
    anti = np.zeros_like(U)
    anti[1:] = -1j / xi[1:] * U[1:]
    a = up(anti)
    c1, c2, c3 = coef
    return float(gamma * dx * np.sum(c1 * v * hux * a + c2 * v**2 * hu + c3 * v**3 * a))


def phi4_drift_rate(u: RealField, gamma: float, delta: float = 1.0) -> float:
    """``gamma int (3 v Tv_x d^{-1}v + (3/2) v^2 Tv + (9/2) v^2 d^{-1}v + v^3 d^{-1}v)``."""
    if gamma == 0:
        return 0.0
    require_mean_zero(u, "phi4_drift_rate")
    U, xi, up, dx = _padded(u)
    v = up(U)
    tsym = np.zeros_like(xi)
    tsym[1:] = xi[1:] / np.tanh(delta * xi[1:])
    tux = up(tsym * U)
    tu = np.zeros_like(U)
    tu[1:] = -1j / np.tanh(delta * xi[1:]) * U[1:]
    tu = up(tu)
    anti = np.zeros_like(U)
    anti[1:] = -1j / xi[1:] * U[1:]
    a = up(anti)
    integrand = 3.0 * v * tux * a + 1.5 * v**2 * tu + 4.5 * v**2 * a + v**3 * a
    return float(gamma * dx * np.sum(integrand))


# --- runs -----------------------------------------------------------------------


def _row(t, u: RealField, fam, s, q0):
    rep = zs_norm(u, s)
    q = invariant(u, fam)
    ref = q if q0 is None else q0
    return DiagnosticsRow(
        t=float(t),
        l2=rep.l2,
        mean_abs=abs(u.mean()),
        zs=rep.zs,
        invariant=q,
        drift_rel=(q - ref) / max(abs(ref), DRIFT_EPS),
    )


def run(u0: RealField, cfg: EvolutionConfig) -> RunResult:
    """Integrate from ``t = 0`` to ``cfg.t_end``.

    The step count is ``ceil(t_end / dt)`` and ``dt`` is shrunk so the last step
    lands on ``t_end``.  Diagnostics are recorded at ``t = 0``, every
    ``diag_stride`` steps and at the final time.
    """
    require_mean_zero(u0, "run")
    if u0.grid != cfg.grid:
        raise InvalidInputError("initial datum and config use different grids")
    peak = float(np.max(np.abs(u0.samples)))
    if cfg.nonlinear and peak > 0 and cfg.dt > cfg.grid.dx / (4.0 * peak) * (1 + 1e-12):
        raise InvalidParameterError(
            f"dt = {cfg.dt} exceeds the advective limit dx/(4 max|u0|) = {cfg.grid.dx / (4 * peak)}"
        )
    nsteps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9)) if cfg.t_end > 0 else 0
    dt = cfg.t_end / nsteps if nsteps else cfg.dt
    stepper = _Stepper(cfg.family, cfg.grid, dt, cfg.dealias, cfg.nonlinear)
    n = cfg.grid.num_points

    start = time.perf_counter()
    first = _row(0.0, u0, cfg.family, cfg.s, None)
    rows = [first]
    q0 = first.invariant
    U = np.fft.rfft(u0.samples)
    U[-1] = 0.0
    u = u0
    for i in range(1, nsteps + 1):
        U_new = stepper(U)
        if not np.all(np.isfinite(U_new)):
            raise BlowupError(f"non-finite state at step {i}", (i - 1) * dt, rows)
        U = U_new
        if i % cfg.diag_stride == 0 or i == nsteps:
            u = RealField(cfg.grid, np.fft.irfft(U, n=n))
            rows.append(_row(i * dt, u, cfg.family, cfg.s, q0))
    if nsteps:
        u = RealField(cfg.grid, np.fft.irfft(U, n=n))
    wall = time.perf_counter() - start
    return RunResult(u, rows, nsteps, dt, wall)


def write_diagnostics_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "l2", "mean_abs", "zs", "psi4_or_phi4", "drift_rel"])
        for r in rows:
            w.writerow([repr(r.t), repr(r.l2), repr(r.mean_abs), repr(r.zs), repr(r.invariant), repr(r.drift_rel)])


def write_run_metadata(path, cfg: EvolutionConfig, result: RunResult, include_wall_time=True) -> None:
    meta = {
        "config": {
            "family": asdict(cfg.family),
            "grid": {"n": cfg.grid.num_points, "L": cfg.grid.half_length},
            "dt": cfg.dt,
            "dt_used": result.dt,
            "t_end": cfg.t_end,
            "dealias": cfg.dealias,
            "diag_stride": cfg.diag_stride,
            "s": cfg.s,
        },
        "steps": result.steps,
        "termination": result.termination,
    }
    if include_wall_time:
        meta["wall_time_s"] = result.wall_time_s
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _evolve(u0: RealField, fam, t, dt):
    cfg = EvolutionConfig(fam, u0.grid, dt, t, diag_stride=10**9)
    return run(u0, cfg).final


def verify_scaling(u0: RealField, lam: float, fam: DispersionFamily, t: float,
                   dt: float | None = None, rotation_exponent: float = 3.0) -> float:
    """Relative ``L^2`` discrepancy between the two sides of the scaling reduction.

    With ``u_l(t, x) = lam * u(lam^2 t, lam x)``: if ``u`` solves RMBO(gamma)
    on the torus ``[-L, L)`` then ``u_l`` solves RMBO(gamma * lam^3) on
    ``[-L/lam, L/lam)``.  Side A evolves ``u0`` to ``lam^2 t``; side B evolves
    ``lam * u0(lam x)`` (same samples, stretched grid, same point count) to
    ``t``.  Both runs use the same step ``dt``, so B takes ``1/lam^2`` times
    fewer steps in rescaled time and the discrepancy measures genuine
    time-stepping error.  ``rotation_exponent`` selects the power of ``lam``
    applied to ``gamma`` on side B so a wrong exponent can be measured.
    """
    if not (0 < lam <= 1) or not float(np.log2(lam)).is_integer():
        raise InvalidParameterError(f"lambda must be 2^-k with k >= 0, got {lam}")
    if fam.kind not in ("BO", "RMBO"):
        raise InvalidParameterError("scaling reduction is defined for the BO kinds")
    require_mean_zero(u0, "verify_scaling")
    if dt is None:
        dt = default_dt(u0)
    a = _evolve(u0, fam, lam**2 * t, dt)
    gb = Grid(u0.grid.num_points, u0.grid.half_length / lam)
    ub = RealField(gb, lam * u0.samples)
    fam_b = fam.with_gamma(fam.gamma * lam**rotation_exponent) if fam.gamma else fam
    b = _evolve(ub, fam_b, t, min(dt, default_dt(ub)))
    diff = lam * a.samples - b.samples
    return float(np.linalg.norm(diff) / np.linalg.norm(b.samples))


def deep_water_compare(u0: RealField, deltas, gamma: float, t: float, dt: float | None = None) -> list:
    """``||u_RMILW(delta)(t) - u_RMBO(t)|| / ||u_RMBO(t)||`` for each ``delta``."""
    deltas = [float(d) for d in deltas]
    if any(d < 1 for d in deltas):
        raise InvalidParameterError("deep-water comparison needs delta >= 1")
    require_mean_zero(u0, "deep_water_compare")
    if t == 0:
        return [0.0 for _ in deltas]
    if dt is None:
        dt = default_dt(u0)
    ref = _evolve(u0, DispersionFamily("RMBO" if gamma else "BO", gamma=gamma), t, dt)
    out = []
    for d in deltas:
        fam = DispersionFamily("RMILW" if gamma else "ILW", gamma=gamma, delta=d)
        v = _evolve(u0, fam, t, dt)
        out.append(float((v - ref).l2() / ref.l2()))
    return out


def duhamel_second_iterate(u0: RealField, fam: DispersionFamily, t: float, dt: float = 1e-3) -> RealField:
    """Bilinear Duhamel term ``-(1/2) int_0^t V(t - t') d_x (V(t') u0)^2 dt'`` by RK4.

    Integrates ``W' = -(1/2) V(-t') d_x (V(t') u0)^2`` from ``W(0) = 0`` and
    returns ``V(t) W(t)``.  No dealiasing is applied, so the grid must resolve
    every quadratic interaction of ``u0``.
    """
    g = u0.grid
    n = g.num_points
    xi = g.rfft_wavenumbers
    omega = linear_symbol(fam, xi)
    U0 = np.fft.rfft(u0.samples)
    U0[-1] = 0.0
    nsteps = max(1, math.ceil(abs(t) / dt - 1e-9))
    h = t / nsteps

    def rhs(s):
        v = np.fft.irfft(np.exp(-1j * s * omega) * U0, n=n)
        return np.exp(1j * s * omega) * (-0.5j * xi) * np.fft.rfft(v * v)

    W = np.zeros_like(U0)
    f_prev = rhs(0.0)
    for i in range(nsteps):
        s = i * h
        f_mid = rhs(s + 0.5 * h)
        f_next = rhs(s + h)
        # the right-hand side does not depend on W, so RK4 reduces to Simpson
        W += h / 6.0 * (f_prev + 4.0 * f_mid + f_next)
        f_prev = f_next
    out = np.exp(-1j * t * omega) * W
    out[-1] = 0.0
    return RealField(g, np.fft.irfft(out, n=n))
