"""Acceptance criteria 1-12.

Each test prints one ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary) and asserts at the stated tolerance.  Run standalone with
``python tests/test_acceptance.py`` for the PASS/FAIL lines alone.
"""
import re
import time
from pathlib import Path

import numpy as np
import pytest

from dispersive_lab.cli import trilinear_configs
from dispersive_lab.evolver import (
    EvolutionConfig,
    default_dt,
    deep_water_compare,
    run,
    verify_scaling,
)
from dispersive_lab.inflation_probe import TwoBumpSpec, build_two_bump, inflation_scan, second_iterate
from dispersive_lab.evolver import duhamel_second_iterate
from dispersive_lab.littlewood_paley import decompose, resolved_band, square_function_ratio
from dispersive_lab.multiplier_ops import DispersionFamily, coth_gap
from dispersive_lab.resonance_lab import bound_scan, trilinear_vanishing_check
from dispersive_lab.spectral_core import Grid, mean_zero_project

try:
    from conftest import ACCEPTANCE
except ImportError:  # standalone run
    ACCEPTANCE = {}

README = Path(__file__).resolve().parents[1] / "README.md"


def report(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def grid():
    return Grid(1024, 16 * np.pi)


def sech_datum(g):
    return mean_zero_project(g.from_function(lambda x: 1.0 / np.cosh(x) ** 2))


_RMBO_RUN = {}


def rmbo_run():
    if not _RMBO_RUN:
        g = grid()
        u0 = sech_datum(g)
        start = time.perf_counter()
        r = run(u0, EvolutionConfig(DispersionFamily.rmbo(1.0), g, default_dt(u0), 1.0, diag_stride=10))
        _RMBO_RUN["result"] = r
        _RMBO_RUN["seconds"] = time.perf_counter() - start
    return _RMBO_RUN["result"], _RMBO_RUN["seconds"]


def test_c01_l2_conservation():
    r, secs = rmbo_run()
    drift = max(abs(row.l2 / r.rows[0].l2 - 1) for row in r.rows)
    report(1, drift <= 1e-9 and secs < 10, f"max relative L2 drift {drift:.2e} (<= 1e-9), {secs:.2f}s (< 10s)")


def test_c02_mean_zero():
    r, _ = rmbo_run()
    worst = max(row.mean_abs for row in r.rows)
    report(2, worst <= 1e-13, f"max |zero mode| {worst:.2e} over {len(r.rows)} outputs (<= 1e-13)")


def test_c03_integrator_order():
    g = grid()
    u0 = sech_datum(g)
    fam = DispersionFamily.rmbo(1.0)
    start = time.perf_counter()
    sol = lambda dt: run(u0, EvolutionConfig(fam, g, dt, 0.1, diag_stride=10**6)).final
    a, b, c = sol(0.01), sol(0.005), sol(0.0025)
    order = np.log2((a - b).l2() / (b - c).l2())
    secs = time.perf_counter() - start
    report(3, 3.8 <= order <= 4.2 and secs < 30, f"measured order {order:.4f} (in [3.8, 4.2]), {secs:.2f}s (< 30s)")


def test_c04_bo_fourth_invariant():
    g = grid()
    u0 = sech_datum(g)
    dt = default_dt(u0)
    drift = {}
    for gamma in (0.0, 1e-3, 1e-2, 1e-1):
        fam = DispersionFamily.rmbo(gamma) if gamma else DispersionFamily.bo()
        r = run(u0, EvolutionConfig(fam, g, dt, 1.0, diag_stride=10**6))
        drift[gamma] = abs(r.rows[-1].drift_rel)
    ordered = drift[1e-3] < drift[1e-2] < drift[1e-1]
    report(
        4,
        drift[0.0] <= 1e-6 and ordered,
        f"BO drift {drift[0.0]:.2e} (<= 1e-6); |drift| at gamma 1e-3, 1e-2, 1e-1 = "
        f"{drift[1e-3]:.2e}, {drift[1e-2]:.2e}, {drift[1e-1]:.2e} (increasing in gamma)",
    )


def test_c05_ilw_invariant():
    g = grid()
    u0 = sech_datum(g)
    r = run(u0, EvolutionConfig(DispersionFamily.ilw(1.0), g, default_dt(u0), 1.0, diag_stride=50))
    drift = max(abs(row.drift_rel) for row in r.rows)
    report(5, drift <= 1e-6, f"phi4 max relative drift {drift:.2e} (<= 1e-6)")


def test_c06_resonance_bound():
    start = time.perf_counter()
    details, ok = [], True
    for fam in (DispersionFamily.rmbo(1.0), DispersionFamily.rmilw(1.0, 1.0)):
        table = {box: [bound_scan(fam, m, box, 10**6, seed=0) for m in (1.0, 2.0, 4.0, 8.0)] for box in (64.0, 128.0)}
        finite = all(np.isfinite(v) for vals in table.values() for v in vals)
        mono = all(all(b <= a for a, b in zip(vals, vals[1:])) for vals in table.values())
        box_factor = max(max(a, b) / min(a, b) for a, b in zip(table[64.0], table[128.0]))
        ok &= finite and mono and box_factor <= 1.5
        details.append(f"{fam.kind}: max {max(table[64.0] + table[128.0]):.3f}, box factor {box_factor:.4f}, "
                       f"nonincreasing={mono}")
    secs = time.perf_counter() - start
    report(6, ok and secs < 60, "; ".join(details) + f"; {secs:.1f}s (< 60s)")


def test_c07_trilinear_dichotomy():
    fam = DispersionFamily.rmbo(1.0)
    details, ok = [], True
    for ns, below, above in trilinear_configs():
        lo = trilinear_vanishing_check(ns, (below,) * 3, fam, trials=20, seed=0)
        hi = trilinear_vanishing_check(ns, (above,) * 3, fam, trials=20, seed=0)
        ratio = hi / lo if lo > 0 else np.inf
        ok &= lo <= 1e-12 and hi > 1e-6 and ratio >= 1e6
        details.append(f"N={ns} L={below:g}/{above:g}: below {lo:.2e}, above {hi:.2e}, ratio {ratio:.2e}")
    report(7, ok, "; ".join(details))


def test_c08_littlewood_paley():
    g = Grid(4096, 32 * np.pi)
    rng = np.random.default_rng(0)
    lo_band, hi_band = resolved_band(g)
    xi = g.rfft_wavenumbers
    ratios, errs = [], []
    for _ in range(100):
        a = 2.0 ** rng.integers(-2, 3)
        b = a * 2.0 ** rng.integers(1, 6)
        keep = (xi >= a) & (xi <= b) & (xi < g.nyquist)
        F = np.where(keep, rng.normal(size=xi.size) + 1j * rng.normal(size=xi.size), 0)
        f = g.field(np.fft.irfft(F, n=g.num_points))
        ratios.append(square_function_ratio(f, 0.0))
        dec = decompose(f, lo_band, hi_band)
        errs.append((dec.reconstruct() - f).l2() / f.l2())
    ok = min(ratios) >= 0.5 and max(ratios) <= 1 and max(errs) <= 1e-10
    report(8, ok, f"ratio range [{min(ratios):.4f}, {max(ratios):.4f}] (in [1/2, 1]), "
                  f"max reconstruction error {max(errs):.2e} (<= 1e-10)")


def test_c09_deep_water():
    g = grid()
    xi = g.rfft_wavenumbers[1:-1]
    xi = xi[xi >= 1]
    gaps = {d: float(coth_gap(d, xi).max()) for d in (2.0, 3.0, 4.0, 8.0, 16.0)}
    gap_ok = all(v <= 2.1 * np.exp(-2 * d) for d, v in gaps.items())
    diffs = deep_water_compare(sech_datum(g), [2.0, 4.0, 8.0], 1.0, 0.1)
    mono = diffs[0] > diffs[1] > diffs[2]
    report(9, gap_ok and mono, f"gap/bound max {max(v / (2.1 * np.exp(-2 * d)) for d, v in gaps.items()):.3f} (<= 1); "
                               f"differences at delta 2, 4, 8 = {diffs[0]:.3e}, {diffs[1]:.3e}, {diffs[2]:.3e}")


def test_c10_scaling():
    g = grid()
    u0 = g.from_function(lambda x: -2 * np.tanh(x) / np.cosh(x) ** 2)
    d = verify_scaling(u0, 0.5, DispersionFamily.rmbo(1.0), 0.1)
    report(10, d <= 1e-6, f"discrepancy {d:.2e} (<= 1e-6) with rotation rescaled by lambda^3")


def test_c11_norm_inflation():
    start = time.perf_counter()
    spec = TwoBumpSpec(alpha=0.25, big_n=4.0, s=0.75, gamma=1.0, t=1.0)
    g = Grid(1024, 32 * np.pi)
    a = second_iterate(spec, g)
    b = duhamel_second_iterate(build_two_bump(spec, g), spec.family, spec.t, dt=1e-3)
    xval = (a - b).l2() / b.l2()
    ns = [2.0**k for k in range(4, 10)]
    res = inflation_scan(0.75, 1.0, ns, t=1.0)
    q = np.array([r.quotient_f34 for r in res])
    increasing = bool(np.all(np.diff(q) > 0))
    slope = float(np.polyfit(np.log(ns), np.log(q), 1)[0])
    secs = time.perf_counter() - start
    ok = increasing and slope >= 0.4 and xval <= 1e-6 and secs < 120
    report(11, ok, f"quotient_f34 {', '.join(f'{v:.3e}' for v in q)}; increasing={increasing}; "
                   f"fitted exponent {slope:.3f} (>= 0.4); cross-validation {xval:.2e} (<= 1e-6); {secs:.1f}s")


def test_c12_limitations_documented():
    text = README.read_text() if README.exists() else ""
    flat = " ".join(text.split())
    named = all(re.search(rf"\b1\.{k}\b", flat) for k in (2, 3, 5, 6))
    stated = "not numerically reproducible" in flat or "not reproducible numerically" in flat
    report(12, named and stated, "README names theorems 1.2/1.3/1.5/1.6 as not numerically reproducible"
           if named and stated else "limitation statement missing from README")


if __name__ == "__main__":
    for name, fn in sorted((k, v) for k, v in list(globals().items()) if k.startswith("test_c")):
        try:
            fn()
        except AssertionError:
            pass
