import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersive_lab.errors import InvalidInputError, InvalidParameterError, SingularPointError
from dispersive_lab.multiplier_ops import DispersionFamily
from dispersive_lab.resonance_lab import (
    RIDGE_FLOOR,
    PseudoproductKernel,
    bound_scan,
    lemma_bound,
    min_resonance_on_support,
    omega_bad,
    omega_good,
    pseudoproduct,
    resonance,
    resonance_values,
    sample_region,
    trilinear_setup,
    trilinear_vanishing_check,
    write_scan_csv,
)
from dispersive_lab.spectral_core import Grid

nonzero = st.floats(0.01, 100.0) | st.floats(-100.0, -0.01)


def test_resonance_hand_values():
    assert resonance(DispersionFamily.bo(), 1.0, 1.0).omega_value == pytest.approx(2.0)
    # printed symbol xi|xi| - 1/xi: phi(2) - 2 phi(1) = 3.5 - 0
    r = resonance(DispersionFamily.rmbo(1.0), 1.0, 1.0)
    assert r.omega_value == pytest.approx(3.5)
    assert r.bound_value == pytest.approx(4 * 1 + 2 / 1)
    assert r.ratio == pytest.approx(3.5 / 6)


@pytest.mark.parametrize("args", [(0.0, 1.0), (1.0, 0.0), (2.0, -2.0)])
def test_resonance_singular(args):
    with pytest.raises(SingularPointError):
        resonance(DispersionFamily.rmbo(1.0), *args)


@settings(max_examples=200, deadline=None)
@given(nonzero, nonzero, st.floats(0.0, 10.0))
def test_omega_linear_in_symbol(x1, x2, gamma):
    if abs(x1 + x2) < 1e-3:
        return
    full = resonance_values(DispersionFamily("RMBO" if gamma else "BO", gamma=gamma), x1, x2)
    split = omega_good(x1, x2) - gamma * omega_bad(x1, x2)
    assert abs(full - split) <= 1e-12 * max(1.0, abs(full), abs(omega_good(x1, x2)), gamma * abs(omega_bad(x1, x2)))


def test_bo_resonance_factorizes():
    # same-sign frequencies: Omega_g = 2 xi1 xi2 exactly
    x1, x2 = np.array([1.5, 3.0, 0.2]), np.array([2.0, 0.1, 7.0])
    assert np.allclose(omega_good(x1, x2), 2 * x1 * x2)
    assert np.allclose(omega_bad(x1, x2), -(x1**2 + x1 * x2 + x2**2) / (x1 * x2 * (x1 + x2)))


def test_lemma_bound_ordering():
    b = lemma_bound(np.array([3.0]), np.array([-1.0]))
    assert b[0] == pytest.approx(9 * 1 + 3 / 1)


def test_sample_region_constraints():
    xi1, xi2 = sample_region(2.0, 64.0, 30000, seed=3)
    assert np.all(np.minimum(abs(xi1), abs(xi2)) >= 2.0)
    assert np.all(np.maximum(abs(xi1), abs(xi2)) <= 64.0)
    assert np.all(abs(xi1 + xi2) >= RIDGE_FLOOR)
    # the ridge is actually probed
    assert np.min(abs(xi1 + xi2)) < 1e-2


@pytest.mark.parametrize("args", [(0.5, 64.0, 100), (4.0, 2.0, 100), (1.0, 64.0, 2)])
def test_bound_scan_degenerate(args):
    with pytest.raises(InvalidParameterError):
        bound_scan(DispersionFamily.rmbo(1.0), *args)


def test_bound_scan_deterministic():
    fam = DispersionFamily.rmbo(1.0)
    assert bound_scan(fam, 1.0, 64.0, 5000, seed=9) == bound_scan(fam, 1.0, 64.0, 5000, seed=9)


@pytest.mark.parametrize("fam", [DispersionFamily.rmbo(1.0), DispersionFamily.rmilw(1.0, 1.0)], ids=["RMBO", "RMILW"])
def test_scan_saturation(fam):
    vals = [bound_scan(fam, m, 64.0, 50000, seed=1) for m in (1.0, 2.0, 4.0, 8.0)]
    assert np.all(np.isfinite(vals))
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_scan_csv(tmp_path):
    fam = DispersionFamily.rmbo(1.0)
    _, cols = bound_scan(fam, 1.0, 8.0, 30, return_samples=True)
    write_scan_csv(tmp_path / "scan.csv", cols)
    with open(tmp_path / "scan.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["xi1", "xi2", "omega", "bound", "ratio"]
    assert len(rows) == len(cols[0]) + 1
    r = [float(v) for v in rows[1]]
    assert r[4] == pytest.approx(abs(r[2]) / r[3])


# --- pseudoproduct ---------------------------------------------------------------


def band_limited(grid, seed):
    # |k| < n/4 so the modular convolution never wraps
    rng = np.random.default_rng(seed)
    n = grid.num_points
    F = np.zeros(n // 2 + 1, dtype=complex)
    m = n // 4
    F[1:m] = rng.normal(size=m - 1) + 1j * rng.normal(size=m - 1)
    return grid.field(np.fft.irfft(F, n=n))


def test_pseudoproduct_identity_and_zero(pi_grid):
    f = pi_grid.from_function(np.cos)
    p = pseudoproduct(f, f, PseudoproductKernel.identity())
    assert np.allclose(p.samples, np.cos(pi_grid.x) ** 2, atol=1e-13)
    z = pseudoproduct(f, f, PseudoproductKernel.zero())
    assert np.all(z.samples == 0)


def test_pseudoproduct_identity_is_pointwise_product():
    g = Grid(64, 5.0)
    rng = np.random.default_rng(0)
    f, h = g.field(rng.normal(size=64)), g.field(rng.normal(size=64))
    p = pseudoproduct(f, h, PseudoproductKernel.identity())
    assert np.allclose(p.samples, f.samples * h.samples, atol=1e-12)


def test_pseudoproduct_grid_mismatch():
    a = Grid(16, 1.0).field(np.ones(16))
    b = Grid(16, 2.0).field(np.ones(16))
    with pytest.raises(InvalidInputError):
        pseudoproduct(a, b, PseudoproductKernel.identity())


def _generic_kernel(a, b):
    # real and even under (xi, zeta) -> (-xi, -zeta), not symmetric in its arguments
    return PseudoproductKernel(lambda xi, zeta: np.cos(a * xi + b * zeta) + 0.3 * np.sin(xi) * np.sin(2 * zeta), 1.3)


@pytest.mark.parametrize("seed", range(5))
def test_pseudoproduct_duality(seed):
    g = Grid(64, 6.0)
    f, gg, h = (band_limited(g, 10 * seed + i) for i in range(3))
    rng = np.random.default_rng(seed)
    k = _generic_kernel(*rng.uniform(0.2, 1.5, 2))
    k1 = PseudoproductKernel(lambda xi, zeta: k.psi(zeta - xi, -xi), k.sup_norm)
    k2 = PseudoproductKernel(lambda xi, zeta: k.psi(zeta - xi, zeta), k.sup_norm)
    lhs = pseudoproduct(f, gg, k).inner(h)
    scale = f.l2() * gg.l2() * h.l2()
    assert abs(lhs - f.inner(pseudoproduct(gg, h, k1))) <= 1e-10 * scale
    assert abs(lhs - pseudoproduct(f, h, k2).inner(gg)) <= 1e-10 * scale


def test_transposed_kernel_is_not_the_dual():
    # psi(zeta, xi) and psi(xi - zeta, xi) fail for a generic kernel
    g = Grid(64, 6.0)
    f, gg, h = (band_limited(g, i) for i in range(3))
    k = _generic_kernel(0.7, 1.1)
    swapped = PseudoproductKernel(lambda xi, zeta: k.psi(zeta, xi), k.sup_norm)
    shifted = PseudoproductKernel(lambda xi, zeta: k.psi(xi - zeta, xi), k.sup_norm)
    lhs = pseudoproduct(f, gg, k).inner(h)
    scale = f.l2() * gg.l2() * h.l2()
    assert abs(lhs - f.inner(pseudoproduct(gg, h, swapped))) > 1e-6 * scale
    assert abs(lhs - pseudoproduct(f, h, shifted).inner(gg)) > 1e-6 * scale


# --- trilinear -------------------------------------------------------------------


def test_trilinear_setup_masks():
    fam = DispersionFamily.rmbo(1.0)
    s = trilinear_setup(fam, (4, 4, 4), (2, 2, 2))
    assert len(s.supports) == 3
    assert all(m.any() for m in s.supports)
    # point reflection symmetry keeps the random fields real
    for m in s.supports:
        assert np.array_equal(m, np.roll(np.flip(m), 1, axis=(0, 1)))


def test_trilinear_parameter_errors():
    fam = DispersionFamily.rmbo(1.0)
    with pytest.raises(InvalidParameterError):
        trilinear_vanishing_check((8, 4, 4), (1, 1, 1), fam)
    with pytest.raises(InvalidParameterError):
        trilinear_vanishing_check((4, 4, 4), (0.5, 1, 1), fam)
    with pytest.raises(InvalidParameterError):
        trilinear_vanishing_check((4, 4, 4), (1, 1, 1), fam, kernel="bogus")


def test_min_resonance_scales_like_n1_n2():
    fam = DispersionFamily.rmbo(1.0)
    m = {ns: min_resonance_on_support(fam, ns) for ns in [(4, 4, 4), (4, 8, 8), (8, 8, 8)]}
    assert m[(4, 4, 4)] > 8 and m[(4, 8, 8)] > 16 and m[(8, 8, 8)] > 32
    # doubling N1 and N2 together multiplies the minimum by about four, not eight
    assert 3 < m[(8, 8, 8)] / m[(4, 4, 4)] < 5


@pytest.mark.parametrize("kernel", ["identity", "separable"])
@pytest.mark.parametrize("ns", [(4, 4, 4), (4, 8, 8)])
def test_vanishing_when_modulations_cannot_reach_resonance(ns, kernel):
    # the three modulations sum to at most 6 max L; below min|Omega| the
    # frequency-time supports cannot close a triangle
    fam = DispersionFamily.rmbo(1.0)
    level = 2.0 ** np.floor(np.log2(min_resonance_on_support(fam, ns) / 6.5))
    val = trilinear_vanishing_check(ns, (level,) * 3, fam, trials=5, kernel=kernel)
    assert val <= 1e-12


@pytest.mark.parametrize("kernel", ["identity", "separable"])
def test_nonvanishing_above_resonance(kernel):
    fam = DispersionFamily.rmbo(1.0)
    val = trilinear_vanishing_check((4, 4, 4), (16.0,) * 3, fam, trials=5, kernel=kernel)
    assert val > 1e-6
