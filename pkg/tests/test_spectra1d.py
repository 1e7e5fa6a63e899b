import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magstrip.fields import smooth_well, square_well, trapezoid_well
from magstrip.spectra1d import assemble_h, ground_state, sobolev_sup_check, threshold


def square_well_energy(V0: float, a: float) -> float:
    """Even ground state of the square well by bisection on the matching condition."""
    def mismatch(kappa):
        q = math.sqrt(V0 - kappa * kappa)
        return q * math.tan(q * a) - kappa

    lo = math.sqrt(max(V0 - (math.pi / (2 * a)) ** 2, 0.0)) + 1e-14
    hi = math.sqrt(V0) - 1e-15
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mismatch(lo) * mismatch(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return -(0.5 * (lo + hi)) ** 2


# bisection value of the oracle above for V0=4, a=1
SQUARE_WELL_E = -2.9393749317817246


def test_oracle_frozen_value():
    assert square_well_energy(4.0, 1.0) == pytest.approx(SQUARE_WELL_E, abs=1e-14)


def test_free_two_subintervals():
    system = assemble_h(None, 1.0, 2)
    assert system.diag.shape == (1,)
    assert system.diag[0] == pytest.approx(2.0 / system.spacing**2)


def test_assemble_rejects_clipped_support():
    with pytest.raises(ValueError, match="does not contain"):
        assemble_h(square_well(4, 1), 1.0, 64)


def test_assemble_rejects_single_interval():
    with pytest.raises(ValueError):
        assemble_h(None, 1.0, 1)


def test_free_ground_energy_converges_to_dirichlet_value():
    L = 1.5
    errors = []
    for n in (64, 128, 256):
        e = ground_state(assemble_h(None, L, n)).e
        errors.append(abs(e - (math.pi / (2 * L)) ** 2))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.01)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.01)


def test_square_well_at_L20():
    gs = ground_state(assemble_h(square_well(4, 1), 20.0, 2**15))
    assert gs.e == pytest.approx(SQUARE_WELL_E, abs=1e-6)


def test_threshold_square_well_oracle():
    result = threshold(square_well(4, 1))
    assert result.converged
    assert result.e == pytest.approx(SQUARE_WELL_E, abs=1e-8)


@pytest.mark.parametrize("profile", [square_well(4, 1), trapezoid_well(3, 0.7), smooth_well(5, 1, 0.3)])
def test_ground_state_positive(profile):
    gs = ground_state(assemble_h(profile, 8.0, 1024))
    assert np.all(gs.f > 0)
    assert np.sum(gs.f**2) * gs.spacing == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0.2, 6.0), st.floats(0.2, 2.0))
def test_ground_state_positive_random_wells(V0, a):
    gs = ground_state(assemble_h(trapezoid_well(V0, a), 4 * a + 2, 256))
    assert np.all(gs.f > 0)


def test_ground_state_matches_dense():
    system = assemble_h(trapezoid_well(4, 1), 5.0, 200)
    dense = np.diag(system.diag) + np.diag(system.off, 1) + np.diag(system.off, -1)
    assert ground_state(system).e == pytest.approx(np.linalg.eigvalsh(dense)[0], abs=1e-10)


def test_richardson_ratio():
    profile = trapezoid_well(4, 1)
    es = [ground_state(assemble_h(profile, 8.0, n)).e for n in (128, 256, 512, 1024)]
    d = np.abs(np.diff(es))
    assert d[0] / d[1] == pytest.approx(4.0, abs=0.3)
    assert d[1] / d[2] == pytest.approx(4.0, abs=0.3)


def test_truncation_monotone():
    profile = square_well(1.0, 0.5)
    es = [ground_state(assemble_h(profile, L, int(64 * L))).e for L in (1.0, 2.0, 4.0, 8.0)]
    assert all(b <= a + 1e-12 for a, b in zip(es, es[1:]))
    assert abs(es[-1] - es[-2]) < abs(es[1] - es[0])


def test_scaled_family_concentrates():
    widths = []
    for eps in (1.0, 0.5, 0.25):
        gs = threshold(trapezoid_well(4, 1, eps), n=2048, tol=1e-7).ground
        w = gs.f**2 * gs.spacing
        cdf = np.cumsum(w)
        q1, q3 = np.interp([0.25, 0.75], cdf, gs.nodes)
        widths.append(q3 - q1)
        assert math.isfinite(gs.e)
    assert widths[0] > widths[1] > widths[2]


def test_sobolev_constant():
    check = sobolev_sup_check(np.full(11, 3.0), 0.1)
    assert check.lhs == pytest.approx(9.0)
    assert check.rhs == pytest.approx(18.0)
    assert check.holds


def test_sobolev_linear():
    t = np.linspace(0, 1, 2001)
    check = sobolev_sup_check(t, t[1] - t[0])
    assert check.lhs == pytest.approx(1.0)
    assert check.rhs == pytest.approx(8.0 / 3.0, abs=1e-6)
    assert check.holds


def test_sobolev_ground_state_on_support():
    gs = ground_state(assemble_h(square_well(4, 1), 10.0, 2000))
    on = np.abs(gs.nodes) <= 1.0 + 1e-12
    check = sobolev_sup_check(gs.f[on], gs.spacing)
    assert check.holds


def test_sobolev_requires_three_samples():
    with pytest.raises(ValueError):
        sobolev_sup_check([1.0, 2.0], 0.1)
