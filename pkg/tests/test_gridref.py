import numpy as np
import pytest

from dysonchain.coefficients import PotentialPoly, doublewell_coefficients
from dysonchain.errors import GridTooNarrowError
from dysonchain.gridref import Grid, fd_doublewell_spectrum, margin_ok, richardson
from dysonchain.profiles import cosh_profile, eval_jet

HARMONIC = PotentialPoly(0.0, 0.0, 1.0, 0.0, 0.0)
QUARTIC = PotentialPoly(0.0, 1.0, 0.0, 0.0, 0.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1.0, -1.0)
    with pytest.raises(ValueError):
        Grid(-0.1, 0.1, 0.01)
    assert Grid(-1, 1, 0.01).points == 199


def test_harmonic_levels():
    s = fd_doublewell_spectrum(HARMONIC, Grid(-10, 10, 0.005), 5)
    exact = np.array([1, 3, 5, 7, 9])
    err = np.abs(s.levels.real - exact)
    # second-order stencil: the error is what step halving predicts
    assert np.all(err <= 1.01 * s.error_estimates)
    assert err[0] <= 2e-6
    assert np.all(s.levels.imag == 0)
    assert np.abs(richardson(HARMONIC, Grid(-10, 10, 0.005), 5) - exact).max() <= 1e-6


def test_quartic_ground():
    s = fd_doublewell_spectrum(QUARTIC, Grid(-12, 12, 0.002), 1)
    assert s.levels[0].real == pytest.approx(1.0603621, abs=1e-6)
    assert richardson(QUARTIC, Grid(-8, 8, 0.004), 1)[0] == pytest.approx(1.0603621, abs=2e-7)


def test_second_order_convergence():
    ests = [fd_doublewell_spectrum(QUARTIC, Grid(-8, 8, h), 1).error_estimates[0]
            for h in (0.02, 0.01, 0.005, 0.0025)]
    ratios = np.array(ests[:-1]) / np.array(ests[1:])
    assert np.all(np.abs(ratios - 4) < 0.1)


def test_auto_widening():
    wide = PotentialPoly(0.0, 1e-4, 0.0, 0.0, 0.0)
    assert not margin_ok(wide, Grid())
    s = fd_doublewell_spectrum(wide, Grid(), 1)
    assert "gridref" in s.label
    with pytest.raises(GridTooNarrowError):
        fd_doublewell_spectrum(PotentialPoly(0.0, 1e-7, 0.0, 0.0, 0.0), Grid(), 1)


def test_rejects_unbounded():
    with pytest.raises(ValueError):
        fd_doublewell_spectrum(PotentialPoly(0.0, -1.0, 0.0, 0.0, 0.0))


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_doublewell_levels_real_and_ordered(t):
    pp = doublewell_coefficients(eval_jet(cosh_profile(), t, 4))
    s = fd_doublewell_spectrum(pp, k=5)
    assert s.t == t
    assert np.all(np.diff(s.levels.real) > 0)
