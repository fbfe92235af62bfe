import math

import numpy as np
import pytest

from genedup import diffusion1d as d1

# frozen oracles: nested scipy quad for OU, an independent finite-difference
# boundary-value solve for the two model diffusions
OU_AT_0 = 1.4452456133883471
OU_AT_04 = 1.2763353442522487
WATTERSON_ITO = 4.8207271565
WATTERSON_MARGINAL = 6.5694427822
SUBFUNC_ITO = 5.6596789580
SUBFUNC_MARGINAL = 7.3766296697


# the endpoints are approached to within a 1e-10 offset, hence the absolute tolerance
@pytest.mark.parametrize("x0", [-0.9, -0.3, 0.0, 0.5, 0.99])
def test_brownian_exit_time_is_parabola(x0):
    assert d1.mean_exit_time(d1.brownian(1.0), x0) == pytest.approx(1 - x0 * x0, abs=1e-9)


def test_brownian_scaling():
    assert d1.mean_exit_time(d1.brownian(2.0), 0.0) == pytest.approx(4.0, abs=1e-9)


def test_ou_against_quadrature():
    assert d1.mean_exit_time(d1.ou(1.0), 0.0) == pytest.approx(OU_AT_0, rel=1e-8)
    assert d1.mean_exit_time(d1.ou(1.0), 0.4) == pytest.approx(OU_AT_04, rel=1e-7)


def test_exit_time_outside_interval_is_zero():
    assert d1.mean_exit_time(d1.brownian(1.0), 1.0) == 0.0


def test_watterson_constants():
    assert d1.mean_exit_time(d1.watterson_diffusion(1e-4), 0.0) == pytest.approx(WATTERSON_ITO, rel=1e-8)
    c = d1.mean_exit_time(d1.watterson_diffusion(1e-4, "marginal_sum"), 0.0)
    assert c == pytest.approx(WATTERSON_MARGINAL, rel=1e-8)


def test_subfunc_constants():
    assert d1.mean_exit_time(d1.subfunc_diffusion(1e-3), 0.0) == pytest.approx(SUBFUNC_ITO, rel=1e-7)
    c = d1.mean_exit_time(d1.subfunc_diffusion(1e-3, "marginal_sum"), 0.0)
    assert c == pytest.approx(SUBFUNC_MARGINAL, rel=1e-7)


def test_exit_time_is_converged_in_panel_order():
    d = d1.watterson_diffusion(1e-4)
    coarse = d1.mean_exit_time(d, 0.0, n=16)
    fine = d1.mean_exit_time(d, 0.0, n=32)
    assert coarse == pytest.approx(fine, rel=1e-9)


def test_exit_time_symmetric_in_start():
    d = d1.watterson_diffusion(1e-4)
    assert d1.mean_exit_time(d, 0.3) == pytest.approx(d1.mean_exit_time(d, -0.3), rel=1e-9)


def test_green_profile_integrates_to_exit_time():
    g = d1.green_profile(d1.watterson_diffusion(1e-4), 0.2, 4001)
    assert g.trapezoid() == pytest.approx(g.exit_time, rel=1e-3)
    assert g.density[0] == 0.0 and g.density[-1] == 0.0
    assert np.all(g.density >= 0)


def test_green_profile_rejects_tiny_grid():
    with pytest.raises(ValueError):
        d1.green_profile(d1.brownian(), 0.0, 2)


def test_coeff_profile_symmetry():
    prof = d1.coeff_profile(d1.watterson_diffusion(1e-4), 201)
    assert np.allclose(prof.z, -prof.z[::-1], atol=1e-15)
    assert np.allclose(prof.drift, -prof.drift[::-1], rtol=1e-9, atol=1e-15)
    assert np.allclose(prof.variance, prof.variance[::-1], rtol=1e-9)
    assert np.allclose(prof.ratio, -2 * prof.drift / prof.variance)


def test_exit_time_invariant_under_affine_scale():
    tab = d1.natural_scale(d1.ou(1.0), extra=(0.0,))
    assert tab.affine(3.0, -2.0).exit_time(0.0) == pytest.approx(tab.exit_time(0.0), rel=1e-12)


def test_exit_time_requires_break_at_start():
    tab = d1.natural_scale(d1.brownian(1.0), extra=(0.0,))
    with pytest.raises(ValueError):
        tab.exit_time(0.123456)


def test_invalid_interval():
    with pytest.raises(ValueError):
        d1.Diffusion1D(1.0, -1.0, lambda z: z, lambda z: z)


def test_two_c_reading():
    # 2c is the expected absorption time in units of N generations
    c = d1.mean_exit_time(d1.watterson_diffusion(1e-4), 0.0)
    assert math.isclose(2 * c, 9.6414543, rel_tol=1e-7)
