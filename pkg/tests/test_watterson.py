import numpy as np
import pytest
from scipy.integrate import solve_ivp

from genedup import watterson as wm

MU = 1e-4


def test_curve_points_satisfy_product_and_difference():
    z = np.linspace(-0.98, 0.98, 101)
    xs, ys = wm.curve_point(z, MU)
    assert np.allclose(xs * ys, np.sqrt(MU), rtol=1e-13, atol=0)
    assert np.allclose(xs - ys, z, atol=1e-14)


def test_g_is_root_of_its_quadratic():
    u = np.logspace(-3, 3, 61)
    t = wm.g_eval(u, MU)
    resid = t * t - (1 - u) * t - np.sqrt(MU) * u
    assert np.all(np.abs(resid) <= 1e-12 * np.maximum(1.0, t * t))
    assert np.all(t > 0)


def test_g_rejects_negative_ratio():
    with pytest.raises(ValueError):
        wm.g_eval(-0.5, MU)


def test_projection_matches_long_ode_run():
    # independent oracle: integrate the flow until it settles
    rng = np.random.default_rng(11)
    for x0, y0 in rng.uniform(0.05, 0.95, size=(8, 2)):
        sol = solve_ivp(lambda t, s: wm.ode_field_w(s[0], s[1], MU), (0, 4e5), [x0, y0],
                        method="LSODA", rtol=1e-11, atol=1e-14)
        xs, ys = wm.project_w(x0, y0, MU)
        assert abs(sol.y[0, -1] - xs) < 1e-7
        assert abs(sol.y[1, -1] - ys) < 1e-7


def test_projection_preserves_flow_invariant():
    x, y = 0.3, 0.7
    xs, ys = wm.project_w(x, y, MU)
    assert (1 - x) / (1 - y) == pytest.approx((1 - xs) / (1 - ys), rel=1e-12)


def test_corner_is_rejected():
    with pytest.raises(ValueError):
        wm.project_w(1.0, 1.0, MU)


def test_edge_projection_hits_curve_end():
    xs, ys = wm.project_w(0.4, 1.0, MU)
    assert xs == pytest.approx(np.sqrt(MU))
    assert ys == 1.0


def test_lyapunov_identity():
    rng = np.random.default_rng(5)
    x, y = rng.uniform(0, 1, size=(2, 200))
    lhs, rhs = wm.directional_derivative_identity(x, y, MU)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-300)
    assert np.all(lhs <= 0)


def _fd_coeffs(x, y, h=1e-4):
    # Ito coefficients of x* - y* from central differences of the projection
    def zstar(a, b):
        xs, ys = wm.project_w(a, b, MU)
        return xs - ys

    zx = (zstar(x + h, y) - zstar(x - h, y)) / (2 * h)
    zy = (zstar(x, y + h) - zstar(x, y - h)) / (2 * h)
    zxx = (zstar(x + h, y) - 2 * zstar(x, y) + zstar(x - h, y)) / h**2
    zyy = (zstar(x, y + h) - 2 * zstar(x, y) + zstar(x, y - h)) / h**2
    vx, vy = x * (1 - x), y * (1 - y)
    return 0.5 * (zxx * vx + zyy * vy), zx**2 * vx + zy**2 * vy


@pytest.mark.parametrize("z", [-0.7, -0.2, 0.0, 0.35, 0.8])
def test_limit_coefficients_against_numerical_derivatives(z):
    xs, ys = wm.curve_point(z, MU)
    drift, var = wm.limit_coeffs_w(z, MU)
    fd_drift, fd_var = _fd_coeffs(float(xs), float(ys))
    assert var == pytest.approx(fd_var, rel=1e-6)
    assert drift == pytest.approx(fd_drift, rel=1e-4, abs=1e-9)


def test_limit_coefficients_are_odd_and_even():
    z = np.linspace(0.05, 0.95, 19)
    d1, v1 = wm.limit_coeffs_w(z, MU)
    d2, v2 = wm.limit_coeffs_w(-z, MU)
    assert np.allclose(d1, -d2, rtol=1e-10)
    assert np.allclose(v1, v2, rtol=1e-10)


def test_ito_variance_exceeds_marginal_sum():
    # x* and y* are negatively correlated, so dropping the cross term loses variance
    z = np.linspace(-0.9, 0.9, 37)
    _, v_ito = wm.limit_coeffs_w(z, MU, "ito")
    _, v_sum = wm.limit_coeffs_w(z, MU, "marginal_sum")
    assert np.all(v_ito > v_sum)


def test_limit_domain_is_open():
    with pytest.raises(ValueError):
        wm.limit_coeffs_w(1 - np.sqrt(MU), MU)
    with pytest.raises(ValueError):
        wm.limit_coeffs_w(0.0, MU, variance="other")
