import numpy as np
import pytest
from scipy.integrate import solve_ivp

from genedup import subfunc as sf

BS = [1e-4, 1e-3, 1e-2]


@pytest.fixture(params=BS, ids=lambda b: f"b={b:g}")
def params(request):
    return sf.SubfuncParams(request.param)


def test_params_validation():
    with pytest.raises(ValueError):
        sf.SubfuncParams(0.0)
    with pytest.raises(ValueError):
        sf.SubfuncParams(0.34)


def test_curve_residuals_and_endpoint(params):
    x3 = np.linspace(0, params.alpha, 200)
    y3 = sf.curve_y3_of_x3(x3, params)
    x, y = sf.curve_xy(x3, y3, params)
    res = np.stack(sf.equilibrium_residuals(x3, y3, x, y, params))
    assert np.max(np.abs(res)) <= 1e-10
    assert sf.curve_y3_of_x3(0.0, params) == params.alpha


def test_curve_is_symmetric_under_gene_swap(params):
    x3 = np.linspace(0.01, params.alpha - 0.01, 50)
    y3 = sf.curve_y3_of_x3(x3, params)
    back = sf.curve_y3_of_x3(y3, params)
    assert np.allclose(back, x3, atol=1e-10)


def test_on_curve_fitness_equals_alpha(params):
    for e in sf.curve_grid(params, 40):
        w = sf.mean_fitness(e.as_state_array())
        assert w == pytest.approx(params.alpha, abs=1e-12)


def test_curve_points_are_fixed_points(params):
    for e in sf.curve_grid(params, 25):
        assert np.max(np.abs(sf.ode_field_s(e.as_state_array(), params))) < 1e-12


def test_symmetric_point_near_asymptote(params):
    e = sf.symmetric_point(params)
    assert e.x3 == pytest.approx(e.y3, abs=1e-10)
    assert abs(e.x3 - (1 - sf.SYMMETRIC_U * np.sqrt(params.b))) <= 10 * params.b


def test_field_preserves_ratio():
    p = sf.SubfuncParams(1e-3)
    s = np.array([0.3, 0.2, 0.1, 0.5, 0.05, 0.15])
    f = sf.ode_field_s(s, p)
    # d/dt log(x3) == d/dt log(y3)
    assert f[0] / s[0] == pytest.approx(f[3] / s[3], rel=1e-12)


def test_projection_matches_long_ode_run():
    p = sf.SubfuncParams(1e-2)
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = rng.dirichlet(np.ones(4))
        c = rng.dirichlet(np.ones(4))
        s0 = np.array([a[0], a[1], a[2], c[0], c[1], c[2]])
        sol = solve_ivp(lambda t, s: sf.ode_field_s(s, p), (0, 1e4), s0, method="LSODA",
                        rtol=1e-11, atol=1e-13)
        proj = sf.project_s(s0, p)
        x3, y3, x, y = proj
        assert sol.y[0, -1] == pytest.approx(x3, abs=1e-7)
        assert sol.y[3, -1] == pytest.approx(y3, abs=1e-7)
        assert sol.y[1, -1] == pytest.approx(x, abs=1e-6)
        assert sol.y[4, -1] == pytest.approx(y, abs=1e-6)


def test_projection_is_idempotent(params):
    rng = np.random.default_rng(8)
    s = np.zeros((100, 6))
    s[:, 0] = rng.uniform(0.01, 0.6, 100)
    s[:, 3] = rng.uniform(0.01, 0.6, 100)
    once = sf.project_s(s, params)
    again = sf.project_s(sf.equilibrium_state_array(*once.T), params)
    assert np.max(np.abs(once - again)) <= 1e-10


def test_projection_needs_functional_copies():
    p = sf.SubfuncParams(1e-3)
    with pytest.raises((ValueError, ArithmeticError)):
        sf.project_s(np.zeros(6), p)


def test_jacobian_against_finite_differences():
    p = sf.SubfuncParams(1e-3)
    e = sf.equilibrium_from_x3(0.4, p)
    J = sf.jacobian6(e, p)
    base = e.as_state_array()[sf._TO_LINEAR]
    h = 1e-7
    fd = np.empty((6, 6))
    for k in range(6):
        d = np.zeros(6)
        d[k] = h
        fd[:, k] = (sf.field_linear_order(base + d, p) - sf.field_linear_order(base - d, p)) / (2 * h)
    assert np.allclose(J, fd, atol=1e-7)


def test_routh_hurwitz_agrees_with_spectrum(params):
    for e in sf.curve_grid(params, 60):
        rep = sf.routh_hurwitz(e, params)
        assert rep.stable
        assert rep.max_real < 0
        m2, _ = sf.reduced_matrices(e, params)
        assert np.all(np.linalg.eigvals(m2).real < 0)


def test_jacobian_has_one_zero_mode():
    p = sf.SubfuncParams(1e-3)
    e = sf.symmetric_point(p)
    ev = np.sort(np.abs(np.linalg.eigvals(sf.jacobian6(e, p))))
    assert ev[0] < 1e-10
    assert ev[1] > 1e-6


def test_lemmas_two_and_three(params):
    rep = sf.verify_lemmas(params, 200)
    assert rep.lemma2_holds
    assert rep.lemma3_holds


def test_curve_inverse_round_trip():
    p = sf.SubfuncParams(1e-3)
    curve = sf.EquilibriumCurve(p)
    z = np.linspace(-0.99, 0.99, 41) * p.alpha
    x3, y3 = curve.point_at_z(z)
    assert np.allclose(x3 - y3, z, atol=1e-10)


def _fd_coeffs(x3, y3, p, h=1e-5):
    def zstar(a, b):
        s = np.zeros(6)
        s[0], s[3] = a, b
        out = sf.project_s(s, p)
        return out[0] - out[1]

    zx = (zstar(x3 + h, y3) - zstar(x3 - h, y3)) / (2 * h)
    zy = (zstar(x3, y3 + h) - zstar(x3, y3 - h)) / (2 * h)
    zxx = (zstar(x3 + h, y3) - 2 * zstar(x3, y3) + zstar(x3 - h, y3)) / h**2
    zyy = (zstar(x3, y3 + h) - 2 * zstar(x3, y3) + zstar(x3, y3 - h)) / h**2
    vx, vy = x3 * (1 - x3), y3 * (1 - y3)
    return 0.5 * (zxx * vx + zyy * vy), zx**2 * vx + zy**2 * vy


@pytest.mark.parametrize("x3", [0.1, 0.5, 0.85])
def test_limit_coefficients_against_numerical_derivatives(x3):
    p = sf.SubfuncParams(1e-2)
    y3 = float(sf.curve_y3_of_x3(x3, p))
    drift, var = sf.coeffs_at_curve_point(x3, y3, p)
    fd_drift, fd_var = _fd_coeffs(x3, y3, p)
    assert var == pytest.approx(fd_var, rel=1e-6)
    assert drift == pytest.approx(fd_drift, rel=2e-3, abs=1e-6)


def test_limit_coefficients_symmetry():
    p = sf.SubfuncParams(1e-3)
    z = np.linspace(0.05, 0.9, 12)
    d1, v1 = sf.limit_coeffs_s(z, p)
    d2, v2 = sf.limit_coeffs_s(-z, p)
    assert np.allclose(d1, -d2, rtol=1e-8, atol=1e-12)
    assert np.allclose(v1, v2, rtol=1e-8)
