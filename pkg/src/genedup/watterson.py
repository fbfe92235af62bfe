"""Watterson's two-locus double recessive null model.

State ``(x, y)`` holds the frequencies of the null alleles ``a`` and ``b``.
The deterministic part of the diffusion drives every state along the line
through ``(1, 1)`` onto the curve of equilibria ``x * y = sqrt(mu)``; the
projection onto that curve is expressed through the function ``g`` below.

All functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

VARIANCE_FORMS = ("ito", "marginal_sum")


@dataclass(frozen=True)
class WattersonParams:
    mu: float
    n_pop: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if self.n_pop is not None and self.n_pop < 2:
            raise ValueError(f"n_pop must be >= 2, got {self.n_pop}")

    @property
    def root_mu(self) -> float:
        return float(np.sqrt(self.mu))

    @property
    def half_width(self) -> float:
        """Endpoint of the curve coordinate ``z = x* - y*``."""
        return 1.0 - self.root_mu


@dataclass(frozen=True)
class WState:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"state ({self.x}, {self.y}) outside the unit square")


@dataclass(frozen=True)
class WCurvePoint:
    x_star: float
    y_star: float

    @property
    def ratio(self) -> float:
        """``(1 - x*) / (1 - y*)``, the flow-line label."""
        return (1.0 - self.x_star) / (1.0 - self.y_star)

    @property
    def z(self) -> float:
        return self.x_star - self.y_star


def ode_field_w(x, y, mu):
    """Right-hand side of the deterministic system (unscaled clock)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = mu - x * x * y * y
    return (1.0 - x) * f, (1.0 - y) * f


def _radicand(u, mu):
    return (1.0 - u) ** 2 + 4.0 * np.sqrt(mu) * u


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(np.isnan(u)):
        raise ValueError("line ratio u must be >= 0")
    return u


def g_eval(u, mu):
    """Positive root of ``t**2 - (1 - u) t - sqrt(mu) u = 0``.

    For ``u > 1`` the root is formed from the product of the roots to avoid
    cancellation.
    """
    u = _check_u(u)
    rm = np.sqrt(mu)
    sq = np.sqrt(_radicand(u, mu))
    with np.errstate(divide="ignore", invalid="ignore"):
        small = 0.5 * ((1.0 - u) + sq)
        large = 2.0 * rm * u / (sq - (1.0 - u))
    return np.where(u <= 1.0, small, large)


def g_prime(u, mu):
    u = _check_u(u)
    rm = np.sqrt(mu)
    R = _radicand(u, mu)
    sq = np.sqrt(R)
    A = u - 1.0 + 2.0 * rm
    D = 4.0 * rm * (1.0 - rm)  # R - A**2
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = -D / (2.0 * sq * (A + sq))
        direct = 0.5 * (-1.0 + A / sq)
    return np.where(A >= 0.0, stable, direct)


def g_second(u, mu):
    u = _check_u(u)
    rm = np.sqrt(mu)
    R = _radicand(u, mu)
    return 2.0 * rm * (1.0 - rm) / R**1.5


def project_w(x, y, mu):
    """Map ``(x, y)`` to the equilibrium the deterministic flow reaches.

    Returns ``(x_star, y_star)``. The corner ``(1, 1)`` is rejected because
    the flow line through it is undefined.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x >= 1.0) & (y >= 1.0)):
        raise ValueError("projection undefined at the corner (1, 1)")
    with np.errstate(divide="ignore"):
        u = (1.0 - x) / (1.0 - y)
        w = (1.0 - y) / (1.0 - x)
    xs = np.where(np.isinf(u), np.sqrt(mu), g_eval(np.where(np.isinf(u), 0.0, u), mu))
    ys = np.where(np.isinf(w), np.sqrt(mu), g_eval(np.where(np.isinf(w), 0.0, w), mu))
    return xs, ys


def project_point(state: WState, params: WattersonParams) -> WCurvePoint:
    xs, ys = project_w(state.x, state.y, params.mu)
    return WCurvePoint(float(xs), float(ys))


def curve_point(z, mu):
    """Curve point ``(x*, y*)`` with ``x* - y* = z`` and ``x* y* = sqrt(mu)``."""
    z = np.asarray(z, dtype=float)
    rm = np.sqrt(mu)
    s = np.sqrt(z * z + 4.0 * rm)
    xs = np.where(z >= 0, 0.5 * (z + s), 2.0 * rm / (s - z))
    ys = np.where(z <= 0, 0.5 * (s - z), 2.0 * rm / (s + z))
    return xs, ys


def _one_minus(z, mu):
    # 1 - x* and 1 - y* without cancellation near the curve ends
    z = np.asarray(z, dtype=float)
    rm = np.sqrt(mu)
    s = np.sqrt(z * z + 4.0 * rm)
    half = 1.0 - rm
    omx = 2.0 * (half - z) / (2.0 - z + s)
    omy = 2.0 * (half + z) / (2.0 + z + s)
    return omx, omy


def lyapunov_phi(x, y, mu):
    """Squared distance-from-curve functional ``(mu - x^2 y^2)^2``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (mu - x * x * y * y) ** 2


def lyapunov_gradient(x, y, mu):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = mu - x * x * y * y
    return -4.0 * f * x * y * y, -4.0 * f * x * x * y


def directional_derivative_identity(x, y, mu):
    """Return ``(grad(phi) . F, -4xy(y(1-x) + x(1-y)) phi)``; the two agree."""
    gx, gy = lyapunov_gradient(x, y, mu)
    fx, fy = ode_field_w(x, y, mu)
    lhs = gx * fx + gy * fy
    rhs = -4.0 * x * y * (y * (1.0 - x) + x * (1.0 - y)) * lyapunov_phi(x, y, mu)
    return lhs, rhs


def projection_gradients(x, y, mu):
    """First and second partial derivatives of ``x*`` and ``y*``.

    Returns a dict with keys ``xs_x, xs_y, xs_xx, xs_yy, ys_x, ys_y, ys_xx,
    ys_yy`` evaluated at ``(x, y)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _gradients(x, y, 1.0 - x, 1.0 - y, mu)


def _gradients(x, y, omx, omy, mu):
    u = omx / omy
    w = omy / omx
    gu1, gu2 = g_prime(u, mu), g_second(u, mu)
    gw1, gw2 = g_prime(w, mu), g_second(w, mu)
    return {
        "xs_x": -gu1 / omy,
        "xs_y": gu1 * omx / omy**2,
        "xs_xx": gu2 / omy**2,
        "xs_yy": gu2 * omx**2 / omy**4 + gu1 * 2.0 * omx / omy**3,
        "ys_y": -gw1 / omx,
        "ys_x": gw1 * omy / omx**2,
        "ys_yy": gw2 / omx**2,
        "ys_xx": gw2 * omy**2 / omx**4 + gw1 * 2.0 * omy / omx**3,
    }


def coeffs_at(x, y, mu, variance: str = "ito", omx=None, omy=None):
    """Drift and variance of ``X* - Y*`` at an arbitrary state ``(x, y)``.

    ``variance="ito"`` is the full quadratic variation of ``X* - Y*``.
    ``variance="marginal_sum"`` adds the two marginal variances of ``X*`` and
    ``Y*`` and drops their covariance.
    """
    if variance not in VARIANCE_FORMS:
        raise ValueError(f"variance must be one of {VARIANCE_FORMS}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    omx = 1.0 - x if omx is None else omx
    omy = 1.0 - y if omy is None else omy
    d = _gradients(x, y, omx, omy, mu)
    vx = x * omx
    vy = y * omy
    # the order-N drift terms cancel because x*, y* are constant on flow lines
    twice_drift = (d["xs_xx"] - d["ys_xx"]) * vx + (d["xs_yy"] - d["ys_yy"]) * vy
    if variance == "ito":
        var = (d["xs_x"] - d["ys_x"]) ** 2 * vx + (d["xs_y"] - d["ys_y"]) ** 2 * vy
    else:
        var = (d["xs_x"] ** 2 + d["ys_x"] ** 2) * vx + (d["xs_y"] ** 2 + d["ys_y"] ** 2) * vy
    return 0.5 * twice_drift, var


def limit_coeffs_w(z, mu, variance: str = "ito"):
    """Drift and variance of the limiting diffusion of ``z = X* - Y*``.

    The generator is ``0.5 * variance * d^2/dz^2 + drift * d/dz``.
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1.0 - np.sqrt(mu)):
        raise ValueError("|z| must be < 1 - sqrt(mu); the endpoints are absorbing")
    xs, ys = curve_point(z, mu)
    omx, omy = _one_minus(z, mu)
    return coeffs_at(xs, ys, mu, variance=variance, omx=omx, omy=omy)
