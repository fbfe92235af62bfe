"""Subfunctionalization model with two unlinked duplicate genes.

Each gene copy is in one of four states: 3 = 11 (both functions), 2 = 10,
1 = 01, 0 = 00. Six-dimensional states are stored in the order
``(x3, x2, x1, y3, y2, y1)``; the linearization uses the reordered
coordinates ``(x3, y3, x2, x1, y2, y1)``.

The curve of equilibria (with ``x2 = x1 = x`` and ``y2 = y1 = y``) is the
zero set of a symmetric biquadratic ``sum c_ij x3^i y3^j``. The flow keeps
``y3 / x3`` fixed, so the projection onto the curve is a ray intersection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from .watterson import VARIANCE_FORMS

# index maps between the two coordinate orders
STATE_ORDER = ("x3", "x2", "x1", "y3", "y2", "y1")
LINEAR_ORDER = ("x3", "y3", "x2", "x1", "y2", "y1")
_TO_LINEAR = [0, 3, 1, 2, 4, 5]
_FROM_LINEAR = [0, 2, 3, 1, 4, 5]


class CurveDomainError(ValueError):
    """Raised when a point lies off the parameter range of the curve."""


class SingularProjectionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SubfuncParams:
    b: float

    def __post_init__(self) -> None:
        if not 0.0 < self.b < 1.0 / 3.0:
            raise ValueError(f"b must lie in (0, 1/3), got {self.b}")

    @property
    def alpha(self) -> float:
        return 1.0 - 3.0 * self.b

    @property
    def beta(self) -> float:
        return 1.0 - self.b


@dataclass(frozen=True)
class SState:
    x3: float
    x2: float
    x1: float
    y3: float
    y2: float
    y1: float

    def __post_init__(self) -> None:
        vals = self.as_array()
        if np.any(vals < 0) or np.any(vals > 1) or self.x0 < -1e-12 or self.y0 < -1e-12:
            raise ValueError(f"invalid frequencies {tuple(vals)}")

    @property
    def x0(self) -> float:
        return 1.0 - self.x3 - self.x2 - self.x1

    @property
    def y0(self) -> float:
        return 1.0 - self.y3 - self.y2 - self.y1

    def as_array(self) -> np.ndarray:
        return np.array([self.x3, self.x2, self.x1, self.y3, self.y2, self.y1])

    def swapped(self) -> "SState":
        """Exchange gene labels (functions swap with them)."""
        return SState(self.y3, self.y1, self.y2, self.x3, self.x1, self.x2)


@dataclass(frozen=True)
class SEquilibrium:
    x3: float
    y3: float
    x: float
    y: float

    def gamma(self, params: SubfuncParams) -> float:
        return self.x3 + self.y3 - self.x3 * self.y3 - params.alpha

    def as_state_array(self) -> np.ndarray:
        return np.array([self.x3, self.x, self.x, self.y3, self.y, self.y])

    @property
    def z(self) -> float:
        return self.x3 - self.y3


@dataclass(frozen=True)
class CoeffTable:
    """Coefficients ``c_ij`` of the curve polynomial and its slice polynomials.

    ``d_j(t) = sum_i c_ij t^i`` and ``e_j(t) = d/dt (t^j d_j(t))``.
    """

    c: np.ndarray

    @classmethod
    def for_b(cls, b: float) -> "CoeffTable":
        c01 = 2.0 - 4.0 * b + 2.0 * b * b
        c = np.array(
            [
                [-1.0 + 4.0 * b - 5.0 * b * b + 6.0 * b**3, c01, -1.0],
                [c01, -4.0 + 4.0 * b + 2.0 * b * b, 2.0],
                [-1.0, 2.0, -1.0],
            ]
        )
        return cls(c)

    def d(self, j: int, t):
        c = self.c
        return c[0, j] + t * (c[1, j] + t * c[2, j])

    def d_prime(self, j: int, t):
        return self.c[1, j] + 2.0 * self.c[2, j] * t

    def e(self, j: int, t):
        if j == 0:
            return self.d_prime(0, t)
        return j * t ** (j - 1) * self.d(j, t) + t**j * self.d_prime(j, t)

    def e_prime(self, j: int, t):
        c2 = 2.0 * self.c[2, j]
        if j == 0:
            return c2 + 0.0 * t
        if j == 1:
            return 2.0 * self.d_prime(1, t) + t * c2
        return 2.0 * self.d(2, t) + 4.0 * t * self.d_prime(2, t) + t * t * c2

    def value(self, s, t):
        """Curve polynomial at ``(x3, y3) = (s, t)``."""
        return self.d(0, s) + t * (self.d(1, s) + t * self.d(2, s))

    def grad(self, s, t):
        ds = self.d_prime(0, s) + t * (self.d_prime(1, s) + t * self.d_prime(2, s))
        dt = self.d(1, s) + 2.0 * t * self.d(2, s)
        return ds, dt


def mean_fitness(s):
    """Probability that a random union of gametes is viable."""
    x3, x2, x1, y3, y2, y1 = np.moveaxis(np.asarray(s, dtype=float), -1, 0)
    return x3 + y3 - x3 * y3 + x1 * y2 + x2 * y1


def ode_field_s(s, params: SubfuncParams):
    """Deterministic vector field in state order ``(x3, x2, x1, y3, y2, y1)``."""
    s = np.asarray(s, dtype=float)
    b = params.b
    x3, x2, x1, y3, y2, y1 = np.moveaxis(s, -1, 0)
    w = x3 + y3 - x3 * y3 + x1 * y2 + x2 * y1
    out = np.stack(
        [
            -x3 * w + x3 - 3 * b * x3,
            -x2 * w + x2 * (y3 + y1) + b * x3 - 2 * b * x2,
            -x1 * w + x1 * (y3 + y2) + b * x3 - 2 * b * x1,
            -y3 * w + y3 - 3 * b * y3,
            -y2 * w + y2 * (x3 + x1) + b * y3 - 2 * b * y2,
            -y1 * w + y1 * (x3 + x2) + b * y3 - 2 * b * y1,
        ],
        axis=-1,
    )
    return out


def curve_y3_of_x3(x3, params: SubfuncParams, table: CoeffTable | None = None):
    """``y3`` on the curve of equilibria as a function of ``x3``.

    Picks the root with ``y3(0) = 1 - 3b``. Where ``y3`` is large it is
    computed as ``alpha + delta``: at ``y3 = alpha`` the curve polynomial
    reduces exactly to ``b^2 x3 (10 - 6b - 9 x3)``, so ``delta`` solves a
    quadratic whose constant term has no rounding at ``x3 = 0``. Where ``y3``
    is small the root is formed as ``-2 d0 / (d1 + sqrt(disc))``.
    """
    tab = table or CoeffTable.for_b(params.b)
    x3 = np.asarray(x3, dtype=float)
    b, a = params.b, params.alpha
    d0, d1, d2 = tab.d(0, x3), tab.d(1, x3), tab.d(2, x3)
    disc = d1 * d1 - 4.0 * d0 * d2
    if np.any(disc < -1e-15):
        bad = np.atleast_1d(x3)[np.atleast_1d(disc) < -1e-15]
        raise CurveDomainError(f"negative discriminant at x3={bad[:3]}")
    sq = np.sqrt(np.maximum(disc, 0.0))
    B = d1 + 2.0 * a * d2
    C = b * b * x3 * (10.0 - 6.0 * b - 9.0 * x3)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (-d1 + sq) / (2.0 * d2)
        small = -2.0 * d0 / (d1 + sq)
        delta = np.where(B > 0, -2.0 * C / (B + sq), (-B + sq) / (2.0 * d2))
    low = np.where(d1 > 0, small, direct)
    return np.where(low > 0.5 * a, a + delta, low)


def curve_xy(x3, y3, params: SubfuncParams):
    """Recover ``(x, y)`` from ``(x3, y3)`` on the curve."""
    x3 = np.asarray(x3, dtype=float)
    y3 = np.asarray(y3, dtype=float)
    b, beta = params.b, params.beta
    if np.any(np.isclose(x3, beta, rtol=0, atol=1e-15)) or np.any(
        np.isclose(y3, beta, rtol=0, atol=1e-15)
    ):
        raise ZeroDivisionError("x3 or y3 equals 1 - b")
    gamma = x3 + y3 - x3 * y3 - params.alpha
    x = (gamma - 2.0 * b * x3) / (2.0 * (y3 - beta))
    y = (gamma - 2.0 * b * y3) / (2.0 * (x3 - beta))
    return x, y


def equilibrium_from_x3(x3: float, params: SubfuncParams) -> SEquilibrium:
    y3 = float(curve_y3_of_x3(x3, params))
    x, y = curve_xy(x3, y3, params)
    return SEquilibrium(float(x3), y3, float(x), float(y))


def equilibrium_residuals(x3, y3, x, y, params: SubfuncParams):
    """Residuals of the three fixed-point equations for the reduced system."""
    a, beta, b = params.alpha, params.beta, params.b
    r1 = x3 + y3 - x3 * y3 + 2 * x * y - a
    r2 = x * (y3 - beta) + x * y + b * x3
    r3 = y * (x3 - beta) + x * y + b * y3
    return r1, r2, r3


# ---------------------------------------------------------------------------
# projection along rays y3 / x3 = r


def _ray_poly(u, r, tab: CoeffTable):
    ru = r * u
    return ru * ru * tab.d(2, u) + ru * tab.d(1, u) + tab.d(0, u)


def _u_of_r_le1(r, params: SubfuncParams, tab: CoeffTable, iters: int = 80):
    lo = np.zeros_like(r)
    hi = np.full_like(r, params.alpha)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = _ray_poly(mid, r, tab) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    u = 0.5 * (lo + hi)
    for _ in range(3):
        g = r * r * tab.e(2, u) + r * tab.e(1, u) + tab.e(0, u)
        step = _ray_poly(u, r, tab) / g
        u = np.where(np.abs(step) < hi - lo + 1e-14, u - step, u)
    return u


def u_of_r(r, params: SubfuncParams, table: CoeffTable | None = None):
    """``x3`` of the curve point on the ray ``y3 = r x3``.

    Bisection on ``[0, 1 - 3b]`` for ``r <= 1``; for ``r > 1`` the gene
    exchange symmetry gives ``u(r) = u(1/r) / r``.
    """
    tab = table or CoeffTable.for_b(params.b)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(~np.isfinite(r)):
        raise ValueError("ray slope r must be positive and finite")
    flip = r > 1.0
    rr = np.where(flip, 1.0 / r, r)
    u = _u_of_r_le1(np.atleast_1d(rr).astype(float), params, tab).reshape(rr.shape)
    return np.where(flip, u / r, u)


def _derivs_at(u, r, tab: CoeffTable):
    f = 2.0 * r * u * u * tab.d(2, u) + u * tab.d(1, u)
    g = r * r * tab.e(2, u) + r * tab.e(1, u) + tab.e(0, u)
    if np.any(g == 0):
        raise SingularProjectionError("vanishing denominator in du/dr")
    du = -f / g
    fp = 2.0 * u * u * tab.d(2, u) + (2.0 * r * tab.e(2, u) + tab.e(1, u)) * du
    gp = 2.0 * r * tab.e(2, u) + tab.e(1, u) + (
        r * r * tab.e_prime(2, u) + r * tab.e_prime(1, u) + tab.e_prime(0, u)
    ) * du
    d2u = -(fp * g - f * gp) / (g * g)
    return du, d2u


def projection_derivs(r, params: SubfuncParams, table: CoeffTable | None = None):
    """``(u, du/dr, d2u/dr2)`` for the ray parameter ``r = y3 / x3``.

    Because the curve polynomial is symmetric, the mirrored map
    ``v(q) = y3*`` with ``q = x3 / y3`` is the same function of its argument,
    so ``projection_derivs(q)`` also returns ``(v, dv/dq, d2v/dq2)``.
    """
    tab = table or CoeffTable.for_b(params.b)
    r = np.asarray(r, dtype=float)
    u = u_of_r(r, params, tab)
    du, d2u = _derivs_at(u, r, tab)
    return u, du, d2u


def project_s(s, params: SubfuncParams, table: CoeffTable | None = None):
    """Curve point reached by the flow from ``s`` (state order).

    Returns an array ``(x3*, y3*, x*, y*)`` along the last axis.
    """
    s = np.asarray(s, dtype=float)
    x3 = s[..., 0]
    y3 = s[..., 3]
    if np.any(x3 <= 0) or np.any(y3 <= 0):
        raise ValueError("projection needs x3 > 0 and y3 > 0")
    r = y3 / x3
    u = u_of_r(r, params, table)
    v = r * u
    flip = r > 1.0
    # on the far side of the diagonal recover x3* from the better-conditioned y3*
    q = np.where(flip, 1.0 / r, 1.0)
    v = np.where(flip, u_of_r(np.where(flip, q, 1.0), params, table), v)
    u = np.where(flip, q * v, u)
    x, y = curve_xy(u, v, params)
    return np.stack([u, v, x, y], axis=-1)


def project_state(state: SState, params: SubfuncParams) -> SEquilibrium:
    x3, y3, x, y = project_s(state.as_array(), params)
    return SEquilibrium(float(x3), float(y3), float(x), float(y))


def equilibrium_state_array(x3, y3, x, y):
    """Expand curve points to six-dimensional state arrays."""
    return np.stack([x3, x, x, y3, y, y], axis=-1)


# ---------------------------------------------------------------------------
# tabulated curve and the limiting one-dimensional diffusion


@dataclass(frozen=True)
class EquilibriumCurve:
    """Tabulation of the curve by ``x3`` with inversion from ``z = x3 - y3``."""

    params: SubfuncParams
    n_nodes: int = 2048
    table: CoeffTable = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "table", CoeffTable.for_b(self.params.b))

    @cached_property
    def x3_nodes(self) -> np.ndarray:
        k = np.arange(self.n_nodes)
        return 0.5 * self.params.alpha * (1.0 - np.cos(np.pi * k / (self.n_nodes - 1)))

    @cached_property
    def z_nodes(self) -> np.ndarray:
        x3 = self.x3_nodes
        return x3 - curve_y3_of_x3(x3, self.params, self.table)

    @cached_property
    def _inverse(self) -> PchipInterpolator:
        z = self.z_nodes
        if np.any(np.diff(z) <= 0):
            raise CurveDomainError("z(x3) is not monotone on the tabulated curve")
        return PchipInterpolator(z, self.x3_nodes)

    @property
    def half_width(self) -> float:
        return self.params.alpha

    def x3_of_z(self, z):
        z = np.asarray(z, dtype=float)
        a = self.params.alpha
        if np.any(np.abs(z) > a):
            raise CurveDomainError("|z| exceeds 1 - 3b")
        x3 = np.clip(self._inverse(z), 0.0, a)
        tab = self.table
        for _ in range(4):
            y3 = curve_y3_of_x3(x3, self.params, tab)
            cs, ct = tab.grad(x3, y3)
            dy3 = -cs / ct
            x3 = np.clip(x3 - (x3 - y3 - z) / (1.0 - dy3), 0.0, a)
        return x3

    def point_at_z(self, z):
        x3 = self.x3_of_z(z)
        y3 = curve_y3_of_x3(x3, self.params, self.table)
        return x3, y3


def _coeffs_on_curve(X, Y, params: SubfuncParams, tab: CoeffTable, variance: str):
    R = Y / X
    Q = X / Y
    du, d2u = _derivs_at(X, R, tab)
    dv, d2v = _derivs_at(Y, Q, tab)
    vx = X * (1.0 - X)
    vy = Y * (1.0 - Y)
    # partial derivatives of x3* = u(y3/x3) and y3* = v(x3/y3)
    u_x = -du * Y / X**2
    u_y = du / X
    u_xx = d2u * Y * Y / X**4 + du * 2.0 * Y / X**3
    u_yy = d2u / X**2
    v_y = -dv * X / Y**2
    v_x = dv / Y
    v_yy = d2v * X * X / Y**4 + dv * 2.0 * X / Y**3
    v_xx = d2v / Y**2
    twice_drift = (u_xx - v_xx) * vx + (u_yy - v_yy) * vy
    if variance == "ito":
        var = (u_x - v_x) ** 2 * vx + (u_y - v_y) ** 2 * vy
    else:
        var = (u_x**2 + v_x**2) * vx + (u_y**2 + v_y**2) * vy
    return 0.5 * twice_drift, var


def limit_coeffs_s(z, params: SubfuncParams, curve: EquilibriumCurve | None = None,
                   variance: str = "ito"):
    """Drift and variance of the limiting diffusion of ``z = X3* - Y3*``.

    Same generator convention as the Watterson model:
    ``0.5 * variance * d^2/dz^2 + drift * d/dz``.
    """
    if variance not in VARIANCE_FORMS:
        raise ValueError(f"variance must be one of {VARIANCE_FORMS}")
    curve = curve or EquilibriumCurve(params)
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= params.alpha):
        raise CurveDomainError("|z| must be < 1 - 3b; the endpoints are absorbing")
    X, Y = curve.point_at_z(z)
    return _coeffs_on_curve(X, Y, params, curve.table, variance)


def coeffs_at_curve_point(x3, y3, params: SubfuncParams, variance: str = "ito"):
    tab = CoeffTable.for_b(params.b)
    return _coeffs_on_curve(np.asarray(x3, float), np.asarray(y3, float), params, tab, variance)


# ---------------------------------------------------------------------------
# linearization


def jacobian6(e: SEquilibrium, params: SubfuncParams) -> np.ndarray:
    """Linearization at a curve point in coordinates ``(x3, y3, x2, x1, y2, y1)``."""
    b = params.b
    x3, y3, x2, x1, y2, y1 = e.x3, e.y3, e.x, e.x, e.y, e.y
    gw = np.array([1 - y3, 1 - x3, y1, y2, x1, x2])
    return np.array(
        [
            -x3 * gw,
            -y3 * gw,
            -x2 * gw + np.array([b, x2, y3 + y1 - 1 + b, 0, 0, x2]),
            -x1 * gw + np.array([b, x1, 0, y3 + y2 - 1 + b, x1, 0]),
            -y2 * gw + np.array([y2, b, 0, y2, x3 + x1 - 1 + b, 0]),
            -y1 * gw + np.array([y1, b, y2, 0, 0, x3 + x2 - 1 + b]),
        ]
    )


def field_linear_order(s_lin, params: SubfuncParams):
    """``ode_field_s`` with input and output in linearization order."""
    s_lin = np.asarray(s_lin, dtype=float)
    return ode_field_s(s_lin[..., _FROM_LINEAR], params)[..., _TO_LINEAR]


def block4(e: SEquilibrium, params: SubfuncParams) -> np.ndarray:
    """Linearization restricted to the ``(x3, y3, x, y)`` symmetric subspace."""
    b, x3, y3, x, y = params.b, e.x3, e.y3, e.x, e.y
    return np.array(
        [
            [-x3 * (1 - y3), -x3 * (1 - x3), -2 * x3 * y, -2 * x3 * x],
            [-y3 * (1 - y3), -y3 * (1 - x3), -2 * y3 * y, -2 * y3 * x],
            [-x * (1 - y3) + b, -x * (1 - x3) + x, -2 * x * y - b * x3 / x, -2 * x * x + x],
            [-y * (1 - y3) + y, -y * (1 - x3) + b, -2 * y * y + y, -2 * x * y - b * y3 / y],
        ]
    )


def basis_change(e: SEquilibrium):
    """The change of basis ``(V, V^-1)`` that removes the fitness-gradient rows."""
    x3, y3, x, y = e.x3, e.y3, e.x, e.y
    v = np.array(
        [
            [x3 / 2, x3 / 2, 0, 0],
            [-y3 / 2, y3 / 2, 0, 0],
            [x / 2, x / 2, 1, 0],
            [-y / 2, y / 2, 0, 1],
        ]
    )
    v_inv = np.array(
        [
            [1 / x3, -1 / y3, 0, 0],
            [1 / x3, 1 / y3, 0, 0],
            [-x / x3, 0, 1, 0],
            [0, -y / y3, 0, 1],
        ]
    )
    return v, v_inv


def reduced_matrices(e: SEquilibrium, params: SubfuncParams):
    """Return ``(M2, M)``: the antisymmetric 2x2 block and the reduced 3x3 matrix."""
    b, x3, y3, x, y = params.b, e.x3, e.y3, e.x, e.y
    if x <= 0 or y <= 0:
        raise ValueError("reduced matrices need x > 0 and y > 0")
    m2 = np.array([[-b * x3 / x, -x], [-y, -b * y3 / y]])
    m = np.array(
        [
            [-x3 * (1 - y3) - y3 * (1 - x3) - 4 * x * y, -4 * y, -4 * x],
            [x * (y3 + y) / 2, -b * x3 / x, x],
            [y * (x3 + x) / 2, y, -b * y3 / y],
        ]
    )
    return m2, m


@dataclass(frozen=True)
class StabilityReport:
    trace: float
    det: float
    b2: float
    eigenvalues: np.ndarray
    rh_pass: tuple[bool, bool, bool]

    @property
    def stable(self) -> bool:
        return all(self.rh_pass)

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))


def principal_minor_sum(m: np.ndarray) -> float:
    return float(
        (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        + (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        + (m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0])
    )


def routh_hurwitz(e: SEquilibrium, params: SubfuncParams) -> StabilityReport:
    _, m = reduced_matrices(e, params)
    tr = float(np.trace(m))
    det = float(np.linalg.det(m))
    b2 = principal_minor_sum(m)
    return StabilityReport(
        trace=tr,
        det=det,
        b2=b2,
        eigenvalues=np.linalg.eigvals(m),
        rh_pass=(tr < 0, det < 0, det - tr * b2 > 0),
    )


def curve_grid(params: SubfuncParams, n: int = 200) -> list[SEquilibrium]:
    """``n`` interior curve points, equally spaced in ``x3``."""
    x3s = params.alpha * np.arange(1, n + 1) / (n + 1)
    return [equilibrium_from_x3(v, params) for v in x3s]


def symmetric_point(params: SubfuncParams, tol: float = 1e-15) -> SEquilibrium:
    """Curve point with ``x3 = y3``, by bisection on ``y3(t) - t``."""
    lo, hi = 0.0, params.alpha
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if curve_y3_of_x3(mid, params) - mid > 0:
            lo = mid
        else:
            hi = mid
    return equilibrium_from_x3(0.5 * (lo + hi), params)


SYMMETRIC_U = float(np.sqrt(2.0 + np.sqrt(5.0)))
SYMMETRIC_V = float((1.0 + np.sqrt(5.0)) / (2.0 * np.sqrt(2.0 + np.sqrt(5.0))))


@dataclass
class LemmaReport:
    b: float
    x3: np.ndarray
    lemma2_margin_x: np.ndarray  # b x3 / x - y
    lemma2_margin_y: np.ndarray  # b y3 / y - x
    lemma3_margin: np.ndarray  # det(M) - b2 trace(M)
    a1_first: np.ndarray  # y3 (1 - x3) - x
    a1_second: np.ndarray  # x - y
    x3_ge_y3: np.ndarray
    symmetric_gap: float  # y3 (1 - x3) - x at the symmetric point
    symmetric_prediction: float

    @property
    def lemma2_holds(self) -> bool:
        return bool(np.all(self.lemma2_margin_x > 0) and np.all(self.lemma2_margin_y > 0))

    @property
    def lemma3_holds(self) -> bool:
        return bool(np.all(self.lemma3_margin > 0))

    def a1_holds_when(self, x3_ge_y3: bool) -> bool:
        mask = self.x3_ge_y3 if x3_ge_y3 else ~self.x3_ge_y3
        ok = (self.a1_first >= 0) & (self.a1_second >= 0)
        return bool(np.all(ok[mask]))

    def violations(self) -> dict[str, int]:
        return {
            "lemma2": int(np.sum((self.lemma2_margin_x <= 0) | (self.lemma2_margin_y <= 0))),
            "lemma3": int(np.sum(self.lemma3_margin <= 0)),
        }


def verify_lemmas(params: SubfuncParams, grid_size: int = 200) -> LemmaReport:
    """Evaluate the curve inequalities on a grid; violations are reported, not raised."""
    b = params.b
    pts = curve_grid(params, grid_size)
    x3 = np.array([p.x3 for p in pts])
    y3 = np.array([p.y3 for p in pts])
    x = np.array([p.x for p in pts])
    y = np.array([p.y for p in pts])
    l3 = []
    for p in pts:
        rep = routh_hurwitz(p, params)
        l3.append(rep.det - rep.b2 * rep.trace)
    sym = symmetric_point(params)
    u = SYMMETRIC_U
    return LemmaReport(
        b=b,
        x3=x3,
        lemma2_margin_x=b * x3 / x - y,
        lemma2_margin_y=b * y3 / y - x,
        lemma3_margin=np.array(l3),
        a1_first=y3 * (1 - x3) - x,
        a1_second=x - y,
        x3_ge_y3=x3 >= y3,
        symmetric_gap=sym.y3 * (1 - sym.x3) - sym.x,
        symmetric_prediction=(u * u + 1) / (2 * u) * np.sqrt(b),
    )
