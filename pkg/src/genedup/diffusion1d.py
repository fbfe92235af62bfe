"""One-dimensional diffusions on an interval with two absorbing endpoints.

Generator ``0.5 * a(z) f'' + b(z) f'``. Scale ``s'(y) = exp(-int_c^y 2b/a)``,
speed density ``m = 1 / (a s')`` and Green's function
``G(x, y) = 2 (s(x ^ y) - s(l)) (s(r) - s(x v y)) / (s(r) - s(l))``, so that
``E_x tau = int G(x, y) m(y) dy``.

Integrals are computed on panels graded geometrically toward both endpoints,
with a Chebyshev interpolant per panel. Both the cumulative scale integral and
the final exit-time integral come out of the same panel interpolants.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C

ENDPOINT_OFFSET = 1e-10


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, location: float | None = None):
        super().__init__(message if location is None else f"{message} near z={location:.6g}")
        self.location = location


@dataclass(frozen=True)
class Diffusion1D:
    l: float
    r: float
    drift: Callable[[np.ndarray], np.ndarray]
    variance: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __post_init__(self) -> None:
        if not self.l < self.r:
            raise ValueError(f"need l < r, got ({self.l}, {self.r})")

    @property
    def reference(self) -> float:
        """Point where ``s = 0``: the origin if inside, otherwise the midpoint."""
        return 0.0 if self.l < 0.0 < self.r else 0.5 * (self.l + self.r)


class _Panels:
    """Chebyshev panels on sorted breakpoints."""

    def __init__(self, breaks: np.ndarray, n: int):
        self.breaks = breaks
        self.n = n
        self.ref = C.chebpts1(n)
        lo, hi = breaks[:-1, None], breaks[1:, None]
        self.half = 0.5 * (hi - lo)
        self.nodes = 0.5 * (lo + hi) + self.half * self.ref  # (panels, n)
        self._vander_inv = np.linalg.inv(C.chebvander(self.ref, n - 1))
        # cumulative integral from the panel start, mapped back to node values
        integ = np.zeros((n + 1, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            integ[:, k] = C.chebint(e, lbnd=-1.0)
        self._cum_nodes = C.chebvander(self.ref, n) @ integ @ self._vander_inv
        self._cum_total = C.chebvander(np.array([1.0]), n) @ integ @ self._vander_inv

    def cumulative(self, vals: np.ndarray):
        """Cumulative integral from the left break; values at nodes and at breaks."""
        local = (vals @ self._cum_nodes.T) * self.half
        totals = (vals @ self._cum_total.T)[:, 0] * self.half[:, 0]
        at_breaks = np.concatenate([[0.0], np.cumsum(totals)])
        return local + at_breaks[:-1, None], at_breaks

    def integral(self, vals: np.ndarray) -> float:
        return float(self.cumulative(vals)[1][-1])


def _graded_breaks(l: float, r: float, extra: Sequence[float], eps: float, ratio: float):
    half = 0.5 * (r - l)
    d = [half]
    while d[-1] / ratio > eps:
        d.append(d[-1] / ratio)
    d = np.array(d + [eps])
    pts = np.concatenate([l + d, r - d, [l + half], np.asarray(extra, float)])
    pts = np.unique(np.clip(pts, l + eps, r - eps))
    keep = np.concatenate([[True], np.diff(pts) > 1e-13])
    return pts[keep]


@dataclass(frozen=True)
class ScaleSpeedTable:
    """Scale and speed on panel nodes; ``s`` is zero at the reference point."""

    diffusion: Diffusion1D
    nodes: np.ndarray
    s: np.ndarray
    s_prime: np.ndarray
    m: np.ndarray
    s_left: float
    s_right: float
    panels: _Panels = field(repr=False)

    def flat(self):
        return self.nodes.ravel(), self.s.ravel(), self.m.ravel()

    def green_times_speed(self, x0: float) -> np.ndarray:
        sl, sr = self.s_left, self.s_right
        sx = float(np.interp(x0, self.nodes.ravel(), self.s.ravel()))
        lo = np.minimum(self.s, sx)
        hi = np.maximum(self.s, sx)
        return 2.0 * (lo - sl) * (sr - hi) / (sr - sl) * self.m

    def exit_time(self, x0: float) -> float:
        d = self.diffusion
        if x0 <= d.l or x0 >= d.r:
            return 0.0
        if not np.any(np.isclose(self.panels.breaks, x0, rtol=0, atol=1e-13)):
            raise ValueError("x0 must be a panel break; build the table with extra=(x0,)")
        return self.panels.integral(self.green_times_speed(x0))

    def affine(self, alpha: float, beta: float) -> "ScaleSpeedTable":
        """Same diffusion with scale ``alpha * s + beta`` (speed rescaled to match)."""
        return replace(
            self,
            s=alpha * self.s + beta,
            s_prime=alpha * self.s_prime,
            m=self.m / alpha,
            s_left=alpha * self.s_left + beta,
            s_right=alpha * self.s_right + beta,
        )


def natural_scale(
    d: Diffusion1D,
    extra: Sequence[float] = (),
    n: int = 24,
    ratio: float = 2.0,
    eps: float = ENDPOINT_OFFSET,
) -> ScaleSpeedTable:
    ref = d.reference
    breaks = _graded_breaks(d.l, d.r, [ref, *extra], eps, ratio)
    panels = _Panels(breaks, n)
    z = panels.nodes
    b = np.asarray(d.drift(z), dtype=float)
    a = np.asarray(d.variance(z), dtype=float)
    bad = ~np.isfinite(b) | ~np.isfinite(a) | (a <= 0)
    if np.any(bad):
        raise QuadratureError("drift or variance invalid", float(z[bad][0]))
    ref_idx = int(np.argmin(np.abs(breaks - ref)))
    cum, at_breaks = panels.cumulative(2.0 * b / a)
    log_sp = -(cum - at_breaks[ref_idx])
    if np.any(np.abs(log_sp) > 700):
        where = float(z[np.abs(log_sp) > 700][0])
        raise QuadratureError("scale derivative overflows", where)
    sp = np.exp(log_sp)
    s_cum, s_breaks = panels.cumulative(sp)
    shift = s_breaks[ref_idx]
    s = s_cum - shift
    if np.any(np.diff(s.ravel()) <= 0):
        raise QuadratureError("scale is not increasing", float(z.ravel()[np.argmin(np.diff(s.ravel()))]))
    return ScaleSpeedTable(
        diffusion=d,
        nodes=z,
        s=s,
        s_prime=sp,
        m=1.0 / (a * sp),
        s_left=float(s_breaks[0] - shift),
        s_right=float(s_breaks[-1] - shift),
        panels=panels,
    )


def mean_exit_time(d: Diffusion1D, x0: float, n: int = 24, ratio: float = 2.0) -> float:
    """Expected time until either endpoint is hit, started from ``x0``."""
    if x0 <= d.l or x0 >= d.r:
        return 0.0
    return natural_scale(d, extra=(x0,), n=n, ratio=ratio).exit_time(x0)


@dataclass(frozen=True)
class GreenProfile:
    y: np.ndarray
    density: np.ndarray  # G(x0, y) m(y)
    exit_time: float

    def trapezoid(self) -> float:
        return float(np.trapezoid(self.density, self.y))


def green_profile(d: Diffusion1D, x0: float, n_points: int = 2001) -> GreenProfile:
    """``G(x0, y) m(y)`` on a grid clustered toward the endpoints."""
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    tab = natural_scale(d, extra=(x0,))
    total = tab.exit_time(x0)
    z, s, m = tab.flat()
    # cosine spacing puts points where the integrand is steep
    theta = np.linspace(0.0, np.pi, n_points)
    y = 0.5 * (d.l + d.r) - 0.5 * (d.r - d.l) * np.cos(theta)
    y = np.clip(y, d.l + ENDPOINT_OFFSET, d.r - ENDPOINT_OFFSET)
    y = np.unique(np.concatenate([y, [x0]]))
    s_y = np.interp(y, z, s)
    m_y = _interp_log(y, z, m)
    sx = float(np.interp(x0, z, s))
    sl, sr = tab.s_left, tab.s_right
    dens = 2.0 * (np.minimum(s_y, sx) - sl) * (sr - np.maximum(s_y, sx)) / (sr - sl) * m_y
    y = np.concatenate([[d.l], y, [d.r]])
    dens = np.concatenate([[0.0], dens, [0.0]])
    return GreenProfile(y=y, density=dens, exit_time=total)


def _interp_log(y, z, vals):
    return np.exp(np.interp(y, z, np.log(vals)))


@dataclass(frozen=True)
class CoeffProfile:
    z: np.ndarray
    drift: np.ndarray
    variance: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        """``-2 b / a``, the log-derivative of ``s'`` up to sign."""
        return -2.0 * self.drift / self.variance


def coeff_profile(d: Diffusion1D, n_points: int = 401) -> CoeffProfile:
    """Coefficients on a midpoint grid, symmetric about the interval centre."""
    k = np.arange(n_points)
    z = d.l + (d.r - d.l) * (k + 0.5) / n_points
    c = 0.5 * (d.l + d.r)
    z = c + 0.5 * ((z - c) - (z[::-1] - c))  # exact mirror symmetry
    return CoeffProfile(z=z, drift=np.asarray(d.drift(z)), variance=np.asarray(d.variance(z)))


# ---------------------------------------------------------------------------
# model instances


def watterson_diffusion(mu: float, variance: str = "ito") -> Diffusion1D:
    from .watterson import limit_coeffs_w

    half = 1.0 - np.sqrt(mu)

    def drift(z):
        return limit_coeffs_w(z, mu, variance)[0]

    def var(z):
        return limit_coeffs_w(z, mu, variance)[1]

    return Diffusion1D(-half, half, drift, var, name=f"watterson(mu={mu:g},{variance})")


def subfunc_diffusion(b: float, variance: str = "ito") -> Diffusion1D:
    from .subfunc import EquilibriumCurve, SubfuncParams, limit_coeffs_s

    p = SubfuncParams(b)
    curve = EquilibriumCurve(p)

    def drift(z):
        return limit_coeffs_s(z, p, curve, variance)[0]

    def var(z):
        return limit_coeffs_s(z, p, curve, variance)[1]

    return Diffusion1D(-p.alpha, p.alpha, drift, var, name=f"subfunc(b={b:g},{variance})")


def brownian(half_width: float = 1.0) -> Diffusion1D:
    return Diffusion1D(
        -half_width,
        half_width,
        lambda z: np.zeros_like(np.asarray(z, float)),
        lambda z: np.ones_like(np.asarray(z, float)),
        name="brownian",
    )


def ou(half_width: float = 1.0) -> Diffusion1D:
    """Drift ``-z``, unit variance."""
    return Diffusion1D(
        -half_width,
        half_width,
        lambda z: -np.asarray(z, float),
        lambda z: np.ones_like(np.asarray(z, float)),
        name="ou",
    )
