"""Property suites shared by the ``verify`` command and the tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import subfunc as sf
from . import watterson as wm
from .diffusion1d import brownian, mean_exit_time, subfunc_diffusion, watterson_diffusion

SUITES = ("lemmas", "curve", "rh", "ito", "oracles")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    informational: bool = False

    @property
    def status(self) -> str:
        if self.informational:
            return "info"
        return "pass" if self.passed else "fail"


def _rel_err(fd, exact):
    fd = np.asarray(fd)
    exact = np.asarray(exact)
    return float(np.max(np.abs(fd - exact) / np.abs(exact)))


def fd_first(f, t, h):
    h = h * np.maximum(1.0, np.abs(t))
    return (f(t + h) - f(t - h)) / (2.0 * h)


def fd_second(f, t, h):
    h = h * np.maximum(1.0, np.abs(t))
    return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)


R_GRID = np.logspace(-2, 2, 41)
U_GRID = np.logspace(-2, 2, 41)


def derivative_errors(mu: float = 1e-4, b: float = 1e-3) -> dict[str, float]:
    """Max relative deviation of closed-form derivatives from central differences."""
    p = sf.SubfuncParams(b)
    out = {
        "g'": _rel_err(fd_first(lambda u: wm.g_eval(u, mu), U_GRID, 1e-5), wm.g_prime(U_GRID, mu)),
        "g''": _rel_err(fd_second(lambda u: wm.g_eval(u, mu), U_GRID, 1e-3), wm.g_second(U_GRID, mu)),
    }
    _, du, d2u = sf.projection_derivs(R_GRID, p)
    out["du/dr"] = _rel_err(fd_first(lambda r: sf.u_of_r(r, p), R_GRID, 1e-5), du)
    out["d2u/dr2"] = _rel_err(fd_second(lambda r: sf.u_of_r(r, p), R_GRID, 1e-3), d2u)

    # v(q): the y3 coordinate of the projection of a state with x3 / y3 = q
    def v_of_q(q):
        y3 = 0.5
        s = np.zeros(np.shape(q) + (6,))
        s[..., 0] = q * y3
        s[..., 3] = y3
        return sf.project_s(s, p)[..., 1]

    q = R_GRID[R_GRID < 1.9]  # keep q * y3 inside the simplex
    _, dv, d2v = sf.projection_derivs(q, p)
    out["dv/dq"] = _rel_err(fd_first(v_of_q, q, 1e-5), dv)
    out["d2v/dq2"] = _rel_err(fd_second(v_of_q, q, 1e-3), d2v)
    return out


def suite_ito(mu: float = 1e-4, b: float = 1e-3) -> list[Check]:
    errs = derivative_errors(mu, b)
    checks = []
    for name, e in errs.items():
        tol = 1e-4 if "2" in name or "''" in name else 1e-6
        checks.append(Check(f"{name} vs finite differences", e, tol, e <= tol))
    return checks


def suite_curve(b: float = 1e-3, grid: int = 200) -> list[Check]:
    p = sf.SubfuncParams(b)
    x3 = np.linspace(0.0, p.alpha, grid)
    y3 = sf.curve_y3_of_x3(x3, p)
    x, y = sf.curve_xy(x3, y3, p)
    res = np.max(np.abs(np.stack(sf.equilibrium_residuals(x3, y3, x, y, p))))
    w = sf.mean_fitness(sf.equilibrium_state_array(x3, y3, x, y))
    sym = sf.symmetric_point(p)
    asym = 1.0 - sf.SYMMETRIC_U * np.sqrt(b)
    y0 = float(sf.curve_y3_of_x3(0.0, p))
    return [
        Check("equilibrium residual max", float(res), 1e-10, res <= 1e-10),
        Check("|y3(0) - (1 - 3b)|", abs(y0 - p.alpha), 1e-12, abs(y0 - p.alpha) <= 1e-12),
        Check("on-curve fitness |w - (1 - 3b)|", float(np.max(np.abs(w - p.alpha))), 1e-10,
              bool(np.max(np.abs(w - p.alpha)) <= 1e-10)),
        Check("symmetric point |x3 - asymptote|", abs(sym.x3 - asym), 10 * b, abs(sym.x3 - asym) <= 10 * b),
    ]


def suite_rh(b: float = 1e-3, grid: int = 200) -> list[Check]:
    p = sf.SubfuncParams(b)
    pts = sf.curve_grid(p, grid)
    all_rh = True
    agree = True
    m2_ok = True
    spectral = -np.inf
    for e in pts:
        rep = sf.routh_hurwitz(e, p)
        all_rh &= rep.stable
        agree &= rep.stable == (rep.max_real < 0)
        m2, _ = sf.reduced_matrices(e, p)
        m2_ok &= bool(np.max(np.linalg.eigvals(m2).real) < 0)
        ev = np.sort(np.linalg.eigvals(sf.jacobian6(e, p)).real)
        spectral = max(spectral, ev[-2])  # largest after the single zero
    return [
        Check("Routh-Hurwitz conditions on grid", float(all_rh), 1, all_rh),
        Check("RH <=> max Re(eig M) < 0", float(agree), 1, agree),
        Check("2x2 block eigenvalues negative", float(m2_ok), 1, m2_ok),
        Check("second largest Re(eig J6)", float(spectral), 0.0, spectral < 0),
    ]


def suite_lemmas(b: float = 1e-3, grid: int = 200) -> list[Check]:
    p = sf.SubfuncParams(b)
    rep = sf.verify_lemmas(p, grid)
    m2 = float(min(rep.lemma2_margin_x.min(), rep.lemma2_margin_y.min()))
    m3 = float(rep.lemma3_margin.min())
    ge = rep.a1_holds_when(True)
    le = rep.a1_holds_when(False)
    sym_ratio = rep.symmetric_gap / rep.symmetric_prediction
    return [
        Check("min margin of b x3/x - y and b y3/y - x", m2, 0.0, m2 > 0),
        Check("min margin of det(M) - b2 trace(M)", m3, 0.0, m3 > 0),
        Check("y3 (1 - x3) >= x >= y where x3 >= y3", float(ge), 1, ge, informational=True),
        Check("y3 (1 - x3) >= x >= y where x3 <= y3", float(le), 1, le, informational=True),
        Check("symmetric gap / asymptotic prediction", sym_ratio, 1, True, informational=True),
    ]


def suite_oracles(paths: int = 2000, dt: float = 1e-4, seed: int = 15, mu: float = 1e-4,
                  b: float = 1e-3) -> list[Check]:
    from .stochastic import mc_exit_time_1d

    checks = []
    cases = [
        ("brownian", brownian(1.0)),
        ("watterson", watterson_diffusion(mu)),
        ("subfunc", subfunc_diffusion(b)),
    ]
    for name, d in cases:
        q = mean_exit_time(d, 0.0)
        est = mc_exit_time_1d(d, 0.0, paths=paths, dt=dt, seed=seed)
        checks.append(Check(f"{name}: quadrature {q:.6g} in MC 95% CI "
                            f"[{est.ci_low:.6g}, {est.ci_high:.6g}]",
                            est.mean, est.stderr, est.contains(q)))
    return checks


def run_suite(name: str, **kw) -> list[Check]:
    table = {
        "lemmas": suite_lemmas,
        "curve": suite_curve,
        "rh": suite_rh,
        "ito": suite_ito,
        "oracles": suite_oracles,
    }
    if name not in table:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    return table[name](**kw)
