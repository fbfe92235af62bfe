"""Trajectory numerics: RK4 for the deterministic flows, Euler-Maruyama for
the diffusions, and the experiments built on them.

Clocks. ``integrate_ode`` runs the deterministic field ``F`` at rate 1.
``integrate_sde`` runs the diffusion generator as written, with drift
``2N F`` and noise ``sqrt(freq (1 - freq))``; in that clock exit times are of
order one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from . import subfunc as sf
from . import watterson as wm
from .diffusion1d import Diffusion1D

MODELS = ("watterson", "subfunc")
CLAMP_TOL = 1e-12


class SdeInstabilityError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# seeds


def path_generators(seed: int, n_paths: int, stream: int = 0) -> list[np.random.Generator]:
    """Independent generators for paths ``0..n_paths-1`` of run ``stream``.

    Path ``k`` depends only on ``(seed, stream, k)``, so any subset of paths
    can be regenerated alone or in parallel.
    """
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, k))))
        for k in range(n_paths)
    ]


class _NormalBlocks:
    """Per-path standard normals drawn in fixed-size blocks.

    A path draws a new block only while it is alive, and every alive path is
    at the same block position, so a path's stream never depends on the others.
    """

    def __init__(self, gens: list[np.random.Generator], dim: int, block: int = 512):
        self.gens = gens
        self.dim = dim
        self.block = block
        self.pos = block
        self.buf = np.empty((len(gens), block, dim))

    def next(self, idx: np.ndarray | None = None) -> np.ndarray:
        if idx is None:
            idx = np.arange(len(self.gens))
        if self.pos == self.block:
            for j in idx:
                self.buf[j] = self.gens[j].standard_normal((self.block, self.dim))
            self.pos = 0
        out = self.buf[idx, self.pos]
        self.pos += 1
        return out


# ---------------------------------------------------------------------------
# deterministic flow


def _field(model: str, params) -> Callable[[np.ndarray], np.ndarray]:
    if model == "watterson":
        mu = params.mu

        def f(s):
            fx, fy = wm.ode_field_w(s[..., 0], s[..., 1], mu)
            return np.stack([fx, fy], axis=-1)

        return f
    if model == "subfunc":
        return lambda s: sf.ode_field_s(s, params)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def _dim(model: str) -> int:
    return 2 if model == "watterson" else 6


def clamp_state(model: str, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project onto the admissible set; returns the state and the size of the correction."""
    c = np.clip(s, 0.0, 1.0)
    if model == "subfunc":
        for sl in (slice(0, 3), slice(3, 6)):
            tot = c[..., sl].sum(axis=-1, keepdims=True)
            c[..., sl] = np.where(tot > 1.0, c[..., sl] / np.maximum(tot, 1e-300), c[..., sl])
    return c, np.max(np.abs(c - s), axis=-1)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate_ode(model: str, params, start: Sequence[float], T: float, dt: float = 1e-3,
                  record_every: int = 1) -> Trajectory:
    """Classical RK4 for the deterministic field at unit rate."""
    f = _field(model, params)
    s = np.asarray(start, dtype=float).copy()
    if s.shape != (_dim(model),):
        raise ValueError(f"start must have {_dim(model)} coordinates")
    n = int(math.ceil(T / dt - 1e-9))
    h = T / n if n else 0.0
    ts, out = [0.0], [s.copy()]
    for k in range(n):
        k1 = f(s)
        k2 = f(s + 0.5 * h * k1)
        k3 = f(s + 0.5 * h * k2)
        k4 = f(s + h * k3)
        s = s + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s, corr = clamp_state(model, s)
        if corr > 1e-9:
            warnings.warn(f"RK4 step left the domain by {corr:.3g}; clamped", RuntimeWarning)
        if (k + 1) % record_every == 0 or k == n - 1:
            ts.append((k + 1) * h)
            out.append(s.copy())
    return Trajectory(np.array(ts), np.array(out))


# ---------------------------------------------------------------------------
# diffusions


@dataclass(frozen=True)
class SdeRun:
    model: str
    params: object
    n_pop: int
    dt: float
    horizon: float
    seed: int
    paths: int
    start: tuple
    noise: float = 1.0
    delta: float = 0.3
    record_every: int = 0  # 0 keeps only the final state
    stat_every: int = 1
    stream: int = 0

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.dt <= 0 or self.horizon <= 0:
            raise ValueError("dt and horizon must be positive")
        if self.n_pop < 2:
            raise ValueError("n_pop must be >= 2")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if len(self.start) != _dim(self.model):
            raise ValueError(f"start must have {_dim(self.model)} coordinates")
        rate = 2.0 * self.n_pop * _stiffness_bound(self.model, self.params)
        if rate * self.dt > 0.5:
            raise ValueError(
                f"dt={self.dt:g} too large: 2N * stiffness * dt = {rate * self.dt:.3g} > 0.5"
            )

    @property
    def threshold(self) -> float:
        """Containment bound for the near-curve statistic."""
        if self.model == "watterson":
            return 2.0 * self.n_pop ** (-self.delta)
        return 2.0 * self.n_pop ** (-0.25)


def _stiffness_bound(model: str, params) -> float:
    # crude bound on the fastest relaxation rate of F near its curve of equilibria
    if model == "watterson":
        return 4.0 * math.sqrt(params.mu)
    return 2.0


@dataclass
class NearCurveStat:
    sup_dist: np.ndarray
    exited: np.ndarray
    exit_time: np.ndarray
    failed: np.ndarray
    threshold: float

    @property
    def contained(self) -> np.ndarray:
        return self.sup_dist <= self.threshold

    @property
    def containment_fraction(self) -> float:
        ok = ~self.failed
        return float(np.mean(self.contained[ok])) if ok.any() else float("nan")


@dataclass
class SdeResult:
    run: SdeRun
    t: np.ndarray
    paths: np.ndarray  # (records, paths, dim)
    final: np.ndarray
    stat: NearCurveStat
    clamp_events: int
    diagnostics: list[str] = field(default_factory=list)


def _distance(model: str, params, s: np.ndarray) -> np.ndarray:
    if model == "watterson":
        return np.abs(params.mu - (s[:, 0] * s[:, 1]) ** 2)
    out = np.full(s.shape[0], np.inf)
    ok = (s[:, 0] > 0) & (s[:, 3] > 0)
    if ok.any():
        proj = sf.project_s(s[ok], params)
        full = sf.equilibrium_state_array(proj[:, 0], proj[:, 1], proj[:, 2], proj[:, 3])
        out[ok] = np.linalg.norm(s[ok] - full, axis=1)
    return out


def _absorbed(model: str, s: np.ndarray, n_pop: int) -> np.ndarray:
    if model == "watterson":
        return (s[:, 0] >= 1.0) | (s[:, 1] >= 1.0)
    eps = 1.0 / (2.0 * n_pop)
    return (s[:, 0:3].sum(axis=1) <= eps) | (s[:, 3:6].sum(axis=1) <= eps)


def _noise(model: str, s: np.ndarray, xi: np.ndarray) -> np.ndarray:
    if model == "watterson":
        return np.sqrt(np.clip(s * (1.0 - s), 0.0, None)) * xi
    out = np.empty_like(s)
    for k, sl in enumerate((slice(0, 3), slice(3, 6))):
        p = s[:, sl]
        full = np.concatenate([p, np.clip(1.0 - p.sum(axis=1, keepdims=True), 0.0, None)], axis=1)
        root = np.sqrt(full)
        g = xi[:, 4 * k: 4 * k + 4]
        # (diag(sqrt p) - p sqrt(p)^T) over all four states has covariance diag(p) - p p^T
        tot = (root * g).sum(axis=1, keepdims=True)
        out[:, sl] = (root * g)[:, :3] - p * tot
    return out


def integrate_sde(run: SdeRun) -> SdeResult:
    """Euler-Maruyama with drift ``2N F`` and per-locus multinomial noise."""
    model, params = run.model, run.params
    f = _field(model, params)
    n_noise = 2 if model == "watterson" else 8
    gens = path_generators(run.seed, run.paths, run.stream)
    normals = _NormalBlocks(gens, n_noise)
    s = np.tile(np.asarray(run.start, dtype=float), (run.paths, 1))
    s, _ = clamp_state(model, s)
    n_steps = int(math.ceil(run.horizon / run.dt - 1e-9))
    dt = run.dt
    sq = math.sqrt(dt) * run.noise
    scale = 2.0 * run.n_pop
    alive = ~_absorbed(model, s, run.n_pop)
    exit_time = np.where(alive, run.horizon, 0.0)
    failed = np.zeros(run.paths, dtype=bool)
    sup = _distance(model, params, s)
    clamps = 0
    diags: list[str] = []
    rec_t, rec = [0.0], [s.copy()]
    for k in range(n_steps):
        idx = np.flatnonzero(alive)
        if idx.size:
            xi = normals.next(idx)
            cur = s[idx]
            new = cur + scale * f(cur) * dt + sq * _noise(model, cur, xi)
            if not np.all(np.isfinite(new)):
                bad = idx[~np.all(np.isfinite(new), axis=1)]
                failed[bad] = True
                alive[bad] = False
                diags.extend(f"path {j}: non-finite state at step {k + 1}" for j in bad)
                keep = np.isin(idx, bad, invert=True)
                idx, new = idx[keep], new[keep]
            new, corr = clamp_state(model, new)
            clamps += int(np.sum(corr > CLAMP_TOL))
            s[idx] = new
            t = (k + 1) * dt
            done = _absorbed(model, new, run.n_pop)
            track = (k + 1) % run.stat_every == 0 or k == n_steps - 1
            if track:
                live = idx[~done]
                if live.size:
                    sup[live] = np.maximum(sup[live], _distance(model, params, s[live]))
            if done.any():
                gone = idx[done]
                alive[gone] = False
                exit_time[gone] = t
        if run.record_every and ((k + 1) % run.record_every == 0 or k == n_steps - 1):
            rec_t.append((k + 1) * dt)
            rec.append(s.copy())
    stat = NearCurveStat(
        sup_dist=sup,
        exited=exit_time < run.horizon,
        exit_time=exit_time,
        failed=failed,
        threshold=run.threshold,
    )
    paths = np.array(rec) if run.record_every else s[None].copy()
    return SdeResult(run, np.array(rec_t if run.record_every else [n_steps * dt]), paths,
                     s.copy(), stat, clamps, diags)


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class Theorem1Row:
    n_pop: int
    estimate: float
    stderr: float
    bound: float
    horizon: float  # in the generator's clock, gamma log N / N


def theorem1_experiment(n_list: Sequence[int], start=(0.5, 0.5), gamma: float = 0.5,
                        mu: float = 1e-4, paths: int = 200, dt: float = 1e-3,
                        seed: int = 1, noise: float = 1.0) -> list[Theorem1Row]:
    """Monte Carlo estimate of ``E sup_{t <= gamma log N / N} |Z_t - Z0_t|^2``.

    Worked in the ODE clock (time multiplied by ``2N``), where the drift is
    ``F`` and the noise is ``sqrt(x (1 - x) / 2N)``. The ODE reference uses
    RK4 with the same step.
    """
    params = wm.WattersonParams(mu)
    rows = []
    for j, n in enumerate(n_list):
        T = 2.0 * gamma * math.log(n)
        ref = integrate_ode("watterson", params, start, T, dt)
        n_steps = len(ref.t) - 1
        h = T / n_steps
        gens = path_generators(seed, paths, stream=j)
        normals = _NormalBlocks(gens, 2)
        z = np.tile(np.asarray(start, float), (paths, 1))
        sup = np.zeros(paths)
        amp = noise * math.sqrt(h / (2.0 * n))
        for k in range(n_steps):
            fx, fy = wm.ode_field_w(z[:, 0], z[:, 1], mu)
            z = z + h * np.stack([fx, fy], 1) + amp * np.sqrt(np.clip(z * (1 - z), 0, None)) * normals.next()
            z = np.clip(z, 0.0, 1.0)
            sup = np.maximum(sup, np.sum((z - ref.states[k + 1]) ** 2, axis=1))
        rows.append(
            Theorem1Row(
                n_pop=int(n),
                estimate=float(sup.mean()),
                stderr=float(sup.std(ddof=1) / math.sqrt(paths)) if paths > 1 else 0.0,
                bound=float(n) ** -0.5,
                horizon=gamma * math.log(n) / n,
            )
        )
    return rows


@dataclass(frozen=True)
class ContainmentRow:
    n_pop: int
    fraction: float
    exited: float
    threshold: float
    max_sup: float


def near_curve_experiment(model: str, params, n_list: Sequence[int], start, paths: int = 200,
                          dt: float = 1e-4, horizon: float = 10.0, delta: float = 0.3,
                          seed: int = 2, stat_every: int = 1) -> list[ContainmentRow]:
    """Fraction of paths whose near-curve statistic stays below the bound up to ``min(tau, T)``."""
    rows = []
    for j, n in enumerate(n_list):
        run = SdeRun(model, params, int(n), dt, horizon, seed, paths, tuple(start),
                     delta=delta, stat_every=stat_every, stream=j)
        res = integrate_sde(run)
        st = res.stat
        rows.append(
            ContainmentRow(int(n), st.containment_fraction, float(np.mean(st.exited)),
                           st.threshold, float(np.max(st.sup_dist[np.isfinite(st.sup_dist)])))
        )
    return rows


@dataclass(frozen=True)
class ExitEstimate:
    mean: float
    ci_low: float
    ci_high: float
    stderr: float
    paths: int
    censored: int

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


@njit(cache=True)
def _walk_1d(z, steps_done, normals, lo, step, bt, at, dt, l, r, max_steps):
    sq = math.sqrt(dt)
    n_tab = bt.shape[0]
    for k in range(normals.shape[0]):
        if steps_done >= max_steps:
            return z, steps_done, False
        u = (z - lo) / step
        j = min(max(int(u), 0), n_tab - 2)
        w = u - j
        b = bt[j] + w * (bt[j + 1] - bt[j])
        a = at[j] + w * (at[j + 1] - at[j])
        z = z + b * dt + math.sqrt(max(a, 0.0)) * sq * normals[k]
        steps_done += 1
        if z <= l or z >= r:
            return z, steps_done, True
    return z, steps_done, False


def mc_exit_time_1d(d: Diffusion1D, x0: float, paths: int = 10_000, dt: float = 1e-4,
                    seed: int = 3, cap: float = 100.0, table_points: int = 20_001,
                    chunk: int = 1 << 13) -> ExitEstimate:
    """Euler-Maruyama absorption times with a 95% normal-theory interval.

    Coefficients are evaluated once on a uniform table and linearly
    interpolated during stepping. Paths still running at ``cap`` are censored
    and counted at ``cap``.
    """
    if not d.l < x0 < d.r:
        raise ValueError("x0 must be interior")
    grid = np.linspace(d.l, d.r, table_points)
    inner = grid[1:-1]
    bt = np.concatenate([[0.0], np.asarray(d.drift(inner), float), [0.0]])
    at = np.concatenate([[0.0], np.asarray(d.variance(inner), float), [0.0]])
    step = grid[1] - grid[0]
    max_steps = int(math.ceil(cap / dt))
    tau = np.empty(paths)
    censored = 0
    for k, gen in enumerate(path_generators(seed, paths)):
        z, n, hit = float(x0), 0, False
        while not hit and n < max_steps:
            z, n, hit = _walk_1d(z, n, gen.standard_normal(chunk), d.l, step, bt, at, dt,
                                 d.l, d.r, max_steps)
        tau[k] = n * dt
        censored += not hit
    mean = float(tau.mean())
    se = float(tau.std(ddof=1) / math.sqrt(paths))
    return ExitEstimate(mean, mean - 1.96 * se, mean + 1.96 * se, se, paths, censored)
