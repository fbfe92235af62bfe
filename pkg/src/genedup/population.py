"""Exact discrete models.

* Wright-Fisher double recessive null model with rejection of ``aabb``.
* Moran subfunctionalization model with random union of gametes.
* The single-lineage mutation race and its closed form.
* The scan of subfunctionalization probability against population size.

Moran state. Loci are unlinked and offspring are built by random union of
gametes, so the population is summarized by the counts of copy states
``0..3`` at each locus. A reproduction event removes one random copy at each
locus and, if the random-union offspring is viable, puts its two copies in
their place; otherwise nothing changes. Reproduction events occur at rate
``N`` per generation and each copy mutates at the per-generation rates
``3 -> 2, 1, 0`` (``b`` each) and ``2 -> 0``, ``1 -> 0`` (``2b``). The
expected increments per generation are then exactly the deterministic field.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from numba import njit
from scipy import stats

from .subfunc import SubfuncParams, ode_field_s
from .watterson import WattersonParams

OUTCOMES = ("gene1-lost", "gene2-lost", "subfunctionalized", "censored")


def derived_seed(seed: int, *key: int) -> int:
    """A 32-bit seed that depends only on ``(seed, key)``."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# single-lineage race


def single_lineage_psub(mu_r: float, mu_c: float) -> float:
    if mu_r < 0 or mu_c < 0:
        raise ValueError("rates must be nonnegative")
    if mu_r == 0 and mu_c == 0:
        raise ValueError("mu_r and mu_c cannot both be zero")
    q = mu_r / (2.0 * mu_r + mu_c)
    return 2.0 * q * q


@dataclass(frozen=True)
class RaceEstimate:
    estimate: float
    stderr: float
    successes: int
    reps: int

    def within(self, value: float, k: float = 3.0) -> bool:
        if self.stderr == 0:
            return self.estimate == value
        return abs(self.estimate - value) <= k * self.stderr


def single_lineage_race_mc(mu_r: float, mu_c: float, reps: int, seed: int = 0) -> RaceEstimate:
    """Simulate the two exponential races directly.

    Stage one: four regulatory sites (``mu_r`` each) against two coding
    regions (``mu_c`` each). Only a regulatory loss can lead on. Stage two,
    say gene 1 lost regulatory site 1: gene 2 losing site 1 gives S
    (``mu_r``); gene 1 losing site 2 or its coding region gives I
    (``mu_r + mu_c``); gene 2 losing site 2 or its coding region is lethal
    (``mu_r + mu_c``) and the lineage carrying it dies, so the race restarts.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    single_lineage_psub(mu_r, mu_c)  # validates the rates
    rng = np.random.default_rng(seed)
    with np.errstate(divide="ignore"):
        rates1 = np.array([mu_r] * 4 + [mu_c] * 2)
        times = rng.standard_exponential((reps, 6)) / rates1
    first_reg = np.argmin(times, axis=1) < 4
    wins = np.zeros(reps, dtype=bool)
    pending = np.flatnonzero(first_reg)
    # stage two: S, I (site), I (coding), L (site), L (coding)
    rates2 = np.array([mu_r, mu_r, mu_c, mu_r, mu_c])
    while pending.size:
        with np.errstate(divide="ignore"):
            t2 = rng.standard_exponential((pending.size, 5)) / rates2
        k = np.argmin(t2, axis=1)
        wins[pending[k == 0]] = True
        pending = pending[k >= 3]
    n = int(wins.sum())
    est = n / reps
    se = math.sqrt(est * (1 - est) / reps) if reps > 1 else 0.0
    return RaceEstimate(est, se, n, reps)


# ---------------------------------------------------------------------------
# Wright-Fisher double recessive null


@dataclass(frozen=True)
class WfPopulation:
    n_pop: int
    a_count: int  # null copies of gene 1 among 2N
    b_count: int
    generation: int = 0

    def __post_init__(self) -> None:
        if self.n_pop < 1:
            raise ValueError("n_pop must be >= 1")
        for c in (self.a_count, self.b_count):
            if not 0 <= c <= 2 * self.n_pop:
                raise ValueError(f"count {c} outside [0, 2N]")

    @property
    def x(self) -> float:
        return self.a_count / (2 * self.n_pop)

    @property
    def y(self) -> float:
        return self.b_count / (2 * self.n_pop)

    @property
    def absorbed(self) -> bool:
        return self.a_count == 2 * self.n_pop or self.b_count == 2 * self.n_pop


class WfDeadlock(RuntimeError):
    """No viable individual can be formed (every draw is aabb)."""


def _post_mutation(freq: float, mu: float) -> float:
    return freq + (1.0 - freq) * mu


def wf_generation(pop: WfPopulation, params: WattersonParams, rng: np.random.Generator) -> WfPopulation:
    """One generation by literal rejection sampling of candidate individuals."""
    n2 = 2 * pop.n_pop
    mu = params.mu
    pa = _post_mutation(pop.x, mu)
    pb = _post_mutation(pop.y, mu)
    if pa >= 1.0 and pb >= 1.0:
        raise WfDeadlock("every candidate individual is aabb")
    need = pop.n_pop
    got_a = got_b = 0
    reject = (pa * pb) ** 2
    while need:
        m = max(16, int(need / max(1.0 - reject, 1e-3) * 1.2) + 4)
        pick_a = rng.integers(0, n2, size=(m, 2)) < pop.a_count
        pick_b = rng.integers(0, n2, size=(m, 2)) < pop.b_count
        mut = rng.random((m, 4)) < mu
        ga = pick_a | mut[:, :2]
        gb = pick_b | mut[:, 2:]
        ok = ~(ga.all(axis=1) & gb.all(axis=1))
        idx = np.flatnonzero(ok)[:need]
        got_a += int(ga[idx].sum())
        got_b += int(gb[idx].sum())
        need -= idx.size
    return WfPopulation(pop.n_pop, got_a, got_b, pop.generation + 1)


def wf_individual_law(pop: WfPopulation, mu: float) -> np.ndarray:
    """Law of (null copies of gene 1, null copies of gene 2) in one accepted individual."""
    pa = _post_mutation(pop.x, mu)
    pb = _post_mutation(pop.y, mu)
    la = stats.binom.pmf(np.arange(3), 2, pa)
    lb = stats.binom.pmf(np.arange(3), 2, pb)
    joint = np.outer(la, lb)
    joint[2, 2] = 0.0
    tot = joint.sum()
    if tot <= 0:
        raise WfDeadlock("every candidate individual is aabb")
    return joint / tot


def wf_kernel(pop: WfPopulation, mu: float) -> np.ndarray:
    """Exact one-generation law of ``(a_count, b_count)`` as a ``(2N+1, 2N+1)`` array."""
    one = wf_individual_law(pop, mu)
    out = np.zeros((1, 1))
    out[0, 0] = 1.0
    for _ in range(pop.n_pop):
        nxt = np.zeros((out.shape[0] + 2, out.shape[1] + 2))
        for i in range(3):
            for j in range(3):
                nxt[i: i + out.shape[0], j: j + out.shape[1]] += one[i, j] * out
        out = nxt
    return out


@dataclass(frozen=True)
class WfOutcome:
    kind: str  # "A-lost", "B-lost" or "censored"
    generations: int


def wf_run_to_absorption(pop: WfPopulation, params: WattersonParams, cap: int,
                         seed: int) -> WfOutcome:
    rng = np.random.default_rng(seed)
    while not pop.absorbed and pop.generation < cap:
        pop = wf_generation(pop, params, rng)
    if pop.a_count == 2 * pop.n_pop:
        return WfOutcome("A-lost", pop.generation)
    if pop.b_count == 2 * pop.n_pop:
        return WfOutcome("B-lost", pop.generation)
    return WfOutcome("censored", pop.generation)


# ---------------------------------------------------------------------------
# Moran subfunctionalization model


@dataclass(frozen=True)
class MoranPopulation:
    """Copy-state counts ``counts1[s]``, ``counts2[s]`` for states ``s = 0..3``."""

    counts1: tuple
    counts2: tuple
    time: float = 0.0
    events: int = 0

    def __post_init__(self) -> None:
        c1, c2 = self.counts1, self.counts2
        if len(c1) != 4 or len(c2) != 4 or min(c1) < 0 or min(c2) < 0:
            raise ValueError("counts must be four nonnegative integers per locus")
        if sum(c1) != sum(c2) or sum(c1) < 1:
            raise ValueError("both loci must carry N >= 1 copies")

    @classmethod
    def uniform(cls, n_pop: int, state1: int, state2: int) -> "MoranPopulation":
        c1 = [0] * 4
        c2 = [0] * 4
        c1[state1] = n_pop
        c2[state2] = n_pop
        return cls(tuple(c1), tuple(c2))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "MoranPopulation":
        c1 = [0] * 4
        c2 = [0] * 4
        for s1, s2 in pairs:
            c1[s1] += 1
            c2[s2] += 1
        return cls(tuple(c1), tuple(c2))

    @property
    def n_pop(self) -> int:
        return sum(self.counts1)

    def frequencies(self) -> np.ndarray:
        """``(x3, x2, x1, y3, y2, y1)``."""
        n = self.n_pop
        c1, c2 = self.counts1, self.counts2
        return np.array([c1[3], c1[2], c1[1], c2[3], c2[2], c2[1]], dtype=float) / n

    def mean_fitness(self) -> float:
        x3, x2, x1, y3, y2, y1 = self.frequencies()
        return x3 + y3 - x3 * y3 + x1 * y2 + x2 * y1

    def classify(self) -> str | None:
        n = self.n_pop
        c1, c2 = self.counts1, self.counts2
        if c1[0] == n:
            return "gene1-lost"
        if c2[0] == n:
            return "gene2-lost"
        if (c1[2] == n and c2[1] == n) or (c1[1] == n and c2[2] == n):
            return "subfunctionalized"
        return None


_MUT_TARGETS = ((3, 2, 1.0), (3, 1, 1.0), (3, 0, 1.0), (2, 0, 2.0), (1, 0, 2.0))


def moran_kernel(pop: MoranPopulation, b: float) -> tuple[dict, float]:
    """Exact law of the next state and the total event rate.

    Returns ``({(counts1, counts2): probability}, total_rate)``.
    """
    n = pop.n_pop
    c1, c2 = list(pop.counts1), list(pop.counts2)
    mut = b * sum(r * (c1[s] + c2[s]) for s, _, r in _MUT_TARGETS)
    total = n + mut
    law: dict = {}

    def add(k1, k2, p):
        key = (tuple(k1), tuple(k2))
        law[key] = law.get(key, 0.0) + p

    for s, t, r in _MUT_TARGETS:
        for loc, c in ((0, c1), (1, c2)):
            if c[s] == 0:
                continue
            k = list(c)
            k[s] -= 1
            k[t] += 1
            p = b * r * c[s] / total
            add(k, c2, p) if loc == 0 else add(c1, k, p)
    rep = n / total
    for d1, d2, o1, o2 in product(range(4), repeat=4):
        p = c1[d1] * c2[d2] * c1[o1] * c2[o2]
        if p == 0:
            continue
        p = rep * p / n**4
        if (o1 | o2) != 3:
            add(c1, c2, p)
            continue
        k1, k2 = list(c1), list(c2)
        k1[d1] -= 1
        k1[o1] += 1
        k2[d2] -= 1
        k2[o2] += 1
        add(k1, k2, p)
    return law, total


@njit(cache=True, nogil=True)
def _seed(s):
    np.random.seed(s)


@njit(cache=True, nogil=True)
def _pick(c, n):
    u = np.random.randint(0, n)
    acc = 0
    for s in range(4):
        acc += c[s]
        if u < acc:
            return s
    return 3


@njit(cache=True, nogil=True)
def _event(c1, c2, n, b):
    """Apply one event in place; returns the waiting time in generations."""
    m1 = b * (3.0 * c1[3] + 2.0 * c1[2] + 2.0 * c1[1])
    m2 = b * (3.0 * c2[3] + 2.0 * c2[2] + 2.0 * c2[1])
    total = n + m1 + m2
    dt = np.random.exponential(1.0 / total)
    u = np.random.random() * total
    if u < n:
        d1 = _pick(c1, n)
        d2 = _pick(c2, n)
        o1 = _pick(c1, n)
        o2 = _pick(c2, n)
        if (o1 | o2) == 3:
            c1[d1] -= 1
            c1[o1] += 1
            c2[d2] -= 1
            c2[o2] += 1
        return dt
    u -= n
    c = c1
    if u >= m1:
        u -= m1
        c = c2
    # choose the mutating copy by rate, then its target
    w3 = 3.0 * b * c[3]
    w2 = 2.0 * b * c[2]
    if u < w3:
        k = int(u / b) % 3  # 0 -> state 2, 1 -> state 1, 2 -> state 0
        c[3] -= 1
        c[2 - k] += 1
    elif u < w3 + w2:
        c[2] -= 1
        c[0] += 1
    else:
        c[1] -= 1
        c[0] += 1
    return dt


@njit(cache=True, nogil=True)
def _classify(c1, c2, n):
    if c1[0] == n:
        return 0
    if c2[0] == n:
        return 1
    if (c1[2] == n and c2[1] == n) or (c1[1] == n and c2[2] == n):
        return 2
    return -1


@njit(cache=True, nogil=True)
def _run(c1, c2, n, b, cap, seed):
    _seed(seed)
    t = 0.0
    events = 0
    k = _classify(c1, c2, n)
    while k < 0 and t < cap:
        t += _event(c1, c2, n, b)
        events += 1
        k = _classify(c1, c2, n)
    if k < 0:
        return 3, cap, events
    return k, t, events


@njit(cache=True)
def _sample_events(c1, c2, n, b, count, seed):
    _seed(seed)
    inc = np.zeros((count, 6))
    waits = np.zeros(count)
    for i in range(count):
        a1 = c1.copy()
        a2 = c2.copy()
        waits[i] = _event(a1, a2, n, b)
        inc[i, 0] = (a1[3] - c1[3]) / n
        inc[i, 1] = (a1[2] - c1[2]) / n
        inc[i, 2] = (a1[1] - c1[1]) / n
        inc[i, 3] = (a2[3] - c2[3]) / n
        inc[i, 4] = (a2[2] - c2[2]) / n
        inc[i, 5] = (a2[1] - c2[1]) / n
    return inc, waits


def _arrays(pop: MoranPopulation):
    return np.array(pop.counts1, dtype=np.int64), np.array(pop.counts2, dtype=np.int64)


def moran_event(pop: MoranPopulation, params: SubfuncParams, seed: int) -> MoranPopulation:
    """One event of the Moran chain, drawn from a generator seeded by ``seed``."""
    c1, c2 = _arrays(pop)
    _seed(seed)
    dt = _event(c1, c2, pop.n_pop, params.b)
    return MoranPopulation(tuple(int(v) for v in c1), tuple(int(v) for v in c2),
                           pop.time + dt, pop.events + 1)


@dataclass(frozen=True)
class AbsorptionOutcome:
    kind: str
    time: float  # generations
    events: int


def run_to_absorption(pop: MoranPopulation, params: SubfuncParams, cap: float,
                      seed: int) -> AbsorptionOutcome:
    if cap <= 0:
        raise ValueError("cap must be positive")
    c1, c2 = _arrays(pop)
    k, t, ev = _run(c1, c2, pop.n_pop, params.b, float(cap), seed)
    return AbsorptionOutcome(OUTCOMES[k], float(t), int(ev))


@dataclass(frozen=True)
class MomentCheck:
    estimate: np.ndarray
    stderr: np.ndarray
    expected: np.ndarray

    @property
    def z_scores(self) -> np.ndarray:
        return (self.estimate - self.expected) / self.stderr


def moran_moment_check(pop: MoranPopulation, params: SubfuncParams, events: int,
                       seed: int) -> MomentCheck:
    """Per-generation mean increments from single events at a fixed state.

    The drift is estimated as ``mean(increment) / mean(wait)`` with a
    delta-method standard error; the reference is the deterministic field.
    """
    c1, c2 = _arrays(pop)
    inc, waits = _sample_events(c1, c2, pop.n_pop, params.b, events, seed)
    mi = inc.mean(axis=0)
    mw = waits.mean()
    est = mi / mw
    # delta method for a ratio of means
    ci = inc - mi
    cw = waits - mw
    var = (ci.var(axis=0) - 2 * est * (ci * cw[:, None]).mean(axis=0) + est**2 * cw.var()) / (
        events * mw**2
    )
    expected = ode_field_s(pop.frequencies(), params)
    return MomentCheck(est, np.sqrt(var), expected)


# ---------------------------------------------------------------------------
# P(S) against N


@dataclass(frozen=True)
class PsubRow:
    n_pop: int
    reps: int
    successes: int
    censored: int
    estimate: float
    ci_low: float
    ci_high: float
    upper_bound_only: bool


@dataclass
class PsubScan:
    rows: list[PsubRow]
    slope: float
    intercept: float
    r2: float
    counts: dict = field(default_factory=dict)


def _wilson(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    p = k / n
    den = 1 + z * z / n
    c = (p + z * z / (2 * n)) / den
    h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, c - h), min(1.0, c + h)


def simulate_replicates(n_pop: int, params: SubfuncParams, reps: int, seed: int,
                        cap: float, start: tuple[int, int] = (3, 3), offset: int = 0,
                        workers: int | None = None):
    """Run replicates ``offset .. offset+reps-1``; replicate ``k`` uses seed ``(seed, n_pop, k)``."""
    base = MoranPopulation.uniform(n_pop, *start)
    seeds = [derived_seed(seed, n_pop, k) for k in range(offset, offset + reps)]
    if workers is None:
        workers = min(os.cpu_count() or 1, 8)
    if workers <= 1:
        return [run_to_absorption(base, params, cap, s) for s in seeds]
    # numba's generator state is per thread and reseeded per replicate, so
    # thread scheduling does not change any replicate
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(lambda s: run_to_absorption(base, params, cap, s), seeds))


def psub_decay_scan(n_list: Sequence[int], params: SubfuncParams, reps: int, seed: int = 4,
                    cap_factor: float = 200.0, max_reps: int | None = None) -> PsubScan:
    """Estimate P(S) at each N and fit ``log P(S)`` linearly in N.

    Replicates are added in batches of ``reps`` until the 95% interval
    half-width is below a third of the estimate or ``max_reps`` is reached.
    Sizes with no subfunctionalization are kept as upper bounds and left out
    of the fit. Weights are ``k (1 - p)``, the inverse delta-method variance
    of ``log p``.
    """
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be ascending")
    max_reps = max_reps or reps
    rows = []
    counts = {}
    for n in n_list:
        cap = cap_factor * n
        res: list[AbsorptionOutcome] = []
        while True:
            res += simulate_replicates(n, params, reps, seed, cap, offset=len(res))
            k = sum(r.kind == "subfunctionalized" for r in res)
            m = len(res)
            lo, hi = _wilson(k, m)
            est = k / m
            if (k > 0 and (hi - lo) / 2 < est / 3) or m + reps > max_reps:
                break
        cens = sum(r.kind == "censored" for r in res)
        counts[n] = {o: sum(r.kind == o for r in res) for o in OUTCOMES}
        rows.append(PsubRow(n, m, k, cens, est, lo, hi, k == 0))
    fit = [r for r in rows if not r.upper_bound_only]
    slope = intercept = r2 = float("nan")
    if len(fit) >= 2:
        xs = np.array([r.n_pop for r in fit], float)
        ys = np.log([r.estimate for r in fit])
        w = np.array([r.successes * (1 - r.estimate) for r in fit], float)
        w = np.where(w > 0, w, 1.0)
        X = np.stack([np.ones_like(xs), xs], 1)
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(X * sw[:, None], ys * sw, rcond=None)
        intercept, slope = float(coef[0]), float(coef[1])
        pred = X @ coef
        ybar = np.sum(w * ys) / np.sum(w)
        ss_res = np.sum(w * (ys - pred) ** 2)
        ss_tot = np.sum(w * (ys - ybar) ** 2)
        r2 = float(1 - ss_res / ss_tot) if ss_tot > 0 else 1.0
    return PsubScan(rows, slope, intercept, r2, counts)
