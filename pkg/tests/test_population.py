import numpy as np
import pytest

from genedup import population as pop
from genedup import subfunc as sf
from genedup import watterson as wm
from oracles import moran_kernel_by_enumeration, wf_kernel_by_enumeration


def test_single_lineage_probability():
    assert pop.single_lineage_psub(1.0, 1.0) == pytest.approx(2 / 9, abs=1e-15)
    assert pop.single_lineage_psub(1.0, 30.0) == pytest.approx(1 / 512, abs=1e-15)
    with pytest.raises(ValueError):
        pop.single_lineage_psub(0.0, 0.0)
    with pytest.raises(ValueError):
        pop.single_lineage_psub(-1.0, 1.0)


def test_race_simulation_matches_formula():
    est = pop.single_lineage_race_mc(1.0, 1.0, 20000, seed=2)
    assert est.within(2 / 9)


def test_derived_seed_is_stable_and_spread():
    assert pop.derived_seed(4, 25, 0) == pop.derived_seed(4, 25, 0)
    seeds = {pop.derived_seed(4, 25, k) for k in range(1000)}
    assert len(seeds) == 1000


@pytest.mark.parametrize("a,b", [(0, 0), (1, 3), (2, 2), (4, 0), (3, 4)])
def test_wf_kernel_matches_enumeration(a, b):
    mu = 0.05
    k = pop.wf_kernel(pop.WfPopulation(2, a, b), mu)
    ref = wf_kernel_by_enumeration(2, a, b, mu)
    assert np.max(np.abs(k - ref)) <= 1e-12


def test_wf_sampler_follows_kernel():
    mu = 0.05
    start = pop.WfPopulation(2, 1, 2)
    law = pop.wf_kernel(start, mu)
    params = wm.WattersonParams(mu, 2)
    rng = np.random.default_rng(0)
    draws = 20000
    hist = np.zeros_like(law)
    for _ in range(draws):
        nxt = pop.wf_generation(start, params, rng)
        hist[nxt.a_count, nxt.b_count] += 1
    mask = law > 0
    z = (hist[mask] / draws - law[mask]) / np.sqrt(law[mask] * (1 - law[mask]) / draws)
    assert np.max(np.abs(z)) < 4.5
    assert hist[~mask].sum() == 0


def test_wf_deadlock():
    with pytest.raises(pop.WfDeadlock):
        pop.wf_individual_law(pop.WfPopulation(1, 2, 2), 0.0)


def test_wf_run_reports_absorbed_gene():
    params = wm.WattersonParams(0.05, 5)
    out = pop.wf_run_to_absorption(pop.WfPopulation(5, 0, 0), params, cap=100000, seed=1)
    assert out.kind in ("A-lost", "B-lost")
    again = pop.wf_run_to_absorption(pop.WfPopulation(5, 0, 0), params, cap=100000, seed=1)
    assert again == out


STATES_N2 = [
    ((3, 3), (3, 3)),
    ((3, 2), (1, 3)),
    ((2, 1), (1, 2)),
    ((3, 0), (0, 3)),
    ((2, 2), (3, 1)),
]


@pytest.mark.parametrize("loc1,loc2", STATES_N2)
def test_moran_kernel_matches_enumeration(loc1, loc2):
    b = 0.03
    state = pop.MoranPopulation.from_pairs(zip(loc1, loc2))
    law, total = pop.moran_kernel(state, b)
    ref, ref_total = moran_kernel_by_enumeration(loc1, loc2, b)
    assert total == pytest.approx(ref_total, abs=1e-12)
    assert set(law) == set(ref)
    assert max(abs(law[k] - ref[k]) for k in ref) <= 1e-12
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)


def test_moran_event_follows_kernel():
    b = 0.05
    start = pop.MoranPopulation.from_pairs([(3, 3), (2, 1)])
    law, _ = pop.moran_kernel(start, b)
    draws = 20000
    hist = {}
    for k in range(draws):
        nxt = pop.moran_event(start, sf.SubfuncParams(b), pop.derived_seed(9, k))
        key = (nxt.counts1, nxt.counts2)
        hist[key] = hist.get(key, 0) + 1
    assert set(hist) <= set(law)
    for key, p in law.items():
        f = hist.get(key, 0) / draws
        assert abs(f - p) <= 4.5 * np.sqrt(p * (1 - p) / draws) + 1e-12


def test_moran_population_invariants():
    with pytest.raises(ValueError):
        pop.MoranPopulation((1, 0, 0, 0), (0, 0, 0, 2))
    m = pop.MoranPopulation.uniform(4, 2, 1)
    assert m.classify() == "subfunctionalized"
    assert pop.MoranPopulation.uniform(4, 0, 3).classify() == "gene1-lost"
    assert pop.MoranPopulation.uniform(4, 3, 3).classify() is None
    assert m.mean_fitness() == pytest.approx(1.0)


def test_moran_moments_small():
    p = sf.SubfuncParams(0.01)
    state = pop.MoranPopulation.from_pairs([(3, 3)] * 60 + [(2, 1)] * 20 + [(1, 3)] * 20)
    check = pop.moran_moment_check(state, p, 200000, seed=6)
    assert np.all(np.abs(check.z_scores) < 4.0)


def test_run_to_absorption_is_deterministic():
    p = sf.SubfuncParams(0.01)
    start = pop.MoranPopulation.uniform(10, 3, 3)
    a = pop.run_to_absorption(start, p, 1e5, seed=17)
    b = pop.run_to_absorption(start, p, 1e5, seed=17)
    assert a == b
    assert a.kind in pop.OUTCOMES


def test_censoring():
    p = sf.SubfuncParams(0.001)
    out = pop.run_to_absorption(pop.MoranPopulation.uniform(50, 3, 3), p, 0.5, seed=1)
    assert out.kind == "censored"
    assert out.time == 0.5


def test_threaded_replicates_match_sequential():
    p = sf.SubfuncParams(0.01)
    seq = pop.simulate_replicates(8, p, 40, seed=3, cap=1e4, workers=1)
    par = pop.simulate_replicates(8, p, 40, seed=3, cap=1e4, workers=4)
    assert seq == par
    tail = pop.simulate_replicates(8, p, 10, seed=3, cap=1e4, offset=30, workers=1)
    assert tail == seq[30:]


def test_small_population_subfunctionalizes_sometimes():
    p = sf.SubfuncParams(0.01)
    res = pop.simulate_replicates(2, p, 2000, seed=4, cap=1e4)
    frac = np.mean([r.kind == "subfunctionalized" for r in res])
    assert 0.15 < frac < 0.28
