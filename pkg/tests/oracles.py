"""Brute-force enumerations used as independent references for the kernels."""

from itertools import product

import numpy as np


def wf_kernel_by_enumeration(n_pop, a_count, b_count, mu):
    """Label every parental copy and every mutation pattern, then condition on viability."""
    n2 = 2 * n_pop
    one = np.zeros((3, 3))
    for la1, la2, lb1, lb2 in product(range(n2), repeat=4):
        for m in product((0, 1), repeat=4):
            pm = np.prod([mu if k else 1 - mu for k in m])
            ga = [la1 < a_count or m[0], la2 < a_count or m[1]]
            gb = [lb1 < b_count or m[2], lb2 < b_count or m[3]]
            if all(ga) and all(gb):
                continue
            one[sum(ga), sum(gb)] += pm / n2**4
    one /= one.sum()
    out = np.zeros((n2 + 1, n2 + 1))
    for draws in product(product(range(3), range(3)), repeat=n_pop):
        pr = np.prod([one[i, j] for i, j in draws])
        out[sum(i for i, _ in draws), sum(j for _, j in draws)] += pr
    return out


MUTATIONS = {3: ((2, 1.0), (1, 1.0), (0, 1.0)), 2: ((0, 2.0),), 1: ((0, 2.0),), 0: ()}


def _counts(states):
    c = [0, 0, 0, 0]
    for s in states:
        c[s] += 1
    return tuple(c)


def moran_kernel_by_enumeration(loc1, loc2, b):
    """Next-state law from explicitly labeled copies ``loc1[i]``, ``loc2[i]``."""
    n = len(loc1)
    mut = [(k, i, t, r * b) for k, loc in enumerate((loc1, loc2)) for i, s in enumerate(loc)
           for t, r in MUTATIONS[s]]
    total = n + sum(m[3] for m in mut)
    law = {}

    def add(a, c, p):
        key = (_counts(a), _counts(c))
        law[key] = law.get(key, 0.0) + p

    for k, i, t, rate in mut:
        a, c = list(loc1), list(loc2)
        (a if k == 0 else c)[i] = t
        add(a, c, rate / total)
    for d1, d2, o1, o2 in product(range(n), repeat=4):
        p = 1.0 / n**4 * n / total
        if (loc1[o1] | loc2[o2]) != 3:
            add(loc1, loc2, p)
            continue
        a, c = list(loc1), list(loc2)
        a[d1] = loc1[o1]
        c[d2] = loc2[o2]
        add(a, c, p)
    return law, total
