"""Shared generators and independent brute-force oracles for the test suite.

The oracles deliberately avoid every code path under test: plain Python
dicts, sets, and nested loops only.
"""

from collections import Counter, defaultdict
from itertools import product

import numpy as np

from mmjoin.relation import Relation, build_indexed, semi_join_reduce


def random_pairs(rng, n, dom_left, dom_right):
    """About n distinct (left, right) int pairs."""
    pairs = {(int(a), int(b))
             for a, b in zip(rng.integers(0, dom_left, n),
                             rng.integers(0, dom_right, n))}
    return sorted(pairs)


def random_family(rng, n_sets, universe, max_size):
    """Non-empty random sets keyed s0..s{n-1}."""
    fam = {}
    for i in range(n_sets):
        size = int(rng.integers(1, max_size + 1))
        fam[f"s{i}"] = sorted({int(e) for e in rng.integers(0, universe, size)})
    return fam


def oracle_two_path(r_pairs, s_pairs):
    """Counter{(a, c): #witnesses} by nested-loop join over a y-index."""
    by_y = defaultdict(list)
    for c, y in s_pairs:
        by_y[y].append(c)
    out = Counter()
    for a, y in r_pairs:
        for c in by_y[y]:
            out[(a, c)] += 1
    return out


def oracle_star(relations):
    """Counter{(x1..xk): #shared witnesses} for pair lists joined on y."""
    adj = []
    for pairs in relations:
        d = defaultdict(set)
        for a, y in pairs:
            d[a].add(y)
        adj.append(d)
    out = Counter()
    for combo in product(*[list(d) for d in adj]):
        witnesses = set.intersection(*[adj[i][v] for i, v in enumerate(combo)])
        if witnesses:
            out[combo] = len(witnesses)
    return out


def canon_pair(a, b):
    return (a, b) if a < b else (b, a)


def oracle_ssj(fam, c):
    """{(a, b): overlap} over raw set ids, a < b, overlap >= c."""
    ids = sorted(fam)
    out = {}
    for i, a in enumerate(ids):
        sa = set(fam[a])
        for b in ids[i + 1:]:
            ov = len(sa & set(fam[b]))
            if ov >= c:
                out[(a, b)] = ov
    return out


def oracle_scj(fam):
    """Ordered raw-id pairs (a, b), a != b, set(a) subset of set(b)."""
    out = set()
    for a in fam:
        for b in fam:
            if a != b and set(fam[a]) <= set(fam[b]):
                out.add((a, b))
    return out


def triple_loop_matmul(a, b):
    rows, inner = a.shape
    cols = b.shape[1]
    out = np.zeros((rows, cols), dtype=np.int64)
    for i in range(rows):
        for k in range(inner):
            if a[i, k] == 0:
                continue
            for j in range(cols):
                out[i, j] += a[i, k] * b[k, j]
    return out


def reduced_indexed(r_pairs, s_pairs):
    """(reduced R, reduced S) as IndexedRelations sharing the right dict."""
    r, s = semi_join_reduce(Relation.from_raw_pairs("R", r_pairs),
                            Relation.from_raw_pairs("S", s_pairs))
    return build_indexed(r), build_indexed(s)


def decode_two_path(res, r, s):
    """OutputSet -> set of raw (a, c) pairs via the relations' dictionaries."""
    return {(r.rel.left_values[a], s.rel.left_values[c])
            for a, c in res.tuples().tolist()}


def decode_two_path_counts(res, r, s):
    return {(r.rel.left_values[a], s.rel.left_values[c]): int(cnt)
            for (a, c), cnt in zip(res.tuples().tolist(),
                                   res.counts.tolist())}


# the worked two-path example frozen as test data: R(x,y), S(z,y)
EXAMPLE_R = [(1, 6), (2, 1), (2, 2), (3, 5), (3, 3), (4, 4), (4, 1), (4, 6),
             (5, 4), (5, 5), (5, 6), (6, 4), (6, 5), (6, 2)]
EXAMPLE_S = [(1, 6), (1, 2), (2, 6), (2, 3), (3, 3), (4, 4), (4, 5), (4, 1),
             (5, 4), (5, 5), (5, 6), (6, 2), (6, 5), (6, 6)]

# the worked star example frozen as test data: T(x1,y), U(x2,y)
EXAMPLE_T = [(1, 1), (1, 3), (2, 2), (6, 1), (3, 3), (3, 4), (4, 4), (4, 5),
             (4, 6), (5, 4), (5, 5), (5, 6), (6, 2), (6, 5), (6, 6)]
EXAMPLE_U = [(1, 1), (2, 2), (2, 5), (3, 3), (4, 4), (4, 5), (4, 6), (5, 4),
             (5, 5), (5, 6), (6, 4), (6, 5), (6, 6)]

# the worked prefix-reuse example: inverted lists and two probe sets
EXAMPLE_LISTS = {"b1": ["C1", "C2", "C3", "C4"], "b2": ["C1", "C2", "C3"],
                 "b3": ["C3", "C5"], "b4": ["C4", "C6"]}
EXAMPLE_SETS = {"A1": ["b1", "b2", "b3"], "A2": ["b1", "b2", "b4"]}
