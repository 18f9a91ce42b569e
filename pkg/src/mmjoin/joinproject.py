"""Join-project evaluation: two-path partitioned algorithm, star queries,
full-join baseline, and the light-part deduplication strategies.

Output tuples are kept as mixed-radix int64 codes over the left domains of
the participating relations; OutputSet decodes on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .matmul import CountMatrix, multiply_counts
from .optimizer import FULL_JOIN, ThresholdPlan, default_plan
from .relation import (
    IndexedRelation,
    _csr,
    Relation,
    build_indexed,
    gather_ranges,
    semi_join_reduce_many,
)


class StarResourceError(RuntimeError):
    """Heavy cross product too large; retry with a larger delta2."""


@dataclass
class Partition:
    light: Relation
    heavy: Relation
    delta1: int
    delta2: int


class OutputSet:
    """Deduplicated projected tuples, optionally with witness counts."""

    def __init__(self, codes: np.ndarray, dims: Sequence[int],
                 counts: Optional[np.ndarray] = None,
                 stats: Optional[dict] = None):
        self.codes = codes
        self.dims = tuple(int(d) for d in dims)
        self.counts = counts
        self.stats = stats or {}

    @property
    def arity(self) -> int:
        return len(self.dims)

    def __len__(self) -> int:
        return len(self.codes)

    def tuples(self) -> np.ndarray:
        out = np.empty((len(self.codes), self.arity), dtype=np.int64)
        rem = self.codes
        for i in range(self.arity - 1, -1, -1):
            rem, out[:, i] = np.divmod(rem, self.dims[i])
        return out

    def as_set(self) -> set:
        return set(map(tuple, self.tuples().tolist()))

    def counts_dict(self) -> dict:
        if self.counts is None:
            raise ValueError("counts were not requested")
        return dict(zip(map(tuple, self.tuples().tolist()),
                        self.counts.tolist()))

    def total_count(self) -> int:
        if self.counts is None:
            raise ValueError("counts were not requested")
        return int(self.counts.sum())


def _encode(columns: list, dims: Sequence[int]) -> np.ndarray:
    code = np.zeros_like(columns[0])
    for col, d in zip(columns, dims):
        code = code * d + col
    return code


def _check_code_space(dims: Sequence[int]) -> None:
    if math.prod(max(d, 1) for d in dims) >= 2 ** 62:
        raise StarResourceError("combined domain too large to encode")


def _ensure_reduced_many(idxs: Sequence[IndexedRelation]) -> list:
    first = idxs[0]
    if all(first.shares_right_dict(o) for o in idxs[1:]):
        return list(idxs)
    red = semi_join_reduce_many([i.rel for i in idxs])
    return [build_indexed(r) for r in red]


def partition_two_path(r: IndexedRelation, s: IndexedRelation,
                       delta1: int, delta2: int) -> tuple[Partition, Partition]:
    """Split each relation: a tuple is light iff its own left value has
    degree <= delta2, or its y value has degree <= delta1 in both relations."""
    if delta1 < 1 or delta2 < 1:
        raise ValueError("thresholds must be >= 1")
    r, s = _ensure_reduced_many([r, s])
    light_y = (r.right_deg <= delta1) & (s.right_deg <= delta1)
    parts = []
    for idx, name in ((r, "R"), (s, "S")):
        left, right = idx.rel.pairs[:, 0], idx.rel.pairs[:, 1]
        light = (idx.left_deg[left] <= delta2) | light_y[right]
        parts.append(Partition(
            Relation.from_encoded(name + "-", idx.rel.pairs[light], idx.rel),
            Relation.from_encoded(name + "+", idx.rel.pairs[~light], idx.rel),
            delta1, delta2))
    return parts[0], parts[1]


def heavy_matrices(r: IndexedRelation, s: IndexedRelation,
                   delta1: int, delta2: int):
    """(M1, M2) adjacency matrices of the heavy partitions, or None if empty."""
    r, s = _ensure_reduced_many([r, s])
    light_y = (r.right_deg <= delta1) & (s.right_deg <= delta1)
    heavy_a = np.nonzero(r.left_deg > delta2)[0]
    heavy_b = np.nonzero(~light_y)[0]
    heavy_c = np.nonzero(s.left_deg > delta2)[0]
    if not (len(heavy_a) and len(heavy_b) and len(heavy_c)):
        return None
    pos_b = np.full(r.rel.dom_right, -1, dtype=np.int64)
    pos_b[heavy_b] = np.arange(len(heavy_b))

    def adj(idx, heavy_left, transpose):
        pos_l = np.full(idx.rel.dom_left, -1, dtype=np.int64)
        pos_l[heavy_left] = np.arange(len(heavy_left))
        left, right = idx.rel.pairs[:, 0], idx.rel.pairs[:, 1]
        sel = (pos_l[left] >= 0) & (pos_b[right] >= 0)
        data = np.zeros((len(heavy_left), len(heavy_b)), dtype=np.int64)
        data[pos_l[left[sel]], pos_b[right[sel]]] = 1
        if transpose:
            return CountMatrix(data.T.copy(), row_keys=heavy_b, col_keys=heavy_left)
        return CountMatrix(data, row_keys=heavy_left, col_keys=heavy_b)

    return adj(r, heavy_a, False), adj(s, heavy_c, True)


def _merge_counts(code_arrays: list, count_arrays: list):
    codes = np.concatenate(code_arrays)
    cnts = np.concatenate(count_arrays)
    u, inv = np.unique(codes, return_inverse=True)
    out = np.zeros(len(u), dtype=np.int64)
    np.add.at(out, inv, cnts)
    return u, out


def two_path_join(r: IndexedRelation, s: IndexedRelation,
                  plan: Optional[ThresholdPlan] = None,
                  want_counts: bool = False, cores: int = 1) -> OutputSet:
    """pi_{x,z}(R(x,y) join S(z,y)) via heavy/light partitioning.

    The light side is enumerated as three witness-disjoint passes (y light in
    both; x light with y heavy; z light with x and y heavy) and the heavy side
    as a count-matrix product, so per-pair counts add up exactly without a
    recount.
    """
    r, s = _ensure_reduced_many([r, s])
    if plan is None:
        plan = default_plan(r, s)
    plan.validate()
    if plan.strategy == FULL_JOIN:
        out = full_join_dedup(r, s, want_counts=want_counts)
        out.stats["plan"] = plan
        return out

    d1, d2 = plan.delta1, plan.delta2
    dims = (r.rel.dom_left, s.rel.dom_left)
    _check_code_space(dims)
    dom_z = dims[1]
    light_y = (r.right_deg <= d1) & (s.right_deg <= d1)
    light_a = r.left_deg <= d2
    light_c = s.left_deg <= d2
    code_arrays = [np.empty(0, dtype=np.int64)]

    # pass 1: witnesses light in both relations
    for b in np.nonzero(light_y & (r.right_deg > 0) & (s.right_deg > 0))[0]:
        code_arrays.append(
            (r.rev(b)[:, None] * dom_z + s.rev(b)[None, :]).ravel())

    # pass 2: light x, heavy witness
    left, right = r.rel.pairs[:, 0], r.rel.pairs[:, 1]
    sel = light_a[left] & ~light_y[right]
    if sel.any():
        zs, lens = gather_ranges(s.rev_indptr, s.rev_indices, right[sel])
        code_arrays.append(np.repeat(left[sel], lens) * dom_z + zs)

    # pass 3: light z, heavy witness, heavy x
    sleft, sright = s.rel.pairs[:, 0], s.rel.pairs[:, 1]
    sel = light_c[sleft] & ~light_y[sright]
    if sel.any():
        heavy_pairs = r.rel.pairs[~light_a[left]]
        hp_indptr, hp_indices = _csr(heavy_pairs[:, 1], heavy_pairs[:, 0],
                                     r.rel.dom_right)
        xs, lens = gather_ranges(hp_indptr, hp_indices, sright[sel])
        code_arrays.append(xs * dom_z + np.repeat(sleft[sel], lens))

    light_codes = np.concatenate(code_arrays)
    intermediate = len(light_codes)

    mats = heavy_matrices(r, s, d1, d2)
    if mats is not None:
        m = multiply_counts(mats[0], mats[1], cores=cores)
        hi, hj = np.nonzero(m.data)
        heavy_codes = m.row_keys[hi] * dom_z + m.col_keys[hj]
        heavy_counts = m.data[hi, hj]
    else:
        heavy_codes = np.empty(0, dtype=np.int64)
        heavy_counts = np.empty(0, dtype=np.int64)

    stats = {"light_intermediate": intermediate, "plan": plan,
             "heavy_pairs": len(heavy_codes)}
    if want_counts:
        lc, lcnt = np.unique(light_codes, return_counts=True)
        codes, counts = _merge_counts([lc, heavy_codes], [lcnt, heavy_counts])
        return OutputSet(codes, dims, counts, stats)
    codes = np.unique(np.concatenate([light_codes, heavy_codes]))
    return OutputSet(codes, dims, None, stats)


def full_join_dedup(r: IndexedRelation, s: IndexedRelation,
                    want_counts: bool = False) -> OutputSet:
    """Enumerate the full join through the y-index, then deduplicate.

    Reference semantics for every join-project operation here.
    """
    r, s = _ensure_reduced_many([r, s])
    dims = (r.rel.dom_left, s.rel.dom_left)
    _check_code_space(dims)
    dom_z = dims[1]
    bufs = [np.empty(0, dtype=np.int64)]
    for b in range(r.rel.dom_right):
        lr, ls = r.rev(b), s.rev(b)
        if len(lr) and len(ls):
            bufs.append((lr[:, None] * dom_z + ls[None, :]).ravel())
    codes = np.concatenate(bufs)
    stats = {"intermediate": len(codes)}
    if want_counts:
        u, cnt = np.unique(codes, return_counts=True)
        return OutputSet(u, dims, cnt, stats)
    return OutputSet(np.unique(codes), dims, None, stats)


def dedup_light(fixed_left: int, light_ys: Sequence[int],
                s_idx: IndexedRelation, strategy: Optional[str] = None,
                cache_cap: int = 1 << 16) -> np.ndarray:
    """Deduplicated z-partners of `fixed_left` reachable via `light_ys`.

    Both strategies return the identical sorted id array; the heuristic picks
    vector-reuse while the dedup vector fits the cache budget.
    """
    if strategy is None:
        strategy = "vector-reuse" if s_idx.rel.dom_left <= cache_cap else "sort-based"
    lists = [s_idx.rev(b) for b in light_ys]
    if strategy == "vector-reuse":
        flags = np.zeros(s_idx.rel.dom_left, dtype=bool)
        for lst in lists:
            flags[lst] = True
        return np.nonzero(flags)[0]
    if strategy == "sort-based":
        if not lists:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(lists))
    raise ValueError(f"unknown strategy {strategy!r}")


def _cross_codes(lists: list, dims: Sequence[int]) -> np.ndarray:
    codes = lists[0].astype(np.int64)
    for lst, d in zip(lists[1:], dims[1:]):
        codes = (codes[:, None] * d + lst[None, :]).ravel()
    return codes


def star_join(relations: Sequence[IndexedRelation], delta1: int, delta2: int,
              want_counts: bool = False, cores: int = 1,
              heavy_rows_cap: int = 1 << 22) -> OutputSet:
    """pi_{x1..xk} of k relations joined on the shared right column.

    Light parts run k sub-joins with one relation replaced by its light-x
    part, then by its light-everywhere-else-y part; the heavy part multiplies
    the grouped matrices V and W^T over composite heavy-value keys.
    """
    k = len(relations)
    if not 2 <= k <= 4:
        raise ValueError("star_join supports 2 <= k <= 4 relations")
    if delta1 < 1 or delta2 < 1:
        raise ValueError("thresholds must be >= 1")
    rels = _ensure_reduced_many(relations)
    dims = [ri.rel.dom_left for ri in rels]
    _check_code_space(dims)
    dom_y = len(rels[0].rel.right_values)
    deg = np.stack([ri.right_deg for ri in rels])
    light_left = [ri.left_deg <= delta2 for ri in rels]

    code_arrays = [np.empty(0, dtype=np.int64)]
    nonempty = (deg > 0).all(axis=0)

    # sub-joins with one relation restricted to light-x tuples
    for j in range(k):
        for b in np.nonzero(nonempty)[0]:
            lists = [ri.rev(b) for ri in rels]
            lj = lists[j][light_left[j][lists[j]]]
            if len(lj) == 0:
                continue
            lists[j] = lj
            code_arrays.append(_cross_codes(lists, dims))

    # sub-joins over witnesses light in all relations but at most one
    diamond = (deg <= delta1).sum(axis=0) >= k - 1
    for b in np.nonzero(diamond & nonempty)[0]:
        code_arrays.append(_cross_codes([ri.rev(b) for ri in rels], dims))

    # heavy part: composite-key matrices V x W^T
    heavy_left = [np.nonzero(ri.left_deg > delta2)[0] for ri in rels]
    heavy_y = np.nonzero((deg > delta1).sum(axis=0) >= 2)[0]
    g1 = list(range(math.ceil(k / 2)))
    g2 = list(range(math.ceil(k / 2), k))
    heavy_codes = np.empty(0, dtype=np.int64)
    heavy_rows = []
    if len(heavy_y) and all(len(heavy_left[i]) for i in range(k)):
        for grp in (g1, g2):
            n_rows = math.prod(len(heavy_left[i]) for i in grp)
            if n_rows > heavy_rows_cap:
                raise StarResourceError(
                    f"{n_rows} heavy combinations exceed the cap; "
                    "increase delta2")
        pos_y = np.full(dom_y, -1, dtype=np.int64)
        pos_y[heavy_y] = np.arange(len(heavy_y))

        def membership(i):
            pos_l = np.full(dims[i], -1, dtype=np.int64)
            pos_l[heavy_left[i]] = np.arange(len(heavy_left[i]))
            left, right = rels[i].rel.pairs[:, 0], rels[i].rel.pairs[:, 1]
            sel = (pos_l[left] >= 0) & (pos_y[right] >= 0)
            a = np.zeros((len(heavy_left[i]), len(heavy_y)), dtype=np.int64)
            a[pos_l[left[sel]], pos_y[right[sel]]] = 1
            return a

        def grouped(grp):
            v = membership(grp[0])
            for i in grp[1:]:
                v = (v[:, None, :] * membership(i)[None, :, :]).reshape(
                    -1, len(heavy_y))
            return v

        v, w = grouped(g1), grouped(g2)
        m = multiply_counts(CountMatrix(v),
                            CountMatrix(np.ascontiguousarray(w.T)),
                            cores=cores)
        heavy_rows = [v.shape[0], w.shape[0], len(heavy_y)]
        ri, ci = np.nonzero(m.data)
        shape1 = tuple(len(heavy_left[i]) for i in g1)
        shape2 = tuple(len(heavy_left[i]) for i in g2)
        cols1 = np.unravel_index(ri, shape1)
        cols2 = np.unravel_index(ci, shape2)
        cols = [heavy_left[i][cols1[p]] for p, i in enumerate(g1)]
        cols += [heavy_left[i][cols2[p]] for p, i in enumerate(g2)]
        heavy_codes = _encode(cols, dims)

    codes = np.unique(np.concatenate(code_arrays + [heavy_codes]))
    stats = {"heavy_dims": heavy_rows}
    if not want_counts:
        return OutputSet(codes, dims, None, stats)

    # exact witness counts by full per-witness enumeration at desk scale
    bufs = [np.empty(0, dtype=np.int64)]
    for b in np.nonzero(nonempty)[0]:
        bufs.append(_cross_codes([ri.rev(b) for ri in rels], dims))
    u, cnt = np.unique(np.concatenate(bufs), return_counts=True)
    assert np.array_equal(u, codes)
    return OutputSet(u, dims, cnt, stats)
