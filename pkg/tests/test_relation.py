import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import EXAMPLE_R, random_pairs
from mmjoin.relation import (
    DegreeStats,
    ParseError,
    Relation,
    build_indexed,
    degree_stats,
    gather_ranges,
    generate_community_graph,
    parse_edge_list,
    parse_set_family_file,
    semi_join_reduce,
    semi_join_reduce_many,
)


def test_parse_edge_list_basic():
    src = io.StringIO("# header\n a b \n\nc d\na b\n")
    rel = parse_edge_list(src)
    assert rel.n == 2  # duplicate (a, b) dropped, comment/blank skipped
    assert rel.raw_pair_set() == {("a", "b"), ("c", "d")}


def test_parse_edge_list_errors():
    with pytest.raises(ParseError) as exc:
        parse_edge_list(io.StringIO("a b\nx\n"))
    assert exc.value.line_no == 2
    with pytest.raises(ParseError):
        parse_edge_list(io.StringIO("a b c\n"))


def test_parse_set_family_alias():
    rel = parse_set_family_file(io.StringIO("s0 e1\ns0 e2\n"))
    assert rel.dom_left == 1 and rel.n == 2


def test_relation_encoding_first_seen_order():
    rel = Relation.from_raw_pairs("R", [("x", 1), ("y", 2), ("x", 2)])
    assert rel.left_values == ["x", "y"]
    assert rel.right_values == [1, 2]
    assert rel.left_ids == {"x": 0, "y": 1}
    assert rel.raw_pair_set() == {("x", 1), ("y", 2), ("x", 2)}


def test_semi_join_reduce_filters_and_shares_dict():
    r = Relation.from_raw_pairs("R", [(1, 10), (2, 20), (3, 30)])
    s = Relation.from_raw_pairs("S", [(7, 10), (8, 30), (9, 99)])
    rr, ss = semi_join_reduce(r, s)
    assert rr.raw_pair_set() == {(1, 10), (3, 30)}
    assert ss.raw_pair_set() == {(7, 10), (8, 30)}
    assert rr.right_values is ss.right_values
    # idempotent on tuple sets
    r2, s2 = semi_join_reduce(rr, ss)
    assert r2.raw_pair_set() == rr.raw_pair_set()


def test_semi_join_reduce_many_three_way():
    rels = [Relation.from_raw_pairs(f"R{i}", p) for i, p in enumerate(
        [[(1, 5), (2, 6)], [(3, 5), (3, 7)], [(4, 5), (4, 6)]])]
    red = semi_join_reduce_many(rels)
    assert all(set(dict(r.raw_pairs()).values()) <= {5} for r in red)
    assert red[0].right_values is red[1].right_values is red[2].right_values


def test_indexed_adjacency_matches_brute_force():
    rng = np.random.default_rng(0)
    pairs = random_pairs(rng, 300, 40, 30)
    idx = build_indexed(Relation.from_raw_pairs("R", pairs))
    rel = idx.rel
    fwd = {}
    rev = {}
    for a, b in rel.pairs.tolist():
        fwd.setdefault(a, set()).add(b)
        rev.setdefault(b, set()).add(a)
    for a in range(rel.dom_left):
        assert set(idx.fwd(a).tolist()) == fwd.get(a, set())
        assert idx.left_deg[a] == len(fwd.get(a, set()))
    for b in range(rel.dom_right):
        assert set(idx.rev(b).tolist()) == rev.get(b, set())
        assert idx.right_deg[b] == len(rev.get(b, set()))


def test_example_reverse_index_and_count():
    rel = Relation.from_raw_pairs("R", EXAMPLE_R)
    idx = build_indexed(rel)
    y4 = rel.right_ids[4]
    partners = sorted(rel.left_values[a] for a in idx.rev(y4))
    assert partners == [4, 5, 6]
    stats = degree_stats(idx)
    # x values with degree <= 2: x=1 (1), x=2 (2), x=3 (2)
    assert stats.count_left(2) == 3


def test_out_join_with():
    rng = np.random.default_rng(1)
    r_pairs = random_pairs(rng, 200, 25, 20)
    s_pairs = random_pairs(rng, 200, 25, 20)
    r, s = semi_join_reduce(Relation.from_raw_pairs("R", r_pairs),
                            Relation.from_raw_pairs("S", s_pairs))
    ri, si = build_indexed(r), build_indexed(s)
    expected = 0
    for _, y in r.raw_pairs():
        expected += sum(1 for _, y2 in s.raw_pairs() if y2 == y)
    assert ri.out_join_with(si) == expected


def test_out_join_requires_shared_dict():
    r = build_indexed(Relation.from_raw_pairs("R", [(1, 2)]))
    s = build_indexed(Relation.from_raw_pairs("S", [(1, 2)]))
    with pytest.raises(ValueError):
        r.out_join_with(s)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)),
                min_size=1, max_size=60),
       st.lists(st.integers(0, 15), min_size=1, max_size=10))
def test_gather_ranges_property(pairs, keys):
    idx = build_indexed(Relation.from_raw_pairs("R", pairs))
    keys = [k for k in keys if k < idx.rel.dom_left]
    if not keys:
        return
    vals, lens = gather_ranges(idx.fwd_indptr, idx.fwd_indices,
                               np.array(keys, dtype=np.int64))
    expected = np.concatenate([idx.fwd(k) for k in keys])
    assert np.array_equal(vals, expected)
    assert lens.tolist() == [len(idx.fwd(k)) for k in keys]


def test_degree_stats_against_brute_force():
    rng = np.random.default_rng(2)
    r_pairs = random_pairs(rng, 400, 30, 25)
    s_pairs = random_pairs(rng, 400, 30, 25)
    r, s = semi_join_reduce(Relation.from_raw_pairs("R", r_pairs),
                            Relation.from_raw_pairs("S", s_pairs))
    ri, si = build_indexed(r), build_indexed(s)
    stats_r = degree_stats(ri, partner=si)
    stats_s = degree_stats(si)

    for delta in [0, 1, 2, 3, 5, 100]:
        assert stats_r.count_left(delta) == int(np.sum(ri.left_deg <= delta))
        assert stats_s.count_right(delta) == int(np.sum(si.right_deg <= delta))
        # cdfx: total degree mass of light-right values
        assert stats_s.cdfx(delta) == int(
            si.right_deg[si.right_deg <= delta].sum())
        # sum_y: partner-squared work per light witness (self partner here)
        mask = si.right_deg <= delta
        assert stats_s.sum_y(delta) == int((si.right_deg[mask] ** 2).sum())
        # sum_x: dedup effort = sum of partner list lengths over fwd ranges
        expected = 0
        for a in range(r.dom_left):
            if ri.left_deg[a] <= delta:
                expected += int(si.right_deg[ri.fwd(a)].sum())
        assert stats_r.sum_x(delta) == expected


def test_degree_stats_max_degrees():
    idx = build_indexed(Relation.from_raw_pairs("R", [(1, 1), (1, 2), (2, 1)]))
    stats = degree_stats(idx)
    assert stats.max_left_deg == 2
    assert stats.max_right_deg == 2
    assert isinstance(stats, DegreeStats)


def test_generate_community_graph():
    rel = generate_community_graph(60, 3, 0.8, seed=11)
    again = generate_community_graph(60, 3, 0.8, seed=11)
    assert rel.raw_pair_set() == again.raw_pair_set()
    for a, b in rel.raw_pairs():
        assert a // 20 == b // 20  # edges stay inside a community
    dense = generate_community_graph(30, 3, 1.0, seed=0)
    assert dense.n == 3 * 10 * 10
    with pytest.raises(ValueError):
        generate_community_graph(10, 0, 0.5, seed=0)
    with pytest.raises(ValueError):
        generate_community_graph(10, 2, 1.5, seed=0)
