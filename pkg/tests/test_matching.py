import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbresolve.blocking import ConfigError
from kbresolve.graph import BlockingGraph, TopInNeighbors
from kbresolve.kb import EntityDescription, KnowledgeBase
from kbresolve.matching import (Match, MatcherConfig, MatchSet, aggregate_ranks, match_graph, resolve_unique,
                                rule_r2, rule_r3, rule_r4, run_pipeline)
from kbresolve.synthetic import SyntheticConfig, generate
from strategies import kb_pairs

EXAMPLE_CONFIG = MatcherConfig(N=2, purge_fraction=1.0)


def tiny_graph(n1, n2, value=None, ngb=None, alpha=()):
    """Hand-built graph: ``value``/``ngb`` map (side, node) to candidate lists."""
    value = value or {}
    ngb = ngb or {}
    vc = ([tuple(value.get((0, i), ())) for i in range(n1)], [tuple(value.get((1, j), ())) for j in range(n2)])
    nc = ([tuple(ngb.get((0, i), ())) for i in range(n1)], [tuple(ngb.get((1, j), ())) for j in range(n2)])
    empty = ([()] * n1, [()] * n2)
    return BlockingGraph(n1, n2, set(alpha), vc, nc, vc, TopInNeighbors(empty, empty))


class TestExample:
    def test_matches_and_rules(self, example):
        kb1, kb2 = example
        res = run_pipeline(kb1, kb2, EXAMPLE_CONFIG)
        assert res.matches.matches == [
            Match("wd:Bray", "db:Berkshire", "R2"),
            Match("wd:JohnLakeA", "db:JonnyLake", "R1"),
            Match("wd:Restaurant1", "db:Restaurant2", "R3"),
            Match("wd:UK", "db:United_Kingdom", "R1"),
        ]
        assert res.matches.filtered == []
        assert set(res.timings) >= {"statistics", "blocking", "beta", "gamma", "R1", "R2", "R3", "R4", "total"}

    def test_tsv_output(self, example, tmp_path):
        kb1, kb2 = example
        ms = run_pipeline(kb1, kb2, EXAMPLE_CONFIG).matches
        ms.write(tmp_path / "m.tsv")
        assert (tmp_path / "m.tsv").read_text().splitlines()[0] == "wd:Bray\tdb:Berkshire\tR2"


class TestRules:
    def test_r2_threshold(self):
        g = tiny_graph(1, 2, value={(0, 0): [(1, 0.9), (0, 0.5)]})
        assert rule_r2(g, set(), set()) == []
        g = tiny_graph(1, 2, value={(0, 0): [(1, 1.0)]})
        assert rule_r2(g, set(), set()) == [(0, 1)]

    def test_r2_skips_taken_candidates_and_uses_smaller_kb(self):
        # KB2 is smaller here, so its nodes propose
        g = tiny_graph(3, 1, value={(1, 0): [(2, 3.0), (1, 1.5)]})
        assert rule_r2(g, {2}, set()) == [(1, 0)]

    def test_r2_unique_token_pair(self):
        kb1 = KnowledgeBase([EntityDescription("a", 1, [("v", "zanzibar town")])])
        kb2 = KnowledgeBase([EntityDescription("x", 2, [("v", "Zanzibar")]),
                             EntityDescription("y", 2, [("v", "town")]),
                             EntityDescription("z", 2, [("v", "town")])], kb_tag=2)
        res = run_pipeline(kb1, kb2, MatcherConfig(purge_fraction=1.0), rules=("R2",))
        assert res.matches.pairs() == {("a", "x")}

    def test_aggregate_top_of_both_lists_scores_one(self):
        agg = aggregate_ranks([7, 3, 1], [7, 2], 0.6)
        assert agg[7] == pytest.approx(1.0)
        assert agg[3] == pytest.approx(0.6 * 2 / 3)
        assert agg[2] == pytest.approx(0.4 * 1 / 2)

    def test_r3_argmax_matches_exhaustive_scores(self):
        val = [(4, 2.0), (1, 1.5), (0, 1.0), (3, 0.2)]
        ngb = [(3, 5.0), (2, 4.0), (1, 1.0)]
        g = tiny_graph(1, 5, value={(0, 0): val}, ngb={(0, 0): ngb})
        theta = 0.3
        scores = {}
        for c in range(5):
            s = 0.0
            for lst, w in ((val, theta), (ngb, 1 - theta)):
                ids = [x for x, _ in lst]
                if c in ids:
                    s += w * (len(ids) - ids.index(c)) / len(ids)
            scores[c] = s
        best = max(range(5), key=lambda c: (scores[c], -c))
        assert rule_r3(g, set(), set(), theta) == [(0, best)]

    def test_r3_no_candidates_no_match(self):
        assert rule_r3(tiny_graph(2, 2), set(), set(), 0.6) == []

    def test_r4_drops_one_way_edges(self):
        g = tiny_graph(2, 2, value={(0, 0): [(0, 1.0)], (1, 0): [(0, 1.0)], (0, 1): [(1, 1.0)]})
        kept, dropped = rule_r4([(0, 0, "R2"), (1, 1, "R3")], g)
        assert kept == [(0, 0, "R2")] and dropped == [(1, 1, "R3")]

    def test_r4_identity_on_reciprocal_graph(self):
        g = tiny_graph(2, 2, value={(0, 0): [(0, 1.0)], (1, 0): [(0, 1.0)], (0, 1): [(1, 2.0)], (1, 1): [(1, 2.0)]})
        props = [(0, 0, "R3"), (1, 1, "R2")]
        assert rule_r4(props, g) == (props, [])

    def test_resolve_unique_ties(self):
        taken1, taken2 = set(), set()
        assert resolve_unique([(1.0, 1, 0), (1.0, 0, 0), (0.5, 1, 1)], taken1, taken2) == [(0, 0), (1, 1)]


class TestConfig:
    @pytest.mark.parametrize("kw", [{"k": 0}, {"K": -1}, {"N": 0}, {"theta": 0.0}, {"theta": 1.0},
                                    {"purge_fraction": 0.0}, {"k": 1.5}])
    def test_rejects_out_of_range(self, kw):
        with pytest.raises(ConfigError):
            MatcherConfig(**kw)

    def test_defaults(self):
        c = MatcherConfig()
        assert (c.k, c.K, c.N, c.theta) == (2, 15, 3, 0.6)


def test_empty_kb_gives_no_matches(example):
    kb1, _ = example
    empty = KnowledgeBase([], kb_tag=2)
    assert len(run_pipeline(kb1, empty).matches) == 0
    assert len(run_pipeline(KnowledgeBase([]), empty).matches) == 0


def test_self_join_matches_every_copy():
    kb1, _, _ = generate(SyntheticConfig(n_per_kb=300, seed=11))
    copy = KnowledgeBase([EntityDescription("copy:" + e.id, 2, list(e.literals),
                                            [(p, "copy:" + o) for p, o in e.relations]) for e in kb1], kb_tag=2)
    res = run_pipeline(kb1, copy)
    assert res.matches.pairs() == {(i, "copy:" + i) for i in kb1.ids}


@settings(max_examples=50, deadline=None)
@given(kb_pairs(max_entities=15), st.integers(1, 6), st.sampled_from([0.3, 0.5, 0.6, 0.8]))
def test_unique_mapping_and_reciprocity(pair, K, theta):
    kb1, kb2 = pair
    res = run_pipeline(kb1, kb2, MatcherConfig(K=K, theta=theta, purge_fraction=0.5))
    ms = res.matches.matches
    assert len({m.id1 for m in ms}) == len(ms) == len({m.id2 for m in ms})
    for m in ms:
        assert res.graph.reciprocal(kb1.index[m.id1], kb2.index[m.id2])
    # a proposal filtered by reciprocity is never re-proposed
    assert not ({(m.id1, m.id2) for m in res.matches.filtered} & res.matches.pairs())


@settings(max_examples=30, deadline=None)
@given(kb_pairs(max_entities=15))
def test_rule_precedence(pair):
    kb1, kb2 = pair
    res = run_pipeline(kb1, kb2, MatcherConfig(purge_fraction=0.5), reciprocity=False)
    by_rule = res.matches.by_rule()
    r1 = {m.id1 for m in by_rule["R1"]} | {m.id2 for m in by_rule["R1"]}
    r2 = {m.id1 for m in by_rule["R2"]} | {m.id2 for m in by_rule["R2"]}
    r3 = {m.id1 for m in by_rule["R3"]} | {m.id2 for m in by_rule["R3"]}
    assert not (r1 & r2) and not (r1 & r3) and not (r2 & r3)


def test_worker_count_and_input_order_do_not_change_output():
    kb1, kb2, _ = generate(SyntheticConfig(n_per_kb=800, seed=2))
    base = run_pipeline(kb1, kb2, workers=1).matches.to_tsv()
    assert run_pipeline(kb1, kb2, workers=3).matches.to_tsv() == base
    rng = random.Random(0)
    d1, d2 = list(kb1), list(kb2)
    rng.shuffle(d1)
    rng.shuffle(d2)
    shuffled = run_pipeline(KnowledgeBase(d1, 1), KnowledgeBase(d2, 2)).matches.to_tsv()
    assert shuffled == base


def test_theta_below_half_degrades_f1_on_nearly_similar_data():
    from kbresolve.evaluation import score_matches
    from kbresolve.matching import build_stage
    kb1, kb2, gt = generate(SyntheticConfig(n_per_kb=3000, seed=1))
    _, _, _, graph = build_stage(kb1, kb2, MatcherConfig())
    f1 = {t: score_matches(match_graph(graph, kb1, kb2, t), gt).f1 for t in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)}
    best_high = max(f1[t] for t in (0.5, 0.6, 0.7, 0.8))
    assert f1[0.3] < f1[0.4] < best_high, f1


def test_matchset_helpers():
    ms = MatchSet([Match("a", "x", "R1"), Match("b", "y", "R3")])
    assert len(ms) == 2
    assert ms.pairs() == {("a", "x"), ("b", "y")}
    assert [m.id1 for m in ms.by_rule()["R3"]] == ["b"]
    assert ms.to_tsv() == "a\tx\tR1\nb\ty\tR3\n"
