import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbresolve.blocking import (Block, BlockCollection, ConfigError, block_stats, build_blocks, name_blocking,
                                purge_blocks, token_blocking)
from kbresolve.kb import GroundTruth, tokens
from kbresolve.stats import name, top_k_name_attributes
from strategies import kb_pairs, random_kb


def test_token_blocks_are_cross_kb_and_sized_by_ef(example):
    kb1, kb2 = example
    blocks = token_blocking(kb1, kb2)
    lake = blocks["lake"]
    assert (len(lake.sub1), len(lake.sub2)) == (1, 31)
    assert "village" not in blocks  # KB1 only
    for t, b in blocks.items():
        assert len(b.sub1) == kb1.ef_table[t] and len(b.sub2) == kb2.ef_table[t]
        assert b.comparisons == len(b.sub1) * len(b.sub2)


def test_j_lake_name_block(example):
    kb1, kb2 = example
    blocks = name_blocking(kb1, kb2, top_k_name_attributes(kb1, 2), top_k_name_attributes(kb2, 2))
    b = blocks["J. Lake"]
    assert [kb1.ids[i] for i in b.sub1] == ["wd:JohnLakeA"]
    assert [kb2.ids[j] for j in b.sub2] == ["db:JonnyLake"]
    assert len(b) == 2 and b.comparisons == 1


def test_no_shared_names(example):
    kb1, kb2 = example
    assert name_blocking(kb1, kb2, ["wd:label"], ["db:description"]) == {}


@settings(max_examples=60, deadline=None)
@given(kb_pairs())
def test_co_occurrence_equals_brute_force(pair):
    kb1, kb2 = pair
    n1, n2 = top_k_name_attributes(kb1, 2), top_k_name_attributes(kb2, 2)
    # no purging: redundant comparisons can exceed |E1|x|E2| even at fraction 1
    blocks = BlockCollection(name_blocking(kb1, kb2, n1, n2), token_blocking(kb1, kb2))
    co = {(i, j) for b in blocks.all_blocks() for i in b.sub1 for j in b.sub2}
    brute = {(i, j) for i, e1 in enumerate(kb1.entities) for j, e2 in enumerate(kb2.entities)
             if tokens(e1) & tokens(e2) or name(e1, n1) & name(e2, n2)}
    assert co == brute
    for b in blocks.all_blocks():
        assert b.sub1 and b.sub2


def _toy_blocks():
    return {"a": Block("a", (0,), (0,)), "b": Block("b", (0, 1), (0, 1, 2)), "c": Block("c", (1,), (1, 2))}


def test_purge_within_budget_keeps_everything():
    kept, purged = purge_blocks(_toy_blocks(), 1.0, 10, 10)
    assert purged == set() and set(kept) == {"a", "b", "c"}


def test_purge_removes_largest_first():
    kept, purged = purge_blocks(_toy_blocks(), 0.05, 10, 10)  # budget 5 of 9 comparisons
    assert purged == {"b"} and set(kept) == {"a", "c"}


@pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
def test_purge_rejects_bad_fraction(fraction):
    with pytest.raises(ConfigError):
        purge_blocks(_toy_blocks(), fraction, 10, 10)


@settings(max_examples=40, deadline=None)
@given(kb_pairs(max_entities=20), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_purge_is_monotone_and_respects_budget(pair, f1, f2):
    kb1, kb2 = pair
    blocks = token_blocking(kb1, kb2)
    lo, hi = sorted((f1, f2))
    kept_lo, _ = purge_blocks(blocks, lo, len(kb1), len(kb2))
    kept_hi, _ = purge_blocks(blocks, hi, len(kb1), len(kb2))
    assert set(kept_lo) <= set(kept_hi) <= set(blocks)
    assert sum(b.comparisons for b in kept_lo.values()) <= lo * len(kb1) * len(kb2)


def test_block_stats_against_exhaustive_scan():
    rng = random.Random(3)
    kb1, kb2 = random_kb(rng, 15, 1), random_kb(rng, 15, 2)
    pairs = list(zip(rng.sample(kb1.ids, 10), rng.sample(kb2.ids, 10)))
    gt = GroundTruth(pairs)
    blocks = build_blocks(kb1, kb2, [], [], purge_fraction=0.3)
    stats = block_stats(blocks.all_blocks(), gt, kb1, kb2)
    shared = {(i, j) for b in blocks.all_blocks() for i in b.sub1 for j in b.sub2}
    covered = sum(1 for a, b in pairs if (kb1.index[a], kb2.index[b]) in shared)
    assert stats.covered == covered
    assert stats.comparisons == sum(b.comparisons for b in blocks.all_blocks())
    assert stats.recall == pytest.approx(100.0 * covered / 10)
    assert stats.precision == pytest.approx(100.0 * covered / stats.comparisons)


def test_empty_collection_has_zero_recall(example):
    kb1, kb2 = example
    gt = GroundTruth([("wd:Bray", "db:Berkshire")])
    s = block_stats([], gt, kb1, kb2)
    assert (s.recall, s.precision, s.f1) == (0.0, 0.0, 0.0)
    assert BlockCollection({}, {}).all_blocks() == []
