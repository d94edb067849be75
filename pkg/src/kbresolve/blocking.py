"""Name and token blocking over two clean knowledge bases."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .kb import GroundTruth, KnowledgeBase
from .stats import name


class ConfigError(ValueError):
    """Invalid configuration value."""


@dataclass(frozen=True)
class Block:
    """Entities sharing a blocking key, split by source KB.

    ``sub1`` and ``sub2`` hold sorted entity positions in KB1 and KB2.
    """

    key: str
    sub1: tuple[int, ...]
    sub2: tuple[int, ...]

    @property
    def comparisons(self) -> int:
        return len(self.sub1) * len(self.sub2)

    def __len__(self) -> int:
        return len(self.sub1) + len(self.sub2)


@dataclass
class BlockCollection:
    name_blocks: dict[str, Block]
    token_blocks: dict[str, Block]
    purged_keys: set[str] = field(default_factory=set)

    def all_blocks(self) -> list[Block]:
        return list(self.name_blocks.values()) + list(self.token_blocks.values())


def _cross_blocks(index1: dict[str, list[int]], index2: dict[str, list[int]]) -> dict[str, Block]:
    keys = sorted(index1.keys() & index2.keys())
    return {k: Block(k, tuple(index1[k]), tuple(index2[k])) for k in keys}


def token_blocking(kb1: KnowledgeBase, kb2: KnowledgeBase) -> dict[str, Block]:
    """One block per token that occurs in both KBs; sub-block sizes are the EFs."""
    return _cross_blocks(kb1.token_index, kb2.token_index)


def name_index(kb: KnowledgeBase, name_attrs) -> dict[str, list[int]]:
    index: dict[str, list[int]] = defaultdict(list)
    for pos, e in enumerate(kb.entities):
        for n in sorted(name(e, name_attrs)):
            index[n].append(pos)
    return dict(index)


def name_blocking(kb1: KnowledgeBase, kb2: KnowledgeBase, name_attrs1, name_attrs2) -> dict[str, Block]:
    """One block per name string shared by the two KBs (exact equality)."""
    return _cross_blocks(name_index(kb1, name_attrs1), name_index(kb2, name_attrs2))


def purge_blocks(token_blocks: dict[str, Block], max_comparisons_fraction: float,
                 n1: int, n2: int) -> tuple[dict[str, Block], set[str]]:
    """Drop the largest blocks until the kept comparisons fit the budget.

    The budget is ``max_comparisons_fraction * n1 * n2``. Blocks are removed in
    descending order of comparisons (ties by key). Returns the kept blocks and
    the purged keys.
    """
    if not (0.0 < max_comparisons_fraction <= 1.0):
        raise ConfigError(f"purge fraction must be in (0, 1], got {max_comparisons_fraction}")
    budget = max_comparisons_fraction * n1 * n2
    total = sum(b.comparisons for b in token_blocks.values())
    purged: set[str] = set()
    if total > budget:
        for b in sorted(token_blocks.values(), key=lambda b: (-b.comparisons, b.key)):
            if total <= budget:
                break
            purged.add(b.key)
            total -= b.comparisons
    kept = {k: b for k, b in token_blocks.items() if k not in purged}
    return kept, purged


def build_blocks(kb1: KnowledgeBase, kb2: KnowledgeBase, name_attrs1, name_attrs2,
                 purge_fraction: float = 0.01) -> BlockCollection:
    tokens = token_blocking(kb1, kb2)
    kept, purged = purge_blocks(tokens, purge_fraction, len(kb1), len(kb2))
    names = name_blocking(kb1, kb2, name_attrs1, name_attrs2)
    return BlockCollection(names, kept, purged)


@dataclass
class BlockStats:
    blocks: int
    comparisons: int
    covered: int
    ground_truth: int

    @property
    def precision(self) -> float:
        return 100.0 * self.covered / self.comparisons if self.comparisons else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.covered / self.ground_truth if self.ground_truth else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def as_dict(self) -> dict:
        return {
            "blocks": self.blocks,
            "comparisons": self.comparisons,
            "covered_matches": self.covered,
            "ground_truth": self.ground_truth,
            "precision": round(self.precision, 2),
            "recall": round(self.recall, 2),
            "f1": round(self.f1, 2),
        }


def block_stats(blocks: Iterable[Block], ground_truth: GroundTruth,
                kb1: KnowledgeBase, kb2: KnowledgeBase) -> BlockStats:
    """Pair-level quality of a block collection.

    A ground-truth pair is covered when both ends share at least one block.
    """
    blocks = list(blocks)
    gt = ground_truth.as_indices(kb1, kb2)
    wanted1 = {i for i, _ in gt}
    member1: dict[int, set[int]] = defaultdict(set)
    member2: dict[int, set[int]] = defaultdict(set)
    wanted2 = {j for _, j in gt}
    for bid, b in enumerate(blocks):
        for i in b.sub1:
            if i in wanted1:
                member1[i].add(bid)
        for j in b.sub2:
            if j in wanted2:
                member2[j].add(bid)
    covered = sum(1 for i, j in gt if member1[i] & member2[j])
    return BlockStats(
        blocks=len(blocks),
        comparisons=sum(b.comparisons for b in blocks),
        covered=covered,
        ground_truth=len(ground_truth),
    )
