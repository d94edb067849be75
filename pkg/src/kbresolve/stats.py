"""Relation importance, per-entity top neighbors and name attributes."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .kb import EntityDescription, KnowledgeBase


def harmonic_mean(a: float, b: float) -> float:
    if a + b <= 0:
        return 0.0
    return 2.0 * a * b / (a + b)


@dataclass(frozen=True)
class RelationStats:
    relation: str
    support: float
    discriminability: float

    @property
    def importance(self) -> float:
        return harmonic_mean(self.support, self.discriminability)


@dataclass(frozen=True)
class NameAttributeStats:
    attribute: str
    support: float
    distinct_value_ratio: float
    use_discriminability: bool = True

    @property
    def importance(self) -> float:
        if not self.use_discriminability:
            return self.support
        return harmonic_mean(self.support, self.distinct_value_ratio)


def relation_stats(kb: KnowledgeBase) -> dict[str, RelationStats]:
    """Support, discriminability and importance of every relation of ``kb``.

    support = |instances| / |E|^2 and discriminability = |objects| / |instances|,
    where instances are distinct (subject, object) pairs.
    """
    instances: dict[str, set[tuple[str, str]]] = defaultdict(set)
    for e in kb:
        for p, o in e.relations:
            instances[p].add((e.id, o))
    n2 = float(len(kb)) ** 2
    out = {}
    for p in sorted(instances):
        inst = instances[p]
        objects = {o for _, o in inst}
        out[p] = RelationStats(p, len(inst) / n2, len(objects) / len(inst))
    return out


def rank_relations(stats: dict[str, RelationStats]) -> list[str]:
    """All relations by descending importance, ties by name."""
    return sorted(stats, key=lambda p: (-stats[p].importance, p))


def top_n_relations(e: EntityDescription, stats: dict[str, RelationStats], n: int) -> list[str]:
    if n < 1:
        raise ValueError("N must be >= 1")
    rels = e.relation_names()
    return sorted(rels, key=lambda p: (-stats[p].importance, p))[:n]


def top_n_neighbors(e: EntityDescription, stats: dict[str, RelationStats], n: int) -> set[str]:
    top = set(top_n_relations(e, stats, n))
    return {o for p, o in e.relations if p in top}


def name_attribute_stats(kb: KnowledgeBase, use_discriminability: bool = True
                         ) -> dict[str, NameAttributeStats]:
    instances: dict[str, set[tuple[str, str]]] = defaultdict(set)
    for e in kb:
        for p, v in e.literals:
            instances[p].add((e.id, v))
    n = float(len(kb))
    out = {}
    for p in sorted(instances):
        inst = instances[p]
        subjects = {s for s, _ in inst}
        values = {v for _, v in inst}
        out[p] = NameAttributeStats(p, len(subjects) / n, len(values) / len(inst),
                                    use_discriminability)
    return out


def top_k_name_attributes(kb: KnowledgeBase, k: int, use_discriminability: bool = True) -> list[str]:
    """The ``k`` literal attributes whose values best act as entity names.

    Ranked by the harmonic mean of subject support and distinct-value ratio;
    with ``use_discriminability=False`` by subject support alone.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    stats = name_attribute_stats(kb, use_discriminability)
    return sorted(stats, key=lambda p: (-stats[p].importance, p))[:k]


def name(e: EntityDescription, name_attrs) -> set[str]:
    attrs = set(name_attrs)
    return {v for p, v in e.literals if p in attrs}
