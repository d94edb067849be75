"""Non-iterative four-rule matching over the pruned blocking graph."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .blocking import BlockCollection, ConfigError, build_blocks
from .graph import BlockingGraph, TopInNeighbors, build_graph, top_in_neighbors
from .kb import KnowledgeBase
from .parallel import map_ranges
from .stats import relation_stats, top_k_name_attributes

logger = logging.getLogger(__name__)

RULES = ("R1", "R2", "R3")


@dataclass(frozen=True)
class MatcherConfig:
    k: int = 2          # name attributes per KB
    K: int = 15         # candidates per node and evidence type
    N: int = 3          # top relations per entity
    theta: float = 0.6  # weight of the value ranking in R3
    purge_fraction: float = 0.01
    name_discriminability: bool = True

    def __post_init__(self):
        for attr in ("k", "K", "N"):
            v = getattr(self, attr)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{attr} must be a positive integer, got {v!r}")
        if not (0.0 < self.theta < 1.0):
            raise ConfigError(f"theta must be in (0, 1), got {self.theta}")
        if not (0.0 < self.purge_fraction <= 1.0):
            raise ConfigError(f"purge_fraction must be in (0, 1], got {self.purge_fraction}")


@dataclass(frozen=True, order=True)
class Match:
    id1: str
    id2: str
    rule: str


@dataclass
class MatchSet:
    matches: list[Match] = field(default_factory=list)
    filtered: list[Match] = field(default_factory=list)

    def pairs(self) -> set[tuple[str, str]]:
        return {(m.id1, m.id2) for m in self.matches}

    def by_rule(self) -> dict[str, list[Match]]:
        out: dict[str, list[Match]] = {r: [] for r in RULES}
        for m in self.matches:
            out[m.rule].append(m)
        return out

    def __len__(self) -> int:
        return len(self.matches)

    def to_tsv(self) -> str:
        return "".join(f"{m.id1}\t{m.id2}\t{m.rule}\n" for m in self.matches)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_tsv())


def resolve_unique(proposals: list[tuple[float, int, int]], taken1: set[int], taken2: set[int]
                   ) -> list[tuple[int, int]]:
    """Accept ``(score, i, j)`` proposals best-first while both ends are free.

    Ties go to the lexicographically smaller pair. ``taken1`` and ``taken2``
    are updated in place.
    """
    accepted = []
    for _, i, j in sorted(proposals, key=lambda p: (-p[0], p[1], p[2])):
        if i in taken1 or j in taken2:
            continue
        taken1.add(i)
        taken2.add(j)
        accepted.append((i, j))
    return accepted


def rule_r1(graph: BlockingGraph, taken1: set[int] | None = None, taken2: set[int] | None = None
            ) -> list[tuple[int, int]]:
    """Name rule: every alpha edge is a match.

    An entity with alpha edges to several partners keeps the one with the
    highest beta.
    """
    taken1 = set() if taken1 is None else taken1
    taken2 = set() if taken2 is None else taken2
    proposals = [(graph.beta(i, j), i, j) for i, j in graph.alpha_pairs]
    return resolve_unique(proposals, taken1, taken2)


@dataclass
class _RuleState:
    graph: BlockingGraph
    side: int
    taken_self: frozenset
    taken_other: frozenset
    theta: float = 0.0


def _r2_range(st: _RuleState, lo: int, hi: int) -> list[tuple[float, int] | None]:
    out = []
    cands = st.graph.value_cands[st.side]
    for v in range(lo, hi):
        best = None
        if v not in st.taken_self:
            for c, beta in cands[v]:
                if c not in st.taken_other:
                    if beta >= 1.0:
                        best = (beta, c)
                    break
        out.append(best)
    return out


def smaller_side(graph: BlockingGraph) -> int:
    n1, n2 = graph.sizes
    return 0 if n1 <= n2 else 1


def rule_r2(graph: BlockingGraph, taken1: set[int], taken2: set[int], workers: int = 1
            ) -> list[tuple[int, int]]:
    """Value rule: an unmatched entity of the smaller KB takes its top
    value candidate when that candidate's beta is at least 1."""
    side = smaller_side(graph)
    taken = (taken1, taken2)
    st = _RuleState(graph, side, frozenset(taken[side]), frozenset(taken[1 - side]))
    props = []
    for v, best in enumerate(map_ranges(_r2_range, graph.sizes[side], st, workers)):
        if best is not None:
            beta, c = best
            props.append((beta, v, c) if side == 0 else (beta, c, v))
    return resolve_unique(props, taken1, taken2)


def aggregate_ranks(val_cands: list[int], ngb_cands: list[int], theta: float) -> dict[int, float]:
    """Weighted normalized-rank score of every candidate in the two lists.

    In a list of length L the first element scores L/L and the last 1/L.
    """
    agg: dict[int, float] = {}
    L = len(val_cands)
    for pos, c in enumerate(val_cands):
        agg[c] = agg.get(c, 0.0) + theta * (L - pos) / L
    L = len(ngb_cands)
    for pos, c in enumerate(ngb_cands):
        agg[c] = agg.get(c, 0.0) + (1.0 - theta) * (L - pos) / L
    return agg


def _r3_range(st: _RuleState, lo: int, hi: int) -> list[tuple[float, int] | None]:
    g, side, other = st.graph, st.side, st.taken_other
    out = []
    for v in range(lo, hi):
        if v in st.taken_self:
            out.append(None)
            continue
        val = [c for c, _ in g.value_cands[side][v] if c not in other]
        ngb = [c for c, _ in g.ngb_cands[side][v] if c not in other]
        agg = aggregate_ranks(val, ngb, st.theta)
        if not agg:
            out.append(None)
            continue
        c = min(agg, key=lambda c: (-agg[c], c))
        out.append((agg[c], c))
    return out


def rule_r3(graph: BlockingGraph, taken1: set[int], taken2: set[int], theta: float, workers: int = 1
            ) -> list[tuple[int, int]]:
    """Rank-aggregation rule over the value and neighbor candidate lists.

    Every unmatched node of both KBs proposes its best aggregate candidate;
    competing proposals are resolved by score, then by pair order.
    """
    best: dict[tuple[int, int], float] = {}
    frozen = (frozenset(taken1), frozenset(taken2))
    for side in (0, 1):
        st = _RuleState(graph, side, frozen[side], frozen[1 - side], theta)
        for v, prop in enumerate(map_ranges(_r3_range, graph.sizes[side], st, workers)):
            if prop is None:
                continue
            score, c = prop
            pair = (v, c) if side == 0 else (c, v)
            if score > best.get(pair, -1.0):
                best[pair] = score
    props = [(s, i, j) for (i, j), s in best.items()]
    return resolve_unique(props, taken1, taken2)


def rule_r4(proposals: list[tuple[int, int, str]], graph: BlockingGraph
            ) -> tuple[list[tuple[int, int, str]], list[tuple[int, int, str]]]:
    """Reciprocity filter: keep proposals whose two directed edges both exist."""
    kept, dropped = [], []
    for i, j, rule in proposals:
        (kept if graph.reciprocal(i, j) else dropped).append((i, j, rule))
    return kept, dropped


def match_graph(graph: BlockingGraph, kb1: KnowledgeBase, kb2: KnowledgeBase, theta: float,
                rules=RULES, reciprocity: bool = True, workers: int = 1,
                timings: dict | None = None) -> MatchSet:
    """Apply the enabled rules in order R1, R2, R3, then the R4 filter."""
    timings = timings if timings is not None else {}
    taken1: set[int] = set()
    taken2: set[int] = set()
    proposals: list[tuple[int, int, str]] = []
    t_start = time.perf_counter()
    for rule in RULES:
        if rule not in rules:
            continue
        t0 = time.perf_counter()
        if rule == "R1":
            found = rule_r1(graph, taken1, taken2)
        elif rule == "R2":
            found = rule_r2(graph, taken1, taken2, workers)
        else:
            found = rule_r3(graph, taken1, taken2, theta, workers)
        proposals.extend((i, j, rule) for i, j in found)
        timings[rule] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if reciprocity:
        kept, dropped = rule_r4(proposals, graph)
    else:
        kept, dropped = proposals, []
    timings["R4"] = time.perf_counter() - t0
    timings["matching"] = time.perf_counter() - t_start

    def to_matches(items):
        return sorted(Match(kb1.ids[i], kb2.ids[j], r) for i, j, r in items)

    return MatchSet(to_matches(kept), to_matches(dropped))


@dataclass
class PipelineResult:
    matches: MatchSet
    graph: BlockingGraph
    blocks: BlockCollection
    name_attrs: tuple[list[str], list[str]]
    top_in: TopInNeighbors
    timings: dict[str, float]


def build_stage(kb1: KnowledgeBase, kb2: KnowledgeBase, config: MatcherConfig, workers: int = 1,
                timings: dict | None = None):
    """Statistics, blocking and graph construction."""
    timings = timings if timings is not None else {}
    t0 = time.perf_counter()
    stats1, stats2 = relation_stats(kb1), relation_stats(kb2)
    names1 = top_k_name_attributes(kb1, config.k, config.name_discriminability)
    names2 = top_k_name_attributes(kb2, config.k, config.name_discriminability)
    t1 = time.perf_counter()
    timings["statistics"] = t1 - t0
    blocks = build_blocks(kb1, kb2, names1, names2, config.purge_fraction)
    t2 = time.perf_counter()
    timings["blocking"] = t2 - t1
    top_in = top_in_neighbors(kb1, kb2, stats1, stats2, config.N)
    timings["top_neighbors"] = time.perf_counter() - t2
    graph = build_graph(kb1, kb2, blocks, top_in, config.K, workers, timings)
    logger.info("graph: %d directed edges, %d alpha pairs, %d token blocks (%d purged)",
                graph.num_edges(), len(graph.alpha_pairs), len(blocks.token_blocks), len(blocks.purged_keys))
    return blocks, (names1, names2), top_in, graph


def run_pipeline(kb1: KnowledgeBase, kb2: KnowledgeBase, config: MatcherConfig | None = None,
                 workers: int = 1, rules=RULES, reciprocity: bool = True) -> PipelineResult:
    """Resolve two KBs end to end."""
    config = config or MatcherConfig()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    blocks, names, top_in, graph = build_stage(kb1, kb2, config, workers, timings)
    matches = match_graph(graph, kb1, kb2, config.theta, rules, reciprocity, workers, timings)
    timings["total"] = time.perf_counter() - t0
    return PipelineResult(matches, graph, blocks, names, top_in, timings)
