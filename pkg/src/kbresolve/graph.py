"""Pruned disjunctive blocking graph.

Nodes are ``(side, position)`` with side 0 for KB1 and side 1 for KB2. The
graph is never materialized in full: every node keeps its top-K value
candidates (by beta), its top-K neighbor candidates (by gamma) and its name
partners (alpha). A directed edge ``v -> u`` exists iff ``u`` is in one of
these three lists of ``v``.
"""
from __future__ import annotations

import heapq
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator

from .blocking import Block, BlockCollection
from .kb import KnowledgeBase, token_weight
from .parallel import map_ranges
from .stats import RelationStats, top_n_relations

Cands = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class EdgeLabel:
    alpha: int
    beta: float
    gamma: float

    def is_trivial(self) -> bool:
        return self.alpha == 0 and self.beta == 0.0 and self.gamma == 0.0


def top_candidates(weights: dict[int, float], k: int) -> Cands:
    """Best ``k`` entries by descending weight, ties by smaller position."""
    best = heapq.nsmallest(k, weights.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(best)


# --- top in-neighbors -------------------------------------------------------

@dataclass
class TopInNeighbors:
    """Forward and reverse top-N neighbor lists, per side.

    ``forward[s][i]`` are the positions of the top-N neighbors of entity ``i``
    of side ``s`` (same KB); ``reverse[s][i]`` are the entities of side ``s``
    that have ``i`` among their top-N neighbors.
    """

    forward: tuple[list[tuple[int, ...]], list[tuple[int, ...]]]
    reverse: tuple[list[tuple[int, ...]], list[tuple[int, ...]]]


def top_neighbor_positions(kb: KnowledgeBase, stats: dict[str, RelationStats], n: int
                           ) -> list[tuple[int, ...]]:
    out = []
    for e in kb.entities:
        top = set(top_n_relations(e, stats, n)) if e.relations else set()
        out.append(tuple(sorted({kb.index[o] for p, o in e.relations if p in top})))
    return out


def reverse_lists(forward: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    rev: list[list[int]] = [[] for _ in forward]
    for e, nbs in enumerate(forward):
        for ne in nbs:
            rev[ne].append(e)
    return [tuple(r) for r in rev]


def top_in_neighbors(kb1: KnowledgeBase, kb2: KnowledgeBase, stats1, stats2, n: int) -> TopInNeighbors:
    f1 = top_neighbor_positions(kb1, stats1, n)
    f2 = top_neighbor_positions(kb2, stats2, n)
    return TopInNeighbors((f1, f2), (reverse_lists(f1), reverse_lists(f2)))


# --- name evidence ------------------------------------------------------------

def alpha_edges(name_blocks: dict[str, Block]) -> set[tuple[int, int]]:
    """(KB1 pos, KB2 pos) of every name block holding exactly one comparison."""
    return {(b.sub1[0], b.sub2[0]) for b in name_blocks.values() if b.comparisons == 1}


# --- value evidence -----------------------------------------------------------

@dataclass
class _BetaState:
    entity_tokens: list[tuple[str, ...]]
    blocks: dict[str, Block]
    weights: dict[str, float]
    side: int
    k: int


def _beta_range(st: _BetaState, lo: int, hi: int) -> list[Cands]:
    blocks, weights, k = st.blocks, st.weights, st.k
    other = 1 - st.side
    out = []
    for i in range(lo, hi):
        acc: dict[int, float] = {}
        # sorted token order: every pair sums its shared tokens in the same order
        for t in st.entity_tokens[i]:
            b = blocks.get(t)
            if b is None:
                continue
            w = weights[t]
            for j in (b.sub2 if other == 1 else b.sub1):
                acc[j] = acc.get(j, 0.0) + w
        out.append(top_candidates(acc, k))
    return out


def block_weights(token_blocks: dict[str, Block]) -> dict[str, float]:
    return {t: token_weight(len(b.sub1), len(b.sub2)) for t, b in token_blocks.items()}


def beta_weights(kb1: KnowledgeBase, kb2: KnowledgeBase, token_blocks: dict[str, Block], k: int,
                 workers: int = 1) -> tuple[list[Cands], list[Cands]]:
    """Top-``k`` value candidates of every entity of both KBs, with their beta."""
    weights = block_weights(token_blocks)
    c1 = map_ranges(_beta_range, len(kb1), _BetaState(kb1.entity_tokens, token_blocks, weights, 0, k), workers)
    c2 = map_ranges(_beta_range, len(kb2), _BetaState(kb2.entity_tokens, token_blocks, weights, 1, k), workers)
    return c1, c2


def beta_adjacency(value_cands: tuple[list[Cands], list[Cands]]) -> tuple[list[Cands], list[Cands]]:
    """Pairs linked by a retained beta edge in either direction, per side."""
    n1, n2 = len(value_cands[0]), len(value_cands[1])
    adj: tuple[list[dict[int, float]], list[dict[int, float]]] = (
        [dict(c) for c in value_cands[0]], [dict(c) for c in value_cands[1]])
    for j in range(n2):
        for i, b in value_cands[1][j]:
            adj[0][i][j] = b
    for i in range(n1):
        for j, b in value_cands[0][i]:
            adj[1][j][i] = b
    return ([tuple(sorted(d.items())) for d in adj[0]], [tuple(sorted(d.items())) for d in adj[1]])


# --- neighbor evidence --------------------------------------------------------

@dataclass
class _GammaState:
    forward: list[tuple[int, ...]]       # top neighbors on this side
    beta_adj: list[Cands]                # this side -> other side
    reverse_other: list[tuple[int, ...]]  # top in-neighbors on the other side
    k: int


def _gamma_range(st: _GammaState, lo: int, hi: int) -> list[Cands]:
    out = []
    for a in range(lo, hi):
        contrib: dict[int, list[float]] = defaultdict(list)
        for na in st.forward[a]:
            for nb, beta in st.beta_adj[na]:
                for b in st.reverse_other[nb]:
                    contrib[b].append(beta)
        # exact summation: the same pair gets the same gamma from either side
        gam = {b: math.fsum(v) for b, v in contrib.items()}
        out.append(top_candidates(gam, st.k))
    return out


def gamma_weights(beta_adj: tuple[list[Cands], list[Cands]], top_in: TopInNeighbors, k: int,
                  workers: int = 1) -> tuple[list[Cands], list[Cands]]:
    """Top-``k`` neighbor candidates of every entity of both KBs, with their gamma.

    gamma(a, b) sums beta(na, nb) over the top neighbors ``na`` of ``a`` and
    ``nb`` of ``b`` that are linked by a retained beta edge.
    """
    g1 = map_ranges(_gamma_range, len(beta_adj[0]),
                    _GammaState(top_in.forward[0], beta_adj[0], top_in.reverse[1], k), workers)
    g2 = map_ranges(_gamma_range, len(beta_adj[1]),
                    _GammaState(top_in.forward[1], beta_adj[1], top_in.reverse[0], k), workers)
    return g1, g2


# --- the graph ----------------------------------------------------------------

class BlockingGraph:
    """Pruned, directed disjunctive blocking graph over two KBs."""

    def __init__(self, n1: int, n2: int, alpha_pairs, value_cands, ngb_cands, beta_adj,
                 top_in: TopInNeighbors, entity_tokens=None, weights=None, k: int | None = None):
        self.sizes = (n1, n2)
        self.k = k
        self.value_cands: tuple[list[Cands], list[Cands]] = value_cands
        self.ngb_cands: tuple[list[Cands], list[Cands]] = ngb_cands
        self.beta_adj = beta_adj
        self.top_in = top_in
        self._tokens = entity_tokens
        self._weights = weights
        alpha: tuple[list[list[int]], list[list[int]]] = ([[] for _ in range(n1)], [[] for _ in range(n2)])
        for i, j in sorted(alpha_pairs):
            alpha[0][i].append(j)
            alpha[1][j].append(i)
        self.alpha: tuple[list[tuple[int, ...]], list[tuple[int, ...]]] = (
            [tuple(a) for a in alpha[0]], [tuple(a) for a in alpha[1]])
        self.alpha_pairs: list[tuple[int, int]] = sorted(alpha_pairs)
        self._out: tuple[list[frozenset[int] | None], list[frozenset[int] | None]] = ([None] * n1, [None] * n2)

    def out_neighbors(self, side: int, v: int) -> frozenset[int]:
        cached = self._out[side][v]
        if cached is None:
            cached = frozenset(self.alpha[side][v]).union(
                j for j, _ in self.value_cands[side][v]).union(j for j, _ in self.ngb_cands[side][v])
            self._out[side][v] = cached
        return cached

    def has_edge(self, side: int, v: int, u: int) -> bool:
        return u in self.out_neighbors(side, v)

    def reciprocal(self, i: int, j: int) -> bool:
        """Both KB1 ``i`` -> KB2 ``j`` and KB2 ``j`` -> KB1 ``i`` are present."""
        return self.has_edge(0, i, j) and self.has_edge(1, j, i)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for side in (0, 1):
            for v in range(self.sizes[side]):
                for u in sorted(self.out_neighbors(side, v)):
                    yield side, v, u

    def num_edges(self) -> int:
        return sum(len(self.out_neighbors(s, v)) for s in (0, 1) for v in range(self.sizes[s]))

    def _pair(self, side: int, v: int, u: int) -> tuple[int, int]:
        return (v, u) if side == 0 else (u, v)

    def beta(self, i: int, j: int) -> float:
        """Value similarity of KB1 ``i`` and KB2 ``j`` over the retained token blocks."""
        for c, b in self.beta_adj[0][i]:
            if c == j:
                return b
        if self._tokens is None:
            return 0.0
        t2 = set(self._tokens[1][j])
        total = 0.0
        for t in self._tokens[0][i]:
            if t in t2 and t in self._weights:
                total += self._weights[t]
        return total

    def gamma(self, i: int, j: int) -> float:
        for c, g in self.ngb_cands[0][i]:
            if c == j:
                return g
        for c, g in self.ngb_cands[1][j]:
            if c == i:
                return g
        parts = []
        nbs_j = set(self.top_in.forward[1][j])
        for na in self.top_in.forward[0][i]:
            parts.extend(b for nb, b in self.beta_adj[0][na] if nb in nbs_j)
        return math.fsum(parts)

    def label(self, side: int, v: int, u: int) -> EdgeLabel:
        i, j = self._pair(side, v, u)
        return EdgeLabel(1 if j in self.alpha[0][i] else 0, self.beta(i, j), self.gamma(i, j))

    def dump(self, path, kb1: KnowledgeBase, kb2: KnowledgeBase) -> None:
        """Write every directed edge as ``src<TAB>dst<TAB>alpha<TAB>beta<TAB>gamma``."""
        ids = (kb1.ids, kb2.ids)
        with open(path, "w", encoding="utf-8") as f:
            for side, v, u in self.edges():
                lab = self.label(side, v, u)
                f.write(f"{ids[side][v]}\t{ids[1 - side][u]}\t{lab.alpha}\t{lab.beta!r}\t{lab.gamma!r}\n")


def build_graph(kb1: KnowledgeBase, kb2: KnowledgeBase, blocks: BlockCollection, top_in: TopInNeighbors,
                k: int, workers: int = 1, timings: dict | None = None) -> BlockingGraph:
    """Weight and prune the blocking graph: alpha, then beta, then gamma."""
    if k < 1:
        raise ValueError("K must be >= 1")
    timings = timings if timings is not None else {}
    t0 = time.perf_counter()
    alpha = alpha_edges(blocks.name_blocks)
    value_cands = beta_weights(kb1, kb2, blocks.token_blocks, k, workers)
    adj = beta_adjacency(value_cands)
    t1 = time.perf_counter()
    timings["beta"] = t1 - t0
    ngb_cands = gamma_weights(adj, top_in, k, workers)
    timings["gamma"] = time.perf_counter() - t1
    return BlockingGraph(len(kb1), len(kb2), alpha, value_cands, ngb_cands, adj, top_in,
                         entity_tokens=(kb1.entity_tokens, kb2.entity_tokens),
                         weights=block_weights(blocks.token_blocks), k=k)


# --- explicit reference construction (small inputs only) ----------------------

def unpruned_labels(kb1: KnowledgeBase, kb2: KnowledgeBase, blocks: BlockCollection,
                    top_in: TopInNeighbors) -> dict[tuple[int, int], EdgeLabel]:
    """Every non-trivial undirected edge of the full graph with its label.

    Quadratic in the KB sizes; meant for checking the pruned construction.
    """
    weights = block_weights(blocks.token_blocks)
    alpha = alpha_edges(blocks.name_blocks)
    beta: dict[tuple[int, int], float] = {}
    for i in range(len(kb1)):
        t1 = kb1.entity_tokens[i]
        for j in range(len(kb2)):
            t2 = set(kb2.entity_tokens[j])
            s = 0.0
            for t in t1:
                if t in t2 and t in weights:
                    s += weights[t]
            if s > 0:
                beta[(i, j)] = s
    labels = {}
    for i in range(len(kb1)):
        for j in range(len(kb2)):
            g = math.fsum(beta.get((a, b), 0.0) for a in top_in.forward[0][i] for b in top_in.forward[1][j])
            lab = EdgeLabel(1 if (i, j) in alpha else 0, beta.get((i, j), 0.0), g)
            if not lab.is_trivial():
                labels[(i, j)] = lab
    return labels


def prune(labels: dict[tuple[int, int], EdgeLabel], n1: int, n2: int, k: int
          ) -> tuple[list[set[int]], list[set[int]]]:
    """Directed out-neighbor sets kept by per-node top-K pruning of ``labels``.

    Each node keeps its alpha edges plus the union of its top-K edges by beta
    and by gamma (zero weights never count).
    """
    out: tuple[list[set[int]], list[set[int]]] = ([set() for _ in range(n1)], [set() for _ in range(n2)])
    by_node: tuple[list[dict], list[dict]] = ([{} for _ in range(n1)], [{} for _ in range(n2)])
    for (i, j), lab in labels.items():
        by_node[0][i][j] = lab
        by_node[1][j][i] = lab
    for side in (0, 1):
        for v, nbrs in enumerate(by_node[side]):
            keep = {u for u, lab in nbrs.items() if lab.alpha == 1}
            keep.update(u for u, _ in top_candidates({u: l.beta for u, l in nbrs.items() if l.beta > 0}, k))
            keep.update(u for u, _ in top_candidates({u: l.gamma for u, l in nbrs.items() if l.gamma > 0}, k))
            out[side][v] = keep
    return out
