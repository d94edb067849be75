"""Value-only baseline tuned over a grid of n-gram/weighting/similarity/threshold.

Candidate pairs are the token- and name-block co-occurrences (the blocking
graph before pruning); scored pairs are resolved with Unique Mapping
Clustering. Neighbor evidence is never used.
"""
from __future__ import annotations

import csv
import itertools
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .blocking import Block, BlockCollection, ConfigError, build_blocks
from .kb import EntityDescription, GroundTruth, KnowledgeBase, tokenize
from .parallel import map_ranges
from .stats import top_k_name_attributes

NGRAMS = (1, 2, 3)
WEIGHTINGS = ("TF", "TF-IDF")
SIMILARITIES = ("cosine", "jaccard", "generalized_jaccard", "sigma")
THRESHOLDS = tuple(round(0.05 * i, 2) for i in range(20))


@dataclass(frozen=True)
class BslConfig:
    ngram_n: int
    weighting: str
    similarity: str
    threshold: float

    def __post_init__(self):
        if self.ngram_n not in NGRAMS:
            raise ConfigError(f"ngram_n must be one of {NGRAMS}")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"weighting must be one of {WEIGHTINGS}")
        if self.similarity not in SIMILARITIES:
            raise ConfigError(f"similarity must be one of {SIMILARITIES}")
        if self.similarity == "sigma" and self.weighting != "TF-IDF":
            raise ConfigError("sigma similarity requires TF-IDF weights")
        if not (0.0 <= self.threshold < 1.0):
            raise ConfigError("threshold must be in [0, 1)")


def scoring_schemes() -> list[tuple[int, str, str]]:
    return [(n, w, s) for n in NGRAMS for w in WEIGHTINGS for s in SIMILARITIES
            if not (s == "sigma" and w != "TF-IDF")]


def grid() -> list[BslConfig]:
    return [BslConfig(n, w, s, t) for n, w, s in scoring_schemes() for t in THRESHOLDS]


# --- profiles -------------------------------------------------------------------

def entity_ngrams(e: EntityDescription, n: int) -> list[str]:
    """Token n-grams of every literal value; windows never span two values."""
    grams = []
    for _, value in e.literals:
        toks = tokenize(value)
        grams.extend(" ".join(toks[i:i + n]) for i in range(len(toks) - n + 1))
    return grams


def document_frequencies(kbs: Iterable[KnowledgeBase], n: int) -> tuple[Counter, int]:
    df: Counter = Counter()
    docs = 0
    for kb in kbs:
        for e in kb:
            df.update(set(entity_ngrams(e, n)))
            docs += 1
    return df, docs


def idf_table(df: Counter, docs: int) -> dict[str, float]:
    return {g: math.log(docs / c) for g, c in df.items()}


def build_profile(e: EntityDescription, n: int, weighting: str, idf: dict[str, float] | None = None
                  ) -> dict[str, float]:
    counts = Counter(entity_ngrams(e, n))
    total = sum(counts.values())
    prof = {g: c / total for g, c in counts.items()}
    if weighting == "TF-IDF":
        if idf is None:
            raise ValueError("TF-IDF weighting needs an idf table")
        prof = {g: w * idf[g] for g, w in prof.items()}
    return prof


def build_profiles(kb: KnowledgeBase, n: int, weighting: str, idf: dict[str, float] | None = None
                   ) -> dict[str, dict[str, float]]:
    """Entity id -> sparse gram weights.

    TF is the gram count divided by the entity's gram count. IDF is
    ``log(D / df)`` with both KBs' entities as the D documents.
    """
    return {e.id: build_profile(e, n, weighting, idf) for e in kb}


def pair_similarity(p1: dict[str, float], p2: dict[str, float], similarity: str) -> float:
    """Reference similarity of two gram profiles, in [0, 1].

    jaccard compares gram sets; generalized_jaccard is sum(min)/sum(max);
    sigma is the summed weight of shared grams over the summed weight of all.
    """
    if similarity == "cosine":
        dot = sum(w * p2[g] for g, w in p1.items() if g in p2)
        norm = math.sqrt(sum(w * w for w in p1.values())) * math.sqrt(sum(w * w for w in p2.values()))
        return min(1.0, dot / norm) if norm > 0 else 0.0
    if similarity == "jaccard":
        union = len(p1.keys() | p2.keys())
        return len(p1.keys() & p2.keys()) / union if union else 0.0
    if similarity == "generalized_jaccard":
        grams = p1.keys() | p2.keys()
        num = sum(min(p1.get(g, 0.0), p2.get(g, 0.0)) for g in grams)
        den = sum(max(p1.get(g, 0.0), p2.get(g, 0.0)) for g in grams)
        return num / den if den > 0 else 0.0
    if similarity == "sigma":
        common = p1.keys() & p2.keys()
        num = sum(p1[g] + p2[g] for g in common)
        den = sum(p1.values()) + sum(p2.values())
        return num / den if den > 0 else 0.0
    raise ConfigError(f"unknown similarity {similarity!r}")


# --- Unique Mapping Clustering -------------------------------------------------------

def greedy_order(scored_pairs: Iterable[tuple[float, str, str]]) -> list[tuple[float, str, str]]:
    """Pairs accepted by best-first one-to-one assignment with no threshold.

    Ties are broken by the lexicographically smaller pair.
    """
    used1: set = set()
    used2: set = set()
    out = []
    for s, a, b in sorted(scored_pairs, key=lambda p: (-p[0], p[1], p[2])):
        if a in used1 or b in used2:
            continue
        used1.add(a)
        used2.add(b)
        out.append((s, a, b))
    return out


def unique_mapping_clustering(scored_pairs: Iterable[tuple[float, str, str]], threshold: float
                              ) -> list[tuple[str, str]]:
    """Pop pairs in decreasing score, keep those with both ends unmatched,
    stop once the best remaining score is below ``threshold``."""
    # the greedy run for a threshold is the prefix of the unthresholded run
    out = []
    for s, a, b in greedy_order(scored_pairs):
        if s < threshold:
            break
        out.append((a, b))
    return out


def _greedy_arrays(scores: np.ndarray, I: np.ndarray, J: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.lexsort((J, I, -scores))
    used1 = np.zeros(int(I.max()) + 1 if len(I) else 0, dtype=bool)
    used2 = np.zeros(int(J.max()) + 1 if len(J) else 0, dtype=bool)
    keep = []
    for k in order.tolist():
        i, j = I[k], J[k]
        if used1[i] or used2[j]:
            continue
        used1[i] = True
        used2[j] = True
        keep.append(k)
    keep = np.asarray(keep, dtype=np.int64)
    return scores[keep], I[keep], J[keep]


# --- vectorized scoring ------------------------------------------------------------

def candidate_pairs(blocks: BlockCollection, n1: int, n2: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct (KB1, KB2) position pairs sharing a token or name block, sorted."""
    rows, cols = [], []
    all_blocks: list[Block] = list(blocks.token_blocks.values()) + list(blocks.name_blocks.values())
    for bid, b in enumerate(all_blocks):
        rows.append(np.asarray(b.sub1, dtype=np.int64))
        cols.append(np.full(len(b.sub1), bid, dtype=np.int64))
    if not all_blocks:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    m1 = sp.csr_matrix((np.ones(sum(len(r) for r in rows), dtype=np.float32),
                        (np.concatenate(rows), np.concatenate(cols))), shape=(n1, len(all_blocks)))
    rows, cols = [], []
    for bid, b in enumerate(all_blocks):
        rows.append(np.asarray(b.sub2, dtype=np.int64))
        cols.append(np.full(len(b.sub2), bid, dtype=np.int64))
    m2 = sp.csr_matrix((np.ones(sum(len(r) for r in rows), dtype=np.float32),
                        (np.concatenate(rows), np.concatenate(cols))), shape=(n2, len(all_blocks)))
    co = (m1 @ m2.T).tocoo()
    order = np.lexsort((co.col, co.row))
    return co.row[order].astype(np.int64), co.col[order].astype(np.int64)


@dataclass
class ProfileMatrices:
    weights1: sp.csr_matrix
    weights2: sp.csr_matrix
    presence1: sp.csr_matrix
    presence2: sp.csr_matrix


def profile_matrices(kb1: KnowledgeBase, kb2: KnowledgeBase, n: int, weighting: str) -> ProfileMatrices:
    df, docs = document_frequencies((kb1, kb2), n)
    vocab = {g: k for k, g in enumerate(sorted(df))}
    idf = np.zeros(len(vocab))
    for g, c in df.items():
        idf[vocab[g]] = math.log(docs / c)

    def mats(kb):
        indptr, indices, data = [0], [], []
        for e in kb:
            counts = Counter(entity_ngrams(e, n))
            total = sum(counts.values())
            for g in sorted(counts):
                indices.append(vocab[g])
                data.append(counts[g] / total)
            indptr.append(len(indices))
        idx = np.asarray(indices, dtype=np.int64)
        tf = np.asarray(data, dtype=np.float64)
        shape = (len(kb), len(vocab))
        w = tf * idf[idx] if weighting == "TF-IDF" else tf
        weights = sp.csr_matrix((w, idx, np.asarray(indptr)), shape=shape)
        presence = sp.csr_matrix((np.ones_like(tf), idx, np.asarray(indptr)), shape=shape)
        return weights, presence

    w1, p1 = mats(kb1)
    w2, p2 = mats(kb2)
    return ProfileMatrices(w1, w2, p1, p2)


def _row_sums(m: sp.spmatrix) -> np.ndarray:
    return np.asarray(m.sum(axis=1)).ravel()


def score_pairs(pm: ProfileMatrices, I: np.ndarray, J: np.ndarray, similarity: str,
                chunk: int = 200_000) -> np.ndarray:
    """Similarity of every (I[k], J[k]) pair; matches :func:`pair_similarity`."""
    out = np.zeros(len(I))
    if similarity == "cosine":
        n1 = np.sqrt(_row_sums(pm.weights1.multiply(pm.weights1)))
        n2 = np.sqrt(_row_sums(pm.weights2.multiply(pm.weights2)))
    elif similarity == "jaccard":
        c1, c2 = _row_sums(pm.presence1), _row_sums(pm.presence2)
    else:
        s1, s2 = _row_sums(pm.weights1), _row_sums(pm.weights2)
    for lo in range(0, len(I), chunk):
        i, j = I[lo:lo + chunk], J[lo:lo + chunk]
        if similarity == "cosine":
            num = _row_sums(pm.weights1[i].multiply(pm.weights2[j]))
            den = n1[i] * n2[j]
            res = np.minimum(1.0, np.divide(num, den, out=np.zeros_like(num), where=den > 0))
        elif similarity == "jaccard":
            num = _row_sums(pm.presence1[i].multiply(pm.presence2[j]))
            den = c1[i] + c2[j] - num
            res = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        elif similarity == "generalized_jaccard":
            num = _row_sums(pm.weights1[i].minimum(pm.weights2[j]))
            den = s1[i] + s2[j] - num
            res = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        elif similarity == "sigma":
            a, b = pm.weights1[i], pm.weights2[j]
            num = _row_sums(a.multiply(pm.presence2[j])) + _row_sums(b.multiply(pm.presence1[i]))
            den = s1[i] + s2[j]
            res = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        else:
            raise ConfigError(f"unknown similarity {similarity!r}")
        out[lo:lo + chunk] = res
    return out


# --- grid search -----------------------------------------------------------------------

@dataclass
class GridRow:
    ngram_n: int
    weighting: str
    similarity: str
    threshold: float
    matches: int
    true_positives: int
    precision: float
    recall: float
    f1: float

    @property
    def config(self) -> BslConfig:
        return BslConfig(self.ngram_n, self.weighting, self.similarity, self.threshold)


@dataclass
class _GridState:
    kb1: KnowledgeBase
    kb2: KnowledgeBase
    I: np.ndarray
    J: np.ndarray
    truth: set[tuple[int, int]]
    n_truth: int
    schemes: list[tuple[int, str, str]]
    scope: tuple[set[int], set[int]] | None = None


def _metrics(tp: int, found: int, n_truth: int) -> tuple[float, float, float]:
    p = 100.0 * tp / found if found else 0.0
    r = 100.0 * tp / n_truth if n_truth else 0.0
    return p, r, (2 * p * r / (p + r) if p + r > 0 else 0.0)


def _grid_range(st: _GridState, lo: int, hi: int) -> list[list[GridRow]]:
    out = []
    cache: dict[tuple[int, str], ProfileMatrices] = {}
    for n, w, s in st.schemes[lo:hi]:
        if (n, w) not in cache:
            cache.clear()
            cache[(n, w)] = profile_matrices(st.kb1, st.kb2, n, w)
        scores = score_pairs(cache[(n, w)], st.I, st.J, s)
        acc_s, acc_i, acc_j = _greedy_arrays(scores, st.I, st.J)
        correct = np.fromiter(((i, j) in st.truth for i, j in zip(acc_i.tolist(), acc_j.tolist())),
                              dtype=bool, count=len(acc_i))
        cum_tp = np.concatenate([[0], np.cumsum(correct)])
        if st.scope is None:
            counted = np.ones(len(acc_i), dtype=bool)
        else:
            left, right = st.scope
            counted = np.fromiter((i in left or j in right for i, j in zip(acc_i.tolist(), acc_j.tolist())),
                                  dtype=bool, count=len(acc_i))
        cum_found = np.concatenate([[0], np.cumsum(counted)])
        rows = []
        for t in THRESHOLDS:
            above = int(np.count_nonzero(acc_s >= t))  # acc_s is non-increasing
            found = int(cum_found[above])
            tp = int(cum_tp[above])
            p, r, f = _metrics(tp, found, st.n_truth)
            rows.append(GridRow(n, w, s, t, found, tp, p, r, f))
        out.append(rows)
    return out


@dataclass
class GridResult:
    rows: list[GridRow]
    candidate_pairs: int

    @property
    def best(self) -> GridRow:
        # highest F1; ties resolved by grid order
        return max(self.rows, key=lambda r: r.f1)

    def write_csv(self, path) -> None:
        fields = list(asdict(self.rows[0]).keys()) if self.rows else []
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.DictWriter(f, fieldnames=fields)
            w.writeheader()
            for r in self.rows:
                d = asdict(r)
                for k in ("precision", "recall", "f1"):
                    d[k] = round(d[k], 2)
                w.writerow(d)


def grid_search(kb1: KnowledgeBase, kb2: KnowledgeBase, ground_truth: GroundTruth,
                blocks: BlockCollection | None = None, k: int = 2, purge_fraction: float = 0.01,
                workers: int = 1, partial_truth: bool = False) -> GridResult:
    """Evaluate all 420 baseline configurations and report each one's P/R/F1.

    ``partial_truth`` ignores matches with no end in the ground truth.
    """
    if blocks is None:
        blocks = build_blocks(kb1, kb2, top_k_name_attributes(kb1, k), top_k_name_attributes(kb2, k),
                              purge_fraction)
    I, J = candidate_pairs(blocks, len(kb1), len(kb2))
    truth = set(ground_truth.as_indices(kb1, kb2))
    schemes = scoring_schemes()
    scope = ({i for i, _ in truth}, {j for _, j in truth}) if partial_truth else None
    st = _GridState(kb1, kb2, I, J, truth, len(ground_truth), schemes, scope)
    parts = map_ranges(_grid_range, len(schemes), st, workers, chunks_per_worker=1)
    rows = list(itertools.chain.from_iterable(parts))
    return GridResult(rows, len(I))


def run_config(kb1: KnowledgeBase, kb2: KnowledgeBase, config: BslConfig,
               blocks: BlockCollection) -> list[tuple[str, str]]:
    """Matches of a single baseline configuration, as id pairs."""
    I, J = candidate_pairs(blocks, len(kb1), len(kb2))
    pm = profile_matrices(kb1, kb2, config.ngram_n, config.weighting)
    scores = score_pairs(pm, I, J, config.similarity)
    acc_s, acc_i, acc_j = _greedy_arrays(scores, I, J)
    keep = acc_s >= config.threshold
    return [(kb1.ids[i], kb2.ids[j]) for i, j in zip(acc_i[keep].tolist(), acc_j[keep].tolist())]
