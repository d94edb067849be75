"""Entity descriptions, knowledge bases and triple ingestion.

A knowledge base is built once from a stream of triples and is read-only
afterwards.  Entities are addressed internally by an integer position that
follows the lexicographic order of their URIs, so ordering by position is
the same as ordering by id.
"""
from __future__ import annotations

import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+")
_NTRIPLE_RE = re.compile(
    r'^\s*(<[^>]*>|_:\S+)\s+(<[^>]*>)\s+'
    r'(<[^>]*>|_:\S+|"(?:[^"\\]|\\.)*"(?:@[\w-]+|\^\^<[^>]*>)?)\s*\.\s*$'
)


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on every non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class EntityDescription:
    """A URI-identified set of attribute-value pairs.

    ``literals`` holds (attribute, text) pairs, ``relations`` holds
    (attribute, neighbor id) pairs whose neighbor is described in the same KB.
    """

    id: str
    kb_tag: int
    literals: list[tuple[str, str]] = field(default_factory=list)
    relations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def attributes(self) -> list[tuple[str, str]]:
        return self.literals + self.relations

    def relation_names(self) -> set[str]:
        return {p for p, _ in self.relations}

    def neighbors(self) -> set[str]:
        return {o for _, o in self.relations}


def tokens(e: EntityDescription) -> set[str]:
    out: set[str] = set()
    for _, value in e.literals:
        out.update(tokenize(value))
    return out


class KnowledgeBase:
    """Duplicate-free collection of entity descriptions with a token index.

    ``token_index`` maps every token to the sorted positions of the entities
    whose literal values contain it; ``ef_table`` is its entity frequency.
    """

    def __init__(self, descriptions: Iterable[EntityDescription], kb_tag: int = 1,
                 parse_errors: int = 0):
        self.kb_tag = kb_tag
        self.parse_errors = parse_errors
        by_id: dict[str, EntityDescription] = {}
        for d in descriptions:
            if d.id in by_id:
                raise ValueError(f"duplicate entity id {d.id!r} in KB{kb_tag}")
            by_id[d.id] = d
        self.ids: list[str] = sorted(by_id)
        self.index: dict[str, int] = {uri: i for i, uri in enumerate(self.ids)}
        self.descriptions: dict[str, EntityDescription] = {uri: by_id[uri] for uri in self.ids}
        self.entities: list[EntityDescription] = [by_id[uri] for uri in self.ids]

        # sorted token tuples per entity; the fixed order makes float sums reproducible
        self.entity_tokens: list[tuple[str, ...]] = [tuple(sorted(tokens(e))) for e in self.entities]
        postings: dict[str, list[int]] = defaultdict(list)
        for pos, toks in enumerate(self.entity_tokens):
            for t in toks:
                postings[t].append(pos)
        self.token_index: dict[str, list[int]] = dict(postings)
        self.ef_table: dict[str, int] = {t: len(p) for t, p in self.token_index.items()}

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[EntityDescription]:
        return iter(self.entities)

    def __contains__(self, uri: str) -> bool:
        return uri in self.index

    def __getitem__(self, uri: str) -> EntityDescription:
        return self.descriptions[uri]

    def __repr__(self) -> str:
        return f"KnowledgeBase(kb_tag={self.kb_tag}, entities={len(self)}, tokens={len(self.ef_table)})"

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[str, str, str, bool]], kb_tag: int = 1,
                     parse_errors: int = 0) -> "KnowledgeBase":
        """Build a KB from ``(subject, predicate, object, is_literal)`` tuples.

        An unquoted object becomes a relation only when it is itself a subject
        of this KB; otherwise it is kept as a literal.
        """
        triples = list(triples)
        subjects = {s for s, _, _, _ in triples}
        descs: dict[str, EntityDescription] = {s: EntityDescription(s, kb_tag) for s in subjects}
        dangling = 0
        for s, p, o, is_literal in triples:
            d = descs[s]
            if not is_literal and o in subjects:
                d.relations.append((p, o))
            else:
                if not is_literal:
                    dangling += 1
                d.literals.append((p, o))
        if dangling:
            logger.debug("KB%d: %d dangling references kept as literals", kb_tag, dangling)
        return cls(descs.values(), kb_tag=kb_tag, parse_errors=parse_errors)


def _strip_term(term: str) -> tuple[str, bool]:
    term = term.strip()
    if len(term) >= 2 and term[0] == '"':
        end = term.rfind('"')
        if end > 0:
            return _unescape(term[1:end]), True
    if term.startswith("<") and term.endswith(">"):
        return term[1:-1], False
    return term, False


def _unescape(s: str) -> str:
    if "\\" not in s:
        return s
    return s.replace('\\"', '"').replace("\\n", "\n").replace("\\t", "\t").replace("\\\\", "\\")


def parse_triple_line(line: str) -> tuple[str, str, str, bool] | None:
    """Parse one triple line; returns None for malformed lines.

    Tab-separated ``subject<TAB>predicate<TAB>object`` is the native format,
    with literal objects in double quotes. N-Triples lines are accepted too.
    """
    line = line.rstrip("\r\n")
    if not line.strip() or line.lstrip().startswith("#"):
        return None
    parts = line.split("\t")
    if len(parts) == 3:
        s, _ = _strip_term(parts[0])
        p, _ = _strip_term(parts[1])
        o, is_literal = _strip_term(parts[2])
        if s and p:
            return s, p, o, is_literal
        return None
    m = _NTRIPLE_RE.match(line)
    if m is None:
        return None
    s, _ = _strip_term(m.group(1))
    p, _ = _strip_term(m.group(2))
    obj = m.group(3)
    if obj.startswith('"'):
        # drop language tag / datatype suffix
        o, is_literal = _strip_term(obj[: obj.rfind('"') + 1])
    else:
        o, is_literal = _strip_term(obj)
    return s, p, o, is_literal


def parse_triples(stream: Iterable[str], kb_tag: int = 1) -> KnowledgeBase:
    """Read a KB from line-oriented triple text.

    Blank and comment lines are ignored; malformed lines are skipped and
    counted in ``KnowledgeBase.parse_errors``.
    """
    triples = []
    errors = 0
    for line in stream:
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        t = parse_triple_line(line)
        if t is None:
            errors += 1
            continue
        triples.append(t)
    if errors:
        logger.warning("KB%d: skipped %d malformed triple lines", kb_tag, errors)
    return KnowledgeBase.from_triples(triples, kb_tag=kb_tag, parse_errors=errors)


RDF_SUFFIXES = {".rdf": "xml", ".owl": "xml", ".xml": "xml", ".ttl": "turtle", ".n3": "n3", ".jsonld": "json-ld"}


def load_kb(path: str | Path, kb_tag: int = 1) -> KnowledgeBase:
    """Load a KB from tab-separated triples or N-Triples.

    RDF/XML, Turtle, N3 and JSON-LD files (by suffix) are read through
    ``rdflib``, installed with the ``rdf`` extra.
    """
    path = Path(path)
    fmt = RDF_SUFFIXES.get(path.suffix.lower())
    if fmt is not None:
        return _load_rdf(path, fmt, kb_tag)
    with open(path, encoding="utf-8") as f:
        return parse_triples(f, kb_tag=kb_tag)


def _load_rdf(path: Path, fmt: str, kb_tag: int) -> KnowledgeBase:
    try:
        import rdflib
    except ImportError as exc:
        raise RuntimeError(f"reading {path.suffix} files needs rdflib: pip install 'artifact[rdf]'") from exc
    g = rdflib.Graph()
    g.parse(str(path), format=fmt)

    def term(t) -> str:
        return f"_:{t}" if isinstance(t, rdflib.BNode) else str(t)

    triples = ((term(s), str(p), term(o), isinstance(o, rdflib.Literal)) for s, p, o in g)
    return KnowledgeBase.from_triples(sorted(triples), kb_tag=kb_tag)


def write_triples(kb: KnowledgeBase, path: str | Path) -> None:
    """Write ``kb`` in the tab-separated triple format read by :func:`load_kb`."""
    def q(s: str) -> str:
        s = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{s}"'

    with open(path, "w", encoding="utf-8") as f:
        for e in kb:
            for p, v in e.literals:
                f.write(f"{e.id}\t{p}\t{q(v)}\n")
            for p, o in e.relations:
                f.write(f"{e.id}\t{p}\t{o}\n")


class GroundTruth:
    """One-to-one set of matching (KB1 id, KB2 id) pairs."""

    def __init__(self, pairs: Iterable[tuple[str, str]]):
        self.pairs: set[tuple[str, str]] = set()
        seen1: set[str] = set()
        seen2: set[str] = set()
        for a, b in pairs:
            if (a, b) in self.pairs:
                continue
            if a in seen1 or b in seen2:
                raise ValueError(f"ground truth is not one-to-one at ({a!r}, {b!r})")
            seen1.add(a)
            seen2.add(b)
            self.pairs.add((a, b))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def as_indices(self, kb1: KnowledgeBase, kb2: KnowledgeBase) -> list[tuple[int, int]]:
        """Positions of the pairs whose both ends exist in the given KBs."""
        out = []
        for a, b in sorted(self.pairs):
            i, j = kb1.index.get(a), kb2.index.get(b)
            if i is not None and j is not None:
                out.append((i, j))
        return out


_ALIGN_NS = "{http://knowledgeweb.semanticweb.org/heterogeneity/alignment}"
_RDF_RESOURCE = "{http://www.w3.org/1999/02/22-rdf-syntax-ns#}resource"


def load_alignment(path: str | Path) -> GroundTruth:
    """Read an Alignment-format RDF/XML file; every ``Cell`` with a ``=``
    relation (or none) contributes its ``entity1``/``entity2`` pair."""
    import xml.etree.ElementTree as ET

    pairs = []
    for cell in ET.parse(path).getroot().iter(f"{_ALIGN_NS}Cell"):
        rel = cell.findtext(f"{_ALIGN_NS}relation", "=").strip()
        if rel != "=":
            continue
        e1, e2 = cell.find(f"{_ALIGN_NS}entity1"), cell.find(f"{_ALIGN_NS}entity2")
        if e1 is None or e2 is None:
            raise ValueError(f"{path}: Cell without entity1/entity2")
        pairs.append((e1.get(_RDF_RESOURCE) or (e1.text or "").strip(),
                      e2.get(_RDF_RESOURCE) or (e2.text or "").strip()))
    return GroundTruth(pairs)


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Tab-separated id pairs, or an alignment file for ``.rdf``/``.xml``."""
    if Path(path).suffix.lower() in (".rdf", ".xml"):
        return load_alignment(path)
    pairs = []
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{n}: expected 2 tab-separated ids")
            pairs.append((_strip_term(parts[0])[0], _strip_term(parts[1])[0]))
    return GroundTruth(pairs)


def write_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for a, b in gt:
            f.write(f"{a}\t{b}\n")


def token_weight(ef1: int, ef2: int) -> float:
    """Contribution of one shared token to the value similarity."""
    return 1.0 / math.log2(ef1 * ef2 + 1)


def value_sim(e_i: EntityDescription, e_j: EntityDescription,
              ef1: Mapping[str, int], ef2: Mapping[str, int]) -> float:
    """Shared-token similarity weighted by the inverse log of the EF product.

    ``e_i`` is looked up in ``ef1`` and ``e_j`` in ``ef2``. Tokens are summed in
    sorted order.
    """
    total = 0.0
    for t in sorted(tokens(e_i) & tokens(e_j)):
        total += token_weight(ef1[t], ef2[t])
    return total
