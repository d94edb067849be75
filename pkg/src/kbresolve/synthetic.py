"""Generator of paired knowledge bases with a planted one-to-one ground truth.

Three entity kinds are generated: places, persons (born in a place) and works
(created by a person, some located in a place). Each KB uses its own
attribute and relation names.

* strongly similar matches share rare tokens (value similarity >= 1);
* nearly similar matches (a fraction of the works) share only two
  mid-frequency title tokens, so their value similarity stays below 1; the
  same generic title is reused by a small group of works from different
  creators, leaving the neighbors as the decisive evidence;
* unmatched entities exist in one KB only;
* every description carries stop words, which block purging removes, and one
  random mid-frequency noise token.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .kb import EntityDescription, GroundTruth, KnowledgeBase

STOP_WORDS = (
    "the of and in to a is was for on as with by at from an it its this that "
    "which be are"
).split()

_SCHEMA = (
    {"name": "ex1:label", "text": "ex1:comment", "born": "ex1:bornIn", "creator": "ex1:creator",
     "located": "ex1:locatedIn", "prefix": "http://kb1.example.org/"},
    {"name": "ex2:name", "text": "ex2:abstract", "born": "ex2:birthPlace", "creator": "ex2:author",
     "located": "ex2:location", "prefix": "http://kb2.example.org/"},
)
_KINDS = ("place", "person", "work")
_SYLLABLES = [c + v for c in "bcdfghjklmnprstvz" for v in "aeiou"]


@dataclass(frozen=True)
class SyntheticConfig:
    n_per_kb: int = 2000
    match_fraction: float = 0.8
    nearly_similar_fraction: float = 0.6   # of matched works
    same_name_probability: float = 0.5     # of strongly similar matches
    title_group_size: int = 3              # nearly similar works sharing one title
    works_per_creator: float = 20.0        # creators are a subset of the persons
    place_share: float = 0.1
    person_share: float = 0.4
    seed: int = 0


@dataclass
class _Obj:
    kind: str
    nearly: bool
    rare: tuple[str, ...]
    medium: tuple[str, ...]
    born: int | None = None
    creator: int | None = None
    located: int | None = None


class _Words:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0

    def rare(self) -> str:
        # unique by construction: mixed-radix encoding of a counter
        self.counter += 1
        n, parts = self.counter, []
        while n:
            n, r = divmod(n, len(_SYLLABLES))
            parts.append(_SYLLABLES[r])
        return "".join(parts) + "x"


def generate(config: SyntheticConfig | None = None) -> tuple[KnowledgeBase, KnowledgeBase, GroundTruth]:
    cfg = config or SyntheticConfig()
    rng = random.Random(cfg.seed)
    words = _Words(rng)
    n = cfg.n_per_kb
    n_matched = round(cfg.match_fraction * n)
    n_only = n - n_matched
    pool = [f"m{words.rare()}" for _ in range(max(50, n // 5))]

    def counts(total: int) -> dict[str, int]:
        places = max(1, round(cfg.place_share * total))
        persons = max(1, round(cfg.person_share * total))
        return {"place": places, "person": persons, "work": max(0, total - places - persons)}

    titles: list[tuple[str, ...]] = []

    def generic_title() -> tuple[str, ...]:
        if not titles or rng.random() < 1.0 / cfg.title_group_size:
            titles.append(tuple(rng.sample(pool, 2)))
        return rng.choice(titles[-cfg.title_group_size:])

    objs: list[_Obj] = []
    # groups: 0 = matched, 1 = KB1 only, 2 = KB2 only
    group_members: list[dict[str, list[int]]] = []
    for g, total in enumerate((n_matched, n_only, n_only)):
        members: dict[str, list[int]] = {}
        for kind, cnt in counts(total).items():
            ids = []
            for _ in range(cnt):
                nearly = g == 0 and kind == "work" and rng.random() < cfg.nearly_similar_fraction
                rare = tuple(words.rare() for _ in range(2))
                medium = generic_title() if nearly else ()
                objs.append(_Obj(kind, nearly, rare, medium))
                ids.append(len(objs) - 1)
            members[kind] = ids
        group_members.append(members)

    # links stay inside a group, so matched objects have matched neighbors
    for members in group_members:
        places, persons = members["place"], members["person"]
        for o in members["person"]:
            objs[o].born = rng.choice(places)
        n_creators = min(len(persons), max(1, round(len(members["work"]) / cfg.works_per_creator)))
        creators = rng.sample(persons, n_creators) if persons else []
        for o in members["work"]:
            objs[o].creator = rng.choice(creators) if creators else None
            if rng.random() < 0.5:
                objs[o].located = rng.choice(places)

    in_kb = [group_members[0], group_members[1]], [group_members[0], group_members[2]]
    kbs = []
    uri_maps = []
    for side in (0, 1):
        sch = _SCHEMA[side]
        members = sorted(o for grp in in_kb[side] for ids in grp.values() for o in ids)
        order = members[:]
        rng.shuffle(order)
        uri = {o: f"{sch['prefix']}{objs[o].kind}/{pos:07d}" for pos, o in enumerate(order)}
        uri_maps.append(uri)
        descs = []
        for o in members:
            ob = objs[o]
            d = EntityDescription(uri[o], side + 1)
            d.literals.append((sch["name"], _name(ob, side, words, rng, cfg)))
            text = rng.sample(STOP_WORDS, 4) + [rng.choice(pool), words.rare()]
            rng.shuffle(text)
            d.literals.append((sch["text"], " ".join(text)))
            for rel, target in (("born", ob.born), ("creator", ob.creator), ("located", ob.located)):
                if target is not None:
                    d.relations.append((sch[rel], uri[target]))
            descs.append(d)
        kbs.append(KnowledgeBase(descs, kb_tag=side + 1))
    truth = GroundTruth((uri_maps[0][o], uri_maps[1][o])
                        for ids in group_members[0].values() for o in ids)
    return kbs[0], kbs[1], truth


def _name(ob: _Obj, side: int, words: _Words, rng: random.Random, cfg: SyntheticConfig) -> str:
    if ob.nearly:
        # only the two mid-frequency tokens are shared across KBs
        return " ".join((ob.medium[0], words.rare(), ob.medium[1]))
    full = " ".join(ob.rare)
    if side == 0:
        return full
    if rng.random() < cfg.same_name_probability:
        return full
    if rng.random() < 0.5:
        return f"{ob.rare[0][0]}. {ob.rare[1]}"
    return f"{ob.rare[1]} {ob.rare[0]} {words.rare()}"
