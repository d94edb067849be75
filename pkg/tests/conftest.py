import io

import pytest

from kbresolve.kb import parse_triples

# Two restaurants described by two KBs with different vocabularies. Token
# frequencies are chosen so that beta(John Lake A, Jonny Lake) = 0.2 + 0.2
# (tokens "j" and "lake", EF 1 x 31) and beta(Bray, Berkshire) = 1.0 + 0.2
# ("bray" EF 1 x 1, "windsor" EF 1 x 31).
KB1_TEXT = """\
wd:Restaurant1\twd:name\t"The Fat Duck"
wd:Restaurant1\twd:hasChef\twd:JohnLakeA
wd:Restaurant1\twd:territorial\twd:Bray
wd:Restaurant1\twd:inCountry\twd:UK
wd:Restaurant3\twd:name\t"Hinds Head"
wd:Restaurant3\twd:hasChef\twd:ChefX
wd:Restaurant3\twd:territorial\twd:Maidenhead
wd:JohnLakeA\twd:name\t"J. Lake"
wd:JohnLakeA\twd:label\t"John Lake A"
wd:ChefX\twd:name\t"Kevin Love"
wd:Bray\twd:name\t"Bray"
wd:Bray\twd:label\t"Windsor village"
wd:Maidenhead\twd:name\t"Maidenhead"
wd:UK\twd:name\t"United Kingdom"
"""

_KB2_CORE = """\
db:Restaurant2\tdb:name\t"Heston Blumenthal's"
db:Restaurant2\tdb:headChef\tdb:JonnyLake
db:Restaurant2\tdb:county\tdb:Berkshire
db:Restaurant2\tdb:country\tdb:United_Kingdom
db:Restaurant4\tdb:name\t"Riverside Grill"
db:Restaurant4\tdb:headChef\tdb:ChefY
db:Restaurant4\tdb:county\tdb:Surrey
db:JonnyLake\tdb:name\t"J. Lake"
db:JonnyLake\tdb:label\t"Jonny Lake"
db:ChefY\tdb:name\t"Marco Pierre"
db:Berkshire\tdb:name\t"Berkshire"
db:Berkshire\tdb:label\t"Bray Windsor county"
db:Surrey\tdb:name\t"Surrey"
db:United_Kingdom\tdb:name\t"United Kingdom"
"""
KB2_TEXT = _KB2_CORE + "".join(
    f'db:Filler{n:02d}\tdb:description\t"j lake windsor note{n}"\n' for n in range(30))


def example_kbs():
    kb1 = parse_triples(io.StringIO(KB1_TEXT), kb_tag=1)
    kb2 = parse_triples(io.StringIO(KB2_TEXT), kb_tag=2)
    return kb1, kb2


@pytest.fixture
def example():
    return example_kbs()


# --- acceptance summary --------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
