"""Turn the Fodors and Zagat restaurant tables into two RDF graphs (N-Triples).

Each restaurant keeps its name and phone as literals and links to a separate
address entity (street, city) and to a category entity shared by all
restaurants of that cuisine. The ground truth lists restaurant pairs only.

    python3 scripts/convert_fodors_zagat.py datasets/fodors_zagat
"""
import csv
import sys
from pathlib import Path


def nt_literal(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def convert(rows, prefix: str, ns: str) -> list[str]:
    lines = []
    categories = {}
    for r in rows:
        rest = f"<{prefix}restaurant/{r['id']}>"
        addr = f"<{prefix}address/{r['id']}>"
        cat = categories.setdefault(r["type"].strip(), f"<{prefix}category/{len(categories) + 1}>")
        lines += [
            f"{rest} <{ns}name> {nt_literal(r['name'].strip())} .",
            f"{rest} <{ns}phone_number> {nt_literal(r['phone'].strip())} .",
            f"{rest} <{ns}has_address> {addr} .",
            f"{rest} <{ns}has_category> {cat} .",
            f"{addr} <{ns}street> {nt_literal(r['addr'].strip())} .",
            f"{addr} <{ns}city> {nt_literal(r['city'].strip())} .",
        ]
    for name, uri in categories.items():
        lines.append(f"{uri} <{ns}category_name> {nt_literal(name)} .")
    return lines


def main(out_dir: str) -> None:
    out = Path(out_dir)
    raw = out / "raw"

    def read(name):
        with open(raw / name, encoding="latin-1", newline="") as f:
            return list(csv.DictReader(f))

    p1, p2 = "http://fodors.example.org/", "http://zagat.example.org/"
    (out / "kb1.nt").write_text("\n".join(convert(read("fodors.csv"), p1, p1 + "ont#")) + "\n", encoding="utf-8")
    # the second KB uses its own vocabulary, as in the OAEI restaurant task
    (out / "kb2.nt").write_text("\n".join(convert(read("zagats.csv"), p2, p2 + "schema/")) + "\n", encoding="utf-8")
    with open(out / "truth.tsv", "w", encoding="utf-8") as f:
        for r in read("matches_fodors_zagats.csv"):
            f.write(f"{p1}restaurant/{r['fodors_id']}\t{p2}restaurant/{r['zagats_id']}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "datasets/fodors_zagat")
