import csv
import json

import pytest

from kbresolve.cli import main
from kbresolve.kb import write_triples
from conftest import example_kbs


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--n-per-kb", "300", "--seed", "6", "--out", str(d)]) == 0
    return d


def inputs(d):
    return ["--kb1", str(d / "kb1.tsv"), "--kb2", str(d / "kb2.tsv"), "--truth", str(d / "truth.tsv")]


def test_synth_files(synth_dir):
    assert (synth_dir / "kb1.tsv").stat().st_size > 0
    assert len((synth_dir / "truth.tsv").read_text().splitlines()) == 240


def test_match_writes_outputs(synth_dir, tmp_path):
    out = tmp_path / "m"
    assert main(["match", *inputs(synth_dir), "--out", str(out), "--dump-graph"]) == 0
    for f in ("matches.tsv", "rejected.tsv", "timings.json", "report.json", "graph.tsv"):
        assert (out / f).is_file()
    report = json.loads((out / "report.json").read_text())
    assert report["evaluation"]["f1"] > 80
    assert report["config"]["K"] == 15
    rules = {line.split("\t")[2] for line in (out / "matches.tsv").read_text().splitlines()}
    assert rules <= {"R1", "R2", "R3"}


def test_example_without_truth(tmp_path):
    kb1, kb2 = example_kbs()
    write_triples(kb1, tmp_path / "a.tsv")
    write_triples(kb2, tmp_path / "b.tsv")
    out = tmp_path / "o"
    assert main(["match", "--kb1", str(tmp_path / "a.tsv"), "--kb2", str(tmp_path / "b.tsv"),
                 "--n", "2", "--purge-fraction", "1.0", "--out", str(out)]) == 0
    assert (out / "matches.tsv").read_text() == (
        "wd:Bray\tdb:Berkshire\tR2\nwd:JohnLakeA\tdb:JonnyLake\tR1\n"
        "wd:Restaurant1\tdb:Restaurant2\tR3\nwd:UK\tdb:United_Kingdom\tR1\n")


def test_flags_override_config_file(synth_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"kb1 = {synth_dir / 'kb1.tsv'}\nkb2 = {synth_dir / 'kb2.tsv'}\n"
                   f"truth = {synth_dir / 'truth.tsv'}\nK = 5\ntheta = 0.4\n")
    out = tmp_path / "o"
    assert main(["match", "--config", str(cfg), "--theta", "0.7", "--out", str(out)]) == 0
    conf = json.loads((out / "report.json").read_text())["config"]
    assert (conf["K"], conf["theta"]) == (5, 0.7)


def test_bsl_grid(synth_dir, tmp_path):
    out = tmp_path / "b"
    assert main(["bsl", *inputs(synth_dir), "--out", str(out)]) == 0
    with open(out / "bsl_grid.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 420
    best = json.loads((out / "bsl_report.json").read_text())["best"]
    assert best["f1"] == pytest.approx(max(float(r["f1"]) for r in rows), abs=0.01)


def test_blocks_stats(synth_dir, tmp_path):
    out = tmp_path / "k"
    assert main(["blocks", "stats", *inputs(synth_dir), "--out", str(out)]) == 0
    rep = json.loads((out / "blocks.json").read_text())
    assert set(rep) >= {"name_blocks", "token_blocks", "combined"}
    assert rep["combined"]["recall"] >= rep["token_blocks"]["recall"]


def test_ablate(synth_dir, tmp_path):
    out = tmp_path / "a"
    assert main(["ablate", *inputs(synth_dir), "--out", str(out)]) == 0
    reps = json.loads((out / "ablation.json").read_text())["reports"]
    assert set(reps) == {"full", "R1", "R2", "R3", "no_R4", "no_neighbors"}


def test_sweep_theta(synth_dir, tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", *inputs(synth_dir), "--param", "theta", "--out", str(out)]) == 0
    with open(out / "sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert [float(r["theta"]) for r in rows] == [0.3, 0.4, 0.5, 0.6, 0.7, 0.8]


def test_workers_give_identical_matches(synth_dir, tmp_path):
    for w in ("1", "3"):
        assert main(["match", *inputs(synth_dir), "--workers", w, "--out", str(tmp_path / w)]) == 0
    assert (tmp_path / "1" / "matches.tsv").read_bytes() == (tmp_path / "3" / "matches.tsv").read_bytes()


class TestExitCodes:
    def test_missing_input(self, tmp_path):
        assert main(["match", "--kb1", str(tmp_path / "x"), "--kb2", str(tmp_path / "y"),
                     "--out", str(tmp_path)]) == 3

    def test_missing_config(self, tmp_path):
        assert main(["match", "--config", str(tmp_path / "none.cfg")]) == 3

    def test_bad_config(self, tmp_path, synth_dir):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("this is not a config\n")
        assert main(["match", "--config", str(cfg), *inputs(synth_dir)]) == 4

    @pytest.mark.parametrize("flag", [["--theta", "1.5"], ["--big-k", "0"], ["--purge-fraction", "2"],
                                      ["--workers", "-1"]])
    def test_out_of_range(self, synth_dir, tmp_path, flag):
        assert main(["match", *inputs(synth_dir), *flag, "--out", str(tmp_path)]) == 5

    def test_usage_errors(self, synth_dir):
        with pytest.raises(SystemExit) as e:
            main(["bsl", "--kb1", str(synth_dir / "kb1.tsv"), "--kb2", str(synth_dir / "kb2.tsv")])
        assert e.value.code == 2
        with pytest.raises(SystemExit) as e:
            main(["frobnicate"])
        assert e.value.code == 2

    def test_synth_bad_size(self, tmp_path):
        assert main(["synth", "--n-per-kb", "0", "--out", str(tmp_path)]) == 5
