import json
import os
import subprocess
import sys
from pathlib import Path

import pytest
from click.testing import CliRunner

from litmap import expert_review, taxonomy
from litmap.cli import main


def run(*args, env=None):
    result = CliRunner().invoke(main, [str(a) for a in args], env=env)
    return result


def snapshot(directory: Path) -> dict[str, bytes]:
    return {str(p.relative_to(directory)): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fx")
    r = run("make-fixture", d, "--papers", 150)
    assert r.exit_code == 0, r.output
    return d


def test_pipeline_writes_artifacts(fixture_dir, tmp_path):
    r = run("--config", fixture_dir / "config.ini", "pipeline", "--out", tmp_path / "o")
    assert r.exit_code == 0, r.output
    names = set(snapshot(tmp_path / "o"))
    for a in ("corpus.jsonl", "taxonomy.tsv", "review_sheet.csv", "studies.json", "trends.csv", "report.json",
              "classification_dm.json", "classification_sim.json"):
        assert a in names and f"{a}.manifest.json" in names
    manifest = json.loads((tmp_path / "o" / "taxonomy.tsv.manifest.json").read_text())
    assert manifest["command"] == "learn"
    assert not Path(manifest["inputs"]["corpus"]["path"]).is_absolute()
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert set(report["classifiers"]["scores"]) == {"dm", "sim"}


def test_pipeline_deterministic_across_workers(fixture_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("--workers", 1, "--config", fixture_dir / "config.ini", "pipeline", "--out", a).exit_code == 0
    assert run("--config", fixture_dir / "config.ini", "pipeline", "--out", b,
               env={"LITMAP_WORKERS": "8"}).exit_code == 0
    assert snapshot(a) == snapshot(b)


def test_unknown_classifier_is_usage_error(fixture_dir, tmp_path):
    r = run("classify", "--corpus", fixture_dir / "corpus.jsonl", "--taxonomy", fixture_dir / "taxonomy.tsv",
            "--method", "svm", "--out", tmp_path / "c.json")
    assert r.exit_code == 2
    assert "svm" in r.output


def test_missing_input_reports_json(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "litmap", "ingest", "--input", str(tmp_path / "nope.jsonl"),
                           "--format", "jsonl", "--out", str(tmp_path / "c.jsonl")],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    record = json.loads(proc.stderr.strip().splitlines()[-1])
    assert record["command"] == "ingest" and "nope.jsonl" in record["message"]


def test_flag_overrides_config(fixture_dir, tmp_path):
    out = tmp_path / "t.tsv"
    r = run("--config", fixture_dir / "config.ini", "learn", "--corpus", fixture_dir / "corpus.jsonl",
            "--threshold", "0.99", "--out", out)
    assert r.exit_code == 0, r.output
    manifest = json.loads(Path(f"{out}.manifest.json").read_text())
    assert manifest["config"]["params"]["threshold"] == 0.99
    assert manifest["config"]["params"]["min_df"] == 3


def test_review_loop_commands(fixture_dir, tmp_path):
    tax_path = fixture_dir / "taxonomy.tsv"
    sheet_path = tmp_path / "sheet.csv"
    r = run("review-export", "--taxonomy", tax_path, "--corpus", fixture_dir / "corpus.jsonl",
            "--root", "software architecture", "--out", sheet_path)
    assert r.exit_code == 0, r.output
    sheet = expert_review.ReviewSheet.load(sheet_path)
    victim = sheet.rows[-1].topic_id
    edited = expert_review.ReviewSheet(
        [expert_review.SheetRow(x.depth, x.topic_id, x.labels, x.paper_count,
                                "DELETE" if x.topic_id == victim else "") for x in sheet.rows],
        sheet.popular_terms)
    for name in ("e1.csv", "e2.csv"):
        edited.save(tmp_path / name)
    sheet.save(tmp_path / "e3.csv")
    r = run("review-apply", "--taxonomy", tax_path, "--sheet", sheet_path,
            "--feedback", tmp_path / "e1.csv", "--feedback", tmp_path / "e2.csv", "--feedback", tmp_path / "e3.csv",
            "--out", tmp_path / "new.tsv", "--constraints-out", tmp_path / "c.tsv")
    assert r.exit_code == 0, r.output
    assert victim not in taxonomy.deserialize(tmp_path / "new.tsv").topics
    cons = taxonomy.load_constraints(tmp_path / "c.tsv")
    assert cons and all(c.kind == taxonomy.MUST_UNRELATED for c in cons)

    r = run("--config", fixture_dir / "config.ini", "learn", "--corpus", fixture_dir / "corpus.jsonl",
            "--constraints", tmp_path / "c.tsv", "--out", tmp_path / "relearnt.tsv")
    assert r.exit_code == 0, r.output
    relearnt = taxonomy.deserialize(tmp_path / "relearnt.tsv")
    for c in cons:
        assert not any({rel.source, rel.target} == {c.a, c.b} for rel in relearnt.relations)


def test_version():
    assert run("--version").exit_code == 0
