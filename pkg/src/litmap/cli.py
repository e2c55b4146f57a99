"""Command line entry point: ``litmap <command>``.

Every command writes its artifact next to a ``<artifact>.manifest.json``
recording the input digests and the effective settings. Settings come from
an INI file (``--config``); command flags override it and relative paths in
the file are taken from the file's directory.

Example config::

    [corpus]
    path = corpus.jsonl
    format = jsonl
    term_source = keywords_only

    [learn]
    seeds = software architecture
    threshold = 0.25

    [select]
    query = topic("software architecture")

    [classify]
    methods = dm, sim
    sim_threshold_t = 0.94

    [trends]
    years = 2005-2013

    [evaluate]
    gold = gold.json

    [run]
    out = out
    workers = 1
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import click

from litmap import __version__
from litmap import analytics, classifiers, corpus as corpus_mod, evaluation, expert_review
from litmap import klink, selection, synthetic, taxonomy

ARTIFACTS = {
    "ingest": "corpus.jsonl",
    "learn": "taxonomy.tsv",
    "review-export": "review_sheet.csv",
    "select": "studies.json",
    "trends": "trends.csv",
    "evaluate": "report.json",
}


class Settings:
    """Flag > config file > built-in default."""

    def __init__(self, path: str | None):
        self.parser = configparser.ConfigParser(interpolation=None)
        self.base = Path.cwd()
        if path:
            p = Path(path)
            if not p.is_file():
                raise click.UsageError(f"config file {path} not found")
            self.parser.read(p, encoding="utf-8")
            self.base = p.resolve().parent

    def get(self, section: str, key: str, flag=None, default=None):
        if flag is not None and flag != ():
            return flag
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return default

    def path(self, section: str, key: str, flag=None, required: bool = True) -> Path | None:
        if flag is not None:
            return Path(flag)
        if self.parser.has_option(section, key):
            return self.base / self.parser.get(section, key)
        if required:
            raise click.UsageError(f"missing --{key.replace('_', '-')} (or [{section}] {key} in the config)")
        return None

    @property
    def out_dir(self) -> Path:
        return self.base / self.get("run", "out", None, ".")

    def artifact(self, flag, name: str, section: str | None = None, key: str | None = None,
                 required: bool = True) -> Path | None:
        """Input path: the flag, then the config entry, then the earlier step's output."""
        if flag is not None:
            return Path(flag)
        if section and self.parser.has_option(section, key):
            return self.base / self.parser.get(section, key)
        candidate = self.out_dir / name
        if candidate.is_file() or required:
            if not candidate.is_file():
                raise click.UsageError(f"no {name} given and none found in {self.out_dir}")
            return candidate
        return None

    def section(self, name: str) -> dict[str, str]:
        return dict(self.parser.items(name)) if self.parser.has_section(name) else {}


def _coerce(cls, values: dict[str, str], skip=()):
    out = {}
    for f in dataclasses.fields(cls):
        if f.name in skip or f.name not in values:
            continue
        raw = values[f.name]
        if f.type in (bool, "bool"):
            out[f.name] = str(raw).strip().lower() in ("1", "true", "yes", "on")
        elif f.type in (int, "int"):
            out[f.name] = int(raw)
        else:
            out[f.name] = float(raw)
    return out


def _split(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [v for item in value for v in _split(item)]
    return [v.strip() for v in str(value).replace(";", ",").split(",") if v.strip()]


def _years(value: str) -> list[int]:
    lo, _, hi = str(value).partition("-")
    return list(range(int(lo), int(hi or lo) + 1))


# -- manifests -----------------------------------------------------------------

def _digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _rel(path: Path, start: Path) -> str:
    return os.path.relpath(Path(path).resolve(), start.resolve()).replace(os.sep, "/")


def write_manifest(command: str, output: Path, inputs: dict, config: dict) -> None:
    output = Path(output)
    here = output.parent
    manifest = {
        "tool": "litmap",
        "version": __version__,
        "command": command,
        "inputs": {name: {"path": _rel(p, here), "sha256": _digest(p)}
                   for name, p in sorted(inputs.items()) if p is not None},
        "config": config,
        "output": {"path": output.name, "sha256": _digest(output)},
    }
    Path(f"{output}.manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path


def _fail(command: str, exc: Exception) -> None:
    record = {"command": command, "error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(record, sort_keys=True), err=True)
    sys.exit(1)


def _guarded(fn):
    """Turn module errors into a JSON error record and exit status 1."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, click.exceptions.Exit, SystemExit):
            raise
        except (ValueError, KeyError, OSError) as exc:
            _fail(click.get_current_context().info_name, exc)
    return wrapper


# -- steps (shared by the commands and ``pipeline``) --------------------------------

def step_ingest(source: Path, fmt: str, out: Path) -> corpus_mod.Corpus:
    corpus = corpus_mod.ingest_corpus(source, fmt)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    corpus.write_jsonl(out)
    write_manifest("ingest", out, {"source": source},
                   {"format": fmt, "papers": len(corpus), "skipped": corpus.skipped,
                    "warnings": corpus.warnings})
    return corpus


def _load_corpus(path: Path) -> corpus_mod.Corpus:
    return corpus_mod.ingest_corpus(path, "csv" if Path(path).suffix == ".csv" else "jsonl")


def step_learn(corpus_path: Path, seeds: list[str], params: klink.MetricParams, term_source: str,
               out: Path, constraints_path: Path | None = None, stoplist_path: Path | None = None,
               reuse: Path | None = None) -> taxonomy.Taxonomy:
    corpus = _load_corpus(corpus_path)
    constraints = taxonomy.load_constraints(constraints_path) if constraints_path else []
    if reuse is not None:
        prior = taxonomy.deserialize(reuse)
        constraints = sorted(set(constraints) | set(prior.constraints))
    stoplist = klink.load_stoplist(stoplist_path) if stoplist_path else []
    index = corpus_mod.build_index(corpus, term_source, params.workers)
    tax = klink.run_klink(index, seeds, params, constraints, stoplist)
    _write(out, taxonomy.dumps(tax))
    write_manifest("learn", out, {"corpus": corpus_path, "constraints": constraints_path,
                                  "stoplist": stoplist_path, "reuse_taxonomy": reuse},
                   {"seeds": sorted(seeds), "term_source": term_source, "params": params.snapshot()})
    return tax


def step_review_export(tax_path: Path, corpus_path: Path, root: str, top_terms: int,
                       query: str | None, out: Path, word_boundary: bool = False) -> expert_review.ReviewSheet:
    tax = taxonomy.deserialize(tax_path)
    corpus = _load_corpus(corpus_path)
    restrict = selection.select_studies(corpus, tax, query).paper_ids if query else None
    sheet = expert_review.export_sheet(tax, corpus, corpus_mod.normalize_term(root), top_terms,
                                       restrict, word_boundary)
    _write(out, sheet.dumps())
    write_manifest("review-export", out, {"taxonomy": tax_path, "corpus": corpus_path},
                   {"root": root, "top_terms": top_terms, "query": query or "",
                    "word_boundary": word_boundary})
    return sheet


def step_select(corpus_path: Path, tax_path: Path | None, query: str, venues: Path | None,
                name: str, out: Path, word_boundary: bool = False) -> selection.StudySet:
    corpus = _load_corpus(corpus_path)
    tax = taxonomy.deserialize(tax_path) if tax_path else None
    text = query
    if venues is not None:
        clause = selection.venue_clause(selection.load_venue_list(venues))
        text = f"({query}) AND {clause}" if query else clause
    if not text:
        raise click.UsageError("select needs --query or --venues")
    studies = selection.select_studies(corpus, tax, text, name, word_boundary)
    _write(out, json.dumps(studies.to_json(), indent=2, ensure_ascii=False) + "\n")
    write_manifest("select", out, {"corpus": corpus_path, "taxonomy": tax_path, "venues": venues},
                   {"query": str(selection.parse_query(text)), "name": name,
                    "word_boundary": word_boundary, "selected": len(studies)})
    return studies


def step_classify(corpus_path: Path, tax_path: Path, studies_path: Path | None, method: str,
                  config: classifiers.ClassifierConfig, out: Path, workers: int = 1,
                  idf_path: Path | None = None, lda_path: Path | None = None) -> classifiers.ClassificationResult:
    corpus = _load_corpus(corpus_path)
    tax = taxonomy.deserialize(tax_path)
    ids = selection.StudySet.load(studies_path).paper_ids if studies_path else [p.id for p in corpus]
    idf = lda = None
    if method == "tfidf":
        idf = classifiers.IdfModel.load(idf_path) if idf_path else classifiers.build_idf(corpus)
    if method == "lda":
        if lda_path is None:
            raise click.UsageError("the lda classifier needs --lda-model")
        lda = classifiers.LdaModel.load(lda_path)
    result = classifiers.classify_set(ids, corpus, method, tax, config, idf, lda, workers)
    _write(out, result.dumps())
    write_manifest("classify", out, {"corpus": corpus_path, "taxonomy": tax_path, "studies": studies_path,
                                     "idf_model": idf_path, "lda_model": lda_path},
                   {"method": method, **dataclasses.asdict(config)})
    return result


def step_trends(corpus_path: Path, result_path: Path, years: list[int], share_topics: list[str],
                fmt: str, out: Path) -> analytics.TrendTable:
    corpus = _load_corpus(corpus_path)
    result = classifiers.ClassificationResult.load(result_path)
    table = analytics.topic_year_counts(result, corpus, years)
    data = analytics.topic_share(table, share_topics) if share_topics else table
    text = analytics.trends_to_csv(data) if fmt == "csv" else analytics.trends_to_json(data)
    _write(out, text)
    write_manifest("trends", out, {"corpus": corpus_path, "classification": result_path},
                   {"years": [years[0], years[-1]], "share_topics": share_topics, "format": fmt})
    return table


def step_evaluate(annotations: list[Path], gold_path: Path | None, results: list[Path], out: Path) -> dict:
    report: dict = {}
    if len(annotations) >= 2:
        sets = [evaluation.AnnotationSet.load_csv(p) for p in annotations]
        report["annotators"] = evaluation.annotation_report(sets)
    elif annotations:
        raise click.UsageError("agreement statistics need at least two annotation files")
    if results:
        if gold_path is None:
            raise click.UsageError("scoring classifications needs --gold")
        gold = evaluation.load_gold(gold_path)
        loaded = [classifiers.ClassificationResult.load(p) for p in results]
        names = [r.classifier for r in loaded]
        if len(set(names)) != len(names):
            names = [Path(p).stem for p in results]
        preds = {n: {k: set(v) for k, v in r.assignments.items()} for n, r in zip(names, loaded)}
        # score only the studies every classifier saw
        scored = set(gold).intersection(*(set(p) for p in preds.values()))
        if not scored:
            raise evaluation.EvaluationError("no gold item was classified")
        gold = {k: v for k, v in gold.items() if k in scored}
        report["classifiers"] = evaluation.classifier_report(preds, gold)
    if not report:
        raise click.UsageError("nothing to evaluate: pass annotation files or classifications")
    _write(out, evaluation.Report(report).dumps())
    inputs = {f"annotation_{i}": p for i, p in enumerate(annotations)}
    inputs.update({f"classification_{i}": p for i, p in enumerate(results)})
    inputs["gold"] = gold_path
    write_manifest("evaluate", out, inputs, {})
    return report


# -- click commands ------------------------------------------------------------------

@click.group()
@click.version_option(__version__, prog_name="litmap")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="INI settings file.")
@click.option("--workers", type=click.IntRange(min=1), envvar="LITMAP_WORKERS",
              help="Worker threads (also LITMAP_WORKERS). Results do not depend on it.")
@click.pass_context
def main(ctx, config_path, workers):
    """Ontology-driven systematic mapping toolkit."""
    settings = Settings(config_path)
    ctx.obj = settings
    settings.workers = int(settings.get("run", "workers", workers, 1))


def _params(s: Settings, overrides: dict) -> klink.MetricParams:
    values = s.section("learn")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return klink.MetricParams(**_coerce(klink.MetricParams, values, skip=("workers",)), workers=s.workers)


def _clf_config(s: Settings, word_boundary=None) -> classifiers.ClassifierConfig:
    values = s.section("classify")
    if word_boundary is not None:
        values["word_boundary"] = str(word_boundary)
    return classifiers.ClassifierConfig(**_coerce(classifiers.ClassifierConfig, values))


@main.command()
@click.option("--input", "source", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]))
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def ingest(s: Settings, source, fmt, out):
    """Validate and normalize a raw corpus file."""
    src = s.path("corpus", "path", source)
    fmt = s.get("corpus", "format", fmt, "csv" if src.suffix == ".csv" else "jsonl")
    out = Path(out or s.out_dir / ARTIFACTS["ingest"])
    corpus = step_ingest(src, fmt, out)
    click.echo(f"{len(corpus)} papers, {corpus.skipped} skipped -> {out}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False))
@click.option("--seed", "seeds", multiple=True, help="Seed keyword (repeatable).")
@click.option("--term-source", type=click.Choice(corpus_mod.TERM_SOURCES))
@click.option("--constraints", type=click.Path(dir_okay=False), help="Constraint file from review-apply.")
@click.option("--stoplist", type=click.Path(dir_okay=False))
@click.option("--reuse-taxonomy", type=click.Path(dir_okay=False),
              help="Carry over the constraints stored in an earlier taxonomy.")
@click.option("--threshold", type=float)
@click.option("--iteration-cap", type=int)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def learn(s: Settings, corpus_path, seeds, term_source, constraints, stoplist, reuse_taxonomy,
          threshold, iteration_cap, out):
    """Learn a topic taxonomy from the corpus keywords."""
    seeds = _split(s.get("learn", "seeds", seeds or None))
    if not seeds:
        raise click.UsageError("at least one --seed is required")
    params = _params(s, {"threshold": threshold, "iteration_cap": iteration_cap})
    out = Path(out or s.out_dir / ARTIFACTS["learn"])
    tax = step_learn(s.artifact(corpus_path, ARTIFACTS["ingest"]), seeds, params,
                     s.get("corpus", "term_source", term_source, corpus_mod.KEYWORDS_ONLY), out,
                     s.path("learn", "constraints", constraints, required=False),
                     s.path("learn", "stoplist", stoplist, required=False),
                     Path(reuse_taxonomy) if reuse_taxonomy else None)
    click.echo(f"{len(tax.topics)} topics, {len(tax.relations)} relations -> {out}")


@main.command("review-export")
@click.option("--taxonomy", "tax_path", type=click.Path(dir_okay=False))
@click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False))
@click.option("--root")
@click.option("--top-terms", type=int)
@click.option("--query", help="Restrict the popular-terms list to papers matching this query.")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def review_export(s: Settings, tax_path, corpus_path, root, top_terms, query, out):
    """Write the review sheet for one branch of the taxonomy."""
    out = Path(out or s.out_dir / ARTIFACTS["review-export"])
    root = s.get("review", "root", root) or _split(s.get("learn", "seeds"))[0]
    sheet = step_review_export(s.artifact(tax_path, ARTIFACTS["learn"], "review", "taxonomy"), s.artifact(corpus_path, ARTIFACTS["ingest"]),
                               root, int(s.get("review", "top_terms", top_terms, 500)),
                               s.get("review", "query", query), out)
    click.echo(f"{len(sheet.rows)} topics -> {out}")


@main.command("review-apply")
@click.option("--taxonomy", "tax_path", type=click.Path(dir_okay=False), required=True)
@click.option("--sheet", "sheet_path", type=click.Path(dir_okay=False), required=True,
              help="The sheet as exported.")
@click.option("--feedback", multiple=True, required=True, type=click.Path(dir_okay=False),
              help="One annotated sheet per expert.")
@click.option("--quorum", type=int)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--constraints-out", type=click.Path(dir_okay=False), required=True)
@click.pass_obj
@_guarded
def review_apply(s: Settings, tax_path, sheet_path, feedback, quorum, out, constraints_out):
    """Merge expert sheets by majority and apply the edits."""
    original = expert_review.ReviewSheet.load(sheet_path)
    ops = [expert_review.import_feedback(f, original) for f in sorted(feedback)]
    merged = expert_review.merge_feedback(ops, quorum)
    tax, added = expert_review.apply_feedback(taxonomy.deserialize(tax_path), merged)
    out, constraints_out = Path(out), Path(constraints_out)
    _write(out, taxonomy.dumps(tax))
    _write(constraints_out, taxonomy.dump_constraints(tax.constraints))
    inputs = {"taxonomy": Path(tax_path), "sheet": Path(sheet_path)}
    inputs.update({f"feedback_{i}": Path(f) for i, f in enumerate(sorted(feedback))})
    config = {"quorum": quorum, "ops": [str(o) for o in merged.ops], "warnings": merged.warnings}
    write_manifest("review-apply", out, inputs, config)
    write_manifest("review-apply", constraints_out, inputs, config)
    for w in merged.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"{len(merged.ops)} edits applied, {len(added)} new constraints -> {out}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False))
@click.option("--taxonomy", "tax_path", type=click.Path(dir_okay=False))
@click.option("--query")
@click.option("--venues", type=click.Path(dir_okay=False), help="Venue list, one per line.")
@click.option("--name")
@click.option("--word-boundary/--substring", default=None)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def select(s: Settings, corpus_path, tax_path, query, venues, name, word_boundary, out):
    """Select the primary studies matching a query."""
    out = Path(out or s.out_dir / ARTIFACTS["select"])
    wb = _clf_config(s, word_boundary).word_boundary
    studies = step_select(s.artifact(corpus_path, ARTIFACTS["ingest"]), s.artifact(tax_path, ARTIFACTS["learn"], "select", "taxonomy", False),
                          s.get("select", "query", query), s.path("select", "venues", venues, False),
                          s.get("select", "name", name, "studies"), out, wb)
    click.echo(f"{len(studies)} studies -> {out}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False))
@click.option("--taxonomy", "tax_path", type=click.Path(dir_okay=False))
@click.option("--studies", type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(classifiers.METHODS), required=True)
@click.option("--idf-model", type=click.Path(dir_okay=False))
@click.option("--lda-model", type=click.Path(dir_okay=False))
@click.option("--word-boundary/--substring", default=None)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def classify(s: Settings, corpus_path, tax_path, studies, method, idf_model, lda_model, word_boundary, out):
    """Assign taxonomy topics to the selected studies."""
    out = Path(out or s.out_dir / f"classification_{method}.json")
    result = step_classify(s.artifact(corpus_path, ARTIFACTS["ingest"]), s.artifact(tax_path, ARTIFACTS["learn"], "classify", "taxonomy"),
                           s.artifact(studies, ARTIFACTS["select"], "classify", "studies", False), method,
                           _clf_config(s, word_boundary), out, s.workers,
                           s.path("classify", "idf_model", idf_model, False),
                           s.path("classify", "lda_model", lda_model, False))
    click.echo(f"{len(result.assignments)} studies classified -> {out}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False))
@click.option("--classification", type=click.Path(dir_okay=False))
@click.option("--years", help="Range such as 2005-2013.")
@click.option("--share", "share_topics", multiple=True, help="Report shares among these topics.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]))
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def trends(s: Settings, corpus_path, classification, years, share_topics, fmt, out):
    """Count papers per topic and year."""
    fmt = s.get("trends", "format", fmt, "csv")
    out = Path(out or s.out_dir / f"trends.{fmt}")
    years = s.get("trends", "years", years)
    if not years:
        raise click.UsageError("--years is required")
    table = step_trends(s.artifact(corpus_path, ARTIFACTS["ingest"]), s.artifact(classification, "classification_dm.json", "trends", "classification"),
                        _years(years), _split(s.get("trends", "share", share_topics or None)), fmt, out)
    click.echo(f"{len(table.topics)} topics x {len(table.years)} years -> {out}")


@main.command()
@click.option("--annotations", multiple=True, type=click.Path(dir_okay=False),
              help="Annotation CSV (item_id,label), one per annotator.")
@click.option("--gold", type=click.Path(dir_okay=False))
@click.option("--classification", multiple=True, type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def evaluate(s: Settings, annotations, gold, classification, out):
    """Agreement statistics and classifier scores as a JSON report."""
    out = Path(out or s.out_dir / ARTIFACTS["evaluate"])
    step_evaluate([Path(a) for a in annotations], s.path("evaluate", "gold", gold, False),
                  [Path(c) for c in classification], out)
    click.echo(f"report -> {out}")


@main.command()
@click.option("--out", "out_dir", type=click.Path(file_okay=False))
@click.pass_obj
@_guarded
def pipeline(s: Settings, out_dir):
    """Run every step from the config file into one output directory."""
    out = Path(out_dir) if out_dir else s.base / s.get("run", "out", None, "out")
    src = s.path("corpus", "path")
    fmt = s.get("corpus", "format", None, "csv" if src.suffix == ".csv" else "jsonl")
    corpus_path = out / ARTIFACTS["ingest"]
    step_ingest(src, fmt, corpus_path)

    seeds = _split(s.get("learn", "seeds"))
    if not seeds:
        raise click.UsageError("[learn] seeds is required")
    tax_path = out / ARTIFACTS["learn"]
    step_learn(corpus_path, seeds, _params(s, {}),
               s.get("corpus", "term_source", None, corpus_mod.KEYWORDS_ONLY), tax_path,
               s.path("learn", "constraints", required=False), s.path("learn", "stoplist", required=False))

    root = corpus_mod.normalize_term(s.get("review", "root", None, seeds[0]))
    step_review_export(tax_path, corpus_path, root, int(s.get("review", "top_terms", None, 500)),
                       s.get("review", "query"), out / ARTIFACTS["review-export"])

    config = _clf_config(s)
    studies_path = out / ARTIFACTS["select"]
    step_select(corpus_path, tax_path, s.get("select", "query", None, f'topic("{root}")'),
                s.path("select", "venues", required=False), s.get("select", "name", None, "studies"),
                studies_path, config.word_boundary)

    methods = _split(s.get("classify", "methods", None, "dm"))
    bad = [m for m in methods if m not in classifiers.METHODS]
    if bad:
        raise click.UsageError(f"unknown classifier {bad[0]!r}; choose from {', '.join(classifiers.METHODS)}")
    results = []
    for m in methods:
        path = out / f"classification_{m}.json"
        step_classify(corpus_path, tax_path, studies_path, m, config, path, s.workers,
                      s.path("classify", "idf_model", required=False),
                      s.path("classify", "lda_model", required=False))
        results.append(path)

    years = _years(s.get("trends", "years", None, "2005-2013"))
    step_trends(corpus_path, results[0], years, _split(s.get("trends", "share")), "csv",
                out / ARTIFACTS["trends"])

    gold = s.path("evaluate", "gold", required=False)
    annotations = [s.base / a for a in _split(s.get("evaluate", "annotations"))]
    if gold is not None or len(annotations) >= 2:
        step_evaluate(annotations, gold, results if gold is not None else [], out / ARTIFACTS["evaluate"])
    click.echo(f"pipeline finished -> {out}")


@main.command("make-fixture")
@click.argument("directory", type=click.Path(file_okay=False))
@click.option("--papers", default=300, show_default=True)
@click.option("--seed", default=11, show_default=True)
@_guarded
def make_fixture(directory, papers, seed):
    """Write a synthetic corpus, gold standard, venue list and config."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    tax = taxonomy.subbranch(synthetic.se_taxonomy(), synthetic.SA_ROOT)
    lc = synthetic.labelled_corpus(tax, papers, seed)
    lc.corpus.write_jsonl(d / "corpus.jsonl")
    _write(d / "gold.json", json.dumps({k: sorted(v) for k, v in sorted(lc.gold.items())}, indent=1) + "\n")
    _write(d / "venues.txt", "\n".join(synthetic.MAIN_VENUES) + "\n")
    _write(d / "taxonomy.tsv", taxonomy.dumps(tax))
    _write(d / "config.ini", FIXTURE_CONFIG)
    click.echo(f"fixture with {papers} papers -> {d}")


FIXTURE_CONFIG = """\
[corpus]
path = corpus.jsonl
format = jsonl
term_source = keywords_only

[learn]
seeds = software architecture
min_df = 3

[review]
root = software architecture
top_terms = 50

[select]
query = topic("software architecture")
name = dsa

[classify]
methods = dm, sim

[trends]
years = 2005-2013

[evaluate]
gold = gold.json

[run]
out = out
"""


if __name__ == "__main__":
    main()
