"""Plot-ready aggregates over classified studies."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from litmap.classifiers import ClassificationResult
from litmap.corpus import Corpus

UNDEFINED = None  # share of a year whose subset total is zero


@dataclass
class TrendTable:
    topics: list[str]
    years: list[int]
    cells: dict[tuple[str, int], int]

    def get(self, topic: str, year: int) -> int:
        return self.cells.get((topic, year), 0)

    def row(self, topic: str) -> list[int]:
        return [self.get(topic, y) for y in self.years]

    def column(self, year: int) -> list[int]:
        return [self.get(t, year) for t in self.topics]


def _year_range(years) -> list[int]:
    years = list(years)
    if not years:
        raise ValueError("year range must not be empty")
    return list(range(min(years), max(years) + 1))


def topic_year_counts(result: ClassificationResult, corpus: Corpus, years: Iterable[int],
                      topics: Iterable[str] | None = None) -> TrendTable:
    """cell(t, y) = number of papers assigned t and published in y.

    A paper with several topics counts once for each of them.
    """
    years = _year_range(years)
    lo, hi = years[0], years[-1]
    cells: dict[tuple[str, int], int] = {}
    seen_topics = set()
    for pid, assigned in result.assignments.items():
        year = corpus[pid].year
        for t in assigned:
            seen_topics.add(t)
            if lo <= year <= hi:
                cells[(t, year)] = cells.get((t, year), 0) + 1
    topic_list = sorted(seen_topics) if topics is None else list(topics)
    cells = {k: v for k, v in cells.items() if k[0] in set(topic_list)}
    return TrendTable(topic_list, years, cells)


def topic_citation_stats(result: ClassificationResult, corpus: Corpus) -> dict[str, tuple[float, float]]:
    """Mean and population standard deviation of citations per topic."""
    per_topic: dict[str, list[int]] = {}
    for pid, assigned in sorted(result.assignments.items()):
        for t in assigned:
            per_topic.setdefault(t, []).append(corpus[pid].citation_count)
    stats = {}
    for t in sorted(per_topic):
        values = per_topic[t]
        mean = math.fsum(values) / len(values)
        var = math.fsum((v - mean) ** 2 for v in values) / len(values)
        stats[t] = (mean, math.sqrt(var))
    return stats


def set_citation_stats(ids: Iterable[str], corpus: Corpus) -> tuple[float, float] | None:
    """Mean and population standard deviation over a whole study set."""
    values = [corpus[i].citation_count for i in ids]
    if not values:
        return None
    mean = math.fsum(values) / len(values)
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))


def topic_share(trend: TrendTable, topic_subset: Iterable[str]) -> dict[tuple[str, int], float | None]:
    """Percentage of each topic among the subset's publications, per year."""
    subset = list(topic_subset)
    if not subset:
        raise ValueError("topic subset must not be empty")
    shares = {}
    for y in trend.years:
        total = sum(trend.get(t, y) for t in subset)
        for t in subset:
            shares[(t, y)] = UNDEFINED if total == 0 else 100.0 * trend.get(t, y) / total
    return shares


def top_topics(trend: TrendTable, n: int = 10) -> list[str]:
    return sorted(trend.topics, key=lambda t: (-sum(trend.row(t)), t))[:n]


# -- export ------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trends_to_csv(table, topics=None, years=None) -> str:
    """CSV with one row per topic and one column per year.

    ``table`` is a TrendTable, a share map (topic, year) -> percentage, or a
    citation-stats map topic -> (mean, std).
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(table, TrendTable):
        w.writerow(["topic", *table.years])
        for t in table.topics:
            w.writerow([t, *table.row(t)])
    elif table and isinstance(next(iter(table)), tuple):
        topics = topics or list(dict.fromkeys(t for t, _ in table))
        years = years or sorted({y for _, y in table})
        w.writerow(["topic", *years])
        for t in topics:
            w.writerow([t, *(_fmt(table.get((t, y))) for y in years)])
    else:
        w.writerow(["topic", "mean", "std"])
        for t, (mean, std) in table.items():
            w.writerow([t, _fmt(float(mean)), _fmt(float(std))])
    return buf.getvalue()


def trends_to_json(table) -> str:
    if isinstance(table, TrendTable):
        data = {"years": table.years,
                "topics": {t: table.row(t) for t in table.topics}}
    elif table and isinstance(next(iter(table)), tuple):
        topics = list(dict.fromkeys(t for t, _ in table))
        years = sorted({y for _, y in table})
        data = {"years": years, "topics": {t: [table.get((t, y)) for y in years] for t in topics}}
    else:
        data = {"stats": {t: {"mean": m, "std": s} for t, (m, s) in table.items()}}
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def export_trends(table, path, format: str = "csv") -> None:
    if format == "csv":
        text = trends_to_csv(table)
    elif format == "json":
        text = trends_to_json(table)
    else:
        raise ValueError(f"unknown export format {format!r}")
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
