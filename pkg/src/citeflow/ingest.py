"""Corpus loading, reference-count filtering, and empirical statistics.

Input format: a papers CSV with header ``id,year,field,subfield`` (field
one of cs/math/physics/other, unknown strings coerced to other) and an
edges CSV with header ``src,dst`` over the same external ids. Dense paper
ids are assigned in stable year order so that any year prefix of the
corpus is a dense-id prefix too.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from citeflow.graph import Field, REPORTABLE_FIELDS

logger = logging.getLogger(__name__)

PAPERS_HEADER = ["id", "year", "field", "subfield"]
EDGES_HEADER = ["src", "dst"]

FIELD_LABELS = {"cs": Field.CS, "math": Field.MA, "physics": Field.PHY, "other": Field.OTHER}
LABEL_OF_FIELD = {Field.CS: "cs", Field.MA: "math", Field.PHY: "physics", Field.OTHER: "other"}


class CorpusFormatError(Exception):
    """Malformed input row; the message names the offending line."""


class StatsError(Exception):
    """Statistics requested over an empty or unusable corpus slice."""


@dataclass(frozen=True)
class CorpusPaper:
    ext_id: str
    year: int
    field: Field
    subfield: str = ""


@dataclass
class Corpus:
    """Parsed corpus with dense ids assigned in stable year order."""

    papers: list[CorpusPaper]
    edges: list[tuple[int, int]]  # dense (src, dst)
    id_map: dict[str, int]
    dropped_edges: int = 0
    unknown_fields: int = 0

    @property
    def n_papers(self) -> int:
        return len(self.papers)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def out_degrees(self) -> list[int]:
        degs = [0] * len(self.papers)
        for src, _ in self.edges:
            degs[src] += 1
        return degs


@dataclass(frozen=True)
class EmpiricalStats:
    """Warm-up statistics that drive the growth models."""

    arrivals: dict[tuple[int, Field], int]
    dest_field_dist: dict[Field, dict[Field, float]]
    top_cited: dict[Field, list[int]]
    mean_out_degree: float


def _open_source(source: str | Path | IO[str]) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def _read_rows(source, expected_header: list[str], what: str):
    stream, owned = _open_source(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError(f"{what} file is empty, expected header "
                                    f"{','.join(expected_header)}") from None
        if [h.strip().lower() for h in header] != expected_header:
            raise CorpusFormatError(
                f"{what} line 1: expected header {','.join(expected_header)}, "
                f"got {','.join(header)}"
            )
        for row in reader:
            if not row:
                continue
            yield reader.line_num, row
    finally:
        if owned:
            stream.close()


def load_corpus(papers_source, edges_source) -> Corpus:
    """Parse papers and edges; drop unresolvable/self/duplicate edges, counted.

    Unknown field labels map to OTHER. Malformed rows (wrong column count,
    non-numeric year, duplicate external id) abort with the line number.
    """
    raw_papers: list[CorpusPaper] = []
    seen_ext: set[str] = set()
    unknown_fields = 0
    for line_num, row in _read_rows(papers_source, PAPERS_HEADER, "papers"):
        if len(row) != 4:
            raise CorpusFormatError(
                f"papers line {line_num}: expected 4 columns, got {len(row)}"
            )
        ext_id, year_s, field_s, subfield = (c.strip() for c in row)
        if not ext_id:
            raise CorpusFormatError(f"papers line {line_num}: empty id")
        if ext_id in seen_ext:
            raise CorpusFormatError(f"papers line {line_num}: duplicate id {ext_id!r}")
        seen_ext.add(ext_id)
        try:
            year = int(year_s)
        except ValueError:
            raise CorpusFormatError(
                f"papers line {line_num}: non-numeric year {year_s!r}"
            ) from None
        field = FIELD_LABELS.get(field_s.lower())
        if field is None:
            unknown_fields += 1
            field = Field.OTHER
        raw_papers.append(CorpusPaper(ext_id, year, field, subfield))

    # dense ids in stable year order: any warm-up cutoff is an id prefix
    order = sorted(range(len(raw_papers)), key=lambda i: raw_papers[i].year)
    papers = [raw_papers[i] for i in order]
    id_map = {p.ext_id: i for i, p in enumerate(papers)}

    edges: list[tuple[int, int]] = []
    edge_seen: set[tuple[int, int]] = set()
    dropped = 0
    for line_num, row in _read_rows(edges_source, EDGES_HEADER, "edges"):
        if len(row) != 2:
            raise CorpusFormatError(
                f"edges line {line_num}: expected 2 columns, got {len(row)}"
            )
        src_ext, dst_ext = (c.strip() for c in row)
        src = id_map.get(src_ext)
        dst = id_map.get(dst_ext)
        if src is None or dst is None or src == dst or (src, dst) in edge_seen:
            dropped += 1
            continue
        edge_seen.add((src, dst))
        edges.append((src, dst))
    if dropped:
        logger.warning("load_corpus: dropped %d edges (unresolvable, self, or duplicate)", dropped)
    if unknown_fields:
        logger.warning("load_corpus: %d papers with unknown field labels mapped to other", unknown_fields)
    return Corpus(papers, edges, id_map, dropped_edges=dropped, unknown_fields=unknown_fields)


def write_corpus(corpus: Corpus, papers_path, edges_path) -> None:
    """Write the corpus back in its input format (round-trip identity)."""
    with open(papers_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PAPERS_HEADER)
        for p in corpus.papers:
            writer.writerow([p.ext_id, p.year, LABEL_OF_FIELD[p.field], p.subfield])
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EDGES_HEADER)
        for src, dst in corpus.edges:
            writer.writerow([corpus.papers[src].ext_id, corpus.papers[dst].ext_id])


def filter_min_refs(corpus: Corpus, k: int) -> Corpus:
    """Drop the outgoing edges of papers citing fewer than k targets.

    One pass over the input degrees: no cascade, and filtered papers stay
    in the corpus as citable targets. Idempotent.
    """
    if k < 0:
        raise ValueError(f"minimum reference count must be >= 0, got {k}")
    if k == 0:
        return Corpus(
            corpus.papers.copy(),
            corpus.edges.copy(),
            corpus.id_map.copy(),
            corpus.dropped_edges,
            corpus.unknown_fields,
        )
    degs = corpus.out_degrees()
    edges = [(s, d) for s, d in corpus.edges if degs[s] >= k]
    return Corpus(
        corpus.papers.copy(),
        edges,
        corpus.id_map.copy(),
        corpus.dropped_edges,
        corpus.unknown_fields,
    )


def compute_stats(corpus: Corpus, warmup_range: tuple[int, int]) -> EmpiricalStats:
    """Arrival counts, conditional destination-field distribution, top-cited.

    Arrivals count every corpus paper per (year, field) so simulation years
    can replay the real schedule. The destination distribution conditions
    on the source field over warm-up citers and covers the three reportable
    fields; edges touching OTHER papers are excluded. Top-cited ranks
    papers dated up to the warm-up end by the in-degree they accumulated
    from warm-up citers, ties broken by ascending id.
    """
    lo, hi = warmup_range
    if lo > hi:
        raise StatsError(f"empty warm-up range {warmup_range}")
    papers = corpus.papers

    # the arrival schedule spans the whole corpus: simulation years replay it
    arrivals: dict[tuple[int, Field], int] = {}
    warm_papers = 0
    for p in papers:
        key = (p.year, p.field)
        arrivals[key] = arrivals.get(key, 0) + 1
        if lo <= p.year <= hi:
            warm_papers += 1
    if warm_papers == 0:
        raise StatsError(f"no papers inside warm-up range {lo}-{hi}")

    dest_counts: dict[Field, dict[Field, int]] = {
        f: {g: 0 for g in REPORTABLE_FIELDS} for f in REPORTABLE_FIELDS
    }
    warm_in_degree: dict[int, int] = {}
    out_edge_total = 0
    for src, dst in corpus.edges:
        sp, dp = papers[src], papers[dst]
        if lo <= sp.year <= hi:
            out_edge_total += 1
            if dp.year <= hi:
                warm_in_degree[dst] = warm_in_degree.get(dst, 0) + 1
            if sp.field is not Field.OTHER and dp.field is not Field.OTHER:
                dest_counts[sp.field][dp.field] += 1

    dest_field_dist: dict[Field, dict[Field, float]] = {}
    for f in REPORTABLE_FIELDS:
        total = sum(dest_counts[f].values())
        if total > 0:
            dest_field_dist[f] = {g: c / total for g, c in dest_counts[f].items()}

    top_cited: dict[Field, list[int]] = {}
    for f in REPORTABLE_FIELDS:
        members = [
            (pid, p)
            for pid, p in enumerate(papers)
            if p.field is f and p.year <= hi
        ]
        members.sort(key=lambda item: (-warm_in_degree.get(item[0], 0), item[0]))
        top_cited[f] = [pid for pid, _ in members]

    return EmpiricalStats(
        arrivals=arrivals,
        dest_field_dist=dest_field_dist,
        top_cited=top_cited,
        mean_out_degree=out_edge_total / warm_papers,
    )


def self_field_proportions(corpus: Corpus) -> dict[Field, tuple[float, float]]:
    """Per source field, the (self, non-self) fractions of its citations.

    Computed over all corpus edges between reportable fields; a field with
    no qualifying outgoing edges is absent from the result.
    """
    counts: dict[Field, list[int]] = {f: [0, 0] for f in REPORTABLE_FIELDS}
    papers = corpus.papers
    for src, dst in corpus.edges:
        sf, df = papers[src].field, papers[dst].field
        if sf is Field.OTHER or df is Field.OTHER:
            continue
        counts[sf][0 if sf is df else 1] += 1
    result: dict[Field, tuple[float, float]] = {}
    for f in REPORTABLE_FIELDS:
        self_n, other_n = counts[f]
        total = self_n + other_n
        if total > 0:
            result[f] = (self_n / total, other_n / total)
    return result
