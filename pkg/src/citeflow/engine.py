"""Warm-up construction, year-by-year growth, and model evaluation.

A run copies the warm-up graph, then replays the corpus's arrival schedule
over the simulation years: each arriving paper asks its model for up to m
targets against the graph as it stood before the paper's own insertion,
so citations only ever point backward. One seeded generator drives the
whole run, making (inputs, seed) -> output graph bit-reproducible.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass

from citeflow.graph import CitationGraph, Field, GraphError, REPORTABLE_FIELDS
from citeflow.ingest import Corpus, EmpiricalStats
from citeflow.models import (
    IncomingPaper,
    ModelParams,
    RunCounters,
    STEP_FUNCS,
    StepState,
)
from citeflow.tbs import Bucketing, TYPE_KEYS, all_signatures, l1_distance

logger = logging.getLogger(__name__)

NODES_CSV_HEADER = ["id", "year", "field", "origin"]
GRAPH_CSV_HEADER = ["src", "dst"]


class EngineError(Exception):
    pass


@dataclass
class SimulationRun:
    """Provenance and counters for one completed run."""

    seed: int
    params: ModelParams
    warmup_range: tuple[int, int]
    sim_range: tuple[int, int]
    counters: RunCounters
    papers_added: int = 0
    edges_added: int = 0


@dataclass
class EvaluationTable:
    """L1 distances per citation type plus the two overall aggregates."""

    per_type: dict[str, float]
    overall_mean: float
    overall_weighted: float

    def as_dict(self) -> dict[str, float]:
        out = dict(self.per_type)
        out["overall_mean"] = self.overall_mean
        out["overall_weighted"] = self.overall_weighted
        return out


def build_warmup(corpus: Corpus, warmup_range: tuple[int, int]) -> CitationGraph:
    """Graph of every corpus paper dated up to the warm-up end, with the
    edges running among them.

    Dense corpus ids are year-ordered, so the warm-up slice is an id
    prefix and graph ids coincide with corpus ids. Edges violating the
    year direction are dropped with a counted warning.
    """
    lo, hi = warmup_range
    if lo > hi:
        raise EngineError(f"empty warm-up range {warmup_range}")
    papers = corpus.papers
    cutoff = 0
    while cutoff < len(papers) and papers[cutoff].year <= hi:
        cutoff += 1
    if cutoff == 0:
        raise EngineError(f"no corpus papers dated up to {hi}")
    year_lo = min(papers[0].year, lo)
    graph = CitationGraph((year_lo, hi))
    for p in papers[:cutoff]:
        graph.add_paper(p.year, p.field, origin="warmup")
    dropped = 0
    for src, dst in corpus.edges:
        if src >= cutoff or dst >= cutoff:
            continue
        try:
            graph.add_citation(src, dst)
        except GraphError:
            dropped += 1
    if dropped:
        logger.warning("build_warmup: dropped %d edges violating year order", dropped)
    return graph


def run(
    warmup_graph: CitationGraph,
    stats: EmpiricalStats,
    params: ModelParams,
    sim_range: tuple[int, int],
    seed: int,
) -> tuple[CitationGraph, SimulationRun]:
    """Grow an independent copy of the warm-up graph over the simulation years.

    Arrivals come from the empirical per-(year, field) schedule; OTHER
    papers are never simulated. Model-step shortfalls surface as counters,
    never as aborts.
    """
    lo, hi = sim_range
    if lo > hi:
        raise EngineError(f"empty simulation range {sim_range}")
    graph = warmup_graph.copy()
    graph.extend_year_range(hi)
    rng = random.Random(seed)
    counters = RunCounters()
    step = STEP_FUNCS[params.kind]
    state = StepState() if params.iiprc_global_pool else None
    record = SimulationRun(
        seed=seed,
        params=params,
        warmup_range=warmup_graph.year_range,
        sim_range=sim_range,
        counters=counters,
    )
    for year in range(lo, hi + 1):
        for field in REPORTABLE_FIELDS:
            arrivals = stats.arrivals.get((year, field), 0)
            for _ in range(arrivals):
                incoming = IncomingPaper(field=field, year=year)
                targets = step(
                    graph, incoming, params, stats, rng, counters=counters, state=state
                )
                pid = graph.add_paper(year, field, origin="simulated")
                for t in targets:
                    graph.add_citation(pid, t)
                record.papers_added += 1
                record.edges_added += len(targets)
    return graph, record


def evaluate(
    sim_graph: CitationGraph, emp_graph: CitationGraph, bucketing: Bucketing
) -> EvaluationTable:
    """Nine per-type L1 distances plus mean and citation-count-weighted
    aggregates (weights are the empirical per-type citation counts)."""
    sim_sigs = all_signatures(sim_graph, bucketing)
    emp_sigs = all_signatures(emp_graph, bucketing)
    per_type = {key: l1_distance(sim_sigs[key], emp_sigs[key]) for key in TYPE_KEYS}
    values = list(per_type.values())
    overall_mean = sum(values) / len(values)
    weights = [emp_sigs[key].total_count for key in TYPE_KEYS]
    weight_total = sum(weights)
    if weight_total > 0:
        overall_weighted = (
            sum(w * per_type[key] for key, w in zip(TYPE_KEYS, weights)) / weight_total
        )
    else:
        overall_weighted = 0.0
    return EvaluationTable(per_type, overall_mean, overall_weighted)


def sweep(
    warmup_graph: CitationGraph,
    stats: EmpiricalStats,
    param_grid: list[ModelParams],
    sim_range: tuple[int, int],
    base_seed: int,
    emp_graph: CitationGraph,
    bucketing: Bucketing,
) -> list[tuple[ModelParams, EvaluationTable | None]]:
    """One independent run per grid point, seeded base_seed + index.

    A failing point is recorded as (params, None) and the sweep continues.
    """
    if not param_grid:
        raise EngineError("empty parameter grid")
    results: list[tuple[ModelParams, EvaluationTable | None]] = []
    for index, params in enumerate(param_grid):
        try:
            sim_graph, _ = run(warmup_graph, stats, params, sim_range, base_seed + index)
            table = evaluate(sim_graph, emp_graph, bucketing)
            results.append((params, table))
        except Exception:
            logger.exception("sweep point %d (%s) failed", index, params.kind.value)
            results.append((params, None))
    return results


# -- graph and manifest serialization ----------------------------------------


def write_graph(graph: CitationGraph, nodes_path, edges_path) -> None:
    """nodes.csv (id,year,field,origin) and graph.csv (src,dst edge list)."""
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(NODES_CSV_HEADER)
        for p in graph.papers():
            writer.writerow([p.id, p.year, p.field.value, p.origin])
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(GRAPH_CSV_HEADER)
        for src, dst in graph.edges():
            writer.writerow([src, dst])


def read_graph(nodes_path, edges_path) -> CitationGraph:
    """Rebuild a graph written by write_graph (ids must be dense, year-ordered)."""
    rows: list[tuple[int, int, Field, str]] = []
    with open(nodes_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != NODES_CSV_HEADER:
            raise EngineError(f"{nodes_path}: expected header {','.join(NODES_CSV_HEADER)}")
        for row in reader:
            if not row:
                continue
            try:
                rows.append((int(row[0]), int(row[1]), Field(row[2]), row[3]))
            except (ValueError, IndexError):
                raise EngineError(
                    f"{nodes_path} line {reader.line_num}: malformed node row"
                ) from None
    if not rows:
        raise EngineError(f"{nodes_path}: no nodes")
    if [r[0] for r in rows] != list(range(len(rows))):
        raise EngineError(f"{nodes_path}: node ids must be dense and ordered")
    years = [r[1] for r in rows]
    graph = CitationGraph((min(years), max(years)))
    for _, year, field, origin in rows:
        graph.add_paper(year, field, origin=origin)
    with open(edges_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GRAPH_CSV_HEADER:
            raise EngineError(f"{edges_path}: expected header {','.join(GRAPH_CSV_HEADER)}")
        for row in reader:
            if not row:
                continue
            try:
                graph.add_citation(int(row[0]), int(row[1]))
            except (ValueError, GraphError) as exc:
                raise EngineError(
                    f"{edges_path} line {reader.line_num}: {exc}"
                ) from None
    return graph


def run_manifest(
    params: ModelParams,
    seed: int,
    warmup_range: tuple[int, int],
    sim_range: tuple[int, int],
    bucketing: Bucketing,
    **extra,
) -> dict:
    """The provenance document emitted alongside every run output."""
    manifest = {
        "model": params.kind.value,
        "m": params.m,
        "theta_in": params.theta_in,
        "lambda_in": params.lambda_in,
        "theta_out": params.theta_out,
        "lambda_out": params.lambda_out,
        "max_relay_depth": params.max_relay_depth,
        "top_cited_k": params.top_cited_k,
        "iiprc_global_pool": params.iiprc_global_pool,
        "seed": seed,
        "warmup_range": list(warmup_range),
        "sim_range": list(sim_range),
        "bucketing": {
            "start_year": bucketing.start_year,
            "width": bucketing.width,
            "end_year": bucketing.end_year,
        },
    }
    manifest.update(extra)
    return manifest


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
