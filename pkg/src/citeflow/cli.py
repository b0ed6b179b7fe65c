"""Command-line front end: ingest, stats, simulate, tbs, compare, sweep.

Data goes to files; progress and warnings go to stderr. Exit codes:
0 success, 1 usage or configuration error, 2 missing or malformed input,
3 invariant violation or internal failure. Every command leaves a
manifest.json in its output directory; a simulate manifest doubles as a
config that reproduces the run byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

from citeflow.engine import (
    EngineError,
    EvaluationTable,
    build_warmup,
    evaluate,
    read_graph,
    run,
    run_manifest,
    sweep,
    write_graph,
    write_manifest,
)
from citeflow.graph import GraphError, REPORTABLE_FIELDS
from citeflow.ingest import (
    Corpus,
    CorpusFormatError,
    StatsError,
    compute_stats,
    filter_min_refs,
    load_corpus,
    self_field_proportions,
    write_corpus,
)
from citeflow.models import ModelKind, ModelParams
from citeflow.tbs import (
    Bucketing,
    SignatureFormatError,
    SignatureMismatchError,
    TYPE_KEYS,
    all_signatures,
    l1_distance,
    read_signatures_csv,
    write_signatures_csv,
    write_signatures_json,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INVARIANT = 3


class ConfigError(Exception):
    """Invalid run configuration; the message names the offending key."""


@dataclass
class RunConfig:
    """Everything a batch command needs, with every default materialized."""

    papers: str | None = None
    edges: str | None = None
    out: str | None = None
    params: ModelParams = dc_field(default_factory=lambda: ModelParams(ModelKind.PA))
    bucketing: Bucketing = dc_field(default_factory=Bucketing)
    warmup_range: tuple[int, int] = (1995, 2009)
    sim_range: tuple[int, int] = (2010, 2017)
    seed: int = 0
    min_refs: int = 5
    # command-specific inputs supplied by flags rather than the config file
    stats_dir: str | None = None
    graph_path: str | None = None
    sim_dirs: list[str] = dc_field(default_factory=list)
    emp_dir: str | None = None
    grid_path: str | None = None


_CONFIG_KEYS = {
    "papers": str,
    "edges": str,
    "out": str,
    "model": str,
    "m": int,
    "theta_in": (int, float),
    "lambda_in": (int, float),
    "theta_out": (int, float),
    "lambda_out": (int, float),
    "max_relay_depth": int,
    "top_cited_k": int,
    "iiprc_global_pool": bool,
    "seed": int,
    "warmup_range": list,
    "sim_range": list,
    "bucketing": dict,
    "min_refs": int,
    "command": str,  # provenance written into manifests; ignored on input
}


def _year_pair(value, key: str) -> tuple[int, int]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ConfigError(f"{key}: expected [start_year, end_year]")
    lo, hi = value
    if lo > hi:
        raise ConfigError(f"{key}: start year {lo} exceeds end year {hi}")
    return lo, hi


def parse_config(source) -> RunConfig:
    """Build a RunConfig from a JSON document (dict, text, path, or stream).

    Unknown keys, type mismatches, and invalid ranges are rejected with the
    offending key named; absent keys take their documented defaults.
    """
    if isinstance(source, dict):
        doc = source
    else:
        if isinstance(source, Path) or (
            isinstance(source, str) and not source.lstrip().startswith("{")
        ):
            try:
                text = Path(source).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"config file unreadable: {exc}") from None
        elif isinstance(source, str):
            text = source
        else:
            text = source.read()
        try:
            doc = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")

    for key, value in doc.items():
        expected = _CONFIG_KEYS.get(key)
        if expected is None:
            raise ConfigError(f"unknown key: {key}")
        if not isinstance(value, expected) or (
            expected in (int, (int, float)) and isinstance(value, bool)
        ):
            raise ConfigError(f"{key}: unexpected type {type(value).__name__}")

    model_name = doc.get("model", ModelKind.PA.value)
    try:
        kind = ModelKind(str(model_name).lower())
    except ValueError:
        raise ConfigError(
            f"model: unknown model {model_name!r}, expected one of "
            f"{', '.join(k.value for k in ModelKind)}"
        ) from None
    try:
        params = ModelParams(
            kind=kind,
            m=doc.get("m", 8),
            theta_in=float(doc.get("theta_in", 1.0)),
            lambda_in=float(doc.get("lambda_in", 1.0)),
            theta_out=float(doc.get("theta_out", 1.0)),
            lambda_out=float(doc.get("lambda_out", 1.0)),
            max_relay_depth=doc.get("max_relay_depth", 100),
            top_cited_k=doc.get("top_cited_k", 100),
            iiprc_global_pool=doc.get("iiprc_global_pool", False),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    bucketing_doc = doc.get("bucketing", {})
    unknown = set(bucketing_doc) - {"start_year", "width", "end_year"}
    if unknown:
        raise ConfigError(f"bucketing: unknown key {sorted(unknown)[0]}")
    try:
        bucketing = Bucketing(
            start_year=bucketing_doc.get("start_year", 1995),
            width=bucketing_doc.get("width", 5),
            end_year=bucketing_doc.get("end_year", 2017),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bucketing: {exc}") from None

    warmup_range = _year_pair(doc.get("warmup_range", [1995, 2009]), "warmup_range")
    sim_range = _year_pair(doc.get("sim_range", [2010, 2017]), "sim_range")
    if warmup_range[1] >= sim_range[0]:
        raise ConfigError(
            f"sim_range: must start after the warm-up ends "
            f"({warmup_range[1]} >= {sim_range[0]})"
        )
    min_refs = doc.get("min_refs", 5)
    if min_refs < 0:
        raise ConfigError(f"min_refs: must be >= 0, got {min_refs}")

    return RunConfig(
        papers=doc.get("papers"),
        edges=doc.get("edges"),
        out=doc.get("out"),
        params=params,
        bucketing=bucketing,
        warmup_range=warmup_range,
        sim_range=sim_range,
        seed=doc.get("seed", 0),
        min_refs=min_refs,
    )


def config_manifest(config: RunConfig, command: str, **extra) -> dict:
    manifest = run_manifest(
        config.params,
        config.seed,
        config.warmup_range,
        config.sim_range,
        config.bucketing,
        command=command,
        min_refs=config.min_refs,
    )
    if config.papers:
        manifest["papers"] = str(config.papers)
    if config.edges:
        manifest["edges"] = str(config.edges)
    manifest.update(extra)
    return manifest


def _require_file(path, what: str) -> Path:
    if path is None:
        raise FileNotFoundError(f"{what} not specified")
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _out_dir(config: RunConfig) -> Path:
    if not config.out:
        raise ConfigError("out: no output directory specified")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_filtered_corpus(config: RunConfig) -> Corpus:
    papers = _require_file(config.papers, "papers file")
    edges = _require_file(config.edges, "edges file")
    corpus = load_corpus(papers, edges)
    return filter_min_refs(corpus, config.min_refs)


# -- commands -----------------------------------------------------------------


def _cmd_ingest(config: RunConfig) -> int:
    out = _out_dir(config)
    corpus = _load_filtered_corpus(config)
    write_corpus(corpus, out / "papers.csv", out / "edges.csv")
    graph = build_warmup(corpus, (min(p.year for p in corpus.papers), max(p.year for p in corpus.papers)))
    write_graph(graph, out / "nodes.csv", out / "graph.csv")
    summary = {
        "papers": corpus.n_papers,
        "edges": corpus.n_edges,
        "dropped_edges": corpus.dropped_edges,
        "unknown_fields": corpus.unknown_fields,
        "min_refs": config.min_refs,
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(config_manifest(config, "ingest"), out / "manifest.json")
    logger.info("ingested %d papers, %d edges", corpus.n_papers, corpus.n_edges)
    return EXIT_OK


def _cmd_stats(config: RunConfig) -> int:
    src = Path(_require_file(config.stats_dir, "ingested corpus directory"))
    corpus = load_corpus(
        _require_file(src / "papers.csv", "papers file"),
        _require_file(src / "edges.csv", "edges file"),
    )
    props = self_field_proportions(corpus)
    print("field self non_self")
    for f in REPORTABLE_FIELDS:
        if f in props:
            self_frac, non_frac = props[f]
            print(f"{f.value} {self_frac:.6g} {non_frac:.6g}")
    return EXIT_OK


def _run_once(config: RunConfig):
    corpus = _load_filtered_corpus(config)
    stats = compute_stats(corpus, config.warmup_range)
    warmup = build_warmup(corpus, config.warmup_range)
    return run(warmup, stats, config.params, config.sim_range, config.seed)


def _cmd_simulate(config: RunConfig) -> int:
    out = _out_dir(config)
    graph, record = _run_once(config)
    write_manifest(config_manifest(config, "simulate"), out / "manifest.json")
    write_graph(graph, out / "nodes.csv", out / "graph.csv")
    signatures = all_signatures(graph, config.bucketing)
    write_signatures_csv(signatures, out / "signatures.csv")
    write_signatures_json(signatures, out / "signatures.json")
    summary = {
        "papers_added": record.papers_added,
        "edges_added": record.edges_added,
        "counters": record.counters.as_dict(),
    }
    with open(out / "run_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info(
        "simulated %d papers, %d edges (%s)",
        record.papers_added, record.edges_added, config.params.kind.value,
    )
    return EXIT_OK


def _cmd_tbs(config: RunConfig) -> int:
    out = _out_dir(config)
    graph_path = _require_file(config.graph_path, "graph file")
    nodes_path = _require_file(graph_path.parent / "nodes.csv", "nodes file")
    graph = read_graph(nodes_path, graph_path)
    signatures = all_signatures(graph, config.bucketing)
    write_signatures_csv(signatures, out / "signatures.csv")
    write_signatures_json(signatures, out / "signatures.json")
    write_manifest(config_manifest(config, "tbs", graph=str(graph_path)), out / "manifest.json")
    return EXIT_OK


def _sim_label(sim_dir: Path, used: set[str]) -> str:
    label = sim_dir.name
    manifest_path = sim_dir / "manifest.json"
    if manifest_path.exists():
        try:
            label = json.loads(manifest_path.read_text()).get("model", label)
        except (OSError, json.JSONDecodeError):
            pass
    base, n = label, 2
    while label in used:
        label = f"{base}_{n}"
        n += 1
    used.add(label)
    return label


def _cmd_compare(config: RunConfig) -> int:
    out = _out_dir(config)
    emp_dir = Path(_require_file(config.emp_dir, "empirical signatures directory"))
    emp_sigs = read_signatures_csv(_require_file(emp_dir / "signatures.csv", "empirical signatures"))
    columns: dict[str, EvaluationTable] = {}
    used: set[str] = set()
    for sim in config.sim_dirs:
        sim_dir = Path(_require_file(sim, "simulated signatures directory"))
        sim_sigs = read_signatures_csv(
            _require_file(sim_dir / "signatures.csv", "simulated signatures")
        )
        per_type = {key: l1_distance(sim_sigs[key], emp_sigs[key]) for key in TYPE_KEYS}
        values = list(per_type.values())
        weights = [emp_sigs[key].total_count for key in TYPE_KEYS]
        total_w = sum(weights)
        weighted = (
            sum(w * per_type[k] for k, w in zip(TYPE_KEYS, weights)) / total_w
            if total_w
            else 0.0
        )
        columns[_sim_label(sim_dir, used)] = EvaluationTable(
            per_type, sum(values) / len(values), weighted
        )
    labels = list(columns)
    rows = list(TYPE_KEYS) + ["overall_mean", "overall_weighted"]
    with open(out / "l1_table.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["citation_type"] + labels)
        for row_key in rows:
            writer.writerow(
                [row_key] + [f"{columns[lbl].as_dict()[row_key]:.6f}" for lbl in labels]
            )
    write_manifest(
        config_manifest(
            config, "compare", emp=str(emp_dir), sims=[str(s) for s in config.sim_dirs]
        ),
        out / "manifest.json",
    )
    print("citation_type " + " ".join(labels))
    for row_key in rows:
        print(row_key + " " + " ".join(f"{columns[lbl].as_dict()[row_key]:.4f}" for lbl in labels))
    return EXIT_OK


_GRID_KEYS = {
    "model": str,
    "m": int,
    "theta_in": (int, float),
    "lambda_in": (int, float),
    "theta_out": (int, float),
    "lambda_out": (int, float),
    "max_relay_depth": int,
    "top_cited_k": int,
}


def _grid_points(base: ModelParams, grid_doc: dict) -> list[ModelParams]:
    """Cartesian product over the grid axes, in document order."""
    for key, values in grid_doc.items():
        if key not in _GRID_KEYS:
            raise ConfigError(f"grid: unknown key {key}")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid: {key} must map to a non-empty list")
    points = [base]
    for key, values in grid_doc.items():
        next_points = []
        for p in points:
            for v in values:
                if key == "model":
                    try:
                        next_points.append(replace(p, kind=ModelKind(str(v).lower())))
                    except ValueError:
                        raise ConfigError(f"grid: unknown model {v!r}") from None
                else:
                    try:
                        next_points.append(replace(p, **{key: v}))
                    except ValueError as exc:
                        raise ConfigError(f"grid: {exc}") from None
        points = next_points
    return points


def _cmd_sweep(config: RunConfig) -> int:
    out = _out_dir(config)
    grid_path = _require_file(config.grid_path, "grid file")
    try:
        grid_doc = json.loads(grid_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"grid is not valid JSON: {exc}") from None
    if not isinstance(grid_doc, dict):
        raise ConfigError("grid: expected a JSON object of parameter lists")
    points = _grid_points(config.params, grid_doc)

    corpus = _load_filtered_corpus(config)
    stats = compute_stats(corpus, config.warmup_range)
    warmup = build_warmup(corpus, config.warmup_range)
    emp_graph = build_warmup(
        corpus, (config.warmup_range[0], max(p.year for p in corpus.papers))
    )
    results = sweep(
        warmup, stats, points, config.sim_range, config.seed, emp_graph, config.bucketing
    )

    param_cols = ["model", "m", "theta_in", "lambda_in", "theta_out", "lambda_out", "seed"]
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["run_index"] + param_cols + list(TYPE_KEYS) + ["overall_mean", "overall_weighted", "error"]
        )
        for index, (params, table) in enumerate(results):
            row = [
                index, params.kind.value, params.m, params.theta_in, params.lambda_in,
                params.theta_out, params.lambda_out, config.seed + index,
            ]
            if table is None:
                row += [""] * (len(TYPE_KEYS) + 2) + ["failed"]
            else:
                stats_dict = table.as_dict()
                row += [f"{stats_dict[k]:.6f}" for k in list(TYPE_KEYS) + ["overall_mean", "overall_weighted"]]
                row += [""]
            writer.writerow(row)
            run_dir = out / f"run_{index:03d}"
            run_dir.mkdir(exist_ok=True)
            point_config = replace(config, params=params, seed=config.seed + index)
            write_manifest(config_manifest(point_config, "simulate"), run_dir / "manifest.json")
    write_manifest(
        config_manifest(config, "sweep", grid=grid_doc, points=len(points)),
        out / "manifest.json",
    )
    logger.info("swept %d grid points", len(points))
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


class _CliParser(argparse.ArgumentParser):
    def error(self, message):  # usage problems must exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _CliParser(prog="citeflow", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="load, filter, and normalize a corpus")
    p_ingest.add_argument("--papers", required=True)
    p_ingest.add_argument("--edges", required=True)
    p_ingest.add_argument("--out", required=True)
    p_ingest.add_argument("--min-refs", type=int, default=5)

    p_stats = sub.add_parser("stats", help="print self/non-self citation proportions")
    p_stats.add_argument("--in", dest="stats_dir", required=True)

    p_sim = sub.add_parser("simulate", help="run one growth model over the corpus")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)

    p_tbs = sub.add_parser("tbs", help="compute bucket signatures for a graph")
    p_tbs.add_argument("--graph", required=True, help="graph.csv with nodes.csv alongside")
    p_tbs.add_argument("--bucketing", default="1995:5:2017", help="start:width:end")
    p_tbs.add_argument("--out", required=True)

    p_cmp = sub.add_parser("compare", help="L1 table of simulated vs empirical signatures")
    p_cmp.add_argument("--sim", nargs="+", required=True, help="simulate/tbs output dirs")
    p_cmp.add_argument("--emp", required=True, help="empirical signatures dir")
    p_cmp.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="grid of simulate+evaluate runs")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True)
    p_sweep.add_argument("--out", required=True)
    return parser


def _parse_bucketing_arg(text: str) -> dict:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"bucketing: expected start:width:end, got {text!r}")
    try:
        start, width, end = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bucketing: non-numeric component in {text!r}") from None
    return {"start_year": start, "width": width, "end_year": end}


def _config_from_args(args) -> RunConfig:
    if args.command in ("simulate", "sweep"):
        config = parse_config(_require_file(args.config, "config file"))
        config.out = args.out
        if args.command == "sweep":
            config.grid_path = args.grid
        return config
    if args.command == "ingest":
        doc = {"min_refs": args.min_refs}
        config = parse_config(doc)
        config.papers, config.edges, config.out = args.papers, args.edges, args.out
        return config
    if args.command == "stats":
        config = parse_config({})
        config.stats_dir = args.stats_dir
        return config
    if args.command == "tbs":
        config = parse_config({"bucketing": _parse_bucketing_arg(args.bucketing)})
        config.graph_path = args.graph
        config.out = args.out
        return config
    if args.command == "compare":
        config = parse_config({})
        config.sim_dirs = list(args.sim)
        config.emp_dir = args.emp
        config.out = args.out
        return config
    raise _UsageError(f"unknown command {args.command!r}")


_COMMANDS = {
    "ingest": _cmd_ingest,
    "stats": _cmd_stats,
    "simulate": _cmd_simulate,
    "tbs": _cmd_tbs,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
}


def dispatch(command: str, config: RunConfig) -> int:
    """Execute one command against a validated config; returns the exit code."""
    handler = _COMMANDS.get(command)
    if handler is None:
        raise _UsageError(f"unknown command {command!r}")
    try:
        return handler(config)
    except ConfigError:
        raise
    except FileNotFoundError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except (CorpusFormatError, SignatureFormatError, SignatureMismatchError, StatsError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except (GraphError, EngineError) as exc:
        logger.error("invariant violation: %s", exc)
        return EXIT_INVARIANT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"citeflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _config_from_args(args)
        return dispatch(args.command, config)
    except (_UsageError, ConfigError) as exc:
        print(f"citeflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"citeflow: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
