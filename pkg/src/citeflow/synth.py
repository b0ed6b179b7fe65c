"""Synthetic three-field corpus generator for tests and demos.

Produces papers.csv / edges.csv in the ingest format: yearly arrival
counts grow linearly, the field mix and the self-citation rates echo the
empirical corpus shape, and reference targets are recency-biased so the
bucket signatures carry structure. Early papers naturally fall below the
minimum-reference threshold and end up as citation targets only.
"""

from __future__ import annotations

import argparse
import csv
import random
from pathlib import Path

from citeflow.graph import Field

FIELD_MIX = {Field.CS: 0.115, Field.MA: 0.231, Field.PHY: 0.654}
SELF_RATE = {Field.CS: 0.84, Field.MA: 0.895, Field.PHY: 0.971}
FIELD_LABEL = {Field.CS: "cs", Field.MA: "math", Field.PHY: "physics"}


def synth_corpus(
    n_papers: int = 20_000,
    seed: int = 7,
    year_range: tuple[int, int] = (1995, 2017),
    min_refs: int = 5,
    max_refs: int = 11,
) -> tuple[list[tuple[str, int, str, str]], list[tuple[str, str]]]:
    """Return (paper rows, edge rows) in the ingest CSV column order."""
    rng = random.Random(seed)
    lo, hi = year_range
    years = list(range(lo, hi + 1))
    growth = [i + 1 for i in range(len(years))]
    total_weight = sum(growth)
    per_year = [max(1, round(n_papers * w / total_weight)) for w in growth]

    fields = list(FIELD_MIX)
    field_weights = [FIELD_MIX[f] for f in fields]
    by_field: dict[Field, list[str]] = {f: [] for f in fields}
    papers: list[tuple[str, int, str, str]] = []
    edges: list[tuple[str, str]] = []
    counter = 0
    for year, count in zip(years, per_year):
        for _ in range(count):
            ext_id = f"p{counter:06d}"
            counter += 1
            field = rng.choices(fields, weights=field_weights)[0]
            papers.append((ext_id, year, FIELD_LABEL[field], ""))
            n_refs = rng.randint(min_refs, max_refs)
            chosen: set[str] = set()
            for _ in range(n_refs):
                dest_field = field
                if rng.random() >= SELF_RATE[field]:
                    dest_field = rng.choice([f for f in fields if f is not field])
                pool = by_field[dest_field]
                if not pool:
                    continue
                # recency bias: quadratic pull toward the newest papers
                idx = int(len(pool) * (1.0 - rng.random() ** 2))
                target = pool[min(idx, len(pool) - 1)]
                if target not in chosen:
                    chosen.add(target)
                    edges.append((ext_id, target))
            by_field[field].append(ext_id)
    return papers, edges


def write_synth_corpus(out_dir, **kwargs) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    papers, edges = synth_corpus(**kwargs)
    papers_path = out / "papers.csv"
    edges_path = out / "edges.csv"
    with open(papers_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "year", "field", "subfield"])
        writer.writerows(papers)
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst"])
        writer.writerows(edges)
    return papers_path, edges_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="citeflow.synth", description="Generate a synthetic three-field corpus."
    )
    parser.add_argument("out_dir", help="directory for papers.csv and edges.csv")
    parser.add_argument("--papers", type=int, default=20_000, dest="n_papers")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    papers_path, edges_path = write_synth_corpus(
        args.out_dir, n_papers=args.n_papers, seed=args.seed
    )
    print(f"wrote {papers_path} and {edges_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
