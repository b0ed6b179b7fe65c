"""Temporal bucket signatures and the L1 distance between them.

A signature describes one citation type (a source field paired with a
destination kind: the same field, or one named other field). Publication
years are partitioned into fixed-width buckets; cell (i, j) holds the
fraction of the type's citations that papers of source bucket i send to
target bucket j. Rows are normalized independently, so each populated row
is a probability vector over target ages, and the matrix is lower
triangular because citations never point forward in time.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from citeflow.graph import CitationGraph, Field, REPORTABLE_FIELDS

SELF = "self"

#: Citation-type keys in the order the comparison table reports them.
TYPE_KEYS = (
    "CS->MA",
    "CS->PHY",
    "MA->CS",
    "MA->PHY",
    "PHY->CS",
    "PHY->MA",
    "CS->self",
    "MA->self",
    "PHY->self",
)

SIGNATURES_CSV_HEADER = ["source_field", "dest_kind", "src_bucket", "dst_bucket", "count", "fraction"]


class SignatureMismatchError(Exception):
    """Signatures with different shapes or citation types were compared."""


class SignatureFormatError(Exception):
    """Malformed signature CSV; the message names the offending line."""


@dataclass(frozen=True)
class Bucketing:
    """Fixed-width partition of publication years, out-of-range years clamped."""

    start_year: int = 1995
    width: int = 5
    end_year: int = 2017

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"bucket width must be >= 1, got {self.width}")
        if self.end_year < self.start_year:
            raise ValueError(
                f"end year {self.end_year} precedes start year {self.start_year}"
            )

    @property
    def n_buckets(self) -> int:
        return (self.end_year - self.start_year) // self.width + 1

    def bucket_bounds(self, index: int) -> tuple[int, int]:
        """Inclusive year range of one bucket (last bucket may be partial)."""
        lo = self.start_year + index * self.width
        hi = min(lo + self.width - 1, self.end_year)
        return lo, hi


def assign_bucket(year: int, bucketing: Bucketing) -> int:
    """Bucket index for a year; years outside the range clamp to the ends."""
    idx = (year - bucketing.start_year) // bucketing.width
    if idx < 0:
        return 0
    last = bucketing.n_buckets - 1
    return last if idx > last else idx


@dataclass
class TemporalBucketSignature:
    source_field: Field
    dest_kind: str  # SELF or a field tag distinct from source_field
    counts: list[list[int]]
    fractions: list[list[float]]

    @property
    def key(self) -> str:
        return f"{self.source_field.value}->{self.dest_kind}"

    @property
    def n_buckets(self) -> int:
        return len(self.counts)

    @property
    def total_count(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def empty(self) -> bool:
        return self.total_count == 0

    def populated_rows(self) -> int:
        return sum(1 for row in self.counts if sum(row) > 0)


def _dest_field(source_field: Field, dest_kind: str) -> Field:
    if dest_kind == SELF:
        return source_field
    dest = Field(dest_kind)
    if dest is source_field:
        raise ValueError(
            f"cross-field kind {dest_kind!r} equals source field; use {SELF!r}"
        )
    if dest is Field.OTHER:
        raise ValueError("OTHER is not a signature destination")
    return dest


def _normalize(counts: list[list[int]]) -> list[list[float]]:
    fractions = []
    for row in counts:
        total = sum(row)
        if total == 0:
            fractions.append([0.0] * len(row))
        else:
            fractions.append([c / total for c in row])
    return fractions


def compute_tbs(
    graph: CitationGraph,
    source_field: Field,
    dest_kind: str,
    bucketing: Bucketing,
) -> TemporalBucketSignature:
    """Tally one citation type into bucket-by-bucket counts and fractions."""
    dest_field = _dest_field(source_field, dest_kind)
    n = bucketing.n_buckets
    counts = [[0] * n for _ in range(n)]
    for paper in graph.papers():
        if paper.field is not source_field:
            continue
        i = assign_bucket(paper.year, bucketing)
        row = counts[i]
        for ref in paper.refs:
            if graph.field_of(ref) is dest_field:
                row[assign_bucket(graph.year_of(ref), bucketing)] += 1
    return TemporalBucketSignature(source_field, dest_kind, counts, _normalize(counts))


def all_signatures(
    graph: CitationGraph, bucketing: Bucketing
) -> dict[str, TemporalBucketSignature]:
    """The nine signatures (six cross-field, three self), keyed per TYPE_KEYS."""
    out: dict[str, TemporalBucketSignature] = {}
    for key in TYPE_KEYS:
        src_tag, dst_tag = key.split("->")
        sig = compute_tbs(graph, Field(src_tag), dst_tag, bucketing)
        out[key] = sig
    return out


def l1_distance(a: TemporalBucketSignature, b: TemporalBucketSignature) -> float:
    """Sum of absolute cell-wise fraction differences."""
    if (a.source_field, a.dest_kind) != (b.source_field, b.dest_kind):
        raise SignatureMismatchError(
            f"citation types differ: {a.key} vs {b.key}"
        )
    if a.n_buckets != b.n_buckets:
        raise SignatureMismatchError(
            f"bucket counts differ: {a.n_buckets} vs {b.n_buckets}"
        )
    return sum(
        abs(x - y)
        for row_a, row_b in zip(a.fractions, b.fractions)
        for x, y in zip(row_a, row_b)
    )


# -- serialization ----------------------------------------------------------


def write_signatures_csv(signatures: dict[str, TemporalBucketSignature], path) -> None:
    """One combined CSV, every lower-triangular cell incl. zeros."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SIGNATURES_CSV_HEADER)
        for key in TYPE_KEYS:
            sig = signatures[key]
            for i in range(sig.n_buckets):
                for j in range(i + 1):
                    writer.writerow(
                        [
                            sig.source_field.value,
                            sig.dest_kind,
                            i,
                            j,
                            sig.counts[i][j],
                            f"{sig.fractions[i][j]:.12g}",
                        ]
                    )


def write_signatures_json(signatures: dict[str, TemporalBucketSignature], path) -> None:
    payload = [
        {
            "source_field": sig.source_field.value,
            "dest_kind": sig.dest_kind,
            "n_buckets": sig.n_buckets,
            "counts": sig.counts,
            "fractions": sig.fractions,
            "empty": sig.empty,
        }
        for key, sig in ((k, signatures[k]) for k in TYPE_KEYS)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_signatures_csv(path) -> dict[str, TemporalBucketSignature]:
    """Parse a combined signature CSV back into signature objects."""
    cells: dict[tuple[str, str], dict[tuple[int, int], tuple[int, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SIGNATURES_CSV_HEADER:
            raise SignatureFormatError(
                f"line 1: expected header {','.join(SIGNATURES_CSV_HEADER)}"
            )
        for row in reader:
            if not row:
                continue
            if len(row) != 6:
                raise SignatureFormatError(
                    f"line {reader.line_num}: expected 6 columns, got {len(row)}"
                )
            src, kind, i_s, j_s, count_s, frac_s = row
            try:
                i, j, count, frac = int(i_s), int(j_s), int(count_s), float(frac_s)
            except ValueError:
                raise SignatureFormatError(
                    f"line {reader.line_num}: non-numeric bucket/count/fraction"
                ) from None
            cells.setdefault((src, kind), {})[(i, j)] = (count, frac)
    out: dict[str, TemporalBucketSignature] = {}
    for (src, kind), grid in cells.items():
        n = max(i for i, _ in grid) + 1
        counts = [[0] * n for _ in range(n)]
        fractions = [[0.0] * n for _ in range(n)]
        for (i, j), (count, frac) in grid.items():
            counts[i][j] = count
            fractions[i][j] = frac
        sig = TemporalBucketSignature(Field(src), kind, counts, fractions)
        out[sig.key] = sig
    return out
