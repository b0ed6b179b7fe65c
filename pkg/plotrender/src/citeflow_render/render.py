"""Render signature CSV tables as stacked bar charts, one image per type.

Input schema (one combined CSV):

    source_field,dest_kind,src_bucket,dst_bucket,count,fraction

Each (source_field, dest_kind) group becomes one figure: x positions are
source buckets, and each bar stacks the destination-bucket fractions with
the oldest bucket at the base, so a full bar reads as "where this bucket's
citations land in time". Zero-height segments are still drawn, keeping the
lower-triangular structure visible: column i carries exactly i + 1
segments. When a manifest.json with a bucketing block sits next to the
CSV, the legend shows year ranges; otherwise plain bucket indices.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.figure import Figure

EXPECTED_HEADER = ["source_field", "dest_kind", "src_bucket", "dst_bucket", "count", "fraction"]

#: fixed colors keyed by destination bucket index, recycled past ten buckets
SEGMENT_COLORS = plt.cm.tab10.colors

FRACTION_SUM_TOL = 1e-6


class SignatureTableError(Exception):
    """Malformed signature CSV; the message names the offending line."""


@dataclass
class SignatureGroup:
    """All cells of one (source_field, dest_kind) signature."""

    source_field: str
    dest_kind: str
    counts: list[list[int]]
    fractions: list[list[float]]

    @property
    def n_buckets(self) -> int:
        return len(self.counts)

    @property
    def name(self) -> str:
        return f"{self.source_field}_{self.dest_kind}"

    @property
    def empty(self) -> bool:
        return all(c == 0 for row in self.counts for c in row)

    def bad_rows(self) -> list[int]:
        """Populated rows whose fractions do not sum to one."""
        bad = []
        for i, row in enumerate(self.counts):
            if sum(row) > 0 and abs(sum(self.fractions[i]) - 1.0) > FRACTION_SUM_TOL:
                bad.append(i)
        return bad


def load_signature_table(path) -> list[SignatureGroup]:
    """Parse the combined CSV into groups, in first-appearance order."""
    cells: dict[tuple[str, str], dict[tuple[int, int], tuple[int, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != EXPECTED_HEADER:
            raise SignatureTableError(
                f"line 1: expected header {','.join(EXPECTED_HEADER)}"
            )
        for row in reader:
            if not row:
                continue
            if len(row) != 6:
                raise SignatureTableError(
                    f"line {reader.line_num}: expected 6 columns, got {len(row)}"
                )
            source, kind, i_s, j_s, count_s, frac_s = (c.strip() for c in row)
            try:
                i, j = int(i_s), int(j_s)
                count = int(count_s)
                fraction = float(frac_s)
            except ValueError:
                raise SignatureTableError(
                    f"line {reader.line_num}: non-numeric bucket, count, or fraction"
                ) from None
            if i < 0 or j < 0 or j > i:
                raise SignatureTableError(
                    f"line {reader.line_num}: cell ({i}, {j}) is not lower-triangular"
                )
            cells.setdefault((source, kind), {})[(i, j)] = (count, fraction)
    if not cells:
        raise SignatureTableError("no signature rows in file")
    groups = []
    for (source, kind), grid in cells.items():
        n = max(i for i, _ in grid) + 1
        counts = [[0] * n for _ in range(n)]
        fractions = [[0.0] * n for _ in range(n)]
        for (i, j), (count, fraction) in grid.items():
            counts[i][j] = count
            fractions[i][j] = fraction
        groups.append(SignatureGroup(source, kind, counts, fractions))
    return groups


def sibling_bucketing(signatures_path) -> dict | None:
    """Bucketing block from a manifest.json next to the CSV, if any."""
    manifest_path = Path(signatures_path).parent / "manifest.json"
    if not manifest_path.exists():
        return None
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return None
    bucketing = manifest.get("bucketing")
    if (
        isinstance(bucketing, dict)
        and all(k in bucketing for k in ("start_year", "width", "end_year"))
    ):
        return bucketing
    return None


def bucket_labels(n_buckets: int, bucketing: dict | None) -> list[str]:
    if bucketing is None:
        return [f"bucket {j}" for j in range(n_buckets)]
    start, width, end = bucketing["start_year"], bucketing["width"], bucketing["end_year"]
    labels = []
    for j in range(n_buckets):
        lo = start + j * width
        hi = min(lo + width - 1, end)
        labels.append(f"{lo}-{hi}" if hi > lo else f"{lo}")
    return labels


def build_figure(group: SignatureGroup, labels: list[str] | None = None) -> Figure:
    """One stacked-bar panel; geometry is a pure function of the group."""
    n = group.n_buckets
    if labels is None:
        labels = bucket_labels(n, None)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    xs = list(range(n))
    # one series per destination bucket, oldest at the base of each stack
    for j in range(n):
        series_x = [i for i in xs if i >= j]
        heights = [group.fractions[i][j] for i in series_x]
        bottoms = [sum(group.fractions[i][:j]) for i in series_x]
        ax.bar(
            series_x,
            heights,
            bottom=bottoms,
            width=0.8,
            color=SEGMENT_COLORS[j % len(SEGMENT_COLORS)],
            label=labels[j] if j < len(labels) else f"bucket {j}",
        )
    ax.set_xticks(xs)
    ax.set_xticklabels(labels[:n], rotation=30, ha="right")
    ax.set_xlabel("source bucket")
    ax.set_ylabel("fraction of citations")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"{group.source_field} -> {group.dest_kind}")
    ax.legend(title="target bucket", fontsize=8, title_fontsize=8)
    if group.empty:
        ax.text(
            0.5, 0.5, "no citations of this type",
            transform=ax.transAxes, ha="center", va="center", fontsize=12, color="gray",
        )
    bad = group.bad_rows()
    if bad:
        ax.text(
            0.5, 0.95,
            f"warning: fractions of row(s) {', '.join(map(str, bad))} do not sum to 1",
            transform=ax.transAxes, ha="center", va="top", fontsize=9, color="red",
        )
    fig.tight_layout()
    return fig


def render(signatures_path, out_dir, fmt: str = "png") -> list[Path]:
    """Write one image per signature group; returns the paths written."""
    if fmt not in ("png", "svg"):
        raise ValueError(f"unsupported format {fmt!r}, expected png or svg")
    groups = load_signature_table(signatures_path)
    labels_base = sibling_bucketing(signatures_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for group in groups:
        fig = build_figure(group, bucket_labels(group.n_buckets, labels_base))
        target = out / f"{group.name}.{fmt}"
        fig.savefig(target)
        plt.close(fig)
        written.append(target)
    return written
