"""Shared test utilities: independent oracles and RNG instrumentation."""

from __future__ import annotations

import random
from collections import Counter

from citeflow.graph import CitationGraph, Field
from citeflow.tbs import SELF


def brute_tbs(graph, source_field, dest_kind, bucketing):
    """Oracle: plain nested loop over every edge, own bucket arithmetic."""
    n = (bucketing.end_year - bucketing.start_year) // bucketing.width + 1

    def bucket(year):
        raw = (year - bucketing.start_year) // bucketing.width
        return max(0, min(n - 1, raw))

    dest_field = source_field if dest_kind == SELF else Field(dest_kind)
    counts = [[0] * n for _ in range(n)]
    for src, dst in graph.edges():
        if graph.field_of(src) is not source_field:
            continue
        if graph.field_of(dst) is not dest_field:
            continue
        counts[bucket(graph.year_of(src))][bucket(graph.year_of(dst))] += 1
    fractions = []
    for row in counts:
        total = sum(row)
        fractions.append([c / total for c in row] if total else [0.0] * n)
    return counts, fractions


def random_graph(rng, max_papers=40, max_edges=100, year_lo=1990, year_hi=2019):
    """Random mixed-field graph with backward-pointing edges."""
    g = CitationGraph((year_lo, year_hi))
    n = rng.randint(2, max_papers)
    years = sorted(rng.randint(year_lo, year_hi) for _ in range(n))
    for y in years:
        g.add_paper(y, rng.choice(list(Field)))
    for _ in range(rng.randint(0, max_edges)):
        dst = rng.randrange(n)
        src = rng.randrange(dst, n)  # later insertion -> year(src) >= year(dst)
        if src == dst:
            continue
        try:
            g.add_citation(src, dst)
        except Exception:
            continue
    return g


def enumerate_sampling_probs(
    graph: CitationGraph, field: Field, year_max: int
) -> dict[int, float]:
    """Exact preferential-sampling distribution by brute-force enumeration.

    Walks every paper record directly; never touches the Fenwick index it
    is used to check.
    """
    weights: dict[int, float] = {}
    for paper in graph.papers():
        if paper.field is field and paper.year <= year_max:
            weights[paper.id] = len(graph.children_of(paper.id)) + 1
    total = sum(weights.values())
    return {pid: w / total for pid, w in weights.items()}


def empirical_frequencies(draw, n_draws: int) -> dict[int, float]:
    """Run `draw()` n_draws times and return normalized outcome frequencies."""
    counts = Counter(draw() for _ in range(n_draws))
    return {k: v / n_draws for k, v in counts.items()}


def max_abs_freq_error(probs: dict[int, float], freqs: dict[int, float]) -> float:
    keys = set(probs) | set(freqs)
    return max(abs(probs.get(k, 0.0) - freqs.get(k, 0.0)) for k in keys)


class RecordingRng:
    """Wraps random.Random, logging every (method, result) for replay."""

    def __init__(self, seed: int) -> None:
        self._rng = random.Random(seed)
        self.log: list[tuple[str, object]] = []

    def random(self) -> float:
        value = self._rng.random()
        self.log.append(("random", value))
        return value

    def randrange(self, n: int) -> int:
        value = self._rng.randrange(n)
        self.log.append(("randrange", value))
        return value


class ReplayRng:
    """Replays a RecordingRng log; raises if the call sequence diverges."""

    def __init__(self, log: list[tuple[str, object]]) -> None:
        self._log = list(log)
        self._cursor = 0

    def _next(self, method: str):
        if self._cursor >= len(self._log):
            raise AssertionError(f"replay exhausted at call {self._cursor} ({method})")
        name, value = self._log[self._cursor]
        if name != method:
            raise AssertionError(
                f"call {self._cursor}: expected {name}, got {method}"
            )
        self._cursor += 1
        return value

    def random(self) -> float:
        return self._next("random")

    def randrange(self, n: int) -> int:
        return self._next("randrange")


class StubRng:
    """Hand-scripted RNG: pops preloaded values per method.

    random() values drive Bernoulli draws and field selection; randrange(n)
    values drive weighted index draws (asserted to be in range).
    """

    def __init__(
        self,
        random_values: list[float] | None = None,
        randrange_values: list[int] | None = None,
    ) -> None:
        self._random = list(random_values or [])
        self._randrange = list(randrange_values or [])

    def random(self) -> float:
        if not self._random:
            raise AssertionError("StubRng ran out of random() values")
        return self._random.pop(0)

    def randrange(self, n: int) -> int:
        if not self._randrange:
            raise AssertionError("StubRng ran out of randrange() values")
        value = self._randrange.pop(0)
        assert 0 <= value < n, f"scripted randrange value {value} not in [0, {n})"
        return value

    def exhausted(self) -> bool:
        return not self._random and not self._randrange
