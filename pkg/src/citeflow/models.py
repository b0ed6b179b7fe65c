"""Destination-selection strategies for incoming papers.

Every strategy fills (up to) m outgoing edges for one incoming paper by
repeating a sampling phase: draw a destination field from the empirical
conditional distribution, then resolve a concrete target. Strategies
differ in how they resolve targets and in what happens after a pick:

* plain preferential choice in the drawn field (PA);
* copying the pick's references into the remaining budget (ICP copies
  same-field references and only when the pick's field matches the
  incoming paper; ACP and RACP copy across fields, with RACP sourcing
  out-field picks from the pool of papers the incoming field has already
  cited, falling back to the field's top-cited list);
* relaying a pick along its citers when it is deemed obsolete (the
  IPRC family), where obsolescence at age a fires with probability
  1 - exp(-lambda * a) and a relay then proceeds with probability theta.

Duplicate targets are skipped and sampling continues; a paper that cannot
fill its budget within 50 * m attempts is emitted short. All randomness
flows through the caller's generator via `random()` and `randrange(n)`
calls only, so a recorded stream replays bit-identically. With theta = 0 a
relay walk returns immediately without consuming randomness, which makes
the relay models collapse exactly onto their relay-free counterparts.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

from citeflow.graph import (
    CitationGraph,
    EmptyCandidateSetError,
    Field,
    REPORTABLE_FIELDS,
)
from citeflow.ingest import EmpiricalStats

#: Hard cap on sampling attempts per incoming paper, as a multiple of m.
ATTEMPT_CAP_FACTOR = 50


class ModelKind(str, Enum):
    PA = "pa"
    ICP = "icp"
    ACP = "acp"
    RACP = "racp"
    IIPRC = "iiprc"
    OIPRC = "oiprc"
    BIPRC = "biprc"
    CIPRC = "ciprc"


class CopyMode(Enum):
    SAME_FIELD = "same-field-only"
    ALL_FIELDS = "all-fields"


class UndefinedDistributionError(Exception):
    """No destination-field distribution exists for the source field."""


@dataclass(frozen=True)
class ModelParams:
    kind: ModelKind
    m: int = 8
    theta_in: float = 1.0
    lambda_in: float = 1.0
    theta_out: float = 1.0
    lambda_out: float = 1.0
    max_relay_depth: int = 100
    top_cited_k: int = 100
    iiprc_global_pool: bool = False

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        for name in ("theta_in", "theta_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("lambda_in", "lambda_out"):
            v = getattr(self, name)
            if v < 0.0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.max_relay_depth < 1:
            raise ValueError(f"max_relay_depth must be >= 1, got {self.max_relay_depth}")
        if self.top_cited_k < 1:
            raise ValueError(f"top_cited_k must be >= 1, got {self.top_cited_k}")


@dataclass(frozen=True)
class IncomingPaper:
    field: Field
    year: int

    def __post_init__(self) -> None:
        if self.field is Field.OTHER:
            raise ValueError("incoming papers must belong to a reportable field")


@dataclass
class RunCounters:
    """Tallies of notable events across one simulation run."""

    relay_events: int = 0
    copy_events: int = 0
    fallback_events: int = 0
    dropped_edges: int = 0
    short_papers: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "relay_events": self.relay_events,
            "copy_events": self.copy_events,
            "fallback_events": self.fallback_events,
            "dropped_edges": self.dropped_edges,
            "short_papers": self.short_papers,
        }


class StepState:
    """Cross-paper memory for the global variant of the IPRC step-1 pool.

    By default the step-1 out-field pool covers only the in-field picks of
    the current incoming paper; with the global switch it accumulates the
    out-field references of every in-field pick made during the run.
    """

    def __init__(self) -> None:
        self._pools: dict[tuple[Field, Field], list[int]] = {}
        self._seen: dict[tuple[Field, Field], set[int]] = {}

    def record_infield_pick(
        self, graph: CitationGraph, incoming_field: Field, dest: int
    ) -> None:
        for ref in graph.refs_of(dest):
            ref_field = graph.field_of(ref)
            if ref_field is incoming_field or ref_field is Field.OTHER:
                continue
            key = (incoming_field, ref_field)
            seen = self._seen.setdefault(key, set())
            if ref not in seen:
                seen.add(ref)
                self._pools.setdefault(key, []).append(ref)

    def pool(self, incoming_field: Field, target_field: Field) -> list[int]:
        return self._pools.get((incoming_field, target_field), [])


def weighted_choice(items, weights, rng: random.Random):
    """Draw one item with probability proportional to its integer weight."""
    total = sum(weights)
    if total <= 0:
        raise EmptyCandidateSetError("all candidate weights are zero")
    target = rng.randrange(total)
    acc = 0
    for item, w in zip(items, weights):
        acc += w
        if target < acc:
            return item
    raise AssertionError("unreachable: target below total weight")


def sample_dest_field(
    src_field: Field, stats: EmpiricalStats, rng: random.Random
) -> Field:
    """Draw a destination field from the source-conditional distribution."""
    dist = stats.dest_field_dist.get(src_field)
    if dist is None:
        raise UndefinedDistributionError(
            f"no destination-field distribution for {src_field.value}"
        )
    u = rng.random()
    acc = 0.0
    for f in REPORTABLE_FIELDS:
        acc += dist.get(f, 0.0)
        if u < acc:
            return f
    for f in reversed(REPORTABLE_FIELDS):  # guard against float undershoot
        if dist.get(f, 0.0) > 0.0:
            return f
    raise UndefinedDistributionError(
        f"destination-field distribution for {src_field.value} has no mass"
    )


def copy_references(
    graph: CitationGraph, dest: int, mode: CopyMode, budget: int
) -> list[int]:
    """Up to `budget` of dest's references, in order, deduplicated.

    SAME_FIELD keeps references sharing dest's field; ALL_FIELDS keeps any
    reportable field. OTHER references are never copied: they are outside
    every model candidate set.
    """
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    dest_field = graph.field_of(dest)
    out: list[int] = []
    seen: set[int] = set()
    for ref in graph.refs_of(dest):
        if len(out) >= budget:
            break
        if ref in seen:
            continue
        ref_field = graph.field_of(ref)
        if ref_field is Field.OTHER:
            continue
        if mode is CopyMode.SAME_FIELD and ref_field is not dest_field:
            continue
        seen.add(ref)
        out.append(ref)
    return out


def relay_walk(
    graph: CitationGraph,
    v0: int,
    t_now: int,
    theta: float,
    lam: float,
    field_constraint: Field | None,
    rng: random.Random,
    max_depth: int = 100,
    counters: RunCounters | None = None,
) -> int:
    """Follow citers away from an obsolete paper; return the landing paper.

    At each node of age a = t_now - year, obsolescence fires with
    probability 1 - exp(-lam * a); if it does, the link relays with
    probability theta to a child (a citer) chosen preferentially among
    those matching the field constraint and dated <= t_now. The walk stops
    at the first non-obsolete, non-relaying, or childless node, or after
    max_depth hops. theta = 0 short-circuits without consuming randomness.
    """
    if graph.year_of(v0) > t_now:
        raise ValueError(f"paper {v0} is newer than the walk's reference year {t_now}")
    if theta <= 0.0:
        return v0
    v = v0
    for _ in range(max_depth):
        age = t_now - graph.year_of(v)
        p_obsolete = -math.expm1(-lam * age)
        if rng.random() >= p_obsolete:
            return v
        if rng.random() >= theta:
            return v
        kids = [
            c for c in graph.children_of(v, field_constraint) if graph.year_of(c) <= t_now
        ]
        if not kids:
            return v
        weights = [graph.in_degree_of(c) + 1 for c in kids]
        v = weighted_choice(kids, weights, rng)
        if counters is not None:
            counters.relay_events += 1
    return v


# -- shared step plumbing -----------------------------------------------------


def _reachable_total(
    graph: CitationGraph,
    incoming: IncomingPaper,
    stats: EmpiricalStats,
    all_fields: bool,
) -> int:
    """Upper bound on distinct reachable targets, for early loop exit."""
    dist = stats.dest_field_dist.get(incoming.field, {})
    total = 0
    for f in REPORTABLE_FIELDS:
        if all_fields or dist.get(f, 0.0) > 0.0:
            total += graph.field_size(f, incoming.year)
    return total


def _relay_params(params: ModelParams, infield: bool) -> tuple[float, float]:
    if infield:
        return params.theta_in, params.lambda_in
    return params.theta_out, params.lambda_out


def _note_short(counters: RunCounters | None, selected: list[int], params: ModelParams) -> None:
    if counters is not None and len(selected) < params.m:
        counters.short_papers += 1


def _copy_into(
    graph: CitationGraph,
    dest: int,
    mode: CopyMode,
    selected: list[int],
    chosen: set[int],
    m: int,
    counters: RunCounters | None,
) -> None:
    room = m - len(selected)
    if room <= 0:
        return
    for ref in copy_references(graph, dest, mode, room):
        if len(selected) >= m:
            break
        if ref in chosen:
            continue
        chosen.add(ref)
        selected.append(ref)
        if counters is not None:
            counters.copy_events += 1


def _preferential_fill(graph, incoming, params, stats, rng, counters, relay: bool):
    selected: list[int] = []
    chosen: set[int] = set()
    goal = min(params.m, _reachable_total(graph, incoming, stats, all_fields=False))
    cap = ATTEMPT_CAP_FACTOR * params.m
    attempts = 0
    while len(selected) < goal and attempts < cap:
        attempts += 1
        field = sample_dest_field(incoming.field, stats, rng)
        try:
            v = graph.preferential_sample(field, incoming.year, rng)
        except EmptyCandidateSetError:
            continue
        if relay:
            theta, lam = _relay_params(params, field is incoming.field)
            v = relay_walk(
                graph, v, incoming.year, theta, lam, field, rng,
                params.max_relay_depth, counters,
            )
        if v in chosen:
            continue
        chosen.add(v)
        selected.append(v)
    _note_short(counters, selected, params)
    return selected


def _select_outfield_from_pools(
    graph: CitationGraph,
    incoming_field: Field,
    target_field: Field,
    infield_selected: list[int],
    state: StepState | None,
    rng: random.Random,
    counters: RunCounters | None,
) -> int | None:
    """Two-step out-field pick for the IPRC family; None when both pools fail."""
    if state is not None:
        pool1 = state.pool(incoming_field, target_field)
    else:
        pool1 = []
        seen: set[int] = set()
        for d in infield_selected:
            for ref in graph.refs_of(d):
                if ref not in seen and graph.field_of(ref) is target_field:
                    seen.add(ref)
                    pool1.append(ref)
    if pool1:
        weights = [graph.in_degree_of(p) + 1 for p in pool1]
        return weighted_choice(pool1, weights, rng)
    pool2 = graph.cross_pool(incoming_field, target_field)
    if len(pool2):
        if counters is not None:
            counters.fallback_events += 1
        return pool2.sample(rng)
    return None


# -- the eight models ---------------------------------------------------------


def pa_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """Preferential attachment: field draw, then in-degree-weighted pick."""
    return _preferential_fill(graph, incoming, params, stats, rng, counters, relay=False)


def icp_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """In-field copying: on a field match, adopt the pick's same-field refs."""
    selected: list[int] = []
    chosen: set[int] = set()
    goal = min(params.m, _reachable_total(graph, incoming, stats, all_fields=False))
    cap = ATTEMPT_CAP_FACTOR * params.m
    attempts = 0
    while len(selected) < goal and attempts < cap:
        attempts += 1
        field = sample_dest_field(incoming.field, stats, rng)
        try:
            v = graph.preferential_sample(field, incoming.year, rng)
        except EmptyCandidateSetError:
            continue
        if v not in chosen:
            chosen.add(v)
            selected.append(v)
        if field is incoming.field:
            _copy_into(graph, v, CopyMode.SAME_FIELD, selected, chosen, params.m, counters)
    _note_short(counters, selected, params)
    return selected


def acp_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """All-field copying: adopt every pick's references regardless of field."""
    selected: list[int] = []
    chosen: set[int] = set()
    goal = min(params.m, _reachable_total(graph, incoming, stats, all_fields=True))
    cap = ATTEMPT_CAP_FACTOR * params.m
    attempts = 0
    while len(selected) < goal and attempts < cap:
        attempts += 1
        field = sample_dest_field(incoming.field, stats, rng)
        try:
            v = graph.preferential_sample(field, incoming.year, rng)
        except EmptyCandidateSetError:
            continue
        if v not in chosen:
            chosen.add(v)
            selected.append(v)
        _copy_into(graph, v, CopyMode.ALL_FIELDS, selected, chosen, params.m, counters)
    _note_short(counters, selected, params)
    return selected


def racp_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """ACP with restricted out-field picks: the already-cited pool, then
    the field's top-cited list when that pool is empty."""
    selected: list[int] = []
    chosen: set[int] = set()
    goal = min(params.m, _reachable_total(graph, incoming, stats, all_fields=True))
    cap = ATTEMPT_CAP_FACTOR * params.m
    attempts = 0
    while len(selected) < goal and attempts < cap:
        attempts += 1
        field = sample_dest_field(incoming.field, stats, rng)
        if field is incoming.field:
            try:
                v = graph.preferential_sample(field, incoming.year, rng)
            except EmptyCandidateSetError:
                continue
        else:
            pool = graph.cross_pool(incoming.field, field)
            if len(pool):
                v = pool.sample(rng)
            else:
                top = [
                    p
                    for p in stats.top_cited.get(field, [])[: params.top_cited_k]
                    if graph.year_of(p) <= incoming.year
                ]
                if not top:
                    continue
                if counters is not None:
                    counters.fallback_events += 1
                v = weighted_choice(top, [graph.in_degree_of(p) + 1 for p in top], rng)
        if v not in chosen:
            chosen.add(v)
            selected.append(v)
        _copy_into(graph, v, CopyMode.ALL_FIELDS, selected, chosen, params.m, counters)
    _note_short(counters, selected, params)
    return selected


def iiprc_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """Relay in-field picks only; out-field picks come from reference pools."""
    selected: list[int] = []
    chosen: set[int] = set()
    infield_selected: list[int] = []
    goal = params.m  # shrinks when an out-field edge is dropped
    cap = ATTEMPT_CAP_FACTOR * params.m
    attempts = 0
    while len(selected) < goal and attempts < cap:
        attempts += 1
        field = sample_dest_field(incoming.field, stats, rng)
        if field is incoming.field:
            try:
                v = graph.preferential_sample(field, incoming.year, rng)
            except EmptyCandidateSetError:
                continue
            v = relay_walk(
                graph, v, incoming.year, params.theta_in, params.lambda_in,
                field, rng, params.max_relay_depth, counters,
            )
            if v in chosen:
                continue
            chosen.add(v)
            selected.append(v)
            infield_selected.append(v)
            if state is not None:
                state.record_infield_pick(graph, incoming.field, v)
        else:
            v = _select_outfield_from_pools(
                graph, incoming.field, field, infield_selected, state, rng, counters
            )
            if v is None:
                goal -= 1
                if counters is not None:
                    counters.dropped_edges += 1
                continue
            if v in chosen:
                continue
            chosen.add(v)
            selected.append(v)
    _note_short(counters, selected, params)
    return selected


def oiprc_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """IIPRC with an additional relay applied to every out-field pick."""
    selected: list[int] = []
    chosen: set[int] = set()
    infield_selected: list[int] = []
    goal = params.m  # shrinks when an out-field edge is dropped
    cap = ATTEMPT_CAP_FACTOR * params.m
    attempts = 0
    while len(selected) < goal and attempts < cap:
        attempts += 1
        field = sample_dest_field(incoming.field, stats, rng)
        if field is incoming.field:
            try:
                v = graph.preferential_sample(field, incoming.year, rng)
            except EmptyCandidateSetError:
                continue
            v = relay_walk(
                graph, v, incoming.year, params.theta_in, params.lambda_in,
                field, rng, params.max_relay_depth, counters,
            )
            if v in chosen:
                continue
            chosen.add(v)
            selected.append(v)
            infield_selected.append(v)
            if state is not None:
                state.record_infield_pick(graph, incoming.field, v)
        else:
            v = _select_outfield_from_pools(
                graph, incoming.field, field, infield_selected, state, rng, counters
            )
            if v is None:
                goal -= 1
                if counters is not None:
                    counters.dropped_edges += 1
                continue
            v = relay_walk(
                graph, v, incoming.year, params.theta_out, params.lambda_out,
                field, rng, params.max_relay_depth, counters,
            )
            if v in chosen:
                continue
            chosen.add(v)
            selected.append(v)
    _note_short(counters, selected, params)
    return selected


def biprc_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """Plain preferential picks in both directions, each followed by a relay."""
    return _preferential_fill(graph, incoming, params, stats, rng, counters, relay=True)


def ciprc_step(graph, incoming, params, stats, rng, *, counters=None, state=None):
    """IIPRC's relayed in-field picks fused with ICP's copy-on-match rule;
    out-field picks are plain preferential draws contributing one node."""
    selected: list[int] = []
    chosen: set[int] = set()
    goal = min(params.m, _reachable_total(graph, incoming, stats, all_fields=False))
    cap = ATTEMPT_CAP_FACTOR * params.m
    attempts = 0
    while len(selected) < goal and attempts < cap:
        attempts += 1
        field = sample_dest_field(incoming.field, stats, rng)
        try:
            v = graph.preferential_sample(field, incoming.year, rng)
        except EmptyCandidateSetError:
            continue
        if field is incoming.field:
            v = relay_walk(
                graph, v, incoming.year, params.theta_in, params.lambda_in,
                field, rng, params.max_relay_depth, counters,
            )
            if v not in chosen:
                chosen.add(v)
                selected.append(v)
            _copy_into(graph, v, CopyMode.SAME_FIELD, selected, chosen, params.m, counters)
        else:
            if v not in chosen:
                chosen.add(v)
                selected.append(v)
    _note_short(counters, selected, params)
    return selected


STEP_FUNCS = {
    ModelKind.PA: pa_step,
    ModelKind.ICP: icp_step,
    ModelKind.ACP: acp_step,
    ModelKind.RACP: racp_step,
    ModelKind.IIPRC: iiprc_step,
    ModelKind.OIPRC: oiprc_step,
    ModelKind.BIPRC: biprc_step,
    ModelKind.CIPRC: ciprc_step,
}
