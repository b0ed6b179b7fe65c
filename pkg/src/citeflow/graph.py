"""Dynamic citation graph with in-degree-proportional sampling.

The graph grows append-only: papers arrive with non-decreasing publication
years per field, and citations always point backward (or sideways) in time.
Sampling a citation target "preferentially" means with probability
proportional to in_degree + 1, optionally restricted to one field and to
papers published no later than a cutoff year. The +1 keeps fresh,
never-cited papers reachable.

The year restriction exploits the append order: within a field the papers
form a year-sorted sequence, so the candidates under any cutoff are a
prefix of that sequence, and a Fenwick tree over the per-paper weights
answers prefix-weight queries and weighted draws in O(log n).
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass
from enum import Enum


class Field(str, Enum):
    """Research field tag. OTHER papers are citable but never sampled."""

    CS = "CS"
    MA = "MA"
    PHY = "PHY"
    OTHER = "OTHER"


#: The three fields that take part in sampling, statistics and signatures.
REPORTABLE_FIELDS = (Field.CS, Field.MA, Field.PHY)


class GraphError(Exception):
    """Base class for citation-graph contract violations."""


class YearOutOfRangeError(GraphError):
    pass


class UnknownPaperError(GraphError):
    pass


class SelfCitationError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class FutureTargetError(GraphError):
    pass


class EmptyCandidateSetError(GraphError):
    pass


@dataclass(frozen=True)
class Paper:
    """Read-only view of one paper's record."""

    id: int
    year: int
    field: Field
    refs: tuple[int, ...]
    origin: str


class FenwickTree:
    """Binary indexed tree over non-negative integer weights, append-only."""

    __slots__ = ("_tree",)

    def __init__(self) -> None:
        self._tree = [0]  # 1-based; slot 0 unused

    def __len__(self) -> int:
        return len(self._tree) - 1

    def append(self, weight: int) -> None:
        n = len(self._tree)
        s = weight
        step = 1
        while step < (n & -n):
            s += self._tree[n - step]
            step <<= 1
        self._tree.append(s)

    def add(self, index: int, delta: int) -> None:
        """Add delta to the weight at a 0-based position."""
        i = index + 1
        tree = self._tree
        size = len(tree)
        while i < size:
            tree[i] += delta
            i += i & -i

    def prefix_sum(self, count: int) -> int:
        """Total weight of the first `count` positions."""
        s = 0
        tree = self._tree
        i = count
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    def point_weight(self, index: int) -> int:
        return self.prefix_sum(index + 1) - self.prefix_sum(index)

    def find(self, target: int) -> int:
        """Smallest 0-based position p with prefix_sum(p + 1) > target.

        Requires 0 <= target < total weight.
        """
        tree = self._tree
        size = len(tree)
        pos = 0
        mask = 1 << (size.bit_length() - 1)
        rem = target
        while mask:
            nxt = pos + mask
            if nxt < size and tree[nxt] <= rem:
                pos = nxt
                rem -= tree[nxt]
            mask >>= 1
        return pos  # first position whose cumulative weight exceeds target

    def clone(self) -> FenwickTree:
        other = FenwickTree.__new__(FenwickTree)
        other._tree = self._tree.copy()
        return other


class WeightedIndex:
    """Per-field sampling index: year-ordered ids with Fenwick weights.

    Papers must be added with non-decreasing years so that any year cutoff
    selects a prefix of the stored sequence.
    """

    __slots__ = ("_ids", "_years", "_pos", "_tree")

    def __init__(self) -> None:
        self._ids: list[int] = []
        self._years: list[int] = []
        self._pos: dict[int, int] = {}
        self._tree = FenwickTree()

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, paper_id: int) -> bool:
        return paper_id in self._pos

    def add(self, paper_id: int, year: int, weight: int = 1) -> None:
        if self._years and year < self._years[-1]:
            raise YearOutOfRangeError(
                f"paper {paper_id} year {year} precedes last indexed year "
                f"{self._years[-1]}; index is append-only in year order"
            )
        self._pos[paper_id] = len(self._ids)
        self._ids.append(paper_id)
        self._years.append(year)
        self._tree.append(weight)

    def update(self, paper_id: int, delta: int) -> None:
        self._tree.add(self._pos[paper_id], delta)

    def weight_of(self, paper_id: int) -> int:
        return self._tree.point_weight(self._pos[paper_id])

    def candidate_count(self, year_max: int) -> int:
        return bisect.bisect_right(self._years, year_max)

    def total_weight(self, year_max: int | None = None) -> int:
        count = len(self._ids) if year_max is None else self.candidate_count(year_max)
        return self._tree.prefix_sum(count)

    def sample(self, year_max: int, rng: random.Random) -> int:
        """Draw an id with probability weight / total over papers dated <= year_max."""
        count = self.candidate_count(year_max)
        if count == 0:
            raise EmptyCandidateSetError(f"no candidates with year <= {year_max}")
        total = self._tree.prefix_sum(count)
        return self._ids[self._tree.find(rng.randrange(total))]

    def ids(self) -> list[int]:
        return self._ids.copy()

    def clone(self) -> WeightedIndex:
        other = WeightedIndex.__new__(WeightedIndex)
        other._ids = self._ids.copy()
        other._years = self._years.copy()
        other._pos = self._pos.copy()
        other._tree = self._tree.clone()
        return other


class SamplingPool:
    """Unordered-membership sampling pool without a year cutoff.

    Backs the per-(source field -> target field) sets of cross-cited papers;
    members join at their current weight and are re-weighted as citations
    accumulate.
    """

    __slots__ = ("_ids", "_pos", "_tree")

    def __init__(self) -> None:
        self._ids: list[int] = []
        self._pos: dict[int, int] = {}
        self._tree = FenwickTree()

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, paper_id: int) -> bool:
        return paper_id in self._pos

    def add(self, paper_id: int, weight: int) -> None:
        if paper_id in self._pos:
            raise ValueError(f"paper {paper_id} already pooled")
        self._pos[paper_id] = len(self._ids)
        self._ids.append(paper_id)
        self._tree.append(weight)

    def update(self, paper_id: int, delta: int) -> None:
        self._tree.add(self._pos[paper_id], delta)

    def weight_of(self, paper_id: int) -> int:
        return self._tree.point_weight(self._pos[paper_id])

    def sample(self, rng: random.Random) -> int:
        if not self._ids:
            raise EmptyCandidateSetError("empty sampling pool")
        total = self._tree.prefix_sum(len(self._ids))
        return self._ids[self._tree.find(rng.randrange(total))]

    def ids(self) -> list[int]:
        return self._ids.copy()

    def clone(self) -> SamplingPool:
        other = SamplingPool.__new__(SamplingPool)
        other._ids = self._ids.copy()
        other._pos = self._pos.copy()
        other._tree = self._tree.clone()
        return other


class CitationGraph:
    """Growing directed citation graph with per-field sampling indices.

    Single-writer: one simulation run owns the graph while mutating it.
    Reads are safe between mutations. `copy()` yields an independent graph
    for concurrent runs.
    """

    def __init__(self, year_range: tuple[int, int]) -> None:
        lo, hi = year_range
        if lo > hi:
            raise YearOutOfRangeError(f"empty year range {year_range}")
        self._year_lo = lo
        self._year_hi = hi
        self._years: list[int] = []
        self._fields: list[Field] = []
        self._origins: list[str] = []
        self._refs: list[list[int]] = []
        self._children: list[list[int]] = []
        self._in_degree: list[int] = []
        self._edge_set: set[tuple[int, int]] = set()
        self.edge_count = 0
        self._field_index: dict[Field, WeightedIndex] = {
            f: WeightedIndex() for f in REPORTABLE_FIELDS
        }
        self._cross_pools: dict[tuple[Field, Field], SamplingPool] = {
            (src, dst): SamplingPool()
            for src in REPORTABLE_FIELDS
            for dst in REPORTABLE_FIELDS
            if src is not dst
        }
        # per paper: pools the paper belongs to, for weight propagation
        self._pool_membership: dict[int, list[SamplingPool]] = {}

    # -- structure queries ------------------------------------------------

    def __len__(self) -> int:
        return len(self._years)

    @property
    def n_papers(self) -> int:
        return len(self._years)

    @property
    def year_range(self) -> tuple[int, int]:
        return (self._year_lo, self._year_hi)

    def _check_paper(self, paper_id: int) -> None:
        if not 0 <= paper_id < len(self._years):
            raise UnknownPaperError(f"no paper with id {paper_id}")

    def year_of(self, paper_id: int) -> int:
        self._check_paper(paper_id)
        return self._years[paper_id]

    def field_of(self, paper_id: int) -> Field:
        self._check_paper(paper_id)
        return self._fields[paper_id]

    def in_degree_of(self, paper_id: int) -> int:
        self._check_paper(paper_id)
        return self._in_degree[paper_id]

    def refs_of(self, paper_id: int) -> list[int]:
        self._check_paper(paper_id)
        return self._refs[paper_id].copy()

    def paper(self, paper_id: int) -> Paper:
        self._check_paper(paper_id)
        return Paper(
            id=paper_id,
            year=self._years[paper_id],
            field=self._fields[paper_id],
            refs=tuple(self._refs[paper_id]),
            origin=self._origins[paper_id],
        )

    def papers(self):
        """Yield Paper views in id order."""
        for pid in range(len(self._years)):
            yield self.paper(pid)

    def edges(self):
        """Yield (src, dst) pairs, src ascending, refs in insertion order."""
        for src, refs in enumerate(self._refs):
            for dst in refs:
                yield src, dst

    def field_size(self, field: Field, year_max: int | None = None) -> int:
        """Number of sampling candidates of `field` dated <= year_max."""
        index = self._field_index.get(field)
        if index is None:
            return 0
        if year_max is None:
            return len(index)
        return index.candidate_count(year_max)

    # -- mutation ----------------------------------------------------------

    def add_paper(self, year: int, field: Field, origin: str = "warmup") -> int:
        """Insert a new paper and return its dense id.

        Non-OTHER papers enter their field's sampling index with weight 1;
        per field, insertion years must be non-decreasing.
        """
        if not self._year_lo <= year <= self._year_hi:
            raise YearOutOfRangeError(
                f"year {year} outside configured range "
                f"[{self._year_lo}, {self._year_hi}]"
            )
        pid = len(self._years)
        index = self._field_index.get(field)
        if index is not None:
            index.add(pid, year, weight=1)
        self._years.append(year)
        self._fields.append(field)
        self._origins.append(origin)
        self._refs.append([])
        self._children.append([])
        self._in_degree.append(0)
        return pid

    def add_citation(self, src: int, dst: int) -> None:
        """Insert the edge src -> dst and propagate the weight bump."""
        if src == dst:
            raise SelfCitationError(f"paper {src} cannot cite itself")
        self._check_paper(src)
        self._check_paper(dst)
        if self._years[dst] > self._years[src]:
            raise FutureTargetError(
                f"paper {src} ({self._years[src]}) cannot cite "
                f"{dst} published later ({self._years[dst]})"
            )
        if (src, dst) in self._edge_set:
            raise DuplicateEdgeError(f"edge {src} -> {dst} already present")
        self._edge_set.add((src, dst))
        self._refs[src].append(dst)
        self._children[dst].append(src)
        self._in_degree[dst] += 1
        self.edge_count += 1

        dst_field = self._fields[dst]
        index = self._field_index.get(dst_field)
        if index is not None:
            index.update(dst, +1)
        for pool in self._pool_membership.get(dst, ()):
            pool.update(dst, +1)

        src_field = self._fields[src]
        if (
            src_field is not Field.OTHER
            and dst_field is not Field.OTHER
            and src_field is not dst_field
        ):
            pool = self._cross_pools[(src_field, dst_field)]
            if dst not in pool:
                pool.add(dst, self._in_degree[dst] + 1)
                self._pool_membership.setdefault(dst, []).append(pool)

    def extend_year_range(self, year_hi: int) -> None:
        """Raise the upper year bound (simulation growing past warm-up)."""
        if year_hi > self._year_hi:
            self._year_hi = year_hi

    # -- sampling ----------------------------------------------------------

    def preferential_sample(
        self, field: Field, year_max: int, rng: random.Random
    ) -> int:
        """Draw a paper of `field` dated <= year_max, P(v) = (deg(v)+1)/total."""
        index = self._field_index.get(field)
        if index is None:
            raise EmptyCandidateSetError(f"field {field.value} is not sampleable")
        return index.sample(year_max, rng)

    def children_of(self, paper_id: int, field_filter: Field | None = None) -> list[int]:
        """Citers of a paper in insertion order, optionally one field only."""
        self._check_paper(paper_id)
        kids = self._children[paper_id]
        if field_filter is None:
            return kids.copy()
        fields = self._fields
        return [c for c in kids if fields[c] is field_filter]

    def cross_pool(self, src_field: Field, dst_field: Field) -> SamplingPool:
        """Papers of dst_field already cited by any paper of src_field."""
        return self._cross_pools[(src_field, dst_field)]

    def sampling_weight_of(self, paper_id: int) -> int:
        """Stored sampling weight; raises KeyError for unindexed papers."""
        index = self._field_index.get(self._fields[paper_id])
        if index is None or paper_id not in index:
            raise KeyError(f"paper {paper_id} is not in a sampling index")
        return index.weight_of(paper_id)

    # -- copying -----------------------------------------------------------

    def copy(self) -> CitationGraph:
        """Independent deep copy; safe to grow concurrently with the original."""
        other = CitationGraph.__new__(CitationGraph)
        other._year_lo = self._year_lo
        other._year_hi = self._year_hi
        other._years = self._years.copy()
        other._fields = self._fields.copy()
        other._origins = self._origins.copy()
        other._refs = [r.copy() for r in self._refs]
        other._children = [c.copy() for c in self._children]
        other._in_degree = self._in_degree.copy()
        other._edge_set = self._edge_set.copy()
        other.edge_count = self.edge_count
        other._field_index = {f: ix.clone() for f, ix in self._field_index.items()}
        other._cross_pools = {k: p.clone() for k, p in self._cross_pools.items()}
        pool_of = {id(p): other._cross_pools[k] for k, p in self._cross_pools.items()}
        other._pool_membership = {
            pid: [pool_of[id(p)] for p in pools]
            for pid, pools in self._pool_membership.items()
        }
        return other
