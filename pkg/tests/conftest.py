"""Shared fixtures: a small synthetic corpus prepared once per session."""

from __future__ import annotations

import io

import pytest

from citeflow.engine import build_warmup
from citeflow.ingest import compute_stats, filter_min_refs, load_corpus
from citeflow.synth import synth_corpus

WARMUP_RANGE = (1995, 2009)
SIM_RANGE = (2010, 2017)


def corpus_from_rows(paper_rows, edge_rows):
    papers = io.StringIO(
        "id,year,field,subfield\n"
        + "".join(f"{i},{y},{f},{s}\n" for i, y, f, s in paper_rows)
    )
    edges = io.StringIO("src,dst\n" + "".join(f"{s},{d}\n" for s, d in edge_rows))
    return load_corpus(papers, edges)


@pytest.fixture(scope="session")
def small_corpus():
    """~1.5k-paper synthetic corpus, filtered, spanning 1995-2017."""
    paper_rows, edge_rows = synth_corpus(n_papers=1500, seed=13)
    corpus = corpus_from_rows(paper_rows, edge_rows)
    return filter_min_refs(corpus, 5)


@pytest.fixture(scope="session")
def small_stats(small_corpus):
    return compute_stats(small_corpus, WARMUP_RANGE)


@pytest.fixture(scope="session")
def small_warmup(small_corpus):
    return build_warmup(small_corpus, WARMUP_RANGE)
