"""Spectrum-based location extractor ("vulnloc").

Classic execution-spectrum scoring: for every mapped source location,
count in how many crashing / non-crashing samples it executed, then
score each location with the Ochiai suspiciousness ratio

    score = a_ef / sqrt((a_ef + a_nf) * (a_ef + a_ep))

where a_ef / a_ep are the crashing / non-crashing samples that executed
the location and a_nf / a_np those that did not.  Ochiai is the standard
bounded formula for this job; tools this extractor stands in for define
their own variants, so consult their publications when exact score
fidelity matters.  "Executed" is binary presence of any of the
location's block ids in the trace; hit counts are left to the
predicate extractor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from rcab.extract import build_ranking, group_by_trace
from rcab.harness import TargetSpec
from rcab.model import Dataset, Location, Ranking

DEFAULT_CAP = 200


@dataclass(frozen=True)
class LocationCounts:
    a_ef: int  # executed and crashed
    a_ep: int  # executed and did not crash
    a_nf: int  # not executed, crashed
    a_np: int  # not executed, did not crash


@dataclass(frozen=True)
class SpectrumCounts:
    counts: dict[Location, LocationCounts]
    n_crash: int
    n_noncrash: int


def spectrum_counts(dataset: Dataset, spec: TargetSpec) -> SpectrumCounts:
    """Exact execution counts for every mapped location.

    Raises DegenerateDatasetError when the dataset lacks one class.
    """
    groups, n_crash, n_noncrash = group_by_trace(dataset)
    id_to_loc = {s.id: s.location for s in spec.block_map}
    executed_crash: dict[Location, int] = {}
    executed_noncrash: dict[Location, int] = {}
    for group in groups:
        locs = {
            id_to_loc[b] for b in group.trace.hit_counts() if b in id_to_loc
        }
        for loc in locs:
            executed_crash[loc] = executed_crash.get(loc, 0) + group.n_crash
            executed_noncrash[loc] = executed_noncrash.get(loc, 0) + group.n_noncrash
    counts = {}
    for loc in spec.locations():
        a_ef = executed_crash.get(loc, 0)
        a_ep = executed_noncrash.get(loc, 0)
        counts[loc] = LocationCounts(
            a_ef=a_ef, a_ep=a_ep, a_nf=n_crash - a_ef, a_np=n_noncrash - a_ep
        )
    return SpectrumCounts(counts=counts, n_crash=n_crash, n_noncrash=n_noncrash)


def score(counts: LocationCounts) -> float:
    """Ochiai suspiciousness in [0, 1]; 0 whenever a_ef is 0."""
    if counts.a_ef == 0:
        return 0.0
    return counts.a_ef / math.sqrt(
        (counts.a_ef + counts.a_nf) * (counts.a_ef + counts.a_ep)
    )


def rank(dataset: Dataset, spec: TargetSpec, cap: int = DEFAULT_CAP) -> Ranking:
    """Score every mapped location and return the Top-`cap` ranking."""
    spectrum = spectrum_counts(dataset, spec)
    return build_ranking(
        {loc: score(c) for loc, c in spectrum.counts.items()}, cap
    )
