"""Predicate-synthesis extractor ("aurora").

Builds simple Boolean predicates over trace observations per site:

    Executed            the site appears in the trace
    HitCountGE(t)       the site appears at least t times
    ValueGE(t)          some value recorded at the site is >= t
    ValueEQ(k)          some value recorded at the site equals k

and scores each by balanced accuracy: the mean of the crashing-sample
fraction satisfying it and the non-crashing fraction violating it, taking
the better polarity of the predicate and its negation (so every score
lands in [0.5, 1.0] and is robust to class imbalance).  A location's
score is the best predicate at any of its sites.  Predicates themselves
are emitted for human inspection only; rankings compare locations.

Threshold candidates are finite and complete for step functions of the
empirical value distributions: HitCountGE at every observed count,
ValueGE at the midpoints between consecutive distinct observed values.
ValueEQ is synthesized only for low-cardinality sites (<= 16 distinct
observed values) to bound the predicate count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from rcab.extract import TraceGroup, build_ranking, group_by_trace
from rcab.harness import TargetSpec
from rcab.model import BlockSite, Dataset, Location, Ranking, Trace

DEFAULT_CAP = 200
VALUE_EQ_MAX_DISTINCT = 16


class PredicateForm(Enum):
    EXECUTED = "executed"
    HIT_COUNT_GE = "hitcount_ge"
    VALUE_GE = "value_ge"
    VALUE_EQ = "value_eq"


@dataclass(frozen=True)
class Predicate:
    site: BlockSite
    form: PredicateForm
    threshold: int | None = None
    polarity: str = "asis"  # "asis" | "negated"

    def __str__(self) -> str:
        base = {
            PredicateForm.EXECUTED: f"executed(site {self.site.id})",
            PredicateForm.HIT_COUNT_GE: f"hits(site {self.site.id}) >= {self.threshold}",
            PredicateForm.VALUE_GE: f"value(site {self.site.id}) >= {self.threshold}",
            PredicateForm.VALUE_EQ: f"value(site {self.site.id}) == {self.threshold}",
        }[self.form]
        return f"not [{base}]" if self.polarity == "negated" else base


@dataclass(frozen=True)
class PredicateScore:
    predicate: Predicate
    score: float

    def __post_init__(self):
        if not 0.5 <= self.score <= 1.0 + 1e-12:
            raise ValueError(f"polarity-maxed score must be in [0.5, 1]: {self.score}")


@dataclass(frozen=True)
class _SiteFeatures:
    """Per-trace observation summary for one site."""

    hits: int
    max_value: int | None
    values: frozenset[int]


def _features(trace: Trace, site_id: int) -> _SiteFeatures:
    hits = trace.hit_counts().get(site_id, 0)
    values = trace.values_by_site().get(site_id, [])
    return _SiteFeatures(
        hits=hits,
        max_value=max(values) if values else None,
        values=frozenset(values),
    )


def satisfies(predicate: Predicate, trace: Trace) -> bool:
    """Evaluate the predicate (ignoring polarity) on one trace."""
    return _satisfies_features(predicate, _features(trace, predicate.site.id))


def _satisfies_features(predicate: Predicate, feats: "_SiteFeatures") -> bool:
    if predicate.form is PredicateForm.EXECUTED:
        return feats.hits >= 1
    if predicate.form is PredicateForm.HIT_COUNT_GE:
        return feats.hits >= predicate.threshold
    if predicate.form is PredicateForm.VALUE_GE:
        return feats.max_value is not None and feats.max_value >= predicate.threshold
    return predicate.threshold in feats.values


def synthesize(dataset: Dataset, spec: TargetSpec) -> list[Predicate]:
    """Candidate predicates for every site, from observed behavior only."""
    groups, _, _ = group_by_trace(dataset)
    predicates: list[Predicate] = []
    for site in spec.block_map:
        hit_counts: set[int] = set()
        values: set[int] = set()
        for group in groups:
            feats = _features(group.trace, site.id)
            if feats.hits:
                hit_counts.add(feats.hits)
            values |= feats.values
        predicates.append(Predicate(site, PredicateForm.EXECUTED))
        for tau in sorted(hit_counts):
            predicates.append(Predicate(site, PredicateForm.HIT_COUNT_GE, tau))
        distinct = sorted(values)
        for lo, hi in zip(distinct, distinct[1:]):
            midpoint = (lo + hi + 1) // 2
            predicates.append(Predicate(site, PredicateForm.VALUE_GE, midpoint))
        if 0 < len(distinct) <= VALUE_EQ_MAX_DISTINCT:
            for k in distinct:
                predicates.append(Predicate(site, PredicateForm.VALUE_EQ, k))
    return predicates


def _balanced_accuracy(
    groups: list[TraceGroup], n_crash: int, n_noncrash: int, predicate: Predicate
) -> float:
    sat_crash = 0
    sat_noncrash = 0
    for group in groups:
        if satisfies(predicate, group.trace):
            sat_crash += group.n_crash
            sat_noncrash += group.n_noncrash
    return 0.5 * (sat_crash / n_crash + (n_noncrash - sat_noncrash) / n_noncrash)


def score_predicate(predicate: Predicate, dataset: Dataset) -> PredicateScore:
    """Balanced accuracy, maximized over the predicate and its negation."""
    groups, n_crash, n_noncrash = group_by_trace(dataset)
    return _score_grouped(groups, n_crash, n_noncrash, predicate)


def _score_grouped(groups, n_crash, n_noncrash, predicate) -> PredicateScore:
    ba = _balanced_accuracy(groups, n_crash, n_noncrash, predicate)
    if ba >= 0.5:
        return PredicateScore(predicate, ba)
    return PredicateScore(replace(predicate, polarity="negated"), 1.0 - ba)


def score_all(dataset: Dataset, spec: TargetSpec) -> list[PredicateScore]:
    """Synthesize and score every candidate predicate.

    Site features are precomputed once per unique trace so the cost is
    O(sites x groups + predicates x groups), not O(predicates x trace).
    """
    groups, n_crash, n_noncrash = group_by_trace(dataset)
    feature_table: dict[int, list[_SiteFeatures]] = {
        site.id: [_features(g.trace, site.id) for g in groups]
        for site in spec.block_map
    }
    scores = []
    for predicate in synthesize(dataset, spec):
        feats = feature_table[predicate.site.id]
        sat_crash = 0
        sat_noncrash = 0
        for group, f in zip(groups, feats):
            if _satisfies_features(predicate, f):
                sat_crash += group.n_crash
                sat_noncrash += group.n_noncrash
        ba = 0.5 * (sat_crash / n_crash + (n_noncrash - sat_noncrash) / n_noncrash)
        if ba >= 0.5:
            scores.append(PredicateScore(predicate, ba))
        else:
            scores.append(
                PredicateScore(replace(predicate, polarity="negated"), 1.0 - ba)
            )
    return scores


def rank_locations(scores: list[PredicateScore], cap: int = DEFAULT_CAP) -> Ranking:
    """Each location's score is its best predicate's score."""
    best: dict[Location, float] = {}
    for ps in scores:
        loc = ps.predicate.site.location
        if ps.score > best.get(loc, -1.0):
            best[loc] = ps.score
    return build_ranking(best, cap)


def rank(dataset: Dataset, spec: TargetSpec, cap: int = DEFAULT_CAP) -> Ranking:
    return rank_locations(score_all(dataset, spec), cap)
