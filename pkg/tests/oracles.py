"""Independent brute-force reference implementations.

These oracles re-derive extraction results from the raw on-disk dataset
files (samples.idx plus trace files) with their own minimal parser and
per-sample loops.  They deliberately share no code with the library so
that agreement between the two is meaningful evidence.
"""

import math
from pathlib import Path

COUNTABLE = ("crash", "noncrash")
VALUE_EQ_MAX_DISTINCT = 16


def read_raw_dataset(dataset_dir):
    """Parse a dataset directory into plain dicts, one per sample:
    {kind, born_at, blocks: {id: hits}, values: {id: [v, ...]}}."""
    root = Path(dataset_dir)
    samples = []
    for raw in (root / "samples.idx").read_text().splitlines():
        if not raw.strip():
            continue
        _, born_at, verdict, _, trace_rel = raw.split()
        kind = verdict.split(":")[0].lower()
        lines = (root / trace_rel).read_text().splitlines()
        assert lines[0] == "RCAB1", f"bad trace header in {trace_rel}"
        blocks = {}
        values = {}
        for line in lines[1:]:
            parts = line.split()
            if parts[0] == "B":
                bid = int(parts[1])
                blocks[bid] = blocks.get(bid, 0) + 1
            elif parts[0] == "V":
                values.setdefault(int(parts[1]), []).append(int(parts[2]))
        samples.append(
            {"kind": kind, "born_at": int(born_at), "blocks": blocks, "values": values}
        )
    return samples


def _countable(samples):
    return [s for s in samples if s["kind"] in COUNTABLE]


def _ids_per_location(block_map):
    ids_of = {}
    for site_id, file, line, *_ in block_map:
        ids_of.setdefault((file, line), set()).add(site_id)
    return ids_of


def ochiai_ranking(dataset_dir, block_map, cap):
    """Reference spectrum ranking.

    block_map: iterable of (site_id, file, line[, conditional]) tuples.
    Returns [((file, line), score)] in ranking order, truncated to cap.
    """
    samples = _countable(read_raw_dataset(dataset_dir))
    ids_of = _ids_per_location(block_map)
    n_crash = sum(1 for s in samples if s["kind"] == "crash")
    scored = []
    for (file, line), ids in ids_of.items():
        a_ef = a_ep = 0
        for s in samples:
            executed = any(b in s["blocks"] for b in ids)
            if not executed:
                continue
            if s["kind"] == "crash":
                a_ef += 1
            else:
                a_ep += 1
        a_nf = n_crash - a_ef
        if a_ef == 0:
            score = 0.0
        else:
            score = a_ef / math.sqrt((a_ef + a_nf) * (a_ef + a_ep))
        scored.append((score, file, line))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    return [((file, line), score) for score, file, line in scored[:cap]]


def _predicate_candidates(samples, site_id):
    """Every candidate predicate for one site, as evaluator closures."""
    hit_counts = set()
    values = set()
    for s in samples:
        hits = s["blocks"].get(site_id, 0)
        if hits:
            hit_counts.add(hits)
        values.update(s["values"].get(site_id, []))

    def executed(s):
        return s["blocks"].get(site_id, 0) >= 1

    candidates = [executed]
    for tau in sorted(hit_counts):
        candidates.append(
            lambda s, t=tau: s["blocks"].get(site_id, 0) >= t
        )
    distinct = sorted(values)
    for lo, hi in zip(distinct, distinct[1:]):
        midpoint = (lo + hi + 1) // 2
        candidates.append(
            lambda s, t=midpoint: any(v >= t for v in s["values"].get(site_id, []))
        )
    if 0 < len(distinct) <= VALUE_EQ_MAX_DISTINCT:
        for k in distinct:
            candidates.append(
                lambda s, t=k: t in s["values"].get(site_id, [])
            )
    return candidates


def balanced_accuracy_ranking(dataset_dir, block_map, cap):
    """Reference predicate-based location ranking.

    Enumerates every candidate predicate and threshold per site, scores
    each with polarity-maxed balanced accuracy and keeps the best score
    per location.  Returns [((file, line), score)] in ranking order.
    """
    samples = _countable(read_raw_dataset(dataset_dir))
    crash = [s for s in samples if s["kind"] == "crash"]
    noncrash = [s for s in samples if s["kind"] == "noncrash"]
    best = {}
    for site_id, file, line, *_ in block_map:
        loc = (file, line)
        for predicate in _predicate_candidates(samples, site_id):
            sat_crash = sum(1 for s in crash if predicate(s))
            unsat_noncrash = sum(1 for s in noncrash if not predicate(s))
            ba = 0.5 * (sat_crash / len(crash) + unsat_noncrash / len(noncrash))
            score = max(ba, 1.0 - ba)
            if score > best.get(loc, -1.0):
                best[loc] = score
    scored = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    return scored[:cap]
