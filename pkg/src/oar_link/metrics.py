"""Scene-graph fidelity metrics and trial aggregation."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .ged import GedCosts, ged
from .graph import OarGraph

OBJ_KS = (5, 10, 20)
REL_KS = (10, 15, 20, 50)
ALIGN_COS_WEIGHT = 10.0

METRIC_COLUMNS = tuple(
    [c for k in OBJ_KS for c in (f"obj_r@{k}", f"obj_p@{k}")]
    + [c for k in REL_KS for c in (f"rel_r@{k}", f"rel_mr@{k}")]
    + ["ged_raw", "ged_norm", "d_align"]
)


@dataclass(frozen=True)
class RankedPredictions:
    objects: tuple[tuple[int, float], ...]
    triplets: tuple[tuple[tuple[int, int, int], float], ...]

    @classmethod
    def from_graph(cls, g: OarGraph) -> "RankedPredictions":
        cats = {n.slot: n.category for n in g.nodes}
        objs = sorted(((n.category, n.confidence) for n in g.nodes), key=lambda t: -t[1])
        trips = sorted((((cats[e.subject_slot], e.predicate, cats[e.object_slot]), e.confidence)
                        for e in g.edges), key=lambda t: -t[1])
        return cls(tuple(objs), tuple(trips))


def gt_objects(g: OarGraph) -> list[int]:
    return [n.category for n in g.nodes]


def gt_triplets(g: OarGraph) -> list[tuple[int, int, int]]:
    cats = {n.slot: n.category for n in g.nodes}
    return [(cats[e.subject_slot], e.predicate, cats[e.object_slot]) for e in g.edges]


def _match_top_k(gt: Iterable[Hashable], pred: Sequence, k: int) -> tuple[int, int, list]:
    remaining = Counter(gt)
    top = [item for item, _ in pred[:k]]
    matched = []
    for item in top:
        if remaining[item] > 0:
            remaining[item] -= 1
            matched.append(item)
    return len(matched), len(top), matched


def recall_precision_at_k(gt: Sequence[Hashable], pred: Sequence[tuple[Hashable, float]],
                          k: int) -> tuple[float, float]:
    """Recall and precision of the ``k`` highest-ranked predictions.

    Each ground-truth item can be matched once. Empty ground truth has
    recall 1; an empty prediction list has precision 0 unless the ground
    truth is empty too.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    hits, n_top, _ = _match_top_k(gt, pred, k)
    recall = 1.0 if not gt else hits / len(gt)
    if n_top == 0:
        precision = 1.0 if not gt else 0.0
    else:
        precision = hits / n_top
    return recall, precision


def mean_recall_at_k(gt: Sequence[tuple[int, int, int]], pred: Sequence[tuple[tuple[int, int, int], float]],
                     k: int, vocab=None) -> float:
    """Recall@k computed per predicate class present in ``gt``, then averaged.

    ``vocab`` is accepted for call-site symmetry; classes absent from ``gt``
    never count, so the vocabulary size does not enter.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not gt:
        return 1.0
    _, _, matched = _match_top_k(gt, pred, k)
    hit_by_class = Counter(t[1] for t in matched)
    total_by_class = Counter(t[1] for t in gt)
    per_class = [hit_by_class[c] / n for c, n in sorted(total_by_class.items())]
    return math.fsum(per_class) / len(per_class)


def alignment_distortion(z_hat: np.ndarray, z: np.ndarray) -> float:
    """10 * (1 - cosine) + L1 distance over the flattened blocks.

    The cosine of two zero blocks counts as 1; of a zero and a nonzero
    block, as 0.
    """
    a = np.asarray(z_hat, dtype=float).ravel()
    b = np.asarray(z, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {np.shape(z_hat)} vs {np.shape(z)}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 and nb == 0:
        cos = 1.0
    elif na == 0 or nb == 0:
        cos = 0.0
    else:
        cos = float(np.dot(a, b) / (na * nb))
    return ALIGN_COS_WEIGHT * (1.0 - cos) + float(np.abs(a - b).sum())


@dataclass
class MetricReport:
    obj_recall: dict[int, float] = field(default_factory=dict)
    obj_precision: dict[int, float] = field(default_factory=dict)
    rel_recall: dict[int, float] = field(default_factory=dict)
    rel_mean_recall: dict[int, float] = field(default_factory=dict)
    ged_raw: float = 0.0
    ged_normalized: float = 0.0
    ged_approximate: bool = False
    # per transmitted stream; empty for schemes without latent streams
    d_align: dict[str, float] = field(default_factory=dict)
    failure: bool = False

    def flat(self) -> dict[str, float]:
        out = {}
        for k in OBJ_KS:
            out[f"obj_r@{k}"] = self.obj_recall[k]
            out[f"obj_p@{k}"] = self.obj_precision[k]
        for k in REL_KS:
            out[f"rel_r@{k}"] = self.rel_recall[k]
            out[f"rel_mr@{k}"] = self.rel_mean_recall[k]
        out["ged_raw"] = self.ged_raw
        out["ged_norm"] = self.ged_normalized
        out["d_align"] = math.fsum(self.d_align.values()) if self.d_align else math.nan
        return out

    def to_dict(self) -> dict:
        return {
            "obj_recall": {str(k): v for k, v in self.obj_recall.items()},
            "obj_precision": {str(k): v for k, v in self.obj_precision.items()},
            "rel_recall": {str(k): v for k, v in self.rel_recall.items()},
            "rel_mean_recall": {str(k): v for k, v in self.rel_mean_recall.items()},
            "ged_raw": self.ged_raw,
            "ged_normalized": self.ged_normalized,
            "ged_approximate": self.ged_approximate,
            "d_align": dict(self.d_align),
            "failure": self.failure,
        }


def evaluate(gt: OarGraph, decoded: OarGraph, d_align: dict[str, float] | None = None,
             failure: bool = False, costs: GedCosts | None = None) -> MetricReport:
    pred = RankedPredictions.from_graph(decoded)
    objs, trips = gt_objects(gt), gt_triplets(gt)
    rep = MetricReport(d_align=dict(d_align or {}), failure=failure)
    for k in OBJ_KS:
        rep.obj_recall[k], rep.obj_precision[k] = recall_precision_at_k(objs, pred.objects, k)
    for k in REL_KS:
        rep.rel_recall[k], _ = recall_precision_at_k(trips, pred.triplets, k)
        rep.rel_mean_recall[k] = mean_recall_at_k(trips, pred.triplets, k)
    g = ged(gt, decoded, costs)
    rep.ged_raw, rep.ged_normalized, rep.ged_approximate = g.raw, g.normalized, g.approximate
    return rep


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class SummaryRow:
    key: tuple
    stats: dict[str, Stat]
    fail_rate: float
    count: int


def _stat(values: list[float]) -> Stat:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return Stat(mean, 0.0, n)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return Stat(mean, math.sqrt(var), n)


def aggregate(trials: Iterable) -> list[SummaryRow]:
    """Mean, sample std and count per metric for each config point.

    ``trials`` need a ``key`` (hashable, sortable config-point id) and a
    ``report`` (MetricReport). Exact summation makes the result independent
    of trial order.
    """
    groups: dict[tuple, list] = defaultdict(list)
    for t in trials:
        groups[t.key].append(t.report)
    rows = []
    for key in sorted(groups, key=repr):
        reports = groups[key]
        flats = [r.flat() for r in reports]
        stats = {col: _stat([f[col] for f in flats]) for col in METRIC_COLUMNS}
        fails = sum(1 for r in reports if r.failure)
        rows.append(SummaryRow(key, stats, fails / len(reports), len(reports)))
    return rows
