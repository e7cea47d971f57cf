"""ROC AUC and grid aggregation."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata


class IncompleteGridError(ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(map(str, self.missing[:10]))
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"{len(self.missing)} missing cells: {shown}{more}")


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Equals P(s_anomalous > s_normal) + 0.5 * P(tie); ties get average ranks.
    ``labels`` uses 1 for anomalous and 0 for normal.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    if np.any(np.isnan(scores)):
        raise ValueError("NaN score")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int((labels == 0).sum())
    if n_pos + n_neg != labels.size:
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both normal and anomalous samples")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class CellResult:
    method: str
    normal_class: int
    contam_class: int | None
    contam_kind: str  # "none" | "pollution" | "labeled"
    ratio: float
    seed: int
    auc: float

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc {self.auc} outside [0, 1]")

    @property
    def key(self):
        contam = -1 if self.contam_class is None else self.contam_class
        return (self.method, self.normal_class, self.ratio, contam, self.seed)


@dataclass(frozen=True)
class GroupSummary:
    method: str
    normal_class: int
    ratio: float
    mean_auc: float
    mean_std: float
    n_cells: int


def aggregate(results: Iterable[CellResult], classes: Sequence[int] | None = None,
              seeds: Sequence[int] | None = None) -> list[GroupSummary]:
    """Mean-of-means per ``(method, normal_class, ratio)``.

    Within a group, AUCs are first averaged over seeds for each contaminating
    class; ``mean_auc`` averages those means, ``mean_std`` averages the per-class
    population standard deviations over seeds. When ``classes``/``seeds`` are
    given, every group must hold all expected (contaminating class, seed) cells.
    """
    groups: dict = defaultdict(lambda: defaultdict(dict))
    for r in results:
        groups[(r.method, r.normal_class, r.ratio)][r.contam_class][r.seed] = r.auc

    missing = []
    if classes is not None or seeds is not None:
        for (method, normal, ratio), by_contam in groups.items():
            want_seeds = set(seeds) if seeds is not None else set().union(*(s.keys() for s in by_contam.values()))
            if ratio == 0:
                want_contam = set(by_contam) if classes is None else {None}
            else:
                want_contam = set(by_contam) if classes is None else {c for c in classes if c != normal}
            for c in sorted(want_contam, key=lambda v: -1 if v is None else v):
                for s in sorted(want_seeds - set(by_contam.get(c, {}))):
                    missing.append((method, normal, c, ratio, s))
    if missing:
        raise IncompleteGridError(missing)

    out = []
    for (method, normal, ratio) in sorted(groups):
        by_contam = groups[(method, normal, ratio)]
        means, stds, n = [], [], 0
        for c in sorted(by_contam, key=lambda v: -1 if v is None else v):
            vals = np.array([by_contam[c][s] for s in sorted(by_contam[c])])
            means.append(vals.mean())
            stds.append(vals.std(ddof=0))
            n += vals.size
        out.append(GroupSummary(method, normal, ratio, float(np.mean(means)), float(np.mean(stds)), n))
    return out
