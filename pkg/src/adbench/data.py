"""Profiles, datasets, train/test splits and keyed random streams."""

from __future__ import annotations

import csv
import enum
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

N_CELLS = 200
CLASS_IDS = (0, 1, 2, 3)


class DataError(ValueError):
    """Raised for malformed datasets or invalid split requests."""


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream addressed by ``(root_seed, stream_id)``.

    The same address always yields the same draw sequence, independent of
    process or scheduling order.
    """

    root_seed: int
    stream_id: tuple = ()

    def child(self, *key) -> "RngStream":
        return RngStream(self.root_seed, self.stream_id + tuple(key))

    def generator(self) -> np.random.Generator:
        digest = hashlib.sha256(repr(self.stream_id).encode("utf-8")).digest()
        words = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
        seq = np.random.SeedSequence(entropy=int(self.root_seed) & (2**64 - 1), spawn_key=words)
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class RangeProfile:
    id: int
    cells: np.ndarray
    class_id: int

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.float64)
        _check_cells(cells, f"profile {self.id}")
        if self.class_id not in CLASS_IDS:
            raise DataError(f"profile {self.id}: unknown class_id {self.class_id}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)


def _check_cells(cells: np.ndarray, where: str) -> None:
    if cells.shape != (N_CELLS,):
        raise DataError(f"{where}: expected {N_CELLS} cells, got {cells.size}")
    if not np.all(np.isfinite(cells)):
        raise DataError(f"{where}: non-finite amplitude")
    if np.any(cells < 0):
        raise DataError(f"{where}: negative amplitude")


class Dataset:
    """Column store of range profiles: ``ids``, ``class_ids`` and an (n, 200) ``cells`` matrix."""

    def __init__(self, ids, class_ids, cells):
        ids = np.asarray(ids, dtype=np.int64)
        class_ids = np.asarray(class_ids, dtype=np.int64)
        cells = np.asarray(cells, dtype=np.float64)
        if cells.ndim != 2 or cells.shape[1] != N_CELLS:
            raise DataError(f"cells must have shape (n, {N_CELLS}), got {cells.shape}")
        if not (len(ids) == len(class_ids) == len(cells)):
            raise DataError("ids, class_ids and cells lengths differ")
        if len(np.unique(ids)) != len(ids):
            raise DataError("profile ids are not unique")
        if not np.all(np.isin(class_ids, CLASS_IDS)):
            raise DataError("unknown class_id present")
        if not np.all(np.isfinite(cells)) or np.any(cells < 0):
            raise DataError("amplitudes must be finite and non-negative")
        for a in (ids, class_ids, cells):
            a.setflags(write=False)
        self.ids = ids
        self.class_ids = class_ids
        self.cells = cells
        self._row = {int(i): r for r, i in enumerate(ids)}

    @classmethod
    def from_profiles(cls, profiles: Sequence[RangeProfile]) -> "Dataset":
        if not profiles:
            return cls(np.empty(0), np.empty(0), np.empty((0, N_CELLS)))
        return cls([p.id for p in profiles], [p.class_id for p in profiles],
                   np.stack([p.cells for p in profiles]))

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[RangeProfile]:
        for r in range(len(self)):
            yield self.profile_at(r)

    def profile_at(self, row: int) -> RangeProfile:
        return RangeProfile(int(self.ids[row]), self.cells[row], int(self.class_ids[row]))

    def rows_of(self, ids) -> np.ndarray:
        return np.array([self._row[int(i)] for i in ids], dtype=np.int64)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.ids[rows], self.class_ids[rows], self.cells[rows])

    def class_counts(self) -> dict[int, int]:
        return {c: int(np.sum(self.class_ids == c)) for c in CLASS_IDS}


class SampleRole(enum.Enum):
    NORMAL = "normal"
    UNLABELED_POLLUTION = "unlabeled_pollution"
    LABELED_ANOMALY = "labeled_anomaly"

    @property
    def semi_label(self) -> int:
        """Label used by the semi-supervised objective (-1 for labeled anomalies, 0 otherwise)."""
        return -1 if self is SampleRole.LABELED_ANOMALY else 0


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    dataset: Dataset
    train_ids: np.ndarray
    train_roles: tuple
    test_ids: np.ndarray
    test_labels: np.ndarray
    normal_class: int
    seed: int
    contam_class: int | None = None
    contam_kind: str = "none"
    ratio: float = 0.0

    @property
    def train(self) -> list[tuple[RangeProfile, SampleRole]]:
        rows = self.dataset.rows_of(self.train_ids)
        return [(self.dataset.profile_at(r), role) for r, role in zip(rows, self.train_roles)]

    @property
    def test(self) -> list[tuple[RangeProfile, int]]:
        rows = self.dataset.rows_of(self.test_ids)
        return [(self.dataset.profile_at(r), int(y)) for r, y in zip(rows, self.test_labels)]

    def train_matrix(self, roles: Sequence[SampleRole] | None = None) -> np.ndarray:
        rows = self.dataset.rows_of(self.train_ids)
        if roles is not None:
            keep = np.array([r in roles for r in self.train_roles], dtype=bool)
            rows = rows[keep]
        return self.dataset.cells[rows]

    def test_matrix(self) -> np.ndarray:
        return self.dataset.cells[self.dataset.rows_of(self.test_ids)]

    def semi_labels(self) -> np.ndarray:
        return np.array([r.semi_label for r in self.train_roles], dtype=np.int64)


def _floor_count(ratio: float, n: int) -> int:
    # guards against 0.29 * 100 == 28.999...
    return int(math.floor(ratio * n + 1e-9))


def holdout_rows(dataset: Dataset, seed: int, test_fraction: float = 0.1) -> np.ndarray:
    """Row indices of the stratified test holdout; depends on the seed only."""
    rows = []
    for c in CLASS_IDS:
        members = np.flatnonzero(dataset.class_ids == c)
        if members.size == 0:
            continue
        rng = RngStream(seed, ("split", "test", c)).generator()
        n_test = _floor_count(test_fraction, members.size)
        rows.append(np.sort(rng.permutation(members)[:n_test]))
    return np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)


def make_split(dataset: Dataset, normal_class: int, pollution_class: int | None = None,
               pollution_ratio: float = 0.0, labeled_anomaly_class: int | None = None,
               labeled_ratio: float = 0.0, seed: int = 0,
               test_fraction: float = 0.1) -> DatasetSplit:
    """Build a train/test split for one experiment cell.

    The test set is a stratified ``test_fraction`` holdout of every class with
    binary ground truth (1 for any class other than ``normal_class``). The
    training set holds the remaining normal-class profiles plus, optionally,
    ``floor(ratio * n_normal_train)`` contaminating profiles drawn from one other
    class, either as unlabeled pollution or as labeled anomalies (never both).
    """
    if pollution_class is not None and labeled_anomaly_class is not None:
        raise DataError("pollution and labeled anomalies are mutually exclusive")
    for name, r in (("pollution_ratio", pollution_ratio), ("labeled_ratio", labeled_ratio)):
        if not 0.0 <= r <= 0.10 + 1e-12:
            raise DataError(f"{name}={r} outside [0, 0.10]")
    counts = dataset.class_counts()
    if counts.get(normal_class, 0) == 0:
        raise DataError(f"normal class {normal_class} is empty")

    if pollution_class is not None:
        contam, kind, ratio, role = pollution_class, "pollution", pollution_ratio, SampleRole.UNLABELED_POLLUTION
    elif labeled_anomaly_class is not None:
        contam, kind, ratio, role = labeled_anomaly_class, "labeled", labeled_ratio, SampleRole.LABELED_ANOMALY
    else:
        contam, kind, ratio, role = None, "none", 0.0, None
    if contam is not None:
        if contam == normal_class:
            raise DataError("contaminating class must differ from the normal class")
        if counts.get(contam, 0) == 0:
            raise DataError(f"contaminating class {contam} is empty")

    test_rows = holdout_rows(dataset, seed, test_fraction)
    in_test = np.zeros(len(dataset), dtype=bool)
    in_test[test_rows] = True

    normal_rows = np.flatnonzero((dataset.class_ids == normal_class) & ~in_test)
    if normal_rows.size == 0:
        raise DataError(f"normal class {normal_class} has no training profiles")
    train_rows = [normal_rows]
    roles = [SampleRole.NORMAL] * normal_rows.size

    if contam is not None and ratio > 0:
        n_contam = _floor_count(ratio, normal_rows.size)
        pool = np.flatnonzero((dataset.class_ids == contam) & ~in_test)
        if n_contam > pool.size:
            raise DataError(f"class {contam} has only {pool.size} profiles, {n_contam} requested")
        # nested across ratios: smaller ratios take a prefix of the same permutation
        rng = RngStream(seed, ("split", "contam", normal_class, contam)).generator()
        picked = np.sort(rng.permutation(pool)[:n_contam])
        train_rows.append(picked)
        roles += [role] * picked.size
    elif contam is None:
        ratio = 0.0

    train_rows = np.concatenate(train_rows)
    test_labels = (dataset.class_ids[test_rows] != normal_class).astype(np.int64)
    split = DatasetSplit(dataset=dataset, train_ids=dataset.ids[train_rows], train_roles=tuple(roles),
                         test_ids=dataset.ids[test_rows], test_labels=test_labels,
                         normal_class=normal_class, seed=seed, contam_class=contam,
                         contam_kind=kind, ratio=float(ratio))
    _check_split(split)
    return split


def _check_split(split: DatasetSplit) -> None:
    train_classes = set(split.dataset.class_ids[split.dataset.rows_of(split.train_ids)].tolist())
    allowed = {split.normal_class} | ({split.contam_class} if split.contam_class is not None else set())
    assert train_classes <= allowed
    assert not set(split.train_ids.tolist()) & set(split.test_ids.tolist())
    kinds = set(split.train_roles)
    assert not (SampleRole.UNLABELED_POLLUTION in kinds and SampleRole.LABELED_ANOMALY in kinds)
    test_anomaly_classes = set(split.dataset.class_ids[split.dataset.rows_of(split.test_ids)].tolist()) - {split.normal_class}
    if len(test_anomaly_classes - train_classes) < 2:
        raise DataError("fewer than two anomaly classes are unseen during training")


def save_dataset(dataset: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["id", "class_id"] + [f"c{i}" for i in range(N_CELLS)])
        for i, c, cells in zip(dataset.ids, dataset.class_ids, dataset.cells):
            w.writerow([int(i), int(c)] + [repr(float(v)) for v in cells])


def load_dataset(path) -> Dataset:
    """Read the profile CSV (``id,class_id,c0..c199``), validating every row."""
    path = Path(path)
    expected = ["id", "class_id"] + [f"c{i}" for i in range(N_CELLS)]
    ids, classes, rows = [], [], []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != expected:
            raise DataError(f"{path}: bad header")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            where = f"{path}: row {lineno}"
            if len(rec) != N_CELLS + 2:
                raise DataError(f"{where}: expected {N_CELLS} cells, got {len(rec) - 2}")
            try:
                pid, cid = int(rec[0]), int(rec[1])
                cells = np.array([float(v) for v in rec[2:]])
            except ValueError as exc:
                raise DataError(f"{where}: {exc}") from None
            if cid not in CLASS_IDS:
                raise DataError(f"{where}: unknown class_id {cid}")
            _check_cells(cells, where)
            ids.append(pid)
            classes.append(cid)
            rows.append(cells)
    cells = np.stack(rows) if rows else np.empty((0, N_CELLS))
    return Dataset(ids, classes, cells)
