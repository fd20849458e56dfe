"""Group fairness audits over a (discovered or reference) group assignment."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import FeatureSchema, GroupAssignment
from .errors import (
    DuplicateId,
    EmptyGroup,
    InputError,
    MissingReference,
    NoPositives,
    SchemaError,
)

GAP_TOL = 1e-12
GROUP_SENTINEL = "group"


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Outcome ``y_true``, model ``score`` and decision ``y_hat`` per individual.

    ``threshold`` (shared) or ``group_thresholds`` record how ``y_hat`` was
    derived from ``score`` when this package produced it (``score > t``).
    """

    ids: tuple[Hashable, ...]
    y_true: np.ndarray
    score: np.ndarray
    y_hat: np.ndarray
    threshold: float | None = None
    group_thresholds: Mapping[int, float] | None = None

    def __post_init__(self):
        ids = tuple(self.ids)
        if not ids:
            raise InputError("prediction set is empty")
        if len(set(ids)) != len(ids):
            raise DuplicateId("duplicate ids in prediction set")
        y_true = np.asarray(self.y_true, dtype=np.int64)
        y_hat = np.asarray(self.y_hat, dtype=np.int64)
        score = np.asarray(self.score, dtype=float)
        for name, arr in (("y_true", y_true), ("score", score), ("y_hat", y_hat)):
            if arr.shape != (len(ids),):
                raise InputError(f"{name} must have one entry per id")
        if not np.isin(y_true, (0, 1)).all() or not np.isin(y_hat, (0, 1)).all():
            raise InputError("y_true and y_hat must be 0/1")
        if not (np.isfinite(score).all() and (score >= 0).all() and (score <= 1).all()):
            raise InputError("scores must lie in [0, 1]")
        if self.threshold is not None and not np.array_equal(y_hat, (score > self.threshold).astype(np.int64)):
            raise InputError("y_hat is inconsistent with the recorded threshold")
        for arr in (y_true, score, y_hat):
            arr.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "y_true", y_true)
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "y_hat", y_hat)

    @classmethod
    def from_scores(cls, ids, y_true, score, threshold: float) -> "PredictionSet":
        score = np.asarray(score, dtype=float)
        return cls(tuple(ids), y_true, score, (score > threshold).astype(np.int64), threshold=threshold)

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class GroupRates:
    n: int
    positive_rate: float
    n_positive_outcome: int
    true_positive_rate: float | None

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "positive_rate": self.positive_rate,
            "n_y_true": self.n_positive_outcome,
            "true_positive_rate": self.true_positive_rate,
        }


@dataclass(frozen=True)
class FairnessReport:
    dp_gap: float
    eo_gap: float | None
    rates: Mapping[int, GroupRates]

    def as_dict(self) -> dict:
        return {
            "dp_gap": self.dp_gap,
            "eo_gap": self.eo_gap,
            "groups": {str(g): r.as_dict() for g, r in sorted(self.rates.items())},
        }


def _group_labels(preds: PredictionSet, assignment: GroupAssignment) -> tuple[np.ndarray, list[int]]:
    labels = assignment.labels_for(preds.ids)
    groups = assignment.groups
    present = set(np.unique(labels).tolist())
    missing = [g for g in groups if g not in present]
    if missing:
        raise EmptyGroup(f"groups {missing} have no predicted members")
    return labels, groups


def _max_pairwise(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return max(abs(a - b) for a, b in itertools.combinations(values, 2))


def group_rates(preds: PredictionSet, assignment: GroupAssignment) -> dict[int, GroupRates]:
    labels, groups = _group_labels(preds, assignment)
    out = {}
    for g in groups:
        mask = labels == g
        pos = mask & (preds.y_true == 1)
        n_pos = int(pos.sum())
        out[g] = GroupRates(
            n=int(mask.sum()),
            positive_rate=float(preds.y_hat[mask].mean()),
            n_positive_outcome=n_pos,
            true_positive_rate=float(preds.y_hat[pos].mean()) if n_pos else None,
        )
    return out


def dp_gap(preds: PredictionSet, assignment: GroupAssignment) -> float:
    """Largest pairwise difference in positive-decision rate between groups."""
    rates = group_rates(preds, assignment)
    return _max_pairwise([r.positive_rate for r in rates.values()])


def eo_gap(preds: PredictionSet, assignment: GroupAssignment) -> float:
    """Largest pairwise difference in true positive rate between groups."""
    rates = group_rates(preds, assignment)
    lacking = [g for g, r in rates.items() if r.true_positive_rate is None]
    if lacking:
        raise NoPositives(f"groups {lacking} have no members with y_true = 1")
    return _max_pairwise([r.true_positive_rate for r in rates.values()])


def fairness_report(preds: PredictionSet, assignment: GroupAssignment) -> FairnessReport:
    """DP and EO gaps with per-group rates; ``eo_gap`` is None if a group has no positives."""
    rates = group_rates(preds, assignment)
    tprs = [r.true_positive_rate for r in rates.values()]
    eo = None if any(t is None for t in tprs) else _max_pairwise(tprs)
    return FairnessReport(_max_pairwise([r.positive_rate for r in rates.values()]), eo, rates)


@dataclass(frozen=True)
class ModelManifest:
    """Input feature names a downstream model declares it uses."""

    features: tuple[str, ...]

    @classmethod
    def for_schema(cls, schema: FeatureSchema, names: Iterable[str]) -> "ModelManifest":
        names = tuple(names)
        allowed = set(schema.names) | {GROUP_SENTINEL}
        unknown = [n for n in names if n not in allowed]
        if unknown:
            raise SchemaError(f"manifest names {unknown} are not schema features")
        return cls(names)


@dataclass(frozen=True)
class FTUResult:
    passed: bool
    offenders: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.passed


def ftu_check(manifest: ModelManifest | Iterable[str], protected: Iterable[str]) -> FTUResult:
    """Fairness through unawareness: no protected name among the model inputs."""
    names = manifest.features if isinstance(manifest, ModelManifest) else tuple(manifest)
    protected = set(protected)
    offenders = tuple(sorted({n for n in names if n in protected}))
    return FTUResult(not offenders, offenders)


@dataclass(frozen=True, eq=False)
class EOAdjustment:
    thresholds: dict[int, float]
    predictions: PredictionSet
    gap_before: float
    gap_after: float
    tolerance: float

    @property
    def within_tolerance(self) -> bool:
        return self.gap_after <= self.tolerance + GAP_TOL

    def as_dict(self) -> dict:
        return {
            "thresholds": {str(g): t for g, t in sorted(self.thresholds.items())},
            "gap_before": self.gap_before,
            "gap_after": self.gap_after,
            "tolerance": self.tolerance,
            "within_tolerance": self.within_tolerance,
        }


def _threshold_table(scores: np.ndarray, y: np.ndarray):
    """Grid of candidate thresholds with the TPR and correct count at each."""
    grid = np.unique(np.concatenate([scores, [0.0, 1.0]]))
    pos = np.sort(scores[y == 1])
    neg = np.sort(scores[y == 0])
    tp = len(pos) - np.searchsorted(pos, grid, side="right")
    tn = np.searchsorted(neg, grid, side="right")
    return grid, tp / len(pos), tp + tn


def eo_adjust(
    preds: PredictionSet,
    assignment: GroupAssignment,
    tolerance: float = 0.0,
) -> EOAdjustment:
    """Per-group decision thresholds that close the true-positive-rate gap.

    Every group's thresholds are swept over its observed scores plus 0 and 1.
    Among all combinations whose TPR gap is at most ``min(tolerance,
    gap of the incoming decisions)``, the one with the most correct decisions
    wins; ties go to the smallest thresholds.
    """
    if tolerance < 0:
        raise InputError("tolerance must be non-negative")
    gap_before = eo_gap(preds, assignment)
    target = min(tolerance, gap_before) + GAP_TOL
    labels, groups = _group_labels(preds, assignment)
    tables = {g: _threshold_table(preds.score[labels == g], preds.y_true[labels == g]) for g in groups}

    best = None
    for low in np.unique(np.concatenate([t[1] for t in tables.values()])):
        total = 0
        picks = {}
        for g, (grid, tpr, correct) in tables.items():
            # tpr is non-increasing along the ascending grid
            ok = np.flatnonzero((tpr >= low - GAP_TOL) & (tpr <= low + target))
            if len(ok) == 0:
                break
            j = ok[int(np.argmax(correct[ok]))]
            picks[g] = j
            total += int(correct[j])
        else:
            if best is None or total > best[0]:
                best = (total, picks)

    thresholds = {g: float(tables[g][0][j]) for g, j in best[1].items()}
    cut = np.array([thresholds[g] for g in labels.tolist()])
    adjusted = PredictionSet(
        preds.ids,
        preds.y_true,
        preds.score,
        (preds.score > cut).astype(np.int64),
        group_thresholds=thresholds,
    )
    return EOAdjustment(thresholds, adjusted, gap_before, eo_gap(adjusted, assignment), tolerance)


def _reference_labels(assignment: GroupAssignment, reference) -> np.ndarray:
    if isinstance(reference, GroupAssignment):
        try:
            return reference.labels_for(assignment.ids)
        except InputError as exc:
            raise MissingReference(str(exc)) from None
    if isinstance(reference, Mapping):
        missing = [pid for pid in assignment.ids if pid not in reference]
        if missing:
            raise MissingReference(f"no reference label for {missing[:5]}")
        return np.array([reference[pid] for pid in assignment.ids], dtype=np.int64)
    if reference is None:
        raise MissingReference("no reference labels supplied")
    ref = np.asarray(reference, dtype=np.int64)
    if ref.shape != (len(assignment),):
        raise MissingReference("reference labels must align with the assignment")
    return ref


def alignment_score(assignment: GroupAssignment, reference) -> float:
    """Balanced accuracy of the best one-to-one matching of groups to reference labels.

    1.0 means the partition reproduces the reference exactly, whatever the
    group ids; with two balanced classes, random labels score about 0.5.
    """
    ref = _reference_labels(assignment, reference)
    ref_groups, ref_idx = np.unique(ref, return_inverse=True)
    got_groups, got_idx = np.unique(assignment.labels, return_inverse=True)
    table = np.zeros((len(ref_groups), len(got_groups)))
    np.add.at(table, (ref_idx, got_idx), 1.0)
    recall = table / table.sum(axis=1, keepdims=True)
    rows, cols = linear_sum_assignment(recall, maximize=True)
    return float(recall[rows, cols].sum() / len(ref_groups))
