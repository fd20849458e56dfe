"""Spatial segregation: tract aggregation, group detection and the dissimilarity index."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .core import GroupAssignment, Population, TractMap
from .detect import CenteredZero, ThresholdPolicy, assign_groups, fit_components
from .errors import DegenerateSegregation, EmptyGroup, InputError, UnknownGroup


class EmptyTractWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class TractProfile:
    tract: Hashable
    count: int
    profile: np.ndarray


@dataclass(frozen=True, eq=False)
class DissimilarityReport:
    D: float
    terms: tuple[tuple[float, float], ...]
    pair: tuple | None = None
    tracts: tuple | None = None

    def as_dict(self) -> dict:
        out = {"D": self.D, "terms": [list(t) for t in self.terms]}
        if self.pair is not None:
            out["pair"] = list(self.pair)
        if self.tracts is not None:
            out["tracts"] = [str(t) for t in self.tracts]
        return out


def aggregate_tracts(pop: Population, tracts: TractMap) -> list[TractProfile]:
    """Per-tract feature prevalence (summed bits divided by residents).

    Tracts without residents are skipped with an :class:`EmptyTractWarning`.
    """
    idx = tracts.index_array(pop.ids)
    n_tracts = len(tracts.tract_ids)
    counts = np.bincount(idx, minlength=n_tracts)
    sums = np.zeros((n_tracts, pop.features.shape[1]))
    np.add.at(sums, idx, pop.features)
    out = []
    for t, tract in enumerate(tracts.tract_ids):
        if counts[t] == 0:
            warnings.warn(f"tract {tract!r} has no residents and was omitted", EmptyTractWarning, stacklevel=2)
            continue
        out.append(TractProfile(tract, int(counts[t]), sums[t] / counts[t]))
    return out


def detect_spatial_groups(
    pop: Population,
    tracts: TractMap,
    m: int = 1,
    policy: ThresholdPolicy | None = None,
    weighted: bool = False,
    standardize: bool = False,
) -> GroupAssignment:
    """Race-like groups from the axes of greatest between-tract variation.

    Components are fitted to the tract profile matrix (one unweighted row per
    tract unless ``weighted``); every individual is then scored against the
    tract-level mean and thresholded per component.
    """
    policy = policy or CenteredZero()
    profiles = aggregate_tracts(pop, tracts)
    if len(profiles) < 2:
        raise DegenerateSegregation(f"need at least 2 non-empty tracts, got {len(profiles)}")
    rows = np.array([p.profile for p in profiles])
    weights = np.array([p.count for p in profiles], dtype=float) if weighted else None
    fit = fit_components(rows, m, weights=weights, standardize=standardize)
    return assign_groups(pop, fit, policy, method="spatial", weighted=weighted)


def dissimilarity(counts: Iterable[tuple[float, float]]) -> DissimilarityReport:
    """Index of dissimilarity for per-tract counts ``(w_i, b_i)``."""
    arr = np.asarray(list(counts), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) == 0:
        raise InputError("counts must be a non-empty list of (w, b) pairs")
    if (arr < 0).any():
        raise InputError("counts must be non-negative")
    W, B = arr.sum(axis=0)
    if W <= 0 or B <= 0:
        raise EmptyGroup("both groups need a positive total population")
    wf = arr[:, 0] / W
    bf = arr[:, 1] / B
    D = 0.5 * float(np.abs(wf - bf).sum())
    return DissimilarityReport(min(D, 1.0), tuple(zip(wf.tolist(), bf.tolist())))


def tract_counts(
    ids: Sequence[Hashable],
    tracts: TractMap,
    assignment: GroupAssignment,
    g0: int,
    g1: int,
) -> np.ndarray:
    """``(T, 2)`` array of head counts of groups ``g0`` and ``g1`` per tract."""
    present = set(assignment.groups)
    for g in (g0, g1):
        if g not in present:
            raise UnknownGroup(f"group {g} is not present in the assignment (groups: {sorted(present)})")
    if g0 == g1:
        raise InputError("dissimilarity needs two distinct groups")
    idx = tracts.index_array(ids)
    labels = assignment.labels_for(ids)
    n_tracts = len(tracts.tract_ids)
    return np.column_stack([
        np.bincount(idx[labels == g0], minlength=n_tracts),
        np.bincount(idx[labels == g1], minlength=n_tracts),
    ])


def dissimilarity_for_assignment(
    pop: Population | Sequence[Hashable],
    tracts: TractMap,
    assignment: GroupAssignment,
    g0: int,
    g1: int,
) -> DissimilarityReport:
    ids = pop.ids if isinstance(pop, Population) else tuple(pop)
    counts = tract_counts(ids, tracts, assignment, g0, g1)
    rep = dissimilarity(counts)
    return DissimilarityReport(rep.D, rep.terms, pair=(g0, g1), tracts=tracts.tract_ids)
