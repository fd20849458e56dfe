"""Component fitting and thresholding shared by the spatial and network detectors.

Both detectors reduce to the same recipe: build a matrix of aggregated
feature rows (tracts or edges), fit principal components to it, project each
individual's own feature vector onto the components and turn the sign
pattern of the thresholded scores into an integer group id (bit ``c`` set iff
the score on component ``c`` exceeds its threshold).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import GroupAssignment, Population
from .errors import ComponentCountError, ConfigError, DegenerateSegregation
from .linalg import PrincipalComponent, column_center, covariance, principal_components

# Scores within this distance of a threshold are treated as equal to it (bit 0),
# so rounding noise from row order cannot flip an individual's group.
TIE_TOL = 1e-12
# A covariance matrix whose entries are all below this is treated as zero.
DEGENERATE_TOL = 1e-15


@dataclass(frozen=True)
class CenteredZero:
    """Split at zero on the centered projection, i.e. at the aggregate mean."""

    def thresholds(self, scores: np.ndarray) -> np.ndarray:
        return np.zeros(scores.shape[1])

    def describe(self) -> str:
        return "centered-zero"


@dataclass(frozen=True)
class Quantile:
    """Split each component's individual scores at quantile ``q``."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ConfigError(f"quantile must lie strictly between 0 and 1, got {self.q}")

    def thresholds(self, scores: np.ndarray) -> np.ndarray:
        return np.quantile(scores, self.q, axis=0)

    def describe(self) -> str:
        return f"quantile:{self.q:g}"


ThresholdPolicy = Union[CenteredZero, Quantile]


def parse_policy(text: str) -> ThresholdPolicy:
    """Parse ``centered-zero`` or ``quantile:<q>``."""
    if text in ("centered-zero", "zero"):
        return CenteredZero()
    if text.startswith("quantile:"):
        try:
            return Quantile(float(text.split(":", 1)[1]))
        except ValueError:
            pass
    raise ConfigError(f"unknown threshold policy {text!r}; use 'centered-zero' or 'quantile:<q>'")


@dataclass(frozen=True, eq=False)
class Provenance:
    method: str
    components: tuple[PrincipalComponent, ...]
    mean: np.ndarray
    scale: np.ndarray | None
    policy: str
    thresholds: tuple[float, ...]
    weighted: bool = False

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "components": [pc.as_dict() for pc in self.components],
            "mean": [float(x) for x in self.mean],
            "scale": None if self.scale is None else [float(x) for x in self.scale],
            "policy": self.policy,
            "thresholds": [float(t) for t in self.thresholds],
            "weighted": self.weighted,
        }


@dataclass(frozen=True, eq=False)
class ComponentFit:
    components: list[PrincipalComponent]
    mean: np.ndarray
    scale: np.ndarray | None

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Scores of each row of ``x``: ``(x - mean) / scale · v`` per component."""
        z = np.asarray(x, dtype=float) - self.mean
        if self.scale is not None:
            z = z / self.scale
        return z @ np.column_stack([pc.vector for pc in self.components])


def fit_components(rows, m: int, weights=None, standardize: bool = False) -> ComponentFit:
    """Fit ``m`` principal components to aggregated rows.

    Rows are sorted into a canonical order first so that the fit does not
    depend, even in the last bit, on the order tracts or edges were listed.
    """
    rows = np.asarray(rows, dtype=float)
    k = rows.shape[1]
    if not 1 <= m <= k:
        raise ComponentCountError(f"component count must be in [1, {k}], got {m}")
    order = np.lexsort(rows.T[::-1])
    rows = rows[order]
    if weights is not None:
        weights = np.asarray(weights, dtype=float)[order]
    centered, mean = column_center(rows, weights)
    scale = None
    if standardize:
        sd = np.sqrt(covariance(centered, weights).diagonal())
        scale = np.where(sd > 0, sd, 1.0)
        centered = centered / scale
    cov = covariance(centered, weights)
    if np.abs(cov).max() <= DEGENERATE_TOL:
        raise DegenerateSegregation("aggregated feature rows are identical; no axis of segregation")
    return ComponentFit(principal_components(cov, m), mean, scale)


def assign_groups(
    pop: Population,
    fit: ComponentFit,
    policy: ThresholdPolicy,
    method: str,
    weighted: bool = False,
) -> GroupAssignment:
    scores = fit.transform(pop.features)
    thresholds = np.asarray(policy.thresholds(scores), dtype=float)
    bits = scores > thresholds + TIE_TOL
    labels = (bits * (1 << np.arange(scores.shape[1]))).sum(axis=1)
    prov = Provenance(
        method=method,
        components=tuple(fit.components),
        mean=fit.mean,
        scale=fit.scale,
        policy=policy.describe(),
        thresholds=tuple(float(t) for t in thresholds),
        weighted=weighted,
    )
    return GroupAssignment(pop.ids, labels, prov)
