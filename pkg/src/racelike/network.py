"""Social segregation: edge aggregation, group detection and assortativity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GroupAssignment, Population, SocialGraph
from .detect import CenteredZero, ThresholdPolicy, assign_groups, fit_components
from .errors import DegenerateSegregation, EmptyGraph, InputError, UndefinedAssortativity

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Fractions of edge ends joining group ``groups[i]`` to ``groups[j]``."""

    e: np.ndarray
    groups: tuple[int, ...]

    def __post_init__(self):
        e = np.array(self.e, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] != len(self.groups):
            raise InputError("mixing matrix must be square with one row per group")
        if (e < 0).any():
            raise InputError("mixing matrix entries must be non-negative")
        if abs(e.sum() - 1.0) > MASS_TOL:
            raise InputError(f"mixing matrix mass is {e.sum()!r}, expected 1")
        e.setflags(write=False)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "groups", tuple(self.groups))

    @property
    def a(self) -> np.ndarray:
        return self.e.sum(axis=1)

    @property
    def b(self) -> np.ndarray:
        return self.e.sum(axis=0)


@dataclass(frozen=True, eq=False)
class AssortativityReport:
    r: float
    mixing: MixingMatrix

    @property
    def n_groups(self) -> int:
        return len(self.mixing.groups)

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "groups": list(self.mixing.groups),
            "mixing": self.mixing.e.tolist(),
        }


def _edge_index(graph: SocialGraph, ids) -> np.ndarray:
    pos = {pid: i for i, pid in enumerate(ids)}
    try:
        return np.array([(pos[u], pos[v]) for u, v in graph.edges], dtype=np.int64).reshape(-1, 2)
    except KeyError as exc:
        raise InputError(f"edge endpoint {exc.args[0]!r} missing from population") from None


def aggregate_edges(graph: SocialGraph, pop: Population) -> np.ndarray:
    """One row per edge: the mean of its endpoints' feature vectors."""
    if len(graph.edges) == 0:
        raise EmptyGraph("graph has no edges")
    ends = _edge_index(graph, pop.ids)
    x = pop.features.astype(float)
    return (x[ends[:, 0]] + x[ends[:, 1]]) / 2


def detect_network_groups(
    graph: SocialGraph,
    pop: Population,
    m: int = 1,
    policy: ThresholdPolicy | None = None,
    standardize: bool = False,
) -> GroupAssignment:
    """Race-like groups from the axes of greatest variation across connected pairs.

    Every population member is classified, isolated nodes included.
    """
    policy = policy or CenteredZero()
    rows = aggregate_edges(graph, pop)
    if len(rows) < 2:
        raise DegenerateSegregation("need at least 2 edges to fit components")
    fit = fit_components(rows, m, standardize=standardize)
    return assign_groups(pop, fit, policy, method="network")


def mixing_matrix(graph: SocialGraph, assignment: GroupAssignment) -> MixingMatrix:
    """Each undirected edge adds one end in each direction; totals divide by 2|E|."""
    if len(graph.edges) == 0:
        raise EmptyGraph("graph has no edges")
    groups = tuple(assignment.groups)
    pos = {g: i for i, g in enumerate(groups)}
    us = assignment.labels_for([u for u, _ in graph.edges])
    vs = assignment.labels_for([v for _, v in graph.edges])
    gi = np.array([pos[g] for g in us.tolist()], dtype=np.int64)
    gj = np.array([pos[g] for g in vs.tolist()], dtype=np.int64)
    G = len(groups)
    counts = np.zeros((G, G))
    np.add.at(counts, (gi, gj), 1.0)
    np.add.at(counts, (gj, gi), 1.0)
    return MixingMatrix(counts / (2 * len(graph.edges)), groups)


def assortativity(mix: MixingMatrix) -> AssortativityReport:
    """Newman's assortativity coefficient of a mixing matrix."""
    ab = float(mix.a @ mix.b)
    if ab >= 1.0 - MASS_TOL:
        raise UndefinedAssortativity("all edge ends fall in a single group; r is undefined")
    r = (float(np.trace(mix.e)) - ab) / (1.0 - ab)
    return AssortativityReport(r, mix)
