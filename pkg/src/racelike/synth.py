"""Synthetic populations with a planted latent group.

The generators mimic the sorting and disparity stages of a racial-formation
cycle: a latent category is ascribed, features are noisy proxies of it,
people sort into tracts (Schelling dynamics) or ties (planted partition), and
outcomes and scores differ by group.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .core import (
    CATEGORIES,
    Feature,
    FeatureSchema,
    GroupAssignment,
    Population,
    SeededRng,
    SocialGraph,
    TractMap,
)
from .errors import ConfigError
from .fairness import PredictionSet
from .spatial import dissimilarity

# stream ids derived from a config seed, one per generator stage
POPULATION_STREAM = 0
SCHELLING_STREAM = 1
GRAPH_STREAM = 2
OUTCOME_STREAM = 3


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def default_schema(k: int) -> FeatureSchema:
    """``k`` features cycling through the three proxy categories."""
    return FeatureSchema(tuple(
        Feature(f"{CATEGORIES[c % 3]}_{c}", CATEGORIES[c % 3]) for c in range(k)
    ))


@dataclass(frozen=True)
class PopulationConfig:
    n: int
    k: int
    latent_fraction: float = 0.5
    flip_noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        _check(self.n >= 2, f"n must be at least 2, got {self.n}")
        _check(self.k >= 1, f"k must be at least 1, got {self.k}")
        _check(0.0 < self.latent_fraction < 1.0, "latent fraction must lie in (0, 1)")
        _check(0.0 <= self.flip_noise <= 0.5, "flip noise must lie in [0, 0.5]")
        _check(0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SpatialSynthConfig(PopulationConfig):
    tracts: int = 20
    capacity: int = 150
    tolerance: float = 0.5
    max_iters: int = 100

    def __post_init__(self):
        super().__post_init__()
        _check(self.tracts >= 2, "need at least 2 tracts")
        _check(self.capacity >= 1, "tract capacity must be positive")
        _check(self.tracts * self.capacity >= self.n,
               f"{self.tracts} tracts x capacity {self.capacity} cannot hold {self.n} individuals")
        _check(0.0 <= self.tolerance <= 1.0, "tolerance must lie in [0, 1]")
        _check(self.max_iters >= 0, "max_iters must be non-negative")


@dataclass(frozen=True)
class GraphSynthConfig(PopulationConfig):
    p_in: float = 0.02
    p_out: float = 0.002

    def __post_init__(self):
        super().__post_init__()
        _check(0.0 <= self.p_out <= self.p_in <= 1.0, "need 0 <= p_out <= p_in <= 1")


def gen_population(cfg: PopulationConfig, rng: SeededRng | None = None) -> Population:
    """Latent ``g ~ Bernoulli(p)``; each feature bit is ``g`` flipped with probability ``ε``."""
    gen = (rng or SeededRng(cfg.seed).derive(POPULATION_STREAM)).generator
    latent = (gen.random(cfg.n) < cfg.latent_fraction).astype(np.int64)
    flips = gen.random((cfg.n, cfg.k)) < cfg.flip_noise
    bits = (latent[:, None] ^ flips).astype(np.uint8)
    bits.setflags(write=False)
    latent.setflags(write=False)
    return Population(default_schema(cfg.k), tuple(range(cfg.n)), bits, latent)


@dataclass(frozen=True, eq=False)
class SchellingResult:
    tracts: TractMap
    iterations: int
    converged: bool
    dissimilarity: float
    initial: TractMap = field(repr=False)


def _tract_map(ids: Sequence[Hashable], where: np.ndarray, n_tracts: int) -> TractMap:
    return TractMap(dict(zip(ids, where.tolist())), tuple(range(n_tracts)))


def _latent_d(where: np.ndarray, latent: np.ndarray, n_tracts: int) -> float:
    counts = np.column_stack([
        np.bincount(where[latent == 0], minlength=n_tracts),
        np.bincount(where[latent == 1], minlength=n_tracts),
    ])
    return dissimilarity(counts).D


def schelling_sort(pop: Population, cfg: SpatialSynthConfig, rng: SeededRng | None = None) -> SchellingResult:
    """Tract-level Schelling dynamics on the latent labels.

    Individuals start in a uniformly random capacity-respecting placement. An
    individual is unhappy when the share of same-group co-residents (self
    excluded) is below ``cfg.tolerance``; someone alone in a tract is content.
    Each iteration every individual unhappy at its start moves, in random
    order, to a uniformly chosen other tract with a vacancy.
    """
    if pop.latent is None:
        raise ConfigError("schelling_sort needs latent labels")
    n, T = len(pop), cfg.tracts
    _check(T * cfg.capacity >= n, f"{T} tracts x capacity {cfg.capacity} cannot hold {n} individuals")
    gen = (rng or SeededRng(cfg.seed).derive(SCHELLING_STREAM)).generator
    latent = np.asarray(pop.latent)
    _check(set(np.unique(latent).tolist()) <= {0, 1}, "schelling_sort expects latent labels in {0, 1}")

    slots = gen.permutation(T * cfg.capacity)[:n]
    where = (slots // cfg.capacity).astype(np.int64)
    initial = where.copy()
    counts = np.zeros((T, 2), dtype=np.int64)
    np.add.at(counts, (where, latent), 1)

    iterations = 0
    converged = False
    while True:
        total = counts.sum(axis=1)
        others = total[where] - 1
        same = counts[where, latent] - 1
        unhappy = np.flatnonzero((others > 0) & (same < cfg.tolerance * others))
        if len(unhappy) == 0:
            converged = True
            break
        if iterations >= cfg.max_iters:
            break
        iterations += 1
        for i in gen.permutation(unhappy):
            here = where[i]
            open_ = np.flatnonzero(counts.sum(axis=1) < cfg.capacity)
            open_ = open_[open_ != here]
            if len(open_) == 0:
                continue
            dest = open_[gen.integers(len(open_))]
            counts[here, latent[i]] -= 1
            counts[dest, latent[i]] += 1
            where[i] = dest

    return SchellingResult(
        tracts=_tract_map(pop.ids, where, T),
        iterations=iterations,
        converged=converged,
        dissimilarity=_latent_d(where, latent, T),
        initial=_tract_map(pop.ids, initial, T),
    )


def gen_homophily_graph(pop: Population, cfg: GraphSynthConfig, rng: SeededRng | None = None) -> SocialGraph:
    """Planted partition: same-group pairs link with ``p_in``, others with ``p_out``."""
    if pop.latent is None:
        raise ConfigError("gen_homophily_graph needs latent labels")
    gen = (rng or SeededRng(cfg.seed).derive(GRAPH_STREAM)).generator
    n = len(pop)
    iu, ju = np.triu_indices(n, k=1)
    same = pop.latent[iu] == pop.latent[ju]
    p = np.where(same, cfg.p_in, cfg.p_out)
    keep = gen.random(len(iu)) < p
    ids = pop.ids
    try:
        sorted(ids)
        ordered = True
    except TypeError:
        ordered = False
    edges = []
    for a, b in zip(iu[keep].tolist(), ju[keep].tolist()):
        u, v = ids[a], ids[b]
        if ordered and v < u:
            u, v = v, u
        edges.append((u, v))
    if ordered:
        edges.sort()
    return SocialGraph(tuple(ids), tuple(edges))


@dataclass(frozen=True)
class TriangularScore:
    """Triangular distribution on ``[low, high] ⊆ [0, 1]`` with peak at ``mode``."""

    low: float
    mode: float
    high: float

    def __post_init__(self):
        _check(0.0 <= self.low <= self.mode <= self.high <= 1.0 and self.low < self.high,
               f"invalid triangular parameters {self}")

    @classmethod
    def centered(cls, mode: float, spread: float) -> "TriangularScore":
        return cls(max(0.0, mode - spread), mode, min(1.0, mode + spread))

    @classmethod
    def with_exceedance(cls, threshold: float, prob: float, spread: float) -> "TriangularScore":
        """Symmetric triangle of half-width ``spread`` with ``P(score > threshold) = prob``."""
        _check(0.0 < prob < 1.0, "exceedance probability must lie in (0, 1)")
        # cdf on the side of the threshold: F = (x-lo)^2 / (2 h^2) or 1 - (hi-x)^2 / (2 h^2)
        if prob >= 0.5:
            mode = threshold + spread * (1.0 - math.sqrt(2.0 * (1.0 - prob)))
        else:
            mode = threshold - spread * (1.0 - math.sqrt(2.0 * prob))
        return cls(mode - spread, mode, mode + spread)

    @property
    def mean(self) -> float:
        return (self.low + self.mode + self.high) / 3.0

    def cdf(self, x: float) -> float:
        lo, c, hi = self.low, self.mode, self.high
        if x <= lo:
            return 0.0
        if x >= hi:
            return 1.0
        if x <= c:
            return (x - lo) ** 2 / ((hi - lo) * (c - lo))
        return 1.0 - (hi - x) ** 2 / ((hi - lo) * (hi - c))

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return gen.triangular(self.low, self.mode, self.high, size) if size else np.empty(0)


@dataclass(frozen=True)
class GroupOutcomeModel:
    base_rate: float
    positive: TriangularScore
    negative: TriangularScore

    def __post_init__(self):
        _check(0.0 <= self.base_rate <= 1.0, "base rate must lie in [0, 1]")
        _check(self.positive.mean > self.negative.mean,
               "positive score mean must exceed negative score mean")


@dataclass(frozen=True)
class OutcomeSynthConfig:
    groups: Mapping[int, GroupOutcomeModel]
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        _check(len(self.groups) >= 1, "at least one group model is required")
        _check(0.0 <= self.threshold <= 1.0, "threshold must lie in [0, 1]")
        _check(0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer")


def gen_outcomes(assignment: GroupAssignment, cfg: OutcomeSynthConfig, rng: SeededRng | None = None) -> PredictionSet:
    """Draw ``y_true`` at each group's base rate, scores from its outcome-specific
    triangle, and decide ``y_hat = score > threshold``.

    Individuals are processed group by group (ascending id of the group), so
    the stream does not depend on how groups interleave in ``assignment``.
    """
    gen = (rng or SeededRng(cfg.seed).derive(OUTCOME_STREAM)).generator
    labels = assignment.labels
    missing = [g for g in assignment.groups if g not in cfg.groups]
    _check(not missing, f"no outcome model for groups {missing}")
    n = len(labels)
    y = np.zeros(n, dtype=np.int64)
    score = np.zeros(n)
    for g in assignment.groups:
        idx = np.flatnonzero(labels == g)
        model = cfg.groups[g]
        yg = (gen.random(len(idx)) < model.base_rate).astype(np.int64)
        sg = np.empty(len(idx))
        sg[yg == 1] = model.positive.sample(gen, int(yg.sum()))
        sg[yg == 0] = model.negative.sample(gen, int((1 - yg).sum()))
        y[idx] = yg
        score[idx] = sg
    return PredictionSet.from_scores(assignment.ids, y, score, cfg.threshold)
