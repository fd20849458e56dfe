"""Domain data model shared by the detection, measurement and fairness code.

Everything here is immutable after construction. Feature matrices are stored
as read-only numpy arrays aligned with ``Population.ids``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateId,
    FeatureLengthMismatch,
    NonBinaryFeature,
    PartialLatentLabels,
    SchemaError,
    SelfLoop,
    UnassignedIndividual,
    UnknownNode,
    InputError,
)

CATEGORIES = ("phenotype", "class", "nationality")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Feature:
    name: str
    category: str


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered binary features, each tagged with the channel it proxies."""

    features: tuple[Feature, ...]

    def __post_init__(self):
        feats = tuple(f if isinstance(f, Feature) else Feature(*f) for f in self.features)
        object.__setattr__(self, "features", feats)
        if not feats:
            raise SchemaError("schema must contain at least one feature")
        names = [f.name for f in feats]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate feature names in {names}")
        for f in feats:
            if f.category not in CATEGORIES:
                raise SchemaError(
                    f"feature {f.name!r} has category {f.category!r}; expected one of {CATEGORIES}"
                )

    @classmethod
    def of(cls, *pairs: tuple[str, str]) -> "FeatureSchema":
        return cls(tuple(Feature(n, c) for n, c in pairs))

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def __len__(self) -> int:
        return len(self.features)


@dataclass(frozen=True, eq=False)
class Population:
    """Individuals with binary feature vectors and optional latent labels.

    ``features`` is an ``(n, k)`` uint8 array whose rows follow ``ids``.
    """

    schema: FeatureSchema
    ids: tuple[Hashable, ...]
    features: np.ndarray
    latent: np.ndarray | None = None
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {pid: i for i, pid in enumerate(self.ids)})

    def __len__(self) -> int:
        return len(self.ids)

    def index_of(self, pid: Hashable) -> int:
        try:
            return self._index[pid]
        except KeyError:
            raise UnknownNode(f"{pid!r} is not a member of the population") from None

    def __contains__(self, pid) -> bool:
        return pid in self._index

    def feature_vector(self, pid: Hashable) -> np.ndarray:
        return self.features[self.index_of(pid)]

    def latent_assignment(self) -> "GroupAssignment":
        if self.latent is None:
            raise InputError("population carries no latent labels")
        return GroupAssignment(self.ids, self.latent, provenance="reference")


def build_population(
    schema: FeatureSchema,
    rows: Iterable[Sequence[Any]],
) -> Population:
    """Validate ``(id, bits[, latent])`` rows into a :class:`Population`."""
    rows = list(rows)
    if not rows:
        raise InputError("population needs at least one row")
    k = len(schema)
    ids: list = []
    seen: set = set()
    bits = np.zeros((len(rows), k), dtype=np.uint8)
    latents: list = []
    for r, row in enumerate(rows):
        pid, vec = row[0], row[1]
        latent = row[2] if len(row) > 2 else None
        if pid in seen:
            raise DuplicateId(f"duplicate id {pid!r}")
        seen.add(pid)
        ids.append(pid)
        vec = list(vec)
        if len(vec) != k:
            raise FeatureLengthMismatch(
                f"row {pid!r} has {len(vec)} features, schema expects {k}"
            )
        for c, v in enumerate(vec):
            if v not in (0, 1):
                raise NonBinaryFeature(f"row {pid!r} feature {schema.names[c]!r} = {v!r}")
            bits[r, c] = int(v)
        latents.append(latent)

    present = [x is not None for x in latents]
    if any(present) and not all(present):
        raise PartialLatentLabels("latent labels must be given for all individuals or none")
    latent = _frozen(np.asarray(latents, dtype=np.int64)) if all(present) else None
    return Population(schema, tuple(ids), _frozen(bits), latent)


@dataclass(frozen=True)
class TractMap:
    tract_of: Mapping[Hashable, Hashable]
    tract_ids: tuple[Hashable, ...]

    def __post_init__(self):
        object.__setattr__(self, "tract_ids", tuple(self.tract_ids))
        listed = set(self.tract_ids)
        if len(listed) != len(self.tract_ids):
            raise InputError("tract ids must be unique")
        stray = {t for t in self.tract_of.values() if t not in listed}
        if stray:
            raise InputError(f"individuals mapped to unlisted tracts {sorted(map(str, stray))}")
        if len(set(self.tract_of.values())) < 2:
            raise InputError("a tract map must reference at least two tracts")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Hashable, Hashable]]) -> "TractMap":
        tract_of: dict = {}
        order: dict = {}
        for pid, tract in pairs:
            if pid in tract_of:
                raise DuplicateId(f"individual {pid!r} mapped to a tract twice")
            tract_of[pid] = tract
            order.setdefault(tract, None)
        return cls(tract_of, tuple(order))

    def index_array(self, ids: Sequence[Hashable]) -> np.ndarray:
        """Tract position (into ``tract_ids``) for each id, in order."""
        pos = {t: i for i, t in enumerate(self.tract_ids)}
        try:
            return np.fromiter((pos[self.tract_of[pid]] for pid in ids), dtype=np.int64, count=len(ids))
        except KeyError as exc:
            raise UnassignedIndividual(f"individual {exc.args[0]!r} has no tract") from None


@dataclass(frozen=True)
class SocialGraph:
    """Undirected simple graph; ``edges`` are canonical ``(u, v)`` with u sorted first."""

    nodes: tuple[Hashable, ...]
    edges: tuple[tuple[Hashable, Hashable], ...]

    def __len__(self) -> int:
        return len(self.edges)


def _edge_key(u, v):
    try:
        return (u, v) if u <= v else (v, u)
    except TypeError:
        return (u, v) if str(u) <= str(v) else (v, u)


def build_graph(pop: Population | Iterable[Hashable], edges: Iterable[tuple[Hashable, Hashable]]) -> SocialGraph:
    """Deduplicate an edge list into an undirected simple graph over ``pop``."""
    nodes = tuple(pop.ids) if isinstance(pop, Population) else tuple(pop)
    members = set(nodes)
    canon: set = set()
    for u, v in edges:
        if u == v:
            raise SelfLoop(f"self-loop on {u!r}")
        for end in (u, v):
            if end not in members:
                raise UnknownNode(f"edge endpoint {end!r} is not in the population")
        canon.add(_edge_key(u, v))
    try:
        ordered = tuple(sorted(canon))
    except TypeError:
        ordered = tuple(sorted(canon, key=lambda e: (str(e[0]), str(e[1]))))
    return SocialGraph(nodes, ordered)


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    """Group label per individual plus a record of how the labels were produced.

    ``provenance`` is either the string ``"reference"`` or a detection record
    (see :class:`racelike.detect.Provenance`).
    """

    ids: tuple[Hashable, ...]
    labels: np.ndarray
    provenance: Any = "reference"

    def __post_init__(self):
        ids = tuple(self.ids)
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(ids),):
            raise InputError("one label per individual is required")
        if len(ids) == 0:
            raise InputError("an assignment needs at least one individual")
        if len(set(ids)) != len(ids):
            raise DuplicateId("duplicate ids in group assignment")
        if (labels < 0).any():
            raise InputError("group ids must be non-negative integers")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", _frozen(labels.copy()))
        object.__setattr__(self, "_index", {pid: i for i, pid in enumerate(ids)})

    @classmethod
    def from_mapping(cls, group_of: Mapping[Hashable, int], provenance: Any = "reference") -> "GroupAssignment":
        return cls(tuple(group_of), np.fromiter(group_of.values(), dtype=np.int64, count=len(group_of)), provenance)

    @property
    def group_of(self) -> dict:
        return dict(zip(self.ids, self.labels.tolist()))

    @property
    def groups(self) -> list[int]:
        """Distinct group ids actually in use, ascending."""
        return np.unique(self.labels).tolist()

    def __len__(self) -> int:
        return len(self.ids)

    def labels_for(self, ids: Sequence[Hashable]) -> np.ndarray:
        try:
            return np.fromiter((self.labels[self._index[pid]] for pid in ids), dtype=np.int64, count=len(ids))
        except KeyError as exc:
            raise UnassignedIndividual(f"{exc.args[0]!r} has no group") from None


class SeededRng:
    """Explicit random stream: numpy's PCG64 keyed by a 64-bit seed.

    ``derive(stream)`` returns an independent, reproducible child stream so
    separate pipeline stages sharing one configured seed do not reuse draws.
    """

    ALGORITHM = "PCG64"

    def __init__(self, seed: int, _key: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise InputError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self._key = _key
        seq = np.random.SeedSequence(self.seed, spawn_key=_key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def derive(self, stream: int) -> "SeededRng":
        return SeededRng(self.seed, self._key + (int(stream),))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, key={self._key})"
