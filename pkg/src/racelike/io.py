"""CSV interchange formats.

individuals.csv  ``id[,tract_id][,latent],f_<category>_<label>...``
tracts.csv       ``id,tract_id``
edges.csv        ``src,dst``
groups.csv       ``id,group``
predictions.csv  ``id,y_true,score,y_hat``

All files are UTF-8, comma separated, with a header row. Ids are kept as
strings.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import (
    CATEGORIES,
    Feature,
    FeatureSchema,
    GroupAssignment,
    Population,
    SocialGraph,
    TractMap,
    build_graph,
    build_population,
)
from .errors import InputError, RacelikeError
from .fairness import PredictionSet


class ParseError(InputError):
    pass


def _rows(path: Path | str, required: Sequence[str]) -> tuple[list[str], Iterator[tuple[int, dict]]]:
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty, a header row is required") from None
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"{path}: line 1: missing required columns {missing}")
        rows = []
        for line_no, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise ParseError(f"{path}: line {line_no}: expected {len(header)} fields, got {len(raw)}")
            rows.append((line_no, dict(zip(header, (c.strip() for c in raw)))))
    return header, iter(rows)


def _int(value: str, what: str, path, line_no: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{path}: line {line_no}: {what} {value!r} is not an integer") from None


def _float(value: str, what: str, path, line_no: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"{path}: line {line_no}: {what} {value!r} is not a number") from None


def schema_from_header(header: Sequence[str]) -> FeatureSchema:
    feats = []
    for col in header:
        if not col.startswith("f_"):
            continue
        name = col[2:]
        category = name.split("_", 1)[0]
        if category not in CATEGORIES:
            raise ParseError(
                f"feature column {col!r} must be named f_<category>_<label> with category in {CATEGORIES}"
            )
        feats.append(Feature(name, category))
    if not feats:
        raise ParseError("no feature columns (f_<category>_<label>) in header")
    return FeatureSchema(tuple(feats))


def read_individuals(path) -> tuple[Population, TractMap | None]:
    header, rows = _rows(path, ["id"])
    schema = schema_from_header(header)
    cols = ["f_" + n for n in schema.names]
    has_tract = "tract_id" in header
    has_latent = "latent" in header
    pop_rows = []
    tract_pairs = []
    for line_no, row in rows:
        bits = []
        for c in cols:
            v = row[c]
            if v not in ("0", "1"):
                raise ParseError(f"{path}: line {line_no}: feature {c} = {v!r} is not 0/1")
            bits.append(int(v))
        latent = _int(row["latent"], "latent", path, line_no) if has_latent else None
        pop_rows.append((row["id"], bits, latent) if has_latent else (row["id"], bits))
        if has_tract:
            tract_pairs.append((row["id"], row["tract_id"]))
    if not pop_rows:
        raise ParseError(f"{path}: no data rows")
    try:
        pop = build_population(schema, pop_rows)
    except RacelikeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    tracts = TractMap.from_pairs(tract_pairs) if has_tract else None
    return pop, tracts


def read_tracts(path) -> TractMap:
    _, rows = _rows(path, ["id", "tract_id"])
    return TractMap.from_pairs((row["id"], row["tract_id"]) for _, row in rows)


def read_edges(path, nodes: Population | Iterable) -> SocialGraph:
    _, rows = _rows(path, ["src", "dst"])
    return build_graph(nodes, [(row["src"], row["dst"]) for _, row in rows])


def read_groups(path) -> GroupAssignment:
    """Read ``id,group`` (or, failing that, ``id,latent`` from an individuals file)."""
    header, rows = _rows(path, ["id"])
    col = "group" if "group" in header else "latent" if "latent" in header else None
    if col is None:
        raise ParseError(f"{path}: line 1: need a 'group' (or 'latent') column")
    mapping: dict = {}
    for line_no, row in rows:
        if row["id"] in mapping:
            raise ParseError(f"{path}: line {line_no}: duplicate id {row['id']!r}")
        g = _int(row[col], col, path, line_no)
        if g < 0:
            raise ParseError(f"{path}: line {line_no}: group ids must be non-negative")
        mapping[row["id"]] = g
    if not mapping:
        raise ParseError(f"{path}: no data rows")
    return GroupAssignment.from_mapping(mapping)


def read_predictions(path) -> PredictionSet:
    _, rows = _rows(path, ["id", "y_true", "score", "y_hat"])
    ids, y, s, yh = [], [], [], []
    for line_no, row in rows:
        ids.append(row["id"])
        y.append(_int(row["y_true"], "y_true", path, line_no))
        s.append(_float(row["score"], "score", path, line_no))
        yh.append(_int(row["y_hat"], "y_hat", path, line_no))
    if not ids:
        raise ParseError(f"{path}: no data rows")
    try:
        return PredictionSet(tuple(ids), y, s, yh)
    except RacelikeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _writer(path):
    fh = Path(path).open("w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_individuals(path, pop: Population, tracts: TractMap | None = None) -> None:
    fh, w = _writer(path)
    with fh:
        header = ["id"]
        if tracts is not None:
            header.append("tract_id")
        if pop.latent is not None:
            header.append("latent")
        header += ["f_" + n for n in pop.schema.names]
        w.writerow(header)
        for i, pid in enumerate(pop.ids):
            row = [pid]
            if tracts is not None:
                row.append(tracts.tract_of[pid])
            if pop.latent is not None:
                row.append(int(pop.latent[i]))
            row += pop.features[i].tolist()
            w.writerow(row)


def write_tracts(path, pop_ids: Sequence, tracts: TractMap) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["id", "tract_id"])
        for pid in pop_ids:
            w.writerow([pid, tracts.tract_of[pid]])


def write_edges(path, graph: SocialGraph) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["src", "dst"])
        w.writerows(graph.edges)


def write_groups(path, assignment: GroupAssignment) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["id", "group"])
        for pid, g in zip(assignment.ids, assignment.labels.tolist()):
            w.writerow([pid, g])


def write_predictions(path, preds: PredictionSet) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["id", "y_true", "score", "y_hat"])
        for pid, y, s, yh in zip(preds.ids, preds.y_true.tolist(), preds.score.tolist(), preds.y_hat.tolist()):
            w.writerow([pid, y, repr(float(s)), yh])
