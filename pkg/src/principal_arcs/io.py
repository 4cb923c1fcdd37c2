"""JSON datasets and models, CSV tables.

A dataset file looks like::

    {"signature": ["S2", "Rplus"],
     "points": [[[0, 0, 1], 1.5], ...],
     "labels": ["a", ...],          # optional
     "metadata": {"seed": 7}}       # optional

S1 values are radians, S2 values ``[x, y, z]``, Rplus positive scalars and
``R<p>`` length-p lists.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .manifold import Kind, Signature


@dataclass
class DatasetFile:
    signature: Signature
    points: list  # tuples of validated component values
    labels: list | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.signature, (str, list, tuple)):
            self.signature = Signature.parse(self.signature)
        self.points = [self.signature.validate_point(p, i) for i, p in enumerate(self.points)]
        if self.labels is not None and len(self.labels) != len(self.points):
            raise SchemaError(f"labels: expected {len(self.points)} entries, got {len(self.labels)}")

    def __len__(self):
        return len(self.points)

    def column(self, j: int) -> np.ndarray:
        return np.array([p[j] for p in self.points])

    def to_dict(self) -> dict:
        d = {"signature": self.signature.tags,
             "points": [[_jsonable(v) for v in p] for p in self.points]}
        if self.labels is not None:
            d["labels"] = list(self.labels)
        if self.metadata:
            d["metadata"] = self.metadata
        return d

    @classmethod
    def from_dict(cls, d) -> "DatasetFile":
        if not isinstance(d, dict):
            raise SchemaError("dataset must be a JSON object")
        for key in ("signature", "points"):
            if key not in d:
                raise SchemaError(f"dataset is missing field {key!r}")
        if not isinstance(d["points"], list):
            raise SchemaError("field 'points' must be a list")
        labels = d.get("labels")
        if labels is not None and not (isinstance(labels, list) and all(isinstance(s, str) for s in labels)):
            raise SchemaError("field 'labels' must be a list of strings")
        meta = d.get("metadata", {})
        if not isinstance(meta, dict):
            raise SchemaError("field 'metadata' must be an object")
        return cls(Signature.parse(d["signature"]), d["points"], labels, meta)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_jsonable) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None


def write_dataset(path, ds: DatasetFile) -> None:
    write_json(path, ds.to_dict())


def read_dataset(path) -> DatasetFile:
    return DatasetFile.from_dict(read_json(path))


def write_model(path, model) -> None:
    from .pipeline import model_to_dict

    write_json(path, model_to_dict(model))


def read_model(path):
    from .pipeline import model_from_dict

    d = read_json(path)
    try:
        return model_from_dict(d)
    except KeyError as exc:
        raise SchemaError(f"model is missing field {exc.args[0]!r}") from None


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def product_point_to_json(point, sig: Signature) -> list:
    out = []
    for comp, v in zip(sig.components, point):
        if comp.kind in (Kind.SPHERE, Kind.EUCLIDEAN):
            out.append(np.asarray(v, dtype=float).tolist())
        else:
            out.append(float(v))
    return out
