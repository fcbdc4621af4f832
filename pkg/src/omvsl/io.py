"""Text interchange: numeric tables, dataset manifests and projection bundles."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import LABEL_KINDS, MultiViewDataset

__all__ = [
    "InputError",
    "Manifest",
    "read_matrix",
    "write_matrix",
    "read_manifest",
    "load_dataset",
    "save_bundle",
    "load_bundle",
    "dump_json",
]


class InputError(ValueError):
    """Malformed or inconsistent input files."""


def read_matrix(path, delimiter: str = ",") -> np.ndarray:
    """Read a headerless delimiter-separated numeric table."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh, delimiter=delimiter)):
            if not row or all(not cell.strip() for cell in row):
                continue
            vals = []
            for j, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}: non-numeric cell {cell!r} at row {i + 1}, column {j + 1}") from None
            if rows and len(vals) != len(rows[0]):
                raise InputError(
                    f"{path}: row {i + 1} has {len(vals)} columns, expected {len(rows[0])}")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: empty table")
    M = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{path}: non-finite values")
    return M


def write_matrix(path, M, delimiter: str = ",") -> None:
    """Write with 17 significant digits so values round-trip exactly."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        for row in M:
            fh.write(delimiter.join(format(x, ".17g") for x in row))
            fh.write("\n")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


@dataclass
class ViewEntry:
    id: str
    path: Path
    features: int | None = None


@dataclass
class Manifest:
    name: str
    views: list
    labels_path: Path | None = None
    label_kind: str = "none"
    delimiter: str = ","
    root: Path = field(default_factory=Path)


def read_manifest(path) -> Manifest:
    """Parse a JSON manifest; relative paths resolve against its directory.

    ::

        {"name": "toy", "delimiter": ",",
         "views": [{"id": "a", "path": "a.csv", "features": 4}, ...],
         "labels": {"path": "y.csv", "kind": "multiclass_onehot"}}
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    root = path.parent
    entries = raw.get("views") or []
    if not entries:
        raise InputError(f"{path}: manifest lists no views")
    views = []
    for e in entries:
        if "id" not in e or "path" not in e:
            raise InputError(f"{path}: every view needs 'id' and 'path'")
        views.append(ViewEntry(str(e["id"]), root / e["path"], e.get("features")))
    ids = [e.id for e in views]
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate view ids {ids}")
    labels = raw.get("labels")
    kind = "none"
    labels_path = None
    if labels:
        labels_path = root / labels["path"]
        kind = labels.get("kind", "multiclass_onehot")
        if kind not in LABEL_KINDS or kind == "none":
            raise InputError(f"{path}: unknown label kind {kind!r}")
    return Manifest(str(raw.get("name", path.stem)), views, labels_path, kind,
                    raw.get("delimiter", ","), root)


def load_dataset(manifest) -> MultiViewDataset:
    """Load every table named by ``manifest`` (a path or :class:`Manifest`)."""
    m = manifest if isinstance(manifest, Manifest) else read_manifest(manifest)
    views = []
    n = None
    for e in m.views:
        if not e.path.exists():
            raise InputError(f"view {e.id!r}: file {e.path} not found")
        X = read_matrix(e.path, m.delimiter)
        if e.features is not None and X.shape[1] != int(e.features):
            raise InputError(
                f"view {e.id!r}: manifest declares {e.features} features, file has {X.shape[1]}")
        if n is not None and X.shape[0] != n:
            raise InputError(
                f"view {e.id!r} has {X.shape[0]} rows but view {m.views[0].id!r} has {n}")
        n = X.shape[0]
        views.append(X.T)
    Y = None
    if m.labels_path is not None:
        if not m.labels_path.exists():
            raise InputError(f"label file {m.labels_path} not found")
        L = read_matrix(m.labels_path, m.delimiter)
        if L.shape[0] != n:
            raise InputError(f"label file has {L.shape[0]} rows but views have {n}")
        if not np.all((L == 0) | (L == 1)):
            raise InputError("label file must be binary")
        if m.label_kind == "multiclass_onehot":
            sums = L.sum(axis=1)
            bad = np.flatnonzero(sums != 1)
            if bad.size:
                raise InputError(
                    f"one-hot violation: label row {bad[0] + 1} sums to {int(sums[bad[0]])}")
        Y = L.T
    return MultiViewDataset(tuple(views), Y, m.label_kind)


def save_bundle(out_dir, view_ids, matrices, meta: dict, delimiter: str = ",") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for vid, P in zip(view_ids, matrices):
        name = f"projection_{vid}.csv"
        write_matrix(out / name, P, delimiter)
        files.append(name)
    meta = dict(meta)
    meta["views"] = list(view_ids)
    meta["files"] = files
    meta["delimiter"] = delimiter
    (out / "meta.json").write_text(dump_json(meta))


def load_bundle(bundle_dir):
    """Return ``(meta, matrices)`` from a directory written by :func:`save_bundle`."""
    bundle = Path(bundle_dir)
    meta_path = bundle / "meta.json"
    if not meta_path.exists():
        raise InputError(f"{bundle}: no meta.json")
    meta = json.loads(meta_path.read_text())
    mats = [read_matrix(bundle / f, meta.get("delimiter", ",")) for f in meta["files"]]
    return meta, mats
