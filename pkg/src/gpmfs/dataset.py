"""Multi-label dataset container, ARFF/CSV readers and writers, scaling and folds.

Labels follow the Mulan convention: every label is a nominal ``{0,1}`` attribute.
Label columns are identified either by name (usually read from the Mulan XML
header) or, for plain files, by counting columns from the end of each row.
"""
from __future__ import annotations

import csv
import io
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import ArgumentError, ParseError, ValidationError

__all__ = [
    "Dataset",
    "FoldAssignment",
    "StandardizationParams",
    "parse_arff",
    "parse_csv",
    "read_mulan_xml",
    "to_arff",
    "to_csv",
    "load_dataset",
    "fit_standardizer",
    "apply_standardizer",
    "kfold_split",
]

LabelSpec = Union[Sequence[str], int]


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``features`` (n x F) and binary label matrix ``labels`` (n x L)."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple = ()
    label_names: tuple = ()
    source: str = ""

    def __post_init__(self):
        X = _frozen(self.features, float)
        Y = np.asarray(self.labels)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValidationError("features and labels must be 2-D matrices")
        n, F = X.shape
        if n < 1:
            raise ValidationError("dataset has no rows")
        if Y.shape[0] != n:
            raise ValidationError(f"features have {n} rows but labels have {Y.shape[0]}")
        if F < 1 or Y.shape[1] < 1:
            raise ValidationError("need at least one feature and one label")
        if not np.all((Y == 0) | (Y == 1)):
            raise ValidationError("label entries must be exactly 0 or 1")
        fnames = tuple(self.feature_names) or tuple(f"feature_{i}" for i in range(F))
        lnames = tuple(self.label_names) or tuple(f"label_{i}" for i in range(Y.shape[1]))
        if len(fnames) != F:
            raise ValidationError(f"{len(fnames)} feature names for {F} features")
        if len(lnames) != Y.shape[1]:
            raise ValidationError(f"{len(lnames)} label names for {Y.shape[1]} labels")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", _frozen(Y, np.int8))
        object.__setattr__(self, "feature_names", fnames)
        object.__setattr__(self, "label_names", lnames)

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.labels[rows], self.feature_names,
                       self.label_names, self.source)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.feature_names == other.feature_names
                and self.label_names == other.label_names
                and self.source == other.source
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))

    __hash__ = None

    def __repr__(self):
        return (f"Dataset(n={self.n_instances}, F={self.n_features}, "
                f"L={self.n_labels}, source={self.source!r})")


# --------------------------------------------------------------------------- ARFF

_NUMERIC_TYPES = {"numeric", "real", "integer"}


def _split_quoted(text: str, lineno: int) -> tuple[str, str]:
    """Split an @attribute remainder into (name, rest), honouring quotes."""
    text = text.strip()
    if not text:
        raise ParseError("attribute declaration lacks a name", lineno)
    if text[0] in "'\"":
        q = text[0]
        i, out = 1, []
        while i < len(text):
            c = text[i]
            if c == "\\" and i + 1 < len(text):
                out.append(text[i + 1])
                i += 2
                continue
            if c == q:
                return "".join(out), text[i + 1:].strip()
            out.append(c)
            i += 1
        raise ParseError("unterminated quoted attribute name", lineno)
    parts = text.split(None, 1)
    return parts[0], parts[1].strip() if len(parts) > 1 else ""


def _split_row(line: str, lineno: int) -> list[str]:
    values, buf, i, quote = [], [], 0, None
    while i < len(line):
        c = line[i]
        if quote:
            if c == "\\" and i + 1 < len(line):
                buf.append(line[i + 1])
                i += 1
            elif c == quote:
                quote = None
            else:
                buf.append(c)
        elif c in "'\"":
            quote = c
        elif c == ",":
            values.append("".join(buf).strip())
            buf = []
        else:
            buf.append(c)
        i += 1
    if quote:
        raise ParseError("unterminated quoted value", lineno)
    values.append("".join(buf).strip())
    return values


def _parse_nominal(spec: str, lineno: int) -> list[str]:
    if not spec.endswith("}"):
        raise ParseError(f"unterminated nominal specification {spec!r}", lineno)
    return [v.strip().strip("'\"") for v in spec[1:-1].split(",")]


def parse_arff(text: str, label_spec: LabelSpec, source: str = "") -> Dataset:
    """Parse a dense Mulan-style ARFF document.

    ``label_spec`` is either the list of label attribute names or an integer
    count of trailing label attributes. Label columns keep their file order.
    """
    attrs: list[tuple[str, str, list[str] | None]] = []
    rows: list[tuple[int, list[str]]] = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            if line.startswith("{"):
                raise ParseError("sparse ARFF rows are not supported", lineno)
            vals = _split_row(line, lineno)
            if len(vals) != len(attrs):
                raise ParseError(f"expected {len(attrs)} values, found {len(vals)}", lineno)
            rows.append((lineno, vals))
            continue
        low = line.lower()
        if low.startswith("@relation"):
            continue
        if low.startswith("@attribute"):
            name, kind = _split_quoted(line[len("@attribute"):], lineno)
            if not kind:
                raise ParseError(f"attribute {name!r} has no type", lineno)
            if kind.startswith("{"):
                attrs.append((name, "nominal", _parse_nominal(kind, lineno)))
            else:
                attrs.append((name, kind.split()[0].lower(), None))
            continue
        if low.startswith("@data"):
            if not attrs:
                raise ParseError("@data section before any @attribute", lineno)
            in_data = True
            continue
        raise ParseError(f"unexpected header line {line[:40]!r}", lineno)
    if not in_data:
        raise ParseError("missing @data section")

    names = [a[0] for a in attrs]
    if isinstance(label_spec, (int, np.integer)):
        count = int(label_spec)
        if count < 1 or count >= len(attrs):
            raise ArgumentError(f"label count {count} invalid for {len(attrs)} attributes")
        label_idx = list(range(len(attrs) - count, len(attrs)))
    else:
        wanted = list(label_spec)
        missing = [w for w in wanted if w not in names]
        if missing:
            raise ValidationError(f"label attributes not found in ARFF header: {missing}")
        wanted_set = set(wanted)
        label_idx = [i for i, nm in enumerate(names) if nm in wanted_set]
        if not label_idx:
            raise ArgumentError("empty label specification")
    label_set = set(label_idx)
    feature_idx = [i for i in range(len(attrs)) if i not in label_set]
    if not feature_idx:
        raise ArgumentError("no feature attributes remain after removing labels")

    for i in label_idx:
        name, kind, nominal = attrs[i]
        if kind != "nominal" or set(nominal) != {"0", "1"}:
            raise ValidationError(f"label attribute {name!r} must be nominal {{0,1}}")
    for i in feature_idx:
        name, kind, _ = attrs[i]
        if kind not in _NUMERIC_TYPES:
            raise ValidationError(f"feature attribute {name!r} has non-numeric type {kind!r}")

    if not rows:
        raise ValidationError("ARFF @data section is empty")
    X = np.empty((len(rows), len(feature_idx)))
    Y = np.empty((len(rows), len(label_idx)), dtype=np.int8)
    for r, (lineno, vals) in enumerate(rows):
        for c, i in enumerate(feature_idx):
            v = vals[i]
            if v == "?":
                raise ValidationError(f"line {lineno}: missing value for {names[i]!r}")
            try:
                X[r, c] = float(v)
            except ValueError:
                raise ParseError(f"non-numeric value {v!r} for {names[i]!r}", lineno) from None
        for c, i in enumerate(label_idx):
            v = vals[i]
            if v == "?":
                raise ValidationError(f"line {lineno}: missing value for {names[i]!r}")
            if v not in ("0", "1"):
                raise ValidationError(f"line {lineno}: label {names[i]!r} has value {v!r}")
            Y[r, c] = int(v)
    return Dataset(X, Y, tuple(names[i] for i in feature_idx),
                   tuple(names[i] for i in label_idx), source)


def read_mulan_xml(text: str) -> list[str]:
    """Label names from a Mulan XML header (``<label name="..."/>`` elements, any depth)."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed label XML: {exc}", getattr(exc, "position", (None,))[0]) from None
    names = [el.get("name") for el in root.iter()
             if el.tag.rsplit("}", 1)[-1] == "label" and el.get("name") is not None]
    if not names:
        raise ValidationError("label XML declares no <label name=...> elements")
    return names


_SAFE_NAME = re.compile(r"^[A-Za-z0-9_.\-]+$")


def _quote(name: str) -> str:
    if _SAFE_NAME.match(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def to_arff(dataset: Dataset, relation: str = "gpmfs") -> str:
    """Serialize as dense ARFF with features first and labels trailing."""
    out = io.StringIO()
    out.write(f"@relation {_quote(relation)}\n\n")
    for nm in dataset.feature_names:
        out.write(f"@attribute {_quote(nm)} numeric\n")
    for nm in dataset.label_names:
        out.write(f"@attribute {_quote(nm)} {{0,1}}\n")
    out.write("\n@data\n")
    for x, y in zip(dataset.features, dataset.labels):
        out.write(",".join([repr(float(v)) for v in x] + [str(int(v)) for v in y]))
        out.write("\n")
    return out.getvalue()


# --------------------------------------------------------------------------- CSV

def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_csv(text: str, label_count: int, source: str = "") -> Dataset:
    """Parse a rectangular CSV whose last ``label_count`` columns are {0,1} labels.

    A header row is detected when any field of the first row is non-numeric.
    """
    if label_count < 1:
        raise ArgumentError("label_count must be positive")
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1)
            if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("CSV input is empty")
    header = None
    if not all(_is_number(c) for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    width = len(header) if header is not None else len(rows[0][1])
    if label_count >= width:
        raise ArgumentError(f"label_count {label_count} leaves no features in {width} columns")
    if not rows:
        raise ValidationError("CSV has a header but no data rows")
    for lineno, vals in rows:
        if len(vals) != width:
            raise ParseError(f"ragged row: expected {width} columns, found {len(vals)}", lineno)
    n_feat = width - label_count
    X = np.empty((len(rows), n_feat))
    Y = np.empty((len(rows), label_count), dtype=np.int8)
    for r, (lineno, vals) in enumerate(rows):
        for c, v in enumerate(vals):
            v = v.strip()
            if v in ("?", ""):
                raise ValidationError(f"line {lineno}: missing value in column {c}")
            try:
                num = float(v)
            except ValueError:
                raise ParseError(f"non-numeric value {v!r} in column {c}", lineno) from None
            if c < n_feat:
                X[r, c] = num
            elif num in (0.0, 1.0):
                Y[r, c - n_feat] = int(num)
            else:
                raise ValidationError(f"line {lineno}: label column {c} has value {v!r}")
    fnames = tuple(header[:n_feat]) if header else ()
    lnames = tuple(header[n_feat:]) if header else ()
    return Dataset(X, Y, fnames, lnames, source)


def to_csv(dataset: Dataset) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(list(dataset.feature_names) + list(dataset.label_names))
    for x, y in zip(dataset.features, dataset.labels):
        w.writerow([repr(float(v)) for v in x] + [int(v) for v in y])
    return out.getvalue()


def load_dataset(path, fmt: str, xml_path=None, label_count=None) -> Dataset:
    """Read a dataset from disk. ``fmt`` is one of arff-with-xml, arff-trailing, csv."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if fmt == "arff-with-xml":
        if xml_path is None:
            raise ArgumentError("format arff-with-xml requires an XML label header")
        names = read_mulan_xml(Path(xml_path).read_text(encoding="utf-8"))
        return parse_arff(text, names, source=str(path))
    if label_count is None:
        raise ArgumentError(f"format {fmt} requires a label count")
    if fmt == "arff-trailing":
        return parse_arff(text, int(label_count), source=str(path))
    if fmt == "csv":
        return parse_csv(text, int(label_count), source=str(path))
    raise ArgumentError(f"unknown dataset format {fmt!r}")


# --------------------------------------------------------------------------- scaling

@dataclass(frozen=True, eq=False)
class StandardizationParams:
    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means, float))
        object.__setattr__(self, "stddevs", _frozen(self.stddevs, float))
        if self.means.shape != self.stddevs.shape or self.means.ndim != 1:
            raise ArgumentError("means and stddevs must be vectors of equal length")
        if np.any(self.stddevs < 0):
            raise ArgumentError("standard deviations must be nonnegative")


def fit_standardizer(dataset: Dataset, rows=None) -> StandardizationParams:
    """Population mean and standard deviation of each feature over ``rows``."""
    X = dataset.features if rows is None else dataset.features[np.asarray(rows, dtype=int)]
    if X.shape[0] == 0:
        raise ArgumentError("cannot fit a standardizer on an empty row set")
    mean = X.mean(axis=0)
    std = np.sqrt(((X - mean) ** 2).mean(axis=0))
    # round-off on constant columns must not leave a tiny positive stddev
    std[np.all(X == X[0], axis=0)] = 0.0
    return StandardizationParams(mean, std)


def apply_standardizer(dataset: Dataset, params: StandardizationParams) -> Dataset:
    if params.means.shape[0] != dataset.n_features:
        raise ArgumentError(
            f"standardizer fitted on {params.means.shape[0]} features, dataset has {dataset.n_features}")
    safe = np.where(params.stddevs > 0, params.stddevs, 1.0)
    Z = (dataset.features - params.means) / safe
    Z[:, params.stddevs == 0] = 0.0
    return Dataset(Z, dataset.labels, dataset.feature_names, dataset.label_names, dataset.source)


# --------------------------------------------------------------------------- folds

@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_count: int
    assignment: np.ndarray
    seed: int
    generator: str = field(default="numpy.PCG64")

    def __post_init__(self):
        object.__setattr__(self, "assignment", _frozen(self.assignment, np.int64))

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def fold_sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.fold_count).tolist()


def kfold_split(n: int, fold_count: int, seed: int) -> FoldAssignment:
    """Balanced fold assignment from a seeded shuffle of ``range(n)``.

    Shuffled position ``i`` goes to fold ``i % fold_count``, so sizes differ by at most one.
    """
    if n < 1 or fold_count < 1:
        raise ArgumentError("n and fold_count must be positive")
    if fold_count > n:
        raise ArgumentError(f"fold_count {fold_count} exceeds the number of rows {n}")
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    order = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % fold_count
    return FoldAssignment(fold_count, assignment, int(seed))
