"""Ensemble files.

Binary layout (little endian), 28-byte header followed by the data::

    magic        4s   b"UQT1"
    version      u16  1
    kind         u8   0 = probabilities, 1 = logits
    reserved     u8   0
    M, N, K      u32 x 3
    temperature  f64
    values       f64 x M*N*K, ordered [member][sample][class]

A long-format CSV with header ``member,sample,class,value`` is accepted as
an interchange format and converts to the same tensor.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from uqt.errors import ValidationError
from uqt.simplex import EnsemblePredictions, PredictionKind

MAGIC = b"UQT1"
VERSION = 1
HEADER = struct.Struct("<4sHBBIIId")
CSV_FIELDS = ("member", "sample", "class", "value")

assert HEADER.size == 28


def encode_ensemble(e: EnsemblePredictions) -> bytes:
    header = HEADER.pack(MAGIC, VERSION, e.kind.value, 0, e.M, e.N, e.K, e.temperature)
    return header + np.ascontiguousarray(e.values, dtype="<f8").tobytes()


def decode_ensemble(data: bytes) -> EnsemblePredictions:
    if len(data) < HEADER.size:
        raise ValidationError(f"file too short for header ({len(data)} bytes)")
    magic, version, kind, _reserved, M, N, K, temperature = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValidationError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ValidationError(f"unsupported version {version}")
    if kind not in (0, 1):
        raise ValidationError(f"unknown value kind {kind}")
    expected = HEADER.size + 8 * M * N * K
    if len(data) != expected:
        raise ValidationError(f"byte length {len(data)} does not match header (expected {expected})")
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(M, N, K)
    if np.any(np.isnan(values)):
        raise ValidationError("NaN in ensemble values")
    return EnsemblePredictions(values.astype(np.float64), PredictionKind(kind), temperature)


def write_ensemble(path, e: EnsemblePredictions) -> None:
    Path(path).write_bytes(encode_ensemble(e))


def read_ensemble_csv(path, kind=PredictionKind.PROBABILITIES, temperature: float = 1.0) -> EnsemblePredictions:
    """Load the long-format CSV; rows may come in any order but every
    ``(member, sample, class)`` cell must appear exactly once."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(f.strip() for f in (reader.fieldnames or ())) != CSV_FIELDS:
            raise ValidationError(f"CSV header must be {','.join(CSV_FIELDS)}")
        try:
            rows = [(int(r["member"]), int(r["sample"]), int(r["class"]), float(r["value"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed CSV row: {exc}") from None
    if not rows:
        raise ValidationError("CSV has no data rows")
    idx = np.array([r[:3] for r in rows], dtype=np.int64)
    if idx.min() < 0:
        raise ValidationError("negative index in CSV")
    M, N, K = (idx.max(axis=0) + 1).tolist()
    seen = np.zeros((M, N, K), dtype=np.int64)
    np.add.at(seen, tuple(idx.T), 1)
    if np.any(seen > 1):
        raise ValidationError("duplicate (member, sample, class) rows in CSV")
    if np.any(seen == 0):
        raise ValidationError("CSV is incomplete: missing (member, sample, class) cells")
    values = np.empty((M, N, K))
    values[tuple(idx.T)] = [r[3] for r in rows]
    if np.any(np.isnan(values)):
        raise ValidationError("NaN in ensemble values")
    return EnsemblePredictions(values, PredictionKind(kind), temperature)


def read_ensemble(path, temperature: float | None = None) -> EnsemblePredictions:
    """Read a binary ensemble file, or a CSV one if the name ends in ``.csv``.

    ``temperature``, when given, overrides the value stored in the file.
    """
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            e = read_ensemble_csv(path)
        else:
            e = decode_ensemble(path.read_bytes())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    if temperature is not None:
        e = e.with_temperature(temperature)
    return e


def read_labels(path) -> np.ndarray:
    """Class labels from a CSV with header ``sample_index,label``, returned
    in sample order. A single unnamed column of labels is also accepted."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError("labels file is empty")
    head = [c.strip().lower() for c in rows[0]]
    try:
        if head == ["sample_index", "label"]:
            pairs = sorted((int(a), int(b)) for a, b in rows[1:])
            if [p[0] for p in pairs] != list(range(len(pairs))):
                raise ValidationError("sample_index must cover 0..N-1 exactly once")
            return np.array([p[1] for p in pairs], dtype=np.int64)
        if len(head) == 1:
            body = rows[1:] if head == ["label"] else rows
            return np.array([int(r[0]) for r in body], dtype=np.int64)
    except ValueError as exc:
        raise ValidationError(f"malformed labels file: {exc}") from None
    raise ValidationError("labels CSV must have header sample_index,label")


def write_labels(path, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_index", "label"])
        for i, y in enumerate(np.asarray(labels).tolist()):
            w.writerow([i, int(y)])
