"""Labeled complex datasets, train/val/test splits, and the binary dataset file.

File layout (all integers little-endian)::

    b"CXDS"                      magic
    uint32                       format version (1)
    uint32                       header length in bytes
    header                       UTF-8 JSON, sorted keys
    float32[N, C, T, 2]          samples of train, then val, then test; (re, im) interleaved
    uint8[N]                     class ids in the same order
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"CXDS"
VERSION = 1
SPLITS = ("train", "val", "test")


class DegenerateInputError(ValueError):
    pass


@dataclass
class ComplexSeq:
    samples: np.ndarray  # complex [C, T]
    label: int
    meta: dict = field(default_factory=dict)


@dataclass
class Dataset:
    x: np.ndarray  # complex [N, C, T]
    y: np.ndarray  # int [N]
    class_names: tuple
    meta: dict = field(default_factory=dict)
    index: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.ndim != 3 or len(self.x) != len(self.y):
            raise ValueError("dataset needs x: [N, C, T] and y: [N]")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= len(self.class_names)):
            raise ValueError("label outside the class set")
        if not np.all(np.isfinite(self.x.view(float))):
            raise ValueError("dataset contains non-finite samples")
        if self.index is None:
            self.index = np.arange(len(self.y))

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, i) -> ComplexSeq:
        return ComplexSeq(self.x[i], int(self.y[i]), dict(self.meta))

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def channels(self) -> int:
        return self.x.shape[1]

    @property
    def length(self) -> int:
        return self.x.shape[2]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)


@dataclass
class Splits:
    train: Dataset
    val: Dataset
    test: Dataset
    header: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.train, self.val, self.test))

    @property
    def n_classes(self) -> int:
        return self.train.n_classes


def make_splits(parts: dict, class_names, header: dict) -> Splits:
    """Assemble splits from ``{split: (x, y, extra_meta)}`` with disjoint global indices."""
    out, start = {}, 0
    for name in SPLITS:
        x, y, meta = parts[name]
        idx = np.arange(start, start + len(y))
        start += len(y)
        out[name] = Dataset(x, y, tuple(class_names), {**header, **meta, "split": name}, idx)
    return Splits(out["train"], out["val"], out["test"], dict(header))


def stratified(n_per_class) -> tuple:
    if np.isscalar(n_per_class):
        n = int(n_per_class)
        return n, max(1, n // 4), max(1, n // 4)
    return tuple(int(v) for v in n_per_class)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_dataset(path, splits: Splits) -> Path:
    path = Path(path)
    first = splits.train
    header = _jsonable({
        **splits.header,
        "class_names": list(first.class_names),
        "counts": {name: len(getattr(splits, name)) for name in SPLITS},
        "channels": first.channels,
        "T": first.length,
    })
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    xs = np.concatenate([d.x for d in splits])
    ys = np.concatenate([d.y for d in splits])
    samples = np.stack([xs.real, xs.imag], axis=-1).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", VERSION, len(blob)) + blob)
        fh.write(samples.tobytes())
        fh.write(ys.astype(np.uint8).tobytes())
    return path


def read_dataset(path) -> Splits:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path} is not a dataset file")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise ValueError(f"unsupported dataset version {version}")
    header = json.loads(raw[12:12 + hlen])
    counts = header["counts"]
    n = sum(counts[s] for s in SPLITS)
    C, T = header["channels"], header["T"]
    off = 12 + hlen
    nbytes = n * C * T * 2 * 4
    samples = np.frombuffer(raw, dtype="<f4", count=n * C * T * 2, offset=off).reshape(n, C, T, 2)
    labels = np.frombuffer(raw, dtype=np.uint8, count=n, offset=off + nbytes).astype(np.int64)
    x = samples[..., 0].astype(float) + 1j * samples[..., 1].astype(float)
    parts, start = {}, 0
    for s in SPLITS:
        parts[s] = (x[start:start + counts[s]], labels[start:start + counts[s]], {})
        start += counts[s]
    meta = {k: v for k, v in header.items() if k not in ("class_names", "counts", "channels", "T")}
    return make_splits(parts, header["class_names"], meta)
