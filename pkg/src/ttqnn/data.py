"""Datasets: synthetic two-class amplitude vectors and IDX image files."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class RawDataset:
    vectors: np.ndarray  # (N, 2**n)
    labels: np.ndarray  # (N,) ints in {0, 1}
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if vectors.ndim != 2 or labels.ndim != 1 or len(vectors) != len(labels):
            raise ValueError("vectors must be (N, D) and labels (N,)")
        dim = vectors.shape[1]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"vector dimension {dim} is not a power of two")
        if not set(np.unique(labels)) <= {0, 1}:
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_qubits(self) -> int:
        return self.vectors.shape[1].bit_length() - 1

    def subset(self, idx) -> "RawDataset":
        return replace(self, vectors=self.vectors[idx], labels=self.labels[idx])


def class_means(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """|0>|+...+> and |1>|+...+>: orthogonal, told apart by qubit 1 alone."""
    dim = 2**n_qubits
    half = dim // 2
    mu0 = np.zeros(dim)
    mu1 = np.zeros(dim)
    mu0[:half] = 1 / np.sqrt(half)
    mu1[half:] = 1 / np.sqrt(half)
    return mu0, mu1


def generate_synthetic(
    n_qubits: int, per_class: int, separation: float = 4.0, seed: int = 0
) -> RawDataset:
    """Two noisy clusters ``normalize(mu_c + noise / separation)`` with ``mu_0 _|_ mu_1``.

    Noise is standard normal per coordinate; samples alternate 0, 1, 0, 1, ...
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if separation <= 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    means = np.stack(class_means(n_qubits))
    labels = np.tile([0, 1], per_class)
    noise = rng.standard_normal((labels.size, 2**n_qubits)) / separation
    vectors = means[labels] + noise
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    prov = {
        "source": "synthetic",
        "n_qubits": n_qubits,
        "per_class": per_class,
        "separation": separation,
        "seed": seed,
    }
    return RawDataset(vectors, labels, prov)


def train_test_split(data: RawDataset, per_class_train: int) -> tuple[RawDataset, RawDataset]:
    """First ``per_class_train`` items of each class go to training, the rest to test."""
    train_idx, test_idx = [], []
    for c in (0, 1):
        idx = np.flatnonzero(data.labels == c)
        if len(idx) <= per_class_train:
            raise ValueError(f"class {c} has only {len(idx)} items")
        train_idx.append(idx[:per_class_train])
        test_idx.append(idx[per_class_train:])
    return data.subset(np.sort(np.concatenate(train_idx))), data.subset(np.sort(np.concatenate(test_idx)))


def normalize(data: RawDataset) -> RawDataset:
    norms = np.linalg.norm(data.vectors, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"vector at index {zero[0]} has zero norm")
    return replace(data, vectors=data.vectors / norms[:, None])


# --- IDX -------------------------------------------------------------------


class IdxParseError(ValueError):
    def __init__(self, message: str, offset: int, path: str | None = None):
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message} at byte offset {offset}")
        self.offset = offset
        self.path = path


def _read_header(blob: bytes, magic: int, ndim: int, path=None) -> tuple[int, ...]:
    if len(blob) < 4:
        raise IdxParseError("truncated magic number", len(blob), path)
    (found,) = struct.unpack_from(">I", blob, 0)
    if found != magic:
        raise IdxParseError(f"bad magic 0x{found:08x}, expected 0x{magic:08x}", 0, path)
    end = 4 + 4 * ndim
    if len(blob) < end:
        raise IdxParseError("truncated dimension header", len(blob), path)
    dims = struct.unpack_from(f">{ndim}I", blob, 4)
    need = end + int(np.prod(dims))
    if len(blob) < need:
        raise IdxParseError(f"truncated data, expected {need} bytes", len(blob), path)
    return dims


def parse_idx_bytes(image_blob: bytes, label_blob: bytes, paths=(None, None)):
    """Return ``(images (N, rows, cols) uint8, labels (N,) uint8)``."""
    n_img, rows, cols = _read_header(image_blob, IMAGE_MAGIC, 3, paths[0])
    (n_lab,) = _read_header(label_blob, LABEL_MAGIC, 1, paths[1])
    if n_img != n_lab:
        raise IdxParseError(f"count mismatch: {n_img} images vs {n_lab} labels", 4, paths[1])
    images = np.frombuffer(image_blob, np.uint8, n_img * rows * cols, 16).reshape(n_img, rows, cols)
    labels = np.frombuffer(label_blob, np.uint8, n_lab, 8)
    return images.copy(), labels.copy()


def parse_idx(images_path, labels_path):
    images_path, labels_path = Path(images_path), Path(labels_path)
    return parse_idx_bytes(
        images_path.read_bytes(), labels_path.read_bytes(), (str(images_path), str(labels_path))
    )


def idx_bytes(images: np.ndarray, labels: np.ndarray) -> tuple[bytes, bytes]:
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    img = struct.pack(">I3I", IMAGE_MAGIC, *images.shape) + images.tobytes()
    lab = struct.pack(">II", LABEL_MAGIC, labels.size) + labels.tobytes()
    return img, lab


def write_idx(images, labels, images_path, labels_path) -> None:
    img, lab = idx_bytes(images, labels)
    Path(images_path).write_bytes(img)
    Path(labels_path).write_bytes(lab)


# --- resampling -------------------------------------------------------------


def area_weights(src: int, dst: int) -> np.ndarray:
    """``(dst, src)`` matrix averaging source pixels over each output cell.

    Output cell ``i`` covers ``[i * src/dst, (i + 1) * src/dst)`` in source
    coordinates; each source pixel contributes its overlap length.  Rows sum
    to 1, so constants are preserved, and every column sums to ``dst/src``,
    so the mean intensity is preserved too.
    """
    scale = src / dst
    lo = np.arange(dst)[:, None] * scale
    hi = lo + scale
    s = np.arange(src)[None, :]
    overlap = np.clip(np.minimum(hi, s + 1) - np.maximum(lo, s), 0, None)
    return overlap / scale


def resample(images: np.ndarray, side: int) -> np.ndarray:
    images = np.asarray(images, dtype=float)
    r = area_weights(images.shape[1], side)
    c = area_weights(images.shape[2], side)
    return np.einsum("ir,nrc,jc->nij", r, images, c)


def downsample_and_filter(images, labels, class_pair: tuple[int, int], side: int) -> RawDataset:
    a, b = class_pair
    if a == b:
        raise ValueError("class pair must hold two different labels")
    if side < 2 or side & (side - 1):
        raise ValueError("side**2 must be a power of two")
    labels = np.asarray(labels)
    keep = np.flatnonzero((labels == a) | (labels == b))
    vectors = resample(np.asarray(images)[keep], side).reshape(len(keep), side * side)
    new_labels = (labels[keep] == b).astype(int)
    nonzero = np.any(vectors != 0, axis=1)
    vectors, new_labels = vectors[nonzero], new_labels[nonzero]
    for c, name in ((0, a), (1, b)):
        if not np.any(new_labels == c):
            raise ValueError(f"no usable images of class {name}")
    prov = {
        "source": "idx",
        "class_pair": [int(a), int(b)],
        "side": side,
        "dropped_zero": int((~nonzero).sum()),
    }
    return RawDataset(vectors, new_labels, prov)


def save_dataset(data: RawDataset, path) -> None:
    rows = [{"label": int(y), "vector": v.tolist()} for v, y in zip(data.vectors, data.labels)]
    Path(path).write_text(json.dumps({"provenance": data.provenance, "rows": rows}))


def load_dataset(path) -> RawDataset:
    doc = json.loads(Path(path).read_text())
    rows = doc["rows"]
    return RawDataset(
        np.array([r["vector"] for r in rows]), np.array([r["label"] for r in rows]), doc.get("provenance", {})
    )
