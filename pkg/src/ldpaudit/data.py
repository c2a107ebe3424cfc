"""Dataset provisioning: synthetic Gaussian blobs for self-contained runs
and an IDX parser for optional MNIST-style inputs."""

import struct
from dataclasses import dataclass

import numpy as np

from .nn import Example

__all__ = [
    "Dataset",
    "SyntheticSpec",
    "generate_blobs",
    "load_idx_images",
    "load_idx_labels",
    "filter_by_label",
]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus integer labels; read-only after construction."""

    features: np.ndarray  # (n, input_dim)
    labels: np.ndarray  # (n,)
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2 or len(self.features) == 0:
            raise ValueError("features must be a non-empty (n, input_dim) matrix")
        if self.labels.shape != (len(self.features),):
            raise ValueError("labels must align with features")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError("labels must lie in [0, num_classes)")

    @property
    def input_dim(self):
        return self.features.shape[1]

    def __len__(self):
        return len(self.features)

    def example(self, i):
        return Example(self.features[i], int(self.labels[i]))


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 10
    input_dim: int = 20
    examples_per_class: int = 100
    class_separation: float = 3.0
    noise_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if min(self.num_classes, self.input_dim, self.examples_per_class) < 1:
            raise ValueError("counts must be positive")
        if self.class_separation <= 0 or self.noise_sigma < 0:
            raise ValueError("class_separation must be > 0 and noise_sigma >= 0")


def _class_directions(num_classes, input_dim, rng):
    """Random unit directions for the class centers; orthonormal when the
    input dimension allows it (QR of a Gaussian matrix), otherwise plain
    normalized rows."""
    raw = rng.standard_normal((input_dim, num_classes))
    if num_classes <= input_dim:
        q, r = np.linalg.qr(raw)
        # fix the sign convention so the decomposition is deterministic
        q = q * np.sign(np.diag(r))
        return q.T
    return raw.T / np.linalg.norm(raw.T, axis=1, keepdims=True)


def generate_blobs(spec):
    """Isotropic Gaussian blob per class, centered at separation * u_c."""
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    directions = _class_directions(spec.num_classes, spec.input_dim, rng)
    centers = spec.class_separation * directions
    features = []
    labels = []
    for c in range(spec.num_classes):
        noise = rng.standard_normal((spec.examples_per_class, spec.input_dim))
        features.append(centers[c] + spec.noise_sigma * noise)
        labels.append(np.full(spec.examples_per_class, c))
    return Dataset(
        features=np.concatenate(features),
        labels=np.concatenate(labels),
        num_classes=spec.num_classes,
    )


def _read_header(data, path, count):
    if len(data) < 4 * (count + 1):
        raise ValueError(f"truncated IDX header in {path}")
    return struct.unpack(f">{count + 1}l", data[: 4 * (count + 1)])


def load_idx_images(path):
    """Parse an IDX image file into an (n, rows*cols) matrix scaled to [0,1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, n, rows, cols = _read_header(data, path, 3)
    if magic != IDX_IMAGE_MAGIC:
        raise ValueError(f"bad magic {magic:#010x} in {path}, expected {IDX_IMAGE_MAGIC:#010x}")
    body = data[16:]
    if len(body) != n * rows * cols:
        raise ValueError(f"truncated IDX image body in {path}: {len(body)} != {n * rows * cols}")
    pixels = np.frombuffer(body, dtype=np.uint8).astype(float) / 255.0
    return pixels.reshape(n, rows * cols)


def load_idx_labels(path):
    """Parse an IDX label file into an integer vector."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, n = _read_header(data, path, 1)
    if magic != IDX_LABEL_MAGIC:
        raise ValueError(f"bad magic {magic:#010x} in {path}, expected {IDX_LABEL_MAGIC:#010x}")
    body = data[8:]
    if len(body) != n:
        raise ValueError(f"truncated IDX label body in {path}: {len(body)} != {n}")
    return np.frombuffer(body, dtype=np.uint8).astype(np.int64)


def filter_by_label(ds, label):
    """Subset of the dataset carrying only the given label."""
    if not 0 <= label < ds.num_classes:
        raise ValueError(f"label {label} outside [0, {ds.num_classes})")
    mask = ds.labels == label
    if not mask.any():
        raise ValueError(f"no examples with label {label}")
    return Dataset(ds.features[mask], ds.labels[mask], ds.num_classes)
