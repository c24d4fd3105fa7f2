"""Datasets: MNIST IDX files, synthetic points and vectors, and corruption models."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
RING_RADIUS = 0.8


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    """``n`` examples of dimension ``dim`` stored as the rows of ``examples``.

    Entries must lie in ``value_range`` unless ``unit_norm`` is set, in which
    case every row has unit L2 norm instead.
    """

    examples: np.ndarray
    labels: np.ndarray | None = None
    unit_norm: bool = False
    image_shape: tuple[int, ...] | None = None
    value_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        x = np.asarray(self.examples, dtype=np.float64)
        if x.ndim != 2:
            raise DataError(f"examples must be a 2-d array, got shape {x.shape}")
        self.examples = x
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (x.shape[0],):
                raise DataError("one label per example required")
        if self.image_shape is not None:
            self.image_shape = tuple(int(s) for s in self.image_shape)
            if math.prod(self.image_shape) != x.shape[1]:
                raise DataError(f"image shape {self.image_shape} does not match dim {x.shape[1]}")
        if x.size and not np.all(np.isfinite(x)):
            raise DataError("non-finite entries")
        if self.unit_norm:
            if x.size and np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)) > 1e-12:
                raise DataError("unit_norm set but rows are not unit length")
        elif x.size:
            lo, hi = self.value_range
            if x.min() < lo or x.max() > hi:
                raise DataError(f"entries outside [{lo}, {hi}]")

    @property
    def n(self) -> int:
        return self.examples.shape[0]

    @property
    def dim(self) -> int:
        return self.examples.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, examples=self.examples[idx],
                       labels=None if self.labels is None else self.labels[idx])


# --- IDX -------------------------------------------------------------------------


def _read_idx(path, magic: int, ndim: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise DataError(f"{path}: truncated header")
    got = struct.unpack(">I", raw[:4])[0]
    if got != magic:
        raise DataError(f"{path}: bad magic 0x{got:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", raw[4:head])
    size = math.prod(dims)
    if len(raw) - head < size:
        raise DataError(f"{path}: truncated data ({len(raw) - head} of {size} bytes)")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=head).reshape(dims)


def read_idx_images(path) -> np.ndarray:
    """Raw ``uint8`` array of shape ``(n, rows, cols)``."""
    return _read_idx(path, IDX_IMAGES_MAGIC, 3)


def read_idx_labels(path) -> np.ndarray:
    return _read_idx(path, IDX_LABELS_MAGIC, 1)


def write_idx_images(path, images) -> None:
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise DataError("images must have shape (n, rows, cols)")
    Path(path).write_bytes(struct.pack(">I3I", IDX_IMAGES_MAGIC, *images.shape) + images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes())


def load_mnist_idx(images_path, labels_path=None, subset: int | None = None, seed: int = 0) -> Dataset:
    """Pixels scaled by 1/255 into ``[0, 1]``; a seeded subset drawn without replacement.

    The subset keeps the file order of the chosen images.
    """
    imgs = read_idx_images(images_path)
    labels = read_idx_labels(labels_path) if labels_path is not None else None
    if labels is not None and labels.shape[0] != imgs.shape[0]:
        raise DataError("image and label counts differ")
    n = imgs.shape[0]
    if subset is None:
        idx = np.arange(n)
    else:
        if subset < 0 or subset > n:
            raise DataError(f"subset {subset} exceeds the {n} available images")
        idx = np.sort(np.random.default_rng(seed).choice(n, size=subset, replace=False))
    x = imgs[idx].reshape(len(idx), -1).astype(np.float64) / 255.0
    return Dataset(x, None if labels is None else labels[idx].astype(np.int64),
                   image_shape=imgs.shape[1:])


def save_mnist_idx(ds: Dataset, images_path, labels_path=None) -> None:
    """Write a ``[0, 1]`` image dataset back as IDX (pixels rounded to 8 bits)."""
    if ds.image_shape is None or len(ds.image_shape) != 2:
        raise DataError("need a 2-d image shape")
    raw = np.rint(ds.examples * 255.0).astype(np.uint8).reshape((ds.n,) + ds.image_shape)
    write_idx_images(images_path, raw)
    if labels_path is not None:
        if ds.labels is None:
            raise DataError("dataset has no labels")
        write_idx_labels(labels_path, ds.labels)


# --- synthetic -----------------------------------------------------------------------


def synth_2d(n: int, layout: str = "ring", seed: int = 0) -> Dataset:
    """Points in ``[-1, 1]^2``: a radius-0.8 ring at angles ``2 pi i / n``, or uniform in the box."""
    if n < 1:
        raise DataError("n must be >= 1")
    if layout == "ring":
        ang = 2.0 * np.pi * np.arange(n) / n
        x = RING_RADIUS * np.column_stack([np.cos(ang), np.sin(ang)])
    elif layout == "uniform_box":
        rng = np.random.default_rng(seed)
        pts: list[np.ndarray] = []
        while len(pts) < n:
            p = rng.uniform(-1.0, 1.0, 2)
            if all(np.linalg.norm(p - q) > 1e-3 for q in pts):
                pts.append(p)
        x = np.array(pts)
    else:
        raise DataError(f"unknown layout {layout!r}")
    return Dataset(x, value_range=(-1.0, 1.0))


def unit_vectors(n: int, dim: int, seed: int = 0, orthonormal: bool = False) -> Dataset:
    """Random unit-norm vectors (Gaussian directions), optionally orthonormalized."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, dim))
    if orthonormal:
        if n > dim:
            raise DataError("cannot have more orthonormal vectors than dimensions")
        q, r = np.linalg.qr(g.T)
        g = (q * np.sign(np.diag(r))).T
    return Dataset(g / np.linalg.norm(g, axis=1, keepdims=True), unit_norm=True)


def normalize_unit(ds: Dataset) -> Dataset:
    nrm = np.linalg.norm(ds.examples, axis=1)
    if np.any(nrm == 0):
        raise DataError(f"zero vector at index {int(np.flatnonzero(nrm == 0)[0])}")
    return replace(ds, examples=ds.examples / nrm[:, None], unit_norm=True)


# --- corruption ----------------------------------------------------------------------


@dataclass(frozen=True)
class CorruptionSpec:
    """How to damage an input.

    * ``uniform_pixels``: replace ``round(p * dim)`` seeded coordinates by U[0, 1].
    * ``occlusion``: overwrite a ``ceil(side * h) x ceil(side * w)`` square at a
      uniformly random position with ``color`` (a number, or ``"uniform"`` for
      one U[0, 1] draw).
    * ``gaussian``: add N(0, ``var``) noise to every coordinate, unclipped.
    """

    kind: str
    p: float = 0.0
    side: float = 0.5
    color: float | str = 0.0
    var: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform_pixels", "occlusion", "gaussian", "none"):
            raise DataError(f"unknown corruption {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise DataError("p must lie in [0, 1]")
        if not 0.0 < self.side <= 1.0:
            raise DataError("side must lie in (0, 1]")
        if self.var < 0:
            raise DataError("variance must be >= 0")
        if isinstance(self.color, str) and self.color != "uniform":
            raise DataError("color must be a number or 'uniform'")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "CorruptionSpec":
        """``uniform_pixels:0.25``, ``occlusion:0.5:uniform``, ``gaussian:4``, ``none``."""
        kind, *args = text.split(":")
        if kind == "uniform_pixels":
            return cls(kind, p=float(args[0]), seed=seed)
        if kind == "occlusion":
            color = args[1] if len(args) > 1 else "0"
            return cls(kind, side=float(args[0]), color=color if color == "uniform" else float(color), seed=seed)
        if kind == "gaussian":
            return cls(kind, var=float(args[0]), seed=seed)
        return cls(kind, seed=seed)

    def __str__(self) -> str:
        if self.kind == "uniform_pixels":
            return f"uniform_pixels:{self.p:g}"
        if self.kind == "occlusion":
            color = self.color if isinstance(self.color, str) else f"{self.color:g}"
            return f"occlusion:{self.side:g}:{color}"
        if self.kind == "gaussian":
            return f"gaussian:{self.var:g}"
        return self.kind

    def derive(self, *keys: int) -> "CorruptionSpec":
        """Same corruption with a seed derived from ``(seed, *keys)``."""
        s = int(np.random.SeedSequence([self.seed, *keys]).generate_state(1)[0])
        return replace(self, seed=s)


def corrupt(x, spec: CorruptionSpec, image_shape: tuple[int, ...] | None = None) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "none":
        return x
    if spec.kind == "uniform_pixels":
        m = int(round(spec.p * x.size))
        idx = rng.choice(x.size, size=m, replace=False)
        x[idx] = rng.uniform(0.0, 1.0, m)
        return x
    if spec.kind == "gaussian":
        return x + rng.normal(0.0, math.sqrt(spec.var), x.shape)
    if image_shape is None:
        raise DataError("occlusion needs an image shape")
    h, w = image_shape[:2]
    img = x.reshape(image_shape)
    sh, sw = math.ceil(spec.side * h), math.ceil(spec.side * w)
    top = int(rng.integers(0, h - sh + 1))
    left = int(rng.integers(0, w - sw + 1))
    color = rng.uniform(0.0, 1.0) if spec.color == "uniform" else float(spec.color)
    img[top:top + sh, left:left + sw] = color
    return img.reshape(-1)


def noise_pool(kind: str, count: int, dim: int, seed: int = 0, var: float = 4.0) -> np.ndarray:
    """Probe inputs for spurious-attractor searches: ``uniform`` on [0, 1] or ``gaussian`` N(0, var)."""
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return rng.uniform(0.0, 1.0, (count, dim))
    if kind == "gaussian":
        return rng.normal(0.0, math.sqrt(var), (count, dim))
    raise DataError(f"unknown pool kind {kind!r}")
