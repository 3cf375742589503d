"""Dataset generators, IDX ingestion, splits, and on-disk formats.

Synthetic 2D generators (ring / moons / checkerboard) return mode
centers where meaningful and are deterministic per seed.  Image data is
normalized to [0, 1]; planar data is left unscaled (decoders for planar
presets use a linear head).

File formats: IDX (big-endian, magic 0x803 images / 0x801 labels),
CSV (one point per line, shortest round-trip decimals), and a raw
little-endian float32 format with a 16-byte header
{magic "LCWB", u32 n, u32 D, 4 zero pad bytes}.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "Dataset",
    "gaussian_ring",
    "two_moons",
    "checkerboard",
    "synthetic_images",
    "embed_rotation",
    "load_idx",
    "save_idx",
    "split",
    "save_csv",
    "load_csv",
    "save_batch",
    "load_batch",
    "load_points_file",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
BATCH_MAGIC = b"LCWB"


@dataclass
class Dataset:
    name: str
    data: np.ndarray  # n x D, float64
    labels: np.ndarray | None = None
    centers: np.ndarray | None = None
    train_idx: np.ndarray = field(default=None)  # type: ignore[assignment]
    val_idx: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DataError("dataset data must be an n x D matrix")
        if not np.all(np.isfinite(self.data)):
            raise DataError("dataset contains non-finite values")
        n = self.data.shape[0]
        if self.train_idx is None:
            self.train_idx = np.arange(n)
        if self.val_idx is None:
            self.val_idx = np.arange(0)

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def train_data(self) -> np.ndarray:
        return self.data[self.train_idx]

    @property
    def val_data(self) -> np.ndarray:
        return self.data[self.val_idx]


def gaussian_ring(k_modes: int, radius: float, std: float, n: int, seed: int) -> Dataset:
    """Equal-weight mixture of k isotropic Gaussians on a circle."""
    if k_modes < 1:
        raise ValueError("k_modes must be >= 1")
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(k_modes) / k_modes
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    modes = rng.integers(0, k_modes, size=n)
    data = centers[modes] + std * rng.standard_normal((n, 2))
    return Dataset("ring", data, labels=modes, centers=centers)


def two_moons(n: int, noise_std: float, seed: int) -> Dataset:
    """Two interleaved half-circle arcs."""
    rng = np.random.default_rng(seed)
    n_up = n // 2
    t_up = rng.uniform(0.0, np.pi, n_up)
    t_low = rng.uniform(0.0, np.pi, n - n_up)
    upper = np.stack([np.cos(t_up), np.sin(t_up)], axis=1)
    lower = np.stack([1.0 - np.cos(t_low), 0.5 - np.sin(t_low)], axis=1)
    data = np.vstack([upper, lower])
    labels = np.concatenate([np.zeros(n_up, dtype=int), np.ones(n - n_up, dtype=int)])
    data = data + noise_std * rng.standard_normal(data.shape)
    return Dataset("moons", data, labels=labels)


def checkerboard(n: int, grid: int, seed: int) -> Dataset:
    """Uniform samples on the active cells of a grid x grid board over [-2, 2]^2."""
    if grid < 1:
        raise ValueError("grid must be >= 1")
    rng = np.random.default_rng(seed)
    cells = [(i, j) for i in range(grid) for j in range(grid) if (i + j) % 2 == 0]
    cells = np.asarray(cells, dtype=np.float64)
    pick = rng.integers(0, len(cells), size=n)
    pos = cells[pick] + rng.uniform(0.0, 1.0, size=(n, 2))
    data = pos / grid * 4.0 - 2.0
    return Dataset("checkerboard", data, labels=pick)


def synthetic_images(n: int, side: int = 28, n_classes: int = 10, seed: int = 0) -> Dataset:
    """Procedural grayscale image corpus: jittered class-specific blob glyphs.

    A stand-in image dataset for environments without MNIST files; pixel
    values in [0, 1], flattened to n x side^2, class labels attached.
    """
    rng = np.random.default_rng(seed)
    class_rng = np.random.default_rng(seed + 1)
    blobs_per_class = 3
    # fixed glyph geometry per class, jittered per sample
    base = class_rng.uniform(0.22, 0.78, size=(n_classes, blobs_per_class, 2))
    widths = class_rng.uniform(0.06, 0.12, size=(n_classes, blobs_per_class))

    ys, xs = np.mgrid[0:side, 0:side]
    pix = np.stack([xs.ravel(), ys.ravel()], axis=1) / (side - 1.0)  # (P, 2)

    labels = rng.integers(0, n_classes, size=n)
    jitter = rng.normal(0.0, 0.03, size=(n, blobs_per_class, 2))
    scale = rng.uniform(0.85, 1.15, size=(n, 1))

    data = np.empty((n, side * side))
    chunk = 512
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        c = base[labels[lo:hi]] + jitter[lo:hi]          # (m, B, 2)
        w = widths[labels[lo:hi]] * scale[lo:hi]          # (m, B)
        d2 = np.sum((c[:, :, None, :] - pix[None, None, :, :]) ** 2, axis=3)
        img = np.exp(-d2 / (2.0 * w[:, :, None] ** 2)).sum(axis=1)
        np.clip(img, 0.0, 1.0, out=img)
        data[lo:hi] = img
    return Dataset("synth-images", data, labels=labels)


def standardize(ds: Dataset) -> Dataset:
    """Center and scale to unit global std (one scalar scale for all coords).

    Keeps kernel bandwidths well conditioned for unbounded decoder heads;
    mode centers are mapped by the same affine transform.
    """
    mean = ds.data.mean(axis=0)
    centered = ds.data - mean
    scale = max(float(centered.std()), 1e-12)
    data = centered / scale
    centers = (ds.centers - mean) / scale if ds.centers is not None else None
    return Dataset(ds.name, data, labels=ds.labels, centers=centers,
                   train_idx=ds.train_idx.copy(), val_idx=ds.val_idx.copy())


def embed_rotation(ds: Dataset, dim: int, seed: int) -> Dataset:
    """Lift a dataset into `dim` dimensions by a fixed random isometry."""
    d0 = ds.dim
    if dim < d0:
        raise ValueError("target dim must be >= source dim")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, d0)))
    data = ds.data @ q.T
    centers = ds.centers @ q.T if ds.centers is not None else None
    return Dataset(f"{ds.name}-embed{dim}", data, labels=ds.labels, centers=centers,
                   train_idx=ds.train_idx.copy(), val_idx=ds.val_idx.copy())


# -- IDX ------------------------------------------------------------------


def _read_exact(f, count: int, what: str) -> bytes:
    buf = f.read(count)
    if len(buf) != count:
        raise DataError(f"truncated IDX file while reading {what}")
    return buf


def load_idx(images_path, labels_path=None, limit: int | None = None) -> Dataset:
    """Parse IDX image (and optional label) files into a flat [0,1] dataset."""
    images_path = Path(images_path)
    with open(images_path, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, "image header"))
        if magic != IDX_IMAGES_MAGIC:
            raise DataError(f"bad IDX image magic 0x{magic:08x}")
        if limit is not None:
            n = min(n, limit)
        raw = _read_exact(f, n * rows * cols, "image data")
    data = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    data = data.reshape(n, rows * cols)

    labels = None
    if labels_path is not None:
        with open(labels_path, "rb") as f:
            magic, n_lab = struct.unpack(">II", _read_exact(f, 8, "label header"))
            if magic != IDX_LABELS_MAGIC:
                raise DataError(f"bad IDX label magic 0x{magic:08x}")
            if n_lab < n:
                raise DataError("label file has fewer records than images requested")
            labels = np.frombuffer(_read_exact(f, n, "label data"), dtype=np.uint8).astype(int)
    return Dataset(images_path.stem, data, labels=labels)


def save_idx(data01: np.ndarray, side: int, images_path, labels=None, labels_path=None) -> None:
    """Write a flat [0,1] image matrix as IDX ubyte files."""
    n = data01.shape[0]
    if data01.shape[1] != side * side:
        raise DataError("data width does not match side^2")
    pixels = np.clip(np.rint(data01 * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, side, side))
        f.write(pixels.tobytes())
    if labels is not None and labels_path is not None:
        with open(labels_path, "wb") as f:
            f.write(struct.pack(">II", IDX_LABELS_MAGIC, n))
            f.write(np.asarray(labels, dtype=np.uint8).tobytes())


# -- splits ----------------------------------------------------------------


def split(ds: Dataset, validation_fraction: float, seed: int) -> Dataset:
    """Seeded shuffle split into disjoint, covering train/validation indices."""
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError("validation_fraction must be in (0, 1)")
    n = ds.data.shape[0]
    n_val = int(round(n * validation_fraction))
    n_val = max(1, min(n_val, n - 1))
    perm = np.random.default_rng(seed).permutation(n)
    return replace(ds, val_idx=perm[:n_val], train_idx=perm[n_val:])


# -- on-disk point formats ---------------------------------------------------


def save_csv(data: np.ndarray, path) -> None:
    data = np.asarray(data, dtype=np.float64)
    with open(path, "w") as f:
        for row in data:
            f.write(",".join(repr(float(v)) for v in row))
            f.write("\n")


def load_csv(path) -> np.ndarray:
    rows = []
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as e:
                raise DataError(f"{path}:{line_no}: {e}") from None
    if not rows:
        raise DataError(f"{path}: empty CSV")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DataError(f"{path}: ragged rows")
    return np.asarray(rows, dtype=np.float64)


def save_batch(data: np.ndarray, path) -> None:
    """Raw little-endian float32 matrix with the 16-byte LCWB header."""
    data = np.asarray(data, dtype=np.float64)
    n, d = data.shape
    with open(path, "wb") as f:
        f.write(BATCH_MAGIC)
        f.write(struct.pack("<II", n, d))
        f.write(b"\x00" * 4)
        f.write(data.astype("<f4").tobytes())


def load_batch(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != BATCH_MAGIC:
            raise DataError(f"{path}: not an LCWB batch file")
        n, d = struct.unpack("<II", header[4:12])
        raw = f.read(n * d * 4)
        if len(raw) != n * d * 4:
            raise DataError(f"{path}: truncated batch file")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(n, d)


def load_points_file(path) -> np.ndarray:
    """Load a point matrix from CSV or LCWB binary, by sniffing the magic."""
    with open(path, "rb") as f:
        head = f.read(4)
    if head == BATCH_MAGIC:
        return load_batch(path)
    return load_csv(path)
