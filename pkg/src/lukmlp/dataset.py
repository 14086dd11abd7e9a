"""Deterministic two-moons data: generation, unit scaling, splits, CSV.

Everything downstream (training order, initialization, noise) keys off the
splitmix64 generator below, so a (seed, parameters) pair fixes every byte
of the produced files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


class Prng:
    """splitmix64: tiny, seedable, trivially portable across languages."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _INV53

    def below(self, n: int) -> int:
        """Uniform-ish integer in [0, n); modulo bias is negligible here."""
        return self.next_u64() % n

    def gaussian_pair(self) -> tuple[float, float]:
        """One Box-Muller pair; u1 is kept strictly positive for the log."""
        u1 = ((self.next_u64() >> 11) + 1) * _INV53
        u2 = (self.next_u64() >> 11) * _INV53
        r = math.sqrt(-2.0 * math.log(u1))
        return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass
class Dataset:
    """2-d points with binary labels; rows stay aligned by index."""

    features: np.ndarray  # (n, 2) float64
    labels: np.ndarray  # (n,) int64 in {0, 1}

    def __post_init__(self):
        self.features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] != 2:
            raise ValueError("features must be (n, 2)")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match features")

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class ScalingRecord:
    """Per-coordinate (min, range) from a fit; reusable on other data."""

    mins: tuple[float, float]
    ranges: tuple[float, float]


def gen_two_moons(n_per_class: int, noise_sd: float, seed: int) -> Dataset:
    """Two interleaved half-circles with Gaussian noise.

    Class 0 follows (cos t, sin t) and class 1 (1 - cos t, 0.5 - sin t)
    for t evenly spaced over [0, pi]; each point then consumes one
    Box-Muller pair (x gets the cosine branch, y the sine branch).
    Rows are ordered all class 0, then all class 1.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = Prng(seed)
    n = n_per_class
    feats = np.empty((2 * n, 2), dtype=np.float64)
    labels = np.empty(2 * n, dtype=np.int64)
    for i in range(n):
        t = math.pi * i / (n - 1) if n > 1 else 0.0
        gx, gy = rng.gaussian_pair() if noise_sd > 0.0 else (0.0, 0.0)
        feats[i, 0] = math.cos(t) + noise_sd * gx
        feats[i, 1] = math.sin(t) + noise_sd * gy
        labels[i] = 0
    for i in range(n):
        t = math.pi * i / (n - 1) if n > 1 else 0.0
        gx, gy = rng.gaussian_pair() if noise_sd > 0.0 else (0.0, 0.0)
        feats[n + i, 0] = 1.0 - math.cos(t) + noise_sd * gx
        feats[n + i, 1] = 0.5 - math.sin(t) + noise_sd * gy
        labels[n + i] = 1
    return Dataset(feats, labels)


def mirror_vertical(ds: Dataset) -> Dataset:
    """Reflect the second coordinate (x2 -> -x2), keeping labels.

    Networks whose parameters live in [0, 1] compute functions that are
    monotone nondecreasing in every input, and with the raw moon
    orientation no monotone classifier can beat ~73% here.  Mirroring
    puts the label-1 moon on the dominating side (ceiling ~92%) without
    changing the benchmark's geometry, so the standard pipeline applies
    this before scaling.
    """
    flipped = ds.features.copy()
    flipped[:, 1] = -flipped[:, 1]
    return Dataset(flipped, ds.labels.copy())


def scale_unit(ds: Dataset) -> tuple[Dataset, ScalingRecord]:
    """Min-max scale each coordinate to [0, 1]; returns the fit record."""
    mins = []
    ranges = []
    for c in range(2):
        col = ds.features[:, c]
        lo = float(col.min())
        hi = float(col.max())
        if hi - lo == 0.0:
            raise ValueError(f"coordinate {c} is degenerate (zero range)")
        mins.append(lo)
        ranges.append(hi - lo)
    rec = ScalingRecord((mins[0], mins[1]), (ranges[0], ranges[1]))
    return apply_scaling(ds, rec), rec


def apply_scaling(ds: Dataset, rec: ScalingRecord) -> Dataset:
    """Apply a scaling record; out-of-range results are clamped to [0, 1]."""
    out = np.empty_like(ds.features)
    for c in range(2):
        out[:, c] = (ds.features[:, c] - rec.mins[c]) / rec.ranges[c]
    np.clip(out, 0.0, 1.0, out=out)
    return Dataset(out, ds.labels.copy())


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified shuffle split; per-class balance holds within one row.

    Each class's indices are Fisher-Yates shuffled, the total train count
    is round(fraction * n), and per-class quotas are floor(fraction * n_c)
    with leftovers handed out by largest fractional part (ties to the
    lower label).
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(ds)
    rng = Prng(seed)
    per_class: dict[int, list[int]] = {0: [], 1: []}
    for idx, lab in enumerate(ds.labels):
        per_class[int(lab)].append(idx)
    for lab in (0, 1):
        rng.shuffle(per_class[lab])

    target_train = int(train_fraction * n + 0.5)
    quotas = {}
    fracs = []
    for lab in (0, 1):
        exact = train_fraction * len(per_class[lab])
        quotas[lab] = int(math.floor(exact))
        fracs.append((-(exact - math.floor(exact)), lab))
    leftovers = target_train - sum(quotas.values())
    for _, lab in sorted(fracs):
        if leftovers <= 0:
            break
        if quotas[lab] < len(per_class[lab]):
            quotas[lab] += 1
            leftovers -= 1

    train_idx = per_class[0][: quotas[0]] + per_class[1][: quotas[1]]
    test_idx = per_class[0][quotas[0] :] + per_class[1][quotas[1] :]
    if not train_idx or not test_idx:
        raise ValueError("split leaves one side empty")
    train = Dataset(ds.features[train_idx], ds.labels[train_idx])
    test = Dataset(ds.features[test_idx], ds.labels[test_idx])
    return train, test


CSV_HEADER = "x1,x2,label"


def write_csv(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for i in range(len(ds)):
            fh.write(
                "%.17g,%.17g,%d\n" % (ds.features[i, 0], ds.features[i, 1], ds.labels[i])
            )


def read_csv(path) -> Dataset:
    feats = []
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"line 1: expected header {CSV_HEADER!r}, got {header!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(parts)}")
            try:
                x1 = float(parts[0])
                x2 = float(parts[1])
            except ValueError as e:
                raise ValueError(f"line {lineno}: bad number") from e
            if parts[2] not in ("0", "1"):
                raise ValueError(f"line {lineno}: label must be 0 or 1, got {parts[2]!r}")
            feats.append((x1, x2))
            labels.append(int(parts[2]))
    if not feats:
        return Dataset(np.empty((0, 2), dtype=np.float64), np.empty(0, dtype=np.int64))
    return Dataset(np.array(feats, dtype=np.float64), np.array(labels, dtype=np.int64))
