"""Dataset mechanics: samples, splits, augmentation, negative extraction.

A Sample is one 200x200 training image for one part with a binary label.
Splits are origin-disjoint: every sample derived from the same source
image lands in the same split, so augmented copies can never leak across
the train/val/test boundary.

On-disk layout (PNG, 8-bit):

    <root>/<part>/{train,val,test}/{pos,neg}/<origin>_<k>.png
    <root>/negative/{train,val,test}/neg/<origin>_<k>.png

``k`` is the copy index: 0 for the source sample, 1.. for augmented copies.
"""

import re
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .imageio import load_image, save_image
from .partnet import LABEL_ABSENT, LABEL_PRESENT

SAMPLE_SIZE = 200

SPLITS = ("train", "val", "test")
LABEL_DIRS = {LABEL_PRESENT: "pos", LABEL_ABSENT: "neg"}
DIR_LABELS = {v: k for k, v in LABEL_DIRS.items()}


@dataclass
class Sample:
    image: np.ndarray  # HWC float32 in [0, 1]
    label: int
    part: str
    origin: str

    def validate(self):
        h, w = self.image.shape[:2]
        if (h, w) != (SAMPLE_SIZE, SAMPLE_SIZE):
            raise ValueError(f"sample {self.origin!r} is {h}x{w}, "
                             f"expected {SAMPLE_SIZE}x{SAMPLE_SIZE}")
        if self.label not in (LABEL_ABSENT, LABEL_PRESENT):
            raise ValueError(f"label {self.label!r} outside {{0, 1}}")
        lo, hi = float(self.image.min()), float(self.image.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"sample values outside [0, 1]: [{lo}, {hi}]")
        return self


@dataclass
class DatasetSplit:
    train: list
    val: list
    test: list

    def __iter__(self):
        return iter((self.train, self.val, self.test))

    def sizes(self):
        return (len(self.train), len(self.val), len(self.test))


def _resolve_counts(n, ratios):
    if all(isinstance(r, (int, np.integer)) for r in ratios) and sum(ratios) > 1:
        counts = [int(r) for r in ratios]
        if sum(counts) > n:
            raise ValueError(f"requested {sum(counts)} samples, have {n}")
        return counts
    total = float(sum(ratios))
    if not np.isclose(total, 1.0):
        raise ValueError(f"proportions must sum to 1, got {total}")
    counts = [int(n * r) for r in ratios]
    counts[0] += n - sum(counts)  # remainder goes to train
    return counts


def split_dataset(samples, ratios, seed):
    """Deterministic origin-disjoint split into (train, val, test).

    ``ratios`` is either three absolute counts or three proportions
    summing to 1. Whole origin groups are assigned to one split, so the
    exact counts must be achievable along group boundaries.
    """
    if len(ratios) != 3:
        raise ValueError("ratios must have three entries (train, val, test)")
    counts = _resolve_counts(len(samples), ratios)
    groups = {}
    for s in samples:
        groups.setdefault(s.origin, []).append(s)
    keys = sorted(groups)
    rng = np.random.default_rng(seed)
    rng.shuffle(keys)

    splits = ([], [], [])
    remaining = list(counts)
    for key in keys:
        group = groups[key]
        placed = False
        for i in range(3):
            if remaining[i] >= len(group):
                splits[i].extend(group)
                remaining[i] -= len(group)
                placed = True
                break
        if not placed and any(remaining):
            raise ValueError(
                f"cannot satisfy split counts {counts}: origin group "
                f"{key!r} of size {len(group)} does not fit")
    if any(remaining):
        raise ValueError(f"not enough samples for split counts {counts}")
    return DatasetSplit(train=splits[0], val=splits[1], test=splits[2])


def affine_transform_image(image, rotation_deg=0.0, shear=0.0, scale=1.0):
    """Rotation o shear o scale about the image center.

    Bilinear interpolation, edge pixels replicated. Output keeps the input
    shape (content is cropped/padded implicitly by the fixed canvas).
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    theta = np.deg2rad(rotation_deg)
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    shear_m = np.array([[1.0, shear], [0.0, 1.0]])
    forward = rot @ shear_m @ (np.eye(2) * scale)
    inverse = np.linalg.inv(forward)
    h, w = image.shape[:2]
    center = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    offset = center - inverse @ center
    out = np.empty_like(image)
    for c in range(image.shape[2]):
        ndimage.affine_transform(image[:, :, c], inverse, offset=offset,
                                 output=out[:, :, c], order=1, mode="nearest")
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class AugmentSpec:
    """Symmetric-about-identity pose jitter applied per augmented copy."""

    rotation: float = 25.0   # degrees, drawn from [-rotation, +rotation]
    shear: float = 0.1       # drawn from [-shear, +shear]
    scale: float = 0.15      # drawn from [1 - scale, 1 + scale]
    copies: int = 3
    seed: int = 0

    def validate(self):
        if self.copies < 0:
            raise ValueError(f"copies must be >= 0, got {self.copies}")
        if self.rotation < 0 or self.shear < 0 or not 0 <= self.scale < 1:
            raise ValueError("augmentation ranges must be symmetric about "
                             "the identity")


def augment_sample(sample, spec):
    """Return ``spec.copies`` transformed samples; labels and part inherited.

    The pose stream is seeded per origin, so augmenting a dataset is
    deterministic regardless of sample order.
    """
    spec.validate()
    rng = np.random.default_rng(
        [spec.seed, zlib.crc32(sample.origin.encode("utf-8"))])
    out = []
    for _ in range(spec.copies):
        rotation = rng.uniform(-spec.rotation, spec.rotation)
        shear = rng.uniform(-spec.shear, spec.shear)
        scale = rng.uniform(1.0 - spec.scale, 1.0 + spec.scale)
        img = affine_transform_image(sample.image, rotation, shear, scale)
        out.append(Sample(image=img.astype(np.float32), label=sample.label,
                          part=sample.part, origin=sample.origin))
    return out


def _intersects(x, y, size, box):
    return not (x + size <= box.x or box.x + box.w <= x or
                y + size <= box.y or box.y + box.h <= y)


def extract_negative_crops(source_image, count, rng, exclusion_boxes=(),
                           part="negative", source_id="source",
                           max_attempts=200):
    """Uniformly placed 200x200 crops avoiding every exclusion box.

    Raises ValueError when a crop cannot be placed within the retry budget
    (e.g. the exclusions cover the whole image).
    """
    h, w = source_image.shape[:2]
    if h < SAMPLE_SIZE or w < SAMPLE_SIZE:
        raise ValueError(f"source {h}x{w} smaller than a "
                         f"{SAMPLE_SIZE}x{SAMPLE_SIZE} crop")
    crops = []
    for i in range(count):
        for _ in range(max_attempts):
            x = int(rng.integers(0, w - SAMPLE_SIZE + 1))
            y = int(rng.integers(0, h - SAMPLE_SIZE + 1))
            if not any(_intersects(x, y, SAMPLE_SIZE, b)
                       for b in exclusion_boxes):
                img = source_image[y:y + SAMPLE_SIZE, x:x + SAMPLE_SIZE]
                crops.append(Sample(
                    image=np.ascontiguousarray(img, dtype=np.float32),
                    label=LABEL_ABSENT, part=part,
                    origin=f"{source_id}-crop-{i:04d}"))
                break
        else:
            raise ValueError(
                f"no valid crop placement after {max_attempts} attempts "
                f"({len(exclusion_boxes)} exclusion boxes)")
    return crops


def write_samples(root, part, split_name, samples):
    """Write samples under the dataset layout; returns the written paths."""
    root = Path(root)
    paths = []
    counters = {}
    for s in samples:
        k = counters.get(s.origin, 0)
        counters[s.origin] = k + 1
        label_dir = LABEL_DIRS[s.label]
        path = root / part / split_name / label_dir / f"{s.origin}_{k}.png"
        save_image(s.image, path)
        paths.append(path)
    return paths


_NAME_RE = re.compile(r"^(?P<origin>.+)_(?P<k>\d+)\.png$")


def read_split(root, part, split_name, channels=3):
    """Load one split of one part's dataset from disk, sorted by filename."""
    base = Path(root) / part / split_name
    if not base.exists():
        raise FileNotFoundError(f"missing dataset directory {base}")
    samples = []
    for label_dir, label in sorted(DIR_LABELS.items()):
        d = base / label_dir
        if not d.exists():
            continue
        for path in sorted(d.glob("*.png")):
            m = _NAME_RE.match(path.name)
            origin = m.group("origin") if m else path.stem
            img = load_image(path)
            if channels == 1 and img.shape[2] == 3:
                img = img.mean(axis=2, keepdims=True)
            samples.append(Sample(image=img, label=label, part=part,
                                  origin=origin))
    return samples


def read_part_dataset(root, part, channels=3):
    return DatasetSplit(
        train=read_split(root, part, "train", channels),
        val=read_split(root, part, "val", channels),
        test=read_split(root, part, "test", channels),
    )
