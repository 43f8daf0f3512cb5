"""Synthetic glyph scenes: procedural stand-ins for weapon-part photos.

Each of the four parts gets a fixed, visually distinct glyph (shape +
texture + color). Part datasets place one glyph at a random pose over a
concrete-like noise background; negatives are background only, optionally
with non-part distractor blobs. Scenes composite several posed glyphs on a
larger canvas and emit mask-derived ground-truth boxes per part plus the
composite box (union of the visible part boxes).
"""

import json
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import ndimage

from .data import LABEL_ABSENT, LABEL_PRESENT, Sample
from .geometry import BoundingBox, union_extent
from .imageio import save_image
from .partnet import PARTS

COMPOSITE = "composite"

# glyph pixels with transformed alpha above this cutoff define the
# ground-truth box; anything fainter is invisible interpolation fringe
ALPHA_CUTOFF = 0.01


# ---------------------------------------------------------------------------
# glyphs

def _grain(shape, period, axis, amplitude):
    idx = np.arange(shape[axis]) // period % 2
    stripe = np.where(idx == 0, amplitude, -amplitude).astype(np.float32)
    return stripe[:, None] if axis == 0 else stripe[None, :]


@lru_cache(maxsize=None)
def part_glyph(part):
    """Fixed (rgb, alpha) pair for one part; rgb is HWC float32 in [0, 1]."""
    if part == "stock":
        h, w = 64, 96
        rgb = np.zeros((h, w, 3), np.float32)
        rgb[:] = (0.46, 0.30, 0.16)  # wood brown
        rgb += _grain((h, w), 6, 0, 0.06)[:, :, None]
        alpha = np.zeros((h, w), np.float32)
        ys = np.arange(h)[:, None]
        xs = np.arange(w)[None, :]
        # buttstock silhouette: thin comb widening toward the butt plate
        alpha[(xs <= w * (0.35 + 0.65 * ys / (h - 1)))] = 1.0
        alpha[:, :12] = 1.0  # attachment block
        rgb[:, -10:] = (0.20, 0.14, 0.08)  # dark butt pad
    elif part == "magazine":
        h, w = 80, 50
        rgb = np.zeros((h, w, 3), np.float32)
        rgb[:] = (0.12, 0.15, 0.30)  # deep gunmetal blue
        ys = np.arange(h)[:, None]
        xs = np.arange(w)[None, :]
        ribs = ((xs - ys) // 5) % 2 == 0
        rgb += np.where(ribs, 0.08, -0.08)[:, :, None].astype(np.float32)
        alpha = np.zeros((h, w), np.float32)
        slant = (0.30 * ys).astype(int)
        alpha[(xs >= slant) & (xs < slant + 30)] = 1.0
    elif part == "barrel":
        h, w = 26, 120
        rgb = np.zeros((h, w, 3), np.float32)
        rgb[:] = (0.72, 0.74, 0.78)  # polished steel
        rgb[6:9] += 0.16   # top highlight
        rgb[16:18] -= 0.30  # shadow line
        alpha = np.zeros((h, w), np.float32)
        alpha[5:21, :] = 1.0
        alpha[0:5, 8:20] = 1.0   # front sight post
        alpha[3:23, 108:] = 1.0  # muzzle block
        rgb[:, 108:] = (0.30, 0.31, 0.33)
    elif part == "receiver":
        h, w = 54, 112
        rgb = np.zeros((h, w, 3), np.float32)
        rgb[:] = (0.13, 0.17, 0.11)  # olive-black body
        rgb[20:36, 58:86] = (0.42, 0.44, 0.40)  # ejection port
        checker = (np.add.outer(np.arange(h) // 7,
                                np.arange(w) // 7) % 2).astype(np.float32)
        rgb += (checker[:, :, None] - 0.5) * 0.05
        alpha = np.ones((h, w), np.float32)
        teeth = (np.arange(w) // 7) % 2 == 1
        alpha[0:7, teeth] = 0.0      # rail teeth
        alpha[40:, 96:] = 0.0        # grip cutout
    else:
        raise KeyError(f"no glyph for part {part!r}")
    return np.clip(rgb, 0.0, 1.0), alpha


def glyph_l1_distance(part_a, part_b, background=0.5):
    """Mean per-pixel L1 distance between two glyphs on a common canvas."""
    rgb_a, alpha_a = part_glyph(part_a)
    rgb_b, alpha_b = part_glyph(part_b)
    h = max(rgb_a.shape[0], rgb_b.shape[0])
    w = max(rgb_a.shape[1], rgb_b.shape[1])

    def compose(rgb, alpha):
        canvas = np.full((h, w, 3), background, np.float32)
        y0 = (h - rgb.shape[0]) // 2
        x0 = (w - rgb.shape[1]) // 2
        region = canvas[y0:y0 + rgb.shape[0], x0:x0 + rgb.shape[1]]
        region[:] = alpha[:, :, None] * rgb + (1 - alpha[:, :, None]) * region
        return canvas

    return float(np.abs(compose(rgb_a, alpha_a) -
                        compose(rgb_b, alpha_b)).mean())


def distractor_glyph(rng):
    """A textured non-part blob (ellipse) for negative-sample clutter."""
    h = int(rng.integers(36, 90))
    w = int(rng.integers(36, 90))
    color = rng.uniform(0.15, 0.7, size=3).astype(np.float32)
    rgb = np.zeros((h, w, 3), np.float32)
    rgb[:] = color
    period = int(rng.integers(4, 9))
    axis = int(rng.integers(0, 2))
    rgb += _grain((h, w), period, axis, 0.07)[:, :, None]
    ys = (np.arange(h)[:, None] - (h - 1) / 2) / (h / 2)
    xs = (np.arange(w)[None, :] - (w - 1) / 2) / (w / 2)
    alpha = ((ys ** 2 + xs ** 2) <= 1.0).astype(np.float32)
    return np.clip(rgb, 0.0, 1.0), alpha


# ---------------------------------------------------------------------------
# backgrounds and compositing

@dataclass(frozen=True)
class NoiseBackground:
    """Gaussian-filtered uniform noise, concrete-like."""

    base: float = 0.5
    contrast: float = 0.12
    sigma: float = 3.0


def noise_background(shape, rng, spec=NoiseBackground()):
    raw = rng.random(shape)
    smooth = ndimage.gaussian_filter(raw, spec.sigma)
    smooth = (smooth - smooth.mean()) / max(float(smooth.std()), 1e-9)
    lum = np.clip(spec.base + spec.contrast * smooth, 0.0, 1.0)
    return np.repeat(lum[:, :, None].astype(np.float32), 3, axis=2)


def pose_glyph(rgb, alpha, rotation_deg, scale):
    """Rotate and scale a glyph onto a canvas sized to its new extent."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    h, w = alpha.shape
    theta = np.deg2rad(rotation_deg)
    cos, sin = abs(np.cos(theta)), abs(np.sin(theta))
    out_h = int(np.ceil(scale * (h * cos + w * sin))) + 2
    out_w = int(np.ceil(scale * (h * sin + w * cos))) + 2
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    inverse = np.linalg.inv(rot * scale)
    c_in = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    c_out = np.array([(out_h - 1) / 2.0, (out_w - 1) / 2.0])
    offset = c_in - inverse @ c_out
    out_rgb = np.empty((out_h, out_w, 3), np.float32)
    for c in range(3):
        ndimage.affine_transform(rgb[:, :, c], inverse, offset=offset,
                                 output=out_rgb[:, :, c],
                                 output_shape=(out_h, out_w),
                                 order=1, mode="nearest")
    out_alpha = ndimage.affine_transform(
        alpha, inverse, offset=offset, output_shape=(out_h, out_w),
        order=1, mode="constant", cval=0.0)
    return np.clip(out_rgb, 0.0, 1.0), np.clip(out_alpha, 0.0, 1.0)


def place_glyph(canvas, rgb, alpha, center, rotation=0.0, scale=1.0,
                compose=True):
    """Composite a posed glyph at ``center`` (x, y); returns its pixel box.

    With ``compose=False`` only the box is computed (used for occluded
    parts). Raises ValueError when the glyph lands fully outside.
    """
    tile_rgb, tile_alpha = pose_glyph(rgb, alpha, rotation, scale)
    th, tw = tile_alpha.shape
    ch, cw = canvas.shape[:2]
    cx, cy = center
    x0 = int(round(cx - tw / 2.0))
    y0 = int(round(cy - th / 2.0))
    sx0, sy0 = max(0, -x0), max(0, -y0)
    dx0, dy0 = max(0, x0), max(0, y0)
    dx1, dy1 = min(cw, x0 + tw), min(ch, y0 + th)
    if dx1 <= dx0 or dy1 <= dy0:
        raise ValueError(f"glyph at {center} lies fully outside the canvas")
    a = tile_alpha[sy0:sy0 + (dy1 - dy0), sx0:sx0 + (dx1 - dx0)]
    visible = a > ALPHA_CUTOFF
    if not visible.any():
        raise ValueError(f"glyph at {center} has no visible pixels on canvas")
    if compose:
        g = tile_rgb[sy0:sy0 + (dy1 - dy0), sx0:sx0 + (dx1 - dx0)]
        region = canvas[dy0:dy1, dx0:dx1]
        region[:] = a[:, :, None] * g + (1.0 - a[:, :, None]) * region
    ys, xs = np.nonzero(visible)
    return BoundingBox(x=dx0 + int(xs.min()), y=dy0 + int(ys.min()),
                       w=int(xs.max() - xs.min()) + 1,
                       h=int(ys.max() - ys.min()) + 1)


# ---------------------------------------------------------------------------
# part datasets

def _fit_center(rng, tile_shape, size, margin=3):
    th, tw = tile_shape
    if tw + 2 * margin > size or th + 2 * margin > size:
        raise ValueError(f"glyph tile {th}x{tw} cannot fit a {size} canvas")
    x = rng.uniform(tw / 2 + margin, size - tw / 2 - margin)
    y = rng.uniform(th / 2 + margin, size - th / 2 - margin)
    return (x, y)


def _to_channels(image, channels):
    if channels == 3:
        return image
    if channels == 1:
        lum = (0.299 * image[:, :, 0] + 0.587 * image[:, :, 1] +
               0.114 * image[:, :, 2])
        return lum[:, :, None].astype(np.float32)
    raise ValueError(f"channels must be 1 or 3, got {channels}")


def generate_part_dataset(part, n_pos, n_neg, seed, channels=3, size=200,
                          distractor_fraction=0.5, rotation_range=35.0,
                          scale_range=(0.8, 1.15), origin_prefix=""):
    """Labeled 200x200 samples for one part detector.

    Positives hold the part's glyph at a random pose over noise background;
    negatives are background only, a configurable fraction of them
    cluttered with non-part distractor blobs. Deterministic in (part, seed).
    """
    if n_pos < 0 or n_neg < 0:
        raise ValueError("sample counts must be >= 0")
    rng = np.random.default_rng([seed, zlib.crc32(part.encode("utf-8"))])
    rgb, alpha = part_glyph(part)
    samples = []
    for i in range(n_pos):
        canvas = noise_background((size, size), rng)
        rotation = rng.uniform(-rotation_range, rotation_range)
        scale = rng.uniform(*scale_range)
        _, tile_alpha = pose_glyph(rgb, alpha, rotation, scale)
        center = _fit_center(rng, tile_alpha.shape, size)
        place_glyph(canvas, rgb, alpha, center, rotation, scale)
        samples.append(Sample(
            image=_to_channels(canvas, channels), label=LABEL_PRESENT,
            part=part, origin=f"{origin_prefix}{part}-pos-{i:04d}"))
    for i in range(n_neg):
        canvas = noise_background((size, size), rng)
        if rng.random() < distractor_fraction:
            for _ in range(int(rng.integers(1, 3))):
                d_rgb, d_alpha = distractor_glyph(rng)
                rotation = rng.uniform(-rotation_range, rotation_range)
                _, tile_alpha = pose_glyph(d_rgb, d_alpha, rotation, 1.0)
                center = _fit_center(rng, tile_alpha.shape, size)
                place_glyph(canvas, d_rgb, d_alpha, center, rotation, 1.0)
        samples.append(Sample(
            image=_to_channels(canvas, channels), label=LABEL_ABSENT,
            part=part, origin=f"{origin_prefix}{part}-neg-{i:04d}"))
    return samples


def generate_negative_set(count, seed, channels=3, size=200,
                          distractor_fraction=0.7):
    """Pure negatives shared by all parts: no part glyph ever appears."""
    rng = np.random.default_rng([seed, zlib.crc32(b"negative")])
    samples = []
    for i in range(count):
        canvas = noise_background((size, size), rng)
        if rng.random() < distractor_fraction:
            for _ in range(int(rng.integers(1, 4))):
                d_rgb, d_alpha = distractor_glyph(rng)
                rotation = rng.uniform(-45.0, 45.0)
                _, tile_alpha = pose_glyph(d_rgb, d_alpha, rotation, 1.0)
                center = _fit_center(rng, tile_alpha.shape, size)
                place_glyph(canvas, d_rgb, d_alpha, center, rotation, 1.0)
        samples.append(Sample(
            image=_to_channels(canvas, channels), label=LABEL_ABSENT,
            part="negative", origin=f"negative-{i:04d}"))
    return samples


# ---------------------------------------------------------------------------
# scenes

@dataclass(frozen=True)
class PartPlacement:
    part: str
    center: tuple          # (x, y) pixels on the canvas
    rotation: float = 0.0  # degrees
    scale: float = 1.0
    occluded: bool = False


@dataclass(frozen=True)
class SceneSpec:
    canvas_size: tuple = (400, 600)  # (H, W)
    background: NoiseBackground = NoiseBackground()
    placements: tuple = ()


@dataclass(frozen=True)
class SceneBox:
    part: str
    box: BoundingBox
    visible: bool

    def to_dict(self):
        d = {"part": self.part, **self.box.to_dict(), "visible": self.visible}
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(part=d["part"], box=BoundingBox.from_dict(d),
                   visible=bool(d["visible"]))


def generate_scene(spec, seed):
    """Composite the non-occluded glyphs in pose order.

    Returns (image HWC float32, [SceneBox...]) with one box per placement
    (occluded ones flagged invisible) plus the composite box covering all
    visible parts. Boxes are clipped to the canvas; a placement fully
    outside raises ValueError.
    """
    rng = np.random.default_rng(seed)
    canvas = noise_background(spec.canvas_size, rng, spec.background)
    boxes = []
    for p in spec.placements:
        rgb, alpha = part_glyph(p.part)
        box = place_glyph(canvas, rgb, alpha, p.center, p.rotation, p.scale,
                          compose=not p.occluded)
        boxes.append(SceneBox(part=p.part, box=box, visible=not p.occluded))
    composite = union_extent([b.box for b in boxes if b.visible])
    if composite is not None:
        boxes.append(SceneBox(part=COMPOSITE, box=composite, visible=True))
    return canvas, boxes


def rifle_scene_spec(canvas_size=(400, 600), center=(300, 190), rotation=0.0,
                     scale=1.0, hidden=(), background=NoiseBackground()):
    """A rifle-like arrangement of the four part glyphs.

    ``rotation``/``scale`` act on the whole arrangement (rigid transform);
    ``hidden`` lists parts to occlude (ablative transform).
    """
    layout = {
        "barrel": ((-170.0, -24.0), 0.0),
        "receiver": ((-15.0, 0.0), 0.0),
        "magazine": ((18.0, 62.0), 12.0),
        "stock": ((148.0, -12.0), 0.0),
    }
    theta = np.deg2rad(rotation)
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    placements = []
    for part in PARTS:
        (dx, dy), base_rot = layout[part]
        off = rot @ np.array([dx, dy]) * scale
        placements.append(PartPlacement(
            part=part,
            center=(float(center[0] + off[0]), float(center[1] + off[1])),
            rotation=base_rot + rotation,
            scale=scale,
            occluded=part in hidden,
        ))
    return SceneSpec(canvas_size=canvas_size, background=background,
                     placements=tuple(placements))


def detection_scene_specs(canvas_size=(400, 600)):
    """The 14 evaluation scenes: rigid and ablative transforms.

    Six full-weapon scenes under rigid transforms, then ablative scenes
    hiding one, two, and finally three of the four parts.
    """
    plans = [
        ("rigid-neutral", 0.0, 1.0, (300, 190), ()),
        ("rigid-rot+25", 25.0, 1.0, (300, 200), ()),
        ("rigid-rot-30", -30.0, 1.0, (300, 200), ()),
        ("rigid-shift", 18.0, 1.0, (330, 175), ()),
        ("rigid-small", -22.0, 0.85, (270, 200), ()),
        ("rigid-large", 12.0, 1.1, (300, 195), ()),
        ("ablate-stock", 20.0, 1.0, (285, 195), ("stock",)),
        ("ablate-barrel", -18.0, 1.0, (315, 195), ("barrel",)),
        ("ablate-magazine", 28.0, 0.95, (300, 200), ("magazine",)),
        ("ablate-receiver", -25.0, 1.0, (300, 200), ("receiver",)),
        ("pair-barrel-receiver", 15.0, 1.0, (300, 190),
         ("stock", "magazine")),
        ("pair-receiver-stock", -20.0, 1.0, (280, 195),
         ("barrel", "magazine")),
        ("pair-magazine-stock", 22.0, 1.0, (270, 190),
         ("barrel", "receiver")),
        ("single-receiver", 10.0, 1.0, (300, 200),
         ("barrel", "magazine", "stock")),
    ]
    return [(name, rifle_scene_spec(canvas_size, center, rotation, scale,
                                    hidden))
            for name, rotation, scale, center, hidden in plans]


def background_scene_specs(count=14, canvas_size=(400, 600)):
    """Pure-background scenes: nothing placed, noise only."""
    return [(f"background-{i:03d}", SceneSpec(canvas_size=canvas_size))
            for i in range(count)]


# ---------------------------------------------------------------------------
# scene sets on disk

def write_scene_set(out_dir, name, specs, seed):
    """Render scenes to PNG plus a JSON-lines ground-truth file.

    Each line: {"image": <relative path>, "label": <scene label>,
    "boxes": [{part, x, y, w, h, visible}, ...]}.
    """
    out_dir = Path(out_dir)
    img_dir = out_dir / name
    img_dir.mkdir(parents=True, exist_ok=True)
    jsonl = out_dir / f"{name}.jsonl"
    with open(jsonl, "w") as fh:
        for i, (label, spec) in enumerate(specs):
            image, boxes = generate_scene(spec, seed=[seed, i])
            rel = f"{name}/{label}-{i:03d}.png"
            save_image(image, out_dir / rel)
            record = {
                "image": rel,
                "label": label,
                "boxes": [b.to_dict() for b in boxes],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return jsonl


@dataclass
class SceneRecord:
    image_path: Path
    label: str
    boxes: list = field(default_factory=list)

    def composite_box(self):
        for b in self.boxes:
            if b.part == COMPOSITE:
                return b.box
        return None

    def visible_parts(self):
        return [b.part for b in self.boxes
                if b.visible and b.part != COMPOSITE]


def read_scene_set(jsonl_path):
    """Parse a scene set's ground-truth JSON-lines file."""
    jsonl_path = Path(jsonl_path)
    records = []
    with open(jsonl_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            records.append(SceneRecord(
                image_path=jsonl_path.parent / d["image"],
                label=d.get("label", jsonl_path.stem),
                boxes=[SceneBox.from_dict(b) for b in d["boxes"]],
            ))
    return records
