"""Raster I/O and box drawing. Images are HWC float32 arrays in [0, 1]."""

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, UnidentifiedImageError

# figure convention throughout: predicted boxes blue, ground truth green
PREDICTED_COLOR = (40, 80, 255)
GROUND_TRUTH_COLOR = (0, 200, 60)


class ImageReadError(ValueError):
    """The file could not be decoded as a supported raster image."""


def load_image(path):
    """Decode a PNG (or PPM/PGM) into an HWC float32 array in [0, 1].

    Grayscale images come back with a single channel axis; values are
    normalized by the 8-bit channel maximum.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB" if "A" in img.mode or
                                  len(img.getbands()) > 1 else "L")
            arr = np.asarray(img, dtype=np.float32) / 255.0
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise ImageReadError(f"{path}: unsupported image format") from exc
    except OSError as exc:
        raise ImageReadError(f"{path}: unreadable image ({exc})") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def to_uint8(image):
    return (np.clip(image, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def save_image(image, path):
    """Write an HWC float [0,1] (or uint8) array as PNG/PPM by extension."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)
    return path


def _as_rgb_pil(image):
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    img = Image.fromarray(arr)
    return img.convert("RGB")


def annotate_image(image, predicted_boxes=(), ground_truth_boxes=(), width=3):
    """Draw predicted (blue) and ground-truth (green) boxes; returns PIL image.

    Boxes are any objects with x, y, w, h attributes, pixel units, origin
    top-left.
    """
    img = _as_rgb_pil(image)
    draw = ImageDraw.Draw(img)
    for box in ground_truth_boxes:
        draw.rectangle([box.x, box.y, box.x + box.w - 1, box.y + box.h - 1],
                       outline=GROUND_TRUTH_COLOR, width=width)
    for box in predicted_boxes:
        draw.rectangle([box.x, box.y, box.x + box.w - 1, box.y + box.h - 1],
                       outline=PREDICTED_COLOR, width=width)
    return img


def heatmap_image(grid):
    """Linear gray rendering of a per-part probability grid (PIL image)."""
    arr = to_uint8(np.asarray(grid, dtype=np.float64))
    return Image.fromarray(arr, mode="L")
