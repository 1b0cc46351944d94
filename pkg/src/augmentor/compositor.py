"""Overlay rendered car layers onto real frames and derive ground truth.

Compositing happens in linear space with the premultiplied over
operator; ground shadows darken the background before the overlay.
Pixels the layer does not touch are copied from the background byte for
byte, so an empty layer reproduces the input frame exactly.

Instance masks use the alpha >= 0.5 threshold against the id buffer.
Visibility of partially hidden cars comes from the per-instance
isolated coverage the renderer tracked, so no re-render is needed here.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, EmptyPool, MissingRealImage
from .imgio import bytes_to_linear, linear_to_bytes, read_raster
from .renderer import RenderLayer

ORIGINS = ("real", "synthetic")
BACKGROUND_MODES = ("real", "black", "random_image", "synthetic_proxy")
MASK_ALPHA_THRESHOLD = 0.5


# ------------------------------------------------------------ mask RLE

def encode_rle(mask) -> dict:
    """Row-major run-length encoding; counts alternate starting with the
    zero run (a mask whose first pixel is set starts with count 0)."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    flat = mask.ravel()
    if flat.size == 0:
        return {"size": [h, w], "counts": []}
    changes = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return {"size": [h, w], "counts": counts}


def decode_rle(rle: dict) -> np.ndarray:
    h, w = rle["size"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for count in rle["counts"]:
        if count < 0:
            raise ValueError("rle counts must be non-negative")
        if value:
            flat[pos:pos + count] = True
        pos += count
        value = not value
    if pos != h * w:
        raise ValueError(f"rle covers {pos} pixels, raster has {h * w}")
    return flat.reshape(h, w)


def tight_bbox(mask) -> tuple:
    """(x, y, w, h) of the smallest rectangle containing all set pixels."""
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise ValueError("empty mask has no bounding box")
    return (int(xs.min()), int(ys.min()),
            int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1))


# ---------------------------------------------------------- annotations

@dataclass
class InstanceAnnotation:
    instance_id: int
    origin: str
    category: str
    mask: np.ndarray  # (H, W) bool
    bbox: tuple  # (x, y, w, h), tight on mask
    visible_fraction: float = 1.0

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}")
        self.mask = np.asarray(self.mask, dtype=bool)
        if not self.mask.any():
            raise ValueError("annotation mask is empty")
        self.bbox = tuple(int(v) for v in self.bbox)
        if self.bbox != tight_bbox(self.mask):
            raise ValueError("bbox is not tight on the mask")
        if not 0.0 <= self.visible_fraction <= 1.0:
            raise ValueError("visible_fraction must be in [0, 1]")

    @classmethod
    def from_mask(cls, instance_id, origin, category, mask, visible_fraction=1.0):
        return cls(instance_id=instance_id, origin=origin, category=category,
                   mask=np.asarray(mask, dtype=bool), bbox=tight_bbox(mask),
                   visible_fraction=visible_fraction)

    def to_dict(self) -> dict:
        return {
            "id": int(self.instance_id),
            "origin": self.origin,
            "category": self.category,
            "bbox": list(self.bbox),
            "rle": encode_rle(self.mask),
            "visible_fraction": float(self.visible_fraction),
        }

    @classmethod
    def from_dict(cls, record: dict):
        mask = decode_rle(record["rle"])
        ann = cls.from_mask(record["id"], record["origin"], record["category"],
                            mask, record["visible_fraction"])
        if list(ann.bbox) != list(record["bbox"]):
            raise ValueError("stored bbox disagrees with mask")
        return ann


@dataclass
class CompositeResult:
    image: np.ndarray  # (H, W, 3) uint8 display-referred
    annotations: List[InstanceAnnotation]
    background_mode: str

    def __post_init__(self):
        if self.background_mode not in BACKGROUND_MODES:
            raise ValueError(f"background_mode must be one of {BACKGROUND_MODES}")


# ----------------------------------------------------------- compositing

def composite_linear(background_linear: np.ndarray, layer: RenderLayer) -> np.ndarray:
    """Premultiplied over in linear space, shadows darken the background
    first: out = fg + bg * (1 - shadow) * (1 - alpha)."""
    if background_linear.shape[:2] != layer.shape:
        raise DimensionMismatch(
            f"background {background_linear.shape[:2]} vs layer {layer.shape}")
    alpha = layer.alpha
    shaded = background_linear * (1.0 - layer.shadow_alpha)[:, :, None]
    return layer.color[:, :, :3] + shaded * (1.0 - alpha)[:, :, None]


def composite(background: np.ndarray, layer: RenderLayer) -> np.ndarray:
    """Blend a display-referred uint8 background with a rendered layer.

    The blend runs in linear space and is re-encoded with gamma 2.2;
    pixels where the layer has neither coverage nor shadow are copied
    from the background unchanged.
    """
    if background.ndim != 3 or background.shape[2] != 3:
        raise DimensionMismatch("background must be an RGB raster")
    if background.shape[:2] != layer.shape:
        raise DimensionMismatch(
            f"background {background.shape[:2]} vs layer {layer.shape}")
    if background.dtype != np.uint8:
        raise ValueError("composite expects a display-referred uint8 background")
    linear = composite_linear(bytes_to_linear(background), layer)
    out = linear_to_bytes(linear)
    untouched = (layer.alpha == 0) & (layer.shadow_alpha == 0)
    out[untouched] = background[untouched]
    return out


# ---------------------------------------------------------- ground truth

def derive_annotations(layer: RenderLayer,
                       instances: Sequence) -> List[InstanceAnnotation]:
    """Extract per-car masks from the id buffer (alpha >= 0.5), with
    visibility measured against the isolated single-car coverage."""
    if layer.isolated_alpha is None:
        raise ValueError("layer is missing isolated coverage buffers")
    categories = {inst.instance_id: inst.model.category for inst in instances}
    confident = layer.alpha >= MASK_ALPHA_THRESHOLD
    annotations = []
    for row, instance_id in enumerate(layer.instance_order):
        mask = (layer.instance_ids == instance_id) & confident
        visible = int(mask.sum())
        if visible == 0:
            continue
        isolated = int((layer.isolated_alpha[row] >= MASK_ALPHA_THRESHOLD).sum())
        fraction = 1.0 if isolated == 0 else min(1.0, visible / isolated)
        annotations.append(InstanceAnnotation.from_mask(
            instance_id, "synthetic", categories.get(instance_id, "other"),
            mask, fraction))
    return annotations


def update_real_masks(real: Sequence[InstanceAnnotation],
                      layer: RenderLayer) -> List[InstanceAnnotation]:
    """Remove synthetic coverage from real-instance masks; drop the ones
    that end up fully hidden."""
    occluder = layer.alpha >= MASK_ALPHA_THRESHOLD
    updated = []
    for ann in real:
        if ann.origin != "real":
            raise ValueError("update_real_masks expects real-origin annotations")
        remaining = ann.mask & ~occluder
        if not remaining.any():
            continue
        updated.append(InstanceAnnotation.from_mask(
            ann.instance_id, "real", ann.category, remaining, 1.0))
    return updated


# ----------------------------------------------------------- backgrounds

def _to_display_rgb(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.dtype != np.uint8:
        img = linear_to_bytes(np.asarray(img, dtype=float))
    return img


def _cover_crop(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Scale so the image covers the target rectangle, then center-crop."""
    h0, w0 = img.shape[:2]
    scale = max(height / h0, width / w0)
    nh = max(height, int(math.ceil(h0 * scale - 1e-9)))
    nw = max(width, int(math.ceil(w0 * scale - 1e-9)))
    if (nh, nw) != (h0, w0):
        img = np.asarray(Image.fromarray(img).resize((nw, nh), Image.BILINEAR))
    y0 = (nh - height) // 2
    x0 = (nw - width) // 2
    return img[y0:y0 + height, x0:x0 + width].copy()


def resolve_background(mode: str, real_image: Optional[np.ndarray],
                       pool: Sequence, rng) -> np.ndarray:
    """Produce the uint8 RGB canvas the layer gets composited onto.

    All modes need real_image at least as the dimension reference; the
    pool modes draw uniformly and center-crop/scale to those dimensions.
    """
    if mode not in BACKGROUND_MODES:
        raise ValueError(f"unknown background mode {mode!r}")
    if real_image is None:
        raise MissingRealImage(f"background mode {mode!r} needs the rig image")
    if mode == "real":
        return real_image.copy()
    if mode == "black":
        return np.zeros_like(real_image)
    if len(pool) == 0:
        raise EmptyPool(f"background mode {mode!r} needs a non-empty image pool")
    pick = pool[int(rng.integers(len(pool)))]
    img = pick if isinstance(pick, np.ndarray) else read_raster(pick)
    img = _to_display_rgb(img)
    return _cover_crop(img, real_image.shape[0], real_image.shape[1])
