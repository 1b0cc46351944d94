"""Image reading/writing and the display transfer curve.

PNG bytes are produced by Pillow with default settings, which is
deterministic for a given array; manifests rely on that.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

DISPLAY_GAMMA = 2.2


def read_raster(path) -> np.ndarray:
    """Load an image file as an array.

    .npy files come back exactly as stored (float HDR data).  Everything
    else goes through Pillow and comes back uint8, alpha dropped.
    """
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    arr = np.asarray(Image.open(path))
    if arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    return arr


def write_png(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ValueError(f"write_png expects uint8, got {image.dtype}")
    Image.fromarray(image).save(Path(path), format="PNG")


def display_to_linear(image: np.ndarray) -> np.ndarray:
    """uint8 or [0,1] float display values to linear radiance."""
    image = np.asarray(image)
    if image.dtype == np.uint8:
        image = image.astype(np.float64) / 255.0
    return np.power(image, DISPLAY_GAMMA)


def linear_to_display(image: np.ndarray) -> np.ndarray:
    """Linear radiance to [0,1] display values (gamma 1/2.2, clipped)."""
    return np.power(np.clip(image, 0.0, 1.0), 1.0 / DISPLAY_GAMMA)


def linear_to_bytes(image: np.ndarray) -> np.ndarray:
    """Linear radiance to uint8 display values."""
    return np.rint(linear_to_display(image) * 255.0).astype(np.uint8)


def bytes_to_linear(image: np.ndarray) -> np.ndarray:
    return display_to_linear(image)
