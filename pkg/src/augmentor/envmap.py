"""Equirectangular environment maps and the true/random/none lighting modes.

Direction convention (camera frame, y down): the map's top row is
straight up, so v = acos(-dir_y)/pi and u = atan2(dir_x, dir_z)/2pi + 0.5
with the map center at the camera forward axis.  Lookups are bilinear
with horizontal wrap and vertical clamp, texel centers at (u*W - 0.5,
v*H - 0.5).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BadAspect, EmptyPool, MissingTrueMap, NonUnitDirection
from .imgio import read_raster

MODE_TAGS = ("true_map", "random_map", "constant")


@dataclass
class EnvironmentMap:
    pixels: Optional[np.ndarray]  # (H, 2H, 3) linear radiance, None for constant maps
    mode_tag: str = "true_map"
    constant_radiance: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        if self.mode_tag not in MODE_TAGS:
            raise ValueError(f"mode_tag must be one of {MODE_TAGS}")
        self.constant_radiance = np.asarray(self.constant_radiance, dtype=np.float64).reshape(3)
        if np.any(self.constant_radiance < 0):
            raise ValueError("radiance must be non-negative")
        if self.pixels is not None:
            self.pixels = np.asarray(self.pixels, dtype=np.float64)
            if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
                raise ValueError(f"expected (H, W, 3) pixels, got {self.pixels.shape}")
            h, w = self.pixels.shape[:2]
            if w != 2 * h:
                raise BadAspect(f"equirect map must be 2:1, got {w}x{h}")
            if self.pixels.min() < 0:
                raise ValueError("radiance must be non-negative")
        elif self.mode_tag != "constant":
            raise ValueError("raster-less map must have mode_tag 'constant'")


def load_envmap(image: np.ndarray, gamma_decode: bool = False, mode_tag: str = "true_map") -> EnvironmentMap:
    """Wrap a raster as an environment map, optionally decoding gamma 2.2.

    uint8 input is scaled to [0, 1] first; float input is taken as-is.
    """
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = arr[:, :, None].repeat(3, axis=2)
    if arr.ndim != 3 or arr.shape[2] < 3:
        raise ValueError(f"expected an RGB raster, got shape {arr.shape}")
    arr = arr[:, :, :3].astype(np.float64)
    h, w = arr.shape[:2]
    if w != 2 * h:
        raise BadAspect(f"equirect map must be 2:1, got {w}x{h}")
    if np.issubdtype(np.asarray(image).dtype, np.integer):
        arr = arr / 255.0
    if gamma_decode:
        arr = np.power(np.clip(arr, 0.0, None), 2.2)
    return EnvironmentMap(pixels=arr, mode_tag=mode_tag)


def sample_direction(env: EnvironmentMap, direction) -> np.ndarray:
    """Linear RGB radiance arriving from a unit direction."""
    d = np.asarray(direction, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(d)
    if abs(norm - 1.0) > 1e-6:
        raise NonUnitDirection(f"|dir| = {norm}")
    if env.pixels is None:
        return env.constant_radiance.copy()

    h, w = env.pixels.shape[:2]
    v = math.acos(min(1.0, max(-1.0, -d[1]))) / math.pi
    u = math.atan2(d[0], d[2]) / (2.0 * math.pi) + 0.5

    x = u * w - 0.5
    y = v * h - 0.5
    x0 = math.floor(x)
    y0 = math.floor(y)
    fx = x - x0
    fy = y - y0
    x1 = (x0 + 1) % w
    x0 = x0 % w
    y1 = min(max(y0 + 1, 0), h - 1)
    y0 = min(max(y0, 0), h - 1)

    top = (1 - fx) * env.pixels[y0, x0] + fx * env.pixels[y0, x1]
    bot = (1 - fx) * env.pixels[y1, x0] + fx * env.pixels[y1, x1]
    return (1 - fy) * top + fy * bot


def resolve_env(config_mode: str, rig_map, pool, rng: np.random.Generator) -> EnvironmentMap:
    """Pick the environment for one composite according to the lighting mode.

    true_map loads the rig's own panorama, random_map draws uniformly
    from the pool, none gives a constant white (radiance 1) environment.
    File gamma is decided by dtype: integer rasters are treated as
    display-encoded and decoded with gamma 2.2, float rasters as linear.
    """
    if config_mode == "none":
        return EnvironmentMap(pixels=None, mode_tag="constant", constant_radiance=np.ones(3))
    if config_mode == "true_map":
        if rig_map is None:
            raise MissingTrueMap("rig has no panorama but env_mode is true_map")
        return _load_path(rig_map, "true_map")
    if config_mode == "random_map":
        if not pool:
            raise EmptyPool("env_mode random_map needs a non-empty map pool")
        path = pool[int(rng.integers(len(pool)))]
        return _load_path(path, "random_map")
    raise ValueError(f"unknown env mode {config_mode!r}")


def _load_path(path, mode_tag: str) -> EnvironmentMap:
    raster = read_raster(path)
    decode = np.issubdtype(raster.dtype, np.integer)
    return load_envmap(raster, gamma_decode=decode, mode_tag=mode_tag)
