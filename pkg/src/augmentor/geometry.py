"""Camera model, ground-plane math, and the ground-to-image homography.

Coordinate conventions used throughout the toolkit:

  Camera frame (right-handed): x right, y down, z forward, units meters.
  Image frame: u right, v down, pixel units, origin at the top-left.
  Ground-plane 2D coordinates: (x, z) in meters.  A ground point (x, z)
  lifts to the camera-frame point whose x and z components equal those
  coordinates and whose y solves the plane equation.

The canonical ground plane for a camera mounted h meters above a level
road is normal (0, -1, 0), offset -h: the plane normal points up (toward
negative camera y) and the road sits at y = +h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePlane,
    EmptyExtent,
    IntersectionBehindCamera,
    NonPositiveDepth,
    RayParallelToPlane,
)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics. Focal lengths and principal point in pixels."""

    focal_x: float
    focal_y: float
    center_x: float
    center_y: float
    width: int
    height: int

    def __post_init__(self):
        if self.focal_x <= 0 or self.focal_y <= 0:
            raise ValueError(f"focal lengths must be positive, got ({self.focal_x}, {self.focal_y})")
        if not (0 <= self.center_x < self.width):
            raise ValueError(f"center_x {self.center_x} outside [0, {self.width})")
        if not (0 <= self.center_y < self.height):
            raise ValueError(f"center_y {self.center_y} outside [0, {self.height})")

    @property
    def matrix(self) -> np.ndarray:
        """3x3 calibration matrix K."""
        return np.array(
            [
                [self.focal_x, 0.0, self.center_x],
                [0.0, self.focal_y, self.center_y],
                [0.0, 0.0, 1.0],
            ]
        )


@dataclass(frozen=True)
class GroundPlane:
    """Plane { p : normal . p = offset } in camera coordinates.

    The normal must be unit length and the camera origin must not lie on
    the plane (offset != 0), otherwise the ground homography degenerates.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(n))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"plane normal must be unit length, |n| = {norm}")
        if self.offset == 0.0:
            raise ValueError("plane must not pass through the camera origin (offset = 0)")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_height(cls, height: float) -> "GroundPlane":
        """Level road h meters below the camera: normal (0,-1,0), offset -h."""
        return cls(normal=np.array([0.0, -1.0, 0.0]), offset=-float(height))

    def signed_distance(self, point: np.ndarray) -> float:
        return float(self.normal @ np.asarray(point, dtype=np.float64)) - self.offset

    def lift(self, ground_xz) -> np.ndarray:
        """Camera-frame point on the plane with the given (x, z) coordinates."""
        x, z = float(ground_xz[0]), float(ground_xz[1])
        ny = self.normal[1]
        if abs(ny) < 1e-12:
            raise DegeneratePlane("plane is vertical; (x, z) ground coordinates undefined")
        y = (self.offset - self.normal[0] * x - self.normal[2] * z) / ny
        return np.array([x, y, z])


class Homography:
    """3x3 invertible map from ground-plane (x, z, 1) to image (u*w, v*w, w).

    The matrix is defined up to scale; the constructor canonicalizes it by
    dividing by the entry of largest magnitude, so scalar multiples of the
    same matrix compare (and warp) identically.
    """

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise ValueError("homography matrix contains non-finite entries")
        if abs(np.linalg.det(m)) < 1e-15:
            raise ValueError("homography matrix is singular")
        flat = np.abs(m).ravel()
        pivot = m.ravel()[int(np.argmax(flat))]
        self.matrix = m / pivot

    def apply(self, ground_points) -> np.ndarray:
        """Map ground (x, z) points to pixel (u, v). Accepts (2,) or (N, 2)."""
        g = np.asarray(ground_points, dtype=np.float64)
        single = g.ndim == 1
        g = np.atleast_2d(g)
        ones = np.ones((g.shape[0], 1))
        p = np.hstack([g, ones]) @ self.matrix.T
        uv = p[:, :2] / p[:, 2:3]
        return uv[0] if single else uv

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))


@dataclass(frozen=True)
class GroundExtent:
    """Axis-aligned ground rectangle, meters."""

    x_min: float
    x_max: float
    z_min: float
    z_max: float

    @property
    def size(self):
        return self.x_max - self.x_min, self.z_max - self.z_min

    def is_empty(self) -> bool:
        return self.x_max <= self.x_min or self.z_max <= self.z_min

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "z_min": self.z_min, "z_max": self.z_max}

    @classmethod
    def from_dict(cls, d: dict) -> "GroundExtent":
        return cls(float(d["x_min"]), float(d["x_max"]), float(d["z_min"]), float(d["z_max"]))


def project(point, k: CameraIntrinsics):
    """Pinhole projection of camera-frame point(s) to sub-pixel (u, v).

    Accepts a single 3-vector or an (N, 3) array.  The result may lie
    outside the image rectangle.  Raises NonPositiveDepth if any z <= 0.
    """
    p = np.asarray(point, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    z = p[:, 2]
    if np.any(z <= 0):
        raise NonPositiveDepth(f"point depth must be positive, got min z = {z.min()}")
    u = k.focal_x * p[:, 0] / z + k.center_x
    v = k.focal_y * p[:, 1] / z + k.center_y
    uv = np.stack([u, v], axis=-1)
    return uv[0] if single else uv


def pixel_ray(pixel, k: CameraIntrinsics) -> np.ndarray:
    """Unnormalized camera-frame ray direction through a pixel (z = 1)."""
    u, v = float(pixel[0]), float(pixel[1])
    return np.array([(u - k.center_x) / k.focal_x, (v - k.center_y) / k.focal_y, 1.0])


def backproject_to_plane(pixel, k: CameraIntrinsics, plane: GroundPlane) -> np.ndarray:
    """Intersect the ray through a pixel with the ground plane.

    Raises RayParallelToPlane when the ray never meets the plane and
    IntersectionBehindCamera when it meets it at non-positive depth.
    """
    d = pixel_ray(pixel, k)
    denom = float(plane.normal @ d)
    if abs(denom) < 1e-12:
        raise RayParallelToPlane(f"pixel {tuple(pixel)} ray is parallel to the ground plane")
    t = plane.offset / denom
    if t <= 0:
        raise IntersectionBehindCamera(f"pixel {tuple(pixel)} meets the plane at t = {t}")
    return t * d


def backproject_pixels(pixels: np.ndarray, k: CameraIntrinsics, plane: GroundPlane):
    """Vectorized plane intersection for (N, 2) pixels.

    Returns (points (N, 3), valid (N,)): invalid rows are parallel rays or
    intersections behind the camera; their point values are undefined.
    """
    px = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    d = np.empty((px.shape[0], 3))
    d[:, 0] = (px[:, 0] - k.center_x) / k.focal_x
    d[:, 1] = (px[:, 1] - k.center_y) / k.focal_y
    d[:, 2] = 1.0
    denom = d @ plane.normal
    with np.errstate(divide="ignore", invalid="ignore"):
        t = plane.offset / denom
        valid = (np.abs(denom) >= 1e-12) & (t > 0)
        points = np.where(valid[:, None], t[:, None] * d, 0.0)
    return points, valid


def ground_homography(k: CameraIntrinsics, plane: GroundPlane) -> Homography:
    """Homography H with H @ (x, z, 1) ~ project(lift((x, z))).

    Composes the (x, z) -> camera-point lift (linear in homogeneous
    coordinates) with the calibration matrix.
    """
    n, d = plane.normal, plane.offset
    if d == 0.0:
        raise DegeneratePlane("plane passes through the camera origin")
    if abs(n[1]) < 1e-12:
        raise DegeneratePlane("vertical plane cannot be parameterized by (x, z)")
    lift = np.array(
        [
            [1.0, 0.0, 0.0],
            [-n[0] / n[1], -n[2] / n[1], d / n[1]],
            [0.0, 1.0, 0.0],
        ]
    )
    return Homography(k.matrix @ lift)


def birdseye_shape(extent: GroundExtent, meters_per_pixel: float):
    """Output raster (height, width) covering the extent at the given scale."""
    if meters_per_pixel <= 0:
        raise ValueError(f"meters_per_pixel must be positive, got {meters_per_pixel}")
    if extent.is_empty():
        raise EmptyExtent(f"extent {extent} has no area")
    sx, sz = extent.size
    width = max(1, int(round(sx / meters_per_pixel)))
    height = max(1, int(round(sz / meters_per_pixel)))
    return height, width


def birdseye_pixel_to_ground(px, py, extent: GroundExtent, meters_per_pixel: float):
    """Birdseye pixel (col, row) to ground meters; pixel (0,0) is the extent origin."""
    return extent.x_min + px * meters_per_pixel, extent.z_min + py * meters_per_pixel


def ground_to_birdseye_pixel(x, z, extent: GroundExtent, meters_per_pixel: float):
    return (x - extent.x_min) / meters_per_pixel, (z - extent.z_min) / meters_per_pixel


def warp_birdseye(image: np.ndarray, h: Homography, meters_per_pixel: float, extent: GroundExtent) -> np.ndarray:
    """Resample a camera image onto a metric top-down grid.

    Output pixel (row i, col j) shows the source image at
    H(ground point of (i, j)), bilinearly interpolated.  Ground points
    that map outside the source rectangle become opaque black.
    """
    out_h, out_w = birdseye_shape(extent, meters_per_pixel)

    cols, rows = np.meshgrid(np.arange(out_w), np.arange(out_h))
    gx = extent.x_min + cols.astype(np.float64) * meters_per_pixel
    gz = extent.z_min + rows.astype(np.float64) * meters_per_pixel

    m = h.matrix
    w = m[2, 0] * gx + m[2, 1] * gz + m[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (m[0, 0] * gx + m[0, 1] * gz + m[0, 2]) / w
        v = (m[1, 0] * gx + m[1, 1] * gz + m[1, 2]) / w

    src = np.asarray(image)
    src_h, src_w = src.shape[:2]
    valid = np.isfinite(u) & np.isfinite(v)
    valid &= (u >= 0) & (u <= src_w - 1) & (v >= 0) & (v <= src_h - 1)

    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    u1 = np.minimum(u0 + 1, src_w - 1)
    v1 = np.minimum(v0 + 1, src_h - 1)
    fu = u - u0
    fv = v - v0

    flat = src.reshape(src_h, src_w, -1).astype(np.float64)
    out = (
        flat[v0, u0] * ((1 - fu) * (1 - fv))[..., None]
        + flat[v0, u1] * (fu * (1 - fv))[..., None]
        + flat[v1, u0] * ((1 - fu) * fv)[..., None]
        + flat[v1, u1] * (fu * fv)[..., None]
    )
    out[~valid] = 0.0

    if src.ndim == 2:
        out = out[..., 0]
    if np.issubdtype(src.dtype, np.integer):
        out = np.clip(np.rint(out), 0, np.iinfo(src.dtype).max).astype(src.dtype)
    else:
        out = out.astype(src.dtype)
    return out
