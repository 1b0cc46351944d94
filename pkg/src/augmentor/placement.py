"""Car pose sampling strategies and collision filtering.

Four samplers with increasing amounts of scene knowledge: annotated
trajectories, a road mask, a bare ground-plane region, and a free 3D
volume.  All of them are pure functions of (inputs, rng): poses are drawn
one at a time with a fixed number of variates per pose, so two calls with
the same generator state and counts k <= n produce identical first k
poses.  The pipeline relies on that prefix property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .assets import CarModel, footprint
from .errors import EmptyRoadMask, EmptyTrajectorySet
from .geometry import CameraIntrinsics, GroundPlane, backproject_pixels

TWO_PI = 2.0 * math.pi


@dataclass
class PoseSample:
    """A placed car: either upright on the ground plane or free in space.

    position is in camera coordinates (meters).  on_plane poses carry a
    yaw about the plane normal; free poses carry a unit quaternion
    (w, x, y, z).
    """

    kind: str
    position: np.ndarray
    yaw: Optional[float] = None
    rotation: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("on_plane", "free"):
            raise ValueError(f"kind must be 'on_plane' or 'free', got {self.kind!r}")
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        if self.kind == "on_plane":
            if self.yaw is None:
                raise ValueError("on_plane pose needs a yaw")
            self.yaw = float(self.yaw) % TWO_PI
            self.rotation = None
        else:
            if self.rotation is None:
                raise ValueError("free pose needs a rotation quaternion")
            q = np.asarray(self.rotation, dtype=np.float64).reshape(4)
            if abs(np.linalg.norm(q) - 1.0) > 1e-6:
                raise ValueError(f"rotation quaternion must be unit, |q| = {np.linalg.norm(q)}")
            self.rotation = q
            self.yaw = None


@dataclass
class TrajectorySet:
    """Vacant-lane polylines in ground-plane (x, z) meters."""

    polylines: list  # of (N, 2) float arrays
    source: str = ""

    def __post_init__(self):
        cleaned = []
        for i, line in enumerate(self.polylines):
            pts = np.asarray(line, dtype=np.float64).reshape(-1, 2)
            if len(pts) < 2:
                raise ValueError(f"polyline {i} has fewer than 2 points")
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            if np.any(seg == 0):
                raise ValueError(f"polyline {i} has repeated consecutive points")
            cleaned.append(pts)
        self.polylines = cleaned

    @classmethod
    def from_json(cls, data: dict, source: str = "") -> "TrajectorySet":
        return cls(polylines=data["polylines"], source=source)

    def to_json(self) -> dict:
        return {"polylines": [p.tolist() for p in self.polylines]}


@dataclass(frozen=True)
class PlacementRegion:
    """Axis-aligned ground rectangle to scatter cars in.

    max_count caps how many cars the pipeline will place from this
    region; the sampler itself honors whatever count it is asked for.
    """

    x_min: float = -8.0
    x_max: float = 8.0
    z_min: float = 4.0
    z_max: float = 60.0
    max_count: int = 64

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.z_min < self.z_max):
            raise ValueError("placement region must have min < max on both axes")
        if self.max_count < 0:
            raise ValueError("max_count must be >= 0")


def segment_yaw(dx: float, dz: float) -> float:
    """Yaw whose forward direction is parallel to the ground vector (dx, dz).

    A car at yaw theta faces (-sin(theta), cos(theta)) in ground (x, z),
    so theta = atan2(-dx, dz).
    """
    return math.atan2(-dx, dz) % TWO_PI


def sample_manual(traj: TrajectorySet, plane: GroundPlane, count: int, rng: np.random.Generator):
    """Poses on annotated trajectories, yaw aligned with the local segment.

    The point is picked uniformly by arc length across all polylines and
    the yaw is flipped by pi with probability 1/2 so both driving
    directions occur.
    """
    if count == 0:
        return []
    if not traj.polylines:
        raise EmptyTrajectorySet("no polylines to sample from")

    # flat list of segments with cumulative arc length
    starts, deltas, lengths = [], [], []
    for pts in traj.polylines:
        d = np.diff(pts, axis=0)
        starts.append(pts[:-1])
        deltas.append(d)
        lengths.append(np.linalg.norm(d, axis=1))
    starts = np.vstack(starts)
    deltas = np.vstack(deltas)
    lengths = np.concatenate(lengths)
    cum = np.cumsum(lengths)
    total = cum[-1]

    poses = []
    for _ in range(count):
        u = rng.uniform(0.0, total)
        flip = rng.uniform() < 0.5
        seg = int(np.searchsorted(cum, u, side="right"))
        seg = min(seg, len(lengths) - 1)
        s = (u - (cum[seg] - lengths[seg])) / lengths[seg]
        xz = starts[seg] + s * deltas[seg]
        yaw = segment_yaw(deltas[seg][0], deltas[seg][1])
        if flip:
            yaw = (yaw + math.pi) % TWO_PI
        poses.append(PoseSample(kind="on_plane", position=plane.lift(xz), yaw=yaw))
    return poses


def sample_road_mask(
    mask: np.ndarray,
    k: CameraIntrinsics,
    plane: GroundPlane,
    count: int,
    rng: np.random.Generator,
):
    """Poses at road pixels back-projected onto the plane, random yaw."""
    if count == 0:
        return []
    mask = np.asarray(mask)
    if mask.shape != (k.height, k.width):
        raise ValueError(
            f"mask shape {mask.shape} does not match image ({k.height}, {k.width})"
        )
    rows, cols = np.nonzero(mask)
    if len(rows) == 0:
        raise EmptyRoadMask("road mask has no nonzero pixels")
    pixels = np.stack([cols, rows], axis=1).astype(np.float64)
    points, valid = backproject_pixels(pixels, k, plane)
    points = points[valid]
    if len(points) == 0:
        raise EmptyRoadMask("no road pixel hits the ground plane in front of the camera")

    poses = []
    for _ in range(count):
        idx = int(rng.integers(len(points)))
        yaw = rng.uniform(0.0, TWO_PI)
        poses.append(PoseSample(kind="on_plane", position=points[idx].copy(), yaw=yaw))
    return poses


def sample_ground_plane(
    region: PlacementRegion,
    plane: GroundPlane,
    count: int,
    rng: np.random.Generator,
):
    """Poses uniform over a ground rectangle, random yaw."""
    poses = []
    for _ in range(count):
        x = rng.uniform(region.x_min, region.x_max)
        z = rng.uniform(region.z_min, region.z_max)
        yaw = rng.uniform(0.0, TWO_PI)
        poses.append(PoseSample(kind="on_plane", position=plane.lift((x, z)), yaw=yaw))
    return poses


def sample_unconstrained(bounds_min, bounds_max, count: int, rng: np.random.Generator):
    """Free poses uniform in a 3D box with uniform random rotation."""
    lo = np.asarray(bounds_min, dtype=np.float64).reshape(3)
    hi = np.asarray(bounds_max, dtype=np.float64).reshape(3)
    if np.any(lo >= hi):
        raise ValueError("volume bounds must have min < max on every axis")
    poses = []
    for _ in range(count):
        pos = np.array([rng.uniform(lo[i], hi[i]) for i in range(3)])
        q = _uniform_quaternion(rng)
        poses.append(PoseSample(kind="free", position=pos, rotation=q))
    return poses


def _uniform_quaternion(rng: np.random.Generator) -> np.ndarray:
    """Shoemake's subgroup algorithm: uniform over the rotation group."""
    u1, u2, u3 = rng.uniform(), rng.uniform(), rng.uniform()
    a, b = math.sqrt(1.0 - u1), math.sqrt(u1)
    return np.array(
        [
            a * math.sin(TWO_PI * u2),
            a * math.cos(TWO_PI * u2),
            b * math.sin(TWO_PI * u3),
            b * math.cos(TWO_PI * u3),
        ]
    )


def accepted_indices(poses, models) -> list:
    """Greedy collision filter; returns indices of the kept poses.

    Poses are visited in input order; an on_plane pose is rejected when
    its ground footprint intersects any previously accepted one.  Free
    poses pass through unfiltered.
    """
    if len(poses) != len(models):
        raise ValueError("poses and models must be matched lists")
    kept = []
    kept_rects = []
    for i, (pose, model) in enumerate(zip(poses, models)):
        if pose.kind != "on_plane":
            kept.append(i)
            continue
        rect = footprint(model, pose)
        if any(rect.intersects(r) for r in kept_rects):
            continue
        kept.append(i)
        kept_rects.append(rect)
    return kept


def filter_collisions(poses, models):
    """Greedy collision filter; returns the kept poses in input order."""
    return [poses[i] for i in accepted_indices(poses, models)]


def quaternion_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _plane_basis(plane: GroundPlane) -> np.ndarray:
    """Columns (right, up, forward) of the upright car frame on the plane.

    Up is the plane normal; forward is the camera view axis projected
    onto the plane.  For the canonical road plane this is the rotation
    by pi about the camera z axis.
    """
    n = plane.normal
    f = np.array([0.0, 0.0, 1.0]) - n[2] * n
    norm = np.linalg.norm(f)
    if norm < 1e-9:
        # camera looking straight at the plane; brace against camera up
        f = np.array([0.0, -1.0, 0.0]) - n[1] * n
        norm = np.linalg.norm(f)
    f = f / norm
    u = np.cross(n, f)
    return np.column_stack([u, n, f])


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    kx, ky, kz = axis
    cross = np.array([[0, -kz, ky], [kz, 0, -kx], [-ky, kx, 0]])
    return c * np.eye(3) + s * cross + (1 - c) * np.outer(axis, axis)


def pose_transform(pose: PoseSample, plane: Optional[GroundPlane] = None):
    """(rotation, translation) mapping model frame to camera frame.

    Model convention: x right, y up, z forward, wheels at y = 0.  For
    on_plane poses the model up axis maps to the plane normal and the
    whole frame spins by yaw about it; the plane is required.
    """
    if pose.kind == "free":
        return quaternion_matrix(pose.rotation), pose.position.copy()
    if plane is None:
        raise ValueError("on_plane pose transform needs the ground plane")
    base = _plane_basis(plane)
    spin = _axis_rotation(plane.normal, pose.yaw)
    return spin @ base, pose.position.copy()
