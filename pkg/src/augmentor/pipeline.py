"""Dataset orchestration: config, rigs, the augmentation loop, manifests.

Each composite is an independent job keyed by (rig index, augmentation
index); its seed comes from a stable hash chain off the dataset seed,
so outputs never depend on worker count or completion order, and adding
rigs does not reshuffle existing composites.

Within one composite, separate generators drive the car count, the
poses, the model/color draws, the environment pick and the background
pick. Poses and models are drawn one car at a time, which makes the
first k cars of a max_cars=n run identical to the whole of a max_cars=k
run with the same seed; dataset statistics are then monotone in
max_cars by construction.
"""

import dataclasses
import json
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .assets import Catalog, catalog_sample, load_catalog
from .compositor import (
    InstanceAnnotation,
    composite,
    derive_annotations,
    resolve_background,
    update_real_masks,
)
from .envmap import resolve_env
from .errors import (
    AugmentorError,
    CorruptManifest,
    DimensionMismatch,
    MissingStrategyInput,
    ParseError,
    RangeViolation,
    UnknownKey,
)
from .geometry import (
    CameraIntrinsics,
    GroundExtent,
    GroundPlane,
    ground_homography,
    warp_birdseye,
)
from .imgio import linear_to_bytes, read_raster, write_png
from .placement import (
    PlacementRegion,
    TrajectorySet,
    accepted_indices,
    sample_ground_plane,
    sample_manual,
    sample_road_mask,
    sample_unconstrained,
)
from .postfx import PostFxParams, apply_chain
from .renderer import RenderSettings, SceneInstance, render_layer
from .rng import hash_combine

PLACEMENT_STRATEGIES = ("manual", "road_mask", "ground_plane", "unconstrained")
ENV_MODES = ("true_map", "random_map", "none")
BACKGROUND_MODES = ("real", "black", "random_image", "synthetic_proxy")
CARS_MODES = ("uniform", "exact")

# purpose constants for the per-composite generator family
GEN_COUNT, GEN_POSES, GEN_MODELS, GEN_ENV, GEN_BACKGROUND = range(5)

DEFAULT_REGION = PlacementRegion()
# camera-frame box for the anything-goes ablation placement
UNCONSTRAINED_MIN = (-8.0, -4.0, 4.0)
UNCONSTRAINED_MAX = (8.0, 2.0, 60.0)


# -------------------------------------------------------------- config

def _require_int(name, value, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise RangeViolation(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise RangeViolation(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise RangeViolation(f"{name} must be <= {maximum}, got {value}")


def _require_choice(name, value, choices):
    if value not in choices:
        raise RangeViolation(f"{name} must be one of {choices}, got {value!r}")


@dataclass
class AugmentationConfig:
    augmentations_per_image: int = 20
    max_cars: int = 5
    cars_mode: str = "uniform"
    placement_strategy: str = "manual"
    env_mode: str = "true_map"
    postfx: PostFxParams = field(default_factory=PostFxParams)
    background_mode: str = "real"
    render: RenderSettings = field(default_factory=RenderSettings)
    seed: int = 0
    catalog: Optional[str] = None
    output_dir: str = "augmented"
    env_pool: tuple = ()
    background_pool: tuple = ()

    def __post_init__(self):
        _require_int("augmentations_per_image", self.augmentations_per_image, 1)
        _require_int("max_cars", self.max_cars, 0)
        _require_int("seed", self.seed, 0, 2 ** 64 - 1)
        _require_choice("cars_mode", self.cars_mode, CARS_MODES)
        _require_choice("placement_strategy", self.placement_strategy,
                        PLACEMENT_STRATEGIES)
        _require_choice("env_mode", self.env_mode, ENV_MODES)
        _require_choice("background_mode", self.background_mode, BACKGROUND_MODES)
        if not isinstance(self.postfx, PostFxParams):
            raise RangeViolation("postfx must be a PostFxParams block")
        if not isinstance(self.render, RenderSettings):
            raise RangeViolation("render must be a RenderSettings block")
        self.env_pool = tuple(str(p) for p in self.env_pool)
        self.background_pool = tuple(str(p) for p in self.background_pool)
        if self.catalog is not None:
            self.catalog = str(self.catalog)

    def semantic_dict(self) -> dict:
        """Everything that influences output pixels; output_dir excluded."""
        return {
            "augmentations_per_image": self.augmentations_per_image,
            "max_cars": self.max_cars,
            "cars_mode": self.cars_mode,
            "placement_strategy": self.placement_strategy,
            "env_mode": self.env_mode,
            "background_mode": self.background_mode,
            "seed": self.seed,
            "catalog": self.catalog,
            "env_pool": list(self.env_pool),
            "background_pool": list(self.background_pool),
            "postfx": dataclasses.asdict(self.postfx),
            "render": dataclasses.asdict(self.render),
        }

    def fingerprint(self) -> str:
        import hashlib

        blob = json.dumps(self.semantic_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


_TOP_KEYS = {
    "augmentations_per_image", "max_cars", "cars_mode", "placement_strategy",
    "env_mode", "postfx", "background_mode", "render", "seed", "catalog",
    "output_dir", "env_pool", "background_pool",
}
_POSTFX_KEYS = {"chroma_shift", "dof_focus", "dof_strength", "color_curve",
                "gamma", "enabled"}
_RENDER_KEYS = {"samples_per_pixel", "diffuse_env_samples", "shadow_samples",
                "enable_shadows", "rng_seed", "max_shadow"}


def _check_keys(block, allowed, prefix=""):
    if not isinstance(block, dict):
        raise ParseError(f"{prefix or 'config'} must be a JSON object")
    for key in block:
        if key not in allowed:
            raise UnknownKey(f'unknown key "{prefix}{key}"')


def load_config(text: str) -> AugmentationConfig:
    """Strict JSON parse; unknown keys rejected, ranges checked, omitted
    fields take the documented defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}") from None
    _check_keys(raw, _TOP_KEYS)
    kwargs = dict(raw)
    if "postfx" in kwargs:
        _check_keys(kwargs["postfx"], _POSTFX_KEYS, prefix="postfx.")
        sub = dict(kwargs["postfx"])
        if "color_curve" in sub:
            sub["color_curve"] = tuple(tuple(k) for k in sub["color_curve"])
        try:
            kwargs["postfx"] = PostFxParams(**sub)
        except ValueError as exc:
            raise RangeViolation(f"postfx: {exc}") from None
    if "render" in kwargs:
        _check_keys(kwargs["render"], _RENDER_KEYS, prefix="render.")
        try:
            kwargs["render"] = RenderSettings(**kwargs["render"])
        except ValueError as exc:
            raise RangeViolation(f"render: {exc}") from None
    try:
        return AugmentationConfig(**kwargs)
    except RangeViolation:
        raise
    except (TypeError, ValueError) as exc:
        raise RangeViolation(str(exc)) from None


# ---------------------------------------------------------------- rigs

@dataclass
class CameraRig:
    rig_id: str
    image_path: Path
    intrinsics: CameraIntrinsics
    plane: GroundPlane
    env_map_path: Optional[Path] = None
    trajectory_path: Optional[Path] = None
    road_mask_path: Optional[Path] = None
    real_annotation_path: Optional[Path] = None


_RIG_KEYS = {"id", "image", "intrinsics", "plane", "env_map", "trajectories",
             "road_mask", "real_annotations"}
_INTRINSIC_KEYS = {"focal_x", "focal_y", "center_x", "center_y",
                   "width", "height"}


def _parse_plane(block) -> GroundPlane:
    if "height" in block:
        if set(block) != {"height"}:
            raise ParseError("plane with 'height' takes no other keys")
        return GroundPlane.from_height(float(block["height"]))
    if set(block) != {"normal", "offset"}:
        raise ParseError("plane needs either {'height'} or {'normal', 'offset'}")
    return GroundPlane(normal=np.asarray(block["normal"], dtype=np.float64),
                       offset=float(block["offset"]))


def load_rigs(path) -> List[CameraRig]:
    """Load the rig list JSON; paths resolve relative to the file and the
    referenced files must exist."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise ParseError(f"{path}: rig list must be a JSON array")
    rigs = []
    for i, entry in enumerate(raw):
        _check_keys(entry, _RIG_KEYS, prefix=f"rig {i}: ")
        for required in ("image", "intrinsics", "plane"):
            if required not in entry:
                raise ParseError(f"rig {i}: missing '{required}'")
        _check_keys(entry["intrinsics"], _INTRINSIC_KEYS,
                    prefix=f"rig {i}: intrinsics.")
        intrinsics = CameraIntrinsics(**entry["intrinsics"])
        plane = _parse_plane(entry["plane"])

        def resolve(key):
            if key not in entry or entry[key] is None:
                return None
            p = Path(entry[key])
            if not p.is_absolute():
                p = path.parent / p
            if not p.exists():
                raise ParseError(f"rig {i}: referenced file missing: {p}")
            return p

        image_path = resolve("image")
        rigs.append(CameraRig(
            rig_id=str(entry.get("id", image_path.stem)),
            image_path=image_path,
            intrinsics=intrinsics,
            plane=plane,
            env_map_path=resolve("env_map"),
            trajectory_path=resolve("trajectories"),
            road_mask_path=resolve("road_mask"),
            real_annotation_path=resolve("real_annotations"),
        ))
    return rigs


def _load_real_annotations(path) -> List[InstanceAnnotation]:
    if path is None:
        return []
    data = json.loads(Path(path).read_text())
    return [InstanceAnnotation.from_dict(rec) for rec in data["instances"]]


# ------------------------------------------------------------ manifest

@dataclass
class AugmentationManifest:
    fingerprint: str
    rig_count: int
    augmentations_per_image: int
    records: list

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "rig_count": self.rig_count,
            "augmentations_per_image": self.augmentations_per_image,
            "records": self.records,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True,
                                         indent=2) + "\n")

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptManifest(f"{path}: {exc}") from None
        try:
            manifest = cls(fingerprint=data["fingerprint"],
                           rig_count=data["rig_count"],
                           augmentations_per_image=data["augmentations_per_image"],
                           records=data["records"])
        except KeyError as exc:
            raise CorruptManifest(f"{path}: missing key {exc}") from None
        expected = manifest.rig_count * manifest.augmentations_per_image
        if len(manifest.records) != expected:
            raise CorruptManifest(
                f"{path}: {len(manifest.records)} records, expected {expected}")
        return manifest


# -------------------------------------------------------- one composite

_catalog_cache = {}


def _get_catalog(path) -> Catalog:
    key = str(path)
    if key not in _catalog_cache:
        _catalog_cache[key] = load_catalog(path)
    return _catalog_cache[key]


def _draw_count(config: AugmentationConfig, rng: np.random.Generator) -> int:
    if config.max_cars == 0:
        return 0
    if config.cars_mode == "exact":
        return config.max_cars
    u = rng.random()
    return 1 + min(int(u * config.max_cars), config.max_cars - 1)


def _sample_poses(config, rig, count, rng):
    strategy = config.placement_strategy
    if strategy == "manual":
        traj = TrajectorySet.from_json(
            json.loads(Path(rig.trajectory_path).read_text()),
            source=str(rig.trajectory_path))
        return sample_manual(traj, rig.plane, count, rng)
    if strategy == "road_mask":
        mask = read_raster(rig.road_mask_path)
        if mask.ndim == 3:
            mask = mask[:, :, 0]
        return sample_road_mask(mask, rig.intrinsics, rig.plane, count, rng)
    if strategy == "ground_plane":
        return sample_ground_plane(DEFAULT_REGION, rig.plane, count, rng)
    return sample_unconstrained(UNCONSTRAINED_MIN, UNCONSTRAINED_MAX, count, rng)


def _pose_record(pose) -> dict:
    rec = {"kind": pose.kind, "position": pose.position.tolist()}
    if pose.kind == "on_plane":
        rec["yaw"] = pose.yaw
    else:
        rec["rotation"] = pose.rotation.tolist()
    return rec


def _composite_job(config: AugmentationConfig, rig: CameraRig,
                   rig_index: int, aug_index: int) -> dict:
    try:
        return _composite_job_inner(config, rig, rig_index, aug_index)
    except AugmentorError as exc:
        raise AugmentorError(
            f"rig {rig_index} ({rig.rig_id}), augmentation {aug_index}: "
            f"{type(exc).__name__}: {exc}") from exc


def _composite_job_inner(config, rig, rig_index, aug_index) -> dict:
    catalog = _get_catalog(config.catalog)
    comp_seed = hash_combine(config.seed, rig_index, aug_index)
    gens = [np.random.default_rng(hash_combine(comp_seed, purpose))
            for purpose in range(5)]

    count = min(_draw_count(config, gens[GEN_COUNT]), DEFAULT_REGION.max_count)
    poses = _sample_poses(config, rig, count, gens[GEN_POSES])
    draws = [catalog_sample(catalog, gens[GEN_MODELS]) for _ in range(count)]
    keep = accepted_indices(poses, [model for model, _ in draws])
    instances = [
        SceneInstance(model=draws[i][0], material=draws[i][1], pose=poses[i],
                      instance_id=slot + 1)
        for slot, i in enumerate(keep)
    ]

    env = resolve_env(config.env_mode, rig.env_map_path,
                      list(config.env_pool), gens[GEN_ENV])
    settings = dataclasses.replace(config.render, rng_seed=comp_seed)
    layer = render_layer(instances, rig, env, settings)
    styled = apply_chain(layer, config.postfx)

    real_image = read_raster(rig.image_path)
    if real_image.ndim == 2:
        real_image = np.repeat(real_image[:, :, None], 3, axis=2)
    if real_image.shape[:2] != (rig.intrinsics.height, rig.intrinsics.width):
        raise DimensionMismatch(
            f"{rig.image_path} is {real_image.shape[:2]}, rig declares "
            f"({rig.intrinsics.height}, {rig.intrinsics.width})")
    background = resolve_background(config.background_mode, real_image,
                                    list(config.background_pool),
                                    gens[GEN_BACKGROUND])
    image = composite(background, styled)

    # ground truth comes from the raw render: postfx is appearance-only
    synthetic = derive_annotations(layer, instances)
    real_annotations = _load_real_annotations(rig.real_annotation_path)
    updated_real = update_real_masks(real_annotations, layer)

    stem = f"rig{rig_index:04d}_aug{aug_index:03d}"
    out = Path(config.output_dir)
    image_rel = f"images/{stem}.png"
    annotation_rel = f"annotations/{stem}.json"
    write_png(out / image_rel, image)
    sidecar = {
        "image": image_rel,
        "instances": [ann.to_dict() for ann in synthetic + updated_real],
    }
    (out / annotation_rel).write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n")

    return {
        "rig_index": rig_index,
        "rig_id": rig.rig_id,
        "augmentation_index": aug_index,
        "seed": comp_seed,
        "car_count": len(instances),
        "placements": [
            {
                "model": inst.model.name,
                "category": inst.model.category,
                "color": inst.material.base_color.tolist(),
                "pose": _pose_record(inst.pose),
            }
            for inst in instances
        ],
        "image": image_rel,
        "annotation": annotation_rel,
        "real_annotations": (None if rig.real_annotation_path is None
                             else str(rig.real_annotation_path)),
    }


# -------------------------------------------------------------- dataset

def _resolve_jobs(jobs) -> int:
    if jobs is None:
        jobs = int(os.environ.get("AUGMENTOR_THREADS", "1"))
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _check_strategy_inputs(config: AugmentationConfig, rigs):
    needed = {"manual": "trajectory_path", "road_mask": "road_mask_path"}
    attr = needed.get(config.placement_strategy)
    if attr is None:
        return
    for i, rig in enumerate(rigs):
        if getattr(rig, attr) is None:
            raise MissingStrategyInput(
                f"rig {i} ({rig.rig_id}) lacks the "
                f"{attr.replace('_path', '')} input required by "
                f"placement_strategy={config.placement_strategy!r}")


def augment_dataset(config: AugmentationConfig, rigs: Sequence[CameraRig],
                    jobs: Optional[int] = None) -> AugmentationManifest:
    """Render augmentations_per_image composites per rig and write the
    dataset (images, annotation sidecars, manifest) under output_dir."""
    if config.catalog is None:
        raise ValueError("config.catalog is required to augment")
    _check_strategy_inputs(config, rigs)
    jobs = _resolve_jobs(jobs)

    out = Path(config.output_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "annotations").mkdir(parents=True, exist_ok=True)

    tasks = [(rig_index, j) for rig_index in range(len(rigs))
             for j in range(config.augmentations_per_image)]
    if jobs == 1 or len(tasks) <= 1:
        records = [_composite_job(config, rigs[r], r, j) for r, j in tasks]
    else:
        # spawn, not fork: forking after the threaded render kernels have
        # run deadlocks or aborts inside the OpenMP runtime
        context = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=context) as pool:
            records = list(pool.map(
                _composite_job,
                [config] * len(tasks),
                [rigs[r] for r, _ in tasks],
                [r for r, _ in tasks],
                [j for _, j in tasks],
            ))
    records.sort(key=lambda rec: (rec["rig_index"], rec["augmentation_index"]))
    manifest = AugmentationManifest(
        fingerprint=config.fingerprint(),
        rig_count=len(rigs),
        augmentations_per_image=config.augmentations_per_image,
        records=records,
    )
    manifest.save(out / "manifest.json")
    return manifest


# ---------------------------------------------------------------- stats

def _rle_area(rle: dict) -> int:
    return int(sum(rle["counts"][1::2]))


@dataclass
class DatasetStats:
    total_real_instances: int
    total_synthetic_instances: int
    covered_real_pixels: int
    cars_per_composite: dict  # visible synthetic cars -> composite count
    visible_fraction_histogram: list  # 10 bins over [0, 1]

    def to_dict(self) -> dict:
        return {
            "total_real_instances": self.total_real_instances,
            "total_synthetic_instances": self.total_synthetic_instances,
            "covered_real_pixels": self.covered_real_pixels,
            "cars_per_composite": {str(k): v for k, v in
                                   sorted(self.cars_per_composite.items())},
            "visible_fraction_histogram": self.visible_fraction_histogram,
        }

    def table(self) -> str:
        lines = [
            f"real instances       {self.total_real_instances}",
            f"synthetic instances  {self.total_synthetic_instances}",
            f"covered real pixels  {self.covered_real_pixels}",
            "cars per composite:",
        ]
        for k in sorted(self.cars_per_composite):
            lines.append(f"  {k:3d} cars  {self.cars_per_composite[k]}")
        lines.append("visible fraction histogram:")
        for i, n in enumerate(self.visible_fraction_histogram):
            lines.append(f"  [{i / 10:.1f}, {(i + 1) / 10:.1f})  {n}")
        return "\n".join(lines)


def compute_stats(manifest_path) -> DatasetStats:
    """Aggregate the dataset the manifest describes; every referenced
    file must exist and parse."""
    manifest_path = Path(manifest_path)
    manifest = AugmentationManifest.load(manifest_path)
    root = manifest_path.parent

    total_real = 0
    total_synth = 0
    covered = 0
    cars_hist = {}
    vis_hist = [0] * 10
    for rec in manifest.records:
        try:
            ann_path = root / rec["annotation"]
            image_path = root / rec["image"]
        except (TypeError, KeyError) as exc:
            raise CorruptManifest(f"malformed record: {exc}") from None
        if not image_path.exists():
            raise CorruptManifest(f"missing image file {image_path}")
        try:
            sidecar = json.loads(ann_path.read_text())
            instances = sidecar["instances"]
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise CorruptManifest(f"bad annotation file {ann_path}: {exc}") from None

        synth = [inst for inst in instances if inst["origin"] == "synthetic"]
        real = [inst for inst in instances if inst["origin"] == "real"]
        total_synth += len(synth)
        total_real += len(real)
        cars_hist[len(synth)] = cars_hist.get(len(synth), 0) + 1
        for inst in synth:
            bucket = min(9, int(inst["visible_fraction"] * 10))
            vis_hist[bucket] += 1

        if rec.get("real_annotations"):
            originals = json.loads(Path(rec["real_annotations"]).read_text())
            remaining = {inst["id"]: _rle_area(inst["rle"]) for inst in real}
            for orig in originals["instances"]:
                covered += _rle_area(orig["rle"]) - remaining.get(orig["id"], 0)

    return DatasetStats(
        total_real_instances=total_real,
        total_synthetic_instances=total_synth,
        covered_real_pixels=covered,
        cars_per_composite=cars_hist,
        visible_fraction_histogram=vis_hist,
    )


# ------------------------------------------------------------- birdseye

def export_birdseye(rig: CameraRig, meters_per_pixel: float,
                    extent: GroundExtent, out_dir) -> tuple:
    """Warp the rig image to a top-down metric raster and write it with
    the metadata JSON the trajectory annotator consumes."""
    image = read_raster(rig.image_path)
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    h = ground_homography(rig.intrinsics, rig.plane)
    warped = warp_birdseye(image, h, meters_per_pixel, extent)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    image_path = out / f"{rig.rig_id}_birdseye.png"
    meta_path = out / f"{rig.rig_id}_birdseye.json"
    write_png(image_path, warped)
    metadata = {
        "rig_id": rig.rig_id,
        "image": image_path.name,
        "source_image": str(rig.image_path),
        "meters_per_pixel": meters_per_pixel,
        "extent": extent.to_dict(),
        "height": int(warped.shape[0]),
        "width": int(warped.shape[1]),
    }
    meta_path.write_text(json.dumps(metadata, sort_keys=True, indent=2) + "\n")
    return image_path, meta_path


# ----------------------------------------------------------- debug dump

def render_debug(config: AugmentationConfig, rig: CameraRig, rig_index: int,
                 out_dir) -> Path:
    """Render the first composite of a rig and dump every layer buffer."""
    comp_seed = hash_combine(config.seed, rig_index, 0)
    gens = [np.random.default_rng(hash_combine(comp_seed, purpose))
            for purpose in range(5)]
    catalog = _get_catalog(config.catalog)
    count = min(_draw_count(config, gens[GEN_COUNT]), DEFAULT_REGION.max_count)
    poses = _sample_poses(config, rig, count, gens[GEN_POSES])
    draws = [catalog_sample(catalog, gens[GEN_MODELS]) for _ in range(count)]
    keep = accepted_indices(poses, [model for model, _ in draws])
    instances = [SceneInstance(model=draws[i][0], material=draws[i][1],
                               pose=poses[i], instance_id=slot + 1)
                 for slot, i in enumerate(keep)]
    env = resolve_env(config.env_mode, rig.env_map_path,
                      list(config.env_pool), gens[GEN_ENV])
    settings = dataclasses.replace(config.render, rng_seed=comp_seed)
    layer = render_layer(instances, rig, env, settings)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "color.npy", layer.color)
    np.save(out / "depth.npy", layer.depth)
    np.save(out / "instance_ids.npy", layer.instance_ids)
    np.save(out / "shadow_alpha.npy", layer.shadow_alpha)
    if layer.isolated_alpha is not None:
        np.save(out / "isolated_alpha.npy", layer.isolated_alpha)
    write_png(out / "color.png", linear_to_bytes(layer.color[:, :, :3]))
    write_png(out / "alpha.png",
              np.rint(layer.alpha * 255.0).astype(np.uint8))
    write_png(out / "shadow.png",
              np.rint(layer.shadow_alpha * 255.0).astype(np.uint8))
    return out
