"""Augment calibrated street images with rendered 3D cars.

The pieces compose in pipeline order: pose sampling (placement), ray
traced shading under an environment map (renderer), lens-style cleanup
(postfx), blending over the photograph (compositor) and pixel-accurate
instance annotations derived from the same render. `augment_dataset`
drives the whole loop from a config; the `augmentor` CLI wraps it.
"""

from .assets import CarModel, Material, load_catalog
from .compositor import (
    CompositeResult,
    InstanceAnnotation,
    composite,
    derive_annotations,
    resolve_background,
    update_real_masks,
)
from .envmap import EnvironmentMap, load_envmap, resolve_env
from .errors import AugmentorError
from .geometry import CameraIntrinsics, GroundExtent, GroundPlane
from .pipeline import (
    AugmentationConfig,
    AugmentationManifest,
    CameraRig,
    DatasetStats,
    augment_dataset,
    compute_stats,
    export_birdseye,
    load_config,
    load_rigs,
)
from .placement import PlacementRegion, PoseSample, TrajectorySet
from .postfx import PostFxParams, apply_chain
from .renderer import RenderLayer, RenderSettings, SceneInstance, render_layer

__all__ = [
    "AugmentationConfig",
    "AugmentationManifest",
    "AugmentorError",
    "CameraIntrinsics",
    "CameraRig",
    "CarModel",
    "CompositeResult",
    "DatasetStats",
    "EnvironmentMap",
    "GroundExtent",
    "GroundPlane",
    "InstanceAnnotation",
    "Material",
    "PlacementRegion",
    "PoseSample",
    "PostFxParams",
    "RenderLayer",
    "RenderSettings",
    "SceneInstance",
    "TrajectorySet",
    "apply_chain",
    "augment_dataset",
    "composite",
    "compute_stats",
    "derive_annotations",
    "export_birdseye",
    "load_catalog",
    "load_config",
    "load_envmap",
    "load_rigs",
    "render_layer",
    "resolve_background",
    "resolve_env",
    "update_real_masks",
]

__version__ = "0.1.0"
