"""2D post-processing applied to rendered car layers before compositing.

Three stages run in a fixed order: chromatic aberration (radial
red/blue rescale), depth blur (per-pixel disc scatter driven by the
depth buffer), and tone adjustment (color curve plus gamma on
unpremultiplied values). Every stage with neutral parameters is a
bit-exact identity, so ablations that disable the chain reproduce the
raw render byte for byte.

Depth blur is implemented as a scatter: each source pixel distributes
its premultiplied RGBA uniformly over a disc whose radius follows the
circle-of-confusion formula strength * |1/z - 1/focus|. Scattering
(rather than gathering) keeps total energy conserved and lets in-focus
background pixels stay untouched next to blurred foreground ones.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NegativeStrength
from .renderer import RenderLayer

# gentle S-curve: slight contrast boost, fixed endpoints
DEFAULT_CURVE = ((0.0, 0.0), (0.25, 0.22), (0.75, 0.78), (1.0, 1.0))
IDENTITY_CURVE = ((0.0, 0.0), (1.0, 1.0))

MAX_BLUR_RADIUS = 16.0


def _validate_curve(curve):
    knots = np.asarray(curve, dtype=float)
    if knots.ndim != 2 or knots.shape[1] != 2 or knots.shape[0] < 2:
        raise ValueError("color_curve must be a list of at least two (x, y) knots")
    if np.any(np.diff(knots[:, 0]) <= 0) or np.any(np.diff(knots[:, 1]) <= 0):
        raise ValueError("color_curve knots must be strictly increasing in x and y")
    if knots.min() < 0.0 or knots.max() > 1.0:
        raise ValueError("color_curve knots must lie in [0, 1]")
    return knots


@dataclass
class PostFxParams:
    chroma_shift: float = 1.0  # pixels of radial red/blue separation
    dof_focus: float = 12.0  # meters
    dof_strength: float = 15.0  # blur pixels per unit |1/z - 1/focus|
    color_curve: tuple = DEFAULT_CURVE
    gamma: float = 1.05
    enabled: bool = True

    def __post_init__(self):
        if self.dof_strength < 0:
            raise NegativeStrength("dof_strength must be >= 0")
        if self.dof_focus <= 0:
            raise ValueError("dof_focus must be positive meters")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        self.color_curve = tuple(
            (float(x), float(y)) for x, y in _validate_curve(self.color_curve)
        )

    @classmethod
    def neutral(cls):
        """Parameters under which the whole chain is a bit-exact no-op."""
        return cls(chroma_shift=0.0, dof_strength=0.0,
                   color_curve=IDENTITY_CURVE, gamma=1.0)


def _clone(layer, color=None):
    return RenderLayer(
        color=layer.color.copy() if color is None else color,
        depth=layer.depth.copy(),
        instance_ids=layer.instance_ids.copy(),
        shadow_alpha=layer.shadow_alpha.copy(),
        isolated_alpha=None if layer.isolated_alpha is None
        else layer.isolated_alpha.copy(),
        instance_order=list(layer.instance_order),
    )


def _bilinear(img, sx, sy):
    h, w = img.shape
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def chromatic_aberration(layer: RenderLayer, shift: float) -> RenderLayer:
    """Magnify red by (1 + shift/R) and blue by (1 - shift/R) about the
    image center, where R is the image half-diagonal in pixels. Green,
    alpha, depth and ids stay untouched."""
    if shift == 0.0:
        return _clone(layer)
    h, w = layer.shape
    half_diag = 0.5 * math.hypot(w, h)
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float),
                         indexing="ij")
    color = layer.color.copy()
    for channel, scale in ((0, 1.0 + shift / half_diag),
                           (2, 1.0 - shift / half_diag)):
        sx = cx + (xs - cx) / scale
        sy = cy + (ys - cy) / scale
        color[:, :, channel] = _bilinear(layer.color[:, :, channel], sx, sy)
    return _clone(layer, color)


def depth_blur(layer: RenderLayer, focus: float, strength: float) -> RenderLayer:
    """Disc blur with per-pixel radius strength * |1/z - 1/focus|, clamped
    to [0, 16] px. Pixels without geometry (infinite depth) keep radius 0.
    Color and alpha are blurred jointly in premultiplied form."""
    if strength < 0:
        raise NegativeStrength("blur strength must be >= 0")
    if focus <= 0:
        raise ValueError("focus distance must be positive meters")
    if strength == 0.0:
        return _clone(layer)
    inv_focus = 1.0 / focus
    inv_depth = np.where(np.isfinite(layer.depth), 1.0 / layer.depth, inv_focus)
    radii = np.minimum(strength * np.abs(inv_depth - inv_focus), MAX_BLUR_RADIUS)
    out = np.zeros_like(layer.color)
    kernels.scatter_blur(layer.color, radii, out)
    return _clone(layer, out)


def tone_adjust(layer: RenderLayer, curve, gamma: float) -> RenderLayer:
    """Map each unpremultiplied channel through the piecewise-linear curve,
    raise to 1/gamma, and re-premultiply. Alpha is untouched."""
    knots = _validate_curve(curve)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if gamma == 1.0 and np.array_equal(knots, [[0.0, 0.0], [1.0, 1.0]]):
        return _clone(layer)
    alpha = layer.color[:, :, 3]
    covered = alpha > 0
    safe_alpha = np.where(covered, alpha, 1.0)
    color = layer.color.copy()
    inv_gamma = 1.0 / gamma
    for channel in range(3):
        un = layer.color[:, :, channel] / safe_alpha
        mapped = np.interp(un, knots[:, 0], knots[:, 1]) ** inv_gamma
        color[:, :, channel] = np.where(covered, mapped * alpha, 0.0)
    return _clone(layer, color)


def apply_chain(layer: RenderLayer, params: PostFxParams) -> RenderLayer:
    """Run aberration, then depth blur, then tone adjustment."""
    if not params.enabled:
        return _clone(layer)
    out = chromatic_aberration(layer, params.chroma_shift)
    out = depth_blur(out, params.dof_focus, params.dof_strength)
    return tone_adjust(out, params.color_curve, params.gamma)
