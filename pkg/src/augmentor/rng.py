"""Counter-based deterministic random streams.

Rendering needs a random stream per (seed, image, pixel x, pixel y) that
does not depend on evaluation order or thread scheduling.  We use the
splitmix64 finalizer as a keyed counter generator: the key fields are
absorbed one by one, then each draw advances a 64-bit counter and
finalizes it.  The numba kernels re-implement the identical arithmetic
(see kernels.py); test_renderer cross-checks the two.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

# stream purposes ("substreams" of one pixel)
PURPOSE_JITTER = 0
PURPOSE_SHADE = 1
PURPOSE_SHADOW = 2

INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_state(seed: int, image_index: int, x: int, y: int, purpose: int = 0) -> int:
    """Initial counter for the stream keyed by (seed, image, x, y, purpose)."""
    h = mix64(seed & MASK64)
    h = mix64(h ^ (image_index & MASK64))
    h = mix64(h ^ (x & MASK64))
    h = mix64(h ^ (y & MASK64))
    h = mix64(h ^ (purpose & MASK64))
    return h


def hash_combine(*values: int) -> int:
    """Order-sensitive 64-bit hash of integer fields (seed chaining)."""
    h = 0
    for v in values:
        h = mix64(h ^ (v & MASK64))
    return h


class PixelStream:
    """Deterministic per-pixel draw sequence.

    Successive draws step the counter by the golden-ratio increment and
    finalize; identical to numba's in-kernel stream bit for bit.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int, image_index: int, x: int, y: int, purpose: int = 0):
        self.state = stream_state(seed, image_index, x, y, purpose)

    def next_uint64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def next_float(self) -> float:
        """Uniform draw in [0, 1) with 53 bits of the next output."""
        return (self.next_uint64() >> 11) * INV_2_53


def seeded_pixel_rng(seed: int, image_index: int, x: int, y: int, purpose: int = 0) -> PixelStream:
    """Stream unique to (seed, image, x, y[, purpose]), independent of scheduling."""
    return PixelStream(seed, image_index, x, y, purpose)
