"""Patch handling and the global orientation descriptor.

The descriptor is a single orientation histogram over a whole patch: one
cell, ``b`` bins, magnitude-weighted votes split linearly between the two
adjacent bins.  Its useful property is circularity - rotating the patch
content (approximately) rolls the histogram, so frame-to-frame rotation
shows up as a circular shift that a 1D correlation filter can read off.

Rotation conventions are pinned jointly for ``rotate_patch`` and
``rotate_displacement``: content at offset (dy, dx) from the patch center
moves to

    (dy * cos(theta) + dx * sin(theta), dx * cos(theta) - dy * sin(theta))

and gradient orientations measured as atan2(gy, gx) grow by +theta under
the same rotation, so the descriptor of a patch rotated by +theta is the
original descriptor rolled by +theta/bin_width bins.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Patch",
    "OrientationDescriptor",
    "extract_patch",
    "to_grayscale",
    "global_hog",
    "rotate_patch",
    "rotate_displacement",
]

# 5-tap binomial kernel for optional circular descriptor smoothing.
_SMOOTH_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0

_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Patch:
    """Real-valued intensity grid cut from a frame.

    ``frame_index`` and ``center`` record where the patch came from; they
    are diagnostics only and never affect computation.
    """

    pixels: np.ndarray
    frame_index: int | None = None
    center: tuple[float, float] | None = None

    @property
    def shape(self):
        return self.pixels.shape


@dataclass(frozen=True)
class OrientationDescriptor:
    """L2-normalized circular histogram of gradient orientations.

    Bin k covers the orientation interval [k * bin_width, (k+1) * bin_width)
    degrees.  A constant patch has no gradients and yields the all-zero
    vector with ``degenerate`` set; rotation estimates from such a
    descriptor default to zero.
    """

    bins: np.ndarray
    mode: str = "unsigned180"
    degenerate: bool = field(default=False)

    def __post_init__(self):
        if self.mode not in ("unsigned180", "signed360"):
            raise ValueError(f"unknown orientation mode {self.mode!r}")

    @property
    def size(self):
        return self.bins.size

    @property
    def span(self):
        """Angular span covered by the histogram, in degrees."""
        return 180.0 if self.mode == "unsigned180" else 360.0

    @property
    def bin_width(self):
        return self.span / self.bins.size


def to_grayscale(frame):
    """Luminance conversion 0.299 R + 0.587 G + 0.114 B; 1-channel passes through."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim == 2:
        return frame
    if frame.ndim == 3 and frame.shape[2] == 1:
        return frame[:, :, 0]
    if frame.ndim == 3 and frame.shape[2] == 3:
        return frame @ _GRAY_WEIGHTS
    raise ValueError(f"expected 1 or 3 channels, got shape {frame.shape}")


def extract_patch(frame, center, size, frame_index=None):
    """Cut an m x n patch centered at ``center`` (row, col) with edge replication.

    Out-of-frame samples take the nearest in-frame pixel value, so centers
    near or beyond the border are fine.
    """
    frame = np.asarray(frame, dtype=float)
    if frame.ndim == 3:
        frame = to_grayscale(frame)
    if frame.size == 0:
        raise ValueError("empty frame")
    m, n = int(size[0]), int(size[1])
    if m <= 0 or n <= 0:
        raise ValueError("patch size must be positive")
    rows = np.floor(center[0]).astype(int) - m // 2 + np.arange(m)
    cols = np.floor(center[1]).astype(int) - n // 2 + np.arange(n)
    rows = np.clip(rows, 0, frame.shape[0] - 1)
    cols = np.clip(cols, 0, frame.shape[1] - 1)
    pixels = frame[np.ix_(rows, cols)]
    return Patch(pixels=pixels, frame_index=frame_index, center=(float(center[0]), float(center[1])))


def _pixels_of(patch):
    return patch.pixels if isinstance(patch, Patch) else np.asarray(patch, dtype=float)


def _centered_gradients(pixels):
    # [-1, 0, 1] differences with edge-replicated borders.
    padded = np.pad(pixels, 1, mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    return gy, gx


def _smooth_circular(bins):
    out = np.zeros_like(bins)
    for tap, weight in zip(range(-2, 3), _SMOOTH_KERNEL):
        out += weight * np.roll(bins, tap)
    return out


def global_hog(patch, bins=90, mode="unsigned180", smoothing=True):
    """Whole-patch orientation histogram (one cell, ``bins`` bins).

    Orientation per pixel is atan2(gy, gx), folded to [0, 180) in
    unsigned180 mode; each magnitude vote splits linearly between the two
    adjacent bins, circularly.  Windowing is the caller's job - apply the
    envelope to the pixels before calling.  ``smoothing`` applies a 5-tap
    binomial blur around the circle before normalization; switch it off
    when a test needs exact vote placement.
    """
    if bins < 8:
        raise ValueError("need at least 8 orientation bins")
    pixels = _pixels_of(patch)
    span = 180.0 if mode == "unsigned180" else 360.0
    if mode not in ("unsigned180", "signed360"):
        raise ValueError(f"unknown orientation mode {mode!r}")

    gy, gx = _centered_gradients(pixels)
    magnitude = np.hypot(gy, gx).ravel()
    if not np.any(magnitude > 0):
        return OrientationDescriptor(bins=np.zeros(bins), mode=mode, degenerate=True)

    angle = np.degrees(np.arctan2(gy, gx)).ravel() % span
    position = angle / (span / bins)
    low = np.floor(position).astype(int) % bins
    frac = position - np.floor(position)
    votes = np.bincount(low, weights=magnitude * (1.0 - frac), minlength=bins)
    votes += np.bincount((low + 1) % bins, weights=magnitude * frac, minlength=bins)

    if smoothing:
        votes = _smooth_circular(votes)
    norm = np.linalg.norm(votes)
    if norm == 0:
        return OrientationDescriptor(bins=np.zeros(bins), mode=mode, degenerate=True)
    return OrientationDescriptor(bins=votes / norm, mode=mode, degenerate=False)


def _rotation_matrix(theta_deg):
    t = np.radians(theta_deg)
    c, s = np.cos(t), np.sin(t)
    # Acts on (dy, dx) offsets; see module docstring for the convention.
    return np.array([[c, s], [-s, c]])


def rotate_patch(patch, theta):
    """Rotate patch content by ``theta`` degrees about the geometric center.

    Bilinear interpolation; samples that fall outside the source take the
    nearest edge value so no artificial dark corners are created.  Output
    has the same shape.  theta = 0 is an exact identity.
    """
    if abs(theta) > 180:
        raise ValueError("|theta| must be <= 180 degrees")
    pixels = _pixels_of(patch)
    if theta == 0:
        rotated = pixels.copy()
    else:
        m, n = pixels.shape
        cy, cx = (m - 1) / 2.0, (n - 1) / 2.0
        vy, vx = np.meshgrid(np.arange(m) - cy, np.arange(n) - cx, indexing="ij")
        inv = _rotation_matrix(-theta)
        sy = inv[0, 0] * vy + inv[0, 1] * vx + cy
        sx = inv[1, 0] * vy + inv[1, 1] * vx + cx
        sy = np.clip(sy, 0, m - 1)
        sx = np.clip(sx, 0, n - 1)
        y0 = np.floor(sy).astype(int)
        x0 = np.floor(sx).astype(int)
        y1 = np.minimum(y0 + 1, m - 1)
        x1 = np.minimum(x0 + 1, n - 1)
        wy = sy - y0
        wx = sx - x0
        rotated = (
            pixels[y0, x0] * (1 - wy) * (1 - wx)
            + pixels[y0, x1] * (1 - wy) * wx
            + pixels[y1, x0] * wy * (1 - wx)
            + pixels[y1, x1] * wy * wx
        )
    if isinstance(patch, Patch):
        return Patch(pixels=rotated, frame_index=patch.frame_index, center=patch.center)
    return rotated


def rotate_displacement(d, theta):
    """Rotate a (dy, dx) displacement by ``theta`` degrees.

    Uses the same convention as ``rotate_patch``: the returned vector is
    where content at offset ``d`` lands after the patch rotates by theta.
    """
    rot = _rotation_matrix(theta)
    dy, dx = float(d[0]), float(d[1])
    return (rot[0, 0] * dy + rot[0, 1] * dx, rot[1, 0] * dy + rot[1, 1] * dx)
