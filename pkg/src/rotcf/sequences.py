"""Sequence ingestion and synthetic sequence generation.

Disk sequences follow the OTB layout: a directory with an ``img/``
subdirectory of zero-padded numbered frames and a ``groundtruth_rect.txt``
with one ``x,y,w,h`` line per frame (comma, tab, or whitespace
separated).  OTB boxes are 1-indexed top-left; they are converted to the
package's 0-indexed convention on load and back on save.

Synthetic sequences render an analytically textured target over a
static background with exact ground truth, so trackers and metrics can
be exercised without any external dataset.  All randomness flows from an
explicit seed.
"""

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "SequenceSpec",
    "load_sequence",
    "save_sequence",
    "synthetic_sequence",
    "synthetic_textures",
]

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
_GT_SPLIT = re.compile(r"[,\t ]+")


@dataclass(frozen=True)
class SequenceSpec:
    """An ordered frame source plus optional per-frame ground-truth boxes.

    Frames are either file paths (loaded lazily) or in-memory arrays;
    exactly one of the two is set.  Boxes are (x, y, w, h) floats in
    0-indexed pixel coordinates.
    """

    name: str
    frame_paths: tuple = None
    frames: tuple = None
    ground_truth: tuple = None

    def __post_init__(self):
        if (self.frame_paths is None) == (self.frames is None):
            raise ValueError("exactly one of frame_paths/frames must be set")
        if len(self) < 2:
            raise ValueError("a sequence needs at least 2 frames")
        if self.ground_truth is not None:
            if len(self.ground_truth) != len(self):
                raise ValueError("ground truth length must match frame count")
            if any(b[2] <= 0 or b[3] <= 0 for b in self.ground_truth):
                raise ValueError("ground-truth boxes must have positive dims")

    def __len__(self):
        source = self.frame_paths if self.frames is None else self.frames
        return len(source)

    def frame(self, index):
        """Frame ``index`` as a float array in [0, 1] (2D gray or HxWx3)."""
        if self.frames is not None:
            return self.frames[index]
        return _read_image(self.frame_paths[index])


def _read_image(path):
    with Image.open(path) as img:
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        data = np.asarray(img, dtype=float) / 255.0
    return data


def _numeric_stem(path):
    if not path.stem.isdigit():
        raise ValueError(f"frame file {path.name} has a non-numeric stem; cannot order frames")
    return int(path.stem)


def _parse_ground_truth(path):
    boxes = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = _GT_SPLIT.split(line)
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 values, got {len(parts)}")
        try:
            x, y, w, h = (float(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: unparseable ground-truth line {line!r}") from exc
        # OTB boxes are 1-indexed top-left.
        boxes.append((x - 1.0, y - 1.0, w, h))
    return boxes


def load_sequence(path):
    """Load an OTB-layout sequence directory."""
    root = Path(path)
    img_dir = root / "img"
    if not img_dir.is_dir():
        raise ValueError(f"missing images: {img_dir} is not a directory")
    frame_paths = sorted(
        (p for p in img_dir.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES),
        key=_numeric_stem,
    )
    if not frame_paths:
        raise ValueError(f"missing images: no PNG/JPEG frames under {img_dir}")

    ground_truth = None
    gt_path = root / "groundtruth_rect.txt"
    if gt_path.is_file():
        ground_truth = _parse_ground_truth(gt_path)
        if len(ground_truth) != len(frame_paths):
            warnings.warn(
                f"{root.name}: {len(frame_paths)} frames but {len(ground_truth)} "
                "ground-truth boxes; truncating to the shorter",
                stacklevel=2,
            )
            keep = min(len(ground_truth), len(frame_paths))
            frame_paths = frame_paths[:keep]
            ground_truth = ground_truth[:keep]

    return SequenceSpec(
        name=root.name,
        frame_paths=tuple(frame_paths),
        ground_truth=tuple(ground_truth) if ground_truth is not None else None,
    )


def save_sequence(spec, out_dir):
    """Materialize a sequence to disk in the OTB layout; returns the directory."""
    root = Path(out_dir)
    img_dir = root / "img"
    img_dir.mkdir(parents=True, exist_ok=True)
    for i in range(len(spec)):
        frame = np.clip(spec.frame(i), 0.0, 1.0)
        data = np.round(frame * 255.0).astype(np.uint8)
        Image.fromarray(data).save(img_dir / f"{i + 1:04d}.png")
    if spec.ground_truth is not None:
        lines = [
            f"{b[0] + 1.0:.2f},{b[1] + 1.0:.2f},{b[2]:.2f},{b[3]:.2f}"
            for b in spec.ground_truth
        ]
        (root / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")
    return root


def _smooth_noise(shape, rng, cutoff=0.06):
    # Low-pass filtered white noise, rescaled to [0, 1].
    noise = rng.normal(size=shape)
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    envelope = np.exp(-(fy**2 + fx**2) / (2 * cutoff**2))
    smooth = np.fft.ifft2(np.fft.fft2(noise) * envelope).real
    lo, hi = smooth.min(), smooth.max()
    return (smooth - lo) / (hi - lo) if hi > lo else np.full(shape, 0.5)


def _grating(shape, angle_deg, freq, phase=0.0, amplitude=0.5, mean=0.5):
    cy, cx = (shape[0] - 1) / 2.0, (shape[1] - 1) / 2.0
    vy, vx = np.meshgrid(np.arange(shape[0]) - cy, np.arange(shape[1]) - cx, indexing="ij")
    t = np.radians(angle_deg)
    u = vy * np.sin(t) + vx * np.cos(t)
    return mean + amplitude * np.cos(2 * np.pi * freq * u + phase)


def _polygon_mask(shape, vertices):
    # Convex polygon rasterization by half-plane intersection.
    vy, vx = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    mask = np.ones(shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        ay, ax = vertices[i]
        by, bx = vertices[(i + 1) % n]
        cross = (bx - ax) * (vy - ay) - (by - ay) * (vx - ax)
        mask &= cross >= 0
    return mask


def _convex_polygon(rng, shape, corners):
    cy = rng.uniform(0.3, 0.7) * shape[0]
    cx = rng.uniform(0.3, 0.7) * shape[1]
    radius = rng.uniform(0.15, 0.4) * min(shape)
    angles = np.sort(rng.uniform(0, 2 * np.pi, corners))
    return [(cy + radius * np.sin(a), cx + radius * np.cos(a)) for a in angles]


def synthetic_textures(count, size=64, seed=0):
    """Seeded texture patches for the rotation benchmark.

    Cycles through oriented gratings, smoothed noise fields, and polygon
    composites so the benchmark sees easy, medium, and structured
    content.  Values lie in [0, 1].
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    shape = (size, size)
    images = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            img = _grating(
                shape,
                angle_deg=rng.uniform(0, 180),
                freq=rng.uniform(0.05, 0.1),
                phase=rng.uniform(0, 2 * np.pi),
                amplitude=0.4,
            )
            img += 0.1 * (_smooth_noise(shape, rng, cutoff=0.1) - 0.5)
        elif kind == 1:
            img = _smooth_noise(shape, rng, cutoff=rng.uniform(0.04, 0.09))
        else:
            img = np.full(shape, 0.5)
            for _ in range(int(rng.integers(3, 6))):
                poly = _convex_polygon(rng, shape, int(rng.integers(3, 6)))
                img[_polygon_mask(shape, poly)] = rng.uniform(0.05, 0.95)
        images.append(np.clip(img, 0.0, 1.0))
    return images


def _disc_mask(shape, center, radius):
    vy, vx = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    dist = np.hypot(vy - center[0], vx - center[1])
    # Soft 1.5 px anti-aliased edge.
    return np.clip((radius - dist) / 1.5 + 0.5, 0.0, 1.0)


def _render_frame(background, center, radius, orientation_deg, freq, texture_angle=0.0):
    shape = background.shape
    vy, vx = np.meshgrid(np.arange(shape[0]) - center[0], np.arange(shape[1]) - center[1], indexing="ij")
    # Content rotated by +orientation: sample the texture at R(-orientation) offsets.
    t = np.radians(-orientation_deg)
    uy = np.cos(t) * vy + np.sin(t) * vx
    ux = -np.sin(t) * vy + np.cos(t) * vx
    beta = np.radians(texture_angle)
    stripe = uy * np.sin(beta) + ux * np.cos(beta)
    texture = 0.5 + 0.42 * np.cos(2 * np.pi * freq * stripe)
    # Faint cross-stripes break the grating's translational symmetry along
    # its own axis, so translation stays observable at any rotation.
    cross = uy * np.sin(beta + np.pi / 2) + ux * np.cos(beta + np.pi / 2)
    texture += 0.08 * np.cos(2 * np.pi * freq * 0.61 * cross)
    mask = _disc_mask(shape, center, radius)
    return np.clip(background * (1 - mask) + texture * mask, 0.0, 1.0)


def _theta_schedule(kind, frames, params, rng):
    steps = frames - 1
    if kind == "translate":
        return np.zeros(steps)
    if kind == "rotate":
        return np.full(steps, float(params.get("rate", 5.0)))
    if kind == "translate_rotate":
        std = float(params.get("theta_std", 25.0))
        deltas = rng.normal(size=steps)
        spread = deltas.std()
        if spread == 0:
            return np.zeros(steps)
        return (deltas - deltas.mean()) / spread * std
    raise ValueError(f"unknown synthetic kind {kind!r}")


def synthetic_sequence(kind, frames, params=None, seed=0):
    """Render a synthetic tracking sequence with exact ground truth.

    ``kind`` is one of translate / rotate / translate_rotate.  The target
    is a grating-textured disc over a static smooth-noise background; its
    center advances by ``velocity`` per frame and its content rotates per
    the kind's schedule (constant ``rate``, or a seeded schedule whose
    per-frame rotations have population std exactly ``theta_std``).
    The start position is chosen so the whole path stays centered in the
    frame.  Deterministic for a given (kind, frames, params, seed).
    """
    if frames < 2:
        raise ValueError("need at least 2 frames")
    params = dict(params or {})
    rng = np.random.default_rng(seed)

    height, width = params.get("frame_size", (120, 160))
    radius = float(params.get("radius", 18.0))
    freq = float(params.get("freq", 0.08))
    if kind in ("translate", "translate_rotate"):
        velocity = params.get("velocity", (1.5, 2.5))
    else:
        velocity = params.get("velocity", (0.0, 0.0))
    velocity = (float(velocity[0]), float(velocity[1]))

    deltas = _theta_schedule(kind, frames, params, rng)
    orientations = np.concatenate([[0.0], np.cumsum(deltas)])

    background = 0.3 + 0.4 * _smooth_noise((height, width), rng, cutoff=0.03)
    # Center the path so the target never leaves the frame.
    travel = ((frames - 1) * velocity[0], (frames - 1) * velocity[1])
    start = ((height - 1) / 2.0 - travel[0] / 2.0, (width - 1) / 2.0 - travel[1] / 2.0)

    rendered = []
    boxes = []
    for i in range(frames):
        center = (start[0] + velocity[0] * i, start[1] + velocity[1] * i)
        margin = radius + 2
        if not (margin <= center[0] <= height - 1 - margin and margin <= center[1] <= width - 1 - margin):
            raise ValueError("target path leaves the frame; reduce velocity or frame count")
        rendered.append(_render_frame(background, center, radius, orientations[i], freq))
        boxes.append((center[1] - radius, center[0] - radius, 2.0 * radius, 2.0 * radius))

    return SequenceSpec(
        name=f"synthetic_{kind}",
        frames=tuple(rendered),
        ground_truth=tuple(boxes),
    )
