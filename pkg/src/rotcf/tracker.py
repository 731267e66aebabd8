"""Rotation-aware correlation-filter tracker.

Per frame the tracker runs the baseline kernel-CF detection, estimates
frame-to-frame target rotation from the global orientation descriptor,
counter-rotates the new patch by that estimate and re-runs detection.
Whichever detection produced the higher peak wins; the counter-rotated
displacement is rotated back into image coordinates before it moves the
target.  A strict inequality guards the branch, so ties (including the
exact tie produced by a zero rotation estimate) keep the baseline path
and the tracker degrades gracefully to plain KCF behaviour.

States are small immutable snapshots: ``track_frame`` returns a new
state plus a per-frame record rather than mutating in place, which keeps
runs deterministic and sequences trivially parallelizable.
"""

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .features import (
    OrientationDescriptor,
    extract_patch,
    global_hog,
    rotate_displacement,
    rotate_patch,
    to_grayscale,
)
from .models import (
    detect_rotation_correlation,
    detect_rotation_filter,
    detect_rotation_maxshift,
    detect_translation,
    train_kernel_cf,
    train_rotation_filter,
    update_model,
)
from .spectral import cosine_window, gaussian_target

__all__ = [
    "TrackerConfig",
    "TrackerState",
    "FrameRecord",
    "init_tracker",
    "track_frame",
    "run_sequence",
]

ROTATION_METHODS = ("filter", "correlation", "maxshift", "none")
FEATURE_MODES = ("gray", "cellhog")

_CELL_SIZE = 4
_CELL_ORIENT_BINS = 9


@dataclass(frozen=True)
class TrackerConfig:
    """All tracker hyperparameters; everything has an explicit default.

    ``kernel_sigma`` left as None resolves per feature mode (0.5 for
    grayscale, 0.6 for cell-HOG channels).  ``rotation_method`` "none"
    disables the rotation branch entirely, reproducing the baseline
    tracker. ``descriptor_eta`` > 0 blends the reference descriptor over
    time instead of replacing it each frame.
    """

    padding: float = 1.5
    lambda1: float = 1e-4
    lambda2: float = 1e-4
    kernel_sigma: float | None = None
    target_sigma_factor: float = 0.1
    rotation_sigma_factor: float = 0.0625
    bins: int = 90
    orientation_mode: str = "unsigned180"
    eta: float = 0.02
    rotation_method: str = "filter"
    refinement: bool = True
    feature_mode: str = "gray"
    rotation_kernel: str = "linear"
    rotation_kernel_sigma: float = 0.5
    descriptor_smoothing: bool = True
    descriptor_eta: float = 0.0

    def resolve(self):
        """Validate and fill mode-dependent defaults; returns a new config."""
        if self.padding <= 1:
            raise ValueError("padding must exceed 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.bins < 8:
            raise ValueError("need at least 8 descriptor bins")
        if self.rotation_method not in ROTATION_METHODS:
            raise ValueError(f"rotation_method must be one of {ROTATION_METHODS}")
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
        if self.orientation_mode not in ("unsigned180", "signed360"):
            raise ValueError("orientation_mode must be unsigned180 or signed360")
        if not 0.0 <= self.descriptor_eta <= 1.0:
            raise ValueError("descriptor_eta must lie in [0, 1]")
        sigma = self.kernel_sigma
        if sigma is None:
            sigma = 0.5 if self.feature_mode == "gray" else 0.6
        return dataclasses.replace(self, kernel_sigma=float(sigma))


@dataclass(frozen=True)
class FrameRecord:
    """Outcome of one tracking step.

    ``used_rotation`` is true exactly when the counter-rotated detection
    peak beat the baseline peak.  ``center_error`` is filled only when
    ground truth is available.
    """

    frame_index: int
    box: tuple[float, float, float, float]  # (x, y, w, h)
    theta: float
    peak_baseline: float
    peak_rotated: float
    used_rotation: bool
    center_error: float | None = None


@dataclass(frozen=True)
class TrackerState:
    config: TrackerConfig
    frame_shape: tuple[int, int]
    center: tuple[float, float]  # (row, col)
    target_size: tuple[float, float]  # (h, w)
    window_size: tuple[int, int]  # (m, n), padding applied and rounded even
    cf_model: object
    prev_descriptor: OrientationDescriptor
    theta_history: tuple[float, ...]
    frame_index: int
    pixel_window: np.ndarray
    feature_window: np.ndarray
    target_response: np.ndarray
    rotation_target: np.ndarray

    @property
    def box(self):
        h, w = self.target_size
        return (self.center[1] - w / 2.0, self.center[0] - h / 2.0, w, h)


def _round_up(value, multiple):
    return int(np.ceil(value / multiple) * multiple)


def _window_dims(target_size, config):
    # Even dims keep the signed shift ranges symmetric; cell features
    # additionally need dims divisible by the cell size.
    multiple = 2 * _CELL_SIZE if config.feature_mode == "cellhog" else 2
    m = max(8, _round_up(config.padding * target_size[0], multiple))
    n = max(8, _round_up(config.padding * target_size[1], multiple))
    return m, n


def _cell_hog_channels(pixels):
    # Per-cell orientation histograms (no block normalization): the
    # multichannel translation feature.  Votes use the same linear
    # bin interpolation as the global descriptor.
    m, n = pixels.shape
    padded = np.pad(pixels, 1, mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    magnitude = np.hypot(gy, gx)
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    position = angle / (180.0 / _CELL_ORIENT_BINS)
    low = np.floor(position).astype(int) % _CELL_ORIENT_BINS
    frac = position - np.floor(position)

    votes = np.zeros((m, n, _CELL_ORIENT_BINS))
    rows, cols = np.indices((m, n))
    np.add.at(votes, (rows, cols, low), magnitude * (1.0 - frac))
    np.add.at(votes, (rows, cols, (low + 1) % _CELL_ORIENT_BINS), magnitude * frac)

    mc, nc = m // _CELL_SIZE, n // _CELL_SIZE
    cells = votes.reshape(mc, _CELL_SIZE, nc, _CELL_SIZE, _CELL_ORIENT_BINS).sum(axis=(1, 3))
    norms = np.linalg.norm(cells, axis=2, keepdims=True)
    return cells / (norms + 1e-6)


def _translation_features(pixels, config, feature_window):
    if config.feature_mode == "gray":
        return (pixels - pixels.mean()) * feature_window
    return _cell_hog_channels(pixels) * feature_window[:, :, np.newaxis]


def _descriptor(pixels, state):
    cfg = state.config
    return global_hog(
        pixels * state.pixel_window,
        bins=cfg.bins,
        mode=cfg.orientation_mode,
        smoothing=cfg.descriptor_smoothing,
    )


def _estimate_rotation(state, new_descriptor):
    cfg = state.config
    if cfg.rotation_method == "filter":
        model = train_rotation_filter(
            state.prev_descriptor,
            state.rotation_target,
            cfg.lambda2,
            kernel=cfg.rotation_kernel,
            kernel_sigma=cfg.rotation_kernel_sigma,
        )
        theta, _ = detect_rotation_filter(model, new_descriptor, refine=cfg.refinement)
        return theta
    if cfg.rotation_method == "correlation":
        return detect_rotation_correlation(state.prev_descriptor, new_descriptor, refine=cfg.refinement)
    if cfg.rotation_method == "maxshift":
        return detect_rotation_maxshift(state.prev_descriptor, new_descriptor)
    raise ValueError(f"unknown rotation method {cfg.rotation_method!r}")


def init_tracker(frame, box, config=None):
    """Initialize tracker state from the first frame and its target box.

    ``box`` is (x, y, w, h) in 0-indexed pixel coordinates.  Trains the
    kernel-CF model and the reference orientation descriptor on the
    padded window around the target.
    """
    config = (config or TrackerConfig()).resolve()
    gray = to_grayscale(frame)
    x, y, w, h = (float(v) for v in box)
    if w <= 0 or h <= 0:
        raise ValueError("degenerate box: width and height must be positive")
    if not (0 <= x < gray.shape[1] and 0 <= y < gray.shape[0]):
        raise ValueError("box origin lies outside the frame")

    center = (y + h / 2.0, x + w / 2.0)
    window_size = _window_dims((h, w), config)
    pixel_window = cosine_window(window_size)
    cell = _CELL_SIZE if config.feature_mode == "cellhog" else 1
    feat_dims = (window_size[0] // cell, window_size[1] // cell)
    feature_window = pixel_window if cell == 1 else cosine_window(feat_dims)
    target_sigma = config.target_sigma_factor * np.sqrt(feat_dims[0] * feat_dims[1]) / config.padding
    target_response = gaussian_target(feat_dims, target_sigma)
    rotation_target = gaussian_target(config.bins, config.rotation_sigma_factor * config.bins)

    patch = extract_patch(gray, center, window_size, frame_index=0)
    feats = _translation_features(patch.pixels, config, feature_window)
    cf_model = train_kernel_cf(feats, target_response, config.kernel_sigma, config.lambda1)

    state = TrackerState(
        config=config,
        frame_shape=gray.shape,
        center=center,
        target_size=(h, w),
        window_size=window_size,
        cf_model=cf_model,
        prev_descriptor=OrientationDescriptor(np.zeros(config.bins), config.orientation_mode, True),
        theta_history=(),
        frame_index=0,
        pixel_window=pixel_window,
        feature_window=feature_window,
        target_response=target_response,
        rotation_target=rotation_target,
    )
    descriptor = _descriptor(patch.pixels, state)
    return dataclasses.replace(state, prev_descriptor=descriptor)


def track_frame(state, frame):
    """Process one frame; returns (new_state, FrameRecord).

    Baseline detection runs first and records its peak; if rotation
    estimation is enabled, the patch is counter-rotated by the estimate
    and re-detected, and the higher peak decides which displacement moves
    the target.  The model always updates from the patch at the new
    center in its original orientation.
    """
    cfg = state.config
    gray = to_grayscale(frame)
    if gray.shape != state.frame_shape:
        raise ValueError(f"frame shape {gray.shape} does not match tracked sequence {state.frame_shape}")

    cell = _CELL_SIZE if cfg.feature_mode == "cellhog" else 1
    patch = extract_patch(gray, state.center, state.window_size, frame_index=state.frame_index + 1)
    feats = _translation_features(patch.pixels, cfg, state.feature_window)
    dy, dx, peak_baseline, _ = detect_translation(state.cf_model, feats)
    base_displacement = (float(dy * cell), float(dx * cell))

    if cfg.rotation_method == "none":
        theta = 0.0
        peak_rotated = peak_baseline
        used_rotation = False
        displacement = base_displacement
    else:
        new_descriptor = _descriptor(patch.pixels, state)
        theta = _estimate_rotation(state, new_descriptor)
        counter = rotate_patch(patch, -theta)
        feats_rot = _translation_features(counter.pixels, cfg, state.feature_window)
        dy_r, dx_r, peak_rotated, _ = detect_translation(state.cf_model, feats_rot)
        if peak_rotated > peak_baseline:
            displacement = rotate_displacement((dy_r * cell, dx_r * cell), theta)
            used_rotation = True
        else:
            displacement = base_displacement
            used_rotation = False

    center = (
        float(np.clip(state.center[0] + displacement[0], 0, state.frame_shape[0] - 1)),
        float(np.clip(state.center[1] + displacement[1], 0, state.frame_shape[1] - 1)),
    )

    new_patch = extract_patch(gray, center, state.window_size, frame_index=state.frame_index + 1)
    new_feats = _translation_features(new_patch.pixels, cfg, state.feature_window)
    new_model = train_kernel_cf(new_feats, state.target_response, cfg.kernel_sigma, cfg.lambda1)
    cf_model = update_model(state.cf_model, new_model, cfg.eta)

    descriptor = _descriptor(new_patch.pixels, state)
    if cfg.descriptor_eta > 0 and not descriptor.degenerate and not state.prev_descriptor.degenerate:
        blended = (1.0 - cfg.descriptor_eta) * state.prev_descriptor.bins + cfg.descriptor_eta * descriptor.bins
        norm = np.linalg.norm(blended)
        if norm > 0:
            descriptor = OrientationDescriptor(blended / norm, cfg.orientation_mode, False)

    new_state = dataclasses.replace(
        state,
        center=center,
        cf_model=cf_model,
        prev_descriptor=descriptor,
        theta_history=state.theta_history + (float(theta),),
        frame_index=state.frame_index + 1,
    )
    h, w = state.target_size
    record = FrameRecord(
        frame_index=new_state.frame_index,
        box=(center[1] - w / 2.0, center[0] - h / 2.0, w, h),
        theta=float(theta),
        peak_baseline=float(peak_baseline),
        peak_rotated=float(peak_rotated),
        used_rotation=used_rotation,
    )
    return new_state, record


def _frames_of(sequence):
    if hasattr(sequence, "frame") and hasattr(sequence, "__len__"):
        return len(sequence), sequence.frame
    frames = list(sequence)
    return len(frames), lambda i: frames[i]


def run_sequence(sequence, config=None, ground_truth=None, init_box=None):
    """Track a whole sequence; returns one FrameRecord per frame after the first.

    The initial box comes from ``init_box`` or the first ground-truth
    entry.  ``ground_truth`` overrides any ground truth the sequence
    object carries; when present, records get center errors.
    """
    count, frame_at = _frames_of(sequence)
    if count < 2:
        raise ValueError("need at least 2 frames")
    if ground_truth is None:
        ground_truth = getattr(sequence, "ground_truth", None)
    if ground_truth is not None:
        ground_truth = list(ground_truth)
        if len(ground_truth) != count:
            warnings.warn(
                f"ground truth length {len(ground_truth)} != frame count {count}; truncating",
                stacklevel=2,
            )
            count = min(count, len(ground_truth))
            ground_truth = ground_truth[:count]
            if count < 2:
                raise ValueError("need at least 2 frames with ground truth")
    if init_box is None:
        if not ground_truth:
            raise ValueError("no initial box: provide init_box or ground truth")
        init_box = ground_truth[0]

    state = init_tracker(frame_at(0), init_box, config)
    records = []
    for i in range(1, count):
        state, record = track_frame(state, frame_at(i))
        if ground_truth is not None:
            gx, gy, gw, gh = ground_truth[i]
            bx, by, bw, bh = record.box
            err = float(np.hypot((by + bh / 2) - (gy + gh / 2), (bx + bw / 2) - (gx + gw / 2)))
            record = dataclasses.replace(record, center_error=err)
        records.append(record)
    return records
