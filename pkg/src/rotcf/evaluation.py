"""Benchmark and metric computations.

Covers the rotation-detection micro-benchmark (three estimators, two
envelope windows, mean absolute error in degrees), the tracking metrics
(precision curve over center-error thresholds, rotational difficulty as
the population std of per-frame rotations, and the success rate of the
counter-rotation branch), and the paired baseline-vs-rotation tracker
comparison.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .features import global_hog, rotate_patch
from .models import (
    detect_rotation_correlation,
    detect_rotation_filter,
    detect_rotation_maxshift,
    train_rotation_filter,
)
from .spectral import cosine_window, gaussian_target, gaussian_window
from .tracker import run_sequence

__all__ = [
    "RotationBenchSpec",
    "MetricsReport",
    "TrackerComparison",
    "circular_angle_difference",
    "run_rotation_benchmark",
    "precision_curve",
    "rotational_difficulty",
    "success_rate",
    "build_metrics",
    "compare_trackers",
]

PRECISION_THRESHOLDS = np.arange(51)

ENVELOPES = ("cosine", "gaussian")
BENCH_METHODS = ("filter", "correlation", "maxshift")


@dataclass(frozen=True)
class RotationBenchSpec:
    """Protocol for the rotation-detection benchmark.

    Each image is windowed once per envelope; every estimator sees the
    upright and the rotated descriptor but never the true angle.  Angles
    are drawn uniformly from ``angle_range`` with a generator seeded by
    ``seed``, so runs are reproducible.
    """

    images: tuple
    rotations_per_image: int = 100
    angle_range: tuple = (-80.0, 80.0)
    envelope: str = "cosine"
    methods: tuple = BENCH_METHODS
    bins: int = 90
    orientation_mode: str = "unsigned180"
    seed: int = 0
    lambda2: float = 1e-4
    refine: bool = True
    smoothing: bool = True
    envelope_sigma_factor: float = 0.2

    def __post_init__(self):
        if len(self.images) == 0:
            raise ValueError("empty image set")
        if self.rotations_per_image < 1:
            raise ValueError("rotations_per_image must be >= 1")
        if self.envelope not in ENVELOPES:
            raise ValueError(f"envelope must be one of {ENVELOPES}")
        unknown = set(self.methods) - set(BENCH_METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {BENCH_METHODS}")
        span = 180.0 if self.orientation_mode == "unsigned180" else 360.0
        lo, hi = self.angle_range
        if lo >= hi or lo < -span / 2 or hi > span / 2:
            raise ValueError(f"angle_range must lie within (-{span / 2}, {span / 2})")


def circular_angle_difference(a, b, span=180.0):
    """Signed circular difference a - b folded into [-span/2, span/2)."""
    return float((a - b + span / 2.0) % span - span / 2.0)


def _envelope_window(shape, spec):
    if spec.envelope == "cosine":
        return cosine_window(shape)
    return gaussian_window(shape, spec.envelope_sigma_factor * min(shape))


def run_rotation_benchmark(spec):
    """Mean absolute rotation error in degrees per estimator.

    Returns {method: mae}.  Angle assignment is fixed by the seed and
    image order, but accumulation is a plain mean so the result does not
    depend on evaluation order.
    """
    rng = np.random.default_rng(spec.seed)
    span = 180.0 if spec.orientation_mode == "unsigned180" else 360.0
    target = gaussian_target(spec.bins, spec.bins / 16.0)
    errors = {method: [] for method in spec.methods}

    for image in spec.images:
        image = np.asarray(image, dtype=float)
        window = _envelope_window(image.shape, spec)
        upright = global_hog(
            image * window, bins=spec.bins, mode=spec.orientation_mode, smoothing=spec.smoothing
        )
        model = None
        if "filter" in spec.methods:
            model = train_rotation_filter(upright, target, spec.lambda2)
        angles = rng.uniform(spec.angle_range[0], spec.angle_range[1], spec.rotations_per_image)
        for true_angle in angles:
            rotated = global_hog(
                rotate_patch(image, true_angle) * window,
                bins=spec.bins,
                mode=spec.orientation_mode,
                smoothing=spec.smoothing,
            )
            for method in spec.methods:
                if method == "filter":
                    estimate, _ = detect_rotation_filter(model, rotated, refine=spec.refine)
                elif method == "correlation":
                    estimate = detect_rotation_correlation(upright, rotated, refine=spec.refine)
                else:
                    estimate = detect_rotation_maxshift(upright, rotated)
                errors[method].append(abs(circular_angle_difference(estimate, true_angle, span)))

    return {method: float(np.mean(errs)) for method, errs in errors.items()}


def precision_curve(records):
    """Fraction of frames with center error <= tau, for tau = 0..50 px."""
    if not records:
        raise ValueError("no records")
    errors = [r.center_error for r in records]
    if any(e is None for e in errors):
        raise ValueError("records lack center errors (no ground truth)")
    errors = np.asarray(errors, dtype=float)
    return np.array([np.mean(errors <= tau) for tau in PRECISION_THRESHOLDS])


def rotational_difficulty(theta_history):
    """Population standard deviation of the per-frame rotation angles."""
    thetas = np.asarray(list(theta_history), dtype=float)
    if thetas.size == 0:
        raise ValueError("empty rotation history")
    return float(np.std(thetas))


def success_rate(records):
    """Fraction of frames where the counter-rotated detection won."""
    if not records:
        raise ValueError("no records")
    wins = sum(1 for r in records if r.used_rotation)
    return wins / len(records)


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated metrics for one tracker run.

    Precision fields are None when the sequence has no ground truth;
    serialization then omits them entirely.
    """

    mho_deg: float
    success_rate: float
    precision_curve: np.ndarray = None
    precision_at_20: float = None
    per_method_mae: dict = None

    def to_dict(self):
        out = {
            "mho_deg": self.mho_deg,
            "success_rate": self.success_rate,
        }
        if self.precision_curve is not None:
            out["precision_curve"] = [float(v) for v in self.precision_curve]
            out["precision_at_20"] = float(self.precision_at_20)
        if self.per_method_mae is not None:
            out["per_method_mae"] = dict(self.per_method_mae)
        return out


def build_metrics(records, per_method_mae=None):
    """Assemble a MetricsReport from per-frame records."""
    thetas = [r.theta for r in records]
    report = MetricsReport(
        mho_deg=rotational_difficulty(thetas),
        success_rate=success_rate(records),
        per_method_mae=per_method_mae,
    )
    if all(r.center_error is not None for r in records):
        curve = precision_curve(records)
        report = dataclasses.replace(
            report, precision_curve=curve, precision_at_20=float(curve[20])
        )
    return report


@dataclass(frozen=True)
class TrackerComparison:
    baseline_records: list
    baseline_metrics: MetricsReport
    rotation_records: list
    rotation_metrics: MetricsReport
    precision_diff: np.ndarray = None  # rotation minus baseline, per threshold


def compare_trackers(sequence, config):
    """Run the tracker with the rotation branch off and on; report both.

    The baseline run uses the same configuration with rotation_method
    forced to "none", so the comparison isolates the counter-rotation
    machinery.
    """
    baseline_cfg = dataclasses.replace(config, rotation_method="none")
    baseline_records = run_sequence(sequence, baseline_cfg)
    rotation_records = run_sequence(sequence, config)
    baseline_metrics = build_metrics(baseline_records)
    rotation_metrics = build_metrics(rotation_records)
    diff = None
    if baseline_metrics.precision_curve is not None and rotation_metrics.precision_curve is not None:
        diff = rotation_metrics.precision_curve - baseline_metrics.precision_curve
    return TrackerComparison(
        baseline_records=baseline_records,
        baseline_metrics=baseline_metrics,
        rotation_records=rotation_records,
        rotation_metrics=rotation_metrics,
        precision_diff=diff,
    )
