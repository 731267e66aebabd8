"""Results persistence and configuration files.

Per-frame records go to a line-oriented CSV and aggregated metrics to a
JSON document; both use fixed 6-decimal float formatting so a read of a
written file reproduces the values exactly as printed.  Plot-ready data
(precision curve points, the per-frame rotation series) is emitted as
small CSVs next to them.

Tracker configuration files are flat ``key=value`` text whose keys are
exactly the TrackerConfig field names; the effective configuration is
echoed into every metrics document so a run can be reproduced from its
outputs alone.
"""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .tracker import FrameRecord, TrackerConfig

__all__ = [
    "RunArtifacts",
    "write_results",
    "read_results",
    "load_config_file",
    "apply_config_overrides",
    "config_to_mapping",
]

RECORD_HEADER = "frame,x,y,w,h,theta_deg,peak_baseline,peak_rotated,used_rotation,center_error"


@dataclass(frozen=True)
class RunArtifacts:
    records_path: Path
    metrics_path: Path
    precision_curve_path: Path = None
    theta_series_path: Path = None


def _fmt(value):
    return f"{float(value):.6f}"


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def write_results(records, metrics, out_dir):
    """Write records CSV, metrics JSON, and plot-data CSVs into ``out_dir``.

    ``metrics`` is a plain dict (typically MetricsReport.to_dict() plus a
    "config" echo); keys with value None are dropped rather than written
    as null.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    records_path = out / "records.csv"
    lines = [RECORD_HEADER]
    for r in records:
        err = "" if r.center_error is None else _fmt(r.center_error)
        lines.append(
            ",".join(
                [
                    str(r.frame_index),
                    _fmt(r.box[0]),
                    _fmt(r.box[1]),
                    _fmt(r.box[2]),
                    _fmt(r.box[3]),
                    _fmt(r.theta),
                    _fmt(r.peak_baseline),
                    _fmt(r.peak_rotated),
                    "1" if r.used_rotation else "0",
                    err,
                ]
            )
        )
    records_path.write_text("\n".join(lines) + "\n")

    metrics_path = out / "metrics.json"
    clean = _round_floats({k: v for k, v in metrics.items() if v is not None})
    metrics_path.write_text(json.dumps(clean, indent=2, sort_keys=True) + "\n")

    precision_path = None
    if "precision_curve" in clean:
        precision_path = out / "precision_curve.csv"
        rows = ["tau_px,precision"]
        rows += [f"{tau},{_fmt(v)}" for tau, v in enumerate(clean["precision_curve"])]
        precision_path.write_text("\n".join(rows) + "\n")

    theta_path = out / "theta_series.csv"
    rows = ["frame,theta_deg"]
    rows += [f"{r.frame_index},{_fmt(r.theta)}" for r in records]
    theta_path.write_text("\n".join(rows) + "\n")

    return RunArtifacts(
        records_path=records_path,
        metrics_path=metrics_path,
        precision_curve_path=precision_path,
        theta_series_path=theta_path,
    )


def read_results(out_dir):
    """Read back (records, metrics) written by ``write_results``."""
    out = Path(out_dir)
    records_path = out / "records.csv"
    if not records_path.is_file():
        raise ValueError(f"no records file at {records_path}")
    records = []
    lines = records_path.read_text().splitlines()
    if not lines or lines[0] != RECORD_HEADER:
        raise ValueError(f"{records_path}:1: unexpected header")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 10:
            raise ValueError(f"{records_path}:{lineno}: expected 10 fields, got {len(parts)}")
        try:
            records.append(
                FrameRecord(
                    frame_index=int(parts[0]),
                    box=(float(parts[1]), float(parts[2]), float(parts[3]), float(parts[4])),
                    theta=float(parts[5]),
                    peak_baseline=float(parts[6]),
                    peak_rotated=float(parts[7]),
                    used_rotation=parts[8] == "1",
                    center_error=float(parts[9]) if parts[9] else None,
                )
            )
        except ValueError as exc:
            raise ValueError(f"{records_path}:{lineno}: malformed record: {exc}") from exc

    metrics_path = out / "metrics.json"
    metrics = None
    if metrics_path.is_file():
        metrics = json.loads(metrics_path.read_text())
    return records, metrics


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(TrackerConfig)}
_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def load_config_file(path):
    """Parse a flat key=value config file into a string mapping."""
    mapping = {}
    path = Path(path)
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


def _coerce(name, value):
    if name not in _CONFIG_FIELDS:
        valid = ", ".join(sorted(_CONFIG_FIELDS))
        raise ValueError(f"unknown config key {name!r} (valid keys: {valid})")
    if isinstance(value, str):
        text = value.strip()
        if name in ("bins",):
            return int(text)
        if name in ("refinement", "descriptor_smoothing"):
            low = text.lower()
            if low in _TRUE_WORDS:
                return True
            if low in _FALSE_WORDS:
                return False
            raise ValueError(f"config key {name!r}: cannot parse boolean from {text!r}")
        if name in ("orientation_mode", "rotation_method", "feature_mode", "rotation_kernel"):
            return text
        if name == "kernel_sigma" and text.lower() in ("", "none", "auto"):
            return None
        return float(text)
    return value


def apply_config_overrides(config, mapping):
    """Return ``config`` with ``mapping`` (string or typed values) applied."""
    updates = {name: _coerce(name, value) for name, value in mapping.items()}
    return dataclasses.replace(config, **updates)


def config_to_mapping(config):
    """Fully-explicit dict echo of a (resolved) TrackerConfig."""
    resolved = config.resolve()
    return {f.name: getattr(resolved, f.name) for f in dataclasses.fields(TrackerConfig)}
