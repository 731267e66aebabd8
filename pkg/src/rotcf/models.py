"""Correlation-filter training and detection.

Three filter families share the circulant ridge machinery from
``spectral``:

* a linear translation filter (one primal filter per feature channel,
  responses summed at detection);
* a Gaussian-kernel dual translation filter (the usual KCF form), whose
  kernel vector holds the Gaussian kernel between the template and every
  circular shift of the new patch;
* a 1D rotation filter over orientation descriptors, where the response
  peak offset is the estimated rotation in bins.

Two cheaper rotation estimators (plain circular cross-correlation of two
descriptors, and the shift of their argmax bins) are provided for
benchmarking against the filter.

All detections convert an argmax index to a signed circular shift in
[-L/2, L/2) per axis, with ties resolved to the smallest (row-major)
index so runs are deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .features import OrientationDescriptor
from .spectral import (
    forward_transform,
    inverse_transform,
    ridge_dual_spectrum,
    ridge_filter_spectrum,
)

__all__ = [
    "LinearFilterModel",
    "KernelDualModel",
    "RotationFilterModel",
    "gaussian_kernel_correlation",
    "train_kernel_cf",
    "train_linear_cf",
    "detect_translation",
    "update_model",
    "train_rotation_filter",
    "rotation_filter_response",
    "detect_rotation_filter",
    "detect_rotation_correlation",
    "detect_rotation_maxshift",
]


@dataclass(frozen=True)
class LinearFilterModel:
    """Primal translation filter(s) in the Fourier domain, one per channel."""

    w_hat: np.ndarray  # (m, n) or (m, n, C) complex
    lambda1: float

    @property
    def shape(self):
        return self.w_hat.shape[:2]


@dataclass(frozen=True)
class KernelDualModel:
    """Gaussian-kernel dual translation filter plus its training template."""

    alpha_hat: np.ndarray  # (m, n) complex
    template: np.ndarray  # (m, n) or (m, n, C) features the kernel compares against
    kernel_sigma: float
    lambda1: float

    @property
    def shape(self):
        return self.alpha_hat.shape


@dataclass(frozen=True)
class RotationFilterModel:
    """1D rotation filter over an orientation descriptor.

    Both the primal filter spectrum and the dual coefficients are kept;
    with the default linear kernel their detections coincide.  A model
    trained on a degenerate (all-zero) descriptor is inert: detection
    reports zero rotation with zero peak.
    """

    filter_spectrum: np.ndarray  # primal, length b complex
    dual_spectrum: np.ndarray  # dual coefficients, length b complex
    descriptor: OrientationDescriptor
    target_spectrum: np.ndarray
    lambda2: float
    kernel: str = "linear"
    kernel_sigma: float = 0.5
    degenerate: bool = False

    @property
    def size(self):
        return self.filter_spectrum.size

    @property
    def bin_width(self):
        return self.descriptor.bin_width


def _channels(features):
    features = np.asarray(features, dtype=float)
    if features.ndim == 1 or features.ndim == 2:
        return features[..., np.newaxis]
    if features.ndim == 3:
        return features
    raise ValueError(f"unsupported feature rank {features.ndim}")


def gaussian_kernel_correlation(x, z, sigma):
    """Gaussian kernel between x and every circular shift of z.

    Entry tau equals exp(-||x - shift(z, tau)||^2 / sigma^2), computed for
    all shifts at once through the cross-correlation theorem.  Inputs are
    1D vectors, 2D grids, or 2D grids with a trailing channel axis
    (channel cross-correlations are summed).  The squared distance is
    clamped at zero before the exponent to absorb floating-point excess.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {z.shape}")
    xc = _channels(x)
    zc = _channels(z)
    cross = 0.0
    for c in range(xc.shape[-1]):
        x_hat = forward_transform(xc[..., c])
        z_hat = forward_transform(zc[..., c])
        cross = cross + inverse_transform(np.conj(x_hat) * z_hat)
    dist_sq = np.sum(x**2) + np.sum(z**2) - 2.0 * cross
    return np.exp(-np.maximum(dist_sq, 0.0) / sigma**2)


def train_kernel_cf(features, target, sigma, lambda1):
    """Train the Gaussian-kernel dual filter on (windowed) features."""
    features = np.asarray(features, dtype=float)
    target = np.asarray(target, dtype=float)
    if features.shape[:2] != target.shape:
        raise ValueError(f"feature/target shape mismatch: {features.shape} vs {target.shape}")
    if lambda1 <= 0:
        raise ValueError("lambda1 must be positive for the dual solution")
    kernel_vec = gaussian_kernel_correlation(features, features, sigma)
    alpha_hat = ridge_dual_spectrum(forward_transform(kernel_vec), forward_transform(target), lambda1)
    return KernelDualModel(alpha_hat=alpha_hat, template=features, kernel_sigma=sigma, lambda1=lambda1)


def train_linear_cf(features, target, lambda1):
    """Train one primal ridge filter per feature channel."""
    features = np.asarray(features, dtype=float)
    target = np.asarray(target, dtype=float)
    if features.shape[:2] != target.shape:
        raise ValueError(f"feature/target shape mismatch: {features.shape} vs {target.shape}")
    target_hat = forward_transform(target)
    chans = _channels(features)
    w = np.stack(
        [
            ridge_filter_spectrum(forward_transform(chans[..., c]), target_hat, lambda1)
            for c in range(chans.shape[-1])
        ],
        axis=-1,
    )
    if features.ndim == 2:
        w = w[..., 0]
    return LinearFilterModel(w_hat=w, lambda1=lambda1)


def _signed_shift(index, length):
    # Map argmax index to a signed circular shift in [-length/2, length/2).
    return int(index) if index < (length + 1) // 2 else int(index) - length


def _parabolic_offset(response, index):
    # Sub-sample vertex of the parabola through the peak and its circular
    # neighbors; zero when the quadratic degenerates.
    n = response.size
    left = response[(index - 1) % n]
    center = response[index]
    right = response[(index + 1) % n]
    denom = left - 2.0 * center + right
    if denom >= 0 or not np.isfinite(denom):
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def translation_response(model, features):
    """Detection response grid for either translation-filter family."""
    features = np.asarray(features, dtype=float)
    if isinstance(model, KernelDualModel):
        if features.shape != np.asarray(model.template).shape:
            raise ValueError(
                f"feature shape {features.shape} does not match template {np.asarray(model.template).shape}"
            )
        kernel_vec = gaussian_kernel_correlation(model.template, features, model.kernel_sigma)
        return inverse_transform(forward_transform(kernel_vec) * model.alpha_hat)
    if isinstance(model, LinearFilterModel):
        w_hat = model.w_hat
        if features.shape != w_hat.shape:
            raise ValueError(f"feature shape {features.shape} does not match filter {w_hat.shape}")
        chans = _channels(features)
        w_chans = w_hat[..., np.newaxis] if w_hat.ndim == 2 else w_hat
        response = 0.0
        for c in range(chans.shape[-1]):
            response = response + inverse_transform(forward_transform(chans[..., c]) * w_chans[..., c])
        return response
    raise TypeError(f"unsupported model type {type(model).__name__}")


def detect_translation(model, features):
    """Locate the response peak and convert it to a signed pixel shift.

    Returns (dy, dx, peak, response).  Zero shift means the peak sits at
    index (0, 0); ties go to the smallest row-major index.
    """
    response = translation_response(model, features)
    idx = np.unravel_index(np.argmax(response), response.shape)
    dy = _signed_shift(idx[0], response.shape[0])
    dx = _signed_shift(idx[1], response.shape[1])
    return dy, dx, float(response[idx]), response


def update_model(model, new_model, eta):
    """Linear interpolation of dual coefficients and template, rate ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if model.alpha_hat.shape != new_model.alpha_hat.shape:
        raise ValueError("model shape mismatch")
    if np.asarray(model.template).shape != np.asarray(new_model.template).shape:
        raise ValueError("template shape mismatch")
    return KernelDualModel(
        alpha_hat=(1.0 - eta) * model.alpha_hat + eta * new_model.alpha_hat,
        template=(1.0 - eta) * np.asarray(model.template) + eta * np.asarray(new_model.template),
        kernel_sigma=model.kernel_sigma,
        lambda1=model.lambda1,
    )


def _rotation_kernel_spectrum(template_bins, new_bins, kernel, kernel_sigma):
    a_hat = forward_transform(template_bins)
    z_hat = forward_transform(new_bins)
    if kernel == "linear":
        return np.conj(a_hat) * z_hat
    if kernel == "gaussian":
        return forward_transform(gaussian_kernel_correlation(template_bins, new_bins, kernel_sigma))
    raise ValueError(f"unknown rotation kernel {kernel!r}")


def train_rotation_filter(descriptor, target, lambda2, kernel="linear", kernel_sigma=0.5):
    """Train the 1D rotation filter on an orientation descriptor.

    ``target`` is the 1D wrapped-Gaussian response expected for zero
    rotation.  A degenerate descriptor produces an inert model.
    """
    if lambda2 <= 0:
        raise ValueError("lambda2 must be positive")
    bins = np.asarray(descriptor.bins, dtype=float)
    target = np.asarray(target, dtype=float)
    if bins.shape != target.shape:
        raise ValueError(f"descriptor/target length mismatch: {bins.shape} vs {target.shape}")
    target_hat = forward_transform(target)
    if descriptor.degenerate or not np.any(bins):
        zeros = np.zeros(bins.size, dtype=complex)
        return RotationFilterModel(
            filter_spectrum=zeros,
            dual_spectrum=zeros,
            descriptor=descriptor,
            target_spectrum=target_hat,
            lambda2=lambda2,
            kernel=kernel,
            kernel_sigma=kernel_sigma,
            degenerate=True,
        )
    a_hat = forward_transform(bins)
    filter_spectrum = ridge_filter_spectrum(a_hat, target_hat, lambda2)
    kernel_hat = _rotation_kernel_spectrum(bins, bins, kernel, kernel_sigma)
    dual_spectrum = ridge_dual_spectrum(kernel_hat, target_hat, lambda2)
    return RotationFilterModel(
        filter_spectrum=filter_spectrum,
        dual_spectrum=dual_spectrum,
        descriptor=descriptor,
        target_spectrum=target_hat,
        lambda2=lambda2,
        kernel=kernel,
        kernel_sigma=kernel_sigma,
    )


def rotation_filter_response(model, descriptor, path="dual"):
    """1D rotation response; ``path`` selects the dual or primal form.

    With the linear kernel the two paths produce the same array, which is
    asserted in the test suite.
    """
    new_bins = np.asarray(descriptor.bins, dtype=float)
    if new_bins.size != model.size:
        raise ValueError(f"descriptor length {new_bins.size} does not match model {model.size}")
    if path == "dual":
        kernel_hat = _rotation_kernel_spectrum(
            np.asarray(model.descriptor.bins, dtype=float), new_bins, model.kernel, model.kernel_sigma
        )
        return inverse_transform(kernel_hat * model.dual_spectrum)
    if path == "primal":
        return inverse_transform(forward_transform(new_bins) * model.filter_spectrum)
    raise ValueError(f"unknown response path {path!r}")


def _shift_to_angle(shift, offset, bin_width, span):
    theta = (shift + offset) * bin_width
    # Fold into [-span/2, span/2); refinement can push past the edge.
    return float((theta + span / 2.0) % span - span / 2.0)


def detect_rotation_filter(model, descriptor, refine=True):
    """Estimate rotation from the filter response peak.

    Returns (theta_degrees, peak).  The peak bin offset maps to degrees
    through the descriptor bin width; parabolic refinement interpolates
    between bins unless disabled for exact-shift tests.
    """
    if model.degenerate or descriptor.degenerate:
        return 0.0, 0.0
    response = rotation_filter_response(model, descriptor, path="dual")
    idx = int(np.argmax(response))
    shift = _signed_shift(idx, response.size)
    offset = _parabolic_offset(response, idx) if refine else 0.0
    theta = _shift_to_angle(shift, offset, model.bin_width, model.descriptor.span)
    return theta, float(response[idx])


def detect_rotation_correlation(a_old, a_new, refine=True):
    """Rotation from the circular cross-correlation peak of two descriptors."""
    if a_old.size != a_new.size:
        raise ValueError(f"descriptor length mismatch: {a_old.size} vs {a_new.size}")
    if a_old.degenerate or a_new.degenerate:
        return 0.0
    cross = inverse_transform(
        np.conj(forward_transform(np.asarray(a_old.bins, dtype=float)))
        * forward_transform(np.asarray(a_new.bins, dtype=float))
    )
    idx = int(np.argmax(cross))
    shift = _signed_shift(idx, cross.size)
    offset = _parabolic_offset(cross, idx) if refine else 0.0
    return _shift_to_angle(shift, offset, a_old.bin_width, a_old.span)


def detect_rotation_maxshift(a_old, a_new):
    """Rotation from the displacement of the descriptor argmax bins.

    The crudest estimator: it fails whenever a secondary histogram mode
    overtakes the primary between frames, which is why it benchmarks far
    worse than the other two.
    """
    if a_old.size != a_new.size:
        raise ValueError(f"descriptor length mismatch: {a_old.size} vs {a_new.size}")
    if a_old.degenerate or a_new.degenerate:
        return 0.0
    shift = (int(np.argmax(a_new.bins)) - int(np.argmax(a_old.bins))) % a_old.size
    return _shift_to_angle(_signed_shift(shift, a_old.size), 0.0, a_old.bin_width, a_old.span)
