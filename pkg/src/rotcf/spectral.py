"""Fourier-domain building blocks for circulant ridge regression.

Training a correlation filter against every circular shift of a patch is
ordinary ridge regression whose data matrix is circulant, so the whole
problem diagonalizes in the DFT basis and the closed-form solution is an
elementwise division of spectra.  This module pins the conventions that
the rest of the package relies on:

* forward transform is the plain unnormalized DFT, the inverse carries
  the 1/N factor (numpy's default pair);
* the circulant matrix of a vector x has column j equal to x rolled by
  j elements (2D: columns are flattened 2D rolls in row-major shift
  order), which is the orientation under which the spectral solution
  keeps the conjugate on x;
* target responses peak at index 0 and wrap circularly, so "no shift"
  always means "argmax at the origin".

``dense_circulant_ridge`` builds the circulant system explicitly and
solves it densely; it exists so the O(N log N) spectral path can be
checked against an independent O(N^3) computation.
"""

import numpy as np

__all__ = [
    "forward_transform",
    "inverse_transform",
    "gaussian_target",
    "cosine_window",
    "gaussian_window",
    "ridge_filter_spectrum",
    "ridge_dual_spectrum",
    "dense_circulant_ridge",
]

_DENSE_SIZE_LIMIT = 4096


def forward_transform(signal):
    """Unnormalized DFT of a real 1D or 2D grid."""
    signal = np.asarray(signal)
    if signal.size == 0:
        raise ValueError("empty input")
    if signal.ndim == 1:
        return np.fft.fft(signal)
    if signal.ndim == 2:
        return np.fft.fft2(signal)
    raise ValueError(f"expected 1D or 2D input, got {signal.ndim}D")


def inverse_transform(spectrum):
    """Inverse DFT (1/N scaled), returning the real part."""
    spectrum = np.asarray(spectrum)
    if spectrum.size == 0:
        raise ValueError("empty input")
    if spectrum.ndim == 1:
        return np.fft.ifft(spectrum).real
    if spectrum.ndim == 2:
        return np.fft.ifft2(spectrum).real
    raise ValueError(f"expected 1D or 2D input, got {spectrum.ndim}D")


def gaussian_target(shape, sigma):
    """Circularly wrapped Gaussian response with peak 1 at index 0.

    The value at circular offset d from the origin is exp(-|d|^2 / (2 sigma^2)),
    with per-axis circular distance min(i, L - i).  Placing the peak at
    index 0 makes zero displacement equivalent to argmax at the origin,
    with no off-by-center convention to track.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if np.isscalar(shape):
        shape = (int(shape),)
    dist_sq = 0.0
    for axis, length in enumerate(shape):
        idx = np.arange(length)
        d = np.minimum(idx, length - idx).astype(float)
        dims = [1] * len(shape)
        dims[axis] = length
        dist_sq = dist_sq + (d**2).reshape(dims)
    target = np.exp(-dist_sq / (2.0 * sigma**2))
    if len(shape) == 1:
        return target.reshape(shape[0])
    return target


def cosine_window(shape):
    """Separable Hann window: outer product of 0.5*(1 - cos(2*pi*i/(L-1)))."""
    if np.isscalar(shape):
        shape = (int(shape),)
    if any(length < 2 for length in shape):
        raise ValueError("cosine window needs at least 2 samples per axis")
    profiles = [np.hanning(length) for length in shape]
    if len(profiles) == 1:
        return profiles[0]
    return np.outer(profiles[0], profiles[1])


def gaussian_window(shape, sigma):
    """Gaussian envelope with peak 1 at the geometric center of the grid."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if np.isscalar(shape):
        shape = (int(shape),)
    if any(length < 1 for length in shape):
        raise ValueError("degenerate window dims")
    dist_sq = 0.0
    for axis, length in enumerate(shape):
        d = np.arange(length) - (length - 1) / 2.0
        dims = [1] * len(shape)
        dims[axis] = length
        dist_sq = dist_sq + (d**2).reshape(dims)
    window = np.exp(-dist_sq / (2.0 * sigma**2))
    if len(shape) == 1:
        return window.reshape(shape[0])
    return window


def ridge_filter_spectrum(x_hat, y_hat, lam):
    """Closed-form primal ridge filter in the Fourier domain.

    Returns conj(x_hat) * y_hat / (conj(x_hat) * x_hat + lam) elementwise,
    the solution of the circulant ridge regression of y on all circular
    shifts of x.  The conjugate placement is the one that agrees with
    ``dense_circulant_ridge``.
    """
    x_hat = np.asarray(x_hat)
    y_hat = np.asarray(y_hat)
    if x_hat.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {y_hat.shape}")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    denom = np.conj(x_hat) * x_hat + lam
    if np.any(np.abs(denom) == 0):
        raise ValueError("zero denominator: increase lambda for signals with empty spectrum bins")
    return np.conj(x_hat) * y_hat / denom


def ridge_dual_spectrum(k_hat, y_hat, lam):
    """Dual-coefficient spectrum y_hat / (k_hat + lam).

    ``k_hat`` is the spectrum of a kernel autocorrelation vector; with a
    linear kernel this reproduces the primal detection exactly.
    """
    k_hat = np.asarray(k_hat)
    y_hat = np.asarray(y_hat)
    if k_hat.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {k_hat.shape} vs {y_hat.shape}")
    denom = k_hat + lam
    if np.any(np.abs(denom) == 0):
        raise ValueError("zero denominator in dual solution")
    return y_hat / denom


def _circulant_columns(x):
    # Column for shift s is x rolled by s; 2D shifts enumerate row-major.
    if x.ndim == 1:
        return np.stack([np.roll(x, s) for s in range(x.size)], axis=1)
    cols = [
        np.roll(x, (p, q), axis=(0, 1)).ravel()
        for p in range(x.shape[0])
        for q in range(x.shape[1])
    ]
    return np.stack(cols, axis=1)


def dense_circulant_ridge(x, y, lam):
    """Dense-solve oracle for the circulant ridge regression.

    Builds the explicit (block-)circulant matrix X of all circular shifts
    of ``x`` and returns (X^T X + lam I)^-1 X^T y by a direct solve.  O(N^3);
    refuses inputs above 4096 elements.  Independent of the spectral path,
    so the two can be cross-checked.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.ndim not in (1, 2):
        raise ValueError("expected 1D or 2D input")
    if x.size > _DENSE_SIZE_LIMIT:
        raise ValueError(f"dense oracle limited to {_DENSE_SIZE_LIMIT} elements, got {x.size}")
    if lam <= 0:
        raise ValueError("dense oracle requires lambda > 0")
    mat = _circulant_columns(x)
    gram = mat.T @ mat + lam * np.eye(x.size)
    w = np.linalg.solve(gram, mat.T @ y.ravel())
    return w.reshape(x.shape)
