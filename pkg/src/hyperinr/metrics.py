"""Fidelity metrics on [0,1]-valued fields and images.

PSNR uses peak 1 by default; equal inputs return +inf rather than raising.
SSIM follows the standard windowed form (11x11 Gaussian, sigma 1.5,
K1 = 0.01, K2 = 0.03, dynamic range 1). Volumes are scored as the mean over
z-slices; RGB images are averaged to a single channel first. Images smaller
than the window fall back to whole-image statistics.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from .fields import ImageRGB, ScalarField

__all__ = ["mse", "psnr", "ssim", "metric_report"]

_WINDOW = 11
_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def _values(x) -> np.ndarray:
    if isinstance(x, ScalarField):
        return x.values
    if isinstance(x, ImageRGB):
        return x.pixels
    return np.asarray(x)


def mse(a, b) -> float:
    av, bv = _values(a), _values(b)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch: {av.shape} vs {bv.shape}")
    diff = av.astype(np.float64) - bv.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a, b, peak: float = 1.0) -> float:
    """20*log10(peak) - 10*log10(MSE); +inf when the inputs are equal."""
    err = mse(a, b)
    if err == 0.0:
        return float("inf")
    return float(20.0 * np.log10(peak) - 10.0 * np.log10(err))


def _gaussian_kernel(size: int = _WINDOW, sigma: float = _SIGMA) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-0.5 * (r / sigma) ** 2)
    return k / k.sum()


def _windowed_moments(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    t = correlate1d(img, k, axis=0, mode="nearest")
    t = correlate1d(t, k, axis=1, mode="nearest")
    r = (k.shape[0] - 1) // 2
    return t[r:-r, r:-r]  # windows fully inside the image


def _ssim_terms(
    mu_a, mu_b, var_a, var_b, cov, c1: float, c2: float
) -> np.ndarray:
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return num / den


def _ssim_2d(a: np.ndarray, b: np.ndarray) -> float:
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    c1, c2 = _K1**2, _K2**2
    if min(a.shape) < _WINDOW:
        mu_a, mu_b = a.mean(), b.mean()
        var_a, var_b = a.var(), b.var()
        cov = ((a - mu_a) * (b - mu_b)).mean()
        return float(_ssim_terms(mu_a, mu_b, var_a, var_b, cov, c1, c2))
    k = _gaussian_kernel()
    mu_a = _windowed_moments(a, k)
    mu_b = _windowed_moments(b, k)
    var_a = _windowed_moments(a * a, k) - mu_a**2
    var_b = _windowed_moments(b * b, k) - mu_b**2
    cov = _windowed_moments(a * b, k) - mu_a * mu_b
    return float(np.mean(_ssim_terms(mu_a, mu_b, var_a, var_b, cov, c1, c2)))


def ssim(a, b) -> float:
    """Structural similarity in [-1, 1]. 2-D arrays score directly; 3-D
    volumes average the per-z-slice scores; RGB images score their
    channel-mean luminance."""
    av, bv = _values(a), _values(b)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch: {av.shape} vs {bv.shape}")
    as_rgb = isinstance(a, ImageRGB) or (
        not isinstance(a, ScalarField) and av.ndim == 3 and av.shape[2] == 3
    )
    if as_rgb:
        return _ssim_2d(av.mean(axis=2), bv.mean(axis=2))
    if av.ndim == 2:
        return _ssim_2d(av, bv)
    if av.ndim == 3:
        return float(
            np.mean([_ssim_2d(av[:, :, z], bv[:, :, z]) for z in range(av.shape[2])])
        )
    raise ValueError(f"cannot score {av.ndim}-D data")


def metric_report(prediction, truth) -> dict:
    """The one scoring path shared by the CLI and the service."""
    return {"psnr": psnr(prediction, truth), "ssim": ssim(prediction, truth)}
