"""Full- and no-reference image quality metrics.

PSNR and SSIM are standard full-reference scores (dynamic range 1.0).
UIQM and UCIQE are the usual no-reference underwater scores; the paper
trail for their components is thin, so every constant here (component
weights, trim fraction, block size) is a pinned default in MetricConfig
and can be overridden. Both evaluate to exactly 0 on constant images.

The RGB angular error measures how far known-achromatic patches stray
from the gray axis, in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .imgcore import LinearImage, to_lab


@dataclass(frozen=True)
class MetricConfig:
    # UIQM = c1*UICM + c2*UISM + c3*UIConM
    uiqm_weights: tuple = (0.0282, 0.2953, 3.5753)
    uicm_coeffs: tuple = (-0.0268, 0.1586)
    trim_alpha: float = 0.1  # symmetric trim fraction for UICM statistics
    block_size: int = 8  # EME / logAMEE block edge in pixels
    uism_weights: tuple = (0.299, 0.587, 0.114)
    plip_gamma: float = 1026.0
    # UCIQE = c1*sigma_chroma + c2*luminance_contrast + c3*mean_saturation
    uciqe_weights: tuple = (0.4680, 0.2745, 0.2576)
    eps: float = 1e-8


DEFAULT_METRIC_CONFIG = MetricConfig()

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class PatchMask:
    """Rectangular achromatic reference regions, (x, y, w, h) each."""

    patches: tuple

    def __post_init__(self):
        cleaned = []
        for p in self.patches:
            x, y, w, h = (int(v) for v in p)
            if w < 1 or h < 1:
                raise ValueError(f"patch {p} has empty extent")
            cleaned.append((x, y, w, h))
        object.__setattr__(self, "patches", tuple(cleaned))

    def validate_bounds(self, width: int, height: int) -> None:
        for x, y, w, h in self.patches:
            if x < 0 or y < 0 or x + w > width or y + h > height:
                raise ValueError(f"patch {(x, y, w, h)} outside {width}x{height} image")


def _check_pair(a: LinearImage, b: LinearImage):
    if a.data.shape != b.data.shape:
        raise ValueError(f"image dimensions differ: {a.data.shape} vs {b.data.shape}")


def psnr(a: LinearImage, b: LinearImage) -> float:
    """10*log10(1/MSE) in dB for dynamic range 1; +inf for identical images."""
    _check_pair(a, b)
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_kernel(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def ssim(a: LinearImage, b: LinearImage) -> float:
    """Mean local SSIM on the luminance plane.

    11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, L = 1; images
    are clamped to [0, 1] first. Images smaller than the window fall back
    to global statistics.
    """
    _check_pair(a, b)
    x = np.clip(a.data, 0.0, 1.0) @ _LUMA
    y = np.clip(b.data, 0.0, 1.0) @ _LUMA
    c1 = 0.01**2
    c2 = 0.03**2
    if min(x.shape) < 11:
        mx, my = x.mean(), y.mean()
        vx, vy = x.var(), y.var()
        cov = ((x - mx) * (y - my)).mean()
        return float(
            ((2 * mx * my + c1) * (2 * cov + c2))
            / ((mx**2 + my**2 + c1) * (vx + vy + c2))
        )

    kernel = _gaussian_kernel()

    def smooth(v):
        v = ndimage.correlate1d(v, kernel, axis=0, mode="nearest")
        return ndimage.correlate1d(v, kernel, axis=1, mode="nearest")

    mx, my = smooth(x), smooth(y)
    vx = smooth(x * x) - mx * mx
    vy = smooth(y * y) - my * my
    cov = smooth(x * y) - mx * my
    ssim_map = ((2 * mx * my + c1) * (2 * cov + c2)) / (
        (mx * mx + my * my + c1) * (vx + vy + c2)
    )
    pad = 5  # drop the window's boundary-affected ring
    return float(ssim_map[pad:-pad, pad:-pad].mean())


def _trimmed_stats(values: np.ndarray, alpha: float):
    v = np.sort(values.ravel())
    t = int(alpha * v.size)
    trimmed = v[t : v.size - t] if t > 0 else v
    mean = trimmed.mean()
    var = ((trimmed - mean) ** 2).mean()
    return mean, var


def _block_reduce_minmax(plane: np.ndarray, block: int):
    """Per-block (min, max) with partial tail blocks included."""
    h, w = plane.shape
    ny, nx = math.ceil(h / block), math.ceil(w / block)
    mins = np.empty((ny, nx))
    maxs = np.empty((ny, nx))
    for i in range(ny):
        for j in range(nx):
            tile = plane[i * block : (i + 1) * block, j * block : (j + 1) * block]
            mins[i, j] = tile.min()
            maxs[i, j] = tile.max()
    return mins, maxs


def _eme(plane: np.ndarray, block: int, eps: float) -> float:
    mins, maxs = _block_reduce_minmax(plane, block)
    return float(2.0 / mins.size * np.log((maxs + eps) / (mins + eps)).sum())


def _log_amee(plane: np.ndarray, block: int, gamma: float, eps: float) -> float:
    mins, maxs = _block_reduce_minmax(plane, block)
    top = gamma * (maxs - mins) / (gamma - mins)
    bottom = maxs + mins - maxs * mins / gamma
    m = np.where(bottom > 0, top / np.maximum(bottom, eps), 0.0)
    s = float(np.where(m > 0, m * np.log(m + eps), 0.0).sum())
    w = 1.0 / mins.size
    return float(gamma - gamma * (1.0 - s / gamma) ** w)


def uicm(img: LinearImage, config: MetricConfig = DEFAULT_METRIC_CONFIG) -> float:
    """Colorfulness from trimmed statistics of the RG / YB opponent planes."""
    r, g, b = img.data[:, :, 0], img.data[:, :, 1], img.data[:, :, 2]
    mean_rg, var_rg = _trimmed_stats(r - g, config.trim_alpha)
    mean_yb, var_yb = _trimmed_stats((r + g) / 2.0 - b, config.trim_alpha)
    k1, k2 = config.uicm_coeffs
    return float(
        k1 * math.sqrt(mean_rg**2 + mean_yb**2) + k2 * math.sqrt(var_rg + var_yb)
    )


def uism(img: LinearImage, config: MetricConfig = DEFAULT_METRIC_CONFIG) -> float:
    """Sharpness: EME of each Sobel-edge-masked channel, luma weighted."""
    total = 0.0
    for c, weight in enumerate(config.uism_weights):
        channel = img.data[:, :, c]
        gx = ndimage.sobel(channel, axis=0, mode="reflect")
        gy = ndimage.sobel(channel, axis=1, mode="reflect")
        masked = channel * np.hypot(gx, gy)
        total += weight * _eme(masked, config.block_size, config.eps)
    return float(total)


def uiconm(img: LinearImage, config: MetricConfig = DEFAULT_METRIC_CONFIG) -> float:
    """Contrast: logAMEE of the luminance plane over fixed blocks."""
    gray = img.data @ _LUMA
    return _log_amee(gray, config.block_size, config.plip_gamma, config.eps)


def uiqm(img: LinearImage, config: MetricConfig = DEFAULT_METRIC_CONFIG):
    """Weighted colorfulness + sharpness + contrast; returns (score, parts)."""
    parts = {
        "uicm": uicm(img, config),
        "uism": uism(img, config),
        "uiconm": uiconm(img, config),
    }
    w = config.uiqm_weights
    score = w[0] * parts["uicm"] + w[1] * parts["uism"] + w[2] * parts["uiconm"]
    return float(score), parts


def uciqe(img: LinearImage, config: MetricConfig = DEFAULT_METRIC_CONFIG):
    """Chroma spread + luminance contrast + saturation; returns (score, parts)."""
    clamped = LinearImage(np.clip(img.data, 0.0, 1.0))
    L, a, b = to_lab(clamped)
    chroma = np.hypot(a.data, b.data)
    sigma_c = float(chroma.std()) / 100.0
    con_l = float(np.percentile(L.data, 99) - np.percentile(L.data, 1)) / 100.0
    rgb = clamped.data
    v = rgb.max(axis=2)
    saturation = np.where(v > 0, (v - rgb.min(axis=2)) / np.where(v > 0, v, 1.0), 0.0)
    mu_s = float(saturation.mean())
    w = config.uciqe_weights
    parts = {"sigma_c": sigma_c, "con_l": con_l, "mu_s": mu_s}
    return float(w[0] * sigma_c + w[1] * con_l + w[2] * mu_s), parts


def rgb_error(img: LinearImage, mask: PatchMask) -> float:
    """Mean angle (degrees) between patch pixels and the gray axis.

    Per-patch pixel angles are averaged, then patches are averaged.
    Zero-norm pixels are skipped; a patch set with no usable pixels is an
    error.
    """
    if not mask.patches:
        raise ValueError("patch mask is empty")
    mask.validate_bounds(img.width, img.height)
    data = np.clip(img.data, 0.0, 1.0)
    patch_means = []
    for x, y, w, h in mask.patches:
        pixels = data[y : y + h, x : x + w].reshape(-1, 3)
        norms = np.linalg.norm(pixels, axis=1)
        usable = norms > 0
        if not usable.any():
            continue
        cosines = pixels[usable].sum(axis=1) / (math.sqrt(3.0) * norms[usable])
        angles = np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0)))
        patch_means.append(angles.mean())
    if not patch_means:
        raise ValueError("all patch pixels have zero norm; angle undefined")
    return float(np.mean(patch_means))
