"""Water parameter estimation from a real underwater image plus range map.

The pipeline follows the classic depth-binned approach: the darkest pixels
per range bin trace the backscatter curve; subtracting the fitted veil
leaves the direct signal, whose local space average estimates the ambient
illuminant; log-ratios of illuminant to range give pointwise attenuation
coefficients that are binned, medianed, and fit with a two-term
exponential; the white point is read off the illuminant in a band around
the median range.

All estimates are deterministic for a fixed config seed (the only
randomness is the multi-start initialization of the bounded fits).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from . import fitting
from .formation import AttenuationModel, ComponentMaps, WaterParams, backscatter_map, transmission_map
from .imgcore import LinearImage, RangeMap


class EstimationInfeasibleError(RuntimeError):
    """Raised when an image/range pair cannot support estimation."""


@dataclass(frozen=True)
class EstimationConfig:
    n_bins: int = 10
    percentile: float = 0.01  # darkest fraction kept per range bin
    z_eps: float = 0.1  # meters; nearer pixels are ignored
    illuminant_p: float = 0.01  # diffusion blend factor
    illuminant_iterations: int | None = None  # default 2 * max(H, W)
    n_starts: int = 20
    seed: int = 0
    depth_m: float = 0.0


DEFAULT_CONFIG = EstimationConfig()

# Parameter boxes for the bounded fits.
_BACKSCATTER_LO = np.array([0.0, 0.0, 0.0, 0.0])  # B_inf, beta_B, J', beta'
_BACKSCATTER_HI = np.array([1.0, 5.0, 1.0, 5.0])
_ATTENUATION_LO = np.array([0.0, -5.0, 0.0, -5.0])  # a, b, c, d
_ATTENUATION_HI = np.array([5.0, 0.0, 5.0, 0.0])

_MIN_BIN_SAMPLES = 5


@dataclass(frozen=True)
class RangeBinStats:
    """Darkest-pixel statistics per range bin."""

    bin_edges: np.ndarray  # (n_bins + 1,) in meters
    indices: tuple  # per non-empty bin: flat pixel indices of retained pixels
    mean_z: np.ndarray  # (n_used,) mean range of retained pixels
    channel_min: np.ndarray  # (n_used, 3) per-channel minimum in each bin
    dark_z: np.ndarray  # (n_total,) ranges of all retained pixels
    dark_rgb: np.ndarray  # (n_total, 3) colors of all retained pixels

    @property
    def n_bins_used(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class BackscatterFit:
    """Per-channel veil parameters plus nuisance residual terms."""

    B_inf: np.ndarray  # (3,) in [0, 1]
    beta_B: np.ndarray  # (3,) in [0, 5] 1/m
    residual_J: np.ndarray  # (3,) in [0, 1]
    residual_beta: np.ndarray  # (3,) in [0, 5] 1/m
    rms_error: np.ndarray  # (3,) fit residual per channel


def _bin_index(z: np.ndarray, lo: float, hi: float, n_bins: int) -> np.ndarray:
    width = (hi - lo) / n_bins
    if width <= 0:
        return np.zeros(z.shape, dtype=np.intp)
    idx = np.floor((z - lo) / width).astype(np.intp)
    return np.clip(idx, 0, n_bins - 1)


def collect_dark_pixels(
    I: LinearImage,
    z: RangeMap,
    n_bins: int = DEFAULT_CONFIG.n_bins,
    percentile: float = DEFAULT_CONFIG.percentile,
    z_eps: float = DEFAULT_CONFIG.z_eps,
) -> RangeBinStats:
    """Partition ranges into equal-width bins and keep the darkest pixels.

    Within each bin the darkest ``percentile`` fraction by RGB sum is
    retained (at least 5 pixels; bins with fewer than 5 candidates are
    dropped). Raises EstimationInfeasibleError with fewer than 2 usable
    bins.
    """
    if I.data.shape[:2] != z.data.shape:
        raise ValueError("image and range map dimensions differ")
    flat_rgb = I.data.reshape(-1, 3)
    flat_z = z.data.reshape(-1)
    valid = flat_z >= z_eps
    if not valid.any():
        raise EstimationInfeasibleError("no pixels with usable range (all nearer than z_eps)")
    lo = max(float(flat_z[valid].min()), z_eps)
    hi = float(flat_z[valid].max())
    edges = np.linspace(lo, hi, n_bins + 1)
    bins = _bin_index(flat_z, lo, hi, n_bins)
    brightness = flat_rgb.sum(axis=1)

    indices, mean_z, channel_min = [], [], []
    for b in range(n_bins):
        members = np.nonzero(valid & (bins == b))[0]
        if members.size < _MIN_BIN_SAMPLES:
            continue
        keep = max(ceil(percentile * members.size), _MIN_BIN_SAMPLES)
        order = np.argsort(brightness[members], kind="stable")
        chosen = members[order[:keep]]
        indices.append(chosen)
        mean_z.append(flat_z[chosen].mean())
        channel_min.append(flat_rgb[chosen].min(axis=0))
    if len(indices) < 2:
        raise EstimationInfeasibleError(
            f"only {len(indices)} usable range bins; need at least 2"
        )
    all_idx = np.concatenate(indices)
    return RangeBinStats(
        bin_edges=edges,
        indices=tuple(indices),
        mean_z=np.array(mean_z),
        channel_min=np.array(channel_min),
        dark_z=flat_z[all_idx],
        dark_rgb=flat_rgb[all_idx],
    )


def _backscatter_residual(z, obs):
    def residual(p):
        b_inf, beta_b, j_res, beta_res = p
        return b_inf * (1.0 - np.exp(-beta_b * z)) + j_res * np.exp(-beta_res * z) - obs

    def jacobian(p):
        b_inf, beta_b, j_res, beta_res = p
        e_b = np.exp(-beta_b * z)
        e_r = np.exp(-beta_res * z)
        return np.stack([1.0 - e_b, b_inf * z * e_b, e_r, -j_res * z * e_r], axis=1)

    return residual, jacobian


def fit_backscatter(stats: RangeBinStats, config: EstimationConfig = DEFAULT_CONFIG) -> BackscatterFit:
    """Fit B_inf*(1-exp(-beta_B*z)) + J'*exp(-beta'*z) per channel.

    The nuisance term absorbs the residual direct signal of dark pixels
    that are not perfectly black. Multi-start bounded Levenberg-Marquardt;
    best start wins.
    """
    rng = np.random.default_rng(config.seed)
    z = stats.dark_z
    out = np.empty((4, 3))
    rms = np.empty(3)
    for c in range(3):
        residual, jacobian = _backscatter_residual(z, stats.dark_rgb[:, c])
        result = fitting.multi_start_fit(
            residual, jacobian, _BACKSCATTER_LO, _BACKSCATTER_HI, rng, config.n_starts
        )
        if result is None:
            raise EstimationInfeasibleError("backscatter fit diverged for all starts")
        out[:, c] = result.params
        rms[c] = np.sqrt(result.cost / z.size)
    return BackscatterFit(
        B_inf=out[0], beta_B=out[1], residual_J=out[2], residual_beta=out[3], rms_error=rms
    )


def estimate_illuminant(
    D: LinearImage,
    iterations: int | None = None,
    p: float = DEFAULT_CONFIG.illuminant_p,
) -> LinearImage:
    """Local space average color of the direct signal, times 2.

    Iterative diffusion E <- (1-p) * (4-neighbor mean of E) + p * D with
    edge-replicate boundaries, initialized at the channel means of D. The
    factor 2 converts average reflectance to illuminant. Output values lie
    in [2*min(D), 2*max(D)] per channel.
    """
    d = np.maximum(D.data, 0.0)
    if iterations is None:
        iterations = 2 * max(d.shape[0], d.shape[1])
    e = np.broadcast_to(d.mean(axis=(0, 1)), d.shape).copy()
    for _ in range(iterations):
        padded = np.pad(e, ((1, 1), (1, 1), (0, 0)), mode="edge")
        neighbor_mean = (
            padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
        ) / 4.0
        e = (1.0 - p) * neighbor_mean + p * d
    return LinearImage(2.0 * e)


def _attenuation_residual(z, obs):
    def residual(p):
        a, b, c, d = p
        return a * np.exp(b * z) + c * np.exp(d * z) - obs

    def jacobian(p):
        a, b, c, d = p
        e_b = np.exp(b * z)
        e_d = np.exp(d * z)
        return np.stack([e_b, a * z * e_b, e_d, c * z * e_d], axis=1)

    return residual, jacobian


def fit_attenuation(
    E_hat: LinearImage,
    z: RangeMap,
    n_bins: int = DEFAULT_CONFIG.n_bins,
    config: EstimationConfig = DEFAULT_CONFIG,
) -> AttenuationModel:
    """Fit the range-dependent attenuation coefficient from the illuminant.

    Pointwise beta = -ln(E)/z is medianed per range bin and the two-term
    exponential a*exp(b*z) + c*exp(d*z) is fit to the medians at the bin
    centers. Falls back to a constant model (median of all pointwise
    values, floored at 0) when fewer than 3 bins are usable.
    """
    if E_hat.data.shape[:2] != z.data.shape:
        raise ValueError("illuminant and range map dimensions differ")
    flat_e = E_hat.data.reshape(-1, 3)
    flat_z = z.data.reshape(-1)
    valid = (flat_z >= config.z_eps) & (flat_e > 0).all(axis=1)
    if valid.sum() <= 0.1 * flat_z.size:
        raise EstimationInfeasibleError("more than 90% of pixels unusable for attenuation fit")
    zv = flat_z[valid]
    beta_pt = -np.log(flat_e[valid]) / zv[:, None]

    lo, hi = float(zv.min()), float(zv.max())
    bins = _bin_index(zv, lo, hi, n_bins)
    centers, medians = [], []
    edges = np.linspace(lo, hi, n_bins + 1)
    for b in range(n_bins):
        members = bins == b
        if not members.any():
            continue
        centers.append(0.5 * (edges[b] + edges[b + 1]))
        medians.append(np.median(beta_pt[members], axis=0))
    if len(centers) < 3:
        return AttenuationModel.constant(np.maximum(np.median(beta_pt, axis=0), 0.0))

    centers = np.array(centers)
    medians = np.array(medians)  # (n_used, 3)
    rng = np.random.default_rng(config.seed)
    coeffs = np.empty((3, 4))
    for c in range(3):
        residual, jacobian = _attenuation_residual(centers, medians[:, c])
        result = fitting.multi_start_fit(
            residual, jacobian, _ATTENUATION_LO, _ATTENUATION_HI, rng, config.n_starts
        )
        if result is None:
            raise EstimationInfeasibleError("attenuation fit diverged for all starts")
        coeffs[c] = result.params
    return AttenuationModel.two_exp(coeffs)


def estimate_white_point(E_hat: LinearImage, z: RangeMap) -> np.ndarray:
    """Per-channel white point: mean illuminant in a band around the median
    range, normalized so the largest channel equals 1."""
    if E_hat.data.shape[:2] != z.data.shape:
        raise ValueError("illuminant and range map dimensions differ")
    flat_e = E_hat.data.reshape(-1, 3)
    flat_z = z.data.reshape(-1)
    z_med = float(np.median(flat_z))
    band = np.abs(flat_z - z_med) <= 0.1 * z_med
    if not band.any():
        band = np.ones_like(flat_z, dtype=bool)
    w = flat_e[band].mean(axis=0)
    peak = w.max()
    if peak <= 0:
        return np.ones(3)
    return np.clip(w / peak, np.finfo(np.float64).tiny, 1.0)


def estimate_water_params(
    I: LinearImage, z: RangeMap, config: EstimationConfig = DEFAULT_CONFIG
):
    """Full estimation pipeline; returns (WaterParams, ComponentMaps)."""
    params, components, _ = estimate_with_diagnostics(I, z, config)
    return params, components


def estimate_with_diagnostics(
    I: LinearImage, z: RangeMap, config: EstimationConfig = DEFAULT_CONFIG
):
    """As estimate_water_params, plus a diagnostics dict for reporting."""
    stats = collect_dark_pixels(I, z, config.n_bins, config.percentile, config.z_eps)
    bfit = fit_backscatter(stats, config)
    params_b = WaterParams(
        B_inf=np.clip(bfit.B_inf, 0.0, 1.0),
        beta_B=bfit.beta_B,
        beta_D=AttenuationModel.constant((0.0, 0.0, 0.0)),  # placeholder
        white_point=(1.0, 1.0, 1.0),
    )
    b_map = backscatter_map(z, params_b)
    D = LinearImage(np.maximum(I.data - b_map.data, 0.0))
    e_hat = estimate_illuminant(D, config.illuminant_iterations, config.illuminant_p)
    beta_d = fit_attenuation(e_hat, z, config.n_bins, config)
    white = estimate_white_point(e_hat, z)
    params = WaterParams(
        B_inf=np.clip(bfit.B_inf, 0.0, 1.0),
        beta_B=bfit.beta_B,
        beta_D=beta_d,
        white_point=white,
        depth_m=config.depth_m,
    )
    components = ComponentMaps(
        B=b_map, T=transmission_map(z, beta_d), W=params.white_point
    )
    diagnostics = {
        "backscatter_rms_error": bfit.rms_error.tolist(),
        "backscatter_residual_J": bfit.residual_J.tolist(),
        "backscatter_residual_beta": bfit.residual_beta.tolist(),
        "bins_used": stats.n_bins_used,
        "dark_pixels": int(stats.dark_z.size),
        "seed": config.seed,
    }
    return params, components, diagnostics
