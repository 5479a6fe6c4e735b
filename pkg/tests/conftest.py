"""Shared builders for synthetic test scenes.

The estimator recovery tests need scenes on which the parameters are
identifiable from a single image: a range field whose value histogram is
even enough to populate every bin, a texture whose local mean is known
(the space-average illuminant step assumes it), a sprinkle of near-black
pixels in every range bin (they trace the backscatter curve), and - when
the white point is not neutral - attenuation/white-point pairs that are
consistent with the ambient light the scene actually shows.
"""

import numpy as np
import pytest

from uwform import imgcore, formation


def ramp_range(size: int, lo: float, hi: float) -> imgcore.RangeMap:
    """Left-to-right linear ramp; uniform range histogram."""
    xx = np.tile(np.linspace(0.0, 1.0, size), (size, 1))
    return imgcore.RangeMap(lo + (hi - lo) * xx)


def valley_range(size: int, lo: float, hi: float, eps: float = 0.18) -> imgcore.RangeMap:
    """Smooth V profile in x with a rounded interior minimum.

    Keeps the nearest ranges away from the image border and the field's
    curvature low, which the diffusion-based illuminant step needs.
    """
    xx = np.tile(np.linspace(-1.0, 1.0, size), (size, 1))
    v = np.sqrt(xx**2 + eps**2)
    v = (v - v.min()) / (v.max() - v.min())
    return imgcore.RangeMap(lo + (hi - lo) * v)


def textured_background(
    rng: np.random.Generator,
    size: int,
    mean,
    dark_frac: float = 0.08,
    dark_max: float = 0.005,
) -> imgcore.LinearImage:
    """High-frequency texture with per-channel local mean ``mean``.

    A checkerboard carrier keeps the local spatial average at the target
    (the sprinkle of near-black pixels is folded into the mean), so the
    gray-world assumption of the illuminant estimator holds exactly.
    """
    mean = np.asarray(mean, dtype=float)
    checker = np.indices((size, size)).sum(axis=0) % 2 * 2.0 - 1.0
    out = np.empty((size, size, 3))
    for c in range(3):
        amplitude = rng.uniform(0.6, 1.0, size=(size, size))
        out[:, :, c] = mean[c] / (1 - dark_frac) * (1.0 + 0.35 * checker * amplitude)
    dark = rng.random((size, size)) < dark_frac
    out[dark] = rng.uniform(0.0, dark_max, size=(int(dark.sum()), 3))
    return imgcore.LinearImage(np.clip(out, 0.0, 1.0))


def neutral_water(rng: np.random.Generator) -> formation.WaterParams:
    """Colored veil over neutral white point; channel-uniform attenuation."""
    bd = rng.uniform(0.15, 0.3)
    return formation.WaterParams(
        B_inf=rng.uniform(0.15, 0.55, 3),
        beta_B=rng.uniform(0.2, 0.6, 3),
        beta_D=formation.AttenuationModel.constant((bd, bd, bd)),
        white_point=(1.0, 1.0, 1.0),
    )


def cast_water(rng: np.random.Generator, z: imgcore.RangeMap):
    """Water with a non-neutral white point consistent with its attenuation.

    The line-of-sight and vertical attenuation of one water body share the
    same spectral shape, so the white point is tied to the per-channel
    attenuation at the scene's median range. Returns (params, texture mean)
    where the mean keeps the scene's ambient light identifiable.
    """
    z_med = float(np.median(z.data))
    beta_d = np.sort(rng.uniform(0.15, 0.3, 3))[::-1].copy()
    spread = beta_d.max() - beta_d.min()
    max_spread = 0.33 / z_med  # keeps white point >= ~0.72, texture <= 1
    if spread > max_spread:
        beta_d = beta_d.min() + (beta_d - beta_d.min()) * max_spread / spread
    w = np.exp(-(beta_d - beta_d.min()) * z_med)
    w /= w.max()
    params = formation.WaterParams(
        B_inf=rng.uniform(0.15, 0.55, 3),
        beta_B=rng.uniform(0.2, 0.6, 3),
        beta_D=formation.AttenuationModel.constant(beta_d),
        white_point=w,
    )
    return params, 1.0 / (2.0 * w)


def estimation_scene(rng: np.random.Generator, size: int = 64, neutral: bool = True):
    """One synthetic scene: (J, z, true WaterParams)."""
    z = valley_range(size, 2.0, 9.0)
    if neutral:
        params = neutral_water(rng)
        mean = (0.5, 0.5, 0.5)
    else:
        params, mean = cast_water(rng, z)
    J = textured_background(rng, size, mean)
    return J, z, params


def random_valid_params(rng: np.random.Generator) -> formation.WaterParams:
    """Random WaterParams keeping T*W above the restoration floor for z <= 20."""
    if rng.random() < 0.5:
        beta_d = formation.AttenuationModel.constant(rng.uniform(0.0, 0.3, 3))
    else:
        coeffs = np.column_stack(
            [
                rng.uniform(0.0, 0.15, 3),
                rng.uniform(-1.0, 0.0, 3),
                rng.uniform(0.0, 0.15, 3),
                rng.uniform(-1.0, 0.0, 3),
            ]
        )
        beta_d = formation.AttenuationModel.two_exp(coeffs)
    white = rng.uniform(0.7, 1.0, 3)
    return formation.WaterParams(
        B_inf=rng.uniform(0.0, 1.0, 3),
        beta_B=rng.uniform(0.0, 5.0, 3),
        beta_D=beta_d,
        white_point=white / white.max(),
        depth_m=rng.uniform(0.0, 20.0),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def write_dataset_dir(tmp_path, rng, n_images=2, size=24, z_lo=1.0, z_hi=3.0):
    """A directory of (in-air image, range map) pairs for pipeline tests."""
    from uwform import imgcore

    d = tmp_path / "in_air"
    d.mkdir(exist_ok=True)
    for i in range(n_images):
        img = imgcore.LinearImage(rng.random((size, size, 3)))
        imgcore.save_image(img, d / f"scene{i}.png", encode_srgb=False, bit_depth=16)
        z = imgcore.RangeMap(rng.uniform(z_lo, z_hi, (size, size)))
        imgcore.save_range(z, d / f"scene{i}.pfm")
    return d


def write_presets_file(tmp_path, include_identity=True):
    """A presets JSON with a mild and a strong water condition."""
    import json

    presets = {
        "mild": formation.WaterParams(
            (0.10, 0.15, 0.20), (0.30, 0.25, 0.20),
            formation.AttenuationModel.constant((0.15, 0.12, 0.10)),
            (0.9, 1.0, 0.95),
        ).to_json(),
        "greenish": formation.WaterParams(
            (0.10, 0.45, 0.30), (0.40, 0.50, 0.45),
            formation.AttenuationModel.constant((0.25, 0.18, 0.20)),
            (0.85, 1.0, 0.9),
        ).to_json(),
    }
    if include_identity:
        presets["identity"] = formation.WaterParams.identity().to_json()
    path = tmp_path / "presets.json"
    path.write_text(json.dumps({"presets": presets}, indent=2))
    return path
