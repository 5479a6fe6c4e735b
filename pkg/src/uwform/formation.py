"""Underwater image formation: forward synthesis and closed-form restoration.

The degraded image splits into an attenuated direct signal and an additive
backscatter veil, with separate per-channel coefficients for the two paths:

    I = J * W * exp(-beta_D(z) * z) + B_inf * (1 - exp(-beta_B * z))

J is the in-air (above-surface) image, W the per-channel white point of the
ambient light at depth, z the camera-to-object range. Restoration inverts
the chain pixelwise. A legacy single-coefficient variant (shared beta for
both paths, no white point) is provided as a baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imgcore import LinearImage, RangeMap

# Floor on T*W before the restoration division; bounds noise amplification
# for distant pixels.
TAU = 1e-3


def _triple(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(-1)
    if a.size == 1:
        a = np.repeat(a, 3)
    if a.size != 3:
        raise ValueError(f"expected a per-channel triple, got {v!r}")
    return a


@dataclass(frozen=True)
class AttenuationModel:
    """Per-channel attenuation coefficient beta_D(z), 1/m.

    ``constant`` holds one coefficient per channel; ``two_exp`` evaluates
    a*exp(b*z) + c*exp(d*z) per channel with a,c >= 0 and b,d <= 0 so the
    coefficient stays non-negative for all z >= 0.
    """

    kind: str
    value: np.ndarray = field(repr=False, default=None)  # (3,) for constant
    coeffs: np.ndarray = field(repr=False, default=None)  # (3, 4) for two_exp

    @staticmethod
    def constant(value) -> "AttenuationModel":
        v = _triple(value)
        if (v < 0).any():
            raise ValueError("constant attenuation coefficients must be >= 0")
        return AttenuationModel(kind="constant", value=v)

    @staticmethod
    def two_exp(coeffs) -> "AttenuationModel":
        c = np.asarray(coeffs, dtype=np.float64)
        if c.shape != (3, 4):
            raise ValueError("two_exp expects per-channel (a, b, c, d), shape (3, 4)")
        if (c[:, [0, 2]] < 0).any() or (c[:, [1, 3]] > 0).any():
            raise ValueError("two_exp requires a,c >= 0 and b,d <= 0")
        return AttenuationModel(kind="two_exp", coeffs=c)

    def __post_init__(self):
        if self.kind not in ("constant", "two_exp"):
            raise ValueError(f"unknown attenuation model kind: {self.kind!r}")

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """beta_D at ranges z; returns z.shape + (3,)."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "constant":
            return np.broadcast_to(self.value, z.shape + (3,)).copy()
        a, b, c, d = (self.coeffs[:, i] for i in range(4))
        zz = z[..., None]
        return a * np.exp(b * zz) + c * np.exp(d * zz)

    def to_json(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value.tolist()}
        return {
            "kind": "two_exp",
            "R": self.coeffs[0].tolist(),
            "G": self.coeffs[1].tolist(),
            "B": self.coeffs[2].tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "AttenuationModel":
        kind = obj.get("kind")
        if kind == "constant":
            return AttenuationModel.constant(obj["value"])
        if kind == "two_exp":
            return AttenuationModel.two_exp([obj["R"], obj["G"], obj["B"]])
        raise ValueError(f"unknown attenuation model kind: {kind!r}")


@dataclass(frozen=True)
class WaterParams:
    """One water condition: veiling light, backscatter and attenuation
    coefficients, ambient white point, and scene depth."""

    B_inf: np.ndarray
    beta_B: np.ndarray
    beta_D: AttenuationModel
    white_point: np.ndarray
    depth_m: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "B_inf", _triple(self.B_inf))
        object.__setattr__(self, "beta_B", _triple(self.beta_B))
        object.__setattr__(self, "white_point", _triple(self.white_point))
        object.__setattr__(self, "depth_m", float(self.depth_m))
        for name in ("B_inf", "beta_B", "white_point"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"{name} contains non-finite values")
        if (self.B_inf < 0).any() or (self.B_inf > 1).any():
            raise ValueError("B_inf must lie in [0, 1]")
        if (self.beta_B < 0).any():
            raise ValueError("beta_B must be >= 0")
        if (self.white_point <= 0).any() or (self.white_point > 1).any():
            raise ValueError("white_point components must lie in (0, 1]")
        if self.depth_m < 0:
            raise ValueError("depth_m must be >= 0")

    def to_json(self) -> dict:
        return {
            "B_inf": self.B_inf.tolist(),
            "beta_B": self.beta_B.tolist(),
            "beta_D": self.beta_D.to_json(),
            "white_point": self.white_point.tolist(),
            "depth_m": self.depth_m,
        }

    @staticmethod
    def from_json(obj: dict) -> "WaterParams":
        return WaterParams(
            B_inf=obj["B_inf"],
            beta_B=obj["beta_B"],
            beta_D=AttenuationModel.from_json(obj["beta_D"]),
            white_point=obj["white_point"],
            depth_m=obj.get("depth_m", 0.0),
        )

    @staticmethod
    def identity() -> "WaterParams":
        """Water with no effect: synthesize(J) == J."""
        return WaterParams(
            B_inf=(0.0, 0.0, 0.0),
            beta_B=(0.0, 0.0, 0.0),
            beta_D=AttenuationModel.constant((0.0, 0.0, 0.0)),
            white_point=(1.0, 1.0, 1.0),
        )


@dataclass(frozen=True)
class ComponentMaps:
    """Per-pixel backscatter B and transmission T plus per-channel W."""

    B: LinearImage
    T: LinearImage
    W: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W", _triple(self.W))
        if self.B.data.shape != self.T.data.shape:
            raise ValueError("component map dimensions differ")
        if (self.T.data <= 0).any() or (self.T.data > 1).any():
            raise ValueError("transmission values must lie in (0, 1]")
        if (self.B.data < 0).any() or (self.B.data >= 1).any():
            raise ValueError("backscatter values must lie in [0, 1)")


def _check_dims(img: LinearImage, z: RangeMap):
    if img.data.shape[:2] != z.data.shape:
        raise ValueError(
            f"image {img.data.shape[:2]} and range map {z.data.shape} dimensions differ"
        )


def backscatter_map(z: RangeMap, params: WaterParams) -> LinearImage:
    """Per-pixel veil B_inf * (1 - exp(-beta_B * z)); non-decreasing in z."""
    zz = z.data[:, :, None]
    b = params.B_inf * (1.0 - np.exp(-params.beta_B * zz))
    # keep strictly below 1 when B_inf = 1 saturates in float
    return LinearImage(np.minimum(b, np.nextafter(1.0, 0.0)))


def transmission_map(z: RangeMap, beta_D: AttenuationModel) -> LinearImage:
    """Per-pixel surviving direct fraction exp(-beta_D(z) * z) in (0, 1]."""
    beta = beta_D.evaluate(z.data)
    t = np.exp(-beta * z.data[:, :, None])
    # exp() underflows to 0.0 for extreme ranges; keep strictly positive
    return LinearImage(np.maximum(t, 1e-300))


def components_from_params(z: RangeMap, params: WaterParams) -> ComponentMaps:
    """Build the component maps a given water condition induces at ranges z."""
    return ComponentMaps(
        B=backscatter_map(z, params),
        T=transmission_map(z, params.beta_D),
        W=params.white_point,
    )


def synthesize(J_s: LinearImage, z: RangeMap, params: WaterParams):
    """Forward-render an underwater image: I = J_s * W * T + B.

    Returns (I, components) where the components are exactly the B, T, W
    used, so restore(I, components) inverts the rendering.
    """
    _check_dims(J_s, z)
    comps = components_from_params(z, params)
    I = J_s.data * comps.W * comps.T.data + comps.B.data
    return LinearImage(I), comps


def synthesize_simplified(J: LinearImage, z: RangeMap, beta, B_inf) -> LinearImage:
    """Single-coefficient baseline: I = J*exp(-beta*z) + B_inf*(1-exp(-beta*z)).

    One shared beta per channel drives both attenuation and backscatter;
    kept as the ablation baseline against the split-coefficient model.
    """
    _check_dims(J, z)
    beta = _triple(beta)
    B_inf = _triple(B_inf)
    t = np.exp(-beta * z.data[:, :, None])
    return LinearImage(J.data * t + B_inf * (1.0 - t))


def _scene_radiance(I: LinearImage, components: ComponentMaps) -> np.ndarray:
    if I.data.shape != components.B.data.shape:
        raise ValueError("image and component map dimensions differ")
    denom = np.maximum(components.T.data * components.W, TAU)
    return (I.data - components.B.data) * components.W / denom


def restore(I: LinearImage, components: ComponentMaps) -> LinearImage:
    """Closed-form restoration J_s = (I - B) / (T * W), unclamped.

    The T*W denominator is floored at TAU; callers clamp at save time so
    losses and metrics see raw values. Computed as the scene radiance
    divided by W so restore == restore_scene_radiance / W holds exactly.
    """
    return LinearImage(_scene_radiance(I, components) / components.W)


def restore_scene_radiance(I: LinearImage, components: ComponentMaps) -> LinearImage:
    """Partial restoration (I - B) / T: scene radiance at depth, before the
    white-point division (same floored denominator as restore)."""
    return LinearImage(_scene_radiance(I, components))
