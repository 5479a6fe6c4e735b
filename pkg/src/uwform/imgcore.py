"""Image and range-map value types plus file I/O.

Pixel data is kept as float64 numpy arrays. Color images are H x W x 3 in
linear RGB; range maps are H x W in meters. All value types are immutable
after construction (the backing arrays are marked read-only), so instances
can be shared freely across threads.

Supported formats: PNG (8/16-bit) and binary PPM for color images, PFM
(little-endian, single channel) and 16-bit single-channel PNG for range
maps. The sRGB transfer function follows IEC 61966-2-1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

# Linear sRGB -> XYZ (D65, 2 degree observer). The reference white is taken
# as the matrix image of (1,1,1) so achromatic pixels map to a* = b* = 0
# exactly instead of within matrix rounding.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE_XYZ = _RGB_TO_XYZ.sum(axis=1)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LinearImage:
    """H x W x 3 linear-RGB image, nominal display range [0, 1]."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"expected H x W x 3 image data, got shape {d.shape}")
        if not np.isfinite(d).all():
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def at(self, x: int, y: int, channel: int) -> float:
        return float(self.data[y, x, channel])


@dataclass(frozen=True)
class RangeMap:
    """H x W camera-to-object range in meters, non-negative."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"expected H x W range data, got shape {d.shape}")
        if not np.isfinite(d).all():
            raise ValueError("range map contains non-finite values")
        if (d < 0).any():
            raise ValueError("range map contains negative values")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def at(self, x: int, y: int) -> float:
        return float(self.data[y, x])


@dataclass(frozen=True)
class GrayImage:
    """H x W single-channel float plane."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"expected H x W plane, got shape {d.shape}")
        if not np.isfinite(d).all():
            raise ValueError("plane contains non-finite values")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def at(self, x: int, y: int) -> float:
        return float(self.data[y, x])


def srgb_to_linear(v: np.ndarray) -> np.ndarray:
    """Invert the sRGB electro-optical transfer function (values in [0, 1])."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(v: np.ndarray) -> np.ndarray:
    """Apply the sRGB transfer function to linear values in [0, 1]."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.0031308, v * 12.92, 1.055 * v ** (1 / 2.4) - 0.055)


def load_image(path, assume_srgb: bool = True) -> LinearImage:
    """Load an 8/16-bit PNG or binary PPM as a LinearImage.

    Pixel values are scaled to [0, 1]; when ``assume_srgb`` the sRGB
    transfer function is inverted so the result is linear RGB. Grayscale
    files are broadcast to three channels.
    """
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pgm"):
        arr, maxval = _read_pnm(path)
        scaled = arr.astype(np.float64) / maxval
    else:
        raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if raw is None:
            raise OSError(f"cannot read image file: {path}")
        if raw.dtype == np.uint8:
            scaled = raw.astype(np.float64) / 255.0
        elif raw.dtype == np.uint16:
            scaled = raw.astype(np.float64) / 65535.0
        else:
            raise ValueError(f"unsupported bit depth {raw.dtype} in {path}")
        if scaled.ndim == 3:
            scaled = scaled[:, :, 2::-1]  # BGR(A) -> RGB, alpha dropped
    if scaled.size == 0:
        raise ValueError(f"zero-dimension image: {path}")
    if scaled.ndim == 2:
        scaled = np.repeat(scaled[:, :, None], 3, axis=2)
    if assume_srgb:
        scaled = srgb_to_linear(scaled)
    return LinearImage(scaled)


def save_image(img: LinearImage, path, encode_srgb: bool = True, bit_depth: int = 16) -> None:
    """Write a LinearImage as PNG or binary PPM.

    Values are clamped to [0, 1] at save time (never earlier); 16-bit output
    round-trips linear data to within one quantization step (1/65535).
    """
    path = Path(path)
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    data = np.clip(img.data, 0.0, 1.0)
    if encode_srgb:
        data = linear_to_srgb(data)
    maxval = 255 if bit_depth == 8 else 65535
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    quant = np.rint(data * maxval).astype(dtype)
    if path.suffix.lower() == ".ppm":
        _write_pnm(path, quant, maxval)
        return
    ok = cv2.imwrite(str(path), quant[:, :, ::-1])
    if not ok:
        raise OSError(f"cannot write image file: {path}")


def load_range(path, scale: float = 0.001) -> RangeMap:
    """Load a range map from PFM (meters) or 16-bit single-channel PNG.

    PNG integer values are multiplied by ``scale`` (meters per unit,
    default millimeters). PFM values are taken as meters directly.
    """
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        arr = read_pfm(path)
        if (arr < 0).any():
            raise ValueError(f"negative range values in {path}")
        return RangeMap(arr)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"cannot read range file: {path}")
    if raw.ndim != 2:
        raise ValueError(f"range map must be single channel, got shape {raw.shape}")
    if raw.dtype != np.uint16:
        raise ValueError(f"range PNG must be 16-bit, got {raw.dtype}")
    return RangeMap(raw.astype(np.float64) * scale)


def save_range(rng_map: RangeMap, path) -> None:
    """Write a range map as little-endian single-channel PFM (meters)."""
    write_pfm(Path(path), rng_map.data)


def read_pfm(path) -> np.ndarray:
    """Read a single-channel PFM file (little- or big-endian)."""
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header == b"Pf":
            channels = 1
        elif header == b"PF":
            raise ValueError(f"range PFM must be single channel: {path}")
        else:
            raise ValueError(f"not a PFM file: {path}")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline())
        endian = "<" if scale < 0 else ">"
        data = np.frombuffer(f.read(w * h * channels * 4), dtype=endian + "f4")
    # PFM stores rows bottom-to-top
    return np.flipud(data.reshape(h, w)).astype(np.float64)


def write_pfm(path, plane: np.ndarray) -> None:
    plane = np.asarray(plane, dtype=np.float32)
    if plane.ndim != 2:
        raise ValueError("PFM writer expects a single-channel plane")
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{plane.shape[1]} {plane.shape[0]}\n".encode())
        f.write(b"-1.0\n")  # negative scale marks little-endian
        f.write(np.flipud(plane).astype("<f4").tobytes())


def _read_pnm(path: Path):
    """Binary PPM/PGM reader (P5/P6, maxval 255 or 65535, big-endian)."""
    data = path.read_bytes()
    m = re.match(rb"(P[56])\s+(?:#[^\n]*\s+)*(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise ValueError(f"unsupported PNM file: {path}")
    magic, w, h, maxval = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
    if maxval not in (255, 65535):
        raise ValueError(f"unsupported PNM bit depth (maxval {maxval}) in {path}")
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    pixels = np.frombuffer(data[m.end():], dtype=dtype, count=w * h * channels)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return pixels.reshape(shape).astype(np.float64), maxval


def _write_pnm(path: Path, quant: np.ndarray, maxval: int) -> None:
    h, w = quant.shape[:2]
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n{maxval}\n".encode())
        f.write(quant.astype(dtype).tobytes())


def to_lab(img: LinearImage):
    """Convert to CIELAB (D65, 2 degree observer); returns (L*, a*, b*) planes.

    Input is clamped to [0, 1] first. Achromatic pixels map to a* = b* = 0
    exactly because the white point is the matrix image of (1,1,1).
    """
    rgb = np.clip(img.data, 0.0, 1.0)
    xyz = rgb @ _RGB_TO_XYZ.T
    t = xyz / _WHITE_XYZ
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3 * delta**2) + 4.0 / 29.0)
    L = 116.0 * f[:, :, 1] - 16.0
    a = 500.0 * (f[:, :, 0] - f[:, :, 1])
    b = 200.0 * (f[:, :, 1] - f[:, :, 2])
    return GrayImage(L), GrayImage(a), GrayImage(b)
