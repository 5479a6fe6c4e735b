"""Single-level Haar analysis/synthesis with exact reconstruction.

Analysis is a stride-2 correlation with four half-scaled 2x2 kernels:

    LL = 1/2 [[ 1,  1], [ 1,  1]]    HL = 1/2 [[-1,  1], [-1,  1]]
    LH = 1/2 [[-1, -1], [ 1,  1]]    HH = 1/2 [[ 1, -1], [-1,  1]]

With this normalization analysis followed by synthesis with the same
kernels is the identity, and a constant plane c yields LL = 2c with zero
high bands. Odd-sized planes are edge-replicated to even size before
analysis and cropped back after synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import GrayImage, LinearImage


@dataclass(frozen=True)
class Subbands:
    """The four half-resolution subbands of one decomposition level."""

    LL: GrayImage
    LH: GrayImage
    HL: GrayImage
    HH: GrayImage
    original_size: tuple  # (H, W) before padding

    def __post_init__(self):
        shape = self.LL.data.shape
        for band in (self.LH, self.HL, self.HH):
            if band.data.shape != shape:
                raise ValueError("subband dimensions differ")


def dwt2(plane: GrayImage) -> Subbands:
    """One analysis level; subbands are ceil(H/2) x ceil(W/2)."""
    x = plane.data
    h, w = x.shape
    if h % 2 or w % 2:
        x = np.pad(x, ((0, h % 2), (0, w % 2)), mode="edge")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return Subbands(
        LL=GrayImage((a + b + c + d) / 2.0),
        LH=GrayImage((-a - b + c + d) / 2.0),
        HL=GrayImage((-a + b - c + d) / 2.0),
        HH=GrayImage((a - b - c + d) / 2.0),
        original_size=(h, w),
    )


def idwt2(bands: Subbands) -> GrayImage:
    """Exact inverse of dwt2, cropped to the original size."""
    ll, lh = bands.LL.data, bands.LH.data
    hl, hh = bands.HL.data, bands.HH.data
    hb, wb = ll.shape
    out = np.empty((2 * hb, 2 * wb))
    out[0::2, 0::2] = (ll - lh - hl + hh) / 2.0
    out[0::2, 1::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 0::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 1::2] = (ll + lh + hl + hh) / 2.0
    h, w = bands.original_size
    return GrayImage(out[:h, :w])


def dwt2_rgb(img: LinearImage) -> tuple:
    """dwt2 applied independently per channel; returns a Subbands triple."""
    return tuple(dwt2(GrayImage(img.data[:, :, c])) for c in range(3))
