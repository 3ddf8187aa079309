"""
    Image and mask primitives

    HSV color filtering, exact Euclidean distance transform, the Gaussian blur
    used for crossing-order sampling, and the derivation of the prune / match
    lengths from the distance map.
"""
from __future__ import annotations

import dataclasses
import math

import numba
import numpy as np
import numpy.typing as npt
from scipy import ndimage

from pyDlo.errors import EmptySceneError
from pyDlo.interfacing.hsv_config import HsvBand, HsvFilterSpec

BLUR_SIZE = 5
BLUR_SIGMA = 2.0


def _gaussian_kernel_1d(size: int, sigma: float) -> npt.NDArray[np.float64]:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2
    w = np.exp(-x**2 / (2 * sigma**2))
    return w / w.sum()


GAUSSIAN_KERNEL_1D = _gaussian_kernel_1d(BLUR_SIZE, BLUR_SIGMA)


@dataclasses.dataclass(frozen=True)
class PipelineParams:
    delta: int  # split-end prune length bound [px]
    epsilon: int  # Y-branch match distance limit [px]
    max_distance: float


def hsv_channels(image: npt.NDArray[np.uint8], hue: bool = True
                 ) -> tuple[npt.NDArray[np.float64] | None,
                            npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
        Hue [deg], saturation and value of an RGB image, as
        skimage.color.rgb2hsv computes them (ties between maximal channels go
        to blue, then green), without its per-channel fancy indexing.
        The hue is skipped (None) unless asked for.
    """
    rgb = image.astype(np.float64) / 255.0
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    val = np.maximum(np.maximum(r, g), b)
    delta = val - np.minimum(np.minimum(r, g), b)
    flat = delta == 0.0
    with np.errstate(divide='ignore', invalid='ignore'):
        sat = np.where(flat, 0.0, delta / val)
        if not hue:
            return None, sat, val
        h = np.where(b == val, 4.0 + (r - g) / delta,
                     np.where(g == val, 2.0 + (b - r) / delta,
                              (g - b) / delta))
    h = (h / 6.0) % 1.0
    h[flat] = 0.0
    return h * 360.0, sat, val


def _covers_all_hues(band: HsvBand) -> bool:
    return not band.wraps and band.h_min <= 0.0 and band.h_max >= 360.0


def color_filter(image: npt.NDArray[np.uint8],
                 spec: HsvFilterSpec) -> npt.NDArray[np.bool_]:
    """
        Foreground iff the pixel's HSV value lies in any band of spec.
    """
    if image.ndim != 3 or image.shape[2] != 3 or image.size == 0:
        raise ValueError(f'expected nonempty (H, W, 3) image, got {image.shape}')

    need_hue = not all(_covers_all_hues(band) for band in spec.bands)
    hue, sat, val = hsv_channels(image, hue=need_hue)

    mask = np.zeros(image.shape[:2], dtype=bool)
    for band in spec.bands:
        in_band = ((sat >= band.s_min) & (sat <= band.s_max) &
                   (val >= band.v_min) & (val <= band.v_max))
        if _covers_all_hues(band):
            mask |= in_band
        elif band.wraps:
            assert hue is not None
            mask |= in_band & ((hue >= band.h_min) | (hue <= band.h_max))
        else:
            assert hue is not None
            mask |= in_band & (hue >= band.h_min) & (hue <= band.h_max)

    return mask


@numba.njit(cache=True)
def _column_distances(padded: npt.NDArray[np.bool_]) -> npt.NDArray[np.float64]:
    # Squared vertical distance to the nearest background pixel, per column.
    n_rows, n_cols = padded.shape
    out = np.empty((n_rows, n_cols), dtype=np.float64)
    for c in range(n_cols):
        run = 0.0
        for r in range(n_rows):
            run = run + 1.0 if padded[r, c] else 0.0
            out[r, c] = run
        run = 0.0
        for r in range(n_rows - 1, -1, -1):
            run = run + 1.0 if padded[r, c] else 0.0
            if run < out[r, c]:
                out[r, c] = run
    return out * out


@numba.njit(cache=True)
def _row_lower_envelope(f2: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    n_rows, n_cols = f2.shape
    out = np.empty((n_rows, n_cols), dtype=np.float64)
    v = np.zeros(n_cols, dtype=np.int64)
    z = np.zeros(n_cols + 1, dtype=np.float64)
    for r in range(n_rows):
        f = f2[r]
        k = 0
        v[0] = 0
        z[0] = -np.inf
        z[1] = np.inf
        for q in range(1, n_cols):
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q -
                                                              2.0 * v[k])
            while s <= z[k]:
                k -= 1
                s = ((f[q] + q * q) -
                     (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        k = 0
        for q in range(n_cols):
            while z[k + 1] < q:
                k += 1
            out[r, q] = (q - v[k]) * (q - v[k]) + f[v[k]]
    return out


def distance_transform(mask: npt.NDArray[np.bool_]) -> npt.NDArray[np.float64]:
    """
        Exact Euclidean distance from each pixel to the nearest false pixel.

        The image is surrounded by a virtual background frame, so foreground
        touching the border still gets a finite distance. Two separable passes:
        vertical run lengths per column, then the lower envelope of parabolas
        along each row.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.size == 0:
        return np.zeros(mask.shape, dtype=np.float64)

    padded = np.pad(mask, 1)
    d2 = _row_lower_envelope(_column_distances(padded))
    return np.sqrt(d2[1:-1, 1:-1])


def compute_params(dist: npt.NDArray[np.float64]) -> PipelineParams:
    """
        delta = ceil(2 max D), epsilon = ceil(10 max D).
    """
    top = float(dist.max(initial=0.0))
    if top <= 0.0:
        raise EmptySceneError('distance map is all zero: no foreground',
                              stage='params')

    # sqrt of an integer: strip float fuzz before rounding up
    return PipelineParams(delta=math.ceil(round(2 * top, 9)),
                          epsilon=math.ceil(round(10 * top, 9)),
                          max_distance=top)


def gaussian_blur(image: npt.NDArray[np.uint8]) -> npt.NDArray[np.uint8]:
    """
        Separable 5x5 Gaussian, sigma 2, edge replication.
    """
    out = np.asarray(image, dtype=np.float64)
    for axis in (0, 1):
        out = ndimage.correlate1d(out, GAUSSIAN_KERNEL_1D, axis=axis,
                                  mode='nearest')
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
