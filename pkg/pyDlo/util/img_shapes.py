"""
Pixel coordinate conventions and small raster helpers

There are two conventions floating around for 2D images:

"Image"
First index axis is x and should be horizontal, left-to-right
Second index is y and vertical.

This is what the results files use: every serialized point is [x, y].

"Matrix"
First axis is row and is represented vertical, top-to-bottom
Second axis is column and left-to-right, hence "+x"

This is good for not overthinking indexing in your code, so everything in
memory is (row, col) and arrays are indexed arr[row, col].
Conversion only ever happens at the serialization boundary.

The 8-neighbourhood is enumerated clockwise starting north:

   7 0 1
   6 . 2
   5 4 3
"""
from __future__ import annotations

import functools
import math
import typing as typ

import numpy as np
import numpy.typing as npt
from skimage import draw

Pixel = typ.Tuple[int, int]

NEIGHBOURS_8: typ.Tuple[Pixel, ...] = ((-1, 0), (-1, 1), (0, 1), (1, 1),
                                       (1, 0), (1, -1), (0, -1), (-1, -1))


def rc_to_xy(p: typ.Sequence[int]) -> list[int]:
    return [int(p[1]), int(p[0])]


def xy_to_rc(p: typ.Sequence[int]) -> Pixel:
    return (int(p[1]), int(p[0]))


def round_half_up(v: float) -> int:
    # Python's round() is banker's rounding; pixel centers want half-up.
    return int(math.floor(v + 0.5))


def is_8_adjacent(p: Pixel, q: Pixel) -> bool:
    return p != q and abs(p[0] - q[0]) <= 1 and abs(p[1] - q[1]) <= 1


def is_4_adjacent(p: Pixel, q: Pixel) -> bool:
    return abs(p[0] - q[0]) + abs(p[1] - q[1]) == 1


def neighbours(p: Pixel, shape: typ.Tuple[int, ...]) -> typ.Iterator[Pixel]:
    r, c = p
    for dr, dc in NEIGHBOURS_8:
        rr, cc = r + dr, c + dc
        if 0 <= rr < shape[0] and 0 <= cc < shape[1]:
            yield (rr, cc)


def set_neighbours(mask: npt.NDArray[np.bool_], p: Pixel) -> list[Pixel]:
    """
        True 8-neighbours of p in mask, clockwise from north.
    """
    return [q for q in neighbours(p, mask.shape) if mask[q]]


def raster_line(p: Pixel, q: Pixel) -> list[Pixel]:
    """
        Rasterized straight segment from p to q, both ends included, p first.
    """
    rr, cc = draw.line(int(p[0]), int(p[1]), int(q[0]), int(q[1]))
    return list(zip(rr.tolist(), cc.tolist()))


@functools.lru_cache(maxsize=1024)
def disk_stencil(radius: float) -> npt.NDArray[np.int64]:
    """
        (m, 2) integer offsets (dr, dc) with dr² + dc² <= radius².

        radius 1 gives the center plus its 4-neighbourhood.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    reach = int(math.floor(radius))
    span = np.arange(-reach, reach + 1)
    dr, dc = np.meshgrid(span, span, indexing='ij')
    keep = dr**2 + dc**2 <= radius * radius + 1e-9
    return np.stack([dr[keep], dc[keep]], axis=1)


def stamp_disks(shape: typ.Tuple[int, int], centers: npt.ArrayLike,
                radii: npt.ArrayLike) -> npt.NDArray[np.bool_]:
    """
        Union of disks centered on `centers` ((n, 2) rows/cols), clipped to shape.
    """
    out = np.zeros(shape, dtype=bool)
    centers = np.asarray(centers, dtype=np.int64).reshape(-1, 2)
    radii = np.asarray(radii, dtype=np.float64).reshape(-1)
    if centers.shape[0] != radii.shape[0]:
        raise ValueError("one radius per center is required")

    for radius in np.unique(radii):
        stencil = disk_stencil(float(radius))
        pts = centers[radii == radius]
        cover = (pts[:, None, :] + stencil[None, :, :]).reshape(-1, 2)
        inside = ((cover[:, 0] >= 0) & (cover[:, 0] < shape[0]) &
                  (cover[:, 1] >= 0) & (cover[:, 1] < shape[1]))
        cover = cover[inside]
        out[cover[:, 0], cover[:, 1]] = True

    return out
