"""
    Raster renderings for inspection: instance overlays, label images and
    keypoint maps. Headless: colors come from matplotlib colormaps, the
    output is plain uint8 arrays for image_io.
"""
from __future__ import annotations

import typing as typ

import numpy as np
import numpy.typing as npt
from matplotlib import colormaps

from pyDlo.processing.keypoints import KeypointSet
from pyDlo.processing.pipeline import Crossing
from pyDlo.processing.tracer import DloInstance

CMAP = 'tab10'
OVERLAY_ALPHA = 0.55

END_COLOR = (0, 255, 0)
INTERSECTION_COLOR = (255, 0, 0)
SKELETON_COLOR = (255, 255, 255)


def instance_palette(n: int) -> npt.NDArray[np.uint8]:
    """
        (n + 1, 3) palette: black background, then cycled tab10 colors.
    """
    cmap = colormaps[CMAP]
    palette = np.zeros((n + 1, 3), dtype=np.uint8)
    for k in range(1, n + 1):
        rgba = cmap((k - 1) % cmap.N)
        palette[k] = np.rint(np.asarray(rgba[:3]) * 255)
    return palette


def label_image(instances: typ.Sequence[DloInstance],
                shape: typ.Tuple[int, int],
                crossings: typ.Sequence[Crossing] = ()) -> npt.NDArray[np.uint8]:
    """
        0 = background, k = instance k. Instances are painted by id; where two
        overlap at a crossing, the one found on top wins.
    """
    if any(inst.id > 255 for inst in instances):
        raise ValueError('label images hold at most 255 instances')
    labels = np.zeros(shape, dtype=np.uint8)
    for inst in instances:
        labels[inst.mask] = inst.id

    by_id = {inst.id: inst for inst in instances}
    for crossing in crossings:
        a, b = crossing.instances
        if crossing.top is None or a == b:
            continue
        overlap = by_id[a].mask & by_id[b].mask
        labels[overlap] = crossing.top
    return labels


def overlay(image: npt.NDArray[np.uint8], labels: npt.NDArray[np.uint8],
            centerlines: typ.Sequence[typ.Sequence[typ.Tuple[int, int]]] = ()
            ) -> npt.NDArray[np.uint8]:
    palette = instance_palette(int(labels.max(initial=0)))
    base = image.astype(np.float64) * 0.5
    colored = palette[labels].astype(np.float64)
    fg = labels > 0
    base[fg] = (1 - OVERLAY_ALPHA) * base[fg] + OVERLAY_ALPHA * colored[fg]
    out = np.clip(np.rint(base), 0, 255).astype(np.uint8)
    for path in centerlines:
        if len(path):
            pts = np.asarray(path)
            out[pts[:, 0], pts[:, 1]] = SKELETON_COLOR
    return out


def keypoint_image(sk: npt.NDArray[np.bool_],
                   kp: KeypointSet) -> npt.NDArray[np.uint8]:
    out = np.zeros(sk.shape + (3, ), dtype=np.uint8)
    out[sk] = SKELETON_COLOR
    for p in kp.ends:
        out[p] = END_COLOR
    for p in kp.intersection_pixels:
        out[p] = INTERSECTION_COLOR
    return out
