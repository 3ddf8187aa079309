"""
    Seeded synthetic DLO scenes with exact ground truth

    Every DLO is a random walk of waypoints smoothed by an interpolating cubic
    spline (chord-length parameterized), stroked with a constant radius in a
    saturated color on black. DLOs are painted in draw order, so the later one
    is on top at a crossing. Instance masks are amodal: the full stroke,
    including the parts hidden under later DLOs.

    DLOs are placed one at a time, each redrawn until every crossing is a
    clean two-strand crossing: crossings well apart from each other and from
    the DLO ends, at a reasonable angle, and no two strokes touching anywhere
    else.
"""
from __future__ import annotations

import typing as typ

import dataclasses
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.interpolate import make_interp_spline
from scipy.spatial import cKDTree
from skimage import color

from pyDlo.errors import GenerationError
from pyDlo.util.img_shapes import (Pixel, raster_line, round_half_up,
                                   stamp_disks)

logg = logging.getLogger(__name__)

RADIUS_RANGE = (4.0, 10.0)
N_HUES = 12  # palette hue step 30 deg
N_WAYPOINTS = 7
MARGIN = 40
MIN_SIZE = 128
MIN_CROSSING_ANGLE = math.radians(25.0)
MAX_RETRIES = 1000  # single-DLO placements per scene
RESTART_AFTER = 50  # failed placements in a row before starting over

TIER_DLOS = {1: 1, 2: 2, 3: 3}


@dataclasses.dataclass
class SyntheticScene:
    image: npt.NDArray[np.uint8]
    masks: list[npt.NDArray[np.bool_]]  # instance k + 1 at index k
    centerlines: list[list[Pixel]]
    radii: list[float]
    colors: list[tuple[int, int, int]]
    draw_order: list[int]  # instance ids, bottom first
    seed: int | list[int] | None = None
    params: dict[str, typ.Any] = dataclasses.field(default_factory=dict)

    @property
    def n_dlos(self) -> int:
        return len(self.masks)

    def drawn_above(self, a: int, b: int) -> bool:
        """
            True if instance a was painted after instance b.
        """
        return self.draw_order.index(a) > self.draw_order.index(b)


def palette_color(hue_index: int) -> tuple[int, int, int]:
    hsv = np.array([[[hue_index / N_HUES, 1.0, 1.0]]])
    rgb = np.rint(color.hsv2rgb(hsv)[0, 0] * 255.0).astype(int)
    return (int(rgb[0]), int(rgb[1]), int(rgb[2]))


def _waypoints(rng: np.random.Generator, shape: typ.Tuple[int, int],
               curvature_scale: float) -> npt.NDArray[np.float64]:
    h, w = shape
    margin = min(MARGIN, min(h, w) // 4)
    lo = np.array([margin, margin], dtype=np.float64)
    hi = np.array([h - margin, w - margin], dtype=np.float64)
    step = min(h, w) / 5.0
    center = np.array([h / 2.0, w / 2.0])

    pos = rng.uniform(lo, hi)
    heading = rng.uniform(0.0, 2 * math.pi)
    pts = [pos]
    for _ in range(N_WAYPOINTS - 1):
        heading += rng.normal(0.0, curvature_scale * math.pi)
        nxt = pos + step * np.array([math.sin(heading), math.cos(heading)])
        if np.any(nxt < lo) or np.any(nxt > hi):
            to_center = center - pos
            heading = math.atan2(to_center[0], to_center[1]) + rng.normal(
                    0.0, 0.3)
            nxt = pos + step * np.array([math.sin(heading), math.cos(heading)])
        pts.append(nxt)
        pos = nxt
    return np.asarray(pts)


def spline_centerline(waypoints: npt.NDArray[np.float64],
                      shape: typ.Tuple[int, int]) -> list[Pixel]:
    """
        8-connected pixel chain along the cubic spline through waypoints.
    """
    chords = np.hypot(*np.diff(waypoints, axis=0).T)
    t = np.concatenate([[0.0], np.cumsum(chords)])
    spline = make_interp_spline(t, waypoints, k=3)
    dense = spline(np.linspace(0.0, t[-1], int(math.ceil(t[-1] * 2)) + 1))
    dense[:, 0] = np.clip(dense[:, 0], 0, shape[0] - 1)
    dense[:, 1] = np.clip(dense[:, 1], 0, shape[1] - 1)

    pixels: list[Pixel] = []
    for r, c in dense:
        p = (round_half_up(float(r)), round_half_up(float(c)))
        if not pixels:
            pixels.append(p)
        elif p != pixels[-1]:
            pixels.extend(raster_line(pixels[-1], p)[1:])
    return pixels


@dataclasses.dataclass
class _CrossingPoint:
    point: npt.NDArray[np.float64]
    curves: typ.Tuple[int, int]
    arcs: typ.Tuple[int, int]  # positions along each dense centerline
    sin_angle: float


def segment_crossings(poly_a: npt.NDArray[np.float64],
                      poly_b: npt.NDArray[np.float64],
                      same: bool = False) -> list[tuple]:
    """
        Proper crossings between polylines a and b as (point, i, j, sin angle)
        with i, j segment indices. same=True: a self-crossing search on one
        polyline, skipping adjacent segments.
    """
    a, r = poly_a[:-1], np.diff(poly_a, axis=0)
    c, s = poly_b[:-1], np.diff(poly_b, axis=0)
    denom = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
    qp = c[None, :, :] - a[:, None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        t = (qp[..., 0] * s[None, :, 1] - qp[..., 1] * s[None, :, 0]) / denom
        u = (qp[..., 0] * r[:, None, 1] - qp[..., 1] * r[:, None, 0]) / denom
    hit = (np.abs(denom) > 1e-12) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    if same:
        i_idx, j_idx = np.indices(hit.shape)
        hit &= j_idx >= i_idx + 2

    out = []
    for i, j in zip(*np.nonzero(hit)):
        point = a[i] + t[i, j] * r[i]
        norms = np.hypot(*r[i]) * np.hypot(*s[j])
        out.append((point, int(i), int(j), abs(float(denom[i, j])) / norms))
    return out


def _layout_ok(centerlines: typ.Sequence[list[Pixel]],
               radii: typ.Sequence[float], step: int = 4) -> bool:
    top = max(radii)
    polys = [np.asarray(cl[::step] + [cl[-1]], dtype=np.float64)
             for cl in centerlines]

    crossings: list[_CrossingPoint] = []
    for ka in range(len(polys)):
        for kb in range(ka, len(polys)):
            for point, i, j, sin_angle in segment_crossings(
                    polys[ka], polys[kb], same=ka == kb):
                crossings.append(
                        _CrossingPoint(point, (ka, kb), (i * step, j * step),
                                       sin_angle))

    # crossing rules scale with the two strokes that cross
    local = np.array([max(radii[cr.curves[0]], radii[cr.curves[1]])
                      for cr in crossings])
    for cr, r in zip(crossings, local):
        if cr.sin_angle < math.sin(MIN_CROSSING_ANGLE):
            return False
        for k, arc in zip(cr.curves, cr.arcs):
            if min(arc, len(centerlines[k]) - arc) < 6 * r:
                return False
        if cr.curves[0] == cr.curves[1] and abs(cr.arcs[1] -
                                                cr.arcs[0]) < 8 * r:
            return False
    points = np.asarray([cr.point for cr in crossings]).reshape(-1, 2)
    if len(points) > 1:
        gaps, nearest = cKDTree(points).query(points, k=2)
        pair_r = np.maximum(local, local[nearest[:, 1]])
        if np.any(gaps[:, 1] < 4 * pair_r + 2):
            return False

    # Anywhere away from a crossing, strokes must stay apart.
    reach = 2 * top + 3
    zone = reach / math.sin(MIN_CROSSING_ANGLE) + 2
    labels = np.concatenate([
            np.stack([np.full(len(cl), k), np.arange(len(cl))], axis=1)
            for k, cl in enumerate(centerlines)
    ])
    dense = np.concatenate(
            [np.asarray(cl, dtype=np.float64) for cl in centerlines])
    pairs = cKDTree(dense).query_pairs(reach, output_type='ndarray')
    if len(pairs) == 0:
        return True
    la, lb = labels[pairs[:, 0]], labels[pairs[:, 1]]
    r_sum = np.asarray(radii)[la[:, 0]] + np.asarray(radii)[lb[:, 0]]
    apart = np.hypot(*(dense[pairs[:, 0]] - dense[pairs[:, 1]]).T)
    along = (la[:, 0] == lb[:, 0]) & (np.abs(la[:, 1] - lb[:, 1]) <= 2 * reach)
    close = pairs[~along & (apart <= r_sum + 3)]
    if len(close) == 0:
        return True
    if len(points) == 0:
        return False
    near = cKDTree(points).query(dense[close].reshape(-1, 2))[0]
    return bool(np.all(near <= zone))


def compose_scene(shape: typ.Tuple[int, int],
                  centerlines: typ.Sequence[list[Pixel]],
                  radii: typ.Sequence[float],
                  colors: typ.Sequence[tuple[int, int, int]],
                  seed: int | list[int] | None = None,
                  params: dict[str, typ.Any] | None = None) -> SyntheticScene:
    """
        Paint strokes on black in list order; instance k + 1 is centerlines[k].
    """
    image = np.zeros(tuple(shape) + (3, ), dtype=np.uint8)
    masks = []
    for cl, radius, rgb in zip(centerlines, radii, colors):
        mask = stamp_disks(shape, cl, np.full(len(cl), radius))
        image[mask] = rgb
        masks.append(mask)
    return SyntheticScene(image=image, masks=masks,
                          centerlines=[list(cl) for cl in centerlines],
                          radii=[float(r) for r in radii],
                          colors=[tuple(c) for c in colors],
                          draw_order=list(range(1, len(masks) + 1)), seed=seed,
                          params=dict(params or {}))


def generate_scene(seed: int | typ.Sequence[int],
                   n_dlos: int,
                   width: int = 896,
                   height: int = 672,
                   curvature_scale: float = 0.25,
                   max_retries: int = MAX_RETRIES) -> SyntheticScene:
    """
        Deterministic scene for (seed, parameters).

        Raises GenerationError when the layout is not complete after
        max_retries single-DLO placements.
    """
    if not 1 <= n_dlos <= N_HUES:
        raise ValueError(f'n_dlos must be in [1, {N_HUES}]')
    if width < MIN_SIZE or height < MIN_SIZE:
        raise ValueError(f'scene must be at least {MIN_SIZE}x{MIN_SIZE}')
    if curvature_scale < 0:
        raise ValueError('curvature_scale must be >= 0')

    shape = (height, width)
    rng = np.random.default_rng(seed)
    hues = rng.permutation(N_HUES)[:n_dlos]
    colors = [palette_color(int(h)) for h in hues]

    radii: list[float] = []
    centerlines: list[list[Pixel]] = []
    attempts = misses = 0
    while len(centerlines) < n_dlos:
        if attempts >= max_retries:
            raise GenerationError(
                    f'no valid {n_dlos}-DLO layout after {max_retries} '
                    f'attempts (seed {seed})', stage='generation')
        attempts += 1
        radius = float(rng.uniform(*RADIUS_RANGE))
        cl = spline_centerline(_waypoints(rng, shape, curvature_scale), shape)
        if _layout_ok(centerlines + [cl], radii + [radius]):
            centerlines.append(cl)
            radii.append(radius)
            misses = 0
            continue
        misses += 1
        if misses >= RESTART_AFTER:
            # an early DLO leaves no room for the rest
            centerlines, radii, misses = [], [], 0

    logg.debug('seed %s: layout accepted after %d attempts', seed, attempts)
    return compose_scene(
            shape, centerlines, radii, colors,
            seed=seed if isinstance(seed, int) else [int(s) for s in seed],
            params=dict(n_dlos=n_dlos, width=width, height=height,
                        curvature_scale=curvature_scale))
