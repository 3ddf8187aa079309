"""
    Centerline tracing, crossing order and mask rendering

    Tracing is end-driven: starting from every true end, walk the skeleton
    until another true end. Arriving on a generated intersection end, the walk
    continues along the precomputed strand through the crossing center and
    resumes on the far side.

    Intersection patch pixels are never walked as segments; they are only
    reached through strands, and a crossing's center is shared by both of its
    strands.
"""
from __future__ import annotations

import typing as typ

import collections
import dataclasses
import itertools
import logging

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from pyDlo.errors import (DimensionMismatchError, DisconnectedCycleError,
                          TopologyError)
from pyDlo.processing.intersections import Intersection
from pyDlo.util.img_shapes import (Pixel, is_4_adjacent, is_8_adjacent,
                                   set_neighbours, stamp_disks)

logg = logging.getLogger(__name__)

RADIUS_WINDOW = 5
MIN_RADIUS = 1.0


@dataclasses.dataclass
class CenterlinePath:
    pixels: list[Pixel]
    # True where the pixel was drawn as part of an intersection patch.
    patch_flags: list[bool]
    # (intersection index, strand index) in traversal order.
    strands: list[typ.Tuple[int, int]] = dataclasses.field(
            default_factory=list)
    cyclic: bool = False

    def __len__(self) -> int:
        return len(self.pixels)


@dataclasses.dataclass(frozen=True)
class CrossingRecord:
    center: Pixel
    intersection: int
    first: int  # strand index
    second: int
    top: int  # strand index resting on top, one of first / second


@dataclasses.dataclass
class DloInstance:
    id: int
    centerline: CenterlinePath
    radii: npt.NDArray[np.float64]
    mask: npt.NDArray[np.bool_]
    crossings: list[CrossingRecord] = dataclasses.field(default_factory=list)


class _Tracer:

    def __init__(self, sk: npt.NDArray[np.bool_], ends: typ.Iterable[Pixel],
                 inters: typ.Sequence[Intersection]) -> None:
        self.sk = sk
        self.ends = set(ends)
        self.inters = inters
        self.patch: set[Pixel] = set()
        # generated end -> [(intersection, strand, traverse reversed)]
        self.strand_at: dict[Pixel, list[typ.Tuple[int, int, bool]]] = (
                collections.defaultdict(list))
        for i, inter in enumerate(inters):
            self.patch |= inter.patch_pixels
            for s, path in enumerate(inter.through_paths):
                self.strand_at[path[0]].append((i, s, False))
                if inter.energy_pairing[s][1] is not None:
                    self.strand_at[path[-1]].append((i, s, True))
        self.claimed: set[Pixel] = set()
        self.used: set[typ.Tuple[int, int]] = set()

    def open_neighbours(self, p: Pixel) -> list[Pixel]:
        return [
                q for q in set_neighbours(self.sk, p)
                if q not in self.patch and q not in self.claimed
        ]

    def _is_node(self, p: Pixel) -> bool:
        return p in self.ends or p in self.strand_at

    def next_pixel(self, cur: Pixel, free: bool = False) -> Pixel | None:
        """
            Unique continuation from cur.

            Mutually adjacent candidates (a staircase corner) are taken
            corner first, so no pixel is skipped. Two independent live
            continuations are a branch the repair step missed.
        """
        cands = self.open_neighbours(cur)
        if not cands:
            return None
        onward = {q: len([r for r in self.open_neighbours(q) if r != cur])
                  for q in cands}
        if not free:
            live = [q for q in cands if onward[q] > 0]
            for a, b in itertools.combinations(live, 2):
                if not is_8_adjacent(a, b):
                    raise TopologyError('skeleton branches outside of an '
                                        'intersection', stage='tracing',
                                        pixel=cur)
        return min(cands,
                   key=lambda q: (self._is_node(q), onward[q] == 0, onward[q],
                                  not is_4_adjacent(cur, q), q))

    def trace_from(self, start: Pixel, free_start: bool = False) -> CenterlinePath:
        path = CenterlinePath([start], [False])
        self.claimed.add(start)
        cur = start
        owner: int | None = None  # intersection whose strand brought us here
        free = free_start

        while True:
            opts = [
                    o for o in self.strand_at.get(cur, ())
                    if (o[0], o[1]) not in self.used and o[0] != owner
            ]
            if opts:
                i, s, rev = min(opts)
                self.used.add((i, s))
                path.strands.append((i, s))
                seq = self.inters[i].through_paths[s]
                if rev:
                    seq = seq[::-1]
                for p in seq[1:-1]:
                    path.pixels.append(p)
                    path.patch_flags.append(p in self.patch)
                last = seq[-1]
                if self.inters[i].energy_pairing[s][1] is None:
                    # stub strand: this DLO ends on top of the other one
                    path.pixels.append(last)
                    path.patch_flags.append(True)
                    break
                if last in self.claimed:
                    path.cyclic = last == start
                    break
                path.pixels.append(last)
                path.patch_flags.append(False)
                self.claimed.add(last)
                cur, owner = last, i
                continue

            nxt = self.next_pixel(cur, free)
            free = False
            if nxt is None:
                if (len(path) > 2 and start not in self.ends and
                        is_8_adjacent(cur, start)):
                    path.cyclic = True
                elif cur not in self.ends and cur not in self.strand_at:
                    logg.debug('path from %s stops at %s', start, cur)
                break
            path.pixels.append(nxt)
            path.patch_flags.append(False)
            self.claimed.add(nxt)
            cur, owner = nxt, None
            if cur in self.ends:
                break

        return path

    def leftover(self) -> set[Pixel]:
        rows, cols = np.nonzero(self.sk)
        return {
                p
                for p in zip(rows.tolist(), cols.tolist())
                if p not in self.patch and p not in self.claimed
        }


def _component(start: Pixel, pool: set[Pixel]) -> set[Pixel]:
    comp = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                q = (p[0] + dr, p[1] + dc)
                if q in pool and q not in comp:
                    comp.add(q)
                    stack.append(q)
    return comp


def trace_all(sk: npt.NDArray[np.bool_],
              ends: typ.Iterable[Pixel],
              inters: typ.Sequence[Intersection],
              allow_cycles: bool = False) -> list[CenterlinePath]:
    """
        One ordered centerline per DLO.

        Raises TopologyError if the skeleton branches outside an intersection,
        DisconnectedCycleError if a closed loop without any end remains and
        allow_cycles is False. With allow_cycles, such loops are traced from
        their smallest pixel and flagged cyclic.
    """
    tracer = _Tracer(sk, ends, inters)
    paths: list[CenterlinePath] = []

    for e in sorted(tracer.ends):
        if e not in tracer.claimed:
            paths.append(tracer.trace_from(e))

    # generated ends whose arm was cut down to nothing
    for g in sorted(tracer.strand_at):
        if g not in tracer.claimed and not tracer.open_neighbours(g):
            paths.append(tracer.trace_from(g))

    pool = tracer.leftover()
    while pool:
        comp = _component(min(pool), pool)
        tips = sorted(
                p for p in comp
                if len([q for q in tracer.open_neighbours(p) if q in comp]) <= 1)
        if tips:
            gen_tips = [p for p in tips if p in tracer.strand_at]
            path = tracer.trace_from(min(gen_tips or tips))
            if path.cyclic and not allow_cycles:
                raise DisconnectedCycleError(
                        'closed loop without an end', stage='tracing',
                        pixel=path.pixels[0])
            paths.append(path)
        else:
            if not allow_cycles:
                raise DisconnectedCycleError('closed loop without an end',
                                             stage='tracing', pixel=min(comp))
            logg.warning('closed loop at %s traced without an end', min(comp))
            paths.append(tracer.trace_from(min(comp), free_start=True))
        pool = tracer.leftover()

    logg.debug('traced %d paths', len(paths))
    return paths


def _sample_pixels(inter: Intersection, s: int) -> list[Pixel]:
    i, j = inter.energy_pairing[s]
    pixels = list(inter.through_paths[s]) + list(inter.arm_tails[i])
    if j is not None:
        pixels += list(inter.arm_tails[j])
    return pixels


def crossing_scores(blurred: npt.NDArray[np.uint8],
                    inter: Intersection) -> list[float]:
    """
        Per strand: sum over RGB channels of the population standard
        deviation of the blurred image along the strand and its arm tails.
    """
    scores = []
    for s in range(len(inter.through_paths)):
        pixels = np.asarray(_sample_pixels(inter, s), dtype=np.int64)
        if (pixels.min() < 0 or pixels[:, 0].max() >= blurred.shape[0] or
                pixels[:, 1].max() >= blurred.shape[1]):
            raise DimensionMismatchError(
                    f'crossing at {inter.center} lies outside the '
                    f'{blurred.shape[:2]} image', stage='crossing_order',
                    pixel=inter.center)
        values = blurred[pixels[:, 0], pixels[:, 1]].astype(np.float64)
        scores.append(float(values.reshape(len(pixels), -1).std(axis=0).sum()))
    return scores


def determine_crossing_order(blurred: npt.NDArray[np.uint8],
                             inter: Intersection,
                             index: int = 0) -> CrossingRecord:
    """
        The strand with the more uniform color is on top; ties go to the
        first strand.
    """
    if len(inter.through_paths) < 2:
        raise ValueError('crossing order needs two strands')
    scores = crossing_scores(blurred, inter)
    top = 1 if round(scores[1], 9) < round(scores[0], 9) else 0
    return CrossingRecord(center=inter.center, intersection=index, first=0,
                          second=1, top=top)


def path_radii(path: CenterlinePath, dist: npt.NDArray[np.float64],
               radius_offset: float = 0.0) -> npt.NDArray[np.float64]:
    """
        Render radius along a centerline.

        Distance samples minus radius_offset; runs of patch pixels (whose
        distance reflects the merged crossing blob) take the median of the
        nearest non-patch samples on both sides. Median-filtered over
        RADIUS_WINDOW and floored at MIN_RADIUS.
    """
    pixels = np.asarray(path.pixels, dtype=np.int64).reshape(-1, 2)
    raw = dist[pixels[:, 0], pixels[:, 1]].astype(np.float64) - radius_offset
    flags = np.asarray(path.patch_flags, dtype=bool)

    if flags.any() and not flags.all():
        solid = np.flatnonzero(~flags)
        labels, n_runs = ndimage.label(flags)
        for run in range(1, n_runs + 1):
            idx = np.flatnonzero(labels == run)
            before = solid[solid < idx[0]][-RADIUS_WINDOW:]
            after = solid[solid > idx[-1]][:RADIUS_WINDOW]
            raw[idx] = np.median(raw[np.concatenate([before, after])])

    if len(raw) > 1:
        raw = ndimage.median_filter(raw, size=RADIUS_WINDOW,
                                    mode='wrap' if path.cyclic else 'nearest')
    return np.maximum(raw, MIN_RADIUS)


def render_masks(paths: typ.Sequence[CenterlinePath],
                 dist: npt.NDArray[np.float64],
                 radius_offset: float = 0.0) -> list[DloInstance]:
    """
        One instance per path, ids from 1: the union of disks along its
        centerline, clipped to the image.
    """
    instances = []
    for k, path in enumerate(paths, start=1):
        radii = path_radii(path, dist, radius_offset)
        mask = stamp_disks(dist.shape, path.pixels, radii)
        instances.append(DloInstance(k, path, radii, mask))
    return instances
