"""
    Keypoint classification and split-end pruning

    Skeleton pixels are classified by convolving with

        K = [[1,  1, 1],
             [1, 10, 1],
             [1,  1, 1]]

    restricted to skeleton pixels: 11 is an end, 12 a regular pixel, anything
    above 12 an intersection pixel and a lone 10 is noise.
"""
from __future__ import annotations

import typing as typ

import dataclasses
import enum
import logging

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from pyDlo.processing.skeleton import SIMPLE_POINT
from pyDlo.util.img_shapes import (NEIGHBOURS_8, Pixel, is_4_adjacent,
                                   set_neighbours)

logg = logging.getLogger(__name__)

KERNEL = np.array([[1, 1, 1], [1, 10, 1], [1, 1, 1]], dtype=np.int32)

VALUE_ISOLATED = 10
VALUE_END = 11
VALUE_REGULAR = 12


@dataclasses.dataclass
class KeypointSet:
    ends: set[Pixel] = dataclasses.field(default_factory=set)
    intersection_pixels: set[Pixel] = dataclasses.field(default_factory=set)

    def copy(self) -> KeypointSet:
        return KeypointSet(set(self.ends), set(self.intersection_pixels))


def classification_values(sk: npt.NDArray[np.bool_]) -> npt.NDArray[np.int32]:
    """
        K convolved over the skeleton, zero off the skeleton.
    """
    sk_int = sk.astype(np.int32)
    return ndimage.convolve(sk_int, KERNEL, mode='constant', cval=0) * sk_int


def _neighbour_code(sk: npt.NDArray[np.bool_], p: Pixel) -> int:
    code = 0
    for k, (dr, dc) in enumerate(NEIGHBOURS_8):
        r, c = p[0] + dr, p[1] + dc
        if 0 <= r < sk.shape[0] and 0 <= c < sk.shape[1] and sk[r, c]:
            code |= 1 << k
    return code


def _is_staircase_corner(sk: npt.NDArray[np.bool_], p: Pixel) -> bool:
    nbrs = set_neighbours(sk, p)
    if len(nbrs) < 2:
        return False
    four = [q for q in nbrs if is_4_adjacent(p, q)]
    if len(four) > 2:
        return False
    if len(four) == 2 and (four[0][0] + four[1][0] == 2 * p[0] and
                           four[0][1] + four[1][1] == 2 * p[1]):
        return False
    # with two neighbours, only an L corner
    if len(nbrs) == 2 and len(four) != 2:
        return False
    if not SIMPLE_POINT[_neighbour_code(sk, p)]:
        return False
    # a neighbour may only become an end at the tip of a triangle
    for q in nbrs:
        rest = [r for r in set_neighbours(sk, q) if r != p]
        if not rest or (len(rest) == 1 and rest[0] not in nbrs):
            return False
    return True


def _reduce_staircases_at(sk: npt.NDArray[np.bool_],
                          candidates: typ.Iterable[Pixel]) -> list[Pixel]:
    removed: list[Pixel] = []
    for p in sorted(candidates):
        if sk[p] and _is_staircase_corner(sk, p):
            sk[p] = False
            removed.append(p)
    return removed


def reduce_staircases(sk: npt.NDArray[np.bool_]) -> npt.NDArray[np.bool_]:
    """
        Remove redundant corner pixels that make a thinned diagonal read as a
        chain of intersection pixels. Works on a copy.
    """
    sk = sk.copy()
    values = classification_values(sk)
    # corners sit on or next to pixels with 3+ neighbours
    near = ndimage.binary_dilation(values > VALUE_REGULAR,
                                   structure=np.ones((3, 3), dtype=bool)) & sk
    rows, cols = np.nonzero(near)
    removed = _reduce_staircases_at(sk, zip(rows.tolist(), cols.tolist()))
    if removed:
        logg.debug('removed %d staircase corner pixels', len(removed))
    return sk


def classify(
        sk: npt.NDArray[np.bool_]
) -> typ.Tuple[KeypointSet, npt.NDArray[np.bool_]]:
    """
        Ends and intersection pixels of the skeleton.

        Returns the keypoints and the skeleton they refer to: staircase corners
        reduced and isolated pixels erased.
    """
    sk = reduce_staircases(sk)
    values = classification_values(sk)
    sk[values == VALUE_ISOLATED] = False

    kp = KeypointSet()
    rows, cols = np.nonzero(values == VALUE_END)
    kp.ends = set(zip(rows.tolist(), cols.tolist()))
    rows, cols = np.nonzero(values > VALUE_REGULAR)
    kp.intersection_pixels = set(zip(rows.tolist(), cols.tolist()))
    return kp, sk


class WalkOutcome(enum.Enum):
    INTERSECTION = 1
    END = 2
    CLEAR = 3


def _step_choice(cur: Pixel, cands: list[Pixel]) -> Pixel:
    # 4-neighbours first, then raster order.
    return min(cands, key=lambda q: (not is_4_adjacent(cur, q), q))


def walk_from_end(
        sk: npt.NDArray[np.bool_], start: Pixel, kp: KeypointSet, delta: int
) -> typ.Tuple[WalkOutcome, list[Pixel], Pixel | None]:
    """
        Walk at most delta pixels from an end.

        Returns the outcome, the walked pixels (start included) and the keypoint
        that stopped the walk.
    """
    path = [start]
    visited = {start}
    cur = start
    while True:
        cands = [q for q in set_neighbours(sk, cur) if q not in visited]
        inters = [q for q in cands if q in kp.intersection_pixels]
        if inters:
            return WalkOutcome.INTERSECTION, path, min(inters)
        ends = [q for q in cands if q in kp.ends]
        if ends:
            return WalkOutcome.END, path, min(ends)
        if not cands or len(path) >= delta:
            return WalkOutcome.CLEAR, path, None
        cur = _step_choice(cur, cands)
        path.append(cur)
        visited.add(cur)


def _reclassify_local(sk: npt.NDArray[np.bool_], kp: KeypointSet,
                      erased: list[Pixel], junction: Pixel | None) -> None:
    affected: set[Pixel] = set()
    for p in erased:
        affected.update(
                (p[0] + dr, p[1] + dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1))
    if junction is not None:
        affected.update((junction[0] + dr, junction[1] + dc)
                        for dr in range(-2, 3) for dc in range(-2, 3))
    affected = {
            q
            for q in affected
            if 0 <= q[0] < sk.shape[0] and 0 <= q[1] < sk.shape[1]
    }

    removed = _reduce_staircases_at(sk, affected)
    for p in removed:
        affected.update((p[0] + dr, p[1] + dc) for dr in (-1, 0, 1)
                        for dc in (-1, 0, 1)
                        if 0 <= p[0] + dr < sk.shape[0] and
                        0 <= p[1] + dc < sk.shape[1])

    for q in affected:
        kp.ends.discard(q)
        kp.intersection_pixels.discard(q)
        if not sk[q]:
            continue
        n_nbrs = len(set_neighbours(sk, q))
        if n_nbrs == 0:
            sk[q] = False
        elif n_nbrs == 1:
            kp.ends.add(q)
        elif n_nbrs >= 3:
            kp.intersection_pixels.add(q)


def prune_split_ends(
        kp: KeypointSet, sk: npt.NDArray[np.bool_], delta: int
) -> typ.Tuple[KeypointSet, npt.NDArray[np.bool_]]:
    """
        Remove spurs shorter than delta.

        An end whose walk meets an intersection pixel within delta pixels is a
        split end: the walked pixels go. An end whose walk meets another end
        is a short fragment: it goes with both ends. Passes repeat until one
        prunes nothing.
    """
    if delta < 1:
        raise ValueError('delta must be >= 1')

    kp = kp.copy()
    sk = sk.copy()
    n_pruned = 0
    while True:
        pruned_this_pass = 0
        for start in sorted(kp.ends):
            if start not in kp.ends or not sk[start]:
                continue
            outcome, walked, hit = walk_from_end(sk, start, kp, delta)
            if outcome is WalkOutcome.CLEAR:
                continue

            erased = list(walked)
            if outcome is WalkOutcome.END:
                assert hit is not None
                erased.append(hit)
            for p in erased:
                sk[p] = False
            _reclassify_local(sk, kp, erased,
                              hit if outcome is WalkOutcome.INTERSECTION else None)
            pruned_this_pass += 1

        n_pruned += pruned_this_pass
        if pruned_this_pass == 0:
            break

    logg.debug('pruned %d split ends', n_pruned)
    return kp, sk
