"""
    Zhang-Suen thinning

    Each subpass looks up every foreground pixel's 8-neighbourhood code in a
    precomputed 256-entry table. The neighbourhood is read with the bits
    ordered clockwise from north (P2 ... P9 in the usual notation).

    Two safeguards wrap the textbook iteration so the skeleton keeps the
    topology of the mask:
    - a subpass never deletes a whole 8-connected component at once: such a
      component (a 2x2 square, a 2-thick diagonal) is thinned one pixel at a
      time instead;
    - once the iteration is stable, 2x2 blocks are broken by removing a
      simple pixel, then the iteration resumes.
"""
from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from pyDlo.util.img_shapes import NEIGHBOURS_8

logg = logging.getLogger(__name__)


def _code_bits(code: int) -> list[int]:
    return [(code >> k) & 1 for k in range(8)]


def _transitions(bits: list[int]) -> int:
    return sum(1 for k in range(8) if bits[k] == 0 and bits[(k + 1) % 8] == 1)


def _zhang_suen_tables() -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_]]:
    first = np.zeros(256, dtype=bool)
    second = np.zeros(256, dtype=bool)
    for code in range(256):
        p2, p3, p4, p5, p6, p7, p8, p9 = _code_bits(code)
        bits = [p2, p3, p4, p5, p6, p7, p8, p9]
        if not 2 <= sum(bits) <= 6 or _transitions(bits) != 1:
            continue
        first[code] = p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
        second[code] = p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
    return first, second


def _components(points: list[tuple[int, int]], adjacent) -> int:
    seen: set[tuple[int, int]] = set()
    count = 0
    for start in points:
        if start in seen:
            continue
        count += 1
        stack = [start]
        seen.add(start)
        while stack:
            p = stack.pop()
            for q in points:
                if q not in seen and adjacent(p, q):
                    seen.add(q)
                    stack.append(q)
    return count


def _simple_table() -> npt.NDArray[np.bool_]:
    """
        Simple-point test: removing the center neither splits the foreground
        (one 8-component in the ring) nor opens a hole / merges background
        (one 4-component of ring background touching the center's 4-neighbours).
    """
    table = np.zeros(256, dtype=bool)
    for code in range(256):
        bits = _code_bits(code)
        fg = [NEIGHBOURS_8[k] for k in range(8) if bits[k]]
        bg = [NEIGHBOURS_8[k] for k in range(8) if not bits[k]]
        if not fg or not any(abs(r) + abs(c) == 1 for r, c in bg):
            continue
        n_fg = _components(
                fg, lambda p, q: max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1)
        n_bg = 0
        seen: set[tuple[int, int]] = set()
        for start in bg:
            if start in seen or abs(start[0]) + abs(start[1]) != 1:
                continue
            n_bg += 1
            stack = [start]
            seen.add(start)
            while stack:
                p = stack.pop()
                for q in bg:
                    if q not in seen and abs(p[0] - q[0]) + abs(p[1] -
                                                                q[1]) == 1:
                        seen.add(q)
                        stack.append(q)
        table[code] = n_fg == 1 and n_bg == 1
    return table


def _end_table() -> npt.NDArray[np.bool_]:
    """
        True where the set neighbours are pairwise 8-adjacent: the center is
        the tip of a stroke, even when it sits on a staircase corner.
    """
    table = np.zeros(256, dtype=bool)
    for code in range(256):
        bits = _code_bits(code)
        fg = [NEIGHBOURS_8[k] for k in range(8) if bits[k]]
        table[code] = all(
                max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1
                for i, p in enumerate(fg) for q in fg[i + 1:])
    return table


_SUBPASS_1, _SUBPASS_2 = _zhang_suen_tables()
SIMPLE_POINT = _simple_table()
_END_LIKE = _end_table()


def neighbour_offsets(n_cols: int) -> npt.NDArray[np.int64]:
    """
        Flat-index offsets of the 8-neighbourhood for a C-ordered array of
        n_cols columns.
    """
    return np.array([dr * n_cols + dc for dr, dc in NEIGHBOURS_8],
                    dtype=np.int64)


def neighbour_codes(flat: npt.NDArray[np.bool_], idx: npt.NDArray[np.int64],
                    offsets: npt.NDArray[np.int64]) -> npt.NDArray[np.intp]:
    """
        8-bit neighbourhood codes of the flat indices idx.
        Caller guarantees idx is at least one pixel away from the array border.
    """
    codes = np.zeros(idx.shape, dtype=np.intp)
    for k, off in enumerate(offsets):
        codes |= flat[idx + off].astype(np.intp) << k
    return codes


def _thin_in_place(flat: npt.NDArray[np.bool_], pixels: npt.NDArray[np.int64],
                   offsets: npt.NDArray[np.int64]) -> None:
    # raster order, one pixel at a time: simple points go, tips stay
    for p in np.sort(pixels).tolist():
        code = neighbour_codes(flat, np.array([p]), offsets)[0]
        if SIMPLE_POINT[code] and not _END_LIKE[code]:
            flat[p] = False


def _spare_vanishing(img: npt.NDArray[np.bool_], doomed: npt.NDArray[np.int64],
                     offsets: npt.NDArray[np.int64]) -> npt.NDArray[np.int64]:
    """
        Doomed pixels minus the survivors of every component the subpass
        would erase entirely. Such a component is thinned sequentially
        instead, which keeps its extent (a 2-thick diagonal keeps its
        diagonal, not one pixel).
    """
    flat = img.reshape(-1)
    after = flat.copy()
    after[doomed] = False
    anchored = np.zeros(doomed.shape, dtype=bool)
    for off in offsets:
        anchored |= after[doomed + off]
    if anchored.all():
        return doomed

    doomed_img = np.zeros(img.shape, dtype=bool)
    doomed_img.reshape(-1)[doomed] = True
    labels, _ = ndimage.label(doomed_img, structure=np.ones((3, 3)))
    flat_labels = labels.reshape(-1)[doomed]
    safe = np.unique(flat_labels[anchored])
    lonely = ~np.isin(flat_labels, safe)

    # lonely components have no surviving neighbour, so each is thinned alone
    trial = np.zeros_like(flat)
    trial[doomed[lonely]] = True
    _thin_in_place(trial, doomed[lonely], offsets)
    spare = doomed[lonely][trial[doomed[lonely]]]
    return np.setdiff1d(doomed, spare, assume_unique=True)


def _break_blocks(img: npt.NDArray[np.bool_],
                  offsets: npt.NDArray[np.int64]) -> bool:
    flat = img.reshape(-1)
    n_cols = img.shape[1]
    block = img[:-1, :-1] & img[:-1, 1:] & img[1:, :-1] & img[1:, 1:]
    if not block.any():
        return False

    changed = False
    rows, cols = np.nonzero(block)
    for r, c in zip(rows.tolist(), cols.tolist()):
        corners = [r * n_cols + c, r * n_cols + c + 1, (r + 1) * n_cols + c,
                   (r + 1) * n_cols + c + 1]
        if not flat[corners].all():
            continue
        for p in corners:
            code = neighbour_codes(flat, np.array([p]), offsets)[0]
            if SIMPLE_POINT[code]:
                flat[p] = False
                changed = True
                break
        else:
            logg.debug('irreducible 2x2 block at (%d, %d)', r - 1, c - 1)

    return changed


def thin(mask: npt.NDArray[np.bool_]) -> npt.NDArray[np.bool_]:
    """
        Zhang-Suen thinning to a one-pixel-wide skeleton.

        Pixels outside the image count as background. Iterates both subpasses
        until a full iteration deletes nothing.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros(mask.shape, dtype=bool)

    img = np.pad(mask, 1)
    flat = img.reshape(-1)
    offsets = neighbour_offsets(img.shape[1])

    n_iter = 0
    while True:
        changed = False
        for table in (_SUBPASS_1, _SUBPASS_2):
            idx = np.flatnonzero(flat)
            doomed = idx[table[neighbour_codes(flat, idx, offsets)]]
            if doomed.size == 0:
                continue
            doomed = _spare_vanishing(img, doomed, offsets)
            if doomed.size:
                flat[doomed] = False
                changed = True
        n_iter += 1
        if not changed and not _break_blocks(img, offsets):
            break

    logg.debug('thinning converged after %d iterations', n_iter)
    return img[1:-1, 1:-1].copy()
