"""
    Intersection repair

    Intersection pixels are grouped into branch clusters (DBSCAN, eps 2 px).
    A cluster is a Y or an X depending on how many skeleton segments leave it.
    Nearby Y pairs are the two halves of one crossing; they are matched
    greedily by centroid distance and, like X clusters, replaced by an X patch:
    every arm is cut at a distance that scales with the local radius, and the
    cut points (the generated ends) are joined to a single center pixel with
    straight lines.

    Which generated ends belong to the same strand is decided by minimizing the
    summed discrete curvature through the center

        kappa = | 2 (t_in x t_out) / (1 + t_in . t_out) |  = 2 tan(theta / 2)

    over the three ways of pairing four ends.
"""
from __future__ import annotations

import typing as typ

import dataclasses
import enum
import itertools
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy import ndimage
from sklearn.cluster import DBSCAN

from pyDlo.errors import UnsupportedIntersectionError
from pyDlo.processing.keypoints import KeypointSet
from pyDlo.util.img_shapes import (Pixel, is_4_adjacent, is_8_adjacent,
                                   raster_line, round_half_up, set_neighbours)

logg = logging.getLogger(__name__)

CLUSTER_EPS = 2.0
TAIL_LENGTH = 5  # arm pixels kept past each generated end for color sampling
ANTIPARALLEL_GUARD = 1e-9
DEBRIS_SIZE = 2  # detached leftovers of cut arms up to this size are erased

_MATCHINGS_4 = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


class BranchKind(enum.Enum):
    PASS = 'pass'  # <= 2 segments: a thick spot or a bump, not a crossing
    Y = 'Y'
    X = 'X'


@dataclasses.dataclass(frozen=True)
class BranchCluster:
    member_pixels: frozenset[Pixel]
    centroid: typ.Tuple[float, float]
    kind: BranchKind
    n_segments: int


@dataclasses.dataclass(frozen=True)
class Intersection:
    center: Pixel
    generated_ends: tuple[Pixel, ...]
    # Up to TAIL_LENGTH arm pixels past each generated end, outward order.
    arm_tails: tuple[tuple[Pixel, ...], ...]
    # Rasterized end -> center lines, generated ends excluded.
    patch_pixels: frozenset[Pixel]
    # (i, j): ends i and j share a strand; (k, None): strand k stops at center.
    energy_pairing: tuple[tuple[int, int | None], ...] = ()
    through_paths: tuple[tuple[Pixel, ...], ...] = ()
    matching_energies: tuple[float, ...] = ()

    @property
    def n_ends(self) -> int:
        return len(self.generated_ends)


@dataclasses.dataclass
class RepairResult:
    skeleton: npt.NDArray[np.bool_]
    ends: set[Pixel]
    intersections: list[Intersection]


"""
    Curvature and pairing
"""


def discrete_curvature(t_in: npt.ArrayLike, t_out: npt.ArrayLike) -> float:
    """
        |2 (t_in x t_out) / (1 + t_in . t_out)| for 2D unit tangents.
        Antiparallel tangents give +inf.
    """
    a = np.asarray(t_in, dtype=np.float64)
    b = np.asarray(t_out, dtype=np.float64)
    chi = 1.0 + float(a @ b)
    if chi <= ANTIPARALLEL_GUARD:
        return math.inf
    cross = float(a[0] * b[1] - a[1] * b[0])
    return abs(2.0 * cross / chi)


def _unit(v: npt.NDArray[np.float64]) -> npt.NDArray[np.float64] | None:
    norm = float(np.hypot(v[0], v[1]))
    if norm == 0.0:
        return None
    return v / norm


def through_curvature(center: npt.ArrayLike, p: npt.ArrayLike,
                      q: npt.ArrayLike) -> float:
    """
        Curvature at center of the strand p -> center -> q.
    """
    c = np.asarray(center, dtype=np.float64)
    t_in = _unit(c - np.asarray(p, dtype=np.float64))
    t_out = _unit(np.asarray(q, dtype=np.float64) - c)
    if t_in is None or t_out is None:
        return math.inf
    return discrete_curvature(t_in, t_out)


def _lex_key(ends: typ.Sequence[typ.Sequence[float]],
             pairs: typ.Iterable[typ.Tuple[int, int]]) -> tuple:
    return tuple(
            sorted(
                    tuple(sorted((tuple(ends[i]), tuple(ends[j]))))
                    for i, j in pairs))


def min_energy_matching(
        center: npt.ArrayLike, ends: typ.Sequence[typ.Sequence[float]]
) -> typ.Tuple[tuple[tuple[int, int | None], ...], tuple[float, ...]]:
    """
        Pairing of 4 (or 3) ends around center minimizing summed curvature.

        Ties go to the smaller total end-pair distance, then to lexicographic
        end order. If every candidate has an infinite-curvature pair, the one
        with the fewest such pairs wins, ties by end-pair distance.

        Returns the pairing (index pairs into ends) and the energy of every
        candidate, in candidate order.
    """
    pts = np.asarray(ends, dtype=np.float64)
    if len(pts) == 4:
        candidates = [(m, ()) for m in _MATCHINGS_4]
    elif len(pts) == 3:
        candidates = [((pair, ), tuple(k for k in range(3) if k not in pair))
                      for pair in itertools.combinations(range(3), 2)]
    else:
        raise ValueError(f'need 3 or 4 ends, got {len(pts)}')

    best_key = None
    best: tuple[tuple[int, int | None], ...] = ()
    energies: list[float] = []
    for pairs, stubs in candidates:
        kappas = [through_curvature(center, pts[i], pts[j]) for i, j in pairs]
        n_inf = sum(1 for k in kappas if math.isinf(k))
        energy = math.inf if n_inf else float(sum(kappas))
        energies.append(energy)
        spread = float(
                sum(np.hypot(*(pts[i] - pts[j])) for i, j in pairs))
        key = (n_inf, 0.0 if n_inf else round(energy, 9), round(spread, 9),
               _lex_key(ends, pairs))
        if best_key is None or key < best_key:
            best_key = key
            best = tuple(pairs) + tuple((s, None) for s in stubs)

    return best, tuple(energies)


def pair_ends_min_energy(inter: Intersection) -> Intersection:
    """
        Choose the strand pairing and build the through-paths.

        A full strand runs end -> center -> paired end along the patch lines;
        a 3-end intersection also gets a stub strand from its odd end to center.
    """
    pairing, energies = min_energy_matching(inter.center, inter.generated_ends)
    paths = []
    for i, j in pairing:
        first = raster_line(inter.generated_ends[i], inter.center)
        if j is None:
            paths.append(tuple(first))
        else:
            second = raster_line(inter.generated_ends[j], inter.center)[::-1]
            paths.append(tuple(first + second[1:]))

    return dataclasses.replace(inter, energy_pairing=pairing,
                               through_paths=tuple(paths),
                               matching_energies=energies)


def bending_energy(points: npt.ArrayLike, stiffness: float = 1.0,
                   voronoi_length: float = 1.0) -> float:
    """
        Discrete elastic-rod bending energy of a polyline with a straight rest
        shape: 1/2 (EI / V) sum_k kappa_k^2.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) > 1:
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(np.diff(pts, axis=0) != 0, axis=1)
        pts = pts[keep]
    if len(pts) < 3:
        return 0.0

    edges = np.diff(pts, axis=0)
    tangents = edges / np.hypot(edges[:, 0], edges[:, 1])[:, None]
    kappas = np.array([
            discrete_curvature(tangents[k - 1], tangents[k])
            for k in range(1, len(tangents))
    ])
    return float(0.5 * stiffness / voronoi_length * np.sum(kappas**2))


"""
    Clustering and matching
"""


def _ring(members: typ.AbstractSet[Pixel], sk: npt.NDArray[np.bool_],
          exclude: typ.AbstractSet[Pixel] = frozenset()) -> set[Pixel]:
    ring: set[Pixel] = set()
    for p in members:
        for q in set_neighbours(sk, p):
            if q not in members and q not in exclude:
                ring.add(q)
    return ring


def _group_8(pixels: typ.Iterable[Pixel]) -> list[tuple[Pixel, ...]]:
    remaining = sorted(pixels)
    groups: list[tuple[Pixel, ...]] = []
    while remaining:
        group = [remaining.pop(0)]
        grown = True
        while grown:
            grown = False
            for q in list(remaining):
                if any(is_8_adjacent(q, g) for g in group):
                    group.append(q)
                    remaining.remove(q)
                    grown = True
        groups.append(tuple(sorted(group)))
    return groups


def _is_enclosed(group: tuple[Pixel, ...], members: typ.AbstractSet[Pixel],
                 sk: npt.NDArray[np.bool_]) -> bool:
    inside = set(members) | set(group)
    touched = {q for p in group for q in set_neighbours(sk, p) if q in members}
    return len(touched) >= 2 and all(
            q in inside for p in group for q in set_neighbours(sk, p))


def split_ring(
        members: typ.AbstractSet[Pixel], sk: npt.NDArray[np.bool_],
        exclude: typ.AbstractSet[Pixel] = frozenset()
) -> typ.Tuple[list[tuple[Pixel, ...]], set[Pixel]]:
    """
        Ring groups of a cluster, split into segments that leave it and
        interior pixels: a group touching two or more members with no
        skeleton neighbour outside the cluster is a bridge between junctions
        of the same crossing, not a segment.
    """
    segments: list[tuple[Pixel, ...]] = []
    interior: set[Pixel] = set()
    for group in _group_8(_ring(members, sk, exclude)):
        if _is_enclosed(group, members, sk):
            interior.update(group)
        else:
            segments.append(group)
    return segments, interior


def emanating_segments(
        members: typ.AbstractSet[Pixel], sk: npt.NDArray[np.bool_],
        exclude: typ.AbstractSet[Pixel] = frozenset()
) -> list[tuple[Pixel, ...]]:
    """
        Skeleton runs leaving a pixel cluster: 8-connected groups of the
        skeleton pixels on its 1-dilated ring.
    """
    return split_ring(members, sk, exclude)[0]


def _kind(n_segments: int) -> BranchKind:
    if n_segments == 3:
        return BranchKind.Y
    if n_segments == 4:
        return BranchKind.X
    return BranchKind.PASS


def cluster_pixels(intersection_pixels: typ.Iterable[Pixel],
                   sk: npt.NDArray[np.bool_]) -> list[BranchCluster]:
    """
        DBSCAN (eps 2, min size 1) over intersection pixels; each cluster is
        typed by its emanating segment count.
    """
    pixels = sorted(intersection_pixels)
    if not pixels:
        return []

    labels = DBSCAN(eps=CLUSTER_EPS, min_samples=1).fit(
            np.asarray(pixels, dtype=np.float64)).labels_

    clusters = []
    for label in sorted(set(labels.tolist())):
        members = frozenset(p for p, lab in zip(pixels, labels) if lab == label)
        arr = np.asarray(sorted(members), dtype=np.float64)
        centroid = (float(arr[:, 0].mean()), float(arr[:, 1].mean()))
        n_segments = len(emanating_segments(members, sk))
        if n_segments >= 5:
            raise UnsupportedIntersectionError(
                    f'{n_segments} segments meet at one junction: more than '
                    'two DLOs cross here', stage='intersections',
                    pixel=(round_half_up(centroid[0]),
                           round_half_up(centroid[1])))
        clusters.append(
                BranchCluster(members, centroid, _kind(n_segments),
                              n_segments))

    clusters.sort(key=lambda cl: (cl.centroid, min(cl.member_pixels)))
    return clusters


def _centroid_distance(a: BranchCluster, b: BranchCluster) -> float:
    return math.hypot(a.centroid[0] - b.centroid[0],
                      a.centroid[1] - b.centroid[1])


def match_y_branches(
        clusters: typ.Sequence[BranchCluster], epsilon: float
) -> typ.Tuple[list[typ.Tuple[BranchCluster, BranchCluster]],
               list[BranchCluster], list[BranchCluster]]:
    """
        Greedy closest-first matching of Y clusters up to epsilon.

        Returns (matched pairs, unmatched Ys, X clusters).
    """
    if epsilon <= 0:
        raise ValueError('epsilon must be > 0')

    ys = [cl for cl in clusters if cl.kind is BranchKind.Y]
    xs = [cl for cl in clusters if cl.kind is BranchKind.X]

    combos = sorted(
            ((_centroid_distance(ys[i], ys[j]), i, j)
             for i, j in itertools.combinations(range(len(ys)), 2)))
    matched: set[int] = set()
    pairs = []
    for distance, i, j in combos:
        if distance > epsilon:
            break
        if i in matched or j in matched:
            continue
        matched.update((i, j))
        pairs.append((ys[i], ys[j]))

    unmatched = [y for k, y in enumerate(ys) if k not in matched]
    return pairs, unmatched, xs


"""
    Replacement
"""


@dataclasses.dataclass
class _Arm:
    pixels: list[Pixel]  # from the cluster outward
    shared_end: Pixel | None = None  # already a generated end of a neighbour


@dataclasses.dataclass
class _Gathered:
    region: set[Pixel]
    bridge: set[Pixel]
    arms: list[_Arm]


def _walk_arm(sk: npt.NDArray[np.bool_], group: tuple[Pixel, ...],
              visited: set[Pixel], stop: typ.AbstractSet[Pixel],
              limit: int) -> typ.Tuple[list[Pixel], Pixel | None]:
    """
        Follow one emanating segment outward for at most limit pixels.
        Returns the pixels and the stop pixel that ended the walk, if any.

        Stop pixels are hits even when already visited, so a walk can land
        on the partner of a Y pair.
    """
    def hits_of(p: Pixel, own: typ.AbstractSet[Pixel]) -> list[Pixel]:
        return sorted(q for q in set_neighbours(sk, p)
                      if q in stop and q not in own)

    for p in sorted(group):
        hits = hits_of(p, group)
        if hits:
            return list(group), hits[0]

    exits = [
            p for p in group
            if any(q not in visited and q not in group
                   for q in set_neighbours(sk, p))
    ]
    if not exits:
        return list(group), None

    tip = min(exits)
    arm = [p for p in group if p != tip] + [tip]
    own = set(arm)
    seen = set(visited) | own
    cur = tip
    while len(arm) < limit:
        cands = [q for q in set_neighbours(sk, cur) if q not in seen]
        if not cands:
            break
        cur = min(cands, key=lambda q: (not is_4_adjacent(arm[-1], q), q))
        arm.append(cur)
        own.add(cur)
        seen.add(cur)
        hits = hits_of(cur, own)
        if hits:
            return arm, hits[0]

    return arm, None


def _gather(clusters: typ.Sequence[BranchCluster], sk: npt.NDArray[np.bool_],
            limit: int, stop: typ.AbstractSet[Pixel],
            generated: typ.AbstractSet[Pixel],
            patch: typ.AbstractSet[Pixel]) -> _Gathered | None:
    """
        Arms of a cluster or a matched pair. For a pair, the segment joining
        the two clusters (the bridge) is set aside. None if a pair turns out
        not to be joined by exactly one bridge.
    """
    region: set[Pixel] = set()
    for cl in clusters:
        region |= cl.member_pixels

    if len(clusters) == 1:
        bridge_limit = limit
    else:
        gap = _centroid_distance(clusters[0], clusters[1])
        bridge_limit = max(limit, 2 * math.ceil(gap) + 4)

    rings = []
    for k, cl in enumerate(clusters):
        partner = clusters[1 - k].member_pixels if len(clusters) == 2 else (
                frozenset())
        groups, interior = split_ring(cl.member_pixels, sk,
                                      exclude=set(partner) | set(patch))
        region |= interior
        rings.append((partner, groups))

    arms: list[_Arm] = []
    bridge: set[Pixel] = set()
    n_bridges = 0
    for partner, groups in rings:
        visited = set(region) | {p for g in groups for p in g}
        for group in groups:
            shared = sorted(p for p in group if p in generated)
            if shared:
                arms.append(_Arm([shared[0]], shared_end=shared[0]))
                continue
            pixels, hit = _walk_arm(sk, group, visited,
                                    set(stop) | set(partner), bridge_limit)
            if hit is not None and hit in partner:
                bridge.update(pixels)
                n_bridges += 1
                continue
            arms.append(_Arm(pixels[:limit]))

    if len(clusters) == 2 and n_bridges != 2:
        return None

    # Drop arms that were walked over by a bridge from the other side.
    arms = [arm for arm in arms if not (set(arm.pixels) & bridge)]
    return _Gathered(region, bridge, arms)


def _cut_length(dist: npt.NDArray[np.float64], center: Pixel) -> int:
    return max(3, math.ceil(2.0 * float(dist[center])))


def _center_of(clusters: typ.Sequence[BranchCluster],
               shape: typ.Tuple[int, ...]) -> Pixel:
    r = sum(cl.centroid[0] for cl in clusters) / len(clusters)
    c = sum(cl.centroid[1] for cl in clusters) / len(clusters)
    return (min(max(round_half_up(r), 0), shape[0] - 1),
            min(max(round_half_up(c), 0), shape[1] - 1))


def _rewire(sk: npt.NDArray[np.bool_], gathered: _Gathered, center: Pixel,
            cut: int) -> typ.Tuple[npt.NDArray[np.bool_], Intersection]:
    sk = sk.copy()
    for p in gathered.region | gathered.bridge:
        sk[p] = False

    ends: list[Pixel] = []
    tails: list[tuple[Pixel, ...]] = []
    for arm in gathered.arms:
        if arm.shared_end is not None:
            ends.append(arm.shared_end)
            tails.append(())
            continue
        k = min(cut, len(arm.pixels)) - 1
        for p in arm.pixels[:k]:
            sk[p] = False
        ends.append(arm.pixels[k])
        tails.append(tuple(arm.pixels[k + 1:k + 1 + TAIL_LENGTH]))

    patch: set[Pixel] = set()
    for end in ends:
        for p in raster_line(end, center):
            sk[p] = True
            patch.add(p)
    patch -= set(ends)

    order = sorted(range(len(ends)), key=lambda k: ends[k])
    inter = Intersection(center=center,
                         generated_ends=tuple(ends[k] for k in order),
                         arm_tails=tuple(tails[k] for k in order),
                         patch_pixels=frozenset(patch))
    return sk, inter


class BridgeError(ValueError):
    """A matched Y pair is not joined by exactly one bridge segment."""


class TooFewSegmentsError(ValueError):

    def __init__(self, message: str, region: frozenset[Pixel],
                 n_arms: int) -> None:
        super().__init__(message)
        self.region = region
        self.n_arms = n_arms


def replace_intersection(
        clusters: typ.Sequence[BranchCluster],
        sk: npt.NDArray[np.bool_],
        dist: npt.NDArray[np.float64],
        *,
        stop: typ.AbstractSet[Pixel] = frozenset(),
        generated: typ.AbstractSet[Pixel] = frozenset(),
        patch: typ.AbstractSet[Pixel] = frozenset(),
) -> typ.Tuple[npt.NDArray[np.bool_], Intersection]:
    """
        Replace an X cluster, an unmatched Y, or a matched Y pair by an X patch.

        stop: pixels an arm walk may not enter (other clusters).
        generated / patch: generated ends and patch lines of intersections
        already rewired; an arm that starts on a generated end shares it.

        Raises BridgeError for a pair without a single bridge,
        TooFewSegmentsError below 3 arms (both ValueError) and
        UnsupportedIntersectionError from 5 arms on.
    """
    center = _center_of(clusters, sk.shape)
    cut = _cut_length(dist, center)
    gathered = _gather(clusters, sk, cut + TAIL_LENGTH,
                       set(stop) | set(generated) | set(patch), generated,
                       patch)
    if gathered is None:
        raise BridgeError('Y pair is not joined by a single bridge segment')
    n_arms = len(gathered.arms)
    if n_arms >= 5:
        raise UnsupportedIntersectionError(
                f'{n_arms} segments at one crossing', stage='intersections',
                pixel=center)
    if n_arms < 3:
        raise TooFewSegmentsError(
                f'{n_arms} segments do not make a crossing',
                frozenset(gathered.region | gathered.bridge), n_arms)
    return _rewire(sk, gathered, center, cut)


def _straighten(sk: npt.NDArray[np.bool_], cluster: BranchCluster,
                patch: typ.AbstractSet[Pixel],
                ends: set[Pixel]) -> npt.NDArray[np.bool_]:
    """
        Flatten a pass-through cluster: 2 segments get joined by a line,
        1 segment gets a clean end, 0 segments is an isolated blob.
    """
    sk = sk.copy()
    groups, interior = split_ring(cluster.member_pixels, sk, exclude=patch)
    for p in cluster.member_pixels | interior:
        sk[p] = False
        ends.discard(p)

    if len(groups) == 2:
        for p in raster_line(min(groups[0]), min(groups[1])):
            sk[p] = True
    elif len(groups) == 1:
        tip = min(groups[0])
        for p in groups[0]:
            if p != tip:
                sk[p] = False
        if len(set_neighbours(sk, tip)) <= 1:
            ends.add(tip)
    return sk


def _erase_debris(sk: npt.NDArray[np.bool_], keep: typ.AbstractSet[Pixel],
                  ends: set[Pixel]) -> npt.NDArray[np.bool_]:
    labels, n = ndimage.label(sk, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return sk
    sizes = np.bincount(labels.ravel())
    kept = {labels[p] for p in keep}
    small = [lab for lab in range(1, n + 1)
             if sizes[lab] <= DEBRIS_SIZE and lab not in kept]
    if not small:
        return sk
    sk = sk.copy()
    doomed = np.isin(labels, small)
    sk[doomed] = False
    for e in [e for e in ends if doomed[e]]:
        ends.discard(e)
    logg.debug('erased %d debris fragments', len(small))
    return sk


def repair_intersections(kp: KeypointSet, sk: npt.NDArray[np.bool_],
                         dist: npt.NDArray[np.float64],
                         epsilon: float) -> RepairResult:
    """
        Cluster, match and rewire every crossing of the pruned skeleton.

        Crossings are rewired one at a time in order of their center pixel,
        then each gets its minimal-energy pairing.
    """
    clusters = cluster_pixels(kp.intersection_pixels, sk)
    ends = set(kp.ends)

    for cl in clusters:
        if cl.kind is BranchKind.PASS:
            sk = _straighten(sk, cl, frozenset(), ends)
            logg.debug('flattened %d-segment cluster at %s', cl.n_segments,
                       cl.centroid)
    crossing = [cl for cl in clusters if cl.kind is not BranchKind.PASS]

    pairs, unmatched, xs = match_y_branches(crossing, epsilon)
    jobs: list[tuple[BranchCluster, ...]] = [tuple(p) for p in pairs]
    jobs += [(cl, ) for cl in unmatched + xs]
    jobs.sort(key=lambda job: _center_of(job, sk.shape))

    pending: set[Pixel] = set()
    for job in jobs:
        for cl in job:
            pending |= cl.member_pixels

    generated: set[Pixel] = set()
    patch: set[Pixel] = set()
    intersections: list[Intersection] = []
    queue = list(jobs)
    while queue:
        job = queue.pop(0)
        own = set().union(*(cl.member_pixels for cl in job))
        pending -= own
        try:
            sk, inter = replace_intersection(job, sk, dist, stop=pending,
                                             generated=generated, patch=patch)
        except BridgeError:
            logg.debug('Y pair at %s has no single bridge; repairing apart',
                       _center_of(job, sk.shape))
            pending |= own
            queue = [(cl, ) for cl in job] + queue
            continue
        except TooFewSegmentsError as exc:
            center = _center_of(job, sk.shape)
            flat = BranchCluster(exc.region, tuple(map(float, center)),
                                 BranchKind.PASS, exc.n_arms)
            sk = _straighten(sk, flat, patch, ends)
            continue

        generated |= set(inter.generated_ends)
        patch |= inter.patch_pixels
        intersections.append(inter)

    sk = _erase_debris(sk, generated | patch, ends)
    intersections = [pair_ends_min_energy(inter) for inter in intersections]
    # a short arm can end on a true end, which then becomes a generated end
    ends = {e for e in ends if sk[e] and e not in generated}
    logg.debug('repaired %d crossings', len(intersections))
    return RepairResult(sk, ends, intersections)
