import pytest

import collections
import dataclasses

import numpy as np

from pyDlo.errors import (DimensionMismatchError, DisconnectedCycleError,
                          TopologyError)
from pyDlo.processing.intersections import Intersection, repair_intersections
from pyDlo.processing.keypoints import classify
from pyDlo.processing.tracer import (CenterlinePath, _Tracer, crossing_scores,
                                     determine_crossing_order, path_radii,
                                     render_masks, trace_all)
from tests.drawing import polyline, skeleton_of


def _repaired(sk, radius=3.0, epsilon=40):
    kp, sk = classify(sk)
    return repair_intersections(kp, sk, np.full(sk.shape, radius), epsilon)


def _octagon():
    return polyline((10, 20), (10, 30), (20, 40), (30, 40), (40, 30),
                    (40, 20), (30, 10), (20, 10), (10, 20))[:-1]


class TestTraceAll:

    def test_single_line(self):
        line = polyline((5, 1), (5, 28))
        sk = skeleton_of((10, 30), line)
        (path, ) = trace_all(sk, {(5, 1), (5, 28)}, [])
        assert path.pixels == line
        assert not path.cyclic and not any(path.patch_flags)
        assert path.strands == []

    def test_diagonal_line_with_staircase(self):
        stairs = [(5 + k // 2, 5 + (k + 1) // 2) for k in range(20)]
        result = _repaired(skeleton_of((25, 25), stairs))
        (path, ) = trace_all(result.skeleton, result.ends, [])
        assert path.pixels[0] == (5, 5) and path.pixels[-1] == (14, 15)

    def test_two_disjoint_lines(self):
        a = polyline((5, 1), (5, 28))
        b = polyline((15, 3), (25, 13))
        sk = skeleton_of((30, 30), a, b)
        paths = trace_all(sk, {a[0], a[-1], b[0], b[-1]}, [])
        assert [p.pixels for p in paths] == [a, b]

    def test_crossing(self):
        result = _repaired(skeleton_of((61, 61), polyline((30, 0), (30, 60)),
                                       polyline((0, 30), (60, 30))))
        paths = trace_all(result.skeleton, result.ends, result.intersections)
        assert [p.pixels for p in paths] == [[(r, 30) for r in range(61)],
                                             [(30, c) for c in range(61)]]
        assert paths[0].strands == [(0, 0)] and paths[1].strands == [(0, 1)]
        flags = paths[0].patch_flags
        assert flags[24:37] == [True] * 13
        assert not flags[23] and not flags[37]

    def test_self_crossing_loop(self):
        loop = polyline((40, 5), (40, 45), (25, 60), (10, 45), (25, 30),
                        (70, 30))
        result = _repaired(skeleton_of((80, 70), loop))
        assert result.ends == {(40, 5), (70, 30)}

        (path, ) = trace_all(result.skeleton, result.ends,
                             result.intersections)
        assert path.pixels[0] == (40, 5) and path.pixels[-1] == (70, 30)
        assert path.pixels.count((40, 30)) == 2
        assert path.strands == [(0, 1), (0, 0)]
        assert not path.cyclic

    def test_stub_strand_ends_the_path(self):
        result = _repaired(skeleton_of((61, 61), polyline((30, 0), (30, 60)),
                                       polyline((31, 30), (60, 30))))
        paths = trace_all(result.skeleton, result.ends, result.intersections)
        assert len(paths) == 2
        assert paths[0].pixels == [(30, c) for c in range(61)]
        assert paths[1].pixels == [(r, 30) for r in range(60, 29, -1)]

    def test_branch_outside_intersection(self):
        sk = skeleton_of((20, 20), polyline((10, 2), (10, 18)),
                         polyline((11, 10), (18, 10)))
        with pytest.raises(TopologyError):
            trace_all(sk, {(10, 2), (10, 18), (18, 10)}, [])

    def test_closed_loop(self):
        loop = _octagon()
        sk = skeleton_of((50, 50), loop)
        with pytest.raises(DisconnectedCycleError):
            trace_all(sk, set(), [])

        (path, ) = trace_all(sk, set(), [], allow_cycles=True)
        assert path.cyclic
        assert path.pixels[0] == (10, 20)
        assert sorted(path.pixels) == sorted(loop)

    def test_small_fragment_gets_its_own_path(self):
        line = polyline((5, 1), (5, 28))
        sk = skeleton_of((12, 30), line, [(10, 3), (10, 4)], [(10, 20)])
        paths = trace_all(sk, {(5, 1), (5, 28)}, [])
        assert [p.pixels for p in paths] == [line, [(10, 3), (10, 4)],
                                             [(10, 20)]]


def _scenes():
    stairs = [(5 + k // 2, 5 + (k + 1) // 2) for k in range(20)]
    loop = polyline((40, 5), (40, 45), (25, 60), (10, 45), (25, 30), (70, 30))
    yield 'line', skeleton_of((10, 30), polyline((5, 1), (5, 28)))
    yield 'staircase', skeleton_of((25, 25), stairs)
    yield 'crossing', skeleton_of((61, 61), polyline((30, 0), (30, 60)),
                                  polyline((0, 30), (60, 30)))
    yield 'loop', skeleton_of((80, 70), loop)


@pytest.mark.parametrize('name, sk', list(_scenes()))
def test_tracing_back_reverses_the_path(name, sk):
    result = _repaired(sk)
    paths = trace_all(result.skeleton, result.ends, result.intersections)
    assert paths
    for path in paths:
        assert path.pixels[-1] in result.ends
        back = _Tracer(result.skeleton, result.ends,
                       result.intersections).trace_from(path.pixels[-1])
        assert back.pixels == path.pixels[::-1]
        assert back.patch_flags == path.patch_flags[::-1]
        assert back.strands == path.strands[::-1]


@pytest.mark.parametrize('name, sk', list(_scenes()))
def test_paths_partition_the_skeleton(name, sk):
    result = _repaired(sk)
    paths = trace_all(result.skeleton, result.ends, result.intersections)
    visits = collections.Counter(p for path in paths for p in path.pixels)
    centers = {inter.center for inter in result.intersections}
    rows, cols = np.nonzero(result.skeleton)
    assert set(zip(rows.tolist(), cols.tolist())) == visits.keys()
    assert all(n == 1 or (p in centers and n == 2) for p, n in visits.items())


def _two_strands(ends=((10, 3), (3, 10), (17, 10), (10, 17))):
    horizontal = tuple((10, c) for c in range(3, 18))
    vertical = tuple((r, 10) for r in range(3, 18))
    return Intersection(center=(10, 10), generated_ends=ends,
                        arm_tails=((), (), (), ()), patch_pixels=frozenset(),
                        energy_pairing=((0, 3), (1, 2)),
                        through_paths=(horizontal, vertical))


class TestCrossingOrder:

    def test_uniform_strand_is_on_top(self):
        img = np.zeros((20, 20, 3), dtype=np.uint8)
        img[10, :10] = (255, 0, 0)
        img[10, 10:] = (0, 0, 255)
        img[:, 10] = (100, 100, 100)
        inter = _two_strands()

        scores = crossing_scores(img, inter)
        assert scores[1] == 0.0 and scores[0] > 0.0
        record = determine_crossing_order(img, inter, index=4)
        assert record.top == 1
        assert record.intersection == 4 and record.center == (10, 10)

    def test_first_strand_on_top(self):
        img = np.zeros((20, 20, 3), dtype=np.uint8)
        img[:, 10] = (255, 0, 0)
        img[5:, 10] = (0, 255, 0)
        img[10, :] = (0, 0, 255)
        assert determine_crossing_order(img, _two_strands()).top == 0

    def test_tie_goes_to_first(self):
        img = np.full((20, 20, 3), 77, dtype=np.uint8)
        assert determine_crossing_order(img, _two_strands()).top == 0

    def test_arm_tails_are_sampled(self):
        img = np.full((20, 20, 3), 50, dtype=np.uint8)
        img[10, 0:3] = 200
        inter = _two_strands()
        tails = (((10, 2), (10, 1), (10, 0)), (), (), ())
        inter = dataclasses.replace(inter, arm_tails=tails)
        scores = crossing_scores(img, inter)
        assert scores[0] > 0.0 and scores[1] == 0.0

    def test_outside_image(self):
        with pytest.raises(DimensionMismatchError):
            crossing_scores(np.zeros((12, 12, 3), dtype=np.uint8),
                            _two_strands())

    def test_needs_two_strands(self):
        inter = Intersection(center=(5, 5), generated_ends=((0, 5), ),
                             arm_tails=((), ), patch_pixels=frozenset(),
                             energy_pairing=((0, None), ),
                             through_paths=(tuple((r, 5) for r in range(6)), ))
        with pytest.raises(ValueError):
            determine_crossing_order(np.zeros((10, 10, 3), np.uint8), inter)


class TestRendering:

    def test_stadium(self):
        pixels = [(20, c) for c in range(10, 41)]
        path = CenterlinePath(pixels, [False] * len(pixels))
        dist = np.full((41, 51), 3.0)
        (inst, ) = render_masks([path], dist, radius_offset=0.0)

        assert inst.id == 1
        np.testing.assert_allclose(inst.radii, 3.0)
        rr, cc = np.mgrid[:41, :51]
        centers = np.asarray(pixels)
        d2 = ((rr[..., None] - centers[:, 0])**2 +
              (cc[..., None] - centers[:, 1])**2).min(axis=-1)
        np.testing.assert_array_equal(inst.mask, d2 <= 9)
        assert inst.mask[20, 7] and not inst.mask[20, 6]
        assert inst.mask[17, 25] and not inst.mask[16, 25]

    def test_single_pixel(self):
        dist = np.zeros((9, 9))
        dist[4, 4] = 1.0
        path = CenterlinePath([(4, 4)], [False])
        (inst, ) = render_masks([path], dist)
        assert inst.radii.tolist() == [1.0]
        assert inst.mask.sum() == 5

    def test_radius_is_the_distance_value(self):
        path = CenterlinePath([(10, c) for c in range(5, 15)], [False] * 10)
        dist = np.full((21, 21), 2.5)
        np.testing.assert_allclose(path_radii(path, dist), 2.5)
        np.testing.assert_allclose(path_radii(path, dist, radius_offset=1.0),
                                   1.5)

    def test_radius_floor(self):
        path = CenterlinePath([(2, c) for c in range(8)], [False] * 8)
        radii = path_radii(path, np.full((5, 10), 0.6))
        np.testing.assert_allclose(radii, 1.0)

    def test_patch_runs_take_neighbouring_radius(self):
        pixels = [(10, c) for c in range(20)]
        flags = [False] * 8 + [True] * 4 + [False] * 8
        dist = np.full((21, 21), 4.0)
        dist[10, 8:12] = 9.0
        radii = path_radii(CenterlinePath(pixels, flags), dist)
        np.testing.assert_allclose(radii, 4.0)

    def test_crossing_paths_overlap(self):
        a = CenterlinePath([(10, c) for c in range(21)], [False] * 21)
        b = CenterlinePath([(r, 10) for r in range(21)], [False] * 21)
        first, second = render_masks([a, b], np.full((21, 21), 3.0))
        assert (first.id, second.id) == (1, 2)
        assert (first.mask & second.mask)[10, 10]
        assert (first.mask & second.mask).sum() > 1
