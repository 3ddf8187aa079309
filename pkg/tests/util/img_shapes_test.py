import numpy as np
import pytest

from pyDlo.util.img_shapes import (NEIGHBOURS_8, disk_stencil,
                                   is_4_adjacent, is_8_adjacent, neighbours,
                                   raster_line, rc_to_xy, round_half_up,
                                   set_neighbours, stamp_disks, xy_to_rc)


def test_coordinate_conventions():
    assert rc_to_xy((3, 7)) == [7, 3]
    assert xy_to_rc([7, 3]) == (3, 7)
    assert xy_to_rc(rc_to_xy((12, 5))) == (12, 5)


@pytest.mark.parametrize('value, expected', [(0.5, 1), (1.5, 2), (2.5, 3),
                                             (-0.5, 0), (2.49, 2), (-1.2, -1)])
def test_round_half_up(value, expected):
    assert round_half_up(value) == expected


def test_neighbourhoods():
    assert len(NEIGHBOURS_8) == 8 and len(set(NEIGHBOURS_8)) == 8
    assert NEIGHBOURS_8[0] == (-1, 0)  # clockwise from north

    assert list(neighbours((0, 0), (3, 3))) == [(0, 1), (1, 1), (1, 0)]
    assert len(list(neighbours((1, 1), (3, 3)))) == 8

    assert is_8_adjacent((1, 1), (2, 2))
    assert not is_8_adjacent((1, 1), (1, 1))
    assert not is_8_adjacent((1, 1), (3, 1))
    assert is_4_adjacent((1, 1), (1, 2))
    assert not is_4_adjacent((1, 1), (2, 2))


def test_set_neighbours():
    mask = np.zeros((4, 4), dtype=bool)
    mask[0, 0] = mask[1, 2] = mask[3, 3] = True
    assert set_neighbours(mask, (1, 1)) == [(1, 2), (0, 0)]


def test_raster_line():
    line = raster_line((0, 0), (3, 6))
    assert line[0] == (0, 0) and line[-1] == (3, 6)
    assert len(line) == 7
    assert all(is_8_adjacent(p, q) for p, q in zip(line, line[1:]))
    assert raster_line((2, 2), (2, 2)) == [(2, 2)]


def test_disk_stencil():
    assert len(disk_stencil(0.0)) == 1
    # radius 1: the center and its 4-neighbourhood
    assert {tuple(o) for o in disk_stencil(1.0)} == {(0, 0), (-1, 0), (1, 0),
                                                     (0, -1), (0, 1)}
    assert len(disk_stencil(1.5)) == 9
    assert len(disk_stencil(3.0)) == 29
    with pytest.raises(ValueError):
        disk_stencil(-1.0)


def test_stamp_disks():
    mask = stamp_disks((10, 10), [(5, 5)], [3.0])
    assert mask.sum() == 29
    assert mask[5, 2] and mask[5, 8] and not mask[2, 2]

    # clipped at the border
    corner = stamp_disks((10, 10), [(0, 0)], [1.0])
    assert corner.sum() == 3

    with pytest.raises(ValueError):
        stamp_disks((10, 10), [(1, 1), (2, 2)], [1.0])
