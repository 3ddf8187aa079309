import pytest

import numpy as np

from pyDlo.processing.keypoints import KeypointSet
from pyDlo.processing.pipeline import Crossing
from pyDlo.processing.tracer import CenterlinePath, DloInstance
from pyDlo.visual import overlay


def _instances(scene):
    return [
            DloInstance(k, CenterlinePath(list(cl), [False] * len(cl)),
                        np.full(len(cl), 5.0), mask)
            for k, (cl, mask) in enumerate(
                    zip(scene.centerlines, scene.masks), start=1)
    ]


def test_palette():
    palette = overlay.instance_palette(12)
    assert palette.shape == (13, 3) and palette.dtype == np.uint8
    assert tuple(palette[0]) == (0, 0, 0)
    assert tuple(palette[1]) == (31, 119, 180)
    # tab10 cycles
    assert tuple(palette[11]) == tuple(palette[1])


def test_label_image(ctfixt_cross_scene):
    instances = _instances(ctfixt_cross_scene)
    labels = overlay.label_image(instances, (120, 120))
    assert labels[60, 20] == 1 and labels[20, 60] == 2
    assert labels[0, 0] == 0
    # painted by id without crossing information
    assert labels[60, 60] == 2

    under = Crossing((60, 60), (1, 2), top=1)
    labels = overlay.label_image(instances, (120, 120), [under])
    assert labels[60, 60] == 1 and labels[20, 60] == 2

    unknown = Crossing((60, 60), (1, 2), top=None)
    labels = overlay.label_image(instances, (120, 120), [unknown])
    assert labels[60, 60] == 2


def test_label_image_rejects_too_many_instances():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 1] = True
    path = CenterlinePath([(1, 1)], [False])
    inst = DloInstance(256, path, np.ones(1), mask)
    with pytest.raises(ValueError):
        overlay.label_image([inst], (4, 4))


def test_overlay(ctfixt_cross_scene):
    scene = ctfixt_cross_scene
    instances = _instances(scene)
    labels = overlay.label_image(instances, (120, 120))
    out = overlay.overlay(scene.image, labels,
                          [inst.centerline.pixels for inst in instances])

    assert out.shape == scene.image.shape and out.dtype == np.uint8
    assert tuple(out[0, 0]) == (0, 0, 0)
    assert tuple(out[60, 20]) == overlay.SKELETON_COLOR
    # off the centerline the instance color is blended in
    assert tuple(out[57, 20]) != tuple(scene.image[57, 20])
    assert out[57, 20].any()


def test_keypoint_image():
    sk = np.zeros((5, 7), dtype=bool)
    sk[2, 1:6] = True
    kp = KeypointSet(ends={(2, 1), (2, 5)}, intersection_pixels={(2, 3)})
    out = overlay.keypoint_image(sk, kp)
    assert tuple(out[2, 1]) == overlay.END_COLOR
    assert tuple(out[2, 3]) == overlay.INTERSECTION_COLOR
    assert tuple(out[2, 2]) == overlay.SKELETON_COLOR
    assert not out[0].any()
