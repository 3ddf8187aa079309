import pytest

import time

import numpy as np

from pyDlo.errors import EmptySceneError
from pyDlo.evaluation.metrics import evaluate
from pyDlo.processing.imgproc import compute_params
from pyDlo.processing.pipeline import (STAGES, PipelineOptions, StageTimer,
                                       run_pipeline)


def _vertical_instance(result):
    spans = []
    for inst in result.instances:
        rows = [p[0] for p in inst.centerline.pixels]
        spans.append(max(rows) - min(rows))
    return 1 + int(np.argmax(spans))


def test_two_bars(ctfixt_two_bars_scene):
    scene = ctfixt_two_bars_scene
    result = run_pipeline(scene.image)

    assert len(result.instances) == 2
    assert result.intersections == [] and result.crossings == []
    assert [inst.id for inst in result.instances] == [1, 2]
    assert evaluate(result.instances, scene).mean > 0.8


def test_crossing(ctfixt_cross_scene):
    scene = ctfixt_cross_scene
    result = run_pipeline(scene.image)

    assert len(result.instances) == 2
    (crossing, ) = result.crossings
    assert sorted(crossing.instances) == [1, 2]
    assert abs(crossing.center[0] - 60) <= 3
    assert abs(crossing.center[1] - 60) <= 3
    # the blue vertical bar was painted last
    assert crossing.top == _vertical_instance(result)

    report = evaluate(result.instances, scene)
    assert report.mean > 0.8
    assert report.unmatched_truths == 0


def test_mask_input_matches_image_input(ctfixt_cross_scene):
    scene = ctfixt_cross_scene
    from_image = run_pipeline(scene.image)
    from_mask = run_pipeline(mask=from_image.mask)

    assert len(from_mask.instances) == len(from_image.instances)
    for a, b in zip(from_mask.instances, from_image.instances):
        np.testing.assert_array_equal(a.mask, b.mask)
        assert a.centerline.pixels == b.centerline.pixels
    assert [c.top for c in from_mask.crossings] == [None]
    assert from_mask.instances[0].crossings == []


def test_intermediate_products(ctfixt_two_bars_scene):
    result = run_pipeline(ctfixt_two_bars_scene.image)
    assert result.mask.shape == result.dist.shape == (100, 140)
    assert not (result.skeleton & ~result.mask).any()
    assert not (result.pruned & ~result.skeleton).any()
    assert result.params == compute_params(result.dist)
    assert len(result.keypoints.ends) == 4


def test_timings(ctfixt_two_bars_scene):
    timer = StageTimer()
    result = run_pipeline(ctfixt_two_bars_scene.image, timer=timer)
    assert tuple(result.timings) == STAGES
    assert all(t >= 0.0 for t in result.timings.values())
    assert timer.total == pytest.approx(sum(result.timings.values()))


def test_stage_timer_accumulates():
    timer = StageTimer()
    for _ in range(2):
        with timer.stage('a'):
            time.sleep(0.001)
    with pytest.raises(RuntimeError):
        with timer.stage('b'):
            raise RuntimeError('boom')
    assert set(timer.durations) == {'a', 'b'}
    assert timer.durations['a'] >= 0.002


def test_empty_scene():
    with pytest.raises(EmptySceneError):
        run_pipeline(np.zeros((64, 64, 3), dtype=np.uint8))


def test_needs_an_input():
    with pytest.raises(ValueError):
        run_pipeline()


def test_options_are_applied(ctfixt_two_bars_scene):
    thin_masks = run_pipeline(ctfixt_two_bars_scene.image,
                              options=PipelineOptions(radius_offset=2.0))
    default = run_pipeline(ctfixt_two_bars_scene.image)
    for a, b in zip(thin_masks.instances, default.instances):
        assert a.mask.sum() < b.mask.sum()
