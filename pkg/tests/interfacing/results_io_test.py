import pytest

import json
import os

import numpy as np

from pyDlo.errors import ImageIOError
from pyDlo.interfacing import results_io
from pyDlo.processing.pipeline import run_pipeline
from pyDlo.processing.tracer import CenterlinePath


@pytest.fixture(scope='module')
def cross_result(ctfixt_cross_scene):
    return run_pipeline(ctfixt_cross_scene.image)


def test_results_document(cross_result):
    doc = results_io.results_document(cross_result, 'cross.png')
    assert doc['schema'] == results_io.SCHEMA_VERSION
    assert doc['image'] == 'cross.png'
    assert (doc['width'], doc['height']) == (120, 120)
    assert set(doc['params']) == {'delta', 'epsilon', 'max_distance'}

    assert [inst['id'] for inst in doc['instances']] == [1, 2]
    for inst, source in zip(doc['instances'], cross_result.instances):
        # points go out as [x, y]
        r, c = source.centerline.pixels[0]
        assert inst['centerline'][0] == [c, r]
        assert len(inst['radius']) == len(inst['centerline'])
        assert inst['area'] == int(source.mask.sum())
        assert not inst['cyclic']

    (crossing, ) = doc['crossings']
    assert sorted(crossing['instances']) == [1, 2]
    assert crossing['top'] in (1, 2)


def test_results_document_is_deterministic(cross_result, ctfixt_cross_scene):
    again = run_pipeline(ctfixt_cross_scene.image)
    a = results_io.dumps(results_io.results_document(cross_result, 'x'))
    b = results_io.dumps(results_io.results_document(again, 'x'))
    assert a == b
    assert json.loads(a)['schema'] == 1


def test_intersections_document(cross_result):
    doc = results_io.intersections_document(cross_result.intersections)
    (item, ) = doc['intersections']
    assert len(item['generated_ends']) == 4
    assert len(item['pairing']) == 2
    assert len(item['matching_energies']) == 3
    assert item['patch_size'] > 0


def test_path_energy():
    straight = CenterlinePath([(5, c) for c in range(21)], [False] * 21)
    assert results_io.path_energy(straight) == 0.0

    corner = [(0, c) for c in range(11)] + [(r, 10) for r in range(1, 11)]
    bent = CenterlinePath(corner, [False] * len(corner))
    assert results_io.path_energy(bent) == pytest.approx(2.0)


def test_write_and_read_json():
    results_io.write_json('doc.json', dict(schema=1, b=2, a=[1, 2]))
    with open('doc.json') as fp:
        text = fp.read()
    assert text.index('"a"') < text.index('"b"')
    assert results_io.read_json('doc.json') == dict(schema=1, a=[1, 2], b=2)


@pytest.mark.parametrize('content', ['{"schema": 99}', '{not json', '[]'])
def test_read_json_rejects(content):
    with open('bad.json', 'w') as fp:
        fp.write(content)
    with pytest.raises(ImageIOError):
        results_io.read_json('bad.json')


def test_read_json_missing():
    with pytest.raises(ImageIOError):
        results_io.read_json('no_such_file.json')


def test_scene_bundle_roundtrip(ctfixt_cross_scene):
    scene = ctfixt_cross_scene
    results_io.write_scene_bundle('bundle_cross', scene)
    assert results_io.has_ground_truth('bundle_cross')
    assert sorted(os.listdir('bundle_cross')) == [
            'gt_centerline_1.json', 'gt_centerline_2.json',
            'gt_instance_1.png', 'gt_instance_2.png', 'meta.json', 'scene.png'
    ]

    back = results_io.read_scene_bundle('bundle_cross')
    np.testing.assert_array_equal(back.image, scene.image)
    for a, b in zip(back.masks, scene.masks):
        np.testing.assert_array_equal(a, b)
    assert back.centerlines == scene.centerlines
    assert back.radii == scene.radii
    assert back.colors == scene.colors
    assert back.draw_order == [1, 2]
    assert back.drawn_above(2, 1)


def test_has_ground_truth():
    os.makedirs('bare_bundle', exist_ok=True)
    assert not results_io.has_ground_truth('bare_bundle')
    assert not results_io.has_ground_truth('nowhere')
