import pytest

import os

from pyDlo.evaluation.scene_gen import SyntheticScene, compose_scene
from tests.drawing import polyline, skeleton_of


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the acceptance-scale experiments')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


# ConfTest.py FIXTture == ctfixt_
@pytest.fixture(scope='session', autouse=True)
def ctfixt_change_pwd(tmpdir_factory, request):

    basetemp = None
    if 'PYTEST_TMPDIR' in os.environ:
        basetemp = os.environ['PYTEST_TMPDIR']
    if basetemp:
        tmpdir_factory.config.option.basetemp = basetemp

    # if there is no basetemp, this just straight up goes to a tree in /tmp
    folder = tmpdir_factory.mktemp('pytest_dont_use_for_anything')
    orig_cwd = os.getcwd()

    os.chdir(folder)

    yield None

    os.chdir(orig_cwd)


@pytest.fixture(scope='session')
def ctfixt_polyline():
    return polyline


@pytest.fixture(scope='session')
def ctfixt_skeleton_of():
    return skeleton_of


@pytest.fixture(scope='session')
def ctfixt_cross_scene() -> SyntheticScene:
    '''
        Red horizontal bar under a blue vertical bar, radius 5, 120 x 120.
    '''
    return compose_scene(
            (120, 120),
            [polyline((60, 8), (60, 111)),
             polyline((8, 60), (111, 60))],
            [5.0, 5.0],
            [(255, 0, 0), (0, 0, 255)],
    )


@pytest.fixture(scope='session')
def ctfixt_two_bars_scene() -> SyntheticScene:
    '''
        Two disjoint diagonal-ish bars, no crossing.
    '''
    return compose_scene(
            (100, 140),
            [polyline((20, 10), (30, 130)),
             polyline((80, 10), (60, 130))],
            [4.0, 6.0],
            [(0, 255, 0), (255, 255, 0)],
    )
