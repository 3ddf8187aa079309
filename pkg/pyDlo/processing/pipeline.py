"""
    End-to-end instance segmentation

    color filter -> distance map -> thinning -> keypoints / pruning ->
    intersection repair -> tracing -> mask rendering + crossing order
"""
from __future__ import annotations

import typing as typ

import contextlib
import dataclasses
import logging
import time

import numpy as np
import numpy.typing as npt

from pyDlo.interfacing.hsv_config import HsvFilterSpec, default_hsv_spec
from pyDlo.processing import imgproc
from pyDlo.processing.intersections import Intersection, repair_intersections
from pyDlo.processing.keypoints import (KeypointSet, classify,
                                        prune_split_ends)
from pyDlo.processing.skeleton import thin
from pyDlo.processing.tracer import (CenterlinePath, DloInstance,
                                     determine_crossing_order, render_masks,
                                     trace_all)

logg = logging.getLogger(__name__)

STAGES = ('segmentation', 'thinning', 'keypoints', 'intersections', 'tracing',
          'rendering')


@dataclasses.dataclass(frozen=True)
class PipelineOptions:
    allow_cycles: bool = False
    # rendered radius = D(p) - radius_offset, floored at 1
    radius_offset: float = 0.0


class StageTimer:
    """
        Accumulates wall-clock seconds per stage name.
    """

    def __init__(self) -> None:
        self.durations: dict[str, float] = {}

    @contextlib.contextmanager
    def stage(self, name: str) -> typ.Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.durations[name] = (self.durations.get(name, 0.0) +
                                    time.perf_counter() - t0)

    @property
    def total(self) -> float:
        return sum(self.durations.values())


@dataclasses.dataclass(frozen=True)
class Crossing:
    """
        A crossing between two traced instances (ids may be equal for a
        self-crossing).
    """
    center: tuple[int, int]
    instances: tuple[int, int]
    top: int | None  # None without a color image


@dataclasses.dataclass
class PipelineResult:
    mask: npt.NDArray[np.bool_]
    dist: npt.NDArray[np.float64]
    params: imgproc.PipelineParams
    skeleton: npt.NDArray[np.bool_]  # after thinning
    pruned: npt.NDArray[np.bool_]
    keypoints: KeypointSet  # on the pruned skeleton
    repaired: npt.NDArray[np.bool_]
    intersections: list[Intersection]
    paths: list[CenterlinePath]
    instances: list[DloInstance]
    crossings: list[Crossing]
    timings: dict[str, float]


def _strand_owners(paths: typ.Sequence[CenterlinePath]) -> dict:
    owners = {}
    for k, path in enumerate(paths, start=1):
        for strand in path.strands:
            owners[strand] = k
    return owners


def run_pipeline(image: npt.NDArray[np.uint8] | None = None,
                 *,
                 mask: npt.NDArray[np.bool_] | None = None,
                 hsv_spec: HsvFilterSpec | None = None,
                 options: PipelineOptions = PipelineOptions(),
                 timer: StageTimer | None = None) -> PipelineResult:
    """
        Segment one scene into DLO instances.

        Either image (filtered with hsv_spec) or a precomputed mask is
        required. Crossing order needs the color image; with a mask only,
        crossings are reported without a top.
    """
    if image is None and mask is None:
        raise ValueError('need an image or a mask')
    timer = timer or StageTimer()

    with timer.stage('segmentation'):
        if mask is None:
            assert image is not None
            mask = imgproc.color_filter(image, hsv_spec or default_hsv_spec())
        mask = np.asarray(mask, dtype=bool)

    with timer.stage('thinning'):
        dist = imgproc.distance_transform(mask)
        params = imgproc.compute_params(dist)
        skeleton = thin(mask)

    with timer.stage('keypoints'):
        kp, sk = classify(skeleton)
        kp, pruned = prune_split_ends(kp, sk, params.delta)

    with timer.stage('intersections'):
        repair = repair_intersections(kp, pruned, dist, params.epsilon)

    with timer.stage('tracing'):
        paths = trace_all(repair.skeleton, repair.ends, repair.intersections,
                          allow_cycles=options.allow_cycles)

    with timer.stage('rendering'):
        instances = render_masks(paths, dist, options.radius_offset)
        crossings = []
        owners = _strand_owners(paths)
        blurred = None if image is None else imgproc.gaussian_blur(image)
        for i, inter in enumerate(repair.intersections):
            if len(inter.through_paths) < 2:
                continue
            a, b = owners.get((i, 0)), owners.get((i, 1))
            if a is None or b is None:
                logg.debug('crossing at %s has an untraced strand', inter.center)
                continue
            if blurred is None:
                top = None
            else:
                record = determine_crossing_order(blurred, inter, index=i)
                top = (a, b)[record.top]
                instances[a - 1].crossings.append(record)
                if b != a:
                    instances[b - 1].crossings.append(record)
            crossings.append(Crossing(inter.center, (a, b), top))

    logg.debug('%d instances, %d crossings', len(instances), len(crossings))
    return PipelineResult(mask=mask, dist=dist, params=params,
                          skeleton=skeleton, pruned=pruned, keypoints=kp,
                          repaired=repair.skeleton,
                          intersections=repair.intersections, paths=paths,
                          instances=instances, crossings=crossings,
                          timings=dict(timer.durations))
