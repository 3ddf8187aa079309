"""
    Runtime benchmark

    Each repetition runs the whole pipeline over every scene with one shared
    StageTimer; the end-to-end time is measured around the whole repetition,
    so it bounds the stage sum of that repetition. Every reported figure is the
    median over the repetitions, taken per stage and for the end-to-end time
    separately. A warm-up pass (whose results are kept for evaluation) runs
    first and is not timed.

    Everything runs in the calling thread.
"""
from __future__ import annotations

import typing as typ

import dataclasses
import logging
import time

import numpy as np
import numpy.typing as npt
from tqdm import tqdm

from pyDlo.errors import DloError
from pyDlo.interfacing.hsv_config import HsvFilterSpec
from pyDlo.processing.pipeline import (STAGES, PipelineOptions,
                                       PipelineResult, StageTimer,
                                       run_pipeline)

logg = logging.getLogger(__name__)


@dataclasses.dataclass
class TimingReport:
    stages: dict[str, float]  # seconds for the whole scene set
    total: float  # seconds, end to end
    n_images: int
    repetitions: int
    failures: int = 0
    # warm-up pass output per scene, a DloError where the pipeline failed
    results: list[PipelineResult | DloError] = dataclasses.field(
            default_factory=list, repr=False, compare=False)

    @property
    def fps(self) -> float:
        return self.n_images / self.total if self.total > 0 else 0.0

    def to_dict(self) -> dict[str, typ.Any]:
        return dict(stages_ms={k: round(v * 1e3, 3)
                               for k, v in self.stages.items()},
                    total_ms=round(self.total * 1e3, 3),
                    ms_per_image=round(self.total * 1e3 / max(self.n_images, 1),
                                       3), fps=round(self.fps, 3),
                    n_images=self.n_images, repetitions=self.repetitions,
                    failures=self.failures)

    def table(self) -> str:
        per = max(self.n_images, 1)
        lines = [f'{"stage":<16}{"ms / image":>12}']
        for name in STAGES:
            ms = self.stages.get(name, 0.0) * 1e3 / per
            lines.append(f'{name:<16}{ms:>12.2f}')
        lines.append(f'{"total":<16}{self.total * 1e3 / per:>12.2f}')
        lines.append(f'{"FPS":<16}{self.fps:>12.2f}')
        return '\n'.join(lines)


def _run_once(image: npt.NDArray[np.uint8], hsv_spec: HsvFilterSpec | None,
              options: PipelineOptions,
              timer: StageTimer) -> PipelineResult | DloError:
    try:
        return run_pipeline(image, hsv_spec=hsv_spec, options=options,
                            timer=timer)
    except DloError as exc:
        return exc


def benchmark(images: typ.Sequence[npt.NDArray[np.uint8]],
              repetitions: int = 3,
              hsv_spec: HsvFilterSpec | None = None,
              options: PipelineOptions = PipelineOptions(),
              progress: bool = False) -> TimingReport:
    if repetitions < 1:
        raise ValueError('repetitions must be >= 1')
    if not images:
        raise ValueError('no images to benchmark')

    warmup = [
            _run_once(img, hsv_spec, options, StageTimer())
            for img in tqdm(images, desc='warm-up',
                            disable=None if progress else True)
    ]
    failures = sum(isinstance(r, DloError) for r in warmup)

    runs: list[tuple[float, dict[str, float]]] = []
    for _ in tqdm(range(repetitions), desc='timing',
                  disable=None if progress else True):
        timer = StageTimer()
        t0 = time.perf_counter()
        for img in images:
            _run_once(img, hsv_spec, options, timer)
        runs.append((time.perf_counter() - t0, dict(timer.durations)))

    total = float(np.median([run[0] for run in runs]))
    stages = {
            name: float(np.median([run[1].get(name, 0.0) for run in runs]))
            for name in STAGES
    }
    logg.debug('benchmark: %d images x %d reps, median %.3f s', len(images),
               repetitions, total)
    return TimingReport(stages=stages, total=total, n_images=len(images),
                        repetitions=repetitions, failures=failures,
                        results=warmup)
