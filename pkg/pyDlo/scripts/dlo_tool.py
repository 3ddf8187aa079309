#!/usr/bin/env python
'''
dlo_tool.py

Instance segmentation of deformable linear objects (cables, ropes, wires).

Usage:
    dlo_tool.py run <input>... [options]
    dlo_tool.py gen [options]
    dlo_tool.py bench <dataset> [options]
    dlo_tool.py -h | --help

Options:
    --out=<dir>           Output directory [default: out]
    --hsv-config=<path>   HSV band config (INI); default: saturated colors
    --mask-input          Inputs are binary masks, not color images
    --overlay             Write an overlay.png per image
    --debug-dumps         Write intermediate rasters under <out>/<image>/debug
    --allow-cycles        Trace closed loops that have no end
    --seed=<u64>          Generator seed [default: 0]
    --tier=<n>            Number of DLOs per generated scene, 1 to 3 [default: 1]
    --count=<n>           Number of scenes to generate [default: 10]
    --width=<px>          Generated scene width [default: 896]
    --height=<px>         Generated scene height [default: 672]
    --reps=<n>            Timed repetitions [default: 3]
    -v                    Debug logging

Exit status: 0 success, 2 usage, 3 a per-image pipeline failure occurred,
4 I/O error. Diagnostics go to stderr, one JSON object per line.
'''
from __future__ import annotations

import typing as typ

import glob
import json
import logging
import os
import sys

import numpy as np
from docopt import DocoptExit, docopt
from tqdm import tqdm

from pyDlo.errors import ConfigurationError, DloError, ImageIOError
from pyDlo.evaluation.benchmark import benchmark
from pyDlo.evaluation.metrics import (DiceReport, crossing_accuracy,
                                      evaluate, evaluate_masks)
from pyDlo.evaluation.scene_gen import TIER_DLOS, generate_scene
from pyDlo.interfacing import image_io, results_io
from pyDlo.interfacing.hsv_config import (HsvFilterSpec, default_hsv_spec,
                                          format_hsv_config, load_hsv_config)
from pyDlo.processing.pipeline import (PipelineOptions, PipelineResult,
                                       run_pipeline)
from pyDlo.util.img_shapes import rc_to_xy
from pyDlo.visual import overlay

logg = logging.getLogger(__name__)
diag = logging.getLogger('pyDlo.diagnostics')

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PIPELINE = 3
EXIT_IO = 4

_DIAG_FIELDS = ('stage', 'image', 'error', 'pixel')


class JsonLineFormatter(logging.Formatter):
    """
        One JSON object per record: level, message and, when known, the
        failing stage, image, error class and pixel [x, y].
    """

    def format(self, record: logging.LogRecord) -> str:
        doc: dict[str, typ.Any] = dict(level=record.levelname.lower(),
                                       message=record.getMessage(),
                                       logger=record.name)
        for key in _DIAG_FIELDS:
            doc[key] = getattr(record, key, None)
        return json.dumps(doc, sort_keys=True)


def setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLineFormatter())
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        handlers=[handler], force=True)


def report_error(exc: DloError, image: str | None = None) -> None:
    diag.error(str(exc),
               extra=dict(stage=exc.stage, image=image,
                          error=type(exc).__name__,
                          pixel=None if exc.pixel is None else rc_to_xy(
                                  exc.pixel)))


def _int_option(args: dict, key: str, lo: int, hi: int | None = None) -> int:
    try:
        value = int(args[key])
    except (TypeError, ValueError):
        raise ConfigurationError(f'{key} must be an integer',
                                 stage='cli') from None
    if value < lo or (hi is not None and value > hi):
        bound = f'[{lo}, {hi}]' if hi is not None else f'>= {lo}'
        raise ConfigurationError(f'{key} must be in {bound}', stage='cli')
    return value


def _stem(file_path: str) -> str:
    return os.path.splitext(os.path.basename(file_path))[0]


def write_run_outputs(directory: str, name: str, result: PipelineResult,
                      image: np.ndarray | None, with_overlay: bool,
                      debug_dumps: bool,
                      hsv_spec: HsvFilterSpec | None = None) -> None:
    results_io.write_json(os.path.join(directory, 'results.json'),
                          results_io.results_document(result, name))

    labels = overlay.label_image(result.instances, result.mask.shape,
                                 result.crossings)
    image_io.write_indexed_png(
            os.path.join(directory, 'instances.png'), labels,
            overlay.instance_palette(len(result.instances)))
    for inst in result.instances:
        image_io.write_png(os.path.join(directory, f'instance_{inst.id}.png'),
                           inst.mask)

    if with_overlay:
        base = image if image is not None else np.repeat(
                result.mask[:, :, None].astype(np.uint8) * 255, 3, axis=2)
        image_io.write_png(
                os.path.join(directory, 'overlay.png'),
                overlay.overlay(base, labels,
                                [inst.centerline.pixels
                                 for inst in result.instances]))

    if debug_dumps:
        debug = os.path.join(directory, 'debug')
        image_io.write_png(os.path.join(debug, 'mask.png'), result.mask)
        image_io.write_png(os.path.join(debug, 'skeleton.png'),
                           result.skeleton)
        image_io.write_png(os.path.join(debug, 'pruned.png'), result.pruned)
        image_io.write_png(os.path.join(debug, 'repaired.png'),
                           result.repaired)
        image_io.write_png(os.path.join(debug, 'keypoints.png'),
                           overlay.keypoint_image(result.pruned,
                                                  result.keypoints))
        image_io.write_fits(os.path.join(debug, 'distance.fits'), result.dist)
        results_io.write_json(
                os.path.join(debug, 'intersections.json'),
                results_io.intersections_document(result.intersections))
        if image is not None and hsv_spec is not None:
            # the bands that produced mask.png
            image_io.write_text(os.path.join(debug, 'hsv.ini'),
                                format_hsv_config(hsv_spec))


def cmd_run(args: dict) -> int:
    hsv_spec = (load_hsv_config(args['--hsv-config'])
                if args['--hsv-config'] else default_hsv_spec())
    options = PipelineOptions(allow_cycles=args['--allow-cycles'])

    io_failed = pipeline_failed = False
    for input_path in args['<input>']:
        name = os.path.basename(input_path)
        try:
            if args['--mask-input']:
                image, mask = None, image_io.read_mask(input_path)
            else:
                image, mask = image_io.read_rgb(input_path), None
            result = run_pipeline(image, mask=mask, hsv_spec=hsv_spec,
                                  options=options)
            write_run_outputs(os.path.join(args['--out'], _stem(input_path)),
                              name, result, image, args['--overlay'],
                              args['--debug-dumps'], hsv_spec)
        except ImageIOError as exc:
            report_error(exc, name)
            io_failed = True
        except DloError as exc:
            report_error(exc, name)
            pipeline_failed = True
        else:
            logg.info('%s: %d instances', name, len(result.instances))

    if io_failed:
        return EXIT_IO
    return EXIT_PIPELINE if pipeline_failed else EXIT_OK


def cmd_gen(args: dict) -> int:
    seed = _int_option(args, '--seed', 0, 2**64 - 1)
    tier = _int_option(args, '--tier', 1, 3)
    count = _int_option(args, '--count', 1)
    width = _int_option(args, '--width', 128)
    height = _int_option(args, '--height', 128)

    failed = False
    for k in tqdm(range(count), desc='gen', disable=None):
        name = f'scene_{k:04d}'
        try:
            scene = generate_scene([seed, k], TIER_DLOS[tier], width=width,
                                   height=height)
        except DloError as exc:
            report_error(exc, name)
            failed = True
            continue
        results_io.write_scene_bundle(os.path.join(args['--out'], name),
                                      scene)
    return EXIT_PIPELINE if failed else EXIT_OK


def find_bundles(dataset: str) -> list[str]:
    if os.path.isfile(os.path.join(dataset, 'scene.png')):
        return [dataset]
    return sorted(
            os.path.dirname(p)
            for p in glob.glob(os.path.join(dataset, '*', 'scene.png')))


def cmd_bench(args: dict) -> int:
    reps = _int_option(args, '--reps', 1)
    hsv_spec = (load_hsv_config(args['--hsv-config'])
                if args['--hsv-config'] else default_hsv_spec())
    bundles = find_bundles(args['<dataset>'])
    if not bundles:
        raise ConfigurationError(
                f'no scene bundles under {args["<dataset>"]}', stage='cli')

    images = [
            image_io.read_rgb(os.path.join(b, 'scene.png')) for b in bundles
    ]
    report = benchmark(images, reps, hsv_spec=hsv_spec, progress=True)

    per_scene = []
    dice_scores: list[float] = []
    correct = scored = 0
    missing_gt = 0
    for bundle, result in zip(bundles, report.results):
        name = os.path.basename(os.path.normpath(bundle))
        if isinstance(result, DloError):
            report_error(result, name)
        if not results_io.has_ground_truth(bundle):
            missing_gt += 1
            continue
        truth = results_io.read_scene_bundle(bundle)
        if isinstance(result, DloError):
            dice_report: DiceReport = evaluate_masks([], truth.masks)
        else:
            dice_report = evaluate(result.instances, truth)
            ok, n = crossing_accuracy(result.crossings, dice_report, truth)
            correct += ok
            scored += n
        dice_scores.append(dice_report.mean)
        per_scene.append(dict(scene=name, **dice_report.to_dict()))

    if missing_gt:
        diag.warning(
                f'{missing_gt} of {len(bundles)} scenes have no ground truth; '
                'evaluation skipped for them',
                extra=dict(stage='evaluation', image=None, error=None,
                           pixel=None))

    doc: dict[str, typ.Any] = dict(schema=results_io.SCHEMA_VERSION,
                                   timing=report.to_dict(), dice=None,
                                   crossing_order=None, scenes=per_scene)
    if dice_scores:
        doc['dice'] = dict(mean=round(float(np.mean(dice_scores)), 6),
                           std=round(float(np.std(dice_scores)), 6),
                           n_scenes=len(dice_scores))
    if scored:
        doc['crossing_order'] = dict(correct=correct, scored=scored,
                                     accuracy=round(correct / scored, 6))
    results_io.write_json(os.path.join(args['--out'], 'bench_report.json'),
                          doc)

    print(report.table())
    if doc['dice'] is not None:
        print(f'{"mean DICE":<16}{doc["dice"]["mean"]:>12.4f}')
        print(f'{"DICE std":<16}{doc["dice"]["std"]:>12.4f}')
    if doc['crossing_order'] is not None:
        print(f'{"crossing order":<16}'
              f'{doc["crossing_order"]["accuracy"]:>12.4f}')
    return EXIT_PIPELINE if report.failures else EXIT_OK


def main(argv: typ.Sequence[str] | None = None) -> int:
    try:
        args = docopt(__doc__, argv=argv)
    except DocoptExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    setup_logging(args['-v'])
    try:
        if args['run']:
            return cmd_run(args)
        if args['gen']:
            return cmd_gen(args)
        return cmd_bench(args)
    except ConfigurationError as exc:
        report_error(exc)
        return EXIT_USAGE
    except ImageIOError as exc:
        report_error(exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
