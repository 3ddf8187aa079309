"""
    JSON artifacts

    Results, intersection dumps and synthetic scene bundles. Every document
    carries "schema": SCHEMA_VERSION, points are [x, y] and keys are sorted so
    identical runs give byte-identical files.

    Scene bundle layout:
        scene.png
        gt_instance_<k>.png      binary mask of instance k (1-based)
        gt_centerline_<k>.json
        meta.json                seed, generator parameters, draw order
"""
from __future__ import annotations

import typing as typ

import glob
import json
import os

import numpy as np

from pyDlo.errors import ImageIOError
from pyDlo.evaluation.scene_gen import SyntheticScene
from pyDlo.interfacing import image_io
from pyDlo.processing.intersections import Intersection, bending_energy
from pyDlo.processing.pipeline import PipelineResult
from pyDlo.processing.tracer import CenterlinePath
from pyDlo.util.img_shapes import rc_to_xy, xy_to_rc

SCHEMA_VERSION = 1
ENERGY_SPACING = 5  # centerline resampling step for the bending energy [px]


def dumps(doc: dict[str, typ.Any]) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + '\n'


def write_json(file_path: str | os.PathLike, doc: dict[str, typ.Any]) -> None:
    image_io.write_text(file_path, dumps(doc))


def read_json(file_path: str | os.PathLike) -> dict[str, typ.Any]:
    try:
        with open(file_path) as fp:
            doc = json.load(fp)
    except (OSError, ValueError) as exc:
        raise ImageIOError(f'cannot read {file_path}: {exc}',
                           stage='io') from exc
    schema = doc.get('schema') if isinstance(doc, dict) else None
    if schema != SCHEMA_VERSION:
        raise ImageIOError(f'{file_path}: unsupported schema {schema!r}',
                           stage='io')
    return doc


def path_energy(path: CenterlinePath) -> float:
    pts = path.pixels[::ENERGY_SPACING]
    if path.pixels[-1] != pts[-1]:
        pts = pts + [path.pixels[-1]]
    if path.cyclic:
        pts = pts + [pts[0]]
    return bending_energy(np.asarray(pts, dtype=np.float64))


def results_document(result: PipelineResult,
                     image_name: str) -> dict[str, typ.Any]:
    h, w = result.mask.shape
    instances = []
    for inst in result.instances:
        energy = path_energy(inst.centerline)
        instances.append(
                dict(id=inst.id,
                     centerline=[rc_to_xy(p) for p in inst.centerline.pixels],
                     radius=[round(float(r), 4) for r in inst.radii],
                     cyclic=inst.centerline.cyclic,
                     area=int(inst.mask.sum()),
                     bending_energy=round(energy, 6)
                     if np.isfinite(energy) else None))

    crossings = [
            dict(center=rc_to_xy(c.center), instances=list(c.instances),
                 top=c.top) for c in result.crossings
    ]
    return dict(schema=SCHEMA_VERSION, image=image_name, width=w, height=h,
                params=dict(delta=result.params.delta,
                            epsilon=result.params.epsilon,
                            max_distance=round(result.params.max_distance,
                                               6)), instances=instances,
                crossings=crossings)


def intersections_document(
        intersections: typ.Sequence[Intersection]) -> dict[str, typ.Any]:
    items = []
    for inter in intersections:
        items.append(
                dict(center=rc_to_xy(inter.center),
                     generated_ends=[rc_to_xy(p) for p in inter.generated_ends],
                     pairing=[list(pair) for pair in inter.energy_pairing],
                     matching_energies=[
                             round(e, 6) if np.isfinite(e) else None
                             for e in inter.matching_energies
                     ], patch_size=len(inter.patch_pixels)))
    return dict(schema=SCHEMA_VERSION, intersections=items)


def write_scene_bundle(directory: str | os.PathLike,
                       scene: SyntheticScene) -> None:
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)
    image_io.write_png(os.path.join(directory, 'scene.png'), scene.image)
    for k, (mask, centerline, radius) in enumerate(
            zip(scene.masks, scene.centerlines, scene.radii), start=1):
        image_io.write_png(os.path.join(directory, f'gt_instance_{k}.png'),
                           mask)
        write_json(
                os.path.join(directory, f'gt_centerline_{k}.json'),
                dict(schema=SCHEMA_VERSION, id=k, radius=round(radius, 6),
                     centerline=[rc_to_xy(p) for p in centerline]))

    write_json(
            os.path.join(directory, 'meta.json'),
            dict(schema=SCHEMA_VERSION, seed=scene.seed, params=scene.params,
                 n_dlos=scene.n_dlos, draw_order=scene.draw_order,
                 radii=[round(r, 6) for r in scene.radii],
                 colors=[list(c) for c in scene.colors]))


def has_ground_truth(directory: str | os.PathLike) -> bool:
    directory = os.fspath(directory)
    return (os.path.isfile(os.path.join(directory, 'meta.json')) and
            bool(glob.glob(os.path.join(directory, 'gt_instance_*.png'))))


def read_scene_bundle(directory: str | os.PathLike) -> SyntheticScene:
    directory = os.fspath(directory)
    meta = read_json(os.path.join(directory, 'meta.json'))
    image = image_io.read_rgb(os.path.join(directory, 'scene.png'))

    masks, centerlines = [], []
    for k in range(1, meta['n_dlos'] + 1):
        masks.append(
                image_io.read_mask(
                        os.path.join(directory, f'gt_instance_{k}.png')))
        doc = read_json(os.path.join(directory, f'gt_centerline_{k}.json'))
        centerlines.append([xy_to_rc(p) for p in doc['centerline']])

    seed = meta['seed']
    return SyntheticScene(image=image, masks=masks, centerlines=centerlines,
                          radii=[float(r) for r in meta['radii']],
                          colors=[tuple(c) for c in meta['colors']],
                          draw_order=list(meta['draw_order']), seed=seed,
                          params=dict(meta['params']))
