'''
    HSV color-filter configuration

    A filter is a list of bands, one per DLO color family. A pixel passes
    the filter if its HSV value falls inside any band.

    On-disk format is key-value text, one section per band:

        [band.red]
        h_min = 350
        h_max = 10
        s_min = 0.5
        s_max = 1.0
        v_min = 0.3
        v_max = 1.0

    Hue is in degrees. h_min > h_max wraps through 0; h_max may be 360.
'''
from __future__ import annotations

import configparser
import dataclasses
import os

from pyDlo.errors import ConfigurationError

# key: (comment, lower bound, upper bound)
_DICT_METADATA: dict[str, tuple[str, float, float]] = {
        'h_min': ('Hue lower bound [deg]', 0.0, 360.0),
        'h_max': ('Hue upper bound [deg]', 0.0, 360.0),
        's_min': ('Saturation lower bound', 0.0, 1.0),
        's_max': ('Saturation upper bound', 0.0, 1.0),
        'v_min': ('Value lower bound', 0.0, 1.0),
        'v_max': ('Value upper bound', 0.0, 1.0),
}

_SECTION_PREFIX = 'band'


@dataclasses.dataclass(frozen=True)
class HsvBand:
    h_min: float
    h_max: float
    s_min: float
    s_max: float
    v_min: float
    v_max: float

    def __post_init__(self) -> None:
        for key, (comment, low, high) in _DICT_METADATA.items():
            value = getattr(self, key)
            if not low <= value <= high:
                raise ConfigurationError(
                        f'{comment} ({key}) = {value} outside [{low}, {high}]')
        if self.h_min >= 360.0:
            raise ConfigurationError(f'h_min = {self.h_min} must be < 360')
        if self.s_min > self.s_max:
            raise ConfigurationError('empty saturation range in band')
        if self.v_min > self.v_max:
            raise ConfigurationError('empty value range in band')

    @property
    def wraps(self) -> bool:
        return self.h_min > self.h_max


@dataclasses.dataclass(frozen=True)
class HsvFilterSpec:
    bands: tuple[HsvBand, ...]

    def __post_init__(self) -> None:
        if len(self.bands) == 0:
            raise ConfigurationError('HSV filter needs at least one band')


def default_hsv_spec() -> HsvFilterSpec:
    '''
        Any saturated, not-too-dark color. Covers the synthetic scene palette.
    '''
    return HsvFilterSpec((HsvBand(0.0, 360.0, 0.5, 1.0, 0.3, 1.0), ))


def parse_hsv_config(text: str, source: str = '<string>') -> HsvFilterSpec:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f'{source}: {exc}') from exc

    bands: list[HsvBand] = []
    for section in parser.sections():
        if section != _SECTION_PREFIX and not section.startswith(
                _SECTION_PREFIX + '.'):
            raise ConfigurationError(
                    f'{source}: unexpected section [{section}]')
        items = dict(parser.items(section))
        unknown = items.keys() - _DICT_METADATA.keys()
        missing = _DICT_METADATA.keys() - items.keys()
        if unknown:
            raise ConfigurationError(
                    f'{source}: [{section}] unknown keys {sorted(unknown)}')
        if missing:
            raise ConfigurationError(
                    f'{source}: [{section}] missing keys {sorted(missing)}')
        try:
            values = {key: float(items[key]) for key in _DICT_METADATA}
        except ValueError as exc:
            raise ConfigurationError(
                    f'{source}: [{section}] non-numeric value') from exc
        bands.append(HsvBand(**values))

    return HsvFilterSpec(tuple(bands))


def load_hsv_config(path: str | os.PathLike) -> HsvFilterSpec:
    try:
        with open(path, 'r') as fp:
            text = fp.read()
    except OSError as exc:
        raise ConfigurationError(f'cannot read HSV config {path}: {exc}',
                                 stage='configuration') from exc
    return parse_hsv_config(text, source=str(path))


def format_hsv_config(spec: HsvFilterSpec) -> str:
    lines: list[str] = []
    for k, band in enumerate(spec.bands):
        lines.append(f'[{_SECTION_PREFIX}.{k}]')
        for key in _DICT_METADATA:
            lines.append(f'{key} = {getattr(band, key):g}')
        lines.append('')
    return '\n'.join(lines)
