"""
    Raster file I/O

    PNG / PGM through Pillow, FITS through astropy (distance maps and masks
    for debugging). Everything returned is in the "Matrix" convention
    (see pyDlo.util.img_shapes): arr[row, col].

    All writers go through a temporary sibling file and os.replace, so a
    crashed run never leaves half a PNG on disk.
"""
from __future__ import annotations

import typing as typ

import contextlib
import os
import tempfile

import numpy as np
import numpy.typing as npt
from astropy.io import fits
from PIL import Image

from pyDlo.errors import ImageIOError

_FITS_SUFFIXES = ('.fits', '.fit', '.fts')


@contextlib.contextmanager
def atomic_path(file_path: str | os.PathLike) -> typ.Iterator[str]:
    """
        Yield a temporary path next to file_path; move it in place on success.
    """
    file_path = os.fspath(file_path)
    directory = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(directory, exist_ok=True)
    _, suffix = os.path.splitext(file_path)
    fd, tmp_path = tempfile.mkstemp(suffix=suffix, dir=directory,
                                    prefix='.tmp_')
    os.close(fd)
    try:
        yield tmp_path
        os.replace(tmp_path, file_path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.remove(tmp_path)
        raise


def write_text(file_path: str | os.PathLike, text: str) -> None:
    try:
        with atomic_path(file_path) as tmp:
            with open(tmp, 'w') as fp:
                fp.write(text)
    except OSError as exc:
        raise ImageIOError(f'cannot write {file_path}: {exc}',
                           stage='io') from exc


def _open_pillow(file_path: str | os.PathLike) -> Image.Image:
    try:
        img = Image.open(file_path)
        img.load()
    except (OSError, ValueError) as exc:
        raise ImageIOError(f'cannot read image {file_path}: {exc}',
                           stage='io') from exc
    return img


def read_rgb(file_path: str | os.PathLike) -> npt.NDArray[np.uint8]:
    """
        Read an 8-bit RGB(A) PNG or a PGM as (H, W, 3) uint8. Alpha is dropped,
        grayscale is replicated on the three channels.
    """
    img = _open_pillow(file_path)
    if img.mode in ('I', 'I;16', 'I;16B', 'F'):
        data = np.asarray(img, dtype=np.float64)
        top = data.max() if data.size and data.max() > 0 else 1.0
        gray = np.clip(np.round(data * 255.0 / top), 0, 255).astype(np.uint8)
        return np.repeat(gray[:, :, None], 3, axis=2)

    return np.asarray(img.convert('RGB'), dtype=np.uint8).copy()


def read_fits(file_path: str | os.PathLike) -> npt.NDArray:
    """
        First HDU of a FITS file, copied out of the file buffer.
    """
    try:
        hdu_list = fits.open(file_path, mmap=False)
    except (OSError, ValueError) as exc:
        raise ImageIOError(f'cannot read FITS {file_path}: {exc}',
                           stage='io') from exc
    data = np.array(hdu_list[0].data, copy=True)  # type: ignore

    # Cleanup
    hdu_list.close()
    for hh in hdu_list:
        del hh.data  # type: ignore

    return data


def write_fits(file_path: str | os.PathLike, data: npt.NDArray) -> None:
    try:
        with atomic_path(file_path) as tmp:
            fits.PrimaryHDU(np.asarray(data)).writeto(tmp, overwrite=True)
    except OSError as exc:
        raise ImageIOError(f'cannot write FITS {file_path}: {exc}',
                           stage='io') from exc


def read_mask(file_path: str | os.PathLike) -> npt.NDArray[np.bool_]:
    """
        Binary mask from PNG / PGM / FITS: any nonzero sample is foreground.
    """
    if os.fspath(file_path).lower().endswith(_FITS_SUFFIXES):
        data = read_fits(file_path)
        if data.ndim != 2:
            raise ImageIOError(f'{file_path}: FITS mask must be 2D',
                               stage='io')
        return data != 0

    img = _open_pillow(file_path)
    data = np.asarray(img)
    if data.ndim == 3:
        data = data[:, :, :3].max(axis=2)
    return data != 0


def write_png(file_path: str | os.PathLike, data: npt.NDArray) -> None:
    """
        bool -> 1-bit, 2D uint8 -> grayscale, (H, W, 3) uint8 -> RGB.
    """
    data = np.asarray(data)
    if data.dtype == bool:
        img = Image.fromarray(data)
    elif data.ndim == 2 or (data.ndim == 3 and data.shape[2] == 3):
        img = Image.fromarray(data.astype(np.uint8))
    else:
        raise ValueError(f'cannot encode array of shape {data.shape} as PNG')
    _save(img, file_path)


def write_indexed_png(file_path: str | os.PathLike,
                      labels: npt.NDArray[np.integer],
                      palette: npt.NDArray[np.uint8]) -> None:
    """
        Label image (0 = background, k = instance k) with a (n, 3) palette.
    """
    labels = np.asarray(labels)
    if labels.max(initial=0) > 255:
        raise ValueError('indexed PNG holds at most 255 labels')
    # putpalette turns the L image into a P image
    img = Image.fromarray(labels.astype(np.uint8))
    flat = np.zeros((256, 3), dtype=np.uint8)
    flat[:len(palette)] = palette[:256]
    img.putpalette(flat.reshape(-1).tolist())
    _save(img, file_path)


def _save(img: Image.Image, file_path: str | os.PathLike) -> None:
    try:
        with atomic_path(file_path) as tmp:
            img.save(tmp, format='PNG')
    except OSError as exc:
        raise ImageIOError(f'cannot write {file_path}: {exc}',
                           stage='io') from exc
