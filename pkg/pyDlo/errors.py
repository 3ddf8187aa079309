from __future__ import annotations

import typing as typ


class DloError(Exception):
    """
        Base of every error raised by the pipeline.

        stage: name of the pipeline stage that failed (segmentation, thinning, ...)
        pixel: (row, col) location the failure is attached to, if any
    """

    def __init__(self, message: str, *, stage: str | None = None,
                 pixel: typ.Tuple[int, int] | None = None) -> None:
        super().__init__(message)
        self.stage = stage
        self.pixel = pixel


class ConfigurationError(DloError):
    pass


class DimensionMismatchError(DloError):
    pass


class EmptySceneError(DloError):
    pass


class TopologyError(DloError):
    pass


class DisconnectedCycleError(TopologyError):
    pass


class UnsupportedIntersectionError(DloError):
    pass


class GenerationError(DloError):
    pass


class ImageIOError(DloError):
    pass
