"""Sample types and intensity normalization."""

from dataclasses import dataclass

import numpy as np

from ..errors import DataError


@dataclass(frozen=True)
class SampleMeta:
    patient_id: str
    scan_id: str
    slice_index: int

    def __post_init__(self):
        if self.slice_index < 0:
            raise DataError(f"negative slice_index in {self!r}")

    def key(self):
        return (self.patient_id, self.scan_id, self.slice_index)


@dataclass
class ImageSample:
    """A grayscale slice, values normalized to [-1, 1]."""

    meta: SampleMeta
    image: np.ndarray  # float32 H x W

    def __post_init__(self):
        img = self.image
        if img.ndim != 2:
            raise DataError(f"image must be 2-D, got shape {img.shape} ({self.meta})")
        if img.shape[0] < 16 or img.shape[1] < 16:
            raise DataError(f"image smaller than 16x16: {img.shape} ({self.meta})")
        if not np.all(np.isfinite(img)):
            raise DataError(f"non-finite image values ({self.meta})")
        if img.min() < -1.0 or img.max() > 1.0:
            raise DataError(f"image values outside [-1, 1] ({self.meta})")


@dataclass
class LabeledSample(ImageSample):
    mask: np.ndarray = None  # int64 H x W, values in {0..class_count-1}

    def __post_init__(self):
        super().__post_init__()
        if self.mask is None:
            raise DataError(f"labeled sample without mask ({self.meta})")
        if self.mask.shape != self.image.shape:
            raise DataError(
                f"mask shape {self.mask.shape} != image shape {self.image.shape} ({self.meta})"
            )


def normalize(raw_image, bit_depth):
    """Affine map of integer intensities [0, 2^bit_depth - 1] to float32 [-1, 1]."""
    raw = np.asarray(raw_image)
    top = (1 << bit_depth) - 1
    if raw.size and (raw.min() < 0 or raw.max() > top):
        raise DataError(
            f"raw value outside [0, {top}] for bit depth {bit_depth}: "
            f"min={raw.min()}, max={raw.max()}"
        )
    return (2.0 * raw.astype(np.float32) / np.float32(top) - 1.0).astype(np.float32)


def denormalize(image, bit_depth):
    """Inverse of normalize, rounding back to the integer grid."""
    top = (1 << bit_depth) - 1
    arr = (np.asarray(image, dtype=np.float64) + 1.0) * top / 2.0
    return np.round(arr).astype(np.int64)
