"""Single-channel PNG reading/writing (8-bit and 16-bit) via Pillow."""

import numpy as np
from PIL import Image

from ..errors import DataError


def read_grayscale(path):
    """Read a single-channel PNG. Returns (int array, bit_depth)."""
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise DataError(f"image file missing: {path}")
    except Exception as exc:  # Pillow raises various decode errors
        raise DataError(f"cannot decode {path}: {exc}")
    if img.mode == "L":
        return np.asarray(img, dtype=np.int64), 8
    if img.mode in ("I;16", "I"):
        arr = np.asarray(img, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() > 65535):
            raise DataError(f"{path}: values outside 16-bit range")
        return arr, 16
    raise DataError(f"{path}: unsupported PNG mode {img.mode} (need single-channel)")


def write_grayscale(path, array, bit_depth=8):
    arr = np.asarray(array)
    if bit_depth == 8:
        if arr.min() < 0 or arr.max() > 255:
            raise DataError(f"values outside 8-bit range when writing {path}")
        Image.fromarray(arr.astype(np.uint8), mode="L").save(path)
    elif bit_depth == 16:
        if arr.min() < 0 or arr.max() > 65535:
            raise DataError(f"values outside 16-bit range when writing {path}")
        Image.fromarray(arr.astype(np.uint16)).save(path)
    else:
        raise DataError(f"unsupported bit depth {bit_depth}")


def write_rgb(path, array):
    arr = np.asarray(array)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError(f"RGB array must be HxWx3, got {arr.shape}")
    Image.fromarray(arr.astype(np.uint8), mode="RGB").save(path)
