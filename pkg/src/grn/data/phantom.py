"""Synthetic layered-tissue phantom generator.

Each scan gets its own smooth boundary geometry (sum of random sinusoids with
bounded amplitude); slices within a scan share that geometry plus a smaller
per-slice jitter, so slices of one scan look alike while scans differ. Images are
per-layer mean intensities corrupted by multiplicative speckle and additive
Gaussian noise. Everything derives from the config seed, so output files are
byte-identical across runs.

Bands are ordered top to bottom: class 0 (background) first, then the tissue
layers 1..layer_count; thickness_fractions therefore has layer_count + 1 entries.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError
from .manifest import MAX_CLASS_COUNT, load_manifest, write_manifest
from .pngio import write_grayscale

# scan curves get most of the waviness budget, slice jitter the rest
_SCAN_WAVE = 0.8
_SLICE_WAVE = 0.2


@dataclass
class PhantomConfig:
    height: int = 64
    width: int = 64
    layer_count: int = 6
    thickness_fractions: tuple = None  # layer_count+1 entries (background band first)
    waviness: float = 1.5              # max boundary displacement in pixels
    layer_intensities: tuple = None    # layer_count+1 mean intensities in [0, 1]
    speckle_strength: float = 0.35
    additive_sigma: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if self.layer_count < 1 or self.layer_count + 1 > MAX_CLASS_COUNT:
            raise ConfigError(
                f"layer_count must be in [1, {MAX_CLASS_COUNT - 1}] "
                f"(background + layers is capped at {MAX_CLASS_COUNT} classes), got {self.layer_count}"
            )
        if self.height < 16 or self.width < 16:
            raise ConfigError(f"phantom size must be at least 16x16, got {self.height}x{self.width}")
        bands = self.layer_count + 1
        if self.thickness_fractions is None:
            base = 1.0 / bands
            fr = [base] * (bands - 1)
            fr.append(1.0 - sum(fr))
            self.thickness_fractions = tuple(fr)
        self.thickness_fractions = tuple(float(f) for f in self.thickness_fractions)
        if len(self.thickness_fractions) != bands:
            raise ConfigError(
                f"thickness_fractions needs {bands} entries (background + {self.layer_count} layers), "
                f"got {len(self.thickness_fractions)}"
            )
        if any(f <= 0 for f in self.thickness_fractions):
            raise ConfigError("thickness fractions must all be positive")
        if abs(sum(self.thickness_fractions) - 1.0) > 1e-9:
            raise ConfigError(f"thickness fractions must sum to 1, got {sum(self.thickness_fractions)}")
        if self.layer_intensities is None:
            self.layer_intensities = tuple(_default_intensities(bands))
        self.layer_intensities = tuple(float(v) for v in self.layer_intensities)
        if len(self.layer_intensities) != bands:
            raise ConfigError(f"layer_intensities needs {bands} entries")
        if any(not 0.0 <= v <= 1.0 for v in self.layer_intensities):
            raise ConfigError("layer intensities must lie in [0, 1]")
        if self.waviness < 0 or self.speckle_strength < 0 or self.additive_sigma < 0:
            raise ConfigError("waviness / noise settings must be non-negative")


def _default_intensities(bands):
    # dark background, then alternating bright/dark layers so boundaries are visible
    out = [0.05]
    lo, hi = 0.25, 0.55
    for i in range(bands - 1):
        if i % 2 == 0:
            out.append(hi)
            hi += 0.1
        else:
            out.append(lo)
            lo += 0.1
    return out


def _smooth_curve(rng, width, amplitude):
    """Random smooth 1-D curve over columns with |curve| <= amplitude."""
    x = np.arange(width) / width
    curve = np.zeros(width)
    weights = rng.uniform(0.3, 1.0, size=3)
    phases = rng.uniform(0.0, 2 * np.pi, size=3)
    for k in range(3):
        curve += weights[k] * np.sin(2 * np.pi * (k + 1) * x + phases[k])
    return amplitude * curve / weights.sum()


def _boundary_rows(config):
    cum = np.cumsum(config.thickness_fractions)[:-1]  # layer_count boundaries
    return cum * config.height


def generate_phantom(config, n_scans, slices_per_scan, out_dir):
    """Write a phantom dataset (images/, masks/, manifest.json) and return its manifest."""
    if n_scans < 1 or slices_per_scan < 1:
        raise ConfigError("n_scans and slices_per_scan must be >= 1")
    nominal = _boundary_rows(config)
    min_band = min(config.thickness_fractions) * config.height
    if config.waviness > 0 and 2 * config.waviness >= min_band:
        raise DataError(
            f"waviness {config.waviness} would invert layers "
            f"(thinnest band is {min_band:.2f} px; need 2*waviness < band)"
        )

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)

    rows = np.arange(config.height)[:, None]
    records = []
    for s in range(n_scans):
        scan_rng = np.random.default_rng([config.seed, s])
        scan_curves = [
            _smooth_curve(scan_rng, config.width, _SCAN_WAVE * config.waviness)
            for _ in nominal
        ]
        for i in range(slices_per_scan):
            slice_rng = np.random.default_rng([config.seed, s, i])
            mask = np.zeros((config.height, config.width), dtype=np.int64)
            for j, y in enumerate(nominal):
                jitter = _smooth_curve(slice_rng, config.width, _SLICE_WAVE * config.waviness)
                boundary = y + scan_curves[j] + jitter
                mask += rows >= boundary[None, :]

            mu = np.asarray(config.layer_intensities)[mask]
            speckle = 1.0 + config.speckle_strength * slice_rng.standard_normal(mask.shape)
            img = mu * np.clip(speckle, 0.0, None)
            img += config.additive_sigma * slice_rng.standard_normal(mask.shape)
            img8 = np.round(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)

            name = f"scan{s:03d}_slice{i:03d}.png"
            write_grayscale(out_dir / "images" / name, img8, bit_depth=8)
            write_grayscale(out_dir / "masks" / name, mask, bit_depth=8)
            records.append({
                "patient_id": f"pat{s:03d}",
                "scan_id": f"scan{s:03d}",
                "slice_index": i,
                "image": f"images/{name}",
                "mask": f"masks/{name}",
            })

    write_manifest(out_dir, config.layer_count + 1, records)
    return load_manifest(out_dir)
