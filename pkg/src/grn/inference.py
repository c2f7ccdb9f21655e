"""Prediction with optional enhancement, stack processing, and mask export.

The enhanced pipeline feeds images through the trained generator before the
segmentor; the generator's output range matches the segmentor's training
input range, so no re-normalization happens between the two.
"""

import logging
import time
from pathlib import Path

import numpy as np
import torch

from .data.pngio import write_grayscale, write_rgb
from .errors import ConfigError
from .utils import sha256_file, write_json

log = logging.getLogger(__name__)

DEFAULT_PALETTE = (
    (0, 0, 0),
    (230, 80, 60),
    (70, 160, 230),
    (90, 200, 110),
    (240, 200, 70),
    (180, 100, 220),
    (250, 140, 40),
)


def _as_batch_tensor(image, device):
    arr = np.asarray(image, dtype=np.float32)
    if arr.ndim != 2:
        raise ConfigError(f"expected a 2-D image, got shape {arr.shape}")
    return torch.from_numpy(arr).reshape(1, 1, *arr.shape).to(device)


def predict_logits(bundle, image, use_sge=False):
    """Raw segmentor logits (C, H, W) for one image, without gradients."""
    bundle.eval_mode()
    with torch.no_grad():
        x = _as_batch_tensor(image, bundle.device)
        if use_sge:
            x = bundle.generator(x)
        return bundle.segmentor(x)[0]


def predict(bundle, image, use_sge=False, emit_probabilities=False):
    """Hard class mask via argmax; ties go to the lowest class index.

    With emit_probabilities=True returns (mask, probability maps) instead.
    """
    logits = predict_logits(bundle, image, use_sge=use_sge)
    scores = logits.cpu().numpy()
    # numpy argmax returns the first maximal index, which is the lowest class.
    mask = np.argmax(scores, axis=0).astype(np.int64)
    if emit_probabilities:
        probs = torch.softmax(logits, dim=0).cpu().numpy()
        return mask, probs
    return mask


def predict_stack(bundle, images, use_sge=False):
    """Slice-wise prediction over an ordered sequence of images.

    Returns (masks, timings): a (N, H, W) int64 stack in input order and a
    list of per-slice wall-clock seconds.
    """
    masks = []
    timings = []
    for image in images:
        start = time.perf_counter()
        masks.append(predict(bundle, image, use_sge=use_sge))
        timings.append(time.perf_counter() - start)
    if not masks:
        return np.zeros((0, 0, 0), dtype=np.int64), []
    log.info(
        "predicted %d slices, mean %.4f s/slice", len(masks),
        float(np.mean(timings)),
    )
    return np.stack(masks), timings


def export_overlay(image, mask, path, palette=DEFAULT_PALETTE, alpha=0.5):
    """Blend a normalized image with per-class palette colors and write a PNG.

    Class 0 is left as pure grayscale; foreground classes mix the gray value
    with their palette color at the given alpha.
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask)
    if image.shape != mask.shape:
        raise ConfigError(
            f"image shape {image.shape} does not match mask shape {mask.shape}"
        )
    n_classes = int(mask.max()) + 1
    if len(palette) < n_classes:
        raise ConfigError(
            f"palette has {len(palette)} entries but the mask uses {n_classes} classes"
        )
    gray = np.clip((image + 1.0) * 0.5, 0.0, 1.0) * 255.0
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    colors = np.asarray(palette, dtype=np.float64)
    fg = mask > 0
    rgb[fg] = (1.0 - alpha) * rgb[fg] + alpha * colors[mask[fg]]
    write_rgb(path, np.round(rgb).astype(np.uint8))
    return path


def save_prediction(bundle, image, image_path, out_dir, use_sge=False,
                    checkpoint_path=None, overlay=False):
    """Predict one image and write the mask PNG plus a JSON sidecar.

    The mask file reuses the input stem with a `_pred` suffix; the sidecar
    records the checkpoint hash, the enhancement flag, and timing.
    """
    image_path = Path(image_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    mask = predict(bundle, image, use_sge=use_sge)
    elapsed = time.perf_counter() - start

    mask_path = out_dir / f"{image_path.stem}_pred.png"
    write_grayscale(mask_path, mask.astype(np.int64), bit_depth=8)
    sidecar = {
        "source": image_path.name,
        "mask": mask_path.name,
        "use_sge": bool(use_sge),
        "checkpoint_sha256": sha256_file(checkpoint_path) if checkpoint_path else None,
        "seconds": elapsed,
    }
    write_json(out_dir / f"{image_path.stem}_pred.json", sidecar)
    if overlay:
        export_overlay(image, mask, out_dir / f"{image_path.stem}_overlay.png")
    return mask_path, mask
