"""Segmentation metrics: overlap (DSC, IoU) and surface distances (HD95, ASD).

Conventions, fixed bit-exactly: surfaces use 4-connectivity (a foreground
pixel is on the surface if any 4-neighbor is background or out of bounds);
distances are Euclidean in pixel units; percentiles use linear interpolation.

Empty-mask policy: a (prediction, truth, class) triple is *defined* only when
both masks contain the class. Undefined triples get placeholder values (0 for
overlap metrics and for both-empty distances; the image diagonal for
one-empty distances) and are excluded from aggregation by the caller.
"""

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConfigError


def _binary(mask, class_id):
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ConfigError(f"expected a 2-D mask, got shape {mask.shape}")
    if class_id < 0:
        raise ConfigError(f"class_id must be >= 0, got {class_id}")
    return mask == class_id

def _check_pair(pred_mask, gt_mask):
    if np.asarray(pred_mask).shape != np.asarray(gt_mask).shape:
        raise ConfigError(
            f"mask shape mismatch: {np.asarray(pred_mask).shape} vs "
            f"{np.asarray(gt_mask).shape}"
        )


def image_diagonal(shape):
    return float(np.hypot(shape[0], shape[1]))


def class_defined(pred_mask, gt_mask, class_id):
    """True when both masks contain the class (metrics are meaningful)."""
    _check_pair(pred_mask, gt_mask)
    return bool(_binary(pred_mask, class_id).any() and _binary(gt_mask, class_id).any())


def dsc(pred_mask, gt_mask, class_id):
    """Dice similarity as a percentage: 100 * 2|P∩G| / (|P| + |G|)."""
    _check_pair(pred_mask, gt_mask)
    p = _binary(pred_mask, class_id)
    g = _binary(gt_mask, class_id)
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 0.0
    return 100.0 * 2.0 * int((p & g).sum()) / denom


def iou(pred_mask, gt_mask, class_id):
    """Intersection over union as a percentage: 100 * |P∩G| / |P∪G|."""
    _check_pair(pred_mask, gt_mask)
    p = _binary(pred_mask, class_id)
    g = _binary(gt_mask, class_id)
    union = int((p | g).sum())
    if union == 0:
        return 0.0
    return 100.0 * int((p & g).sum()) / union


def extract_surface(binary_mask):
    """Coordinates (N, 2) of foreground pixels with a background 4-neighbor.

    Pixels on the image border count as surface (out of bounds is background).
    """
    m = np.asarray(binary_mask, dtype=bool)
    if m.ndim != 2:
        raise ConfigError(f"expected a 2-D mask, got shape {m.shape}")
    if not m.any():
        return np.zeros((0, 2), dtype=np.int64)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[1:-1, :-2] & padded[1:-1, 2:] & padded[:-2, 1:-1] & padded[2:, 1:-1]
    )
    return np.argwhere(m & ~interior)


def _directed_distances(from_points, to_points):
    distances, _ = cKDTree(to_points).query(from_points)
    return np.atleast_1d(distances)


def _surface_distance_lists(pred_mask, gt_mask, class_id):
    """Directed surface-distance lists (pred-to-gt, gt-to-pred), or None when
    either side is empty."""
    _check_pair(pred_mask, gt_mask)
    p = _binary(pred_mask, class_id)
    g = _binary(gt_mask, class_id)
    if not p.any() or not g.any():
        return None
    surf_p = extract_surface(p)
    surf_g = extract_surface(g)
    return _directed_distances(surf_p, surf_g), _directed_distances(surf_g, surf_p)


def _empty_side_value(pred_mask, gt_mask, class_id):
    p_any = bool(_binary(pred_mask, class_id).any())
    g_any = bool(_binary(gt_mask, class_id).any())
    if not p_any and not g_any:
        return 0.0
    return image_diagonal(np.asarray(gt_mask).shape)


def hd95(pred_mask, gt_mask, class_id):
    """95th-percentile Hausdorff distance in pixels.

    Max over both directions of the 95th percentile (linear interpolation) of
    nearest-surface distances. One empty side yields the image diagonal; both
    empty yields 0 (callers exclude these via the defined flag).
    """
    lists = _surface_distance_lists(pred_mask, gt_mask, class_id)
    if lists is None:
        return _empty_side_value(pred_mask, gt_mask, class_id)
    d_pg, d_gp = lists
    return float(max(np.percentile(d_pg, 95), np.percentile(d_gp, 95)))


def asd(pred_mask, gt_mask, class_id):
    """Average surface distance in pixels: mean of both directed lists
    concatenated. Empty-side policy as hd95."""
    lists = _surface_distance_lists(pred_mask, gt_mask, class_id)
    if lists is None:
        return _empty_side_value(pred_mask, gt_mask, class_id)
    d_pg, d_gp = lists
    return float(np.concatenate([d_pg, d_gp]).mean())
