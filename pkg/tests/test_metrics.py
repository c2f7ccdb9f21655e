"""Metric tests against exhaustive brute-force oracles.

The oracles below use python loops and all-pairs distances only; they share no
code with the library implementation.
"""

import math

import numpy as np
import pytest

from grn.errors import ConfigError
from grn.evaluation.metrics import (
    asd,
    class_defined,
    dsc,
    extract_surface,
    hd95,
    image_diagonal,
    iou,
)

# -- oracles ------------------------------------------------------------------


def brute_surface(binary_mask):
    """Foreground pixels with a 4-neighbor that is background or off-image."""
    m = np.asarray(binary_mask, dtype=bool)
    h, w = m.shape
    points = []
    for r in range(h):
        for c in range(w):
            if not m[r, c]:
                continue
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if rr < 0 or rr >= h or cc < 0 or cc >= w or not m[rr, cc]:
                    points.append((r, c))
                    break
    return np.array(points, dtype=np.int64).reshape(-1, 2)


def brute_directed(from_points, to_points):
    """All-pairs nearest distances, python min over explicit hypots."""
    return np.array([
        min(math.hypot(p[0] - q[0], p[1] - q[1]) for q in to_points)
        for p in from_points
    ])


def brute_distance_metrics(pred, gt, class_id):
    """(hd95, asd) from exhaustive pairwise search; None when a side is empty."""
    p_surf = brute_surface(np.asarray(pred) == class_id)
    g_surf = brute_surface(np.asarray(gt) == class_id)
    if len(p_surf) == 0 or len(g_surf) == 0:
        return None
    d_pg = brute_directed(p_surf, g_surf)
    d_gp = brute_directed(g_surf, p_surf)
    hd = max(np.percentile(d_pg, 95), np.percentile(d_gp, 95))
    avg = np.concatenate([d_pg, d_gp]).mean()
    return float(hd), float(avg)


def random_pair(rng, size=16, classes=3):
    pred = rng.integers(0, classes, size=(size, size))
    gt = rng.integers(0, classes, size=(size, size))
    return pred, gt


# -- overlap metrics ----------------------------------------------------------


class TestOverlap:
    def test_identical_masks(self):
        m = np.array([[0, 1], [1, 2]])
        assert dsc(m, m, 1) == 100.0
        assert iou(m, m, 1) == 100.0

    def test_disjoint_masks(self):
        pred = np.array([[1, 1], [0, 0]])
        gt = np.array([[0, 0], [1, 1]])
        assert dsc(pred, gt, 1) == 0.0
        assert iou(pred, gt, 1) == 0.0

    def test_counting_example(self):
        # |P| = 4, |G| = 4, |P∩G| = 2: DSC = 100*4/8 = 50, IoU = 100*2/6 = 33.33
        pred = np.zeros((3, 3), dtype=int)
        gt = np.zeros((3, 3), dtype=int)
        pred[0, :2] = 1
        pred[1, :2] = 1
        gt[0, :2] = 1
        gt[2, :2] = 1
        assert abs(dsc(pred, gt, 1) - 50.0) < 0.01
        assert abs(iou(pred, gt, 1) - 33.33) < 0.01

    def test_absent_class_returns_zero(self):
        m = np.zeros((4, 4), dtype=int)
        assert dsc(m, m, 3) == 0.0
        assert iou(m, m, 3) == 0.0
        assert not class_defined(m, m, 3)

    def test_dsc_iou_identity(self):
        # on the percent scale: DSC = 200*IoU / (100 + IoU) whenever defined
        rng = np.random.default_rng(12)
        checked = 0
        for _ in range(200):
            pred, gt = random_pair(rng)
            for c in range(3):
                if not class_defined(pred, gt, c):
                    continue
                d = dsc(pred, gt, c)
                j = iou(pred, gt, c)
                assert abs(d - 200.0 * j / (100.0 + j)) < 1e-9
                checked += 1
        assert checked > 100

    def test_counting_oracle_random(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            pred, gt = random_pair(rng, size=8)
            for c in range(3):
                p = pred == c
                g = gt == c
                inter = int((p & g).sum())
                if p.sum() + g.sum() > 0:
                    assert abs(dsc(pred, gt, c) - 200.0 * inter / (p.sum() + g.sum())) < 1e-9
                if (p | g).sum() > 0:
                    assert abs(iou(pred, gt, c) - 100.0 * inter / (p | g).sum()) < 1e-9


# -- surfaces -----------------------------------------------------------------


class TestSurface:
    def test_single_pixel(self):
        m = np.zeros((5, 5), dtype=bool)
        m[2, 3] = True
        assert extract_surface(m).tolist() == [[2, 3]]

    def test_filled_block_has_perimeter_only(self):
        m = np.zeros((8, 8), dtype=bool)
        m[2:6, 2:6] = True
        surf = extract_surface(m)
        assert len(surf) == 12  # 4x4 block minus its 2x2 interior
        interior = {(3, 3), (3, 4), (4, 3), (4, 4)}
        assert interior.isdisjoint({tuple(p) for p in surf})

    def test_border_pixels_are_surface(self):
        m = np.ones((4, 4), dtype=bool)
        surf = {tuple(p) for p in extract_surface(m)}
        assert surf == {(r, c) for r in range(4) for c in range(4)
                        if r in (0, 3) or c in (0, 3)}

    def test_empty_mask(self):
        surf = extract_surface(np.zeros((4, 4), dtype=bool))
        assert surf.shape == (0, 2)

    def test_matches_brute_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            m = rng.random((10, 10)) < 0.5
            got = sorted(map(tuple, extract_surface(m)))
            want = sorted(map(tuple, brute_surface(m)))
            assert got == want


# -- surface distances --------------------------------------------------------


class TestDistances:
    def test_identical_masks_are_zero(self):
        rng = np.random.default_rng(15)
        m = rng.integers(0, 2, size=(16, 16))
        assert hd95(m, m, 1) == 0.0
        assert asd(m, m, 1) == 0.0

    def test_two_pixels_five_apart(self):
        pred = np.zeros((8, 8), dtype=int)
        gt = np.zeros((8, 8), dtype=int)
        pred[2, 1] = 1
        gt[2, 6] = 1
        assert asd(pred, gt, 1) == 5.0
        assert hd95(pred, gt, 1) == 5.0

    def test_symmetry(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            pred, gt = random_pair(rng)
            if class_defined(pred, gt, 1):
                assert hd95(pred, gt, 1) == hd95(gt, pred, 1)
                # swap reverses the summation order, so allow an ulp
                assert abs(asd(pred, gt, 1) - asd(gt, pred, 1)) < 1e-12

    def test_empty_side_policies(self):
        empty = np.zeros((16, 16), dtype=int)
        onepx = np.zeros((16, 16), dtype=int)
        onepx[4, 4] = 1
        assert hd95(empty, empty, 1) == 0.0
        assert asd(empty, empty, 1) == 0.0
        diag = image_diagonal((16, 16))
        assert hd95(onepx, empty, 1) == diag
        assert hd95(empty, onepx, 1) == diag
        assert asd(onepx, empty, 1) == diag

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(17)
        compared = 0
        for _ in range(100):
            pred, gt = random_pair(rng)
            oracle = brute_distance_metrics(pred, gt, 1)
            if oracle is None:
                continue
            want_hd, want_asd = oracle
            assert abs(hd95(pred, gt, 1) - want_hd) <= 1e-9
            assert abs(asd(pred, gt, 1) - want_asd) <= 1e-9
            compared += 1
        assert compared > 90


# -- shared plumbing ----------------------------------------------------------


class TestValidation:
    def test_image_diagonal(self):
        assert image_diagonal((3, 4)) == 5.0

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError):
            dsc(np.zeros((3, 3)), np.zeros((4, 4)), 0)
        with pytest.raises(ConfigError):
            hd95(np.zeros((3, 3)), np.zeros((4, 4)), 0)

    def test_non_2d_mask(self):
        with pytest.raises(ConfigError):
            dsc(np.zeros(9), np.zeros(9), 0)
        with pytest.raises(ConfigError):
            extract_surface(np.zeros((2, 2, 2)))

    def test_negative_class(self):
        with pytest.raises(ConfigError):
            iou(np.zeros((3, 3)), np.zeros((3, 3)), -1)
