"""Inference: prediction, stacks, overlays, and the saved-prediction bundle."""

import hashlib
import json

import numpy as np
import pytest
import torch
from PIL import Image

from conftest import oracle_bundle, slim_bundle_kwargs, toy_labeled_samples
from grn.data.pngio import read_grayscale
from grn.errors import ConfigError
from grn.inference import (
    DEFAULT_PALETTE,
    export_overlay,
    predict,
    predict_logits,
    predict_stack,
    save_prediction,
)
from grn.models import build_bundle, save_checkpoint


class FixedLogits(torch.nn.Module):
    """Emits one constant logit vector at every pixel."""

    def __init__(self, per_class_scores):
        super().__init__()
        self.scores = torch.tensor(per_class_scores, dtype=torch.float32)

    def forward(self, x):
        b, _, h, w = x.shape
        return self.scores.reshape(1, -1, 1, 1).expand(b, -1, h, w).clone()


def stub_bundle(per_class_scores):
    bundle = oracle_bundle()
    bundle.segmentor = FixedLogits(per_class_scores)
    return bundle


class TestPredict:
    def test_oracle_predicts_the_mask(self):
        bundle = oracle_bundle()
        sample = toy_labeled_samples(n=1, classes=4)[0]
        assert np.array_equal(predict(bundle, sample.image), sample.mask)

    def test_ties_resolve_to_the_lowest_class(self):
        image = np.zeros((16, 16), dtype=np.float32)
        assert predict(stub_bundle([0.0, 0.0, 0.0]), image).max() == 0
        assert predict(stub_bundle([1.0, 5.0, 5.0]), image).min() == 1

    def test_probability_output(self):
        image = np.zeros((16, 16), dtype=np.float32)
        mask, probs = predict(stub_bundle([0.0, 1.0, 2.0]), image,
                              emit_probabilities=True)
        assert probs.shape == (3, 16, 16)
        assert np.allclose(probs.sum(axis=0), 1.0, atol=1e-6)
        assert np.array_equal(mask, probs.argmax(axis=0))

    def test_logits_shape_and_input_validation(self):
        bundle = oracle_bundle()
        sample = toy_labeled_samples(n=1, classes=4)[0]
        logits = predict_logits(bundle, sample.image)
        assert tuple(logits.shape) == (4, 32, 32)
        with pytest.raises(ConfigError):
            predict(bundle, np.zeros((2, 16, 16), dtype=np.float32))

    def test_identity_generator_makes_enhancement_a_no_op(self):
        bundle = build_bundle(
            segmentor_config=slim_bundle_kwargs()["segmentor_config"],
            generator_config=None,
            discriminator_config=slim_bundle_kwargs()["discriminator_config"],
            seed=0,
        )
        rng = np.random.default_rng(8)
        for _ in range(10):
            image = rng.uniform(-1, 1, size=(32, 32)).astype(np.float32)
            plain = predict_logits(bundle, image, use_sge=False)
            enhanced = predict_logits(bundle, image, use_sge=True)
            assert torch.equal(plain, enhanced)
            assert np.array_equal(predict(bundle, image, use_sge=False),
                                  predict(bundle, image, use_sge=True))


class TestPredictStack:
    def test_order_and_shape(self):
        bundle = oracle_bundle()
        samples = toy_labeled_samples(n=3, classes=4)
        masks, timings = predict_stack(bundle, [s.image for s in samples])
        assert masks.shape == (3, 32, 32)
        assert len(timings) == 3
        assert all(t >= 0 for t in timings)
        for i, s in enumerate(samples):
            assert np.array_equal(masks[i], s.mask)

    def test_identical_slices_agree(self):
        bundle = oracle_bundle()
        image = toy_labeled_samples(n=1, classes=4)[0].image
        masks, _ = predict_stack(bundle, [image, image, image])
        assert np.array_equal(masks[0], masks[1])
        assert np.array_equal(masks[1], masks[2])

    def test_empty_stack(self):
        masks, timings = predict_stack(oracle_bundle(), [])
        assert masks.shape == (0, 0, 0)
        assert timings == []


class TestOverlay:
    def test_background_only_is_pure_grayscale(self, tmp_path):
        rng = np.random.default_rng(4)
        image = rng.uniform(-1, 1, size=(16, 16))
        mask = np.zeros((16, 16), dtype=np.int64)
        path = export_overlay(image, mask, tmp_path / "bg.png")
        got = np.asarray(Image.open(path))
        gray = np.round(np.clip((image + 1.0) * 0.5, 0, 1) * 255.0).astype(np.uint8)
        assert np.array_equal(got, np.repeat(gray[:, :, None], 3, axis=2))

    def test_foreground_blend_value(self, tmp_path):
        image = np.zeros((16, 16))  # gray level 127.5
        mask = np.zeros((16, 16), dtype=np.int64)
        mask[5, 5] = 1
        path = export_overlay(image, mask, tmp_path / "fg.png", alpha=0.5)
        got = np.asarray(Image.open(path))
        expected = np.round(0.5 * 127.5 + 0.5 * np.asarray(DEFAULT_PALETTE[1]))
        assert np.array_equal(got[5, 5], expected.astype(np.uint8))

    def test_deterministic_bytes(self, tmp_path):
        rng = np.random.default_rng(5)
        image = rng.uniform(-1, 1, size=(16, 16))
        mask = rng.integers(0, 3, size=(16, 16))
        a = export_overlay(image, mask, tmp_path / "a.png")
        b = export_overlay(image, mask, tmp_path / "b.png")
        assert a.read_bytes() == b.read_bytes()

    def test_validation(self, tmp_path):
        image = np.zeros((16, 16))
        with pytest.raises(ConfigError):
            export_overlay(image, np.zeros((8, 8), dtype=np.int64), tmp_path / "x.png")
        mask = np.ones((16, 16), dtype=np.int64)
        with pytest.raises(ConfigError, match="palette"):
            export_overlay(image, mask, tmp_path / "x.png", palette=((0, 0, 0),))


class TestSavePrediction:
    def test_outputs_and_sidecar(self, tmp_path):
        bundle = oracle_bundle()
        sample = toy_labeled_samples(n=1, classes=4)[0]
        mask_path, mask = save_prediction(
            bundle, sample.image, "scan000_slice003.png", tmp_path / "out"
        )
        assert mask_path.name == "scan000_slice003_pred.png"
        stored, _ = read_grayscale(mask_path)
        assert np.array_equal(stored, mask)
        assert np.array_equal(mask, sample.mask)

        sidecar = json.loads((tmp_path / "out" / "scan000_slice003_pred.json").read_text())
        assert sidecar["source"] == "scan000_slice003.png"
        assert sidecar["mask"] == "scan000_slice003_pred.png"
        assert sidecar["use_sge"] is False
        assert sidecar["checkpoint_sha256"] is None
        assert sidecar["seconds"] >= 0

    def test_checkpoint_hash_and_overlay(self, tmp_path):
        bundle = build_bundle(seed=0, **slim_bundle_kwargs())
        ckpt = save_checkpoint(bundle, tmp_path / "model.pt")
        sample = toy_labeled_samples(n=1, classes=4)[0]
        save_prediction(bundle, sample.image, "slice.png", tmp_path / "out",
                        use_sge=True, checkpoint_path=ckpt, overlay=True)
        sidecar = json.loads((tmp_path / "out" / "slice_pred.json").read_text())
        assert sidecar["use_sge"] is True
        assert sidecar["checkpoint_sha256"] == hashlib.sha256(ckpt.read_bytes()).hexdigest()
        assert (tmp_path / "out" / "slice_overlay.png").exists()
