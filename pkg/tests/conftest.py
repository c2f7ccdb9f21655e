"""Shared fixtures: a small phantom dataset and slim model configurations."""

import numpy as np
import pytest
import torch

from grn.data.phantom import PhantomConfig, generate_phantom
from grn.data.samples import LabeledSample, SampleMeta
from grn.models import DiscriminatorConfig, GeneratorConfig, SegmentorConfig
from grn.trainer import TrainConfig

torch.set_num_threads(1)

# filled by test_acceptance.py; printed after the run so the verdict lines
# survive output capture
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance report")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.line(line)


def slim_model_kwargs(class_count=4):
    return {
        "segmentor": SegmentorConfig(class_count=class_count, encoder_channels=(8, 16, 32)),
        "generator": GeneratorConfig(base_channels=8, downsample_stages=2,
                                     residual_blocks_per_stage=1),
        "discriminator": DiscriminatorConfig(layer_channels=(8, 16)),
    }


def slim_bundle_kwargs(class_count=4):
    models = slim_model_kwargs(class_count)
    return {
        "segmentor_config": models["segmentor"],
        "generator_config": models["generator"],
        "discriminator_config": models["discriminator"],
    }


def slim_train_config(**overrides):
    kwargs = {
        "mode": "grn_sel",
        "batch_size": 2,
        "max_epochs": 1,
        "patience": 0,
        **slim_model_kwargs(),
    }
    kwargs.update(overrides)
    return TrainConfig(**kwargs)


class OracleSegmentor(torch.nn.Module):
    """Reads the class id back out of toy images (mask rescaled to [-1, 1])
    and emits saturated logits for it. Pairs with toy_labeled_samples."""

    def __init__(self, class_count, margin=60.0):
        super().__init__()
        self.class_count = class_count
        self.margin = margin

    def forward(self, x):
        mask = torch.round((x[:, 0] + 1.0) * (self.class_count - 1) / 2.0).long()
        onehot = torch.nn.functional.one_hot(
            mask.clamp(0, self.class_count - 1), self.class_count
        )
        return onehot.permute(0, 3, 1, 2).float() * self.margin


def oracle_bundle(class_count=4):
    """Identity generator + oracle segmentor: perfect on toy samples."""
    from grn.models import build_bundle

    kwargs = slim_bundle_kwargs(class_count)
    bundle = build_bundle(
        segmentor_config=kwargs["segmentor_config"],
        generator_config=None,
        discriminator_config=kwargs["discriminator_config"],
        seed=0,
    )
    bundle.segmentor = OracleSegmentor(class_count)
    return bundle


def toy_labeled_samples(n=6, size=32, classes=2, seed=0):
    """Synthetic samples whose mask is recoverable from the image: the image is
    the mask rescaled to [-1, 1], plus nothing. Lets stub segmentors predict
    ground truth exactly."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        mask = rng.integers(0, classes, size=(size, size)).astype(np.int64)
        image = (2.0 * mask / (classes - 1) - 1.0).astype(np.float32)
        meta = SampleMeta(patient_id=f"p{i:02d}", scan_id=f"s{i:02d}", slice_index=0)
        out.append(LabeledSample(meta=meta, image=image, mask=mask))
    return out


@pytest.fixture(scope="session")
def tiny_phantom_dir(tmp_path_factory):
    """6 scans x 4 slices, 32x32, 3 tissue layers (4 classes)."""
    out = tmp_path_factory.mktemp("phantom") / "data"
    config = PhantomConfig(height=32, width=32, layer_count=3, waviness=1.0, seed=11)
    generate_phantom(config, n_scans=6, slices_per_scan=4, out_dir=out)
    return out


@pytest.fixture(scope="session")
def tiny_manifest(tiny_phantom_dir):
    from grn.data.manifest import load_manifest

    return load_manifest(tiny_phantom_dir)


@pytest.fixture(scope="session")
def tiny_samples(tiny_manifest):
    from grn.data.manifest import load_samples

    return load_samples(tiny_manifest)
