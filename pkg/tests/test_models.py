"""Model architectures, bundle construction, and checkpointing."""

import pytest
import torch

from conftest import slim_bundle_kwargs, slim_train_config, toy_labeled_samples
from grn.errors import ConfigError, GrnError
from grn.models import (
    DiscriminatorConfig,
    GeneratorConfig,
    IdentityGenerator,
    PatchDiscriminator,
    ResidualGenerator,
    SegmentorConfig,
    UNetSegmentor,
    build_bundle,
    load_checkpoint,
    save_checkpoint,
)
from grn.trainer.loops import sel_iteration


class TestSegmentor:
    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SegmentorConfig(class_count=1, encoder_channels=(8, 16))
        with pytest.raises(ConfigError):
            SegmentorConfig(class_count=4, encoder_channels=(16, 16))
        with pytest.raises(ConfigError):
            SegmentorConfig(class_count=4, encoder_channels=(32, 16))

    def test_output_shape(self):
        net = UNetSegmentor(SegmentorConfig(class_count=4, encoder_channels=(8, 16, 32)))
        out = net(torch.zeros(2, 1, 32, 32))
        assert out.shape == (2, 4, 32, 32)
        assert torch.isfinite(out).all()

    def test_indivisible_input_rejected(self):
        net = UNetSegmentor(SegmentorConfig(class_count=4, encoder_channels=(8, 16, 32)))
        with pytest.raises(ConfigError):
            net(torch.zeros(1, 1, 30, 30))

    def test_batch_rows_are_independent(self):
        net = UNetSegmentor(SegmentorConfig(class_count=2, encoder_channels=(8, 16)))
        net.eval()
        image = torch.randn(1, 1, 16, 16)
        stacked = net(torch.cat([image, image, image]))
        assert stacked.shape[0] == 3
        assert torch.equal(stacked[0], stacked[1])


class TestGenerator:
    def test_config_validation(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(base_channels=0)
        with pytest.raises(ConfigError):
            GeneratorConfig(downsample_stages=-1)
        with pytest.raises(ConfigError):
            GeneratorConfig(residual_blocks_per_stage=-1)
        GeneratorConfig(residual_blocks_per_stage=0)  # zero blocks is a plain encoder-decoder

    def test_zeros_give_finite_bounded_output(self):
        net = ResidualGenerator(GeneratorConfig(base_channels=8, downsample_stages=2,
                                                residual_blocks_per_stage=1))
        out = net(torch.zeros(1, 1, 32, 32))
        assert out.shape == (1, 1, 32, 32)
        assert torch.isfinite(out).all()
        assert out.min() >= -1.0 and out.max() <= 1.0

    def test_indivisible_input_rejected(self):
        net = ResidualGenerator(GeneratorConfig(base_channels=8, downsample_stages=2,
                                                residual_blocks_per_stage=1))
        with pytest.raises(ConfigError):
            net(torch.zeros(1, 1, 30, 30))

    def test_identity_generator_is_exact(self):
        x = torch.randn(3, 1, 20, 20)
        assert torch.equal(IdentityGenerator()(x), x)

    def test_batch_rows_are_independent(self):
        net = ResidualGenerator(GeneratorConfig(base_channels=8, downsample_stages=1,
                                                residual_blocks_per_stage=1))
        net.eval()
        image = torch.randn(1, 1, 16, 16)
        stacked = net(torch.cat([image, image]))
        assert stacked.shape[0] == 2
        assert torch.equal(stacked[0], stacked[1])


class TestDiscriminator:
    def test_config_validation(self):
        with pytest.raises(ConfigError):
            DiscriminatorConfig(layer_channels=(64,))

    def test_default_geometry(self):
        config = DiscriminatorConfig()
        assert config.min_input_size() == 24
        assert config.output_size(256) == 30
        net = PatchDiscriminator(config)
        out = net(torch.zeros(1, 1, 256, 256))
        assert out.shape == (1, 1, 30, 30)

    def test_minimum_input_size_is_tight(self):
        config = DiscriminatorConfig()
        net = PatchDiscriminator(config)
        smallest = net(torch.zeros(1, 1, 24, 24))
        assert smallest.shape[-1] == config.output_size(24)
        with pytest.raises(ConfigError):
            net(torch.zeros(1, 1, 23, 23))

    def test_small_config_forward(self):
        config = DiscriminatorConfig(layer_channels=(8, 16))
        net = PatchDiscriminator(config)
        size = config.min_input_size()
        out = net(torch.zeros(3, 1, size, size))
        assert out.shape[0] == 3
        assert out.shape[-1] == config.output_size(size)

    def test_input_validation(self):
        net = PatchDiscriminator(DiscriminatorConfig(layer_channels=(8, 16)))
        with pytest.raises(ConfigError):
            net(torch.zeros(1, 3, 64, 64))
        with pytest.raises(ConfigError):
            net(torch.zeros(64, 64))


class TestBundle:
    def test_seeded_construction_is_reproducible(self):
        a = build_bundle(seed=7, **slim_bundle_kwargs())
        b = build_bundle(seed=7, **slim_bundle_kwargs())
        for name in a.networks():
            for pa, pb in zip(a.networks()[name].parameters(),
                              b.networks()[name].parameters()):
                assert torch.equal(pa, pb)
        c = build_bundle(seed=8, **slim_bundle_kwargs())
        assert not all(
            torch.equal(pa, pc)
            for pa, pc in zip(a.segmentor.parameters(), c.segmentor.parameters())
        )

    def test_networks_and_optimizers(self):
        bundle = build_bundle(seed=0, **slim_bundle_kwargs())
        assert set(bundle.networks()) == {"generator", "segmentor", "discriminator"}
        assert set(bundle.optimizers) == {"generator", "segmentor", "discriminator"}
        counts = bundle.parameter_counts()
        assert all(v > 0 for v in counts.values())
        bundle.assert_finite()
        bundle.eval_mode()
        assert not bundle.segmentor.training
        bundle.train_mode()
        assert bundle.segmentor.training

    def test_identity_generator_bundle(self):
        kwargs = slim_bundle_kwargs()
        bundle = build_bundle(segmentor_config=kwargs["segmentor_config"],
                              generator_config=None,
                              discriminator_config=kwargs["discriminator_config"], seed=0)
        assert isinstance(bundle.generator, IdentityGenerator)
        assert "generator" not in bundle.optimizers
        x = torch.randn(2, 1, 16, 16)
        assert torch.equal(bundle.generator(x), x)


class TestCheckpoint:
    def test_round_trip_is_bitwise(self, tmp_path):
        bundle = build_bundle(seed=3, **slim_bundle_kwargs())
        path = save_checkpoint(bundle, tmp_path / "ckpt.pt")
        again = load_checkpoint(path)
        for name, net in bundle.networks().items():
            restored = again.networks()[name].state_dict()
            for key, value in net.state_dict().items():
                assert torch.equal(restored[key], value)

    def test_missing_and_bad_schema(self, tmp_path):
        with pytest.raises(GrnError):
            load_checkpoint(tmp_path / "absent.pt")
        torch.save({"schema_version": 99}, tmp_path / "bad.pt")
        with pytest.raises(ConfigError, match="schema"):
            load_checkpoint(tmp_path / "bad.pt")

    def test_class_count_guard(self, tmp_path):
        bundle = build_bundle(
            segmentor_config=SegmentorConfig(class_count=5, encoder_channels=(8, 16)),
            generator_config=GeneratorConfig(base_channels=8, downsample_stages=1,
                                             residual_blocks_per_stage=1),
            discriminator_config=DiscriminatorConfig(layer_channels=(8, 16)),
            seed=0,
        )
        path = save_checkpoint(bundle, tmp_path / "five.pt")
        with pytest.raises(ConfigError, match="class_count 5"):
            load_checkpoint(path, expect_class_count=7)
        restored = load_checkpoint(path, expect_class_count=5)
        assert restored.segmentor_config.class_count == 5

    def test_mid_training_resume_matches(self, tmp_path):
        config = slim_train_config()
        samples = toy_labeled_samples(n=4, classes=4)
        bundle = build_bundle(seed=1, **slim_bundle_kwargs())
        for _ in range(3):
            sel_iteration(bundle, config, samples[:2])
        path = save_checkpoint(bundle, tmp_path / "mid.pt")

        continued = sel_iteration(bundle, config, samples[2:])
        resumed_bundle = load_checkpoint(path, learning_rate=config.learning_rate,
                                         adam_betas=config.adam_betas)
        resumed = sel_iteration(resumed_bundle, config, samples[2:])
        for key in continued:
            assert abs(continued[key] - resumed[key]) < 1e-5
