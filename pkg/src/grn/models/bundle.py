"""ModelBundle: the three networks plus optimizers, and checkpoint save/load.

The checkpoint is a torch archive whose config block is a plain JSON string, so
the settings can be inspected without reconstructing any network. generator_config
of None denotes the parameterless identity generator (used by segmentor-only
baselines); parameterless networks get no optimizer slot.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from ..errors import ConfigError, GrnError
from .discriminator import DiscriminatorConfig, PatchDiscriminator
from .generator import GeneratorConfig, IdentityGenerator, ResidualGenerator
from .segmentor import SegmentorConfig, UNetSegmentor

log = logging.getLogger(__name__)

CHECKPOINT_SCHEMA_VERSION = 1


@dataclass
class ModelBundle:
    generator: torch.nn.Module
    segmentor: torch.nn.Module
    discriminator: torch.nn.Module
    segmentor_config: SegmentorConfig
    generator_config: GeneratorConfig  # None for the identity generator
    discriminator_config: DiscriminatorConfig
    optimizers: dict = field(default_factory=dict)
    device: str = "cpu"

    def networks(self):
        return {
            "generator": self.generator,
            "segmentor": self.segmentor,
            "discriminator": self.discriminator,
        }

    def parameter_counts(self):
        return {
            name: sum(p.numel() for p in net.parameters())
            for name, net in self.networks().items()
        }

    def train_mode(self):
        for net in self.networks().values():
            net.train()

    def eval_mode(self):
        for net in self.networks().values():
            net.eval()

    def assert_finite(self):
        for name, net in self.networks().items():
            for p in net.parameters():
                if not torch.isfinite(p).all():
                    raise GrnError(f"non-finite parameters in {name}")


def build_bundle(segmentor_config=None, generator_config="default", discriminator_config=None,
                 learning_rate=2e-4, adam_betas=(0.5, 0.999), seed=0, device="cpu"):
    """Construct the three networks with seeded initialization and Adam optimizers.

    generator_config=None selects the parameterless identity generator.
    """
    seg_cfg = segmentor_config or SegmentorConfig()
    gen_cfg = GeneratorConfig() if generator_config == "default" else generator_config
    disc_cfg = discriminator_config or DiscriminatorConfig()

    torch.manual_seed(seed)
    segmentor = UNetSegmentor(seg_cfg).to(device)
    generator = (ResidualGenerator(gen_cfg) if gen_cfg is not None else IdentityGenerator()).to(device)
    discriminator = PatchDiscriminator(disc_cfg).to(device)

    bundle = ModelBundle(
        generator=generator,
        segmentor=segmentor,
        discriminator=discriminator,
        segmentor_config=seg_cfg,
        generator_config=gen_cfg,
        discriminator_config=disc_cfg,
        device=device,
    )
    bundle.optimizers = {
        name: torch.optim.Adam(net.parameters(), lr=learning_rate, betas=tuple(adam_betas))
        for name, net in bundle.networks().items()
        if any(True for _ in net.parameters())
    }
    log.info("built model bundle, parameter counts: %s", bundle.parameter_counts())
    return bundle


def save_checkpoint(bundle, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    configs = {
        "segmentor": asdict(bundle.segmentor_config),
        "generator": asdict(bundle.generator_config) if bundle.generator_config else None,
        "discriminator": asdict(bundle.discriminator_config),
    }
    # torch's global RNG is the only stateful generator in play; trainers derive
    # every numpy draw statelessly from (seed, epoch, iteration)
    payload = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "config_json": json.dumps(configs, sort_keys=True),
        "model_state": {k: v.state_dict() for k, v in bundle.networks().items()},
        "optimizer_state": {k: opt.state_dict() for k, opt in bundle.optimizers.items()},
        "rng_state": {"torch": torch.get_rng_state()},
    }
    torch.save(payload, path)
    return path


def load_checkpoint(path, device="cpu", learning_rate=2e-4, adam_betas=(0.5, 0.999),
                    expect_class_count=None):
    """Rebuild a bundle from a checkpoint. Configs come from the embedded JSON block;
    expect_class_count guards against loading into a run with a different label space."""
    path = Path(path)
    if not path.exists():
        raise GrnError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location=device, weights_only=False)
    version = payload.get("schema_version")
    if version != CHECKPOINT_SCHEMA_VERSION:
        raise ConfigError(f"unsupported checkpoint schema version {version}")
    configs = json.loads(payload["config_json"])
    seg_cfg = SegmentorConfig(**configs["segmentor"])
    if expect_class_count is not None and seg_cfg.class_count != expect_class_count:
        raise ConfigError(
            f"checkpoint was trained with class_count {seg_cfg.class_count}, "
            f"but this run requires {expect_class_count}"
        )
    gen_cfg = GeneratorConfig(**configs["generator"]) if configs["generator"] else None
    disc_cfg = DiscriminatorConfig(**configs["discriminator"])

    bundle = build_bundle(seg_cfg, gen_cfg, disc_cfg, learning_rate=learning_rate,
                          adam_betas=adam_betas, device=device)
    for name, net in bundle.networks().items():
        net.load_state_dict(payload["model_state"][name])
    for name, opt in bundle.optimizers.items():
        if name in payload["optimizer_state"]:
            opt.load_state_dict(payload["optimizer_state"][name])
    rng = payload.get("rng_state", {})
    if "torch" in rng:
        torch.set_rng_state(rng["torch"])
    return bundle
