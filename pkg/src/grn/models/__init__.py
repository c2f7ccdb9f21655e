from .bundle import (
    CHECKPOINT_SCHEMA_VERSION,
    ModelBundle,
    build_bundle,
    load_checkpoint,
    save_checkpoint,
)
from .discriminator import DiscriminatorConfig, PatchDiscriminator, discriminator_forward
from .generator import (
    GeneratorConfig,
    IdentityGenerator,
    ResidualGenerator,
    generator_forward,
)
from .segmentor import SegmentorConfig, UNetSegmentor, segmentor_forward

__all__ = [
    "CHECKPOINT_SCHEMA_VERSION",
    "DiscriminatorConfig",
    "GeneratorConfig",
    "IdentityGenerator",
    "ModelBundle",
    "PatchDiscriminator",
    "ResidualGenerator",
    "SegmentorConfig",
    "UNetSegmentor",
    "build_bundle",
    "discriminator_forward",
    "generator_forward",
    "load_checkpoint",
    "save_checkpoint",
    "segmentor_forward",
]
