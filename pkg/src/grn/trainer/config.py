"""Training configuration."""

from dataclasses import dataclass, field

from ..errors import ConfigError
from ..losses import LossWeights
from ..models import DiscriminatorConfig, GeneratorConfig, SegmentorConfig

MODES = ("grn_sel", "grn_ssl", "supervised", "supervised_img_aug", "gan_aug_baseline")
ABLATIONS = ("none", "no_seg_feedback", "negated_seg_feedback", "freeze_segmentor_for_LG")


@dataclass
class AugmentParams:
    """Settings for the image-augmentation baseline."""

    flip_prob: float = 0.5
    rotation_deg: float = 10.0
    intensity_scale: float = 0.10

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if self.rotation_deg < 0 or self.intensity_scale < 0:
            raise ConfigError("rotation_deg and intensity_scale must be >= 0")


@dataclass
class TrainConfig:
    mode: str = "grn_sel"
    ablation: str = "none"
    batch_size: int = 8
    max_epochs: int = 50
    patience: int = 5          # 0 disables early stopping
    learning_rate: float = 2e-4
    adam_betas: tuple = (0.5, 0.999)
    weights: LossWeights = field(default_factory=LossWeights)
    sge_for_selection: bool = False
    seed: int = 0
    device: str = "cpu"
    eval_batch_size: int = 8
    gan_pretrain_epochs: int = None  # gan_aug_baseline stage 1; None = max_epochs
    mix_distribution: str = "uniform"
    mix_alpha: float = 0.75
    mix_per_sample: bool = False
    augment: AugmentParams = field(default_factory=AugmentParams)
    segmentor: SegmentorConfig = field(default_factory=SegmentorConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose one of {MODES}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"unknown ablation {self.ablation!r}; choose one of {ABLATIONS}")
        if self.ablation != "none" and self.mode != "grn_sel":
            raise ConfigError(
                f"ablation {self.ablation!r} is only valid with mode grn_sel, not {self.mode!r}"
            )
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.patience < 0 or self.patience > self.max_epochs:
            raise ConfigError(
                f"patience must lie in [0, max_epochs], got patience={self.patience} "
                f"max_epochs={self.max_epochs}"
            )
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.gan_pretrain_epochs is not None and self.gan_pretrain_epochs < 0:
            raise ConfigError("gan_pretrain_epochs must be >= 0 (or None for max_epochs)")
        self.adam_betas = tuple(float(b) for b in self.adam_betas)
