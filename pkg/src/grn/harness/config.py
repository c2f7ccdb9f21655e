"""Experiment configuration: JSON schema, validation, and resolution.

The config file is strict JSON with a fixed key set at every level; unknown
keys are errors so a typo in a weight name cannot silently corrupt a run.
Relative dataset paths are resolved against the GRN_DATA_ROOT environment
variable when they do not exist relative to the working directory.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..data.phantom import PhantomConfig
from ..errors import ConfigError
from ..losses import LossWeights
from ..models import DiscriminatorConfig, GeneratorConfig, SegmentorConfig
from ..trainer import AugmentParams, TrainConfig

DATA_ROOT_VAR = "GRN_DATA_ROOT"

DEFAULT_LABEL_FRACTIONS = (0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 1.00)

_TOP_KEYS = {
    "dataset", "phantom", "mode", "methods", "ablation", "label_fractions",
    "seeds", "eval_sge", "split", "train", "out_dir",
}
_PHANTOM_KEYS = {
    "scans", "slices_per_scan", "height", "width", "layer_count",
    "thickness_fractions", "waviness", "layer_intensities",
    "speckle_strength", "additive_sigma", "seed", "dir",
}
_SPLIT_KEYS = {"train", "validation", "test", "seed", "override"}
_TRAIN_KEYS = {
    "batch_size", "max_epochs", "patience", "learning_rate", "adam_betas",
    "weights", "sge_for_selection", "device", "eval_batch_size",
    "gan_pretrain_epochs", "mix_distribution", "mix_alpha", "mix_per_sample",
    "augment", "segmentor", "generator", "discriminator",
}
_WEIGHT_KEYS = {"lambda_adv", "lambda_seg", "lambda_l1", "lambda_cus"}
_AUGMENT_KEYS = {"flip_prob", "rotation_deg", "intensity_scale"}
_SEGMENTOR_KEYS = {"in_channels", "class_count", "encoder_channels"}
_GENERATOR_KEYS = {
    "base_channels", "downsample_stages", "residual_blocks_per_stage",
    "skip_connections",
}
_DISCRIMINATOR_KEYS = {"layer_channels"}


def _check_keys(raw, allowed, where):
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}"
        )


def resolve_dataset_path(path):
    """Resolve a dataset path, falling back to $GRN_DATA_ROOT for relative
    paths that do not exist from the working directory."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    root = os.environ.get(DATA_ROOT_VAR)
    if root:
        candidate = Path(root) / p
        if candidate.exists():
            return candidate
    return p


@dataclass
class SplitSpec:
    train: float = 0.6
    validation: float = 0.2
    test: float = 0.2
    seed: int = 0
    override: str = None

    def fractions(self):
        return (self.train, self.validation, self.test)


@dataclass
class PhantomSpec:
    scans: int = 4
    slices_per_scan: int = 50
    dir: str = None
    config: PhantomConfig = field(default_factory=PhantomConfig)


@dataclass
class ExperimentConfig:
    dataset: str = None
    phantom: PhantomSpec = None
    mode: str = "grn_sel"
    methods: tuple = None            # sweep only; defaults to (mode,)
    ablation: str = "none"
    label_fractions: tuple = DEFAULT_LABEL_FRACTIONS
    seeds: tuple = (0,)
    eval_sge: bool = False
    split: SplitSpec = field(default_factory=SplitSpec)
    train: dict = field(default_factory=dict)
    out_dir: str = "runs"

    def __post_init__(self):
        if self.dataset is None and self.phantom is None:
            raise ConfigError("config needs either 'dataset' or 'phantom'")
        if self.dataset is not None and self.phantom is not None:
            raise ConfigError("'dataset' and 'phantom' are mutually exclusive")
        self.label_fractions = tuple(float(f) for f in self.label_fractions)
        if not self.label_fractions:
            raise ConfigError("label_fractions must not be empty")
        if any(not 0 < f <= 1 for f in self.label_fractions):
            raise ConfigError(
                f"label fractions must lie in (0, 1], got {self.label_fractions}"
            )
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if self.methods is None:
            self.methods = (self.mode,)
        self.methods = tuple(self.methods)


def _parse_phantom(raw):
    _check_keys(raw, _PHANTOM_KEYS, "'phantom'")
    cfg_keys = {
        k: v for k, v in raw.items() if k not in ("scans", "slices_per_scan", "dir")
    }
    if cfg_keys.get("thickness_fractions") is not None:
        cfg_keys["thickness_fractions"] = tuple(cfg_keys["thickness_fractions"])
    if cfg_keys.get("layer_intensities") is not None:
        cfg_keys["layer_intensities"] = tuple(cfg_keys["layer_intensities"])
    cfg_keys = {k: v for k, v in cfg_keys.items() if v is not None}
    return PhantomSpec(
        scans=int(raw.get("scans", 4)),
        slices_per_scan=int(raw.get("slices_per_scan", 50)),
        dir=raw.get("dir"),
        config=PhantomConfig(**cfg_keys),
    )


def _parse_split(raw):
    _check_keys(raw, _SPLIT_KEYS, "'split'")
    return SplitSpec(**raw)


def _parse_train(raw):
    _check_keys(raw, _TRAIN_KEYS, "'train'")
    for sub, keys in (
        ("weights", _WEIGHT_KEYS),
        ("augment", _AUGMENT_KEYS),
        ("segmentor", _SEGMENTOR_KEYS),
        ("generator", _GENERATOR_KEYS),
        ("discriminator", _DISCRIMINATOR_KEYS),
    ):
        if sub in raw:
            _check_keys(raw[sub], keys, f"'train.{sub}'")
    return dict(raw)


def parse_experiment_config(raw, overrides=None):
    """Validate a raw config dict (plus CLI overrides) into ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("experiment config must be a JSON object")
    raw = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    _check_keys(raw, _TOP_KEYS, "the experiment config")
    kwargs = dict(raw)
    if kwargs.get("phantom") is not None:
        kwargs["phantom"] = _parse_phantom(kwargs["phantom"])
    if "split" in kwargs:
        kwargs["split"] = _parse_split(kwargs["split"])
    if "train" in kwargs:
        kwargs["train"] = _parse_train(kwargs["train"])
    return ExperimentConfig(**kwargs)


def load_experiment_config(path, overrides=None):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return parse_experiment_config(raw, overrides)


def build_train_config(experiment, mode, ablation, seed):
    """Materialize a TrainConfig for one run cell from the experiment's
    'train' section plus the cell's mode/ablation/seed."""
    raw = dict(experiment.train)
    weights = LossWeights(**raw.pop("weights", {}))
    augment = AugmentParams(**raw.pop("augment", {}))
    seg_raw = dict(raw.pop("segmentor", {}))
    if "encoder_channels" in seg_raw:
        seg_raw["encoder_channels"] = tuple(seg_raw["encoder_channels"])
    gen_raw = dict(raw.pop("generator", {}))
    disc_raw = dict(raw.pop("discriminator", {}))
    if "layer_channels" in disc_raw:
        disc_raw["layer_channels"] = tuple(disc_raw["layer_channels"])
    return TrainConfig(
        mode=mode,
        ablation=ablation,
        seed=seed,
        weights=weights,
        augment=augment,
        segmentor=SegmentorConfig(**seg_raw),
        generator=GeneratorConfig(**gen_raw),
        discriminator=DiscriminatorConfig(**disc_raw),
        **raw,
    )


def resolved_experiment_dict(experiment):
    """Fully materialized config (every default spelled out) for hashing and
    for the resolved_config.json snapshot."""
    out = {
        "dataset": experiment.dataset,
        "phantom": None,
        "mode": experiment.mode,
        "methods": list(experiment.methods),
        "ablation": experiment.ablation,
        "label_fractions": list(experiment.label_fractions),
        "seeds": list(experiment.seeds),
        "eval_sge": experiment.eval_sge,
        "split": asdict(experiment.split),
        "out_dir": str(experiment.out_dir),
    }
    if experiment.phantom is not None:
        out["phantom"] = {
            "scans": experiment.phantom.scans,
            "slices_per_scan": experiment.phantom.slices_per_scan,
            "dir": experiment.phantom.dir,
            **asdict(experiment.phantom.config),
        }
    sample = build_train_config(experiment, "supervised", "none", 0)
    train = asdict(sample)
    for cell_key in ("mode", "ablation", "seed"):
        train.pop(cell_key)
    out["train"] = train
    return out


def resolved_train_dict(train_config):
    return asdict(train_config)
