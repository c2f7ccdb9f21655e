from .augment import augment_batch, augment_sample
from .config import ABLATIONS, MODES, AugmentParams, TrainConfig
from .history import TrainHistory
from .linear_probe import train_linear_probe
from .loops import (
    collate_images,
    collate_masks,
    gan_pretrain_iteration,
    reconstruct_dataset,
    run_trainer,
    sel_iteration,
    ssl_iteration,
    supervised_iteration,
    train_gan_aug_baseline,
    train_grn_sel,
    train_grn_ssl,
    train_supervised_baseline,
    validate,
)

__all__ = [
    "ABLATIONS",
    "MODES",
    "AugmentParams",
    "TrainConfig",
    "TrainHistory",
    "augment_batch",
    "augment_sample",
    "collate_images",
    "collate_masks",
    "gan_pretrain_iteration",
    "reconstruct_dataset",
    "run_trainer",
    "sel_iteration",
    "ssl_iteration",
    "supervised_iteration",
    "train_gan_aug_baseline",
    "train_grn_sel",
    "train_grn_ssl",
    "train_linear_probe",
    "train_supervised_baseline",
    "validate",
]
