"""Coupled generator-segmentor-discriminator training for layered-tissue
segmentation, with semi-supervised consistency training, enhancement-first
inference, synthetic phantom data, metrics, and an experiment harness."""

from . import data, evaluation, harness, models, trainer
from .errors import ConfigError, DataError, GrnError, TrainingDivergedError
from .inference import export_overlay, predict, predict_logits, predict_stack, save_prediction
from .losses import (
    DICE_SMOOTH,
    LossWeights,
    MixCoefficientSampler,
    adversarial_mse,
    dice_loss,
    discriminator_loss,
    generator_loss_sel,
    generator_loss_ssl_sup,
    generator_loss_ssl_unsup,
    ict_loss,
    l1_recon,
    mix,
    per_image_dice_loss,
    segmentor_loss_paired,
    segmentor_loss_ssl_unsup,
)

__version__ = "0.1.0"
